// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sentinel/profiles.hpp"

using namespace sentinel;

TEST_CASE("artificial profile: one sample per minute over 24 h") {
  const auto prof = profiles::gen_artificial({profiles::constant_segment(720, 20.0),
                                              {120.0, 0.0, 100.0},
                                              profiles::constant_segment(600, 5.0)});
  REQUIRE(prof.samples.size() == 1440);
  CHECK(prof.resolution.kind == profiles::ResolutionKind::PerMinute);
  CHECK(prof.duration_s == doctest::Approx(86400.0));
  for (std::size_t i = 0; i < prof.samples.size(); ++i)
    CHECK(prof.samples[i].time_s == doctest::Approx(60.0 * i));
  // Constant part.
  CHECK(prof.samples[0].conc_ppb == 20.0);
  CHECK(prof.samples[719].conc_ppb == 20.0);
  // Ramp endpoints: first sample at the start level, last at the end level.
  CHECK(prof.samples[720].conc_ppb == doctest::Approx(0.0));
  CHECK(prof.samples[839].conc_ppb == doctest::Approx(100.0));
  // Ramp midpoint is halfway.
  CHECK(prof.samples[720 + 60].conc_ppb ==
        doctest::Approx(100.0 * 60.0 / 119.0).epsilon(1e-12));
  CHECK(prof.samples[840].conc_ppb == 5.0);
  profiles::validate(prof);
}

TEST_CASE("artificial profile rejects bad segment lists") {
  CHECK_THROWS_AS(profiles::gen_artificial({profiles::constant_segment(100, 1.0)}),
                  std::invalid_argument);  // does not sum to 1440
  CHECK_THROWS_AS(profiles::gen_artificial({profiles::constant_segment(720.5, 1.0),
                                            profiles::constant_segment(719.5, 1.0)}),
                  std::invalid_argument);  // not whole minutes
  CHECK_THROWS_AS(profiles::gen_artificial({{1440.0, -1.0, 5.0}}), std::invalid_argument);
  CHECK_THROWS_AS(profiles::gen_artificial({}), std::invalid_argument);
}

TEST_CASE("artificial profile jitter is seeded and clamped at zero") {
  const std::vector<profiles::Segment> segs = {profiles::constant_segment(1440, 0.5)};
  const auto a = profiles::gen_artificial(segs, 7, 2.0);
  const auto b = profiles::gen_artificial(segs, 7, 2.0);
  const auto c = profiles::gen_artificial(segs, 8, 2.0);
  REQUIRE(a.samples.size() == b.samples.size());
  bool all_equal_ab = true, any_diff_ac = false, any_jitter = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    all_equal_ab &= (a.samples[i].conc_ppb == b.samples[i].conc_ppb);
    any_diff_ac |= (a.samples[i].conc_ppb != c.samples[i].conc_ppb);
    any_jitter |= (a.samples[i].conc_ppb != 0.5);
    CHECK(a.samples[i].conc_ppb >= 0.0);  // clamp: sigma 2.0 around level 0.5
  }
  CHECK(all_equal_ab);
  CHECK(any_diff_ac);
  CHECK(any_jitter);
}

TEST_CASE("realistic profile: hourly Gaussian bump") {
  const auto prof = profiles::gen_realistic(14, 10.0, 60.0, 3.0);
  REQUIRE(prof.samples.size() == 24);
  CHECK(prof.resolution.kind == profiles::ResolutionKind::PerHour);
  CHECK(prof.samples[14].conc_ppb == doctest::Approx(60.0));
  CHECK(prof.samples[0].conc_ppb ==
        doctest::Approx(10.0 + 50.0 * std::exp(-0.5 * (14.0 / 3.0) * (14.0 / 3.0))));
  // Symmetric around the peak.
  CHECK(prof.samples[11].conc_ppb == doctest::Approx(prof.samples[17].conc_ppb));
  CHECK_THROWS_AS(profiles::gen_realistic(14, 60.0, 10.0, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(profiles::gen_realistic(14, 10.0, 60.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(profiles::gen_realistic(24, 10.0, 60.0, 3.0), std::invalid_argument);
}

TEST_CASE("profile CSV round trip preserves samples exactly") {
  testutil::TempDir tmp("profiles");
  const auto prof = profiles::gen_artificial(
      {profiles::constant_segment(720, 20.0), {720.0, 0.0, 100.0}}, 3, 0.25);
  const std::string path = tmp.file("prof.csv");
  profiles::export_csv(prof, path);
  const auto back = profiles::import_csv(path);
  REQUIRE(back.samples.size() == prof.samples.size());
  for (std::size_t i = 0; i < prof.samples.size(); ++i) {
    CHECK(back.samples[i].time_s == prof.samples[i].time_s);
    CHECK(back.samples[i].conc_ppb == prof.samples[i].conc_ppb);
  }
  CHECK(back.resolution.kind == profiles::ResolutionKind::PerMinute);
  CHECK(back.label == "prof");
}

TEST_CASE("profile CSV import rejects malformed input") {
  testutil::TempDir tmp("profiles-bad");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(tmp.file(name));
    out << text;
    return tmp.file(name);
  };
  CHECK_THROWS_AS(profiles::import_csv(tmp.file("missing.csv")), std::runtime_error);
  CHECK_THROWS_AS(profiles::import_csv(write("h.csv", "t,c\n0,1\n")), std::runtime_error);
  CHECK_THROWS_AS(profiles::import_csv(write("f.csv", "time_s,conc_ppb\n0\n")),
                  std::runtime_error);
  CHECK_THROWS_AS(profiles::import_csv(write("neg.csv", "time_s,conc_ppb\n0,-1\n60,1\n")),
                  std::runtime_error);
  CHECK_THROWS_AS(
      profiles::import_csv(write("order.csv", "time_s,conc_ppb\n0,1\n120,1\n60,1\n")),
      std::runtime_error);
  CHECK_THROWS_AS(profiles::import_csv(write("num.csv", "time_s,conc_ppb\n0,abc\n")),
                  std::runtime_error);
}

TEST_CASE("densify: hold keeps step edges, linear interpolates") {
  const auto prof = profiles::gen_artificial(
      {profiles::constant_segment(720, 10.0), profiles::constant_segment(720, 50.0)});
  // 1 Hz: 60 ticks per minute sample.
  const auto hold = profiles::densify(prof, 1.0, profiles::DensifyMode::Hold);
  REQUIRE(hold.values.size() == 86400);
  CHECK(hold.values[0] == 10.0);
  CHECK(hold.values[720 * 60 - 1] == 10.0);  // held until the step
  CHECK(hold.values[720 * 60] == 50.0);
  CHECK(hold.values.back() == 50.0);

  const auto lin = profiles::densify(prof, 1.0, profiles::DensifyMode::Linear);
  REQUIRE(lin.values.size() == 86400);
  // Halfway between the last 10-sample and the first 50-sample.
  CHECK(lin.values[719 * 60 + 30] == doctest::Approx(30.0));
  CHECK(lin.values.back() == 50.0);  // last sample held

  // Auto = Hold for per-minute profiles.
  const auto autod = profiles::densify(prof, 1.0);
  CHECK(autod.values[719 * 60 + 30] == 10.0);

  // Auto = Linear for per-hour profiles.
  const auto real = profiles::gen_realistic(12, 5.0, 25.0, 2.0);
  const auto reald = profiles::densify(real, 1.0);
  REQUIRE(reald.values.size() == 86400);
  const double mid = 0.5 * (real.samples[3].conc_ppb + real.samples[4].conc_ppb);
  CHECK(reald.values[3 * 3600 + 1800] == doctest::Approx(mid));

  // Sample spacing times rate must give whole ticks.
  CHECK_THROWS_AS(profiles::densify(prof, 1.0 / 7.0), std::invalid_argument);
}

TEST_CASE("segment spec parsing") {
  const auto segs = profiles::parse_segment_spec("720:20,120:0-100,600:5");
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].duration_min == 720.0);
  CHECK(segs[0].start_ppb == 20.0);
  CHECK(segs[0].end_ppb == 20.0);
  CHECK(segs[1].start_ppb == 0.0);
  CHECK(segs[1].end_ppb == 100.0);
  CHECK_THROWS_AS(profiles::parse_segment_spec(""), std::invalid_argument);
  CHECK_THROWS_AS(profiles::parse_segment_spec("720"), std::invalid_argument);
  CHECK_THROWS_AS(profiles::parse_segment_spec("x:20"), std::invalid_argument);
}

TEST_CASE("validate rejects non-uniform or negative profiles") {
  auto prof = profiles::gen_artificial({profiles::constant_segment(1440, 5.0)});
  profiles::validate(prof);
  auto bad = prof;
  bad.samples[10].time_s += 1.0;
  CHECK_THROWS_AS(profiles::validate(bad), std::invalid_argument);
  bad = prof;
  bad.samples[10].conc_ppb = -0.1;
  CHECK_THROWS_AS(profiles::validate(bad), std::invalid_argument);
}
