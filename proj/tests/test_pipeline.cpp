// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "sentinel/pipeline.hpp"

using namespace sentinel;

namespace {

// 30-minute ramp profile CSV at one sample per minute: with the default
// 60 s heater period this yields exactly 30 heater cycles at 1 Hz.
void write_ramp_csv(const std::string& path, double start_ppb, double step_ppb) {
  std::ofstream out(path);
  out << "time_s,conc_ppb\n";
  for (int i = 0; i < 30; ++i)
    out << i * 60 << ',' << start_ppb + step_ppb * i << '\n';
}

pipeline::ProfileSpec csv_spec(const std::string& path) {
  pipeline::ProfileSpec s;
  s.kind = pipeline::ProfileSpec::Kind::Csv;
  s.path = path;
  return s;
}

// Smallest all-paths run: 5 test sensors, 4 training sensors, 30 cycles,
// 8-cycle windows, 2 epochs, and a 2x2 attribution budget.
pipeline::RunConfig mini_config(const testutil::TempDir& tmp) {
  write_ramp_csv(tmp.file("train.csv"), 20.0, 2.0);
  write_ramp_csv(tmp.file("val.csv"), 26.0, 2.0);
  write_ramp_csv(tmp.file("test.csv"), 24.0, 2.0);

  pipeline::RunConfig cfg;
  cfg.label = "mini";
  cfg.seed = 77;
  cfg.repetitions = 1;
  cfg.raw_rate_hz = 1.0;
  cfg.threads = 2;
  cfg.train_profile = csv_spec(tmp.file("train.csv"));
  cfg.val_profile = csv_spec(tmp.file("val.csv"));
  cfg.test_profile = csv_spec(tmp.file("test.csv"));
  cfg.n_sensors = 5;
  cfg.train_sensors = 4;
  cfg.deviations = {{1, 0.7}};
  cfg.hyper.hidden = 6;
  cfg.hyper.window_len = 8;
  cfg.hyper.max_epochs = 2;
  cfg.hyper.batch_size = 16;
  cfg.hyper.patience = 5;
  cfg.attrib_baselines = 2;
  cfg.attrib_path_steps = 2;
  cfg.output_dir = tmp.file("out");
  return cfg;
}

bool is_hex16(const std::string& s) {
  if (s.size() != 16) return false;
  for (char c : s)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  return true;
}

}  // namespace

TEST_CASE("config JSON roundtrip preserves every field") {
  testutil::TempDir tmp("pipecfg");
  pipeline::RunConfig cfg;
  cfg.label = "roundtrip";
  cfg.seed = 123456789012345ULL;
  cfg.repetitions = 3;
  cfg.raw_rate_hz = 0.5;
  cfg.threads = 7;
  cfg.train_profile.kind = pipeline::ProfileSpec::Kind::Artificial;
  cfg.train_profile.segments = "720:20,480:80,240:0-100";
  cfg.train_profile.jitter_sigma_ppb = 1.5;
  cfg.val_profile.kind = pipeline::ProfileSpec::Kind::Realistic;
  cfg.val_profile.peak_hour = 9;
  cfg.val_profile.base_ppb = 12.0;
  cfg.val_profile.peak_ppb = 55.0;
  cfg.val_profile.width_hours = 2.5;
  cfg.test_profile.kind = pipeline::ProfileSpec::Kind::Csv;
  cfg.test_profile.path = "/data/day.csv";
  cfg.n_sensors = 12;
  cfg.train_sensors = 6;
  cfg.deviations = {{6, 0.95}, {2, 0.9}, {8, 0.7}};
  cfg.nominal.n_arrays = 3;
  cfg.nominal.baseline_resistance = {9.0e4, 1.1e5, 1.3e5};
  cfg.nominal.sensitivity = {1.0, 0.85, 1.05};
  cfg.nominal.heater_period_s = 240.0;
  cfg.nominal.heater_mod_depth = 0.4;
  cfg.nominal.harmonic_coupling = 0.25;
  cfg.nominal.noise_sigma = 0.003;
  cfg.nominal.g_half_ppb = 90.0;
  cfg.hyper.hidden = 24;
  cfg.hyper.window_len = 16;
  cfg.hyper.learning_rate = 2e-3;
  cfg.hyper.max_epochs = 17;
  cfg.hyper.batch_size = 48;
  cfg.hyper.patience = 4;
  cfg.attrib_baselines = 5;
  cfg.attrib_path_steps = 33;
  cfg.policy.k_mad = 2.5;
  cfg.policy.cosine_floor = 0.9985;
  cfg.policy.corr_floor = 0.993;
  cfg.output_dir = "elsewhere";

  pipeline::save_config(cfg, tmp.file("cfg.json"));
  const auto back = pipeline::load_config(tmp.file("cfg.json"));

  CHECK(back.label == cfg.label);
  CHECK(back.seed == cfg.seed);
  CHECK(back.repetitions == cfg.repetitions);
  CHECK(back.raw_rate_hz == cfg.raw_rate_hz);
  CHECK(back.threads == cfg.threads);
  CHECK(back.train_profile.kind == cfg.train_profile.kind);
  CHECK(back.train_profile.segments == cfg.train_profile.segments);
  CHECK(back.train_profile.jitter_sigma_ppb == cfg.train_profile.jitter_sigma_ppb);
  CHECK(back.val_profile.kind == cfg.val_profile.kind);
  CHECK(back.val_profile.peak_hour == cfg.val_profile.peak_hour);
  CHECK(back.val_profile.base_ppb == cfg.val_profile.base_ppb);
  CHECK(back.val_profile.peak_ppb == cfg.val_profile.peak_ppb);
  CHECK(back.val_profile.width_hours == cfg.val_profile.width_hours);
  CHECK(back.test_profile.kind == cfg.test_profile.kind);
  CHECK(back.test_profile.path == cfg.test_profile.path);
  CHECK(back.n_sensors == cfg.n_sensors);
  CHECK(back.train_sensors == cfg.train_sensors);
  CHECK(back.deviations == cfg.deviations);
  CHECK(back.nominal.n_arrays == cfg.nominal.n_arrays);
  CHECK(back.nominal.baseline_resistance == cfg.nominal.baseline_resistance);
  CHECK(back.nominal.sensitivity == cfg.nominal.sensitivity);
  CHECK(back.nominal.heater_period_s == cfg.nominal.heater_period_s);
  CHECK(back.nominal.heater_mod_depth == cfg.nominal.heater_mod_depth);
  CHECK(back.nominal.harmonic_coupling == cfg.nominal.harmonic_coupling);
  CHECK(back.nominal.noise_sigma == cfg.nominal.noise_sigma);
  CHECK(back.nominal.g_half_ppb == cfg.nominal.g_half_ppb);
  CHECK(back.hyper.hidden == cfg.hyper.hidden);
  CHECK(back.hyper.window_len == cfg.hyper.window_len);
  CHECK(back.hyper.learning_rate == cfg.hyper.learning_rate);
  CHECK(back.hyper.max_epochs == cfg.hyper.max_epochs);
  CHECK(back.hyper.batch_size == cfg.hyper.batch_size);
  CHECK(back.hyper.patience == cfg.hyper.patience);
  CHECK(back.attrib_baselines == cfg.attrib_baselines);
  CHECK(back.attrib_path_steps == cfg.attrib_path_steps);
  CHECK(back.policy.k_mad == cfg.policy.k_mad);
  CHECK(back.policy.cosine_floor == cfg.policy.cosine_floor);
  CHECK(back.policy.corr_floor == cfg.policy.corr_floor);
  CHECK(back.output_dir == cfg.output_dir);

  CHECK_THROWS_AS(pipeline::load_config(tmp.file("missing.json")), std::runtime_error);
}

TEST_CASE("config_hash: stable, format, sensitive to any field") {
  pipeline::RunConfig cfg;
  const std::string h = pipeline::config_hash(cfg);
  CHECK(is_hex16(h));
  CHECK(pipeline::config_hash(cfg) == h);

  auto differs = [&](auto mutate) {
    pipeline::RunConfig c2 = cfg;
    mutate(c2);
    return pipeline::config_hash(c2) != h;
  };
  CHECK(differs([](pipeline::RunConfig& c) { c.seed += 1; }));
  CHECK(differs([](pipeline::RunConfig& c) { c.label = "x"; }));
  CHECK(differs([](pipeline::RunConfig& c) { c.deviations = {{0, 0.9}}; }));
  CHECK(differs([](pipeline::RunConfig& c) { c.policy.k_mad = 2.9; }));
  CHECK(differs([](pipeline::RunConfig& c) { c.nominal.noise_sigma = 0.004; }));
  CHECK(differs([](pipeline::RunConfig& c) { c.hyper.hidden = 41; }));
}

TEST_CASE("cycle_targets averages the dense grid per heater cycle") {
  profiles::DenseProfile dense;
  dense.raw_rate_hz = 1.0;
  for (int i = 1; i <= 12; ++i) dense.values.push_back(static_cast<double>(i));

  const auto t = pipeline::cycle_targets(dense, 4.0);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == doctest::Approx(2.5));
  CHECK(t[1] == doctest::Approx(6.5));
  CHECK(t[2] == doctest::Approx(10.5));

  // Fractional ticks per cycle and non-divisible lengths are rejected.
  CHECK_THROWS_AS(pipeline::cycle_targets(dense, 2.5), std::invalid_argument);
  dense.values.pop_back();
  CHECK_THROWS_AS(pipeline::cycle_targets(dense, 4.0), std::invalid_argument);

  profiles::DenseProfile fast;
  fast.raw_rate_hz = 2.0;
  fast.values = {1.0, 3.0, 5.0, 7.0};
  const auto t2 = pipeline::cycle_targets(fast, 2.0);  // 4 ticks per cycle
  REQUIRE(t2.size() == 1);
  CHECK(t2[0] == doctest::Approx(4.0));
}

TEST_CASE("make_profile dispatches on the profile kind") {
  pipeline::ProfileSpec art;
  art.kind = pipeline::ProfileSpec::Kind::Artificial;
  art.segments = "720:20,720:50";
  const auto a = pipeline::make_profile(art, 1);
  REQUIRE(a.samples.size() == 1440);
  CHECK(a.samples[0].conc_ppb == doctest::Approx(20.0));
  CHECK(a.samples[1000].conc_ppb == doctest::Approx(50.0));

  pipeline::ProfileSpec real;
  real.kind = pipeline::ProfileSpec::Kind::Realistic;
  real.peak_hour = 14;
  real.base_ppb = 10.0;
  real.peak_ppb = 60.0;
  real.width_hours = 3.0;
  const auto r = pipeline::make_profile(real, 1);
  CHECK(r.resolution.kind == profiles::ResolutionKind::PerHour);
  CHECK(r.samples[14].conc_ppb == doctest::Approx(60.0));
  CHECK(r.samples[2].conc_ppb < r.samples[13].conc_ppb);

  testutil::TempDir tmp("mkprof");
  write_ramp_csv(tmp.file("ramp.csv"), 15.0, 1.0);
  const auto c = pipeline::make_profile(csv_spec(tmp.file("ramp.csv")), 99);
  REQUIRE(c.samples.size() == 30);
  CHECK(c.samples[29].conc_ppb == doctest::Approx(44.0));
  CHECK(c.label == "ramp");

  // Artificial jitter must be seeded: same seed agrees, different differs.
  art.jitter_sigma_ppb = 2.0;
  const auto j1 = pipeline::make_profile(art, 5);
  const auto j2 = pipeline::make_profile(art, 5);
  const auto j3 = pipeline::make_profile(art, 6);
  CHECK(j1.samples[10].conc_ppb == j2.samples[10].conc_ppb);
  bool any_diff = false;
  for (std::size_t i = 0; i < j1.samples.size(); ++i)
    any_diff = any_diff || (j1.samples[i].conc_ppb != j3.samples[i].conc_ppb);
  CHECK(any_diff);
}

TEST_CASE("detection run: structure, grades, and byte-reproducible reports") {
  testutil::TempDir tmp("pipedet");
  const auto cfg = mini_config(tmp);

  const auto rep1 = pipeline::run_test_detection(cfg);
  REQUIRE(rep1.grades.size() == 1);
  CHECK(rep1.grades[0].sensor_id == 1);
  CHECK(rep1.grades[0].factor == doctest::Approx(0.7));
  CHECK(rep1.grades[0].deviation_pct == doctest::Approx(30.0));
  CHECK(rep1.grades[0].rank_by_sum >= 1);
  CHECK(rep1.grades[0].rank_by_sum <= cfg.n_sensors);
  REQUIRE(rep1.truth.size() == 1);
  CHECK(rep1.truth.at(1) == doctest::Approx(0.7));
  CHECK(static_cast<int>(rep1.rankings.size()) == cfg.n_sensors);
  CHECK(static_cast<int>(rep1.flags.sensors.size()) == cfg.n_sensors);
  CHECK(rep1.cosine_m.values.rows == cfg.n_sensors);
  CHECK(rep1.attributions.sensor_ids == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(rep1.train_report.loss_history.size() >= 1);
  CHECK(rep1.train_report.loss_history.size() <= 2);
  CHECK(std::isfinite(rep1.train_report.val_metrics.rmse));
  // Flagged-but-clean sensors and false_positives must agree.
  std::set<int> fp(rep1.false_positives.begin(), rep1.false_positives.end());
  for (const auto& s : rep1.flags.sensors) {
    const bool clean_flagged = s.flagged && !rep1.truth.count(s.sensor_id);
    CHECK(fp.count(s.sensor_id) == (clean_flagged ? 1u : 0u));
  }

  const auto rep2 = pipeline::run_test_detection(cfg);
  pipeline::emit_reports(rep1, cfg, tmp.file("outA"));
  pipeline::emit_reports(rep2, cfg, tmp.file("outB"));

  const auto manifest =
      nlohmann::json::parse(testutil::read_file(tmp.file("outA") + "/manifest.json"));
  CHECK(manifest["version"] == pipeline::kToolVersion);
  CHECK(manifest["config_hash"] == pipeline::config_hash(cfg));
  const auto det = manifest["deterministic_files"].get<std::vector<std::string>>();
  const auto vol = manifest["volatile_files"].get<std::vector<std::string>>();
  CHECK(std::find(det.begin(), det.end(), "report.json") != det.end());
  CHECK(std::find(det.begin(), det.end(), "rankings.json") != det.end());
  CHECK(std::find(vol.begin(), vol.end(), "timings.json") != vol.end());

  // Every deterministic artifact must come out byte-identical across runs.
  for (const auto& name : det) {
    const std::string a = testutil::read_file(tmp.file("outA") + "/" + name);
    const std::string b = testutil::read_file(tmp.file("outB") + "/" + name);
    REQUIRE(!a.empty());
    CHECK_MESSAGE(a == b, name, " differs between identical runs");
  }
  CHECK(testutil::read_file(tmp.file("outA") + "/manifest.json") ==
        testutil::read_file(tmp.file("outB") + "/manifest.json"));
}

TEST_CASE("pruning run: averages, table layout, and report shape") {
  testutil::TempDir tmp("pipeprune");
  auto cfg = mini_config(tmp);
  cfg.deviations = {{1, 0.6}, {3, 0.75}};

  const auto report = pipeline::run_train_pruning(cfg);
  REQUIRE(report.runs.size() == 1);
  const auto& run = report.runs[0];
  CHECK(run.truth == std::vector<int>{1, 3});
  CHECK(run.flagged.size() < 5);  // a full flag-out aborts instead
  CHECK(std::isfinite(run.with_outliers.test.rmse));
  CHECK(std::isfinite(run.without_outliers.test.rmse));
  CHECK(run.with_outliers.duration_s > 0.0);
  // With a single repetition the average is that run's row.
  CHECK(report.avg_with.test.rmse == doctest::Approx(run.with_outliers.test.rmse));
  CHECK(report.avg_without.train.mae == doctest::Approx(run.without_outliers.train.mae));

  pipeline::emit_reports(report, cfg, tmp.file("pout"));
  const std::string table = testutil::read_file(tmp.file("pout") + "/table.csv");
  REQUIRE(!table.empty());
  CHECK(table.find("rmse_train_ppb,mae_train_ppb,mape_train_pct,rmse_test_ppb,mae_test_ppb,"
                   "mape_test_pct,duration_train_s\n") == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);

  const auto rj = nlohmann::json::parse(testutil::read_file(tmp.file("pout") + "/report.json"));
  CHECK(rj["runs"].size() == 1);
  CHECK(rj["runs"][0]["truth"] == nlohmann::json::array({1, 3}));
  CHECK(rj.contains("average"));
  // Durations are quarantined to the volatile files.
  CHECK(rj.dump().find("duration") == std::string::npos);

  cfg.repetitions = 0;
  CHECK_THROWS_AS(pipeline::run_train_pruning(cfg), std::invalid_argument);
}
