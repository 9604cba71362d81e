// SPDX-License-Identifier: Apache-2.0
#include "sentinel/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sentinel/csv.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::profiles {

namespace {

constexpr double kDayMinutes = 1440.0;
constexpr double kSpacingTol = 1e-9;

void apply_jitter(ConcentrationProfile& p, std::uint64_t seed, double sigma) {
  if (sigma <= 0.0) return;
  Rng rng(derive_seed(seed, 0x70726f66));  // jitter stream
  for (auto& s : p.samples) s.conc_ppb = std::max(0.0, s.conc_ppb + rng.normal(0.0, sigma));
}

}  // namespace

ConcentrationProfile gen_artificial(const std::vector<Segment>& segments, std::uint64_t seed,
                                    double jitter_sigma_ppb) {
  if (segments.empty()) throw std::invalid_argument("gen_artificial: no segments");
  double total_min = 0.0;
  for (const auto& seg : segments) {
    if (seg.duration_min <= 0.0) throw std::invalid_argument("gen_artificial: zero-duration segment");
    if (seg.start_ppb < 0.0 || seg.end_ppb < 0.0)
      throw std::invalid_argument("gen_artificial: negative concentration level");
    if (seg.duration_min != std::floor(seg.duration_min))
      throw std::invalid_argument("gen_artificial: segment duration must be whole minutes");
    total_min += seg.duration_min;
  }
  if (total_min != kDayMinutes)
    throw std::invalid_argument("gen_artificial: segment durations must sum to 1440 min, got " +
                                std::to_string(total_min));

  ConcentrationProfile p;
  p.resolution = Resolution::per_minute();
  p.duration_s = kDayMinutes * 60.0;
  p.label = "artificial";
  p.samples.reserve(static_cast<std::size_t>(kDayMinutes));
  for (const auto& seg : segments) {
    int n = static_cast<int>(seg.duration_min);
    for (int k = 0; k < n; ++k) {
      double v = (n == 1) ? seg.start_ppb
                          : seg.start_ppb + (seg.end_ppb - seg.start_ppb) * k / (n - 1);
      double t = static_cast<double>(p.samples.size()) * 60.0;
      p.samples.push_back({t, v});
    }
  }
  apply_jitter(p, seed, jitter_sigma_ppb);
  validate(p);
  return p;
}

ConcentrationProfile gen_realistic(int peak_hour, double base_ppb, double peak_ppb,
                                   double width_hours, std::uint64_t seed,
                                   double jitter_sigma_ppb) {
  if (peak_hour < 0 || peak_hour > 23) throw std::invalid_argument("gen_realistic: peak_hour out of 0-23");
  if (base_ppb < 0.0) throw std::invalid_argument("gen_realistic: negative base level");
  if (peak_ppb < base_ppb) throw std::invalid_argument("gen_realistic: peak below base");
  if (width_hours <= 0.0) throw std::invalid_argument("gen_realistic: width must be positive");

  ConcentrationProfile p;
  p.resolution = Resolution::per_hour();
  p.duration_s = 24.0 * 3600.0;
  p.label = "realistic";
  p.samples.reserve(24);
  for (int h = 0; h < 24; ++h) {
    double z = (h - peak_hour) / width_hours;
    double v = base_ppb + (peak_ppb - base_ppb) * std::exp(-0.5 * z * z);
    p.samples.push_back({h * 3600.0, v});
  }
  apply_jitter(p, seed, jitter_sigma_ppb);
  validate(p);
  return p;
}

ConcentrationProfile import_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("import_csv: empty file " + path);
  if (csv::strip(line) != "time_s,conc_ppb")
    throw std::runtime_error("import_csv: expected header 'time_s,conc_ppb' in " + path);

  ConcentrationProfile p;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (csv::strip(line).empty()) continue;
    auto fields = csv::split(line);
    std::string ctx = path + " row " + std::to_string(row);
    if (fields.size() != 2) throw std::runtime_error(ctx + ": expected 2 fields, got " +
                                                     std::to_string(fields.size()));
    double t = csv::parse_double(fields[0], ctx);
    double c = csv::parse_double(fields[1], ctx);
    if (c < 0.0) throw std::runtime_error(ctx + ": negative concentration " + fields[1]);
    if (!p.samples.empty() && t <= p.samples.back().time_s)
      throw std::runtime_error(ctx + ": time not strictly increasing");
    p.samples.push_back({t, c});
  }
  if (p.samples.size() < 2) throw std::runtime_error("import_csv: need at least 2 samples in " + path);

  double spacing = p.samples[1].time_s - p.samples[0].time_s;
  for (std::size_t i = 2; i < p.samples.size(); ++i) {
    double d = p.samples[i].time_s - p.samples[i - 1].time_s;
    if (std::abs(d - spacing) > kSpacingTol)
      throw std::runtime_error(path + " row " + std::to_string(i + 2) + ": non-uniform sample spacing");
  }
  if (spacing == 60.0)
    p.resolution = Resolution::per_minute();
  else if (spacing == 3600.0)
    p.resolution = Resolution::per_hour();
  else
    p.resolution = Resolution::custom(spacing);
  p.duration_s = static_cast<double>(p.samples.size()) * spacing;

  std::size_t slash = path.find_last_of('/');
  std::string base = (slash == std::string::npos) ? path : path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  p.label = (dot == std::string::npos) ? base : base.substr(0, dot);
  validate(p);
  return p;
}

void export_csv(const ConcentrationProfile& profile, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);
  out << "time_s,conc_ppb\n";
  for (const auto& s : profile.samples)
    out << csv::format_double(s.time_s) << ',' << csv::format_double(s.conc_ppb) << '\n';
  if (!out) throw std::runtime_error("export_csv: write failed for " + path);
}

DenseProfile densify(const ConcentrationProfile& profile, double raw_rate_hz, DensifyMode mode) {
  validate(profile);
  if (raw_rate_hz <= 0.0) throw std::invalid_argument("densify: raw_rate must be positive");
  double ticks_f = profile.resolution.seconds * raw_rate_hz;
  double ticks_round = std::round(ticks_f);
  if (ticks_round < 1.0 || std::abs(ticks_f - ticks_round) > kSpacingTol)
    throw std::invalid_argument("densify: raw_rate x resolution is not an integer tick count");
  auto ticks_per_sample = static_cast<std::size_t>(ticks_round);

  if (mode == DensifyMode::Auto)
    mode = (profile.resolution.kind == ResolutionKind::PerHour) ? DensifyMode::Linear
                                                                : DensifyMode::Hold;

  DenseProfile dense;
  dense.raw_rate_hz = raw_rate_hz;
  dense.source = profile.label;
  const auto& s = profile.samples;
  dense.values.reserve(s.size() * ticks_per_sample);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (mode == DensifyMode::Hold || i + 1 == s.size()) {
      dense.values.insert(dense.values.end(), ticks_per_sample, s[i].conc_ppb);
    } else {
      for (std::size_t k = 0; k < ticks_per_sample; ++k) {
        double frac = static_cast<double>(k) / static_cast<double>(ticks_per_sample);
        dense.values.push_back(s[i].conc_ppb + (s[i + 1].conc_ppb - s[i].conc_ppb) * frac);
      }
    }
  }
  return dense;
}

std::vector<Segment> parse_segment_spec(const std::string& spec) {
  // A malformed spec is a bad argument, not a bad file: keep the whole
  // function on invalid_argument even where csv helpers do the parsing.
  auto number = [](const std::string& field, const char* what) {
    try {
      return csv::parse_double(field, what);
    } catch (const std::runtime_error& e) {
      throw std::invalid_argument(e.what());
    }
  };
  std::vector<Segment> segments;
  for (const auto& part : csv::split(spec)) {
    std::string t = csv::strip(part);
    if (t.empty()) continue;
    std::size_t colon = t.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("segment spec: missing ':' in '" + t + "'");
    double dur = number(t.substr(0, colon), "segment duration");
    std::string level = t.substr(colon + 1);
    std::size_t dash = level.find('-');
    Segment seg{};
    seg.duration_min = dur;
    if (dash == std::string::npos) {
      seg.start_ppb = seg.end_ppb = number(level, "segment level");
    } else {
      seg.start_ppb = number(level.substr(0, dash), "segment ramp start");
      seg.end_ppb = number(level.substr(dash + 1), "segment ramp end");
    }
    segments.push_back(seg);
  }
  if (segments.empty()) throw std::invalid_argument("segment spec: no segments in '" + spec + "'");
  return segments;
}

void validate(const ConcentrationProfile& profile) {
  if (profile.samples.empty()) throw std::invalid_argument("profile: no samples");
  if (profile.resolution.seconds <= 0.0) throw std::invalid_argument("profile: non-positive resolution");
  for (std::size_t i = 0; i < profile.samples.size(); ++i) {
    if (profile.samples[i].conc_ppb < 0.0)
      throw std::invalid_argument("profile: negative concentration at sample " + std::to_string(i));
    if (i > 0) {
      double d = profile.samples[i].time_s - profile.samples[i - 1].time_s;
      if (d <= 0.0) throw std::invalid_argument("profile: times not strictly increasing at sample " +
                                                std::to_string(i));
      if (std::abs(d - profile.resolution.seconds) > kSpacingTol)
        throw std::invalid_argument("profile: spacing mismatch at sample " + std::to_string(i));
    }
  }
}

}  // namespace sentinel::profiles
