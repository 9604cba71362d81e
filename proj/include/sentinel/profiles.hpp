// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sentinel::profiles {

enum class ResolutionKind { PerMinute, PerHour, Custom };

struct Resolution {
  ResolutionKind kind = ResolutionKind::Custom;
  double seconds = 0.0;  // sample spacing

  static Resolution per_minute() { return {ResolutionKind::PerMinute, 60.0}; }
  static Resolution per_hour() { return {ResolutionKind::PerHour, 3600.0}; }
  static Resolution custom(double seconds) { return {ResolutionKind::Custom, seconds}; }
};

struct Sample {
  double time_s;
  double conc_ppb;
};

// Timestamped gas concentration series. Times start at 0 and are uniformly
// spaced at the resolution; concentrations are never negative.
struct ConcentrationProfile {
  std::vector<Sample> samples;
  Resolution resolution;
  double duration_s = 0.0;
  std::string label;
};

// Concentration per raw acquisition tick, i.e. the grid the sensor
// simulation samples at.
struct DenseProfile {
  std::vector<double> values;  // ppb per tick
  double raw_rate_hz = 1.0;
  std::string source;
};

// One piece of an artificial profile: constant level when start == end,
// linear ramp otherwise.
struct Segment {
  double duration_min;
  double start_ppb;
  double end_ppb;
};

inline Segment constant_segment(double duration_min, double level_ppb) {
  return {duration_min, level_ppb, level_ppb};
}

/// High-resolution designed profile: one sample per minute, 24 h total.
/// Segment durations must sum to 1440 min and all levels must be >= 0.
/// `jitter_sigma_ppb` adds seeded Gaussian jitter (clamped at 0) when > 0.
ConcentrationProfile gen_artificial(const std::vector<Segment>& segments,
                                    std::uint64_t seed = 0,
                                    double jitter_sigma_ppb = 0.0);

/// Diurnal profile at one sample per hour over 24 h: a Gaussian bump of the
/// given width (hours) on a base level, peaking at `peak_hour`.
ConcentrationProfile gen_realistic(int peak_hour, double base_ppb, double peak_ppb,
                                   double width_hours, std::uint64_t seed = 0,
                                   double jitter_sigma_ppb = 0.0);

/// Reads a `time_s,conc_ppb` CSV; infers the resolution from the sample
/// spacing. Throws std::runtime_error naming the offending line on bad input.
ConcentrationProfile import_csv(const std::string& path);

void export_csv(const ConcentrationProfile& profile, const std::string& path);

enum class DensifyMode {
  Auto,    // Hold for per-minute profiles, Linear for per-hour
  Hold,    // zero-order hold (keeps step edges sharp)
  Linear,  // linear interpolation between samples
};

/// Expands a profile to the raw tick grid. The sample spacing times the raw
/// rate must be an integer tick count.
DenseProfile densify(const ConcentrationProfile& profile, double raw_rate_hz,
                     DensifyMode mode = DensifyMode::Auto);

/// Parses a segment list like "720:20,600:80,120:0-100" (minutes:level or
/// minutes:start-end for a ramp).
std::vector<Segment> parse_segment_spec(const std::string& spec);

/// Throws std::invalid_argument if the profile violates its invariants
/// (uniform increasing times, non-negative concentrations).
void validate(const ConcentrationProfile& profile);

}  // namespace sentinel::profiles
