// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/matrix.hpp"
#include "sentinel/profiles.hpp"

namespace sentinel::sensorsim {

// Chemi-resistive multi-array sensor under sinusoidal heater modulation.
// Per array a the resistance is
//   r_a(t) = r0_a * [1 + d*s_a*g(c)] * [1 + m*sin(w t + theta_a)
//            + kappa*d*s_a*g(c)*sin(2 w t)] * (1 + eps(t))
// with g(c) = c / (c + g_half_ppb), w = 2*pi/heater_period, theta_a = a*pi/6,
// and eps(t) ~ Normal(0, noise_sigma) clamped to +-5 sigma. The second
// harmonic grows with concentration times effective sensitivity, so signal
// distortion carries the information a sensitivity deviation perturbs.
// The model is a synthetic stand-in, not a physical device model.
struct SensorConfig {
  int n_arrays = 4;
  std::vector<double> baseline_resistance = {1.0e5, 1.2e5, 8.0e4, 1.5e5};  // Ohm
  std::vector<double> sensitivity = {1.00, 0.90, 1.10, 0.80};
  double heater_period_s = 60.0;
  double heater_mod_depth = 0.5;    // m, fraction of baseline
  double harmonic_coupling = 0.2;   // kappa
  double noise_sigma = 0.002;       // relative, i.i.d. per tick
  double deviation_factor = 1.0;    // d, 1.0 = nominal, 0.95 = "5% deviation"
  double g_half_ppb = 100.0;        // half-saturation concentration
};

struct SensorResponse {
  Matrix resistance;  // ticks x n_arrays, Ohm
  double raw_rate_hz = 1.0;
  double heater_period_s = 60.0;
  int sensor_id = 0;
};

struct MultiSensorDataset {
  std::vector<SensorResponse> responses;  // ordered by sensor_id
  profiles::ConcentrationProfile profile;
  std::map<int, double> deviation_truth;  // sensor_id -> deviation_factor
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument on invalid configs. Requires
/// heater_period x raw_rate >= 16 ticks, deviation_factor in (0, 2), and the
/// positivity bound m + kappa*d*s_a + 5*noise_sigma < 1 for every array,
/// which makes all simulated resistances provably positive.
void validate(const SensorConfig& config, double raw_rate_hz);

/// Simulates one sensor over the dense concentration grid. Deterministic
/// given seed; with noise_sigma = 0 the output is an exact closed form.
SensorResponse simulate_sensor(const profiles::DenseProfile& dense, const SensorConfig& config,
                               std::uint64_t seed);

/// Simulates n_sensors sensors sharing one chamber (same concentration).
/// Sensors listed in `deviations` get that deviation_factor; all others run
/// the nominal config. Per-sensor seeds derive from the master seed, so the
/// result is identical for any thread count.
MultiSensorDataset simulate_chamber(const profiles::ConcentrationProfile& profile, int n_sensors,
                                    const SensorConfig& nominal,
                                    const std::vector<std::pair<int, double>>& deviations,
                                    std::uint64_t seed, double raw_rate_hz = 1.0, int threads = 0);

/// Parses "6:0.95,2:0.90" into (position, factor) pairs.
std::vector<std::pair<int, double>> parse_deviation_spec(const std::string& spec);

/// Writes one CSV per sensor (`t_s,r_array0,...`) plus manifest.json
/// (seed, configs, deviation truth) into `dir`.
void export_dataset(const MultiSensorDataset& dataset, const std::string& dir);

MultiSensorDataset import_dataset(const std::string& dir);

}  // namespace sentinel::sensorsim
