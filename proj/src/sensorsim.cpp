// SPDX-License-Identifier: Apache-2.0
#include "sentinel/sensorsim.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "sentinel/csv.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::sensorsim {

namespace {

double array_phase(int a) { return a * std::numbers::pi / 6.0; }

nlohmann::json config_to_json(const SensorConfig& c) {
  return {{"n_arrays", c.n_arrays},
          {"baseline_resistance", c.baseline_resistance},
          {"sensitivity", c.sensitivity},
          {"heater_period_s", c.heater_period_s},
          {"heater_mod_depth", c.heater_mod_depth},
          {"harmonic_coupling", c.harmonic_coupling},
          {"noise_sigma", c.noise_sigma},
          {"deviation_factor", c.deviation_factor},
          {"g_half_ppb", c.g_half_ppb}};
}

SensorConfig config_from_json(const nlohmann::json& j) {
  SensorConfig c;
  c.n_arrays = j.at("n_arrays").get<int>();
  c.baseline_resistance = j.at("baseline_resistance").get<std::vector<double>>();
  c.sensitivity = j.at("sensitivity").get<std::vector<double>>();
  c.heater_period_s = j.at("heater_period_s").get<double>();
  c.heater_mod_depth = j.at("heater_mod_depth").get<double>();
  c.harmonic_coupling = j.at("harmonic_coupling").get<double>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.deviation_factor = j.at("deviation_factor").get<double>();
  c.g_half_ppb = j.at("g_half_ppb").get<double>();
  return c;
}

}  // namespace

void validate(const SensorConfig& c, double raw_rate_hz) {
  if (c.n_arrays < 1) throw std::invalid_argument("sensor config: n_arrays must be >= 1");
  if (static_cast<int>(c.baseline_resistance.size()) != c.n_arrays ||
      static_cast<int>(c.sensitivity.size()) != c.n_arrays)
    throw std::invalid_argument("sensor config: per-array field length != n_arrays");
  for (double r0 : c.baseline_resistance)
    if (r0 <= 0.0) throw std::invalid_argument("sensor config: baseline resistance must be > 0");
  if (c.heater_period_s <= 0.0) throw std::invalid_argument("sensor config: heater period must be > 0");
  double ticks = c.heater_period_s * raw_rate_hz;
  if (ticks < 16.0 || std::abs(ticks - std::round(ticks)) > 1e-9)
    throw std::invalid_argument("sensor config: heater period must span an integer >= 16 ticks");
  if (c.heater_mod_depth < 0.0 || c.heater_mod_depth > 1.0)
    throw std::invalid_argument("sensor config: heater_mod_depth must be in [0, 1]");
  if (c.harmonic_coupling < 0.0) throw std::invalid_argument("sensor config: harmonic_coupling must be >= 0");
  if (c.noise_sigma < 0.0) throw std::invalid_argument("sensor config: noise_sigma must be >= 0");
  if (c.deviation_factor <= 0.0 || c.deviation_factor >= 2.0)
    throw std::invalid_argument("sensor config: deviation_factor must be in (0, 2)");
  if (c.g_half_ppb <= 0.0) throw std::invalid_argument("sensor config: g_half_ppb must be > 0");
  for (double s : c.sensitivity) {
    if (s <= 0.0) throw std::invalid_argument("sensor config: sensitivity must be > 0");
    // Positivity bound: every factor of the response stays > 0 (noise is
    // clamped at 5 sigma, and g(c) <= 1).
    double worst = c.heater_mod_depth + c.harmonic_coupling * c.deviation_factor * s +
                   5.0 * c.noise_sigma;
    if (worst >= 1.0)
      throw std::invalid_argument(
          "sensor config: heater_mod_depth + harmonic_coupling*deviation*sensitivity"
          " + 5*noise_sigma must stay below 1");
  }
}

SensorResponse simulate_sensor(const profiles::DenseProfile& dense, const SensorConfig& config,
                               std::uint64_t seed) {
  if (dense.values.empty()) throw std::invalid_argument("simulate_sensor: empty dense profile");
  validate(config, dense.raw_rate_hz);

  const int ticks = static_cast<int>(dense.values.size());
  const int na = config.n_arrays;
  SensorResponse resp;
  resp.resistance = Matrix(ticks, na);
  resp.raw_rate_hz = dense.raw_rate_hz;
  resp.heater_period_s = config.heater_period_s;

  const double w = 2.0 * std::numbers::pi / config.heater_period_s;
  const double d = config.deviation_factor;
  const double m = config.heater_mod_depth;
  const double kappa = config.harmonic_coupling;
  const double clamp = 5.0 * config.noise_sigma;

  Rng rng(seed);
  for (int i = 0; i < ticks; ++i) {
    double t = i / dense.raw_rate_hz;
    double g = dense.values[i] / (dense.values[i] + config.g_half_ppb);
    double eps = 0.0;
    if (config.noise_sigma > 0.0) {
      eps = rng.normal(0.0, config.noise_sigma);
      eps = std::clamp(eps, -clamp, clamp);
    }
    double sin_wt = std::sin(w * t);
    double cos_wt = std::cos(w * t);
    double sin_2wt = 2.0 * sin_wt * cos_wt;
    for (int a = 0; a < na; ++a) {
      double dsg = d * config.sensitivity[a] * g;
      double heater = 1.0 + m * std::sin(w * t + array_phase(a)) + kappa * dsg * sin_2wt;
      resp.resistance(i, a) = config.baseline_resistance[a] * (1.0 + dsg) * heater * (1.0 + eps);
    }
  }
  return resp;
}

MultiSensorDataset simulate_chamber(const profiles::ConcentrationProfile& profile, int n_sensors,
                                    const SensorConfig& nominal,
                                    const std::vector<std::pair<int, double>>& deviations,
                                    std::uint64_t seed, double raw_rate_hz, int threads) {
  if (n_sensors < 1) throw std::invalid_argument("simulate_chamber: n_sensors must be >= 1");
  validate(nominal, raw_rate_hz);

  std::map<int, double> truth;
  for (const auto& [pos, factor] : deviations) {
    if (pos < 0 || pos >= n_sensors)
      throw std::invalid_argument("simulate_chamber: deviation position " + std::to_string(pos) +
                                  " outside 0.." + std::to_string(n_sensors - 1));
    if (!truth.emplace(pos, factor).second)
      throw std::invalid_argument("simulate_chamber: duplicate deviation position " +
                                  std::to_string(pos));
    SensorConfig check = nominal;
    check.deviation_factor = factor;
    validate(check, raw_rate_hz);
  }

  const auto dense = profiles::densify(profile, raw_rate_hz);

  MultiSensorDataset ds;
  ds.profile = profile;
  ds.deviation_truth = truth;
  ds.seed = seed;
  ds.responses.resize(n_sensors);

  if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int id = 0; id < n_sensors; ++id) {
    SensorConfig cfg = nominal;
    if (auto it = truth.find(id); it != truth.end()) cfg.deviation_factor = it->second;
    SensorResponse r = simulate_sensor(dense, cfg, derive_seed(seed, static_cast<std::uint64_t>(id)));
    r.sensor_id = id;
    ds.responses[id] = std::move(r);
  }
  return ds;
}

std::vector<std::pair<int, double>> parse_deviation_spec(const std::string& spec) {
  std::vector<std::pair<int, double>> out;
  for (const auto& part : csv::split(spec)) {
    std::string t = csv::strip(part);
    if (t.empty()) continue;
    std::size_t colon = t.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("deviation spec: missing ':' in '" + t + "'");
    int pos = static_cast<int>(csv::parse_double(t.substr(0, colon), "deviation position"));
    double factor = csv::parse_double(t.substr(colon + 1), "deviation factor");
    out.emplace_back(pos, factor);
  }
  return out;
}

void export_dataset(const MultiSensorDataset& dataset, const std::string& dir) {
  std::filesystem::create_directories(dir);
  profiles::export_csv(dataset.profile, dir + "/profile.csv");

  nlohmann::json manifest;
  manifest["seed"] = dataset.seed;
  manifest["n_sensors"] = dataset.responses.size();
  manifest["deviation_truth"] = nlohmann::json::object();
  for (const auto& [id, factor] : dataset.deviation_truth)
    manifest["deviation_truth"][std::to_string(id)] = factor;

  for (const auto& r : dataset.responses) {
    std::string path = dir + "/sensor_" + std::to_string(r.sensor_id) + ".csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_dataset: cannot open " + path);
    out << "t_s";
    for (int a = 0; a < r.resistance.cols; ++a) out << ",r_array" << a;
    out << '\n';
    for (int i = 0; i < r.resistance.rows; ++i) {
      out << csv::format_double(i / r.raw_rate_hz);
      for (int a = 0; a < r.resistance.cols; ++a)
        out << ',' << csv::format_double(r.resistance(i, a));
      out << '\n';
    }
    manifest["sensors"].push_back({{"sensor_id", r.sensor_id},
                                   {"file", "sensor_" + std::to_string(r.sensor_id) + ".csv"},
                                   {"raw_rate_hz", r.raw_rate_hz},
                                   {"heater_period_s", r.heater_period_s}});
  }

  std::ofstream mout(dir + "/manifest.json");
  if (!mout) throw std::runtime_error("export_dataset: cannot open " + dir + "/manifest.json");
  mout << manifest.dump(2) << '\n';
}

MultiSensorDataset import_dataset(const std::string& dir) {
  std::ifstream min(dir + "/manifest.json");
  if (!min) throw std::runtime_error("import_dataset: cannot open " + dir + "/manifest.json");
  nlohmann::json manifest = nlohmann::json::parse(min);

  MultiSensorDataset ds;
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.profile = profiles::import_csv(dir + "/profile.csv");
  for (auto& [key, factor] : manifest.at("deviation_truth").items())
    ds.deviation_truth[std::stoi(key)] = factor.get<double>();

  for (const auto& entry : manifest.at("sensors")) {
    std::string path = dir + "/" + entry.at("file").get<std::string>();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("import_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("import_dataset: empty file " + path);
    auto header = csv::split(csv::strip(line));
    int na = static_cast<int>(header.size()) - 1;
    if (na < 1 || header[0] != "t_s")
      throw std::runtime_error("import_dataset: bad header in " + path);

    std::vector<double> values;
    int rows = 0;
    while (std::getline(in, line)) {
      if (csv::strip(line).empty()) continue;
      auto fields = csv::split(line);
      if (static_cast<int>(fields.size()) != na + 1)
        throw std::runtime_error("import_dataset: ragged row " + std::to_string(rows + 2) + " in " + path);
      for (int a = 0; a < na; ++a)
        values.push_back(csv::parse_double(fields[a + 1], path));
      ++rows;
    }
    SensorResponse r;
    r.resistance = Matrix(rows, na);
    r.resistance.data = std::move(values);
    r.raw_rate_hz = entry.at("raw_rate_hz").get<double>();
    r.heater_period_s = entry.at("heater_period_s").get<double>();
    r.sensor_id = entry.at("sensor_id").get<int>();
    ds.responses.push_back(std::move(r));
  }
  std::sort(ds.responses.begin(), ds.responses.end(),
            [](const SensorResponse& a, const SensorResponse& b) { return a.sensor_id < b.sensor_id; });
  return ds;
}

}  // namespace sentinel::sensorsim
