// SPDX-License-Identifier: Apache-2.0
#include "sentinel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "sentinel/csv.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::pipeline {

namespace {

using nlohmann::json;

// Seed stream ids; changing any of these changes every derived run.
constexpr std::uint64_t kRunStream = 1000;      // + repetition index
constexpr std::uint64_t kDetectStream = 2000;   // application B
constexpr std::uint64_t kProfileTrain = 10, kProfileVal = 11, kProfileTest = 12;
constexpr std::uint64_t kChamberTrain = 20, kChamberVal = 21, kChamberTest = 22;
constexpr std::uint64_t kTrainWith = 30, kTrainWithout = 31;
constexpr std::uint64_t kBaselines = 40;

json profile_to_json(const ProfileSpec& p) {
  json j;
  switch (p.kind) {
    case ProfileSpec::Kind::Artificial:
      j["kind"] = "artificial";
      j["segments"] = p.segments;
      break;
    case ProfileSpec::Kind::Realistic:
      j["kind"] = "realistic";
      j["peak_hour"] = p.peak_hour;
      j["base_ppb"] = p.base_ppb;
      j["peak_ppb"] = p.peak_ppb;
      j["width_hours"] = p.width_hours;
      break;
    case ProfileSpec::Kind::Csv:
      j["kind"] = "csv";
      j["path"] = p.path;
      break;
  }
  if (p.jitter_sigma_ppb > 0.0) j["jitter_sigma_ppb"] = p.jitter_sigma_ppb;
  return j;
}

ProfileSpec profile_from_json(const json& j) {
  ProfileSpec p;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "artificial") {
    p.kind = ProfileSpec::Kind::Artificial;
    p.segments = j.at("segments").get<std::string>();
  } else if (kind == "realistic") {
    p.kind = ProfileSpec::Kind::Realistic;
    p.peak_hour = j.value("peak_hour", p.peak_hour);
    p.base_ppb = j.value("base_ppb", p.base_ppb);
    p.peak_ppb = j.value("peak_ppb", p.peak_ppb);
    p.width_hours = j.value("width_hours", p.width_hours);
  } else if (kind == "csv") {
    p.kind = ProfileSpec::Kind::Csv;
    p.path = j.at("path").get<std::string>();
  } else {
    throw std::runtime_error("config: unknown profile kind '" + kind + "'");
  }
  p.jitter_sigma_ppb = j.value("jitter_sigma_ppb", 0.0);
  return p;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["label"] = c.label;
  j["seed"] = c.seed;
  j["repetitions"] = c.repetitions;
  j["raw_rate_hz"] = c.raw_rate_hz;
  j["threads"] = c.threads;
  j["profiles"] = {{"train", profile_to_json(c.train_profile)},
                   {"val", profile_to_json(c.val_profile)},
                   {"test", profile_to_json(c.test_profile)}};
  std::string dev;
  for (const auto& [pos, factor] : c.deviations) {
    if (!dev.empty()) dev += ',';
    dev += std::to_string(pos) + ':' + csv::format_double(factor);
  }
  j["chamber"] = {{"n_sensors", c.n_sensors},
                  {"train_sensors", c.train_sensors},
                  {"deviations", dev},
                  {"nominal",
                   {{"n_arrays", c.nominal.n_arrays},
                    {"baseline_resistance", c.nominal.baseline_resistance},
                    {"sensitivity", c.nominal.sensitivity},
                    {"heater_period_s", c.nominal.heater_period_s},
                    {"heater_mod_depth", c.nominal.heater_mod_depth},
                    {"harmonic_coupling", c.nominal.harmonic_coupling},
                    {"noise_sigma", c.nominal.noise_sigma},
                    {"g_half_ppb", c.nominal.g_half_ppb}}}};
  j["model"] = {{"hidden", c.hyper.hidden},
                {"window_len", c.hyper.window_len},
                {"learning_rate", c.hyper.learning_rate},
                {"max_epochs", c.hyper.max_epochs},
                {"batch_size", c.hyper.batch_size},
                {"patience", c.hyper.patience}};
  j["attribution"] = {{"baselines", c.attrib_baselines}, {"path_steps", c.attrib_path_steps}};
  j["policy"] = {{"k_mad", c.policy.k_mad},
                 {"cosine_floor", c.policy.cosine_floor},
                 {"corr_floor", c.policy.corr_floor}};
  j["output_dir"] = c.output_dir;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.label = j.value("label", c.label);
  c.seed = j.value("seed", c.seed);
  c.repetitions = j.value("repetitions", c.repetitions);
  c.raw_rate_hz = j.value("raw_rate_hz", c.raw_rate_hz);
  c.threads = j.value("threads", c.threads);
  if (j.contains("profiles")) {
    const auto& p = j.at("profiles");
    if (p.contains("train")) c.train_profile = profile_from_json(p.at("train"));
    if (p.contains("val")) c.val_profile = profile_from_json(p.at("val"));
    if (p.contains("test")) c.test_profile = profile_from_json(p.at("test"));
  }
  if (j.contains("chamber")) {
    const auto& ch = j.at("chamber");
    c.n_sensors = ch.value("n_sensors", c.n_sensors);
    c.train_sensors = ch.value("train_sensors", c.train_sensors);
    if (ch.contains("deviations") && !ch.at("deviations").get<std::string>().empty())
      c.deviations = sensorsim::parse_deviation_spec(ch.at("deviations").get<std::string>());
    if (ch.contains("nominal")) {
      const auto& n = ch.at("nominal");
      c.nominal.n_arrays = n.value("n_arrays", c.nominal.n_arrays);
      if (n.contains("baseline_resistance"))
        c.nominal.baseline_resistance = n.at("baseline_resistance").get<std::vector<double>>();
      if (n.contains("sensitivity"))
        c.nominal.sensitivity = n.at("sensitivity").get<std::vector<double>>();
      c.nominal.heater_period_s = n.value("heater_period_s", c.nominal.heater_period_s);
      c.nominal.heater_mod_depth = n.value("heater_mod_depth", c.nominal.heater_mod_depth);
      c.nominal.harmonic_coupling = n.value("harmonic_coupling", c.nominal.harmonic_coupling);
      c.nominal.noise_sigma = n.value("noise_sigma", c.nominal.noise_sigma);
      c.nominal.g_half_ppb = n.value("g_half_ppb", c.nominal.g_half_ppb);
    }
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.hyper.hidden = m.value("hidden", c.hyper.hidden);
    c.hyper.window_len = m.value("window_len", c.hyper.window_len);
    c.hyper.learning_rate = m.value("learning_rate", c.hyper.learning_rate);
    c.hyper.max_epochs = m.value("max_epochs", c.hyper.max_epochs);
    c.hyper.batch_size = m.value("batch_size", c.hyper.batch_size);
    c.hyper.patience = m.value("patience", c.hyper.patience);
  }
  if (j.contains("attribution")) {
    c.attrib_baselines = j.at("attribution").value("baselines", c.attrib_baselines);
    c.attrib_path_steps = j.at("attribution").value("path_steps", c.attrib_path_steps);
  }
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    c.policy.k_mad = p.value("k_mad", c.policy.k_mad);
    c.policy.cosine_floor = p.value("cosine_floor", c.policy.cosine_floor);
    c.policy.corr_floor = p.value("corr_floor", c.policy.corr_floor);
  }
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

json metrics_to_json(const grunet::Metrics& m) {
  return {{"rmse_ppb", m.rmse}, {"mae_ppb", m.mae}, {"mape_pct", m.mape}};
}

// Durations stay out: report.json must be byte-reproducible.
json row_to_json(const MetricsRow& r) {
  return {{"train", metrics_to_json(r.train)}, {"test", metrics_to_json(r.test)}};
}

json flags_to_json(const detect::OutlierFlags& flags) {
  json sensors = json::array();
  for (const auto& s : flags.sensors) {
    json cor = json::array();
    for (detect::Metric m : s.corroborated_by) cor.push_back(detect::metric_name(m));
    sensors.push_back({{"sensor_id", s.sensor_id},
                       {"summed_euclidean", s.summed_euclidean},
                       {"mean_cosine", s.mean_cosine},
                       {"min_cosine", s.min_cosine},
                       {"mean_correlation", s.mean_correlation},
                       {"min_correlation", s.min_correlation},
                       {"flagged", s.flagged},
                       {"borderline", s.borderline},
                       {"corroborated_by", cor}});
  }
  return {{"median_sum", flags.median_sum},
          {"mad_sum", flags.mad_sum},
          {"threshold", flags.threshold},
          {"sensors", sensors}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_reports: cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("emit_reports: write failed for " + path);
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Simulated chamber with extracted features and per-cycle targets.
struct ChamberData {
  sensorsim::MultiSensorDataset ds;
  std::vector<featex::FeatureSeries> feats;
  std::vector<double> targets;  // shared by every sensor (same profile)
};

ChamberData make_chamber(const profiles::ConcentrationProfile& profile, int n_sensors,
                         const sensorsim::SensorConfig& nominal,
                         const std::vector<std::pair<int, double>>& deviations,
                         std::uint64_t seed, double raw_rate_hz, int threads) {
  ChamberData cd;
  cd.ds = sensorsim::simulate_chamber(profile, n_sensors, nominal, deviations, seed, raw_rate_hz,
                                      threads);
  cd.feats = featex::extract_all(cd.ds, 5, threads);
  cd.targets = cycle_targets(profiles::densify(profile, raw_rate_hz), nominal.heater_period_s);
  return cd;
}

// Features of a sensor subset, z-scored, plus the windows for training.
grunet::WindowSet windows_for(const ChamberData& cd, const std::vector<int>& sensor_indices,
                              const featex::NormStats& stats, int window_len) {
  std::vector<Matrix> mats;
  std::vector<std::vector<double>> targets;
  for (int idx : sensor_indices) {
    mats.push_back(featex::apply_normalizer(cd.feats[idx], stats).values);
    targets.push_back(cd.targets);
  }
  return grunet::build_windows(std::move(mats), std::move(targets), window_len);
}

featex::NormStats stats_for(const ChamberData& cd, const std::vector<int>& sensor_indices) {
  std::vector<featex::FeatureSeries> subset;
  for (int idx : sensor_indices) subset.push_back(cd.feats[idx]);
  return featex::fit_normalizer(subset);
}

std::vector<int> all_indices(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Pooled prediction metrics over a whole chamber, sensors in id order.
grunet::Metrics pooled_metrics(const grunet::GruParams& params, const featex::NormStats& stats,
                               const ChamberData& cd, int window_len) {
  std::vector<double> pred, truth;
  for (const auto& fs : cd.feats) {
    const Matrix norm = featex::apply_normalizer(fs, stats).values;
    const auto est = grunet::predict_series(params, norm, window_len);
    pred.insert(pred.end(), est.begin(), est.end());
    truth.insert(truth.end(), cd.targets.begin(), cd.targets.end());
  }
  return grunet::metrics(pred, truth);
}

struct DetectionCore {
  attrib::AttributionSet attrs;
  std::vector<ranking::SensorRanking> rankings;
  detect::SimilarityMatrix cos_m, corr_m, euc_m;
  detect::OutlierFlags flags;
};

DetectionCore detect_on(const grunet::GruParams& params, const featex::NormStats& stats,
                        const ChamberData& target, const attrib::WindowPool& baseline_pool,
                        const RunConfig& cfg, std::uint64_t baseline_seed) {
  std::vector<Matrix> series;
  std::vector<int> ids;
  for (const auto& fs : target.feats) {
    series.push_back(featex::apply_normalizer(fs, stats).values);
    ids.push_back(fs.sensor_id);
  }
  DetectionCore core;
  core.attrs = attrib::local_attributions(params, series, ids, target.feats[0].feature_names,
                                          cfg.hyper.window_len, baseline_pool,
                                          cfg.attrib_baselines, cfg.attrib_path_steps,
                                          baseline_seed, cfg.threads);
  core.rankings = ranking::all_sensor_rankings(core.attrs);
  core.cos_m = detect::pairwise(core.rankings, detect::Metric::Cosine);
  core.corr_m = detect::pairwise(core.rankings, detect::Metric::Correlation);
  core.euc_m = detect::pairwise(core.rankings, detect::Metric::Euclidean);
  core.flags = detect::flag_outliers(core.cos_m, core.corr_m, core.euc_m, cfg.policy);
  return core;
}

attrib::WindowPool pool_from(const grunet::WindowSet& windows) {
  return attrib::make_pool(windows.features, windows.window_len);
}

PruneRun run_once_prune(const RunConfig& cfg, int run_index) {
  const std::uint64_t seed = derive_seed(cfg.seed, kRunStream + static_cast<std::uint64_t>(run_index));
  const auto train_profile = make_profile(cfg.train_profile, derive_seed(seed, kProfileTrain));
  const auto val_profile = make_profile(cfg.val_profile, derive_seed(seed, kProfileVal));
  const auto test_profile = make_profile(cfg.test_profile, derive_seed(seed, kProfileTest));

  // Deviations live in the train-side chambers; the test chamber is clean.
  const auto train_cd = make_chamber(train_profile, cfg.n_sensors, cfg.nominal, cfg.deviations,
                                     derive_seed(seed, kChamberTrain), cfg.raw_rate_hz, cfg.threads);
  const auto val_cd = make_chamber(val_profile, cfg.n_sensors, cfg.nominal, cfg.deviations,
                                   derive_seed(seed, kChamberVal), cfg.raw_rate_hz, cfg.threads);
  const auto test_cd = make_chamber(test_profile, cfg.n_sensors, cfg.nominal, {},
                                    derive_seed(seed, kChamberTest), cfg.raw_rate_hz, cfg.threads);

  PruneRun run;
  run.run_index = run_index;
  for (const auto& [id, factor] : train_cd.ds.deviation_truth) run.truth.push_back(id);

  const auto all = all_indices(cfg.n_sensors);
  const auto stats_with = stats_for(train_cd, all);
  auto train_windows = windows_for(train_cd, all, stats_with, cfg.hyper.window_len);
  const auto val_windows = windows_for(val_cd, all, stats_with, cfg.hyper.window_len);
  const auto res_with =
      grunet::train(train_windows, val_windows, cfg.hyper, derive_seed(seed, kTrainWith));

  const auto core = detect_on(res_with.params, stats_with, train_cd, pool_from(train_windows),
                              cfg, derive_seed(seed, kBaselines));
  run.flags = core.flags;
  run.flagged = core.flags.flagged_ids();
  if (static_cast<int>(run.flagged.size()) == cfg.n_sensors)
    throw std::runtime_error("run_train_pruning: policy flagged every sensor (run " +
                             std::to_string(run_index) + "); aborting as degenerate");

  std::vector<int> keep;
  for (int i = 0; i < cfg.n_sensors; ++i)
    if (std::find(run.flagged.begin(), run.flagged.end(), train_cd.ds.responses[i].sensor_id) ==
        run.flagged.end())
      keep.push_back(i);

  const auto stats_without = stats_for(train_cd, keep);
  const auto pruned_windows = windows_for(train_cd, keep, stats_without, cfg.hyper.window_len);
  const auto pruned_val = windows_for(val_cd, keep, stats_without, cfg.hyper.window_len);
  const auto res_without =
      grunet::train(pruned_windows, pruned_val, cfg.hyper, derive_seed(seed, kTrainWithout));

  run.with_outliers.train = res_with.report.train_metrics;
  run.with_outliers.test = pooled_metrics(res_with.params, stats_with, test_cd, cfg.hyper.window_len);
  run.with_outliers.duration_s = res_with.report.wall_time_s;
  run.without_outliers.train = res_without.report.train_metrics;
  run.without_outliers.test =
      pooled_metrics(res_without.params, stats_without, test_cd, cfg.hyper.window_len);
  run.without_outliers.duration_s = res_without.report.wall_time_s;
  return run;
}

void write_manifest(const RunConfig& cfg, const std::string& dir,
                    const std::vector<std::string>& deterministic_files,
                    const std::vector<std::string>& volatile_files) {
  json j;
  j["tool"] = "sentinel";
  j["version"] = kToolVersion;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);
  j["config"] = config_to_json(cfg);
  // Files listed as deterministic are byte-identical across reruns of the
  // same config; volatile files carry wall-clock timings.
  j["deterministic_files"] = deterministic_files;
  j["volatile_files"] = volatile_files;
  write_json(dir + "/manifest.json", j);
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  return config_from_json(json::parse(in));
}

void save_config(const RunConfig& config, const std::string& path) {
  write_json(path, config_to_json(config));
}

std::string config_hash(const RunConfig& config) {
  const std::string text = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

profiles::ConcentrationProfile make_profile(const ProfileSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case ProfileSpec::Kind::Artificial:
      return profiles::gen_artificial(profiles::parse_segment_spec(spec.segments), seed,
                                      spec.jitter_sigma_ppb);
    case ProfileSpec::Kind::Realistic:
      return profiles::gen_realistic(spec.peak_hour, spec.base_ppb, spec.peak_ppb,
                                     spec.width_hours, seed, spec.jitter_sigma_ppb);
    case ProfileSpec::Kind::Csv:
      return profiles::import_csv(spec.path);
  }
  throw std::logic_error("make_profile: unreachable");
}

std::vector<double> cycle_targets(const profiles::DenseProfile& dense, double heater_period_s) {
  const double tpc_f = heater_period_s * dense.raw_rate_hz;
  const int tpc = static_cast<int>(std::round(tpc_f));
  if (tpc < 1 || std::abs(tpc_f - tpc) > 1e-9)
    throw std::invalid_argument("cycle_targets: heater period is not a whole tick count");
  if (dense.values.size() % static_cast<std::size_t>(tpc) != 0)
    throw std::invalid_argument("cycle_targets: profile length not divisible by cycle length");
  const std::size_t n_cycles = dense.values.size() / static_cast<std::size_t>(tpc);
  std::vector<double> targets(n_cycles);
  for (std::size_t i = 0; i < n_cycles; ++i) {
    double acc = 0.0;
    for (int k = 0; k < tpc; ++k) acc += dense.values[i * tpc + k];
    targets[i] = acc / tpc;
  }
  return targets;
}

std::vector<Matrix> normalized_features(const std::vector<featex::FeatureSeries>& feats,
                                        const featex::NormStats& stats) {
  std::vector<Matrix> out;
  out.reserve(feats.size());
  for (const auto& fs : feats) out.push_back(featex::apply_normalizer(fs, stats).values);
  return out;
}

PruningReport run_train_pruning(const RunConfig& config) {
  if (config.repetitions < 1)
    throw std::invalid_argument("run_train_pruning: repetitions must be >= 1");
  PruningReport report;
  for (int r = 0; r < config.repetitions; ++r) report.runs.push_back(run_once_prune(config, r));

  auto average = [&](auto pick) {
    MetricsRow avg;
    for (const auto& run : report.runs) {
      const MetricsRow& row = pick(run);
      avg.train.rmse += row.train.rmse;
      avg.train.mae += row.train.mae;
      avg.train.mape += row.train.mape;
      avg.test.rmse += row.test.rmse;
      avg.test.mae += row.test.mae;
      avg.test.mape += row.test.mape;
      avg.duration_s += row.duration_s;
    }
    const double n = static_cast<double>(report.runs.size());
    avg.train.rmse /= n;
    avg.train.mae /= n;
    avg.train.mape /= n;
    avg.test.rmse /= n;
    avg.test.mae /= n;
    avg.test.mape /= n;
    avg.duration_s /= n;
    return avg;
  };
  report.avg_with = average([](const PruneRun& r) -> const MetricsRow& { return r.with_outliers; });
  report.avg_without =
      average([](const PruneRun& r) -> const MetricsRow& { return r.without_outliers; });
  return report;
}

DetectionReport run_test_detection(const RunConfig& config) {
  const std::uint64_t seed = derive_seed(config.seed, kDetectStream);
  const int n_train = (config.train_sensors > 0) ? config.train_sensors : config.n_sensors;

  const auto train_profile = make_profile(config.train_profile, derive_seed(seed, kProfileTrain));
  const auto val_profile = make_profile(config.val_profile, derive_seed(seed, kProfileVal));
  const auto test_profile = make_profile(config.test_profile, derive_seed(seed, kProfileTest));

  // Clean training chamber; deviations only in the test chamber.
  const auto train_cd = make_chamber(train_profile, n_train, config.nominal, {},
                                     derive_seed(seed, kChamberTrain), config.raw_rate_hz,
                                     config.threads);
  const auto val_cd = make_chamber(val_profile, n_train, config.nominal, {},
                                   derive_seed(seed, kChamberVal), config.raw_rate_hz,
                                   config.threads);
  const auto test_cd = make_chamber(test_profile, config.n_sensors, config.nominal,
                                    config.deviations, derive_seed(seed, kChamberTest),
                                    config.raw_rate_hz, config.threads);

  const auto all = all_indices(n_train);
  const auto stats = stats_for(train_cd, all);
  auto train_windows = windows_for(train_cd, all, stats, config.hyper.window_len);
  const auto val_windows = windows_for(val_cd, all, stats, config.hyper.window_len);
  const auto trained =
      grunet::train(train_windows, val_windows, config.hyper, derive_seed(seed, kTrainWith));

  const auto core = detect_on(trained.params, stats, test_cd, pool_from(train_windows), config,
                              derive_seed(seed, kBaselines));
  if (static_cast<int>(core.flags.flagged_ids().size()) == config.n_sensors)
    throw std::runtime_error("run_test_detection: policy flagged every sensor; aborting as degenerate");

  DetectionReport report;
  report.flags = core.flags;
  report.truth = test_cd.ds.deviation_truth;
  report.rankings = core.rankings;
  report.attributions = core.attrs;
  report.cosine_m = core.cos_m;
  report.correlation_m = core.corr_m;
  report.euclidean_m = core.euc_m;
  report.train_report = trained.report;

  std::vector<double> sums;
  for (const auto& s : core.flags.sensors) sums.push_back(s.summed_euclidean);
  for (const auto& [id, factor] : report.truth) {
    GradeOutcome g;
    g.sensor_id = id;
    g.factor = factor;
    g.deviation_pct = std::abs(1.0 - factor) * 100.0;
    for (const auto& s : core.flags.sensors)
      if (s.sensor_id == id) {
        g.flagged = s.flagged;
        g.primary = s.summed_euclidean > core.flags.threshold;
        g.summed_euclidean = s.summed_euclidean;
      }
    g.rank_by_sum = 1;
    for (double v : sums)
      if (v > g.summed_euclidean) ++g.rank_by_sum;
    report.grades.push_back(g);
  }
  for (int id : core.flags.flagged_ids())
    if (!report.truth.count(id)) report.false_positives.push_back(id);
  return report;
}

void emit_reports(const PruningReport& report, const RunConfig& config, const std::string& dir) {
  std::filesystem::create_directories(dir);

  json runs = json::array();
  for (const auto& run : report.runs)
    runs.push_back({{"run_index", run.run_index},
                    {"flagged", run.flagged},
                    {"truth", run.truth},
                    {"with_outliers", row_to_json(run.with_outliers)},
                    {"without_outliers", row_to_json(run.without_outliers)},
                    {"flags", flags_to_json(run.flags)}});
  json j;
  j["label"] = config.label;
  j["config_hash"] = config_hash(config);
  j["runs"] = runs;
  j["average"] = {{"with_outliers", row_to_json(report.avg_with)},
                  {"without_outliers", row_to_json(report.avg_without)}};
  write_json(dir + "/report.json", j);

  // Row order: with outliers first, then without.
  std::string table =
      "rmse_train_ppb,mae_train_ppb,mape_train_pct,rmse_test_ppb,mae_test_ppb,mape_test_pct,"
      "duration_train_s\n";
  for (const MetricsRow* row : {&report.avg_with, &report.avg_without}) {
    table += csv::format_double(row->train.rmse) + ',' + csv::format_double(row->train.mae) +
             ',' + csv::format_double(row->train.mape) + ',' + csv::format_double(row->test.rmse) +
             ',' + csv::format_double(row->test.mae) + ',' + csv::format_double(row->test.mape) +
             ',' + csv::format_double(row->duration_s) + '\n';
  }
  write_text(dir + "/table.csv", table);

  json timings;
  timings["per_run"] = json::array();
  for (const auto& run : report.runs)
    timings["per_run"].push_back({{"run_index", run.run_index},
                                  {"with_outliers_s", run.with_outliers.duration_s},
                                  {"without_outliers_s", run.without_outliers.duration_s}});
  timings["avg_with_outliers_s"] = report.avg_with.duration_s;
  timings["avg_without_outliers_s"] = report.avg_without.duration_s;
  write_json(dir + "/timings.json", timings);

  save_config(config, dir + "/config.json");
  write_manifest(config, dir, {"report.json", "config.json"}, {"table.csv", "timings.json"});
}

void emit_reports(const DetectionReport& report, const RunConfig& config, const std::string& dir) {
  std::filesystem::create_directories(dir);

  json grades = json::array();
  for (const auto& g : report.grades)
    grades.push_back({{"sensor_id", g.sensor_id},
                      {"factor", g.factor},
                      {"deviation_pct", g.deviation_pct},
                      {"flagged", g.flagged},
                      {"primary", g.primary},
                      {"summed_euclidean", g.summed_euclidean},
                      {"rank_by_sum", g.rank_by_sum}});
  json truth = json::object();
  for (const auto& [id, factor] : report.truth) truth[std::to_string(id)] = factor;

  json j;
  j["label"] = config.label;
  j["config_hash"] = config_hash(config);
  j["truth"] = truth;
  j["grades"] = grades;
  j["false_positives"] = report.false_positives;
  j["flags"] = flags_to_json(report.flags);
  j["train"] = {{"loss_history", report.train_report.loss_history},
                {"best_epoch", report.train_report.best_epoch},
                {"train_metrics", metrics_to_json(report.train_report.train_metrics)},
                {"val_metrics", metrics_to_json(report.train_report.val_metrics)}};
  write_json(dir + "/report.json", j);

  detect::export_flags_json(report.flags, dir + "/flags.json");
  ranking::export_rankings(report.rankings, dir + "/rankings.json");
  detect::export_similarity_csv(report.cosine_m, dir + "/similarity_cosine.csv");
  detect::export_similarity_csv(report.correlation_m, dir + "/similarity_correlation.csv");
  detect::export_similarity_csv(report.euclidean_m, dir + "/similarity_euclidean.csv");

  std::vector<std::string> deterministic = {"report.json",  "flags.json",
                                            "rankings.json", "similarity_cosine.csv",
                                            "similarity_correlation.csv", "similarity_euclidean.csv",
                                            "config.json"};
  for (int id : report.attributions.sensor_ids) {
    const std::string name = "heatmap_s" + std::to_string(id) + ".csv";
    attrib::heatmap_export(report.attributions, id, dir + "/" + name);
    deterministic.push_back(name);
  }

  json timings;
  timings["train_wall_s"] = report.train_report.wall_time_s;
  write_json(dir + "/timings.json", timings);

  save_config(config, dir + "/config.json");
  write_manifest(config, dir, deterministic, {"timings.json"});
}

}  // namespace sentinel::pipeline
