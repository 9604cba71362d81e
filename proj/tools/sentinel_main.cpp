// SPDX-License-Identifier: Apache-2.0
// Command-line front end: profile generation, chamber simulation, model
// training, attribution, ranking, and outlier detection, plus the two
// end-to-end run modes (train-side pruning and test-side detection).
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sentinel/attrib.hpp"
#include "sentinel/csv.hpp"
#include "sentinel/detect.hpp"
#include "sentinel/featex.hpp"
#include "sentinel/grunet.hpp"
#include "sentinel/pipeline.hpp"
#include "sentinel/profiles.hpp"
#include "sentinel/ranking.hpp"
#include "sentinel/sensorsim.hpp"

namespace {

using namespace sentinel;

std::vector<double> dataset_targets(const sensorsim::MultiSensorDataset& ds) {
  const auto& r0 = ds.responses.at(0);
  return pipeline::cycle_targets(profiles::densify(ds.profile, r0.raw_rate_hz),
                                 r0.heater_period_s);
}

grunet::WindowSet dataset_windows(const sensorsim::MultiSensorDataset& ds,
                                  const featex::NormStats& stats, int window_len, int threads) {
  const auto feats = featex::extract_all(ds, 5, threads);
  const auto targets = dataset_targets(ds);
  std::vector<Matrix> mats;
  std::vector<std::vector<double>> tgts;
  for (const auto& fs : feats) {
    mats.push_back(featex::apply_normalizer(fs, stats).values);
    tgts.push_back(targets);
  }
  return grunet::build_windows(std::move(mats), std::move(tgts), window_len);
}

int cmd_train(const std::string& dataset_dir, const std::string& val_dir,
              const std::string& out_path, const grunet::Hyper& hyper, std::uint64_t seed,
              int threads) {
  const auto ds = sensorsim::import_dataset(dataset_dir);
  const auto feats = featex::extract_all(ds, 5, threads);
  const auto stats = featex::fit_normalizer(feats);
  const auto train_set = dataset_windows(ds, stats, hyper.window_len, threads);
  grunet::WindowSet val_set;
  if (!val_dir.empty())
    val_set = dataset_windows(sensorsim::import_dataset(val_dir), stats, hyper.window_len, threads);
  const auto result = grunet::train(train_set, val_set, hyper, seed);
  grunet::save_model({result.params, stats, hyper, seed}, out_path);
  std::printf("model saved to %s\n", out_path.c_str());
  std::printf("train rmse %.4f ppb, mae %.4f ppb, mape %.3f%% (best epoch %d, %.1fs)\n",
              result.report.train_metrics.rmse, result.report.train_metrics.mae,
              result.report.train_metrics.mape, result.report.best_epoch,
              result.report.wall_time_s);
  if (!val_set.empty())
    std::printf("val   rmse %.4f ppb, mae %.4f ppb, mape %.3f%%\n",
                result.report.val_metrics.rmse, result.report.val_metrics.mae,
                result.report.val_metrics.mape);
  return 0;
}

// Pooled per-sensor series predictions against the chamber profile.
void predict_dataset(const grunet::ModelArtifact& model, const sensorsim::MultiSensorDataset& ds,
                     int threads, std::vector<int>& ids, std::vector<std::vector<double>>& preds,
                     std::vector<double>& targets) {
  const auto feats = featex::extract_all(ds, 5, threads);
  targets = dataset_targets(ds);
  for (const auto& fs : feats) {
    const Matrix norm = featex::apply_normalizer(fs, model.stats).values;
    ids.push_back(fs.sensor_id);
    preds.push_back(grunet::predict_series(model.params, norm, model.hyper.window_len));
  }
}

int cmd_predict(const std::string& model_path, const std::string& dataset_dir,
                const std::string& out_path, int threads) {
  const auto model = grunet::load_model(model_path);
  const auto ds = sensorsim::import_dataset(dataset_dir);
  std::vector<int> ids;
  std::vector<std::vector<double>> preds;
  std::vector<double> targets;
  predict_dataset(model, ds, threads, ids, preds, targets);

  std::FILE* out = std::fopen(out_path.c_str(), "w");
  if (!out) throw std::runtime_error("predict: cannot open " + out_path);
  std::fprintf(out, "sensor_id,cycle,truth_ppb,pred_ppb\n");
  for (std::size_t s = 0; s < ids.size(); ++s)
    for (std::size_t i = 0; i < preds[s].size(); ++i)
      std::fprintf(out, "%d,%zu,%s,%s\n", ids[s], i, csv::format_double(targets[i]).c_str(),
                   csv::format_double(preds[s][i]).c_str());
  std::fclose(out);
  std::printf("predictions written to %s\n", out_path.c_str());
  return 0;
}

int cmd_metrics(const std::string& model_path, const std::string& dataset_dir,
                const std::string& out_path, int threads) {
  const auto model = grunet::load_model(model_path);
  const auto ds = sensorsim::import_dataset(dataset_dir);
  std::vector<int> ids;
  std::vector<std::vector<double>> preds;
  std::vector<double> targets;
  predict_dataset(model, ds, threads, ids, preds, targets);
  std::vector<double> pooled_pred, pooled_truth;
  for (const auto& p : preds) {
    pooled_pred.insert(pooled_pred.end(), p.begin(), p.end());
    pooled_truth.insert(pooled_truth.end(), targets.begin(), targets.end());
  }
  const auto m = grunet::metrics(pooled_pred, pooled_truth);
  nlohmann::json j = {{"rmse_ppb", m.rmse}, {"mae_ppb", m.mae}, {"mape_pct", m.mape}};
  const std::string text = j.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!out_path.empty()) {
    std::FILE* out = std::fopen(out_path.c_str(), "w");
    if (!out) throw std::runtime_error("metrics: cannot open " + out_path);
    std::fputs(text.c_str(), out);
    std::fclose(out);
  }
  return 0;
}

int cmd_explain(const std::string& model_path, const std::string& dataset_dir,
                const std::string& baseline_dir, const std::string& out_dir, int n_baselines,
                int n_path_steps, std::uint64_t seed, int threads) {
  const auto model = grunet::load_model(model_path);
  const auto ds = sensorsim::import_dataset(dataset_dir);
  const auto feats = featex::extract_all(ds, 5, threads);
  std::vector<Matrix> series;
  std::vector<int> ids;
  for (const auto& fs : feats) {
    series.push_back(featex::apply_normalizer(fs, model.stats).values);
    ids.push_back(fs.sensor_id);
  }
  std::vector<Matrix> pool_series = series;
  if (!baseline_dir.empty()) {
    pool_series.clear();
    const auto bds = sensorsim::import_dataset(baseline_dir);
    for (const auto& fs : featex::extract_all(bds, 5, threads))
      pool_series.push_back(featex::apply_normalizer(fs, model.stats).values);
  }
  const auto pool = attrib::make_pool(std::move(pool_series), model.hyper.window_len);
  const auto attrs =
      attrib::local_attributions(model.params, series, ids, feats[0].feature_names,
                                 model.hyper.window_len, pool, n_baselines, n_path_steps, seed,
                                 threads);
  attrib::export_attributions(attrs, out_dir);
  std::printf("attributions for %zu sensors written to %s\n", ids.size(), out_dir.c_str());
  return 0;
}

int cmd_rank(const std::string& attrib_dir, const std::string& out_path,
             const std::string& global_path) {
  const auto attrs = attrib::import_attributions(attrib_dir);
  ranking::export_rankings(ranking::all_sensor_rankings(attrs), out_path);
  std::printf("sensor rankings written to %s\n", out_path.c_str());
  if (!global_path.empty()) {
    const auto g = ranking::global_importance(attrs);
    nlohmann::json j;
    j["n_samples"] = g.n_samples;
    j["feature_names"] = g.feature_names;
    j["importance"] = g.importance;
    nlohmann::json by_name = nlohmann::json::object();
    for (std::size_t i = 0; i < g.feature_names.size(); ++i)
      by_name[g.feature_names[i]] = g.importance[i];
    j["features"] = by_name;
    std::FILE* out = std::fopen(global_path.c_str(), "w");
    if (!out) throw std::runtime_error("rank: cannot open " + global_path);
    const std::string text = j.dump(2) + "\n";
    std::fputs(text.c_str(), out);
    std::fclose(out);
    std::printf("global importance written to %s\n", global_path.c_str());
  }
  return 0;
}

int cmd_detect(const std::string& rankings_path, const std::string& out_dir,
               const detect::Policy& policy) {
  const auto rankings = ranking::import_rankings(rankings_path);
  const auto cos_m = detect::pairwise(rankings, detect::Metric::Cosine);
  const auto corr_m = detect::pairwise(rankings, detect::Metric::Correlation);
  const auto euc_m = detect::pairwise(rankings, detect::Metric::Euclidean);
  const auto flags = detect::flag_outliers(cos_m, corr_m, euc_m, policy);
  std::filesystem::create_directories(out_dir);
  detect::export_flags_json(flags, out_dir + "/flags.json");
  detect::export_similarity_csv(cos_m, out_dir + "/similarity_cosine.csv");
  detect::export_similarity_csv(corr_m, out_dir + "/similarity_correlation.csv");
  detect::export_similarity_csv(euc_m, out_dir + "/similarity_euclidean.csv");
  const auto flagged = flags.flagged_ids();
  std::printf("flagged %zu of %zu sensors:", flagged.size(), flags.sensors.size());
  for (int id : flagged) std::printf(" %d", id);
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sentinel: simulated gas-sensor deviation detection"};
  app.set_version_flag("--version", std::string(pipeline::kToolVersion));
  app.require_subcommand(1);

  // --- profile ---
  auto* profile = app.add_subcommand("profile", "generate or import concentration profiles");
  profile->require_subcommand(1);
  std::string seg_spec, out_path, in_path;
  std::uint64_t seed = 1;
  double jitter = 0.0;
  int peak_hour = 14;
  double base_ppb = 10.0, peak_ppb = 60.0, width_hours = 3.0;

  auto* gen_art = profile->add_subcommand("gen-artificial", "piecewise segments over 24 h");
  gen_art->add_option("--segments", seg_spec, "e.g. 720:20,120:0-100,600:5")->required();
  gen_art->add_option("--seed", seed);
  gen_art->add_option("--jitter", jitter, "per-sample noise sigma, ppb");
  gen_art->add_option("--out", out_path)->required();
  gen_art->callback([&] {
    profiles::export_csv(
        profiles::gen_artificial(profiles::parse_segment_spec(seg_spec), seed, jitter), out_path);
  });

  auto* gen_real = profile->add_subcommand("gen-realistic", "diurnal peak over 24 h");
  gen_real->add_option("--peak-hour", peak_hour);
  gen_real->add_option("--base", base_ppb, "ppb");
  gen_real->add_option("--peak", peak_ppb, "ppb");
  gen_real->add_option("--width", width_hours, "hours");
  gen_real->add_option("--seed", seed);
  gen_real->add_option("--jitter", jitter, "per-sample noise sigma, ppb");
  gen_real->add_option("--out", out_path)->required();
  gen_real->callback([&] {
    profiles::export_csv(
        profiles::gen_realistic(peak_hour, base_ppb, peak_ppb, width_hours, seed, jitter),
        out_path);
  });

  auto* prof_import = profile->add_subcommand("import", "validate and re-emit a profile CSV");
  prof_import->add_option("--in", in_path)->required();
  prof_import->add_option("--out", out_path)->required();
  prof_import->callback([&] { profiles::export_csv(profiles::import_csv(in_path), out_path); });

  // --- simulate ---
  auto* simulate = app.add_subcommand("simulate", "simulate a multi-sensor chamber");
  std::string profile_path, deviate_spec, out_dir;
  int n_sensors = 20, threads = 0;
  double raw_rate = 1.0;
  sensorsim::SensorConfig nominal;
  simulate->add_option("--profile", profile_path, "profile CSV")->required();
  simulate->add_option("--sensors", n_sensors);
  simulate->add_option("--deviate", deviate_spec, "e.g. 6:0.95,2:0.90");
  simulate->add_option("--seed", seed);
  simulate->add_option("--rate", raw_rate, "samples per second");
  simulate->add_option("--heater-period", nominal.heater_period_s, "seconds");
  simulate->add_option("--noise-sigma", nominal.noise_sigma);
  simulate->add_option("--threads", threads);
  simulate->add_option("--out", out_dir)->required();
  simulate->callback([&] {
    const auto prof = profiles::import_csv(profile_path);
    const auto devs = sensorsim::parse_deviation_spec(deviate_spec);
    sensorsim::export_dataset(
        sensorsim::simulate_chamber(prof, n_sensors, nominal, devs, seed, raw_rate, threads),
        out_dir);
    std::printf("dataset written to %s\n", out_dir.c_str());
  });

  // --- train / predict / metrics ---
  auto* train = app.add_subcommand("train", "train the concentration estimator");
  std::string dataset_dir, val_dir, model_path;
  grunet::Hyper hyper;
  train->add_option("--dataset", dataset_dir)->required();
  train->add_option("--val-dataset", val_dir, "early-stopping chamber");
  train->add_option("--out", model_path)->required();
  train->add_option("--hidden", hyper.hidden);
  train->add_option("--window", hyper.window_len);
  train->add_option("--lr", hyper.learning_rate);
  train->add_option("--epochs", hyper.max_epochs);
  train->add_option("--batch", hyper.batch_size);
  train->add_option("--patience", hyper.patience);
  train->add_option("--seed", seed);
  train->add_option("--threads", threads);
  train->callback([&] { cmd_train(dataset_dir, val_dir, model_path, hyper, seed, threads); });

  auto* predict = app.add_subcommand("predict", "per-cycle concentration estimates");
  predict->add_option("--model", model_path)->required();
  predict->add_option("--dataset", dataset_dir)->required();
  predict->add_option("--out", out_path)->required();
  predict->add_option("--threads", threads);
  predict->callback([&] { cmd_predict(model_path, dataset_dir, out_path, threads); });

  auto* metrics = app.add_subcommand("metrics", "pooled RMSE/MAE/MAPE on a dataset");
  metrics->add_option("--model", model_path)->required();
  metrics->add_option("--dataset", dataset_dir)->required();
  metrics->add_option("--out", out_path, "also write JSON here");
  metrics->add_option("--threads", threads);
  metrics->callback([&] { cmd_metrics(model_path, dataset_dir, out_path, threads); });

  // --- explain / rank / detect ---
  auto* explain = app.add_subcommand("explain", "per-window feature attributions");
  std::string baseline_dir;
  int n_baselines = 8, n_path_steps = 64;
  explain->add_option("--model", model_path)->required();
  explain->add_option("--dataset", dataset_dir)->required();
  explain->add_option("--baseline-dataset", baseline_dir, "pool for baselines (default: dataset)");
  explain->add_option("--baselines", n_baselines);
  explain->add_option("--path-steps", n_path_steps);
  explain->add_option("--seed", seed);
  explain->add_option("--threads", threads);
  explain->add_option("--out", out_dir)->required();
  explain->callback([&] {
    cmd_explain(model_path, dataset_dir, baseline_dir, out_dir, n_baselines, n_path_steps, seed,
                threads);
  });

  auto* rank = app.add_subcommand("rank", "per-sensor feature importance rankings");
  std::string attrib_dir, global_path;
  rank->add_option("--attrib", attrib_dir, "directory written by explain")->required();
  rank->add_option("--out", out_path)->required();
  rank->add_option("--global", global_path, "also write fleet-wide importance JSON");
  rank->callback([&] { cmd_rank(attrib_dir, out_path, global_path); });

  auto* detect_cmd = app.add_subcommand("detect", "flag deviating sensors from rankings");
  std::string rankings_path;
  detect::Policy policy;
  detect_cmd->add_option("--rankings", rankings_path)->required();
  detect_cmd->add_option("--k-mad", policy.k_mad);
  detect_cmd->add_option("--cos-floor", policy.cosine_floor);
  detect_cmd->add_option("--corr-floor", policy.corr_floor);
  detect_cmd->add_option("--out", out_dir)->required();
  detect_cmd->callback([&] { cmd_detect(rankings_path, out_dir, policy); });

  // --- run ---
  auto* run = app.add_subcommand("run", "end-to-end pipelines from a config file");
  run->require_subcommand(1);
  std::string config_path, out_override;

  auto* run_prune = run->add_subcommand("prune", "train-side pruning and retraining study");
  run_prune->add_option("--config", config_path)->required();
  run_prune->add_option("--out", out_override, "override output directory");
  run_prune->callback([&] {
    auto cfg = pipeline::load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    const auto report = pipeline::run_train_pruning(cfg);
    pipeline::emit_reports(report, cfg, cfg.output_dir);
    std::printf("pruning study (%d runs) written to %s\n", cfg.repetitions,
                cfg.output_dir.c_str());
    std::printf("avg test rmse: with outliers %.4f ppb, without %.4f ppb\n",
                report.avg_with.test.rmse, report.avg_without.test.rmse);
  });

  auto* run_detect = run->add_subcommand("detect", "test-side deviation detection study");
  run_detect->add_option("--config", config_path)->required();
  run_detect->add_option("--out", out_override, "override output directory");
  run_detect->callback([&] {
    auto cfg = pipeline::load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    const auto report = pipeline::run_test_detection(cfg);
    pipeline::emit_reports(report, cfg, cfg.output_dir);
    std::printf("detection study written to %s\n", cfg.output_dir.c_str());
    for (const auto& g : report.grades)
      std::printf("sensor %d (%.0f%% deviation): %s, summed distance rank %d\n", g.sensor_id,
                  g.deviation_pct, g.flagged ? "flagged" : "missed", g.rank_by_sum);
    std::printf("false positives: %zu\n", report.false_positives.size());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
