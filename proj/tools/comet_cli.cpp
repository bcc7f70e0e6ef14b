// comet: batch CLI for the COMET-SG1 forecaster and its evaluation harness.
//
// Subcommands: gen, train, eval, rollout, bench. All randomness flows from
// an explicit --seed through the portable project RNG; every subcommand is
// reproducible byte-for-byte given the same flags and inputs.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "comet/datagen.hpp"
#include "comet/evalkit.hpp"
#include "comet/forecaster.hpp"
#include "comet/knn.hpp"
#include "comet/lstm.hpp"
#include "comet/mlp.hpp"
#include "comet/model_io.hpp"
#include "comet/series_io.hpp"
#include "comet/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw comet::data_error("cannot hash missing file: " + path);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Written atomically at run end; hashes let a consumer verify the artifacts.
void write_manifest(const std::string& dir, const std::string& command,
                    const json& config, const std::vector<std::string>& outputs) {
  json manifest;
  manifest["tool"] = "comet";
  manifest["version"] = kToolVersion;
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["outputs"] = json::array();
  for (const std::string& path : outputs) {
    json entry;
    entry["path"] = fs::path(path).filename().string();
    entry["fnv1a64"] = hex64(fnv1a64_file(path));
    manifest["outputs"].push_back(entry);
  }
  const fs::path final_path = fs::path(dir) / "manifest.json";
  const fs::path tmp_path = fs::path(dir) / "manifest.json.tmp";
  {
    std::ofstream out(tmp_path);
    if (!out) throw comet::data_error("cannot write " + tmp_path.string());
    out << manifest.dump(2) << '\n';
  }
  fs::rename(tmp_path, final_path);
}

void write_train_log(const comet::TrainReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw comet::data_error("cannot write " + path);
  out << "epoch,mean_loss,val_mae\n";
  char buf[96];
  for (std::size_t e = 0; e < report.epoch_mean_loss.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", e,
                  report.epoch_mean_loss[e], report.epoch_val_mae[e]);
    out << buf;
  }
}

struct GenFlags {
  comet::GenConfig config;
  std::string out = "series.csv";
};

struct TrainFlags {
  std::string series_path;
  std::string model_out = "model.csg1";
  std::string log_out;
  std::size_t dim = 8;
  std::size_t k = 8;
  comet::TrainConfig config;
  double train_fraction = 0.7;
  double validation_fraction = 0.1;
};

struct BenchFlags {
  std::string out_dir = "bench_out";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3};
  comet::GenConfig gen;
  std::size_t dim = 8;
  std::size_t k = 8;
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  double huber_delta = 1.0;
  comet::EvalConfig eval;
};

int run_gen(const GenFlags& flags) {
  const comet::TimeSeries series = comet::generate(flags.config);
  comet::write_series_csv(series, flags.out);
  json cfg;
  cfg["seed"] = flags.config.seed;
  cfg["length"] = flags.config.length;
  cfg["regime_mean_duration"] = flags.config.regime_mean_duration;
  cfg["drift_min"] = flags.config.drift_min;
  cfg["drift_max"] = flags.config.drift_max;
  cfg["volatility_min"] = flags.config.volatility_min;
  cfg["volatility_max"] = flags.config.volatility_max;
  cfg["mean_reversion_rate"] = flags.config.mean_reversion_rate;
  cfg["cycle_amplitude"] = flags.config.cycle_amplitude;
  cfg["cycle_period"] = flags.config.cycle_period;
  const fs::path dir = fs::path(flags.out).has_parent_path()
                           ? fs::path(flags.out).parent_path()
                           : fs::path(".");
  write_manifest(dir.string(), "gen", cfg, {flags.out});
  std::cout << "wrote " << flags.out << " (" << series.size() << " rows)\n";
  return 0;
}

int run_train(const TrainFlags& flags) {
  const comet::TimeSeries series = comet::read_series_csv(flags.series_path);
  comet::WindowSpec window_spec;
  comet::SplitSpec split_spec{flags.train_fraction, flags.validation_fraction};
  const comet::SplitResult parts =
      comet::split(series, split_spec, window_spec.long_len + 2);
  auto [model, report] = comet::train(parts.train, parts.validation,
                                      window_spec, flags.config, flags.dim,
                                      flags.k);
  comet::save_model(model, flags.model_out);
  const std::string log_path =
      flags.log_out.empty() ? flags.model_out + ".log.csv" : flags.log_out;
  write_train_log(report, log_path);

  json cfg;
  cfg["series"] = flags.series_path;
  cfg["dim"] = flags.dim;
  cfg["k"] = flags.k;
  cfg["epochs"] = flags.config.epochs;
  cfg["learning_rate"] = flags.config.learning_rate;
  cfg["huber_delta"] = flags.config.huber_delta;
  cfg["seed"] = flags.config.seed;
  cfg["memory_rebuild"] = flags.config.memory_rebuild;
  cfg["train_fraction"] = flags.train_fraction;
  cfg["validation_fraction"] = flags.validation_fraction;
  const fs::path dir = fs::path(flags.model_out).has_parent_path()
                           ? fs::path(flags.model_out).parent_path()
                           : fs::path(".");
  write_manifest(dir.string(), "train", cfg, {flags.model_out, log_path});
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", report.final_val_mae);
  std::cout << "wrote " << flags.model_out << " (val MAE " << buf << ")\n";
  return 0;
}

int run_eval(const std::vector<std::string>& model_paths,
             const std::string& series_path,
             std::vector<std::size_t> horizons, std::size_t stride,
             const std::string& out_dir) {
  const comet::TimeSeries series = comet::read_series_csv(series_path);
  fs::create_directories(out_dir);

  comet::EvalConfig eval;
  if (!horizons.empty()) eval.horizons_short = horizons;
  eval.anchor_stride = stride;
  eval.rollout_horizon = 0; // no trace files from eval

  std::vector<comet::ModelSeedReport> reports;
  for (const std::string& path : model_paths) {
    comet::CometForecaster model(comet::load_model(path));
    comet::ModelSeedReport report =
        comet::evaluate_model(model, 0, fs::path(path).stem().string(), series,
                              eval);
    report.param_bytes = model.parameter_bytes();
    report.memory_bytes = model.memory_bytes();
    reports.push_back(std::move(report));
  }
  const std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  const std::string footprint_path =
      (fs::path(out_dir) / "footprint.csv").string();
  comet::write_metrics_csv(reports, metrics_path);
  comet::write_footprint_csv(reports, footprint_path);

  json cfg;
  cfg["models"] = model_paths;
  cfg["series"] = series_path;
  cfg["horizons"] = eval.horizons_short;
  cfg["stride"] = stride;
  write_manifest(out_dir, "eval", cfg, {metrics_path, footprint_path});
  std::cout << "wrote " << metrics_path << " and " << footprint_path << "\n";
  return 0;
}

int run_rollout(const std::string& model_path, const std::string& series_path,
                std::size_t anchor, std::size_t horizon, bool trace_state,
                const std::string& out) {
  const comet::CometModel model = comet::load_model(model_path);
  const comet::TimeSeries series = comet::read_series_csv(series_path);
  if (anchor == 0) anchor = model.window_spec.long_len;
  if (anchor > series.size())
    throw comet::data_error("anchor beyond end of series");
  if (anchor < model.window_spec.long_len)
    throw comet::data_error("anchor leaves insufficient history");

  comet::TimeSeries history;
  history.values.assign(series.values.begin(), series.values.begin() + anchor);
  const comet::RolloutResult result =
      comet::rollout(model, history, horizon, trace_state);

  std::ofstream csv(out);
  if (!csv) throw comet::data_error("cannot write " + out);
  csv << "t,predicted,actual,dx_mem";
  if (trace_state)
    for (std::size_t d = 0; d < model.latent_dim(); ++d) csv << ",z_" << d;
  csv << '\n';
  char buf[40];
  for (std::size_t h = 0; h < horizon; ++h) {
    csv << anchor + h << ',';
    std::snprintf(buf, sizeof(buf), "%.9g", result.predictions[h]);
    csv << buf << ',';
    if (anchor + h < series.size()) {
      std::snprintf(buf, sizeof(buf), "%.9g", series[anchor + h]);
      csv << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.9g", result.per_step_dx[h]);
    csv << ',' << buf;
    if (trace_state)
      for (double z : result.states[h].z) {
        std::snprintf(buf, sizeof(buf), "%.9g", z);
        csv << ',' << buf;
      }
    csv << '\n';
  }
  csv.close();

  json cfg;
  cfg["model"] = model_path;
  cfg["series"] = series_path;
  cfg["anchor"] = anchor;
  cfg["horizon"] = horizon;
  cfg["trace_state"] = trace_state;
  const fs::path dir = fs::path(out).has_parent_path()
                           ? fs::path(out).parent_path()
                           : fs::path(".");
  write_manifest(dir.string(), "rollout", cfg, {out});
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_bench(const BenchFlags& flags) {
  fs::create_directories(flags.out_dir);
  comet::WindowSpec window_spec;
  comet::SplitSpec split_spec;
  comet::EvalConfig eval = flags.eval;
  eval.seeds = flags.seeds;

  comet::TrainConfig comet_config;
  comet_config.epochs = flags.epochs;
  comet_config.learning_rate = flags.learning_rate;
  comet_config.huber_delta = flags.huber_delta;

  const std::size_t dim = flags.dim;
  const std::size_t k = flags.k;
  std::vector<comet::NamedFactory> factories;
  factories.push_back(
      {"knn", [](std::uint64_t, const comet::TimeSeries&) {
         return std::make_unique<comet::KnnForecaster>();
       }});
  factories.push_back(
      {"mlp", [&](std::uint64_t seed, const comet::TimeSeries&) {
         comet::MlpConfig config;
         config.seed = seed;
         config.epochs = flags.epochs;
         config.learning_rate = flags.learning_rate;
         return std::make_unique<comet::MlpForecaster>(config);
       }});
  factories.push_back(
      {"lstm", [&](std::uint64_t seed, const comet::TimeSeries&) {
         comet::LstmConfig config;
         config.seed = seed;
         config.epochs = flags.epochs;
         config.learning_rate = flags.learning_rate;
         return std::make_unique<comet::LstmForecaster>(config);
       }});
  factories.push_back(
      {"comet", [&](std::uint64_t seed, const comet::TimeSeries& validation) {
         comet::TrainConfig config = comet_config;
         config.seed = seed;
         return std::make_unique<comet::CometForecaster>(
             window_spec, config, dim, k, validation);
       }});

  const std::vector<comet::ModelSeedReport> reports = comet::seed_sweep(
      factories, flags.gen, eval, split_spec, window_spec.long_len + 2);

  std::vector<std::string> outputs;
  const std::string metrics_path =
      (fs::path(flags.out_dir) / "metrics.csv").string();
  const std::string footprint_path =
      (fs::path(flags.out_dir) / "footprint.csv").string();
  comet::write_metrics_csv(reports, metrics_path);
  comet::write_footprint_csv(reports, footprint_path);
  outputs.push_back(metrics_path);
  outputs.push_back(footprint_path);
  for (const auto& report : reports) {
    if (report.rollout_predicted.empty()) continue;
    const std::string path =
        (fs::path(flags.out_dir) /
         ("rollout_" + report.model + "_" + std::to_string(report.seed) +
          ".csv"))
            .string();
    comet::write_rollout_csv(report, path);
    outputs.push_back(path);
  }

  json cfg;
  cfg["seeds"] = flags.seeds;
  cfg["length"] = flags.gen.length;
  cfg["dim"] = flags.dim;
  cfg["k"] = flags.k;
  cfg["epochs"] = flags.epochs;
  cfg["learning_rate"] = flags.learning_rate;
  cfg["huber_delta"] = flags.huber_delta;
  cfg["rollout_horizon"] = eval.rollout_horizon;
  cfg["anchor_stride"] = eval.anchor_stride;
  write_manifest(flags.out_dir, "bench", cfg, outputs);
  std::cout << "wrote " << outputs.size() << " result files to "
            << flags.out_dir << "\n";
  return 0;
}

void add_gen_config_flags(CLI::App* cmd, comet::GenConfig& config) {
  cmd->add_option("--length", config.length, "Series length")
      ->capture_default_str();
  cmd->add_option("--regime-mean-duration", config.regime_mean_duration,
                  "Mean regime duration in steps")
      ->capture_default_str();
  cmd->add_option("--drift-min", config.drift_min, "Per-step drift lower bound")
      ->capture_default_str();
  cmd->add_option("--drift-max", config.drift_max, "Per-step drift upper bound")
      ->capture_default_str();
  cmd->add_option("--vol-min", config.volatility_min,
                  "Per-step volatility lower bound")
      ->capture_default_str();
  cmd->add_option("--vol-max", config.volatility_max,
                  "Per-step volatility upper bound")
      ->capture_default_str();
  cmd->add_option("--mean-reversion", config.mean_reversion_rate,
                  "Mean reversion rate toward the regime anchor")
      ->capture_default_str();
  cmd->add_option("--cycle-amplitude", config.cycle_amplitude,
                  "Deterministic cycle amplitude")
      ->capture_default_str();
  cmd->add_option("--cycle-period", config.cycle_period,
                  "Deterministic cycle period in steps")
      ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"COMET-SG1 memory-anchored forecaster"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenFlags gen_flags;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a synthetic series");
  gen_cmd->add_option("--seed", gen_flags.config.seed, "RNG seed")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen_flags.out, "Output series CSV")
      ->capture_default_str();
  add_gen_config_flags(gen_cmd, gen_flags.config);

  TrainFlags train_flags;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a COMET model");
  train_cmd->add_option("--series", train_flags.series_path, "Input series CSV")
      ->required();
  train_cmd->add_option("--model-out", train_flags.model_out, "Model file path")
      ->capture_default_str();
  train_cmd->add_option("--log-out", train_flags.log_out,
                        "Training log CSV (default: <model>.log.csv)");
  train_cmd->add_option("--dim", train_flags.dim, "Latent dimension D")
      ->capture_default_str();
  train_cmd->add_option("--k", train_flags.k, "Neighborhood size K")
      ->capture_default_str();
  train_cmd->add_option("--epochs", train_flags.config.epochs, "Training epochs")
      ->capture_default_str();
  train_cmd->add_option("--lr", train_flags.config.learning_rate,
                        "Learning rate")
      ->capture_default_str();
  train_cmd
      ->add_option("--huber-delta", train_flags.config.huber_delta,
                   "Huber loss delta")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_flags.config.seed, "RNG seed")
      ->capture_default_str();
  train_cmd->add_flag_callback(
      "--no-memory-rebuild",
      [&train_flags] { train_flags.config.memory_rebuild = false; },
      "Keep the initial-encoder memory across epochs");
  train_cmd
      ->add_option("--train-frac", train_flags.train_fraction,
                   "Train split fraction")
      ->capture_default_str();
  train_cmd
      ->add_option("--val-frac", train_flags.validation_fraction,
                   "Validation split fraction")
      ->capture_default_str();

  std::vector<std::string> eval_models;
  std::string eval_series, eval_out_dir = "eval_out";
  std::vector<std::size_t> eval_horizons;
  std::size_t eval_stride = 10;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate model files");
  eval_cmd->add_option("--model", eval_models, "COMET model file(s)")
      ->required();
  eval_cmd->add_option("--series", eval_series, "Evaluation series CSV")
      ->required();
  eval_cmd->add_option("--horizons", eval_horizons,
                       "Short MAE horizons (default 1 5)");
  eval_cmd->add_option("--stride", eval_stride, "Anchor stride")
      ->capture_default_str();
  eval_cmd->add_option("--out-dir", eval_out_dir, "Output directory")
      ->capture_default_str();

  std::string roll_model, roll_series, roll_out = "rollout.csv";
  std::size_t roll_anchor = 0, roll_horizon = 300;
  bool roll_trace = false;
  CLI::App* roll_cmd = app.add_subcommand("rollout", "Autoregressive rollout");
  roll_cmd->add_option("--model", roll_model, "COMET model file")->required();
  roll_cmd->add_option("--series", roll_series, "Seed-history series CSV")
      ->required();
  roll_cmd->add_option("--anchor", roll_anchor,
                       "History cutoff (default: long window length)");
  roll_cmd->add_option("--horizon", roll_horizon, "Rollout steps")
      ->capture_default_str();
  roll_cmd->add_flag("--trace-state", roll_trace,
                     "Include internal state columns");
  roll_cmd->add_option("--out", roll_out, "Output CSV")->capture_default_str();

  BenchFlags bench_flags;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Full multi-seed, multi-model experiment");
  bench_cmd->set_config("--config", "",
                        "Flat key=value config file (flags override it)");
  bench_cmd->add_option("--out-dir", bench_flags.out_dir, "Output directory")
      ->capture_default_str();
  bench_cmd->add_option("--seeds", bench_flags.seeds, "Experiment seeds")
      ->capture_default_str();
  bench_cmd->add_option("--dim", bench_flags.dim, "COMET latent dimension")
      ->capture_default_str();
  bench_cmd->add_option("--k", bench_flags.k, "COMET neighborhood size")
      ->capture_default_str();
  bench_cmd->add_option("--epochs", bench_flags.epochs,
                        "Training epochs (all trained models)")
      ->capture_default_str();
  bench_cmd->add_option("--lr", bench_flags.learning_rate,
                        "Learning rate (all trained models)")
      ->capture_default_str();
  bench_cmd
      ->add_option("--huber-delta", bench_flags.huber_delta, "Huber loss delta")
      ->capture_default_str();
  bench_cmd
      ->add_option("--rollout-horizon", bench_flags.eval.rollout_horizon,
                   "Rollout trace length")
      ->capture_default_str();
  bench_cmd
      ->add_option("--stride", bench_flags.eval.anchor_stride, "Anchor stride")
      ->capture_default_str();
  add_gen_config_flags(bench_cmd, bench_flags.gen);

  try {
    app.parse(argc, argv);
    if (gen_cmd->parsed()) return run_gen(gen_flags);
    if (train_cmd->parsed()) return run_train(train_flags);
    if (eval_cmd->parsed())
      return run_eval(eval_models, eval_series, eval_horizons, eval_stride,
                      eval_out_dir);
    if (roll_cmd->parsed())
      return run_rollout(roll_model, roll_series, roll_anchor, roll_horizon,
                         roll_trace, roll_out);
    if (bench_cmd->parsed()) return run_bench(bench_flags);
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
    std::cerr << "usage_error: " << e.what() << "\n";
    return 2;
  } catch (const comet::Error& e) {
    const char* code = e.code() == comet::ErrorCode::usage     ? "usage_error"
                       : e.code() == comet::ErrorCode::numeric ? "numeric_error"
                                                               : "data_error";
    std::cerr << code << ": " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "data_error: " << e.what() << "\n";
    return 3;
  }
}
