// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

// doorfeel: command-line entry point.
//
// Exit codes: 0 success, 1 gradient check failed, 2 bad input.
// Log level comes from DOORFEEL_LOG (trace, debug, info, warn, error, off).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "doorfeel/dataset.hpp"
#include "doorfeel/error.hpp"
#include "doorfeel/eval.hpp"
#include "doorfeel/model.hpp"
#include "doorfeel/profile.hpp"
#include "doorfeel/ratings.hpp"
#include "doorfeel/signal_ingest.hpp"
#include "doorfeel/synthgen.hpp"

namespace fs = std::filesystem;
using namespace doorfeel;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitInput = 2;

struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs one pipeline stage, prefixing any failure with the stage name.
template <typename F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name + ": " + e.what());
  }
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw StageError(what + ": no such file " + path.string());
}

void require_dir(const fs::path& path, const std::string& what) {
  if (!fs::is_directory(path)) throw StageError(what + ": no such directory " + path.string());
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("write: cannot open " + path.string());
  return out;
}

std::string provenance_line(const std::string& command, std::uint64_t seed,
                            const std::string& config_hash) {
  return "# doorfeel " + command + " seed=" + std::to_string(seed) + " config_hash=" + config_hash;
}

nlohmann::json provenance(const std::string& command, std::uint64_t seed,
                          const std::string& config_hash) {
  return {{"command", command}, {"seed", seed}, {"config_hash", config_hash}};
}

// Model options shared by train and loocv.
struct ModelFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::string precision;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "Model config JSON");
    cmd->add_option("--seed", seed, "Master seed (default 42)");
    cmd->add_option("--epochs", epochs, "Override the epoch count");
    cmd->add_option("--lr", lr, "Override the learning rate");
    cmd->add_option("--precision", precision, "Training precision")
        ->check(CLI::IsMember({"float32", "float64"}));
  }

  ModelConfig resolve() const {
    ModelConfig cfg = stage("config", [&] {
      if (config.empty()) return ModelConfig{};
      require_file(config, "config");
      return ModelConfig::load(config);
    });
    if (seed) cfg.seed = *seed;
    if (epochs) cfg.epochs = *epochs;
    if (lr) cfg.learning_rate = *lr;
    if (!precision.empty()) {
      cfg.precision = precision == "float64" ? Precision::Float64 : Precision::Float32;
    }
    stage("config", [&] { cfg.validate(); });
    return cfg;
  }
};

ExamplesByCar load_examples(const fs::path& data_dir, const fs::path& ratings_path,
                            RatingsTable* table_out = nullptr) {
  require_dir(data_dir, "dataset");
  require_file(ratings_path, "ratings");
  const Dataset ds = stage("dataset", [&] { return load_dataset(data_dir); });
  RatingsTable table = stage("ratings", [&] { return parse_ratings_csv(ratings_path); });
  auto examples = stage("join", [&] { return join_ratings(ds, table); });
  if (table_out != nullptr) *table_out = std::move(table);
  return examples;
}

// --- subcommands ------------------------------------------------------------

int cmd_ingest(const fs::path& force, const fs::path& position, const fs::path& hinge,
               const std::string& car, const std::string& trial, const fs::path& out) {
  require_file(force, "parse force");
  require_file(position, "parse position");
  require_file(hinge, "parse hinge");
  const auto f = stage("parse force", [&] { return parse_force_csv(force); });
  const auto p = stage("parse position", [&] { return parse_position_csv(position); });
  const auto h = stage("parse hinge", [&] { return parse_hinge_json(hinge); });
  const auto synced = stage("synchronize", [&] { return synchronize(f, p, h); });
  const auto profile = stage("normalize", [&] { return build_profile(synced, car, trial); });
  stage("write", [&] { save_profile(profile, out); });
  spdlog::info("wrote {} ({} samples)", out.string(), profile.values.size());
  return 0;
}

int cmd_synth(const std::string& specs_dir, const fs::path& out, int trials, std::uint64_t seed) {
  if (trials < 1) throw StageError("synth: --trials must be >= 1");
  std::vector<SyntheticCarSpec> specs;
  if (specs_dir.empty()) {
    specs = default_car_specs();
  } else {
    require_dir(specs_dir, "synth");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(specs_dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      specs.push_back(stage("spec " + file.filename().string(), [&] { return SyntheticCarSpec::load(file); }));
    }
    if (specs.empty()) throw StageError("synth: no *.json specs in " + specs_dir);
  }

  Dataset ds;
  std::vector<RatingVector> ratings;
  for (const auto& spec : specs) {
    ds.cars.push_back(spec.name);
    ratings.push_back(synth_ratings(spec));
    for (int t = 0; t < trials; ++t) {
      auto profile = synth_profile(spec, (seed << 20) + static_cast<std::uint64_t>(t));
      profile.trial_id = "trial" + std::to_string(t);
      ds.profiles.push_back(std::move(profile));
    }
  }
  stage("write", [&] {
    save_dataset(ds, out);
    auto csv = open_out(out / "ratings.csv");
    csv << provenance_line("synth", seed, "-") << '\n';
    write_averaged_ratings_csv(csv, ratings);
  });
  spdlog::info("wrote {} profiles for {} cars to {}", ds.profiles.size(), ds.cars.size(), out.string());
  std::cout << "seed " << seed << '\n';
  return 0;
}

int cmd_train(const fs::path& data, const fs::path& ratings, const ModelFlags& flags,
              const fs::path& out, std::string loss_log) {
  const ModelConfig cfg = flags.resolve();
  const auto examples = load_examples(data, ratings);
  std::vector<Example> train_set;
  for (const auto& [car, group] : examples) train_set.insert(train_set.end(), group.begin(), group.end());
  if (train_set.empty()) throw StageError("train: empty dataset");

  spdlog::info("training on {} recordings, {} epochs, seed {}", train_set.size(), cfg.epochs, cfg.seed);
  Model model = build(cfg, cfg.seed);
  const auto result = stage("train", [&] { return train(model, train_set); });
  const std::string hash = cfg.hash();
  stage("write", [&] {
    save_checkpoint(model, out, provenance("train", cfg.seed, hash));
    if (loss_log.empty()) loss_log = out.string() + ".loss.csv";
    auto log = open_out(loss_log);
    log << provenance_line("train", cfg.seed, hash) << "\nepoch,loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      log << e + 1 << ',' << nlohmann::json(result.loss_history[e]).dump() << '\n';
    }
  });
  std::cout << "seed " << cfg.seed << "\nfinal_loss " << result.loss_history.back() << '\n';
  return 0;
}

void write_report(const LoocvReport& report, const fs::path& out, const std::string& command) {
  const auto& prov = report.provenance;
  const std::string header = provenance_line(command, prov.value("seed", std::uint64_t{0}),
                                             prov.value("config_hash", std::string("-")));
  fs::create_directories(out);
  {
    auto f = open_out(out / "report.json");
    f << report.to_json().dump(2) << '\n';
  }
  {
    auto f = open_out(out / "mae_grid.csv");
    f << header << '\n';
    report.write_grid_csv(f);
  }
  {
    auto f = open_out(out / "scatter.csv");
    f << header << '\n';
    report.write_scatter_csv(f);
  }
}

int cmd_loocv(const fs::path& data, const fs::path& ratings, const ModelFlags& flags,
              const fs::path& out, unsigned workers, std::optional<double> sigma, bool oracle) {
  LoocvOptions options;
  options.config = flags.resolve();
  options.workers = workers;
  options.oracle = oracle;
  RatingsTable table;
  const auto examples = load_examples(data, ratings, &table);
  if (sigma) {
    options.sigma = *sigma;
    options.sigma_source = "flag";
  } else if (auto dispersion = table.mean_dispersion()) {
    options.sigma = *dispersion;
    options.sigma_source = "ratings";
  }
  spdlog::info("loocv over {} cars, {} workers{}", examples.size(), workers, oracle ? ", oracle" : "");
  auto report = stage("loocv", [&] { return run_loocv(examples, options); });
  report.provenance["command"] = "loocv";
  stage("write", [&] { write_report(report, out, "loocv"); });
  std::cout << "seed " << options.config.seed << "\nmae_overall " << report.summary.overall << '\n';
  return 0;
}

int cmd_gradcheck(const std::string& config, std::uint64_t seed, int seeds, bool corrupt,
                  double eps, double tol) {
  ModelConfig cfg = stage("config", [&] {
    if (config.empty()) return ModelConfig::shrunken();
    require_file(config, "config");
    return ModelConfig::load(config);
  });
  if (seeds < 1) throw StageError("gradcheck: --seeds must be >= 1");
  GradCheckOptions options;
  options.eps = eps;
  options.tol = tol;
  options.corrupt = corrupt;
  double worst = 0.0;
  bool passed = true;
  for (int k = 0; k < seeds; ++k) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
    Network net(cfg, s);
    const auto report = gradient_check(net, s ^ 0x9e3779b97f4a7c15ULL, options);
    spdlog::debug("seed {}: max rel error {:.3e} at {}[{}]", s, report.max_rel_error,
                  report.worst_parameter, report.worst_index);
    std::cout << "seed " << s << " max_rel_error " << report.max_rel_error << ' '
              << (report.passed ? "pass" : "FAIL") << '\n';
    worst = std::max(worst, report.max_rel_error);
    passed = passed && report.passed;
  }
  std::cout << "gradcheck " << (passed ? "PASS" : "FAIL") << " worst " << worst << " tol " << tol << '\n';
  return passed ? 0 : kExitCheckFailed;
}

int cmd_report(const fs::path& report_path, std::optional<double> sigma, const fs::path& out) {
  require_file(report_path, "report");
  LoocvReport report = stage("report", [&] {
    std::ifstream in(report_path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what());
    }
    return LoocvReport::from_json(doc);
  });
  if (sigma) {
    report.sigma = *sigma;
    report.sigma_source = "flag";
    stage("report", [&] { recompute(report); });
  }
  const nlohmann::json summary = {
      {"provenance", report.provenance},
      {"sigma", report.sigma},
      {"sigma_source", report.sigma_source},
      {"points", report.coverage.points},
      {"within_half_sigma", report.coverage.within_half_sigma},
      {"within_sigma", report.coverage.within_sigma},
      {"mae_overall", report.summary.overall},
  };
  if (!out.empty()) {
    stage("write", [&] {
      fs::create_directories(out);
      auto f = open_out(out / "coverage.json");
      f << summary.dump(2) << '\n';
      auto s = open_out(out / "scatter.csv");
      s << provenance_line("report", report.provenance.value("seed", std::uint64_t{0}),
                           report.provenance.value("config_hash", std::string("-")))
        << '\n';
      report.write_scatter_csv(s);
    });
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("doorfeel");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("DOORFEEL_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Door-opening force profiles to perceptual ratings"};
  app.require_subcommand(1);

  std::uint64_t seed = kDefaultSeed;
  std::string out;
  std::string data;
  std::string ratings;
  std::optional<double> sigma;
  unsigned workers = 1;

  auto* ingest = app.add_subcommand("ingest", "Force/position/hinge recordings to a profile JSON");
  std::string force;
  std::string position;
  std::string hinge;
  std::string car;
  std::string trial = "trial0";
  ingest->add_option("--force", force, "Force CSV (t,fx,fy,fz)")->required();
  ingest->add_option("--position", position, "Marker CSV (t,px,py,pz)")->required();
  ingest->add_option("--hinge", hinge, "Hinge reference JSON")->required();
  ingest->add_option("--car", car, "Car id")->required();
  ingest->add_option("--trial", trial, "Trial id");
  ingest->add_option("--out", out, "Output profile JSON")->required();

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset directory");
  std::string specs;
  int trials = 10;
  synth->add_option("--specs", specs, "Directory of spec JSONs (default: built-in six)");
  synth->add_option("--trials", trials, "Recordings per car");
  synth->add_option("--seed", seed, "Noise seed");
  synth->add_option("--out", out, "Output directory")->required();

  ModelFlags model_flags;
  auto* train_cmd = app.add_subcommand("train", "Train on a dataset and write a checkpoint");
  std::string loss_log;
  train_cmd->add_option("--data", data, "Dataset directory")->required();
  train_cmd->add_option("--ratings", ratings, "Ratings CSV")->required();
  train_cmd->add_option("--out", out, "Checkpoint path")->required();
  train_cmd->add_option("--loss-log", loss_log, "Loss CSV (default <out>.loss.csv)");
  model_flags.add_to(train_cmd);

  auto* loocv = app.add_subcommand("loocv", "Leave-one-car-out evaluation");
  bool oracle = false;
  loocv->add_option("--data", data, "Dataset directory")->required();
  loocv->add_option("--ratings", ratings, "Ratings CSV")->required();
  loocv->add_option("--out", out, "Report directory")->required();
  loocv->add_option("--workers", workers, "Parallel trainings")->check(CLI::PositiveNumber);
  loocv->add_option("--sigma", sigma, "Band width (default from rater data, else 20.96)");
  loocv->add_flag("--oracle", oracle, "Predict the targets exactly (harness check)");
  model_flags.add_to(loocv);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::string gc_config;
  int gc_seeds = 20;
  bool corrupt = false;
  double eps = 1e-5;
  double tol = 1e-4;
  gradcheck->add_option("--config", gc_config, "Model config JSON (default: shrunken)");
  gradcheck->add_option("--seed", seed, "First seed");
  gradcheck->add_option("--seeds", gc_seeds, "Number of seeds");
  gradcheck->add_flag("--corrupt", corrupt, "Double one analytic gradient entry");
  gradcheck->add_option("--eps", eps, "Finite-difference step");
  gradcheck->add_option("--tol", tol, "Relative error tolerance");

  auto* report = app.add_subcommand("report", "Band coverage and scatter CSV from a LOOCV report");
  std::string report_path;
  report->add_option("--report", report_path, "report.json from loocv")->required();
  report->add_option("--sigma", sigma, "Band width (default: the report's)");
  report->add_option("--out", out, "Output directory");

  auto* catalog = app.add_subcommand("catalog", "Print the adjective-pair catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*ingest) return cmd_ingest(force, position, hinge, car, trial, out);
    if (*synth) return cmd_synth(specs, out, trials, seed);
    if (*train_cmd) return cmd_train(data, ratings, model_flags, out, loss_log);
    if (*loocv) return cmd_loocv(data, ratings, model_flags, out, workers, sigma, oracle);
    if (*gradcheck) return cmd_gradcheck(gc_config, seed, gc_seeds, corrupt, eps, tol);
    if (*report) return cmd_report(report_path, sigma, out);
    if (*catalog) {
      write_catalog_csv(std::cout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
