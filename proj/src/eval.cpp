// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include "doorfeel/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <set>
#include <thread>

#include "doorfeel/error.hpp"
#include "text_util.hpp"

namespace doorfeel {

namespace {

void require_percent(const RatingVector& r, const char* role) {
  if (r.scale != RatingScale::Percent) {
    throw ValidationError(std::string("mae: ") + role + " for car '" + r.car_id +
                          "' is not on the 0..100 scale");
  }
}

nlohmann::json rating_json(const RatingVector& r) {
  return nlohmann::json(std::vector<double>(r.values.begin(), r.values.end()));
}

RatingVector rating_from_json(const std::string& car, const nlohmann::json& doc) {
  const auto values = doc.get<std::vector<double>>();
  if (values.size() != kNumPairs) {
    throw ValidationError("report: car '" + car + "' has " + std::to_string(values.size()) +
                          " ratings, expected " + std::to_string(kNumPairs));
  }
  RatingVector r;
  r.car_id = car;
  std::copy(values.begin(), values.end(), r.values.begin());
  r.validate();
  return r;
}

}  // namespace

// --- folds ------------------------------------------------------------------

std::string FoldProtocol::canonical(const std::string& car) const {
  const auto it = aliases.find(car);
  return it == aliases.end() ? car : it->second;
}

std::vector<FoldSpec> make_folds(std::span<const std::string> cars, const FoldProtocol& protocol) {
  std::map<std::string, std::string> id_of;  // label -> dataset id
  for (const auto& car : cars) {
    const std::string label = protocol.canonical(car);
    if (std::find(protocol.labels.begin(), protocol.labels.end(), label) == protocol.labels.end()) {
      throw ValidationError("folds: unknown car '" + car + "'");
    }
    if (!id_of.emplace(label, car).second) {
      throw ValidationError("folds: car '" + label + "' appears more than once");
    }
  }
  for (const auto& label : protocol.labels) {
    if (!id_of.contains(label)) throw ValidationError("folds: missing car '" + label + "'");
  }

  std::vector<FoldSpec> folds;
  for (const auto& test : protocol.labels) {
    FoldSpec fold{id_of[test], {}};
    for (const auto& label : protocol.labels) {
      if (label == test || label == protocol.never_train) continue;
      if (test == protocol.never_train && label == protocol.dropped_with_never_train) continue;
      fold.train_cars.push_back(id_of[label]);
    }
    folds.push_back(std::move(fold));
  }
  check_folds(folds, protocol);
  return folds;
}

void check_folds(std::span<const FoldSpec> folds, const FoldProtocol& protocol) {
  if (folds.size() != protocol.labels.size()) {
    throw ValidationError("folds: expected " + std::to_string(protocol.labels.size()) +
                          " folds, got " + std::to_string(folds.size()));
  }
  const std::size_t train_size = protocol.labels.size() - 2;
  std::set<std::string> tested;
  for (const auto& f : folds) {
    const std::string test = protocol.canonical(f.test_car);
    if (!tested.insert(test).second) throw ValidationError("folds: '" + test + "' tested twice");
    if (f.train_cars.size() != train_size) {
      throw ValidationError("folds: fold '" + test + "' trains on " +
                            std::to_string(f.train_cars.size()) + " cars");
    }
    std::set<std::string> train;
    for (const auto& c : f.train_cars) train.insert(protocol.canonical(c));
    if (train.size() != f.train_cars.size()) throw ValidationError("folds: duplicate training car");
    if (train.contains(test)) throw ValidationError("folds: '" + test + "' trains on itself");
    if (train.contains(protocol.never_train)) {
      throw ValidationError("folds: fold '" + test + "' trains on " + protocol.never_train);
    }
    if (test == protocol.never_train && train.contains(protocol.dropped_with_never_train)) {
      throw ValidationError("folds: fold '" + test + "' must leave out " +
                            protocol.dropped_with_never_train);
    }
  }
}

// --- metrics ----------------------------------------------------------------

MaeResult mae(const RatingVector& pred, const RatingVector& target) {
  require_percent(pred, "prediction");
  require_percent(target, "target");
  MaeResult out;
  double sum = 0.0;
  for (std::size_t p = 0; p < kNumPairs; ++p) {
    out.errors[p] = std::abs(pred.values[p] - target.values[p]);
    sum += out.errors[p];
  }
  out.mean = sum / static_cast<double>(kNumPairs);
  return out;
}

BandCoverage band_analysis(std::span<const double> preds, std::span<const double> targets,
                           double sigma) {
  if (preds.size() != targets.size()) {
    throw ValidationError("band_analysis: " + std::to_string(preds.size()) + " predictions vs " +
                          std::to_string(targets.size()) + " targets");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("band_analysis: sigma must be > 0");
  BandCoverage out;
  out.points = preds.size();
  if (preds.empty()) return out;
  std::size_t half = 0;
  std::size_t full = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double err = std::abs(preds[i] - targets[i]);
    if (err <= sigma / 2.0) ++half;
    if (err <= sigma) ++full;
  }
  out.within_half_sigma = static_cast<double>(half) / static_cast<double>(out.points);
  out.within_sigma = static_cast<double>(full) / static_cast<double>(out.points);
  return out;
}

GridSummary summarize_grid(const MaeGrid& grid) {
  if (grid.empty()) throw ValidationError("summarize_grid: empty grid");
  GridSummary s;
  double total = 0.0;
  for (const auto& row : grid) {
    double sum = 0.0;
    for (std::size_t p = 0; p < kNumPairs; ++p) {
      sum += row[p];
      s.column_means[p] += row[p];
    }
    total += sum;
    s.row_means.push_back(sum / static_cast<double>(kNumPairs));
  }
  const auto rows = static_cast<double>(grid.size());
  for (double& c : s.column_means) c /= rows;
  s.overall = total / (rows * static_cast<double>(kNumPairs));
  return s;
}

// --- report -----------------------------------------------------------------

std::pair<std::vector<double>, std::vector<double>> LoocvReport::points() const {
  std::vector<double> preds;
  std::vector<double> truth;
  for (const auto& car : cars) {
    const auto& p = predictions.at(car);
    const auto& t = targets.at(car);
    preds.insert(preds.end(), p.values.begin(), p.values.end());
    truth.insert(truth.end(), t.values.begin(), t.values.end());
  }
  return {preds, truth};
}

void recompute(LoocvReport& report) {
  report.grid.clear();
  for (const auto& car : report.cars) {
    const auto pred = report.predictions.find(car);
    const auto target = report.targets.find(car);
    if (pred == report.predictions.end() || target == report.targets.end()) {
      throw ValidationError("report: missing prediction or target for car '" + car + "'");
    }
    report.grid.push_back(mae(pred->second, target->second).errors);
  }
  report.summary = summarize_grid(report.grid);
  const auto [preds, truth] = report.points();
  report.coverage = band_analysis(preds, truth, report.sigma);
}

nlohmann::json LoocvReport::to_json() const {
  nlohmann::json folds_json = nlohmann::json::array();
  for (const auto& f : folds) {
    folds_json.push_back({{"test_car", f.fold.test_car},
                          {"train_cars", f.fold.train_cars},
                          {"seed", f.seed},
                          {"test_recordings", f.test_recordings},
                          {"loss_history", f.loss_history}});
  }
  nlohmann::json pred_json = nlohmann::json::object();
  nlohmann::json target_json = nlohmann::json::object();
  nlohmann::json grid_json = nlohmann::json::array();
  for (std::size_t i = 0; i < cars.size(); ++i) {
    pred_json[cars[i]] = rating_json(predictions.at(cars[i]));
    target_json[cars[i]] = rating_json(targets.at(cars[i]));
    grid_json.push_back(std::vector<double>(grid[i].begin(), grid[i].end()));
  }
  std::vector<std::string> labels;
  for (std::size_t p = 0; p < kNumPairs; ++p) labels.push_back(pair_label(p));
  return {
      {"provenance", provenance},
      {"cars", cars},
      {"pairs", labels},
      {"folds", folds_json},
      {"predictions", pred_json},
      {"targets", target_json},
      {"mae_grid", grid_json},
      {"mae_per_car", summary.row_means},
      {"mae_per_pair", std::vector<double>(summary.column_means.begin(), summary.column_means.end())},
      {"mae_overall", summary.overall},
      {"sigma", sigma},
      {"sigma_source", sigma_source},
      {"coverage",
       {{"half_sigma", coverage.within_half_sigma},
        {"sigma", coverage.within_sigma},
        {"points", coverage.points}}},
  };
}

LoocvReport LoocvReport::from_json(const nlohmann::json& doc) {
  LoocvReport r;
  try {
    r.provenance = doc.value("provenance", nlohmann::json::object());
    r.cars = doc.at("cars").get<std::vector<std::string>>();
    for (const auto& f : doc.value("folds", nlohmann::json::array())) {
      FoldResult fr;
      fr.fold.test_car = f.at("test_car").get<std::string>();
      fr.fold.train_cars = f.at("train_cars").get<std::vector<std::string>>();
      fr.seed = f.at("seed").get<std::uint64_t>();
      fr.test_recordings = f.value("test_recordings", std::size_t{0});
      fr.loss_history = f.value("loss_history", std::vector<double>{});
      r.folds.push_back(std::move(fr));
    }
    for (const auto& car : r.cars) {
      r.predictions[car] = rating_from_json(car, doc.at("predictions").at(car));
      r.targets[car] = rating_from_json(car, doc.at("targets").at(car));
    }
    r.sigma = doc.value("sigma", kDefaultSigma);
    r.sigma_source = doc.value("sigma_source", std::string("default"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  if (r.cars.empty()) throw ValidationError("report: no cars");
  recompute(r);
  return r;
}

void LoocvReport::write_grid_csv(std::ostream& out) const {
  out << "car";
  for (std::size_t p = 0; p < kNumPairs; ++p) out << ',' << pair_label(p);
  out << ",mean\n";
  for (std::size_t i = 0; i < cars.size(); ++i) {
    out << cars[i];
    for (double v : grid[i]) out << ',' << detail::format_double(v);
    out << ',' << detail::format_double(summary.row_means[i]) << '\n';
  }
  out << "mean";
  for (double v : summary.column_means) out << ',' << detail::format_double(v);
  out << ',' << detail::format_double(summary.overall) << '\n';
}

void LoocvReport::write_scatter_csv(std::ostream& out) const {
  out << "car,pair,label,target,pred\n";
  for (const auto& car : cars) {
    const auto& p = predictions.at(car);
    const auto& t = targets.at(car);
    for (std::size_t k = 0; k < kNumPairs; ++k) {
      out << car << ',' << k + 1 << ',' << pair_label(k) << ',' << detail::format_double(t.values[k])
          << ',' << detail::format_double(p.values[k]) << '\n';
    }
  }
}

// --- LOOCV ------------------------------------------------------------------

std::uint64_t fold_seed(std::uint64_t master_seed, std::vector<std::string> train_labels) {
  std::sort(train_labels.begin(), train_labels.end());
  std::string key = std::to_string(master_seed);
  for (const auto& l : train_labels) key += "|" + l;
  return detail::fnv1a(key);
}

LoocvReport run_loocv(const ExamplesByCar& data, const LoocvOptions& options) {
  std::vector<std::string> cars;
  for (const auto& [car, examples] : data) {
    if (examples.empty()) throw ValidationError("loocv: car '" + car + "' has no recordings");
    cars.push_back(car);
  }
  const auto folds = make_folds(cars, options.protocol);
  options.config.validate();

  // Folds with the same training cars share one model.
  struct Job {
    std::vector<std::string> train_cars;
    std::uint64_t seed = 0;
    std::optional<Model> model;
    std::vector<double> loss_history;
  };
  std::vector<Job> jobs;
  std::vector<std::size_t> job_of(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::string> labels;
    for (const auto& c : folds[f].train_cars) labels.push_back(options.protocol.canonical(c));
    const std::uint64_t seed = fold_seed(options.config.seed, labels);
    auto it = std::find_if(jobs.begin(), jobs.end(), [&](const Job& j) { return j.seed == seed; });
    if (it == jobs.end()) {
      jobs.push_back({folds[f].train_cars, seed, std::nullopt, {}});
      it = jobs.end() - 1;
    }
    job_of[f] = static_cast<std::size_t>(it - jobs.begin());
  }

  if (!options.oracle) {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs.size());
    auto worker = [&] {
      for (std::size_t j = next++; j < jobs.size(); j = next++) {
        try {
          Job& job = jobs[j];
          std::vector<Example> train_set;
          for (const auto& car : job.train_cars) {
            const auto& ex = data.at(car);
            train_set.insert(train_set.end(), ex.begin(), ex.end());
          }
          ModelConfig cfg = options.config;
          cfg.seed = job.seed;
          Model model = build(cfg, job.seed);
          job.loss_history = train(model, train_set).loss_history;
          job.model.emplace(std::move(model));
        } catch (...) {
          errors[j] = std::current_exception();
        }
      }
    };
    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(jobs.size())));
    if (n_threads == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  LoocvReport report;
  report.sigma = options.sigma;
  report.sigma_source = options.sigma_source;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    Job& job = jobs[job_of[f]];
    const auto& test = data.at(fold.test_car);
    const RatingVector& target = test.front().rating;

    RatingVector mean;
    mean.car_id = fold.test_car;
    if (options.oracle) {
      mean = target;
    } else {
      std::vector<NormalizedProfile> profiles;
      for (const auto& ex : test) profiles.push_back(ex.profile);
      const auto preds = predict(*job.model, profiles);
      for (const auto& p : preds) {
        for (std::size_t k = 0; k < kNumPairs; ++k) mean.values[k] += p.values[k];
      }
      for (double& v : mean.values) v /= static_cast<double>(preds.size());
    }
    report.cars.push_back(fold.test_car);
    report.predictions[fold.test_car] = mean;
    report.targets[fold.test_car] = target;
    report.folds.push_back({fold, job.seed, job.loss_history, test.size()});
  }
  report.provenance = {{"seed", options.config.seed}, {"config_hash", options.config.hash()}};
  recompute(report);
  return report;
}

}  // namespace doorfeel
