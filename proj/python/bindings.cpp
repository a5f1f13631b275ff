// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "doorfeel/dataset.hpp"
#include "doorfeel/error.hpp"
#include "doorfeel/eval.hpp"
#include "doorfeel/model.hpp"
#include "doorfeel/profile.hpp"
#include "doorfeel/ratings.hpp"
#include "doorfeel/signal_ingest.hpp"
#include "doorfeel/synthgen.hpp"

namespace py = pybind11;
using namespace doorfeel;

namespace {

nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
}

RatingVector make_rating(const std::string& car, const std::vector<double>& values) {
  if (values.size() != kNumPairs) {
    throw ValidationError("expected " + std::to_string(kNumPairs) + " ratings, got " +
                          std::to_string(values.size()));
  }
  RatingVector r;
  r.car_id = car;
  std::copy(values.begin(), values.end(), r.values.begin());
  r.validate();
  return r;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Door-opening force profiles to perceptual ratings";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
  py::register_exception<SyncError>(m, "SyncError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());

  m.attr("PROFILE_LENGTH") = kProfileLength;
  m.attr("NUM_PAIRS") = kNumPairs;
  m.attr("DEFAULT_SIGMA") = kDefaultSigma;
  m.attr("DEFAULT_SEED") = kDefaultSeed;

  m.def("adjective_pairs", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : adjective_pairs()) out.emplace_back(p.negative_pole, p.positive_pole);
    return out;
  });
  m.def("pair_label", &pair_label);
  m.def("likert_to_percent", &likert_to_percent);

  py::class_<NormalizedProfile>(m, "NormalizedProfile")
      .def(py::init<>())
      .def(py::init([](std::string car, std::string trial, std::vector<double> values) {
             NormalizedProfile p{std::move(car), std::move(trial), std::move(values)};
             p.validate();
             return p;
           }),
           py::arg("car_id"), py::arg("trial_id"), py::arg("values"))
      .def_readwrite("car_id", &NormalizedProfile::car_id)
      .def_readwrite("trial_id", &NormalizedProfile::trial_id)
      .def_readwrite("values", &NormalizedProfile::values)
      .def("validate", &NormalizedProfile::validate);
  m.def("load_profile", &load_profile);
  m.def("save_profile", &save_profile);

  m.def(
      "ingest",
      [](const std::filesystem::path& force, const std::filesystem::path& position,
         const std::filesystem::path& hinge, std::string car, std::string trial) {
        const auto synced =
            synchronize(parse_force_csv(force), parse_position_csv(position), parse_hinge_json(hinge));
        return build_profile(synced, std::move(car), std::move(trial));
      },
      py::arg("force_csv"), py::arg("position_csv"), py::arg("hinge_json"), py::arg("car_id"),
      py::arg("trial_id") = "trial0");

  py::class_<RatingVector>(m, "RatingVector")
      .def(py::init(&make_rating), py::arg("car_id"), py::arg("values"))
      .def_readonly("car_id", &RatingVector::car_id)
      .def_property_readonly("values", [](const RatingVector& r) {
        return std::vector<double>(r.values.begin(), r.values.end());
      });
  m.def("parse_ratings_csv", [](const std::filesystem::path& path) {
    return parse_ratings_csv(path).by_car;
  });

  // synthetic data
  m.def("default_car_specs", [] {
    std::vector<std::string> out;
    for (const auto& s : default_car_specs()) out.push_back(s.to_json().dump());
    return out;
  }, "Built-in specs as JSON strings.");
  m.def(
      "synth_profile",
      [](const std::string& spec_json, std::uint64_t trial_seed) {
        return synth_profile(SyntheticCarSpec::from_json(parse_json(spec_json)), trial_seed);
      },
      py::arg("spec_json"), py::arg("trial_seed"));
  m.def(
      "synth_ratings",
      [](const std::string& spec_json) {
        return synth_ratings(SyntheticCarSpec::from_json(parse_json(spec_json)));
      },
      py::arg("spec_json"));

  // model
  m.def("default_config", [] { return ModelConfig{}.to_json().dump(); });
  m.def("shrunken_config", [] { return ModelConfig::shrunken().to_json().dump(); });
  m.def("parameter_count", [](const std::string& config_json) {
    return Network(ModelConfig::from_json(parse_json(config_json)), 0).parameter_count();
  });

  py::class_<Model>(m, "Model")
      .def(py::init([](const std::string& config_json, std::optional<std::uint64_t> seed) {
             const auto cfg = ModelConfig::from_json(parse_json(config_json));
             return build(cfg, seed.value_or(cfg.seed));
           }),
           py::arg("config_json"), py::arg("seed") = py::none())
      .def("train",
           [](Model& model, const std::vector<NormalizedProfile>& profiles,
              const std::vector<RatingVector>& ratings) {
             if (profiles.size() != ratings.size()) {
               throw ValidationError("train: profiles and ratings differ in length");
             }
             std::vector<Example> data;
             for (std::size_t i = 0; i < profiles.size(); ++i) data.push_back({profiles[i], ratings[i]});
             py::gil_scoped_release release;
             return train(model, data).loss_history;
           })
      .def("predict",
           [](Model& model, const NormalizedProfile& p) {
             const auto r = predict(model, p);
             return std::vector<double>(r.values.begin(), r.values.end());
           })
      .def("save", [](Model& model, const std::filesystem::path& path) { save_checkpoint(model, path); })
      .def_static("load", &load_checkpoint)
      .def_property_readonly("parameter_count",
                             [](const Model& m) { return m.network.parameter_count(); });

  m.def(
      "gradient_check",
      [](const std::string& config_json, std::uint64_t seed, bool corrupt) {
        Network net(ModelConfig::from_json(parse_json(config_json)), seed);
        GradCheckOptions options;
        options.corrupt = corrupt;
        const auto r = gradient_check(net, seed, options);
        return py::dict(py::arg("max_rel_error") = r.max_rel_error, py::arg("passed") = r.passed,
                        py::arg("worst_parameter") = r.worst_parameter, py::arg("checked") = r.checked);
      },
      py::arg("config_json"), py::arg("seed") = 0, py::arg("corrupt") = false);

  // evaluation
  m.def("make_folds", [](const std::vector<std::string>& cars) {
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (auto& f : make_folds(cars)) out.emplace_back(f.test_car, f.train_cars);
    return out;
  });
  m.def("mae", [](const RatingVector& pred, const RatingVector& target) {
    const auto r = mae(pred, target);
    return std::make_pair(std::vector<double>(r.errors.begin(), r.errors.end()), r.mean);
  });
  m.def(
      "band_analysis",
      [](const std::vector<double>& preds, const std::vector<double>& targets, double sigma) {
        const auto c = band_analysis(preds, targets, sigma);
        return std::make_pair(c.within_half_sigma, c.within_sigma);
      },
      py::arg("preds"), py::arg("targets"), py::arg("sigma") = kDefaultSigma);
  m.def(
      "run_loocv",
      [](const std::filesystem::path& data_dir, const std::filesystem::path& ratings_csv,
         const std::string& config_json, unsigned workers, bool oracle) {
        LoocvOptions options;
        options.config = ModelConfig::from_json(parse_json(config_json));
        options.workers = workers;
        options.oracle = oracle;
        const auto table = parse_ratings_csv(ratings_csv);
        const auto data = join_ratings(load_dataset(data_dir), table);
        if (auto d = table.mean_dispersion()) {
          options.sigma = *d;
          options.sigma_source = "ratings";
        }
        LoocvReport report;
        {
          py::gil_scoped_release release;
          report = run_loocv(data, options);
        }
        return report.to_json().dump();
      },
      py::arg("data_dir"), py::arg("ratings_csv"), py::arg("config_json"), py::arg("workers") = 1,
      py::arg("oracle") = false, "Runs leave-one-car-out evaluation; returns the report as JSON text.");
}
