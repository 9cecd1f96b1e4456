// Python bindings for the main operations: PSPI scoring, landmark features,
// I-FES personalization, the window regressors, the HCRF, evaluation metrics,
// cohort tooling, and the experiment driver.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "painvas/pipeline.hpp"

namespace py = pybind11;
using namespace painvas;

namespace {

Mat mat_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw Error("expected a 2-D array");
  Mat m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + arr.size(), m.a.begin());
  return m;
}

py::array_t<double> array_from_mat(const Mat& m) {
  py::array_t<double> arr({m.rows, m.cols});
  std::copy(m.a.begin(), m.a.end(), arr.mutable_data());
  return arr;
}

SequenceRecord sequence_from_parts(const py::array_t<double>& frames, const std::vector<int>& pspi,
                                   int vas, int opi) {
  SequenceRecord s;
  s.frames = mat_from_array(frames);
  s.pspi = pspi;
  s.vas = vas;
  s.opi = opi;
  return s;
}

}  // namespace

PYBIND11_MODULE(_painvas, m) {
  m.doc() = "Two-stage personalized pain-intensity pipeline (PSPI regression + "
            "personalized HCRF sequence classification)";

  py::register_exception<Error>(m, "PainvasError");

  // ---- pspi ----
  m.def(
      "compute_pspi",
      [](int au4, int au6, int au7, int au9, int au10, int au43) {
        return compute_pspi({au4, au6, au7, au9, au10, au43});
      },
      py::arg("au4"), py::arg("au6"), py::arg("au7"), py::arg("au9"), py::arg("au10"),
      py::arg("au43"));
  m.def("scale_pspi", &scale_pspi, py::arg("s"), py::arg("max_pspi") = kDefaultMaxPspi);

  // ---- personalization ----
  py::class_<IFESScore>(m, "IFESScore")
      .def_readonly("person_id", &IFESScore::person_id)
      .def_readonly("p", &IFESScore::p)
      .def_readonly("alpha_used", &IFESScore::alpha_used);
  m.def("compute_ifes", &compute_ifes, py::arg("pairs"), py::arg("alpha"), py::arg("seed") = 0);
  m.def("select_ifes_subset", &select_ifes_subset, py::arg("n_pairs"), py::arg("alpha"),
        py::arg("seed") = 0);
  m.def(
      "augment_features",
      [](const py::array_t<double>& frames, double p) {
        return array_from_mat(augment_features(mat_from_array(frames), p));
      },
      py::arg("frames"), py::arg("p"));

  // ---- features ----
  m.def("normalize_landmarks", [](const py::array_t<double>& frames) {
    return array_from_mat(normalize_landmarks(mat_from_array(frames)));
  });
  py::class_<PCAModel>(m, "PCAModel")
      .def_property_readonly("n_components", &PCAModel::n_components)
      .def_property_readonly("mean", [](const PCAModel& p) { return p.mean; })
      .def_property_readonly("explained_variance_ratio",
                             [](const PCAModel& p) { return p.explained_variance_ratio; })
      .def_property_readonly("eigenvalues", [](const PCAModel& p) { return p.eigenvalues; })
      .def("project", [](const PCAModel& p, const Vec& frame) { return project(p, frame); })
      .def("project_all",
           [](const PCAModel& p, const py::array_t<double>& frames) {
             return array_from_mat(project_all(p, mat_from_array(frames)));
           })
      .def("to_json", &pca_to_json)
      .def_static("from_json", &pca_from_json);
  m.def(
      "fit_pca",
      [](const py::array_t<double>& frames, double variance_target) {
        return fit_pca(mat_from_array(frames), variance_target);
      },
      py::arg("frames"), py::arg("variance_target") = 0.95);
  m.def("balance_training_frames", [](const std::vector<std::vector<int>>& pspi_per_sequence) {
    std::vector<SequenceRecord> sequences(pspi_per_sequence.size());
    for (std::size_t i = 0; i < pspi_per_sequence.size(); ++i)
      sequences[i].pspi = pspi_per_sequence[i];
    return balance_training_frames(sequences);
  });

  // ---- metrics ----
  m.def("mae", &mae);
  m.def("icc31", [](const Vec& pred, const Vec& truth) -> py::object {
    const auto v = icc31(pred, truth);
    return v ? py::cast(*v) : py::none();
  });
  m.def("confusion_matrix", &confusion_matrix, py::arg("pred"), py::arg("truth"),
        py::arg("n_labels"));

  // ---- regressor ----
  py::class_<BiLSTMRegressor>(m, "BiLSTMRegressor")
      .def_static("init", &BiLSTMRegressor::init, py::arg("input_dim"), py::arg("hidden") = 128,
                  py::arg("head_units") = 64, py::arg("window_radius") = 7, py::arg("seed") = 0)
      .def_readonly("input_dim", &BiLSTMRegressor::input_dim)
      .def_readonly("hidden", &BiLSTMRegressor::hidden)
      .def("forward_window",
           [](const BiLSTMRegressor& model, const py::array_t<double>& window) {
             return forward_window(model, mat_from_array(window));
           })
      .def("predict_sequence",
           [](const BiLSTMRegressor& model, const py::array_t<double>& frames) {
             return predict_sequence(model, mat_from_array(frames));
           })
      .def("to_json", &regressor_to_json)
      .def_static("from_json", &regressor_from_json);
  m.def(
      "train_regressor",
      [](const BiLSTMRegressor& model, const std::vector<py::array_t<double>>& windows,
         const Vec& targets, double learning_rate, double decay, double epsilon, int batch_size,
         int epochs, std::uint64_t seed) {
        std::vector<Mat> w;
        w.reserve(windows.size());
        for (const auto& arr : windows) w.push_back(mat_from_array(arr));
        RegressorTrainConfig cfg{learning_rate, decay, epsilon, batch_size, epochs};
        auto result = train_regressor(model, w, targets, cfg, seed);
        return py::make_tuple(result.model, result.epoch_loss);
      },
      py::arg("model"), py::arg("windows"), py::arg("targets"), py::arg("learning_rate") = 1e-3,
      py::arg("decay") = 0.9, py::arg("epsilon") = 1e-8, py::arg("batch_size") = 32,
      py::arg("epochs") = 30, py::arg("seed") = 0);

  py::class_<FeedforwardBaseline>(m, "FeedforwardBaseline")
      .def_static("init", &FeedforwardBaseline::init, py::arg("input_dim"),
                  py::arg("hidden_units") = 200, py::arg("seed") = 0)
      .def("predict_sequence",
           [](const FeedforwardBaseline& model, const py::array_t<double>& frames) {
             return predict_sequence_ffn(model, mat_from_array(frames));
           })
      .def("to_json", &ffn_to_json)
      .def_static("from_json", &ffn_from_json);
  m.def(
      "train_ffn",
      [](const FeedforwardBaseline& model, const py::array_t<double>& frames, const Vec& targets,
         double learning_rate, double decay, double epsilon, int batch_size, int epochs,
         std::uint64_t seed) {
        RegressorTrainConfig cfg{learning_rate, decay, epsilon, batch_size, epochs};
        auto result = train_ffn(model, mat_from_array(frames), targets, cfg, seed);
        return py::make_tuple(result.model, result.epoch_loss);
      },
      py::arg("model"), py::arg("frames"), py::arg("targets"), py::arg("learning_rate") = 1e-3,
      py::arg("decay") = 0.9, py::arg("epsilon") = 1e-8, py::arg("batch_size") = 32,
      py::arg("epochs") = 30, py::arg("seed") = 0);

  // ---- hcrf ----
  py::class_<HCRFModel>(m, "HCRFModel")
      .def_readonly("n_classes", &HCRFModel::n_classes)
      .def_readonly("n_states", &HCRFModel::n_states)
      .def_readonly("feature_dim", &HCRFModel::feature_dim)
      .def("log_partition",
           [](const HCRFModel& model, int k, const py::array_t<double>& features) {
             return log_partition(model, k, mat_from_array(features));
           })
      .def("class_posterior",
           [](const HCRFModel& model, const py::array_t<double>& features) {
             return class_posterior(model, mat_from_array(features));
           })
      .def("predict_vas",
           [](const HCRFModel& model, const py::array_t<double>& features) {
             return predict_vas(model, mat_from_array(features));
           })
      .def("to_json", &hcrf_to_json)
      .def_static("from_json", &hcrf_from_json);
  m.def(
      "train_hcrf",
      [](const std::vector<py::array_t<double>>& sequences, const std::vector<int>& labels,
         double lambda, int n_classes, int n_states, double init_scale, std::uint64_t seed,
         int max_iterations) {
        std::vector<Mat> seqs;
        seqs.reserve(sequences.size());
        for (const auto& arr : sequences) seqs.push_back(mat_from_array(arr));
        HCRFTrainConfig cfg;
        cfg.lambda = lambda;
        cfg.n_classes = n_classes;
        cfg.n_states = n_states;
        cfg.init_scale = init_scale;
        cfg.seed = seed;
        cfg.lbfgs.max_iterations = max_iterations;
        return train_hcrf(seqs, labels, cfg).model;
      },
      py::arg("sequences"), py::arg("labels"), py::arg("lambda_") = 1.0, py::arg("n_classes") = 11,
      py::arg("n_states") = 11, py::arg("init_scale") = 0.1, py::arg("seed") = 0,
      py::arg("max_iterations") = 200);

  // ---- data ----
  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("n_persons", &SyntheticConfig::n_persons)
      .def_readwrite("sequences_per_person", &SyntheticConfig::sequences_per_person)
      .def_readwrite("t_min", &SyntheticConfig::t_min)
      .def_readwrite("t_max", &SyntheticConfig::t_max)
      .def_readwrite("n_landmarks", &SyntheticConfig::n_landmarks)
      .def_readwrite("landmark_noise", &SyntheticConfig::landmark_noise)
      .def_readwrite("expressiveness_min", &SyntheticConfig::expressiveness_min)
      .def_readwrite("expressiveness_max", &SyntheticConfig::expressiveness_max)
      .def_readwrite("peak_min", &SyntheticConfig::peak_min)
      .def_readwrite("peak_max", &SyntheticConfig::peak_max);

  py::class_<SequenceRecord>(m, "SequenceRecord")
      .def(py::init(&sequence_from_parts), py::arg("frames"), py::arg("pspi"), py::arg("vas"),
           py::arg("opi"))
      .def_property_readonly("frames",
                             [](const SequenceRecord& s) { return array_from_mat(s.frames); })
      .def_readonly("pspi", &SequenceRecord::pspi)
      .def_readonly("vas", &SequenceRecord::vas)
      .def_readonly("opi", &SequenceRecord::opi)
      .def_property_readonly("length", &SequenceRecord::length);

  py::class_<PersonRecord>(m, "PersonRecord")
      .def_readonly("person_id", &PersonRecord::person_id)
      .def_readonly("sequences", &PersonRecord::sequences);

  py::class_<Cohort>(m, "Cohort")
      .def_readonly("persons", &Cohort::persons)
      .def_readonly("feature_dim", &Cohort::feature_dim)
      .def("total_sequences", &Cohort::total_sequences);

  m.def("generate_synthetic_cohort", &generate_synthetic_cohort, py::arg("cfg"), py::arg("seed"));
  m.def("load_cohort", &load_cohort, py::arg("manifest_path"), py::arg("max_pspi") = kDefaultMaxPspi);
  m.def("save_cohort", &save_cohort, py::arg("cohort"), py::arg("out_dir"));
  m.def("split_subject_independent", &split_subject_independent, py::arg("cohort"),
        py::arg("n_train"), py::arg("seed"));

  // ---- experiment driver ----
  m.def("default_experiment_config", [] { return experiment_config_to_json(ExperimentConfig{}); });
  m.def(
      "run_alpha_experiment",
      [](const std::string& config_json) {
        return run_alpha_experiment(experiment_config_from_json(config_json)).json;
      },
      py::arg("config_json"));
  m.def(
      "run_alpha_experiment_file",
      [](const std::string& config_path) {
        return run_alpha_experiment(load_experiment_config(config_path)).json;
      },
      py::arg("config_path"));
}
