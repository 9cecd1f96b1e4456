#include "painvas/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace painvas {

std::string first_stage_name(FirstStage stage) {
  switch (stage) {
    case FirstStage::BiLSTM: return "bilstm";
    case FirstStage::Ffn: return "ffn";
    case FirstStage::GroundTruthPspi: return "gt-pspi";
    case FirstStage::RawFeatures: return "raw";
  }
  throw Error("pipeline: unknown first stage");
}

FirstStage first_stage_from_name(const std::string& name) {
  if (name == "bilstm") return FirstStage::BiLSTM;
  if (name == "ffn") return FirstStage::Ffn;
  if (name == "gt-pspi") return FirstStage::GroundTruthPspi;
  if (name == "raw") return FirstStage::RawFeatures;
  throw Error("pipeline: unknown first stage '" + name + "' (expected bilstm|ffn|gt-pspi|raw)");
}

namespace {

json synthetic_to_json(const SyntheticConfig& s) {
  return {{"n_persons", s.n_persons},
          {"sequences_per_person", s.sequences_per_person},
          {"t_min", s.t_min},
          {"t_max", s.t_max},
          {"n_landmarks", s.n_landmarks},
          {"landmark_noise", s.landmark_noise},
          {"expressiveness_min", s.expressiveness_min},
          {"expressiveness_max", s.expressiveness_max},
          {"peak_min", s.peak_min},
          {"peak_max", s.peak_max}};
}

SyntheticConfig synthetic_from_json(const json& j) {
  SyntheticConfig s;
  s.n_persons = j.value("n_persons", s.n_persons);
  s.sequences_per_person = j.value("sequences_per_person", s.sequences_per_person);
  s.t_min = j.value("t_min", s.t_min);
  s.t_max = j.value("t_max", s.t_max);
  s.n_landmarks = j.value("n_landmarks", s.n_landmarks);
  s.landmark_noise = j.value("landmark_noise", s.landmark_noise);
  s.expressiveness_min = j.value("expressiveness_min", s.expressiveness_min);
  s.expressiveness_max = j.value("expressiveness_max", s.expressiveness_max);
  s.peak_min = j.value("peak_min", s.peak_min);
  s.peak_max = j.value("peak_max", s.peak_max);
  return s;
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  if (!cfg.manifest_path.empty()) {
    j["cohort"] = {{"manifest", cfg.manifest_path}};
  } else {
    j["cohort"] = {{"synthetic", synthetic_to_json(cfg.synthetic)}, {"seed", cfg.synthetic_seed}};
  }
  j["split"] = {{"n_train", cfg.n_train}, {"seed", cfg.split_seed}};
  j["first_stage"] = first_stage_name(cfg.first_stage);
  j["alphas"] = cfg.alphas;
  j["repetitions"] = cfg.repetitions;
  j["seed"] = cfg.seed;
  j["pca_variance"] = cfg.pca_variance;
  j["max_pspi"] = cfg.max_pspi;
  j["regressor"] = {{"hidden_units", cfg.regressor.hidden_units},
                    {"head_units", cfg.regressor.head_units},
                    {"window_radius", cfg.regressor.window_radius},
                    {"ffn_hidden_units", cfg.regressor.ffn_hidden_units},
                    {"balance", cfg.regressor.balance},
                    {"learning_rate", cfg.regressor.train.learning_rate},
                    {"decay", cfg.regressor.train.decay},
                    {"epsilon", cfg.regressor.train.epsilon},
                    {"batch_size", cfg.regressor.train.batch_size},
                    {"epochs", cfg.regressor.train.epochs},
                    {"seed", cfg.regressor.seed}};
  j["hcrf"] = {{"lambda", cfg.hcrf.lambda},
               {"lambda_grid", cfg.hcrf_lambda_grid},
               {"init_scale", cfg.hcrf.init_scale},
               {"seed", cfg.hcrf.seed},
               {"n_classes", cfg.hcrf.n_classes},
               {"n_states", cfg.hcrf.n_states},
               {"lbfgs",
                {{"history_size", cfg.hcrf.lbfgs.history_size},
                 {"max_iterations", cfg.hcrf.lbfgs.max_iterations},
                 {"gradient_tolerance", cfg.hcrf.lbfgs.gradient_tolerance},
                 {"armijo_c", cfg.hcrf.lbfgs.armijo_c},
                 {"backtrack_shrink", cfg.hcrf.lbfgs.backtrack_shrink},
                 {"max_line_search_trials", cfg.hcrf.lbfgs.max_line_search_trials}}}};
  j["out_dir"] = cfg.out_dir;
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.contains("config")) j = j.at("config");  // run manifests wrap the config

  ExperimentConfig cfg;
  if (j.contains("cohort")) {
    const json& c = j.at("cohort");
    if (c.contains("manifest")) {
      cfg.manifest_path = c.at("manifest").get<std::string>();
    } else {
      if (c.contains("synthetic")) cfg.synthetic = synthetic_from_json(c.at("synthetic"));
      cfg.synthetic_seed = c.value("seed", cfg.synthetic_seed);
    }
  }
  if (j.contains("split")) {
    cfg.n_train = j.at("split").value("n_train", cfg.n_train);
    cfg.split_seed = j.at("split").value("seed", cfg.split_seed);
  }
  cfg.first_stage = first_stage_from_name(j.value("first_stage", std::string("bilstm")));
  cfg.alphas = j.value("alphas", cfg.alphas);
  cfg.repetitions = j.value("repetitions", cfg.repetitions);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.pca_variance = j.value("pca_variance", cfg.pca_variance);
  cfg.max_pspi = j.value("max_pspi", cfg.max_pspi);
  if (j.contains("regressor")) {
    const json& r = j.at("regressor");
    cfg.regressor.hidden_units = r.value("hidden_units", cfg.regressor.hidden_units);
    cfg.regressor.head_units = r.value("head_units", cfg.regressor.head_units);
    cfg.regressor.window_radius = r.value("window_radius", cfg.regressor.window_radius);
    cfg.regressor.ffn_hidden_units = r.value("ffn_hidden_units", cfg.regressor.ffn_hidden_units);
    cfg.regressor.balance = r.value("balance", cfg.regressor.balance);
    cfg.regressor.train.learning_rate = r.value("learning_rate", cfg.regressor.train.learning_rate);
    cfg.regressor.train.decay = r.value("decay", cfg.regressor.train.decay);
    cfg.regressor.train.epsilon = r.value("epsilon", cfg.regressor.train.epsilon);
    cfg.regressor.train.batch_size = r.value("batch_size", cfg.regressor.train.batch_size);
    cfg.regressor.train.epochs = r.value("epochs", cfg.regressor.train.epochs);
    cfg.regressor.seed = r.value("seed", cfg.regressor.seed);
  }
  if (j.contains("hcrf")) {
    const json& h = j.at("hcrf");
    cfg.hcrf.lambda = h.value("lambda", cfg.hcrf.lambda);
    cfg.hcrf_lambda_grid = h.value("lambda_grid", cfg.hcrf_lambda_grid);
    cfg.hcrf.init_scale = h.value("init_scale", cfg.hcrf.init_scale);
    cfg.hcrf.seed = h.value("seed", cfg.hcrf.seed);
    cfg.hcrf.n_classes = h.value("n_classes", cfg.hcrf.n_classes);
    cfg.hcrf.n_states = h.value("n_states", cfg.hcrf.n_states);
    if (h.contains("lbfgs")) {
      const json& l = h.at("lbfgs");
      cfg.hcrf.lbfgs.history_size = l.value("history_size", cfg.hcrf.lbfgs.history_size);
      cfg.hcrf.lbfgs.max_iterations = l.value("max_iterations", cfg.hcrf.lbfgs.max_iterations);
      cfg.hcrf.lbfgs.gradient_tolerance =
          l.value("gradient_tolerance", cfg.hcrf.lbfgs.gradient_tolerance);
      cfg.hcrf.lbfgs.armijo_c = l.value("armijo_c", cfg.hcrf.lbfgs.armijo_c);
      cfg.hcrf.lbfgs.backtrack_shrink = l.value("backtrack_shrink", cfg.hcrf.lbfgs.backtrack_shrink);
      cfg.hcrf.lbfgs.max_line_search_trials =
          l.value("max_line_search_trials", cfg.hcrf.lbfgs.max_line_search_trials);
    }
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("pipeline: cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return experiment_config_from_json(text);
}

Cohort load_experiment_cohort(const ExperimentConfig& cfg) {
  if (!cfg.manifest_path.empty()) return load_cohort(cfg.manifest_path, cfg.max_pspi);
  return generate_synthetic_cohort(cfg.synthetic, cfg.synthetic_seed);
}

namespace {

// normalized landmarks -> PCA space, per sequence
Mat projected_frames(const PCAModel& pca, const SequenceRecord& sequence) {
  return project_all(pca, normalize_landmarks(sequence.frames));
}

Vec scaled_pspi_targets(const SequenceRecord& sequence, int max_pspi) {
  Vec t(sequence.pspi.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale_pspi(sequence.pspi[i], max_pspi);
  return t;
}

std::vector<const SequenceRecord*> all_sequences(const Cohort& cohort) {
  std::vector<const SequenceRecord*> out;
  for (const auto& person : cohort.persons)
    for (const auto& s : person.sequences) out.push_back(&s);
  return out;
}

}  // namespace

TrainedArtifacts run_learning(const ExperimentConfig& cfg, const Cohort& train) {
  TrainedArtifacts artifacts;
  artifacts.config = cfg;

  const auto sequences = all_sequences(train);
  if (sequences.empty()) throw Error("pipeline: learning: training cohort is empty");

  // Fit PCA on normalized frames of the training split only.
  {
    int total = 0;
    for (const auto* s : sequences) total += s->length();
    Mat stacked(total, train.feature_dim);
    int at = 0;
    for (const auto* s : sequences) {
      const Mat norm = normalize_landmarks(s->frames);
      for (int t = 0; t < norm.rows; ++t, ++at)
        std::copy(norm.row(t), norm.row(t) + norm.cols, stacked.row(at));
    }
    artifacts.pca = fit_pca(stacked, cfg.pca_variance);
  }

  // Step 1: first-stage regressor on balanced windows.
  if (cfg.first_stage == FirstStage::BiLSTM || cfg.first_stage == FirstStage::Ffn) {
    std::vector<SequenceRecord> seq_copies;
    seq_copies.reserve(sequences.size());
    for (const auto* s : sequences) seq_copies.push_back(*s);

    std::vector<std::vector<int>> centers;
    if (cfg.regressor.balance) {
      centers = balance_training_frames(seq_copies);
    } else {
      centers.resize(seq_copies.size());
      for (std::size_t i = 0; i < seq_copies.size(); ++i)
        for (int t = 0; t < seq_copies[i].length(); ++t) centers[i].push_back(t);
    }

    if (cfg.first_stage == FirstStage::BiLSTM) {
      std::vector<Mat> windows;
      Vec targets;
      for (std::size_t i = 0; i < seq_copies.size(); ++i) {
        if (centers[i].empty()) continue;
        const Mat proj = projected_frames(artifacts.pca, seq_copies[i]);
        for (int c : centers[i]) {
          windows.push_back(make_window(proj, c, cfg.regressor.window_radius));
          targets.push_back(scale_pspi(seq_copies[i].pspi[c], cfg.max_pspi));
        }
      }
      if (windows.empty()) throw Error("pipeline: learning: no training windows after balancing");
      BiLSTMRegressor model =
          BiLSTMRegressor::init(artifacts.pca.n_components(), cfg.regressor.hidden_units,
                                cfg.regressor.head_units, cfg.regressor.window_radius,
                                cfg.regressor.seed);
      auto trained = train_regressor(std::move(model), windows, targets, cfg.regressor.train,
                                     derive_seed(cfg.regressor.seed, 1));
      artifacts.bilstm = std::move(trained.model);
      artifacts.regressor_epoch_loss = std::move(trained.epoch_loss);
    } else {
      std::vector<Vec> rows;
      Vec targets;
      for (std::size_t i = 0; i < seq_copies.size(); ++i) {
        if (centers[i].empty()) continue;
        const Mat proj = projected_frames(artifacts.pca, seq_copies[i]);
        for (int c : centers[i]) {
          rows.emplace_back(proj.row(c), proj.row(c) + proj.cols);
          targets.push_back(scale_pspi(seq_copies[i].pspi[c], cfg.max_pspi));
        }
      }
      if (rows.empty()) throw Error("pipeline: learning: no training frames after balancing");
      Mat frames(static_cast<int>(rows.size()), artifacts.pca.n_components());
      for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), frames.row(static_cast<int>(i)));
      FeedforwardBaseline model = FeedforwardBaseline::init(
          artifacts.pca.n_components(), cfg.regressor.ffn_hidden_units, cfg.regressor.seed);
      auto trained = train_ffn(std::move(model), frames, targets, cfg.regressor.train,
                               derive_seed(cfg.regressor.seed, 1));
      artifacts.ffn = std::move(trained.model);
      artifacts.regressor_epoch_loss = std::move(trained.epoch_loss);
    }
  }

  // Step 2: I-FES for every training person from all of their sequences.
  for (const auto& person : train.persons) {
    std::vector<std::pair<int, int>> pairs;
    for (const auto& s : person.sequences) pairs.emplace_back(s.opi, s.vas);
    IFESScore score = compute_ifes(pairs, static_cast<int>(pairs.size()), 0);
    score.person_id = person.person_id;
    artifacts.train_ifes.push_back(std::move(score));
  }

  // Step 3: personalized features, then the HCRF.
  {
    std::vector<Mat> hcrf_inputs;
    std::vector<int> labels;
    std::vector<int> person_of;  // sequence -> training person index
    for (std::size_t pi = 0; pi < train.persons.size(); ++pi) {
      const double p = artifacts.train_ifes[pi].p;
      for (const auto& s : train.persons[pi].sequences) {
        hcrf_inputs.push_back(hcrf_features(artifacts, s, p));
        labels.push_back(s.vas);
        person_of.push_back(static_cast<int>(pi));
      }
    }
    HCRFTrainConfig hcfg = cfg.hcrf;

    if (!cfg.hcrf_lambda_grid.empty() && train.persons.size() >= 2) {
      // person-disjoint internal split; the person order is already a seeded
      // shuffle from the subject-independent split
      const int n_persons = static_cast<int>(train.persons.size());
      const int n_val = std::max(1, n_persons / 5);
      const int n_fit = n_persons - n_val;
      std::vector<Mat> fit_inputs, val_inputs;
      std::vector<int> fit_labels;
      Vec val_truth;
      for (std::size_t i = 0; i < hcrf_inputs.size(); ++i) {
        if (person_of[i] < n_fit) {
          fit_inputs.push_back(hcrf_inputs[i]);
          fit_labels.push_back(labels[i]);
        } else {
          val_inputs.push_back(hcrf_inputs[i]);
          val_truth.push_back(labels[i]);
        }
      }
      double best_mae = std::numeric_limits<double>::infinity();
      for (const double lambda : cfg.hcrf_lambda_grid) {
        HCRFTrainConfig probe = cfg.hcrf;
        probe.lambda = lambda;
        const auto candidate = train_hcrf(fit_inputs, fit_labels, probe);
        Vec val_pred;
        for (const Mat& features : val_inputs)
          val_pred.push_back(predict_vas(candidate.model, features));
        const double score = mae(val_pred, val_truth);
        if (score < best_mae) {
          best_mae = score;
          hcfg.lambda = lambda;
        }
      }
    }

    auto trained = train_hcrf(hcrf_inputs, labels, hcfg);
    artifacts.hcrf = std::move(trained.model);
    artifacts.hcrf_trace = std::move(trained.trace);
    artifacts.hcrf_lambda_used = hcfg.lambda;
  }

  return artifacts;
}

Mat first_stage_features(const TrainedArtifacts& artifacts, const SequenceRecord& sequence) {
  const auto& cfg = artifacts.config;
  switch (cfg.first_stage) {
    case FirstStage::BiLSTM: {
      if (!artifacts.bilstm) throw Error("pipeline: bilstm stage is not trained");
      const Vec scores = predict_sequence(*artifacts.bilstm, projected_frames(artifacts.pca, sequence));
      Mat out(static_cast<int>(scores.size()), 1);
      for (std::size_t t = 0; t < scores.size(); ++t) out(static_cast<int>(t), 0) = scores[t];
      return out;
    }
    case FirstStage::Ffn: {
      if (!artifacts.ffn) throw Error("pipeline: ffn stage is not trained");
      const Vec scores = predict_sequence_ffn(*artifacts.ffn, projected_frames(artifacts.pca, sequence));
      Mat out(static_cast<int>(scores.size()), 1);
      for (std::size_t t = 0; t < scores.size(); ++t) out(static_cast<int>(t), 0) = scores[t];
      return out;
    }
    case FirstStage::GroundTruthPspi: {
      const Vec scores = scaled_pspi_targets(sequence, cfg.max_pspi);
      Mat out(static_cast<int>(scores.size()), 1);
      for (std::size_t t = 0; t < scores.size(); ++t) out(static_cast<int>(t), 0) = scores[t];
      return out;
    }
    case FirstStage::RawFeatures:
      return projected_frames(artifacts.pca, sequence);
  }
  throw Error("pipeline: unknown first stage");
}

Mat hcrf_features(const TrainedArtifacts& artifacts, const SequenceRecord& sequence, double p) {
  // stage output, then I-FES, then the constant bias coordinate
  return augment_features(augment_features(first_stage_features(artifacts, sequence), p), 1.0);
}

InferenceResult run_inference(const TrainedArtifacts& artifacts, const PersonRecord& person,
                              int alpha, std::uint64_t seed) {
  const int n_seq = static_cast<int>(person.sequences.size());
  if (alpha < 0) throw Error("pipeline: inference: alpha must be non-negative");
  if (alpha >= n_seq)
    throw Error("pipeline: inference: alpha=" + std::to_string(alpha) + " leaves no sequence of '" +
                person.person_id + "' to evaluate");

  InferenceResult result;
  result.held_out = select_ifes_subset(n_seq, alpha, seed);

  std::vector<std::pair<int, int>> pairs;
  for (const auto& s : person.sequences) pairs.emplace_back(s.opi, s.vas);
  result.ifes = compute_ifes(pairs, alpha, seed);
  result.ifes.person_id = person.person_id;

  std::vector<bool> held(n_seq, false);
  for (int i : result.held_out) held[i] = true;

  for (int i = 0; i < n_seq; ++i) {
    if (held[i]) continue;
    const auto& s = person.sequences[i];
    SequencePrediction pred;
    pred.sequence_index = i;
    pred.vas_true = s.vas;
    const Mat stage = first_stage_features(artifacts, s);
    if (stage.cols == 1) {
      pred.pspi_scaled.resize(stage.rows);
      for (int t = 0; t < stage.rows; ++t) pred.pspi_scaled[t] = stage(t, 0);
    }
    const Mat feats = augment_features(augment_features(stage, result.ifes.p), 1.0);
    pred.vas_pred = predict_vas(artifacts.hcrf, feats);
    result.predictions.push_back(std::move(pred));
  }
  return result;
}

namespace {

double sample_std(const Vec& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double mean_of(const Vec& values) {
  double s = 0.0;
  for (double v : values) s += v;
  return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("pipeline: cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

void save_artifacts(const TrainedArtifacts& artifacts, const std::string& dir) {
  fs::create_directories(dir);
  write_file(fs::path(dir) / "pca.json", pca_to_json(artifacts.pca));
  if (artifacts.bilstm) write_file(fs::path(dir) / "bilstm.json", regressor_to_json(*artifacts.bilstm));
  if (artifacts.ffn) write_file(fs::path(dir) / "ffn.json", ffn_to_json(*artifacts.ffn));
  write_file(fs::path(dir) / "hcrf.json", hcrf_to_json(artifacts.hcrf));

  json ifes = json::array();
  for (const auto& s : artifacts.train_ifes)
    ifes.push_back({{"person_id", s.person_id}, {"p", s.p}, {"alpha_used", s.alpha_used}});
  write_file(fs::path(dir) / "train_ifes.json", ifes.dump(2));

  json meta;
  meta["hcrf_lambda_used"] = artifacts.hcrf_lambda_used;
  write_file(fs::path(dir) / "training_meta.json", meta.dump(2));

  if (!artifacts.regressor_epoch_loss.empty()) {
    std::string csv = "epoch,loss\n";
    for (std::size_t i = 0; i < artifacts.regressor_epoch_loss.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, artifacts.regressor_epoch_loss[i]);
      csv += buf;
    }
    write_file(fs::path(dir) / "regressor_loss.csv", csv);
  }
  write_file(fs::path(dir) / "hcrf_trace.csv", trace_to_csv(artifacts.hcrf_trace));
}

TrainedArtifacts load_artifacts(const ExperimentConfig& cfg, const std::string& dir) {
  auto read_file = [](const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("pipeline: cannot open artifact '" + path.string() + "'");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  TrainedArtifacts artifacts;
  artifacts.config = cfg;
  artifacts.pca = pca_from_json(read_file(fs::path(dir) / "pca.json"));
  if (cfg.first_stage == FirstStage::BiLSTM)
    artifacts.bilstm = regressor_from_json(read_file(fs::path(dir) / "bilstm.json"));
  if (cfg.first_stage == FirstStage::Ffn)
    artifacts.ffn = ffn_from_json(read_file(fs::path(dir) / "ffn.json"));
  artifacts.hcrf = hcrf_from_json(read_file(fs::path(dir) / "hcrf.json"));
  const json meta = json::parse(read_file(fs::path(dir) / "training_meta.json"));
  artifacts.hcrf_lambda_used = meta.at("hcrf_lambda_used").get<double>();
  const json ifes = json::parse(read_file(fs::path(dir) / "train_ifes.json"));
  for (const auto& e : ifes) {
    IFESScore s;
    s.person_id = e.at("person_id").get<std::string>();
    s.p = e.at("p").get<double>();
    s.alpha_used = e.at("alpha_used").get<int>();
    artifacts.train_ifes.push_back(std::move(s));
  }
  return artifacts;
}

ExperimentReport run_alpha_experiment(const ExperimentConfig& cfg) {
  if (cfg.repetitions < 1) throw Error("pipeline: experiment: repetitions must be >= 1");
  for (int a : cfg.alphas)
    if (a < 0) throw Error("pipeline: experiment: alphas must be non-negative");

  const Cohort cohort = load_experiment_cohort(cfg);
  auto [train, test] = split_subject_independent(cohort, cfg.n_train, cfg.split_seed);

  const TrainedArtifacts artifacts = run_learning(cfg, train);

  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);
  save_artifacts(artifacts, (out_dir / "artifacts").string());

  // First-stage outputs per test sequence are independent of alpha and
  // repetition; build the personalized features from the cached stage output.
  std::vector<std::vector<Mat>> stage_cache(test.persons.size());
  for (std::size_t pi = 0; pi < test.persons.size(); ++pi)
    for (const auto& s : test.persons[pi].sequences)
      stage_cache[pi].push_back(first_stage_features(artifacts, s));

  json conditions = json::array();
  for (int alpha : cfg.alphas) {
    Vec rep_mae, rep_icc;
    std::vector<bool> rep_icc_defined;
    json reps = json::array();
    auto pooled_confusion =
        std::vector<std::vector<long long>>(cfg.hcrf.n_classes,
                                            std::vector<long long>(cfg.hcrf.n_classes, 0));
    // per person: MAE per repetition, I-FES per repetition
    std::vector<Vec> person_mae(test.persons.size());
    std::vector<Vec> person_ifes(test.persons.size());

    for (int r = 1; r <= cfg.repetitions; ++r) {
      const std::uint64_t rep_seed = cfg.seed + static_cast<std::uint64_t>(r);
      Vec pred_pooled, true_pooled;
      std::vector<int> pred_labels, true_labels;

      for (std::size_t pi = 0; pi < test.persons.size(); ++pi) {
        const auto& person = test.persons[pi];
        const int n_seq = static_cast<int>(person.sequences.size());
        if (alpha >= n_seq)
          throw Error("pipeline: experiment: alpha=" + std::to_string(alpha) +
                      " leaves no sequence of '" + person.person_id + "' to evaluate");
        const std::uint64_t person_seed = derive_seed(rep_seed, static_cast<std::uint64_t>(alpha),
                                                      static_cast<std::uint64_t>(pi));
        const auto held = select_ifes_subset(n_seq, alpha, person_seed);
        std::vector<std::pair<int, int>> pairs;
        for (const auto& s : person.sequences) pairs.emplace_back(s.opi, s.vas);
        IFESScore ifes = compute_ifes(pairs, alpha, person_seed);
        ifes.person_id = person.person_id;
        person_ifes[pi].push_back(ifes.p);

        std::vector<bool> held_mask(n_seq, false);
        for (int i : held) held_mask[i] = true;

        Vec person_pred, person_true;
        for (int i = 0; i < n_seq; ++i) {
          if (held_mask[i]) continue;
          const Mat feats =
              augment_features(augment_features(stage_cache[pi][i], ifes.p), 1.0);
          const int vas_pred = predict_vas(artifacts.hcrf, feats);
          const int vas_true = person.sequences[i].vas;
          person_pred.push_back(vas_pred);
          person_true.push_back(vas_true);
          pred_labels.push_back(vas_pred);
          true_labels.push_back(vas_true);
        }
        person_mae[pi].push_back(mae(person_pred, person_true));
        pred_pooled.insert(pred_pooled.end(), person_pred.begin(), person_pred.end());
        true_pooled.insert(true_pooled.end(), person_true.begin(), person_true.end());
      }

      const double rep_mae_value = mae(pred_pooled, true_pooled);
      const auto rep_icc_value = icc31(pred_pooled, true_pooled);
      rep_mae.push_back(rep_mae_value);
      if (rep_icc_value) rep_icc.push_back(*rep_icc_value);
      rep_icc_defined.push_back(rep_icc_value.has_value());

      const auto confusion = confusion_matrix(pred_labels, true_labels, cfg.hcrf.n_classes);
      for (int i = 0; i < cfg.hcrf.n_classes; ++i)
        for (int jx = 0; jx < cfg.hcrf.n_classes; ++jx) pooled_confusion[i][jx] += confusion[i][jx];

      json rep_json;
      rep_json["repetition"] = r;
      rep_json["seed"] = rep_seed;
      rep_json["mae"] = rep_mae_value;
      rep_json["icc31"] = rep_icc_value ? json(*rep_icc_value) : json(nullptr);
      rep_json["n"] = static_cast<int>(pred_pooled.size());
      reps.push_back(std::move(rep_json));
    }

    json per_person = json::array();
    for (std::size_t pi = 0; pi < test.persons.size(); ++pi) {
      per_person.push_back({{"person_id", test.persons[pi].person_id},
                            {"mae_mean", mean_of(person_mae[pi])},
                            {"mae_std", sample_std(person_mae[pi])},
                            {"ifes_per_repetition", person_ifes[pi]},
                            {"n_sequences", test.persons[pi].sequences.size()}});
    }

    const bool icc_all_defined =
        std::all_of(rep_icc_defined.begin(), rep_icc_defined.end(), [](bool b) { return b; });
    json cond;
    cond["alpha"] = alpha;
    cond["repetitions"] = std::move(reps);
    cond["mae_mean"] = mean_of(rep_mae);
    cond["mae_std"] = sample_std(rep_mae);
    cond["icc31_mean"] = icc_all_defined && !rep_icc.empty() ? json(mean_of(rep_icc)) : json(nullptr);
    cond["icc31_std"] = icc_all_defined && !rep_icc.empty() ? json(sample_std(rep_icc)) : json(nullptr);
    cond["confusion_pooled"] = pooled_confusion;
    cond["per_person"] = std::move(per_person);
    conditions.push_back(std::move(cond));

    write_file(out_dir / ("confusion_alpha" + std::to_string(alpha) + ".csv"),
               confusion_to_csv(pooled_confusion));
  }

  json report;
  report["first_stage"] = first_stage_name(cfg.first_stage);
  report["n_train_persons"] = cfg.n_train;
  report["alphas"] = cfg.alphas;
  report["repetitions"] = cfg.repetitions;
  report["conditions"] = std::move(conditions);

  // per-person MAE table across alphas
  {
    std::string csv = "person_id";
    for (int alpha : cfg.alphas) csv += ",mae_mean_alpha" + std::to_string(alpha);
    csv += "\n";
    for (std::size_t pi = 0; pi < test.persons.size(); ++pi) {
      csv += test.persons[pi].person_id;
      for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
        const double v =
            report["conditions"][ai]["per_person"][pi]["mae_mean"].get<double>();
        char buf[64];
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        csv += buf;
      }
      csv += "\n";
    }
    write_file(out_dir / "per_person_mae.csv", csv);
  }

  ExperimentReport out;
  out.json = report.dump(2);
  write_file(out_dir / "report.json", out.json);

  json manifest;
  manifest["config"] = json::parse(experiment_config_to_json(cfg));
  manifest["repetition_seeds"] = [&] {
    json seeds = json::array();
    for (int r = 1; r <= cfg.repetitions; ++r) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(r));
    return seeds;
  }();
  manifest["artifact_dir"] = "artifacts";
  write_file(out_dir / "run_manifest.json", manifest.dump(2));

  return out;
}

EvalReport evaluate_pspi_stage(const TrainedArtifacts& artifacts, const Cohort& test) {
  if (artifacts.config.first_stage == FirstStage::RawFeatures)
    throw Error("pipeline: eval-pspi: the raw-features stage produces no PSPI estimates");

  const int max_pspi = artifacts.config.max_pspi;
  Vec pred, truth;
  std::vector<int> pred_rounded, truth_labels;
  for (const auto& person : test.persons) {
    for (const auto& s : person.sequences) {
      const Mat stage = first_stage_features(artifacts, s);
      for (int t = 0; t < stage.rows; ++t) {
        const double estimate = stage(t, 0) * max_pspi;
        pred.push_back(estimate);
        truth.push_back(static_cast<double>(s.pspi[t]));
        pred_rounded.push_back(
            std::clamp(static_cast<int>(std::lround(estimate)), 0, max_pspi));
        truth_labels.push_back(s.pspi[t]);
      }
    }
  }
  if (pred.empty()) throw Error("pipeline: eval-pspi: test cohort is empty");

  EvalReport report;
  report.mae = mae(pred, truth);
  report.icc31 = icc31(pred, truth);
  report.confusion = confusion_matrix(pred_rounded, truth_labels, max_pspi + 1);
  report.n = static_cast<int>(pred.size());
  return report;
}

}  // namespace painvas
