#pragma once

// End-to-end orchestration: train the first-stage regressor, compute
// per-person expressiveness scores, train the personalized HCRF, run
// inference with held-out score sequences, and drive the alpha-sweep
// experiment protocol with seeded repetitions.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "painvas/data.hpp"
#include "painvas/features.hpp"
#include "painvas/hcrf.hpp"
#include "painvas/metrics.hpp"
#include "painvas/personalization.hpp"
#include "painvas/regressor.hpp"

namespace painvas {

enum class FirstStage { BiLSTM, Ffn, GroundTruthPspi, RawFeatures };

std::string first_stage_name(FirstStage stage);
FirstStage first_stage_from_name(const std::string& name);

struct RegressorConfig {
  int hidden_units = 128;
  int head_units = 64;
  int window_radius = 7;
  int ffn_hidden_units = 200;
  bool balance = true;
  RegressorTrainConfig train;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  // cohort source: a manifest path, or the synthetic generator when empty
  std::string manifest_path;
  SyntheticConfig synthetic;
  std::uint64_t synthetic_seed = 1;

  int n_train = 15;
  std::uint64_t split_seed = 0;

  FirstStage first_stage = FirstStage::BiLSTM;
  std::vector<int> alphas = {0, 1, 2};
  int repetitions = 5;
  std::uint64_t seed = 0;  // base seed; repetition r draws from seed + r

  double pca_variance = 0.95;
  int max_pspi = kDefaultMaxPspi;

  RegressorConfig regressor;
  HCRFTrainConfig hcrf;
  // when non-empty, the HCRF lambda is picked from this grid by VAS MAE on a
  // training-internal person split, then the model is retrained on all
  // training persons with the winner
  std::vector<double> hcrf_lambda_grid;

  std::string out_dir = "out";
};

std::string experiment_config_to_json(const ExperimentConfig& cfg);
// Accepts either a bare config document or a run manifest wrapping one under
// its "config" key, so a finished run can be reproduced directly.
ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

struct TrainedArtifacts {
  ExperimentConfig config;
  PCAModel pca;
  std::optional<BiLSTMRegressor> bilstm;
  std::optional<FeedforwardBaseline> ffn;
  HCRFModel hcrf;
  double hcrf_lambda_used = 1.0;
  std::vector<IFESScore> train_ifes;
  Vec regressor_epoch_loss;
  std::vector<LBFGSTracePoint> hcrf_trace;
};

Cohort load_experiment_cohort(const ExperimentConfig& cfg);

TrainedArtifacts run_learning(const ExperimentConfig& cfg, const Cohort& train);

void save_artifacts(const TrainedArtifacts& artifacts, const std::string& dir);
TrainedArtifacts load_artifacts(const ExperimentConfig& cfg, const std::string& dir);

// first-stage output for one sequence: a T x 1 score matrix for the
// regressor/ground-truth stages, or the projected landmarks for the
// raw-features stage
Mat first_stage_features(const TrainedArtifacts& artifacts, const SequenceRecord& sequence);

// [stage output, I-FES, bias 1] per frame
Mat hcrf_features(const TrainedArtifacts& artifacts, const SequenceRecord& sequence, double p);

struct SequencePrediction {
  int sequence_index = 0;
  Vec pspi_scaled;  // empty for the raw-features stage
  int vas_pred = 0;
  int vas_true = 0;
};

struct InferenceResult {
  IFESScore ifes;
  std::vector<int> held_out;  // sequences consumed by the I-FES estimate
  std::vector<SequencePrediction> predictions;
};

InferenceResult run_inference(const TrainedArtifacts& artifacts, const PersonRecord& person,
                              int alpha, std::uint64_t seed);

struct ExperimentReport {
  std::string json;  // full machine-readable report
};

ExperimentReport run_alpha_experiment(const ExperimentConfig& cfg);

EvalReport evaluate_pspi_stage(const TrainedArtifacts& artifacts, const Cohort& test);

}  // namespace painvas
