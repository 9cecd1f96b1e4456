#pragma once

// Window-based PSPI regressors: a from-scratch bidirectional LSTM over
// centered 15-frame windows with a ReLU head, trained by RMSProp on exact
// backpropagation-through-time gradients, and the single-hidden-layer
// feedforward baseline over single frames.

#include <cstdint>
#include <string>
#include <vector>

#include "painvas/common.hpp"

namespace painvas {

struct LSTMCellParams {
  int hidden = 0;
  int input_dim = 0;
  // gate order throughout: input, forget, cell candidate, output
  Mat wi, wf, wg, wo;  // hidden x input
  Mat ri, rf, rg, ro;  // hidden x hidden
  Vec bi, bf, bg, bo;  // hidden
};

struct BiLSTMRegressor {
  int input_dim = 0;
  int hidden = 128;
  int head_units = 64;
  int window_radius = 7;
  LSTMCellParams fwd, bwd;
  Mat head_w;       // head_units x 2*hidden
  Vec head_b;       // head_units
  Vec out_w;        // head_units
  double out_b = 0.0;

  int window_length() const { return 2 * window_radius + 1; }

  // uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] weights; forget bias 1
  static BiLSTMRegressor init(int input_dim, int hidden, int head_units, int window_radius,
                              std::uint64_t seed);
  static BiLSTMRegressor zeros_like(const BiLSTMRegressor& shape);
};

Vec pack(const BiLSTMRegressor& model);
void unpack(const Vec& flat, BiLSTMRegressor& model);

// centered window with edge replication at the sequence boundaries
Mat make_window(const Mat& frames, int center, int radius);

// forward cell consumes rows first to last, backward cell last to first; the
// two final hidden states feed the ReLU head.
double forward_window(const BiLSTMRegressor& model, const Mat& window);

// one score per frame, clamped to [0,1]
Vec predict_sequence(const BiLSTMRegressor& model, const Mat& frames);

struct LossAndGrad {
  double loss = 0.0;
  BiLSTMRegressor grad;
};

// mean squared error over the batch; exact BPTT through both directions
LossAndGrad loss_and_gradient(const BiLSTMRegressor& model, const std::vector<Mat>& windows,
                              const Vec& targets);

struct RegressorTrainConfig {
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
  int batch_size = 32;
  int epochs = 30;
};

struct RegressorTrainResult {
  BiLSTMRegressor model;
  Vec epoch_loss;
};

RegressorTrainResult train_regressor(BiLSTMRegressor model, const std::vector<Mat>& windows,
                                     const Vec& targets, const RegressorTrainConfig& cfg,
                                     std::uint64_t seed);

std::string regressor_to_json(const BiLSTMRegressor& model);
BiLSTMRegressor regressor_from_json(const std::string& text);

// ---- feedforward baseline (one hidden ReLU layer over a single frame) ----

struct FeedforwardBaseline {
  int input_dim = 0;
  int hidden_units = 200;
  Mat w1;  // hidden_units x input_dim
  Vec b1;
  Vec w2;  // hidden_units
  double b2 = 0.0;

  static FeedforwardBaseline init(int input_dim, int hidden_units, std::uint64_t seed);
  static FeedforwardBaseline zeros_like(const FeedforwardBaseline& shape);
};

Vec pack(const FeedforwardBaseline& model);
void unpack(const Vec& flat, FeedforwardBaseline& model);

double forward_ffn(const FeedforwardBaseline& model, const double* frame, int dim);

Vec predict_sequence_ffn(const FeedforwardBaseline& model, const Mat& frames);

struct FfnLossAndGrad {
  double loss = 0.0;
  FeedforwardBaseline grad;
};

FfnLossAndGrad loss_and_gradient_ffn(const FeedforwardBaseline& model, const Mat& frames,
                                     const Vec& targets);

struct FfnTrainResult {
  FeedforwardBaseline model;
  Vec epoch_loss;
};

FfnTrainResult train_ffn(FeedforwardBaseline model, const Mat& frames, const Vec& targets,
                         const RegressorTrainConfig& cfg, std::uint64_t seed);

std::string ffn_to_json(const FeedforwardBaseline& model);
FeedforwardBaseline ffn_from_json(const std::string& text);

}  // namespace painvas
