#pragma once

// Hidden conditional random field over per-frame feature vectors: one
// linear-chain CRF per class (unary weights u_k, stationary transition
// weights m_k), latent state paths summed out by log-space forward-backward,
// trained by L-BFGS on the exact gradient of the L2-regularized negative
// log-likelihood.

#include <cstdint>
#include <string>
#include <vector>

#include "painvas/common.hpp"
#include "painvas/optim.hpp"

namespace painvas {

struct HCRFModel {
  int n_classes = 11;  // class k <-> VAS value k
  int n_states = 11;
  int feature_dim = 0;        // includes the appended I-FES and bias coordinates
  std::vector<Mat> unary;     // per class: n_states x feature_dim
  std::vector<Mat> trans;     // per class: n_states x n_states

  static HCRFModel init(int n_classes, int n_states, int feature_dim, double scale,
                        std::uint64_t seed);
};

Vec pack(const HCRFModel& model);
void unpack(const Vec& flat, HCRFModel& model);

double unary_potential(const HCRFModel& model, int k, int state, const double* frame, int dim);
double edge_potential(const HCRFModel& model, int k, int from_state, int to_state);

// sum of unary potentials along the path plus edge potentials between
// consecutive states
double sequence_score(const HCRFModel& model, int k, const Mat& features,
                      const std::vector<int>& path);

// log sum over all hidden paths of exp(sequence_score), forward recursion in
// log space
double log_partition(const HCRFModel& model, int k, const Mat& features);

// P(v = k | features) over all classes
Vec class_posterior(const HCRFModel& model, const Mat& features);

struct Marginals {
  Mat unary;                  // T x n_states, rows sum to 1
  std::vector<Mat> pairwise;  // T-1 matrices, n_states x n_states
  double log_z = 0.0;
};

Marginals state_marginals(const HCRFModel& model, int k, const Mat& features);

// negative log-likelihood of the labels plus lambda*||params||^2, with its
// exact gradient
struct RllResult {
  double value = 0.0;
  HCRFModel gradient;
};

RllResult rll_and_gradient(const HCRFModel& model, const std::vector<Mat>& sequences,
                           const std::vector<int>& labels, double lambda);

struct HCRFTrainConfig {
  double lambda = 1.0;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  int n_classes = 11;
  int n_states = 11;
  LBFGSConfig lbfgs;
};

struct HCRFTrainResult {
  HCRFModel model;
  std::vector<LBFGSTracePoint> trace;
  double final_value = 0.0;
};

HCRFTrainResult train_hcrf(const std::vector<Mat>& sequences, const std::vector<int>& labels,
                           const HCRFTrainConfig& cfg);

// argmax of the class posterior; ties resolve to the lower class
int predict_vas(const HCRFModel& model, const Mat& features);

// exhaustive path enumeration; refuses instances beyond 10^6 paths
double brute_force_log_partition(const HCRFModel& model, int k, const Mat& features);

std::string hcrf_to_json(const HCRFModel& model);
HCRFModel hcrf_from_json(const std::string& text);

}  // namespace painvas
