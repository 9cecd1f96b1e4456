#pragma once

// Shared numerical optimizers over flat parameter vectors: an RMSProp
// stepper, an L-BFGS minimizer with Armijo backtracking, and the central
// finite-difference gradient used by the gradient test suites.

#include <functional>
#include <string>
#include <vector>

#include "painvas/common.hpp"

namespace painvas {

struct RmspropState {
  Vec mean_sq;  // running average of squared gradients
};

// state' = decay*state + (1-decay)*g^2 ; params' = params - lr*g/(sqrt(state')+eps)
void rmsprop_step(Vec& params, const Vec& grads, RmspropState& state, double lr, double decay,
                  double eps);

struct LBFGSConfig {
  int history_size = 10;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;  // infinity norm
  double armijo_c = 1e-4;
  double backtrack_shrink = 0.5;
  int max_line_search_trials = 50;
};

enum class LBFGSStatus { GradientTolerance, IterationCap, LineSearchFailure };

struct LBFGSTracePoint {
  int iteration = 0;
  double value = 0.0;
  double grad_inf_norm = 0.0;
  double step_size = 0.0;
};

struct LBFGSResult {
  Vec x;
  double value = 0.0;
  LBFGSStatus status = LBFGSStatus::IterationCap;
  int iterations = 0;
  std::vector<LBFGSTracePoint> trace;
};

// objective fills grad and returns the value
using Objective = std::function<double(const Vec&, Vec&)>;

LBFGSResult lbfgs_minimize(const Objective& objective, Vec x0, const LBFGSConfig& cfg = {});

// H*grad via the two-loop recursion with initial scaling gamma*I; exposed for
// the quadratic Newton-direction check.
Vec two_loop_direction(const std::vector<Vec>& s_hist, const std::vector<Vec>& y_hist,
                       const Vec& grad, double gamma);

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h);

std::string trace_to_csv(const std::vector<LBFGSTracePoint>& trace);

}  // namespace painvas
