#include "painvas/optim.hpp"

#include <cmath>
#include <sstream>

namespace painvas {

void rmsprop_step(Vec& params, const Vec& grads, RmspropState& state, double lr, double decay,
                  double eps) {
  if (params.size() != grads.size()) throw Error("optim: rmsprop shape mismatch");
  if (state.mean_sq.empty()) state.mean_sq.assign(params.size(), 0.0);
  if (state.mean_sq.size() != params.size()) throw Error("optim: rmsprop state shape mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!std::isfinite(grads[i])) throw Error("optim: non-finite gradient in rmsprop step");
    state.mean_sq[i] = decay * state.mean_sq[i] + (1.0 - decay) * grads[i] * grads[i];
    params[i] -= lr * grads[i] / (std::sqrt(state.mean_sq[i]) + eps);
  }
}

namespace {

double inf_norm(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

Vec two_loop_direction(const std::vector<Vec>& s_hist, const std::vector<Vec>& y_hist,
                       const Vec& grad, double gamma) {
  const int m = static_cast<int>(s_hist.size());
  Vec q = grad;
  Vec alpha(m, 0.0), rho(m, 0.0);
  for (int i = m - 1; i >= 0; --i) {
    rho[i] = 1.0 / dot(s_hist[i].data(), y_hist[i].data(), static_cast<int>(q.size()));
    alpha[i] = rho[i] * dot(s_hist[i].data(), q.data(), static_cast<int>(q.size()));
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * y_hist[i][j];
  }
  for (double& v : q) v *= gamma;
  for (int i = 0; i < m; ++i) {
    const double beta = rho[i] * dot(y_hist[i].data(), q.data(), static_cast<int>(q.size()));
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[i] - beta) * s_hist[i][j];
  }
  return q;
}

LBFGSResult lbfgs_minimize(const Objective& objective, Vec x0, const LBFGSConfig& cfg) {
  const int n = static_cast<int>(x0.size());
  Vec grad(n, 0.0);
  double value = objective(x0, grad);
  if (!std::isfinite(value)) throw Error("optim: objective is not finite at the start point");

  LBFGSResult result;
  result.x = x0;
  result.value = value;
  result.trace.push_back({0, value, inf_norm(grad), 0.0});

  Vec x = std::move(x0);
  Vec best_x = x;
  double best_value = value;

  std::vector<Vec> s_hist, y_hist;
  double gamma = 1.0;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    if (inf_norm(grad) <= cfg.gradient_tolerance) {
      result.status = LBFGSStatus::GradientTolerance;
      result.iterations = iter - 1;
      result.x = std::move(best_x);
      result.value = best_value;
      return result;
    }

    Vec dir = two_loop_direction(s_hist, y_hist, grad, gamma);
    for (double& v : dir) v = -v;
    double slope = dot(dir.data(), grad.data(), n);
    if (!(slope < 0.0)) {  // not a descent direction; fall back to steepest descent
      for (int i = 0; i < n; ++i) dir[i] = -grad[i];
      slope = -dot(grad.data(), grad.data(), n);
    }

    double step = 1.0;
    bool accepted = false;
    Vec x_new(n), grad_new(n, 0.0);
    double value_new = 0.0;
    Vec trial_x(n), trial_grad(n, 0.0);
    int trials = 0;
    const auto try_step = [&](double t) {
      for (int i = 0; i < n; ++i) trial_x[i] = x[i] + t * dir[i];
      const double v = objective(trial_x, trial_grad);
      ++trials;
      if (std::isfinite(v) && v < best_value) {
        best_value = v;
        best_x = trial_x;
      }
      return v;
    };
    double v = try_step(step);
    if (std::isfinite(v) && v <= value + cfg.armijo_c * step * slope) {
      // unit step already passes; grow it while the Armijo bound keeps holding,
      // so near-stationary history cannot trap the iteration in tiny moves
      accepted = true;
      x_new = trial_x;
      grad_new = trial_grad;
      value_new = v;
      while (trials < cfg.max_line_search_trials) {
        const double wider = step * 2.0;
        v = try_step(wider);
        if (!(std::isfinite(v) && v <= value + cfg.armijo_c * wider * slope)) break;
        step = wider;
        x_new = trial_x;
        grad_new = trial_grad;
        value_new = v;
      }
    } else {
      while (trials < cfg.max_line_search_trials) {
        step *= cfg.backtrack_shrink;
        v = try_step(step);
        if (std::isfinite(v) && v <= value + cfg.armijo_c * step * slope) {
          accepted = true;
          x_new = trial_x;
          grad_new = trial_grad;
          value_new = v;
          break;
        }
      }
    }
    if (!accepted) {
      result.status = LBFGSStatus::LineSearchFailure;
      result.iterations = iter - 1;
      result.x = std::move(best_x);
      result.value = best_value;
      return result;
    }

    Vec s(n), y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(s.data(), y.data(), n);
    if (sy > 1e-10) {  // skip pairs that would break positive definiteness
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      if (static_cast<int>(s_hist.size()) > cfg.history_size) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
      }
      gamma = sy / dot(y_hist.back().data(), y_hist.back().data(), n);
    }

    x = std::move(x_new);
    grad = grad_new;
    value = value_new;
    result.trace.push_back({iter, value, inf_norm(grad), step});
    result.iterations = iter;
  }

  result.status = LBFGSStatus::IterationCap;
  result.x = std::move(best_x);
  result.value = best_value;
  return result;
}

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size(), 0.0);
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::string trace_to_csv(const std::vector<LBFGSTracePoint>& trace) {
  std::ostringstream out;
  out << "iteration,value,grad_inf_norm,step_size\n";
  out.precision(17);
  for (const auto& p : trace)
    out << p.iteration << "," << p.value << "," << p.grad_inf_norm << "," << p.step_size << "\n";
  return out.str();
}

}  // namespace painvas
