#include "painvas/features.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

using nlohmann::json;

namespace painvas {

Mat normalize_landmarks(const Mat& frames) {
  if (frames.rows < 1) throw Error("features: no frames to normalize");
  if (frames.cols % 2 != 0) throw Error("features: frame dimension must be even (x/y pairs)");
  const int n = frames.cols / 2;

  Mat out(frames.rows, frames.cols);
  for (int t = 0; t < frames.rows; ++t) {
    const double* f = frames.row(t);
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
      mx += f[i];
      my += f[n + i];
    }
    mx /= n;
    my /= n;
    double ms = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dx = f[i] - mx;
      const double dy = f[n + i] - my;
      ms += dx * dx + dy * dy;
    }
    const double rms = std::sqrt(ms / n);
    if (rms < 1e-12)
      throw Error("features: degenerate frame " + std::to_string(t) + " (all points coincide)");
    for (int i = 0; i < n; ++i) {
      out(t, i) = (f[i] - mx) / rms;
      out(t, n + i) = (f[n + i] - my) / rms;
    }
  }
  return out;
}

PCAModel fit_pca(const Mat& frames, double variance_target) {
  if (frames.rows < 2) throw Error("features: PCA needs at least 2 frames");
  if (!(variance_target > 0.0) || variance_target > 1.0)
    throw Error("features: variance target must be in (0,1]");

  const int n = frames.rows;
  const int d = frames.cols;

  Vec mean(d, 0.0);
  for (int t = 0; t < n; ++t)
    for (int j = 0; j < d; ++j) mean[j] += frames(t, j);
  for (int j = 0; j < d; ++j) mean[j] /= n;

  Eigen::MatrixXd centered(n, d);
  for (int t = 0; t < n; ++t)
    for (int j = 0; j < d; ++j) centered(t, j) = frames(t, j) - mean[j];
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("features: eigendecomposition failed");

  // ascending from Eigen; flip to descending and clamp round-off negatives
  std::vector<std::pair<double, int>> order(d);
  for (int i = 0; i < d; ++i) order[i] = {std::max(eig.eigenvalues()(i), 0.0), i};
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  double total = 0.0;
  for (const auto& [lam, idx] : order) total += lam;
  if (total <= 0.0) throw Error("features: input has zero variance");

  const double lam_floor = order.front().first * 1e-12;
  int n_nonzero = 0;
  for (const auto& [lam, idx] : order)
    if (lam > lam_floor) ++n_nonzero;

  int m = 0;
  double cum = 0.0;
  for (int i = 0; i < n_nonzero; ++i) {
    cum += order[i].first / total;
    ++m;
    if (cum >= variance_target - 1e-12) break;
  }

  PCAModel model;
  model.mean = std::move(mean);
  model.basis = Mat(m, d);
  model.explained_variance_ratio.resize(m);
  model.eigenvalues.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto& [lam, idx] = order[i];
    model.eigenvalues[i] = lam;
    model.explained_variance_ratio[i] = lam / total;
    int arg = 0;
    double best = 0.0;
    for (int j = 0; j < d; ++j) {
      const double v = std::abs(eig.eigenvectors()(j, idx));
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    const double sign = eig.eigenvectors()(arg, idx) < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < d; ++j) model.basis(i, j) = sign * eig.eigenvectors()(j, idx);
  }
  return model;
}

Vec project(const PCAModel& model, const double* frame, int dim) {
  if (dim != model.input_dim())
    throw Error("features: frame dimension " + std::to_string(dim) + " does not match PCA input " +
                std::to_string(model.input_dim()));
  Vec out(model.n_components(), 0.0);
  for (int c = 0; c < model.n_components(); ++c) {
    const double* b = model.basis.row(c);
    double s = 0.0;
    for (int j = 0; j < dim; ++j) s += b[j] * (frame[j] - model.mean[j]);
    out[c] = s;
  }
  return out;
}

Vec project(const PCAModel& model, const Vec& frame) {
  return project(model, frame.data(), static_cast<int>(frame.size()));
}

Mat project_all(const PCAModel& model, const Mat& frames) {
  Mat out(frames.rows, model.n_components());
  for (int t = 0; t < frames.rows; ++t) {
    const Vec p = project(model, frames.row(t), frames.cols);
    for (int c = 0; c < out.cols; ++c) out(t, c) = p[c];
  }
  return out;
}

std::string pca_to_json(const PCAModel& model) {
  json j;
  j["mean"] = model.mean;
  j["basis"] = {{"rows", model.basis.rows}, {"cols", model.basis.cols}, {"data", model.basis.a}};
  j["explained_variance_ratio"] = model.explained_variance_ratio;
  j["eigenvalues"] = model.eigenvalues;
  return j.dump();
}

PCAModel pca_from_json(const std::string& text) {
  const json j = json::parse(text);
  PCAModel model;
  model.mean = j.at("mean").get<Vec>();
  model.basis = Mat(j.at("basis").at("rows").get<int>(), j.at("basis").at("cols").get<int>());
  model.basis.a = j.at("basis").at("data").get<Vec>();
  model.explained_variance_ratio = j.at("explained_variance_ratio").get<Vec>();
  model.eigenvalues = j.at("eigenvalues").get<Vec>();
  if (model.basis.a.size() != static_cast<std::size_t>(model.basis.rows) * model.basis.cols)
    throw Error("features: PCA basis shape does not match its data");
  return model;
}

std::vector<std::vector<int>> balance_training_frames(
    const std::vector<SequenceRecord>& sequences) {
  long long n_level_one = 0;
  for (const auto& s : sequences)
    for (int v : s.pspi)
      if (v == 1) ++n_level_one;

  struct Neutral {
    double dist;
    int seq;
    int frame;
  };
  std::vector<Neutral> neutrals;
  std::vector<std::vector<int>> kept(sequences.size());

  for (std::size_t si = 0; si < sequences.size(); ++si) {
    const auto& pspi = sequences[si].pspi;
    const int t_len = static_cast<int>(pspi.size());

    // distance to the nearest non-neutral frame, scanning both directions
    std::vector<double> dist(t_len, std::numeric_limits<double>::infinity());
    double last = std::numeric_limits<double>::infinity();
    for (int t = 0; t < t_len; ++t) {
      if (pspi[t] >= 1) last = 0;
      else if (std::isfinite(last)) ++last;
      dist[t] = last;
    }
    last = std::numeric_limits<double>::infinity();
    for (int t = t_len - 1; t >= 0; --t) {
      if (pspi[t] >= 1) last = 0;
      else if (std::isfinite(last)) ++last;
      dist[t] = std::min(dist[t], last);
    }

    for (int t = 0; t < t_len; ++t) {
      if (pspi[t] >= 1) kept[si].push_back(t);
      else neutrals.push_back({dist[t], static_cast<int>(si), t});
    }
  }

  // keep the closest neutrals, earlier sequence/frame preferred on ties
  std::sort(neutrals.begin(), neutrals.end(), [](const Neutral& a, const Neutral& b) {
    return std::tie(a.dist, a.seq, a.frame) < std::tie(b.dist, b.seq, b.frame);
  });
  const std::size_t n_keep = std::min<std::size_t>(neutrals.size(), static_cast<std::size_t>(n_level_one));
  for (std::size_t i = 0; i < n_keep; ++i) kept[neutrals[i].seq].push_back(neutrals[i].frame);

  for (auto& k : kept) std::sort(k.begin(), k.end());
  return kept;
}

}  // namespace painvas
