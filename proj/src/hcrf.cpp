#include "painvas/hcrf.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace painvas {

namespace {

void check_class(const HCRFModel& model, int k) {
  if (k < 0 || k >= model.n_classes)
    throw Error("hcrf: class " + std::to_string(k) + " outside [0," +
                std::to_string(model.n_classes - 1) + "]");
}

void check_features(const HCRFModel& model, const Mat& features) {
  if (features.rows < 1) throw Error("hcrf: empty feature sequence");
  if (features.cols != model.feature_dim)
    throw Error("hcrf: feature dimension " + std::to_string(features.cols) +
                " does not match model dimension " + std::to_string(model.feature_dim));
}

// T x C table of unary potentials for class k
Mat unary_table(const HCRFModel& model, int k, const Mat& features) {
  const int t_len = features.rows;
  const int c_len = model.n_states;
  Mat pot(t_len, c_len);
  for (int t = 0; t < t_len; ++t) {
    const double* frame = features.row(t);
    for (int c = 0; c < c_len; ++c)
      pot(t, c) = dot(model.unary[k].row(c), frame, model.feature_dim);
  }
  return pot;
}

Mat forward_messages(const HCRFModel& model, int k, const Mat& pot) {
  const int t_len = pot.rows;
  const int c_len = pot.cols;
  const Mat& m = model.trans[k];
  Mat alpha(t_len, c_len);
  for (int c = 0; c < c_len; ++c) alpha(0, c) = pot(0, c);
  Vec scratch(c_len);
  for (int t = 1; t < t_len; ++t) {
    for (int c = 0; c < c_len; ++c) {
      for (int l = 0; l < c_len; ++l) scratch[l] = alpha(t - 1, l) + m(l, c);
      alpha(t, c) = pot(t, c) + log_sum_exp(scratch);
    }
  }
  return alpha;
}

Mat backward_messages(const HCRFModel& model, int k, const Mat& pot) {
  const int t_len = pot.rows;
  const int c_len = pot.cols;
  const Mat& m = model.trans[k];
  Mat beta(t_len, c_len, 0.0);
  Vec scratch(c_len);
  for (int t = t_len - 2; t >= 0; --t) {
    for (int c = 0; c < c_len; ++c) {
      for (int l = 0; l < c_len; ++l) scratch[l] = m(c, l) + pot(t + 1, l) + beta(t + 1, l);
      beta(t, c) = log_sum_exp(scratch);
    }
  }
  return beta;
}

}  // namespace

HCRFModel HCRFModel::init(int n_classes, int n_states, int feature_dim, double scale,
                          std::uint64_t seed) {
  if (n_classes < 1 || n_states < 1 || feature_dim < 1) throw Error("hcrf: invalid model dimensions");
  Rng rng(seed);
  HCRFModel model;
  model.n_classes = n_classes;
  model.n_states = n_states;
  model.feature_dim = feature_dim;
  model.unary.reserve(n_classes);
  model.trans.reserve(n_classes);
  for (int k = 0; k < n_classes; ++k) {
    Mat u(n_states, feature_dim);
    for (double& v : u.a) v = rng.uniform(-scale, scale);
    model.unary.push_back(std::move(u));
    Mat m(n_states, n_states);
    for (double& v : m.a) v = rng.uniform(-scale, scale);
    model.trans.push_back(std::move(m));
  }
  return model;
}

Vec pack(const HCRFModel& model) {
  Vec out;
  for (int k = 0; k < model.n_classes; ++k) {
    out.insert(out.end(), model.unary[k].a.begin(), model.unary[k].a.end());
    out.insert(out.end(), model.trans[k].a.begin(), model.trans[k].a.end());
  }
  return out;
}

void unpack(const Vec& flat, HCRFModel& model) {
  std::size_t pos = 0;
  for (int k = 0; k < model.n_classes; ++k) {
    std::copy(flat.begin() + pos, flat.begin() + pos + model.unary[k].a.size(),
              model.unary[k].a.begin());
    pos += model.unary[k].a.size();
    std::copy(flat.begin() + pos, flat.begin() + pos + model.trans[k].a.size(),
              model.trans[k].a.begin());
    pos += model.trans[k].a.size();
  }
  if (pos != flat.size()) throw Error("hcrf: flat parameter size mismatch");
}

double unary_potential(const HCRFModel& model, int k, int state, const double* frame, int dim) {
  check_class(model, k);
  if (state < 0 || state >= model.n_states) throw Error("hcrf: state index out of range");
  if (dim != model.feature_dim) throw Error("hcrf: frame dimension mismatch");
  return dot(model.unary[k].row(state), frame, dim);
}

double edge_potential(const HCRFModel& model, int k, int from_state, int to_state) {
  check_class(model, k);
  if (from_state < 0 || from_state >= model.n_states || to_state < 0 || to_state >= model.n_states)
    throw Error("hcrf: state index out of range");
  return model.trans[k](from_state, to_state);
}

double sequence_score(const HCRFModel& model, int k, const Mat& features,
                      const std::vector<int>& path) {
  check_class(model, k);
  check_features(model, features);
  if (static_cast<int>(path.size()) != features.rows)
    throw Error("hcrf: path length " + std::to_string(path.size()) + " for " +
                std::to_string(features.rows) + " frames");
  double score = 0.0;
  for (int t = 0; t < features.rows; ++t) {
    score += unary_potential(model, k, path[t], features.row(t), features.cols);
    if (t > 0) score += edge_potential(model, k, path[t - 1], path[t]);
  }
  return score;
}

double log_partition(const HCRFModel& model, int k, const Mat& features) {
  check_class(model, k);
  check_features(model, features);
  const Mat pot = unary_table(model, k, features);
  const Mat alpha = forward_messages(model, k, pot);
  return log_sum_exp(alpha.row(features.rows - 1), model.n_states);
}

Vec class_posterior(const HCRFModel& model, const Mat& features) {
  check_features(model, features);
  Vec log_z(model.n_classes);
  for (int k = 0; k < model.n_classes; ++k) log_z[k] = log_partition(model, k, features);
  const double total = log_sum_exp(log_z);
  Vec post(model.n_classes);
  for (int k = 0; k < model.n_classes; ++k) post[k] = std::exp(log_z[k] - total);
  return post;
}

Marginals state_marginals(const HCRFModel& model, int k, const Mat& features) {
  check_class(model, k);
  check_features(model, features);
  const int t_len = features.rows;
  const int c_len = model.n_states;

  const Mat pot = unary_table(model, k, features);
  const Mat alpha = forward_messages(model, k, pot);
  const Mat beta = backward_messages(model, k, pot);
  const double log_z = log_sum_exp(alpha.row(t_len - 1), c_len);

  Marginals out;
  out.log_z = log_z;
  out.unary = Mat(t_len, c_len);
  for (int t = 0; t < t_len; ++t)
    for (int c = 0; c < c_len; ++c) out.unary(t, c) = std::exp(alpha(t, c) + beta(t, c) - log_z);

  const Mat& m = model.trans[k];
  out.pairwise.reserve(std::max(0, t_len - 1));
  for (int t = 1; t < t_len; ++t) {
    Mat pw(c_len, c_len);
    for (int c = 0; c < c_len; ++c)
      for (int l = 0; l < c_len; ++l)
        pw(c, l) = std::exp(alpha(t - 1, c) + m(c, l) + pot(t, l) + beta(t, l) - log_z);
    out.pairwise.push_back(std::move(pw));
  }
  return out;
}

RllResult rll_and_gradient(const HCRFModel& model, const std::vector<Mat>& sequences,
                           const std::vector<int>& labels, double lambda) {
  if (sequences.size() != labels.size()) throw Error("hcrf: sequence/label count mismatch");
  for (int v : labels) {
    if (v < 0 || v >= model.n_classes)
      throw Error("hcrf: label " + std::to_string(v) + " outside [0," +
                  std::to_string(model.n_classes - 1) + "]");
  }

  RllResult result;
  result.gradient.n_classes = model.n_classes;
  result.gradient.n_states = model.n_states;
  result.gradient.feature_dim = model.feature_dim;
  for (int k = 0; k < model.n_classes; ++k) {
    result.gradient.unary.emplace_back(model.n_states, model.feature_dim);
    result.gradient.trans.emplace_back(model.n_states, model.n_states);
  }

  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const Mat& features = sequences[i];
    check_features(model, features);
    const int t_len = features.rows;

    std::vector<Marginals> marg(model.n_classes);
    Vec log_z(model.n_classes);
    for (int k = 0; k < model.n_classes; ++k) {
      marg[k] = state_marginals(model, k, features);
      log_z[k] = marg[k].log_z;
    }
    const double total = log_sum_exp(log_z);
    result.value -= log_z[labels[i]] - total;

    for (int k = 0; k < model.n_classes; ++k) {
      const double posterior = std::exp(log_z[k] - total);
      const double coeff = (k == labels[i] ? 1.0 : 0.0) - posterior;
      if (coeff == 0.0) continue;
      // d(-log P)/d theta_k = -coeff * E[features | class k]
      Mat& gu = result.gradient.unary[k];
      for (int t = 0; t < t_len; ++t) {
        const double* frame = features.row(t);
        for (int c = 0; c < model.n_states; ++c) {
          const double w = -coeff * marg[k].unary(t, c);
          if (w == 0.0) continue;
          double* row = gu.row(c);
          for (int j = 0; j < model.feature_dim; ++j) row[j] += w * frame[j];
        }
      }
      Mat& gm = result.gradient.trans[k];
      for (const Mat& pw : marg[k].pairwise)
        for (std::size_t idx = 0; idx < pw.a.size(); ++idx) gm.a[idx] += -coeff * pw.a[idx];
    }
  }

  if (lambda != 0.0) {
    for (int k = 0; k < model.n_classes; ++k) {
      for (std::size_t idx = 0; idx < model.unary[k].a.size(); ++idx) {
        result.value += lambda * model.unary[k].a[idx] * model.unary[k].a[idx];
        result.gradient.unary[k].a[idx] += 2.0 * lambda * model.unary[k].a[idx];
      }
      for (std::size_t idx = 0; idx < model.trans[k].a.size(); ++idx) {
        result.value += lambda * model.trans[k].a[idx] * model.trans[k].a[idx];
        result.gradient.trans[k].a[idx] += 2.0 * lambda * model.trans[k].a[idx];
      }
    }
  }
  return result;
}

HCRFTrainResult train_hcrf(const std::vector<Mat>& sequences, const std::vector<int>& labels,
                           const HCRFTrainConfig& cfg) {
  if (sequences.empty()) throw Error("hcrf: no training sequences");
  if (cfg.lambda < 0) throw Error("hcrf: lambda must be non-negative");
  const int feature_dim = sequences.front().cols;

  HCRFModel model = HCRFModel::init(cfg.n_classes, cfg.n_states, feature_dim, cfg.init_scale,
                                    cfg.seed);

  const Objective objective = [&](const Vec& flat, Vec& grad) {
    unpack(flat, model);
    const RllResult r = rll_and_gradient(model, sequences, labels, cfg.lambda);
    grad = pack(r.gradient);
    return r.value;
  };

  const LBFGSResult opt = lbfgs_minimize(objective, pack(model), cfg.lbfgs);
  unpack(opt.x, model);

  HCRFTrainResult out;
  out.model = std::move(model);
  out.trace = opt.trace;
  out.final_value = opt.value;
  return out;
}

int predict_vas(const HCRFModel& model, const Mat& features) {
  const Vec post = class_posterior(model, features);
  int best = 0;
  for (int k = 1; k < model.n_classes; ++k)
    if (post[k] > post[best]) best = k;
  return best;
}

double brute_force_log_partition(const HCRFModel& model, int k, const Mat& features) {
  check_class(model, k);
  check_features(model, features);
  const int t_len = features.rows;
  const int c_len = model.n_states;
  double n_paths = std::pow(static_cast<double>(c_len), t_len);
  if (n_paths > 1e6) throw Error("hcrf: brute-force instance too large");

  std::vector<int> path(t_len, 0);
  Vec scores;
  scores.reserve(static_cast<std::size_t>(n_paths));
  while (true) {
    scores.push_back(sequence_score(model, k, features, path));
    int pos = t_len - 1;
    while (pos >= 0 && ++path[pos] == c_len) path[pos--] = 0;
    if (pos < 0) break;
  }
  return log_sum_exp(scores);
}

std::string hcrf_to_json(const HCRFModel& model) {
  json j;
  j["n_classes"] = model.n_classes;
  j["n_states"] = model.n_states;
  j["feature_dim"] = model.feature_dim;
  j["unary"] = json::array();
  j["trans"] = json::array();
  for (int k = 0; k < model.n_classes; ++k) {
    j["unary"].push_back(model.unary[k].a);
    j["trans"].push_back(model.trans[k].a);
  }
  return j.dump();
}

HCRFModel hcrf_from_json(const std::string& text) {
  const json j = json::parse(text);
  HCRFModel model;
  model.n_classes = j.at("n_classes").get<int>();
  model.n_states = j.at("n_states").get<int>();
  model.feature_dim = j.at("feature_dim").get<int>();
  for (int k = 0; k < model.n_classes; ++k) {
    Mat u(model.n_states, model.feature_dim);
    u.a = j.at("unary").at(k).get<Vec>();
    if (u.a.size() != static_cast<std::size_t>(u.rows) * u.cols)
      throw Error("hcrf: unary shape does not match its data");
    model.unary.push_back(std::move(u));
    Mat m(model.n_states, model.n_states);
    m.a = j.at("trans").at(k).get<Vec>();
    if (m.a.size() != static_cast<std::size_t>(m.rows) * m.cols)
      throw Error("hcrf: transition shape does not match its data");
    model.trans.push_back(std::move(m));
  }
  return model;
}

}  // namespace painvas
