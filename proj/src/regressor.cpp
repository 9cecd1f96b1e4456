#include "painvas/regressor.hpp"

#include <algorithm>
#include <cmath>

#include "painvas/optim.hpp"

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace painvas {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_uniform(Rng& rng, Mat& m, double r) {
  for (double& v : m.a) v = rng.uniform(-r, r);
}

LSTMCellParams init_cell(int input_dim, int hidden, Rng& rng) {
  LSTMCellParams c;
  c.hidden = hidden;
  c.input_dim = input_dim;
  const double rw = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double rr = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Mat* m : {&c.wi, &c.wf, &c.wg, &c.wo}) {
    *m = Mat(hidden, input_dim);
    fill_uniform(rng, *m, rw);
  }
  for (Mat* m : {&c.ri, &c.rf, &c.rg, &c.ro}) {
    *m = Mat(hidden, hidden);
    fill_uniform(rng, *m, rr);
  }
  c.bi.assign(hidden, 0.0);
  c.bf.assign(hidden, 1.0);  // standard forget-gate bias
  c.bg.assign(hidden, 0.0);
  c.bo.assign(hidden, 0.0);
  return c;
}

LSTMCellParams zero_cell(const LSTMCellParams& shape) {
  LSTMCellParams c;
  c.hidden = shape.hidden;
  c.input_dim = shape.input_dim;
  c.wi = Mat(shape.hidden, shape.input_dim);
  c.wf = c.wg = c.wo = c.wi;
  c.ri = Mat(shape.hidden, shape.hidden);
  c.rf = c.rg = c.ro = c.ri;
  c.bi.assign(shape.hidden, 0.0);
  c.bf = c.bg = c.bo = c.bi;
  return c;
}

// per-step activations kept for backprop
struct CellTrace {
  Mat i, f, g, o, c, h;  // steps x hidden
};

// inputs are window rows in consumption order (indices into `window`)
void run_cell(const LSTMCellParams& p, const Mat& window, const std::vector<int>& order,
              CellTrace& tr) {
  const int steps = static_cast<int>(order.size());
  const int hid = p.hidden;
  tr.i = Mat(steps, hid);
  tr.f = Mat(steps, hid);
  tr.g = Mat(steps, hid);
  tr.o = Mat(steps, hid);
  tr.c = Mat(steps, hid);
  tr.h = Mat(steps, hid);

  Vec h_prev(hid, 0.0), c_prev(hid, 0.0);
  for (int t = 0; t < steps; ++t) {
    const double* x = window.row(order[t]);
    for (int u = 0; u < hid; ++u) {
      const double ai = dot(p.wi.row(u), x, p.input_dim) + dot(p.ri.row(u), h_prev.data(), hid) + p.bi[u];
      const double af = dot(p.wf.row(u), x, p.input_dim) + dot(p.rf.row(u), h_prev.data(), hid) + p.bf[u];
      const double ag = dot(p.wg.row(u), x, p.input_dim) + dot(p.rg.row(u), h_prev.data(), hid) + p.bg[u];
      const double ao = dot(p.wo.row(u), x, p.input_dim) + dot(p.ro.row(u), h_prev.data(), hid) + p.bo[u];
      tr.i(t, u) = sigmoid(ai);
      tr.f(t, u) = sigmoid(af);
      tr.g(t, u) = std::tanh(ag);
      tr.o(t, u) = sigmoid(ao);
      tr.c(t, u) = tr.f(t, u) * c_prev[u] + tr.i(t, u) * tr.g(t, u);
      tr.h(t, u) = tr.o(t, u) * std::tanh(tr.c(t, u));
    }
    for (int u = 0; u < hid; ++u) {
      h_prev[u] = tr.h(t, u);
      c_prev[u] = tr.c(t, u);
    }
  }
}

// propagates d(final h) back through the unrolled cell, accumulating into grad
void backprop_cell(const LSTMCellParams& p, const Mat& window, const std::vector<int>& order,
                   const CellTrace& tr, const Vec& d_final_h, LSTMCellParams& grad) {
  const int steps = static_cast<int>(order.size());
  const int hid = p.hidden;

  Vec dh = d_final_h;
  Vec dc(hid, 0.0);
  Vec dai(hid), daf(hid), dag(hid), dao(hid);
  for (int t = steps - 1; t >= 0; --t) {
    const double* x = window.row(order[t]);
    for (int u = 0; u < hid; ++u) {
      const double tanh_c = std::tanh(tr.c(t, u));
      const double c_prev = t > 0 ? tr.c(t - 1, u) : 0.0;
      const double i = tr.i(t, u), f = tr.f(t, u), g = tr.g(t, u), o = tr.o(t, u);

      const double d_o = dh[u] * tanh_c;
      const double d_c = dc[u] + dh[u] * o * (1.0 - tanh_c * tanh_c);
      const double d_i = d_c * g;
      const double d_f = d_c * c_prev;
      const double d_g = d_c * i;

      dai[u] = d_i * i * (1.0 - i);
      daf[u] = d_f * f * (1.0 - f);
      dag[u] = d_g * (1.0 - g * g);
      dao[u] = d_o * o * (1.0 - o);
      dc[u] = d_c * f;
    }

    const double* h_prev = t > 0 ? tr.h.row(t - 1) : nullptr;
    for (int u = 0; u < hid; ++u) {
      for (int j = 0; j < p.input_dim; ++j) {
        grad.wi(u, j) += dai[u] * x[j];
        grad.wf(u, j) += daf[u] * x[j];
        grad.wg(u, j) += dag[u] * x[j];
        grad.wo(u, j) += dao[u] * x[j];
      }
      if (h_prev) {
        for (int j = 0; j < hid; ++j) {
          grad.ri(u, j) += dai[u] * h_prev[j];
          grad.rf(u, j) += daf[u] * h_prev[j];
          grad.rg(u, j) += dag[u] * h_prev[j];
          grad.ro(u, j) += dao[u] * h_prev[j];
        }
      }
      grad.bi[u] += dai[u];
      grad.bf[u] += daf[u];
      grad.bg[u] += dag[u];
      grad.bo[u] += dao[u];
    }

    if (t > 0) {
      for (int j = 0; j < hid; ++j) {
        double s = 0.0;
        for (int u = 0; u < hid; ++u)
          s += p.ri(u, j) * dai[u] + p.rf(u, j) * daf[u] + p.rg(u, j) * dag[u] + p.ro(u, j) * dao[u];
        dh[j] = s;
      }
    }
  }
}

std::vector<int> forward_order(int steps) {
  std::vector<int> o(steps);
  for (int t = 0; t < steps; ++t) o[t] = t;
  return o;
}

std::vector<int> backward_order(int steps) {
  std::vector<int> o(steps);
  for (int t = 0; t < steps; ++t) o[t] = steps - 1 - t;
  return o;
}

void check_window(const BiLSTMRegressor& model, const Mat& window) {
  if (window.rows != model.window_length())
    throw Error("regressor: window has " + std::to_string(window.rows) + " rows; expected " +
                std::to_string(model.window_length()));
  if (window.cols != model.input_dim)
    throw Error("regressor: window dimension " + std::to_string(window.cols) +
                " does not match model input " + std::to_string(model.input_dim));
}

// head forward; fills z (concatenated states) and relu activations
double head_forward(const BiLSTMRegressor& model, const CellTrace& trf, const CellTrace& trb,
                    Vec& z, Vec& act) {
  const int hid = model.hidden;
  const int last = trf.h.rows - 1;
  z.resize(2 * hid);
  for (int u = 0; u < hid; ++u) {
    z[u] = trf.h(last, u);
    z[hid + u] = trb.h(last, u);
  }
  act.resize(model.head_units);
  double y = model.out_b;
  for (int u = 0; u < model.head_units; ++u) {
    const double a = dot(model.head_w.row(u), z.data(), 2 * hid) + model.head_b[u];
    act[u] = a > 0.0 ? a : 0.0;
    y += model.out_w[u] * act[u];
  }
  return y;
}

}  // namespace

BiLSTMRegressor BiLSTMRegressor::init(int input_dim, int hidden, int head_units, int window_radius,
                                      std::uint64_t seed) {
  if (input_dim < 1 || hidden < 1 || head_units < 1 || window_radius < 0)
    throw Error("regressor: invalid model dimensions");
  Rng rng(seed);
  BiLSTMRegressor m;
  m.input_dim = input_dim;
  m.hidden = hidden;
  m.head_units = head_units;
  m.window_radius = window_radius;
  m.fwd = init_cell(input_dim, hidden, rng);
  m.bwd = init_cell(input_dim, hidden, rng);
  m.head_w = Mat(head_units, 2 * hidden);
  fill_uniform(rng, m.head_w, 1.0 / std::sqrt(2.0 * hidden));
  m.head_b.assign(head_units, 0.0);
  m.out_w.resize(head_units);
  const double ro = 1.0 / std::sqrt(static_cast<double>(head_units));
  for (double& v : m.out_w) v = rng.uniform(-ro, ro);
  m.out_b = 0.0;
  return m;
}

BiLSTMRegressor BiLSTMRegressor::zeros_like(const BiLSTMRegressor& shape) {
  BiLSTMRegressor m;
  m.input_dim = shape.input_dim;
  m.hidden = shape.hidden;
  m.head_units = shape.head_units;
  m.window_radius = shape.window_radius;
  m.fwd = zero_cell(shape.fwd);
  m.bwd = zero_cell(shape.bwd);
  m.head_w = Mat(shape.head_w.rows, shape.head_w.cols);
  m.head_b.assign(shape.head_b.size(), 0.0);
  m.out_w.assign(shape.out_w.size(), 0.0);
  m.out_b = 0.0;
  return m;
}

namespace {

void append_cell(Vec& out, const LSTMCellParams& c) {
  for (const Mat* m : {&c.wi, &c.ri, &c.wf, &c.rf, &c.wg, &c.rg, &c.wo, &c.ro})
    out.insert(out.end(), m->a.begin(), m->a.end());
  for (const Vec* v : {&c.bi, &c.bf, &c.bg, &c.bo}) out.insert(out.end(), v->begin(), v->end());
}

std::size_t read_cell(const Vec& flat, std::size_t pos, LSTMCellParams& c) {
  for (Mat* m : {&c.wi, &c.ri, &c.wf, &c.rf, &c.wg, &c.rg, &c.wo, &c.ro}) {
    std::copy(flat.begin() + pos, flat.begin() + pos + m->a.size(), m->a.begin());
    pos += m->a.size();
  }
  for (Vec* v : {&c.bi, &c.bf, &c.bg, &c.bo}) {
    std::copy(flat.begin() + pos, flat.begin() + pos + v->size(), v->begin());
    pos += v->size();
  }
  return pos;
}

}  // namespace

Vec pack(const BiLSTMRegressor& model) {
  Vec out;
  append_cell(out, model.fwd);
  append_cell(out, model.bwd);
  out.insert(out.end(), model.head_w.a.begin(), model.head_w.a.end());
  out.insert(out.end(), model.head_b.begin(), model.head_b.end());
  out.insert(out.end(), model.out_w.begin(), model.out_w.end());
  out.push_back(model.out_b);
  return out;
}

void unpack(const Vec& flat, BiLSTMRegressor& model) {
  std::size_t pos = read_cell(flat, 0, model.fwd);
  pos = read_cell(flat, pos, model.bwd);
  std::copy(flat.begin() + pos, flat.begin() + pos + model.head_w.a.size(), model.head_w.a.begin());
  pos += model.head_w.a.size();
  std::copy(flat.begin() + pos, flat.begin() + pos + model.head_b.size(), model.head_b.begin());
  pos += model.head_b.size();
  std::copy(flat.begin() + pos, flat.begin() + pos + model.out_w.size(), model.out_w.begin());
  pos += model.out_w.size();
  model.out_b = flat[pos++];
  if (pos != flat.size()) throw Error("regressor: flat parameter size mismatch");
}

Mat make_window(const Mat& frames, int center, int radius) {
  Mat w(2 * radius + 1, frames.cols);
  for (int k = -radius; k <= radius; ++k) {
    const int t = std::clamp(center + k, 0, frames.rows - 1);  // edge replication
    const double* src = frames.row(t);
    double* dst = w.row(k + radius);
    std::copy(src, src + frames.cols, dst);
  }
  return w;
}

double forward_window(const BiLSTMRegressor& model, const Mat& window) {
  check_window(model, window);
  CellTrace trf, trb;
  run_cell(model.fwd, window, forward_order(window.rows), trf);
  run_cell(model.bwd, window, backward_order(window.rows), trb);
  Vec z, act;
  return head_forward(model, trf, trb, z, act);
}

Vec predict_sequence(const BiLSTMRegressor& model, const Mat& frames) {
  Vec out(frames.rows);
  for (int t = 0; t < frames.rows; ++t) {
    const double y = forward_window(model, make_window(frames, t, model.window_radius));
    out[t] = std::clamp(y, 0.0, 1.0);
  }
  return out;
}

LossAndGrad loss_and_gradient(const BiLSTMRegressor& model, const std::vector<Mat>& windows,
                              const Vec& targets) {
  if (windows.empty()) throw Error("regressor: empty batch");
  if (windows.size() != targets.size()) throw Error("regressor: batch/target size mismatch");

  LossAndGrad result;
  result.grad = BiLSTMRegressor::zeros_like(model);
  const double inv_b = 1.0 / static_cast<double>(windows.size());
  const int hid = model.hidden;

  for (std::size_t b = 0; b < windows.size(); ++b) {
    const Mat& window = windows[b];
    check_window(model, window);
    const auto ford = forward_order(window.rows);
    const auto bord = backward_order(window.rows);
    CellTrace trf, trb;
    run_cell(model.fwd, window, ford, trf);
    run_cell(model.bwd, window, bord, trb);
    Vec z, act;
    const double y = head_forward(model, trf, trb, z, act);

    const double err = y - targets[b];
    result.loss += err * err * inv_b;
    const double dy = 2.0 * err * inv_b;

    // head backward
    Vec dz(2 * hid, 0.0);
    for (int u = 0; u < model.head_units; ++u) {
      result.grad.out_w[u] += dy * act[u];
      if (act[u] > 0.0) {
        const double da = dy * model.out_w[u];
        result.grad.head_b[u] += da;
        for (int j = 0; j < 2 * hid; ++j) {
          result.grad.head_w(u, j) += da * z[j];
          dz[j] += da * model.head_w(u, j);
        }
      }
    }
    result.grad.out_b += dy;

    Vec dhf(dz.begin(), dz.begin() + hid);
    Vec dhb(dz.begin() + hid, dz.end());
    backprop_cell(model.fwd, window, ford, trf, dhf, result.grad.fwd);
    backprop_cell(model.bwd, window, bord, trb, dhb, result.grad.bwd);
  }
  return result;
}

RegressorTrainResult train_regressor(BiLSTMRegressor model, const std::vector<Mat>& windows,
                                     const Vec& targets, const RegressorTrainConfig& cfg,
                                     std::uint64_t seed) {
  if (windows.empty()) throw Error("regressor: no training windows");
  if (windows.size() != targets.size()) throw Error("regressor: batch/target size mismatch");

  Rng rng(seed);
  Vec flat = pack(model);
  RmspropState state;
  Vec epoch_loss;

  std::vector<int> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<Mat> batch;
      Vec batch_targets;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(windows[order[i]]);
        batch_targets.push_back(targets[order[i]]);
      }
      const auto lg = loss_and_gradient(model, batch, batch_targets);
      if (!std::isfinite(lg.loss))
        throw Error("regressor: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += lg.loss * static_cast<double>(batch.size());
      rmsprop_step(flat, pack(lg.grad), state, cfg.learning_rate, cfg.decay, cfg.epsilon);
      unpack(flat, model);
    }
    epoch_loss.push_back(loss_sum / static_cast<double>(windows.size()));
  }
  return {std::move(model), std::move(epoch_loss)};
}

namespace {

json mat_json(const Mat& m) { return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.a}}; }

Mat mat_from(const json& j) {
  Mat m(j.at("rows").get<int>(), j.at("cols").get<int>());
  m.a = j.at("data").get<Vec>();
  if (m.a.size() != static_cast<std::size_t>(m.rows) * m.cols)
    throw Error("regressor: matrix shape does not match its data");
  return m;
}

json cell_json(const LSTMCellParams& c) {
  return {{"hidden", c.hidden}, {"input_dim", c.input_dim},
          {"wi", mat_json(c.wi)}, {"wf", mat_json(c.wf)}, {"wg", mat_json(c.wg)},
          {"wo", mat_json(c.wo)}, {"ri", mat_json(c.ri)}, {"rf", mat_json(c.rf)},
          {"rg", mat_json(c.rg)}, {"ro", mat_json(c.ro)}, {"bi", c.bi},
          {"bf", c.bf}, {"bg", c.bg}, {"bo", c.bo}};
}

LSTMCellParams cell_from(const json& j) {
  LSTMCellParams c;
  c.hidden = j.at("hidden").get<int>();
  c.input_dim = j.at("input_dim").get<int>();
  c.wi = mat_from(j.at("wi"));
  c.wf = mat_from(j.at("wf"));
  c.wg = mat_from(j.at("wg"));
  c.wo = mat_from(j.at("wo"));
  c.ri = mat_from(j.at("ri"));
  c.rf = mat_from(j.at("rf"));
  c.rg = mat_from(j.at("rg"));
  c.ro = mat_from(j.at("ro"));
  c.bi = j.at("bi").get<Vec>();
  c.bf = j.at("bf").get<Vec>();
  c.bg = j.at("bg").get<Vec>();
  c.bo = j.at("bo").get<Vec>();
  return c;
}

}  // namespace

std::string regressor_to_json(const BiLSTMRegressor& model) {
  json j;
  j["kind"] = "bilstm";
  j["input_dim"] = model.input_dim;
  j["hidden"] = model.hidden;
  j["head_units"] = model.head_units;
  j["window_radius"] = model.window_radius;
  j["fwd"] = cell_json(model.fwd);
  j["bwd"] = cell_json(model.bwd);
  j["head_w"] = mat_json(model.head_w);
  j["head_b"] = model.head_b;
  j["out_w"] = model.out_w;
  j["out_b"] = model.out_b;
  return j.dump();
}

BiLSTMRegressor regressor_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("kind").get<std::string>() != "bilstm") throw Error("regressor: not a bilstm document");
  BiLSTMRegressor m;
  m.input_dim = j.at("input_dim").get<int>();
  m.hidden = j.at("hidden").get<int>();
  m.head_units = j.at("head_units").get<int>();
  m.window_radius = j.at("window_radius").get<int>();
  m.fwd = cell_from(j.at("fwd"));
  m.bwd = cell_from(j.at("bwd"));
  m.head_w = mat_from(j.at("head_w"));
  m.head_b = j.at("head_b").get<Vec>();
  m.out_w = j.at("out_w").get<Vec>();
  m.out_b = j.at("out_b").get<double>();
  return m;
}

// ---- feedforward baseline ----

FeedforwardBaseline FeedforwardBaseline::init(int input_dim, int hidden_units, std::uint64_t seed) {
  if (input_dim < 1 || hidden_units < 1) throw Error("regressor: invalid baseline dimensions");
  Rng rng(seed);
  FeedforwardBaseline m;
  m.input_dim = input_dim;
  m.hidden_units = hidden_units;
  m.w1 = Mat(hidden_units, input_dim);
  fill_uniform(rng, m.w1, 1.0 / std::sqrt(static_cast<double>(input_dim)));
  m.b1.assign(hidden_units, 0.0);
  m.w2.resize(hidden_units);
  const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden_units));
  for (double& v : m.w2) v = rng.uniform(-r2, r2);
  m.b2 = 0.0;
  return m;
}

FeedforwardBaseline FeedforwardBaseline::zeros_like(const FeedforwardBaseline& shape) {
  FeedforwardBaseline m;
  m.input_dim = shape.input_dim;
  m.hidden_units = shape.hidden_units;
  m.w1 = Mat(shape.w1.rows, shape.w1.cols);
  m.b1.assign(shape.b1.size(), 0.0);
  m.w2.assign(shape.w2.size(), 0.0);
  m.b2 = 0.0;
  return m;
}

Vec pack(const FeedforwardBaseline& model) {
  Vec out(model.w1.a);
  out.insert(out.end(), model.b1.begin(), model.b1.end());
  out.insert(out.end(), model.w2.begin(), model.w2.end());
  out.push_back(model.b2);
  return out;
}

void unpack(const Vec& flat, FeedforwardBaseline& model) {
  std::size_t pos = 0;
  std::copy(flat.begin(), flat.begin() + model.w1.a.size(), model.w1.a.begin());
  pos += model.w1.a.size();
  std::copy(flat.begin() + pos, flat.begin() + pos + model.b1.size(), model.b1.begin());
  pos += model.b1.size();
  std::copy(flat.begin() + pos, flat.begin() + pos + model.w2.size(), model.w2.begin());
  pos += model.w2.size();
  model.b2 = flat[pos++];
  if (pos != flat.size()) throw Error("regressor: flat parameter size mismatch");
}

double forward_ffn(const FeedforwardBaseline& model, const double* frame, int dim) {
  if (dim != model.input_dim)
    throw Error("regressor: frame dimension " + std::to_string(dim) + " does not match baseline input " +
                std::to_string(model.input_dim));
  double y = model.b2;
  for (int u = 0; u < model.hidden_units; ++u) {
    const double a = dot(model.w1.row(u), frame, dim) + model.b1[u];
    if (a > 0.0) y += model.w2[u] * a;
  }
  return y;
}

Vec predict_sequence_ffn(const FeedforwardBaseline& model, const Mat& frames) {
  Vec out(frames.rows);
  for (int t = 0; t < frames.rows; ++t)
    out[t] = std::clamp(forward_ffn(model, frames.row(t), frames.cols), 0.0, 1.0);
  return out;
}

FfnLossAndGrad loss_and_gradient_ffn(const FeedforwardBaseline& model, const Mat& frames,
                                     const Vec& targets) {
  if (frames.rows == 0) throw Error("regressor: empty batch");
  if (static_cast<std::size_t>(frames.rows) != targets.size())
    throw Error("regressor: batch/target size mismatch");

  FfnLossAndGrad result;
  result.grad = FeedforwardBaseline::zeros_like(model);
  const double inv_b = 1.0 / frames.rows;

  for (int b = 0; b < frames.rows; ++b) {
    const double* x = frames.row(b);
    double y = model.b2;
    Vec act(model.hidden_units);
    for (int u = 0; u < model.hidden_units; ++u) {
      const double a = dot(model.w1.row(u), x, model.input_dim) + model.b1[u];
      act[u] = a > 0.0 ? a : 0.0;
      y += model.w2[u] * act[u];
    }
    const double err = y - targets[b];
    result.loss += err * err * inv_b;
    const double dy = 2.0 * err * inv_b;
    result.grad.b2 += dy;
    for (int u = 0; u < model.hidden_units; ++u) {
      result.grad.w2[u] += dy * act[u];
      if (act[u] > 0.0) {
        const double da = dy * model.w2[u];
        result.grad.b1[u] += da;
        for (int j = 0; j < model.input_dim; ++j) result.grad.w1(u, j) += da * x[j];
      }
    }
  }
  return result;
}

FfnTrainResult train_ffn(FeedforwardBaseline model, const Mat& frames, const Vec& targets,
                         const RegressorTrainConfig& cfg, std::uint64_t seed) {
  if (frames.rows == 0) throw Error("regressor: no training frames");
  Rng rng(seed);
  Vec flat = pack(model);
  RmspropState state;
  Vec epoch_loss;

  std::vector<int> order(frames.rows);
  for (int i = 0; i < frames.rows; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Mat batch(static_cast<int>(stop - start), frames.cols);
      Vec batch_targets;
      for (std::size_t i = start; i < stop; ++i) {
        const double* src = frames.row(order[i]);
        std::copy(src, src + frames.cols, batch.row(static_cast<int>(i - start)));
        batch_targets.push_back(targets[order[i]]);
      }
      const auto lg = loss_and_gradient_ffn(model, batch, batch_targets);
      if (!std::isfinite(lg.loss))
        throw Error("regressor: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += lg.loss * static_cast<double>(batch.rows);
      rmsprop_step(flat, pack(lg.grad), state, cfg.learning_rate, cfg.decay, cfg.epsilon);
      unpack(flat, model);
    }
    epoch_loss.push_back(loss_sum / frames.rows);
  }
  return {std::move(model), std::move(epoch_loss)};
}

std::string ffn_to_json(const FeedforwardBaseline& model) {
  json j;
  j["kind"] = "ffn";
  j["input_dim"] = model.input_dim;
  j["hidden_units"] = model.hidden_units;
  j["w1"] = mat_json(model.w1);
  j["b1"] = model.b1;
  j["w2"] = model.w2;
  j["b2"] = model.b2;
  return j.dump();
}

FeedforwardBaseline ffn_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("kind").get<std::string>() != "ffn") throw Error("regressor: not an ffn document");
  FeedforwardBaseline m;
  m.input_dim = j.at("input_dim").get<int>();
  m.hidden_units = j.at("hidden_units").get<int>();
  m.w1 = mat_from(j.at("w1"));
  m.b1 = j.at("b1").get<Vec>();
  m.w2 = j.at("w2").get<Vec>();
  m.b2 = j.at("b2").get<double>();
  return m;
}

}  // namespace painvas
