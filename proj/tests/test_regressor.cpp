#include <doctest.h>

#include <cmath>

#include "painvas/optim.hpp"
#include "painvas/regressor.hpp"

using namespace painvas;

namespace {

// Step-by-step scalar recurrence oracle, written independently of the
// library's cell code.  Consumes the window rows in the given order and
// returns the final hidden state.
Vec oracle_cell_final_h(const LSTMCellParams& p, const Mat& window, bool reversed) {
  const int hid = p.hidden;
  Vec h(hid, 0.0), c(hid, 0.0);
  for (int step = 0; step < window.rows; ++step) {
    const int row = reversed ? window.rows - 1 - step : step;
    Vec h_new(hid), c_new(hid);
    for (int u = 0; u < hid; ++u) {
      double ai = p.bi[u], af = p.bf[u], ag = p.bg[u], ao = p.bo[u];
      for (int j = 0; j < p.input_dim; ++j) {
        ai += p.wi(u, j) * window(row, j);
        af += p.wf(u, j) * window(row, j);
        ag += p.wg(u, j) * window(row, j);
        ao += p.wo(u, j) * window(row, j);
      }
      for (int j = 0; j < hid; ++j) {
        ai += p.ri(u, j) * h[j];
        af += p.rf(u, j) * h[j];
        ag += p.rg(u, j) * h[j];
        ao += p.ro(u, j) * h[j];
      }
      const double gi = 1.0 / (1.0 + std::exp(-ai));
      const double gf = 1.0 / (1.0 + std::exp(-af));
      const double gg = std::tanh(ag);
      const double go = 1.0 / (1.0 + std::exp(-ao));
      c_new[u] = gf * c[u] + gi * gg;
      h_new[u] = go * std::tanh(c_new[u]);
    }
    h = h_new;
    c = c_new;
  }
  return h;
}

double oracle_forward(const BiLSTMRegressor& m, const Mat& window) {
  const Vec hf = oracle_cell_final_h(m.fwd, window, false);
  const Vec hb = oracle_cell_final_h(m.bwd, window, true);
  double y = m.out_b;
  for (int u = 0; u < m.head_units; ++u) {
    double a = m.head_b[u];
    for (int j = 0; j < m.hidden; ++j)
      a += m.head_w(u, j) * hf[j] + m.head_w(u, m.hidden + j) * hb[j];
    if (a > 0.0) y += m.out_w[u] * a;
  }
  return y;
}

Mat random_window(Rng& rng, int rows, int d) {
  Mat w(rows, d);
  for (double& v : w.a) v = rng.uniform(-1, 1);
  return w;
}

}  // namespace

TEST_CASE("forward_window on an all-zero model is zero") {
  const BiLSTMRegressor zero = BiLSTMRegressor::zeros_like(BiLSTMRegressor::init(3, 4, 5, 7, 1));
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial)
    CHECK(forward_window(zero, random_window(rng, 15, 3)) == 0.0);
}

TEST_CASE("forward_window matches the scalar recurrence oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 8; ++trial) {
    const BiLSTMRegressor m = BiLSTMRegressor::init(2, 3, 4, 7, 100 + trial);
    const Mat window = random_window(rng, 15, 2);
    const double got = forward_window(m, window);
    const double expect = oracle_forward(m, window);
    CHECK(std::abs(got - expect) < 1e-12);
  }
}

TEST_CASE("shared cells on a constant window give equal direction states") {
  BiLSTMRegressor m = BiLSTMRegressor::init(2, 3, 4, 7, 11);
  m.bwd = m.fwd;  // share parameters across directions
  Rng rng(5);
  Mat window(15, 2);
  const double v0 = rng.uniform(-1, 1), v1 = rng.uniform(-1, 1);
  for (int t = 0; t < 15; ++t) {
    window(t, 0) = v0;
    window(t, 1) = v1;
  }
  const Vec hf = oracle_cell_final_h(m.fwd, window, false);
  const Vec hb = oracle_cell_final_h(m.bwd, window, true);
  for (int u = 0; u < m.hidden; ++u) CHECK(hf[u] == doctest::Approx(hb[u]).epsilon(1e-14));
  CHECK(forward_window(m, window) == doctest::Approx(oracle_forward(m, window)).epsilon(1e-13));
}

TEST_CASE("shared cells leave palindromic windows direction symmetric") {
  BiLSTMRegressor m = BiLSTMRegressor::init(2, 3, 4, 7, 13);
  m.bwd = m.fwd;
  Rng rng(7);
  Mat window(15, 2);
  for (int t = 0; t <= 7; ++t) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    window(t, 0) = a;
    window(t, 1) = b;
    window(14 - t, 0) = a;
    window(14 - t, 1) = b;
  }
  const Vec hf = oracle_cell_final_h(m.fwd, window, false);
  const Vec hb = oracle_cell_final_h(m.bwd, window, true);
  for (int u = 0; u < m.hidden; ++u) CHECK(hf[u] == doctest::Approx(hb[u]).epsilon(1e-14));
}

TEST_CASE("predict_sequence boundaries and windowing") {
  const BiLSTMRegressor m = BiLSTMRegressor::init(2, 3, 4, 7, 17);
  Rng rng(11);

  SUBCASE("T=1 equals the replicated single-frame window") {
    Mat frames(1, 2);
    frames(0, 0) = 0.3;
    frames(0, 1) = -0.8;
    Mat repeated(15, 2);
    for (int t = 0; t < 15; ++t) {
      repeated(t, 0) = 0.3;
      repeated(t, 1) = -0.8;
    }
    const Vec scores = predict_sequence(m, frames);
    REQUIRE(scores.size() == 1);
    CHECK(scores[0] == std::clamp(forward_window(m, repeated), 0.0, 1.0));
  }

  SUBCASE("constant input gives constant scores") {
    Mat frames(9, 2, 0.25);
    const Vec scores = predict_sequence(m, frames);
    for (double s : scores) CHECK(s == scores[0]);
  }

  SUBCASE("interior score equals the directly extracted window") {
    Mat frames = random_window(rng, 20, 2);
    const Vec scores = predict_sequence(m, frames);
    REQUIRE(scores.size() == 20);
    Mat inner(15, 2);
    for (int t = 0; t < 15; ++t)
      for (int j = 0; j < 2; ++j) inner(t, j) = frames(3 + t, j);
    CHECK(scores[10] == std::clamp(forward_window(m, inner), 0.0, 1.0));
    for (double s : scores) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
  }
}

TEST_CASE("loss is zero with zero gradient at a perfect fit") {
  // all-zero model scores 0; targets of 0 are fit exactly
  const BiLSTMRegressor zero = BiLSTMRegressor::zeros_like(BiLSTMRegressor::init(2, 2, 3, 7, 1));
  Rng rng(13);
  const std::vector<Mat> windows = {random_window(rng, 15, 2), random_window(rng, 15, 2)};
  const auto lg = loss_and_gradient(zero, windows, {0.0, 0.0});
  CHECK(lg.loss == 0.0);
  CHECK(lg.grad.out_b == 0.0);
}

TEST_CASE("output-bias gradient has the affine closed form") {
  BiLSTMRegressor m = BiLSTMRegressor::zeros_like(BiLSTMRegressor::init(2, 2, 3, 7, 1));
  m.out_b = 0.3;
  Rng rng(17);
  const std::vector<Mat> windows = {random_window(rng, 15, 2)};
  const auto lg = loss_and_gradient(m, windows, {0.1});
  CHECK(lg.loss == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(lg.grad.out_b == doctest::Approx(2.0 * (0.3 - 0.1)).epsilon(1e-12));
}

TEST_CASE("BPTT matches central finite differences") {
  Rng rng(19);
  int checked = 0;
  for (int trial = 0; trial < 3; ++trial) {
    const int hidden = trial % 2 == 0 ? 2 : 3;
    const int d = trial % 2 == 0 ? 2 : 4;
    BiLSTMRegressor m = BiLSTMRegressor::init(d, hidden, 3, 7, 300 + trial);
    std::vector<Mat> windows;
    Vec targets;
    for (int b = 0; b < 2; ++b) {
      windows.push_back(random_window(rng, 15, d));
      targets.push_back(rng.uniform(0, 1));
    }
    const auto lg = loss_and_gradient(m, windows, targets);
    const Vec analytic = pack(lg.grad);

    const auto f = [&](const Vec& flat) {
      BiLSTMRegressor probe = m;
      unpack(flat, probe);
      double loss = 0.0;
      for (std::size_t b = 0; b < windows.size(); ++b) {
        const double err = forward_window(probe, windows[b]) - targets[b];
        loss += err * err / static_cast<double>(windows.size());
      }
      return loss;
    };
    const Vec numeric = finite_difference_gradient(f, pack(m), 1e-5);

    REQUIRE(analytic.size() == numeric.size());
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
      CHECK(std::abs(analytic[i] - numeric[i]) / denom < 1e-4);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("train_regressor behavior") {
  Rng rng(23);
  std::vector<Mat> windows;
  Vec targets;
  for (int b = 0; b < 12; ++b) {
    windows.push_back(random_window(rng, 15, 2));
    targets.push_back(0.5);
  }
  RegressorTrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 4;

  SUBCASE("loss decreases on a realizable problem") {
    const auto result = train_regressor(BiLSTMRegressor::init(2, 3, 4, 7, 31), windows, targets,
                                        cfg, 1);
    REQUIRE(result.epoch_loss.size() == 12);
    CHECK(result.epoch_loss.back() < result.epoch_loss.front());
  }

  SUBCASE("zero learning rate leaves parameters untouched") {
    RegressorTrainConfig frozen = cfg;
    frozen.learning_rate = 0.0;
    const BiLSTMRegressor m = BiLSTMRegressor::init(2, 3, 4, 7, 31);
    const auto result = train_regressor(m, windows, targets, frozen, 1);
    CHECK(pack(result.model) == pack(m));
  }

  SUBCASE("fixed seed reproduces parameters bit for bit") {
    const auto a = train_regressor(BiLSTMRegressor::init(2, 3, 4, 7, 31), windows, targets, cfg, 7);
    const auto b = train_regressor(BiLSTMRegressor::init(2, 3, 4, 7, 31), windows, targets, cfg, 7);
    CHECK(pack(a.model) == pack(b.model));
    CHECK(a.epoch_loss == b.epoch_loss);
  }

  SUBCASE("empty batch rejected") {
    CHECK_THROWS_AS(loss_and_gradient(BiLSTMRegressor::init(2, 3, 4, 7, 1), {}, {}), Error);
  }
}

TEST_CASE("regressor json round trip") {
  const BiLSTMRegressor m = BiLSTMRegressor::init(3, 4, 5, 7, 41);
  const BiLSTMRegressor back = regressor_from_json(regressor_to_json(m));
  CHECK(pack(back) == pack(m));
  CHECK(back.window_radius == m.window_radius);
}

TEST_CASE("feedforward baseline") {
  Rng rng(43);

  SUBCASE("forward matches a scalar oracle") {
    const FeedforwardBaseline m = FeedforwardBaseline::init(3, 5, 2);
    Vec x = {0.2, -0.7, 1.1};
    double expect = m.b2;
    for (int u = 0; u < 5; ++u) {
      double a = m.b1[u];
      for (int j = 0; j < 3; ++j) a += m.w1(u, j) * x[j];
      if (a > 0) expect += m.w2[u] * a;
    }
    CHECK(forward_ffn(m, x.data(), 3) == doctest::Approx(expect).epsilon(1e-14));
  }

  SUBCASE("gradient matches finite differences") {
    const FeedforwardBaseline m = FeedforwardBaseline::init(3, 4, 5);
    Mat frames(4, 3);
    Vec targets(4);
    for (double& v : frames.a) v = rng.uniform(-1, 1);
    for (double& v : targets) v = rng.uniform(0, 1);
    const auto lg = loss_and_gradient_ffn(m, frames, targets);
    const auto f = [&](const Vec& flat) {
      FeedforwardBaseline probe = m;
      unpack(flat, probe);
      double loss = 0.0;
      for (int b = 0; b < 4; ++b) {
        const double err = forward_ffn(probe, frames.row(b), 3) - targets[b];
        loss += err * err / 4.0;
      }
      return loss;
    };
    const Vec numeric = finite_difference_gradient(f, pack(m), 1e-5);
    const Vec analytic = pack(lg.grad);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
      CHECK(std::abs(analytic[i] - numeric[i]) / denom < 1e-4);
    }
  }

  SUBCASE("training reduces the loss deterministically") {
    Mat frames(20, 2);
    Vec targets(20);
    for (int i = 0; i < 20; ++i) {
      frames(i, 0) = rng.uniform(-1, 1);
      frames(i, 1) = rng.uniform(-1, 1);
      targets[i] = 0.25;
    }
    RegressorTrainConfig cfg;
    cfg.epochs = 15;
    cfg.batch_size = 5;
    const auto a = train_ffn(FeedforwardBaseline::init(2, 6, 3), frames, targets, cfg, 9);
    const auto b = train_ffn(FeedforwardBaseline::init(2, 6, 3), frames, targets, cfg, 9);
    CHECK(a.epoch_loss.back() < a.epoch_loss.front());
    CHECK(pack(a.model) == pack(b.model));
  }

  SUBCASE("json round trip") {
    const FeedforwardBaseline m = FeedforwardBaseline::init(4, 6, 7);
    CHECK(pack(ffn_from_json(ffn_to_json(m))) == pack(m));
  }
}
