// Acceptance suite: one pass/fail line per criterion, exit code 0 only if
// every criterion holds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "painvas/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace painvas;

namespace {

struct Criterion {
  int number;
  std::string name;
  std::function<bool(std::string&)> run;
};

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

Mat random_features(Rng& rng, int t_len, int d) {
  Mat m(t_len, d);
  for (double& v : m.a) v = rng.uniform(-1, 1);
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("painvas_accept_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- criterion 1: exhaustive PSPI oracle ----
bool criterion_pspi(std::string& detail) {
  int lo = 1000, hi = -1;
  long long checked = 0;
  for (int a4 = 0; a4 <= 5; ++a4)
    for (int a6 = 0; a6 <= 5; ++a6)
      for (int a7 = 0; a7 <= 5; ++a7)
        for (int a9 = 0; a9 <= 5; ++a9)
          for (int a10 = 0; a10 <= 5; ++a10)
            for (int a43 = 0; a43 <= 1; ++a43) {
              const int got = compute_pspi({a4, a6, a7, a9, a10, a43});
              const int expect = a4 + (a6 > a7 ? a6 : a7) + (a9 > a10 ? a9 : a10) + a43;
              if (got != expect) {
                detail = "mismatch at a combination";
                return false;
              }
              lo = std::min(lo, got);
              hi = std::max(hi, got);
              ++checked;
            }
  detail = std::to_string(checked) + " combinations, range [" + std::to_string(lo) + "," +
           std::to_string(hi) + "]";
  return checked == 15552 && lo == 0 && hi == 16;
}

// ---- criterion 2: partition function vs path enumeration ----
bool criterion_partition(std::string& detail) {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k_count = rng.uniform_int(1, 3);
    const int c_count = rng.uniform_int(1, 3);
    const int t_len = rng.uniform_int(1, 6);
    const int d = rng.uniform_int(1, 3);
    const HCRFModel m = HCRFModel::init(k_count, c_count, d, 1.5, 9000 + trial);
    const Mat features = random_features(rng, t_len, d);
    for (int k = 0; k < k_count; ++k) {
      const double fast = log_partition(m, k, features);
      const double slow = brute_force_log_partition(m, k, features);
      const double err = std::abs(fast - slow) / std::max(1.0, std::abs(slow));
      worst = std::max(worst, err);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "100 instances, worst relative log-domain error %.2e", worst);
  detail = buf;
  return worst < 1e-10;
}

// ---- criterion 3: HCRF gradient vs central differences ----
bool criterion_hcrf_gradient(std::string& detail) {
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = trial % 2 == 0 ? 0.0 : 0.5;
    const HCRFModel m = HCRFModel::init(3, 2, 2, 0.5, 500 + trial);
    std::vector<Mat> seqs;
    std::vector<int> labels;
    for (int i = 0; i < 3; ++i) {
      seqs.push_back(random_features(rng, 4, 2));
      labels.push_back(i);
    }
    const auto r = rll_and_gradient(m, seqs, labels, lambda);
    const Vec analytic = pack(r.gradient);
    const auto f = [&](const Vec& flat) {
      HCRFModel probe = m;
      unpack(flat, probe);
      return rll_and_gradient(probe, seqs, labels, lambda).value;
    };
    const Vec numeric = finite_difference_gradient(f, pack(m), 1e-6);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "20 instances, worst relative coordinate error %.2e", worst);
  detail = buf;
  return worst < 1e-5;
}

// ---- criterion 4: BPTT vs central differences ----
bool criterion_bilstm_gradient(std::string& detail) {
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int hidden = trial % 2 == 0 ? 2 : 3;
    const int d = trial % 2 == 0 ? 2 : 4;
    const BiLSTMRegressor m = BiLSTMRegressor::init(d, hidden, 3, 7, 7000 + trial);
    std::vector<Mat> windows;
    Vec targets;
    for (int b = 0; b < 2; ++b) {
      windows.push_back(random_features(rng, 15, d));
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
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "10 models, worst relative coordinate error %.2e", worst);
  detail = buf;
  return worst < 1e-4;
}

// ---- criterion 5: forward-backward consistency ----
bool criterion_marginals(std::string& detail) {
  Rng rng(505);
  double worst_row = 0.0, worst_pair = 0.0, worst_post = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k_count = rng.uniform_int(1, 4);
    const int c_count = rng.uniform_int(1, 5);
    const int t_len = rng.uniform_int(1, 12);
    const int d = rng.uniform_int(1, 4);
    const HCRFModel m = HCRFModel::init(k_count, c_count, d, 1.0, 11000 + trial);
    const Mat features = random_features(rng, t_len, d);

    const Vec post = class_posterior(m, features);
    double post_sum = 0.0;
    for (double p : post) {
      if (p < 0.0) return false;
      post_sum += p;
    }
    worst_post = std::max(worst_post, std::abs(post_sum - 1.0));

    for (int k = 0; k < k_count; ++k) {
      const auto marg = state_marginals(m, k, features);
      for (int t = 0; t < t_len; ++t) {
        double row = 0.0;
        for (int c = 0; c < c_count; ++c) row += marg.unary(t, c);
        worst_row = std::max(worst_row, std::abs(row - 1.0));
      }
      for (int t = 0; t + 1 < t_len; ++t) {
        for (int c = 0; c < c_count; ++c) {
          double to_sum = 0.0, from_sum = 0.0;
          for (int l = 0; l < c_count; ++l) {
            to_sum += marg.pairwise[t](c, l);
            from_sum += marg.pairwise[t](l, c);
          }
          worst_pair = std::max(worst_pair, std::abs(to_sum - marg.unary(t, c)));
          worst_pair = std::max(worst_pair, std::abs(from_sum - marg.unary(t + 1, c)));
        }
      }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "row-sum %.2e, pairwise %.2e, posterior %.2e", worst_row,
                worst_pair, worst_post);
  detail = buf;
  return worst_row < 1e-12 && worst_pair < 1e-10 && worst_post < 1e-12;
}

// ---- criterion 6: I-FES exact values ----
bool criterion_ifes(std::string& detail) {
  if (std::abs(compute_ifes({{3, 5}}, 0, 0).p - 1.0) > 1e-12) return false;
  if (std::abs(compute_ifes({{3, 5}}, 1, 0).p - 2.0 / 3.0) > 1e-12) return false;
  if (std::abs(compute_ifes({{0, 0}, {5, 10}}, 2, 0).p - 17.0 / 22.0) > 1e-12) return false;
  Rng rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<int, int>> pairs;
    const int n = rng.uniform_int(1, 10);
    for (int i = 0; i < n; ++i) pairs.emplace_back(rng.uniform_int(0, 5), rng.uniform_int(0, 10));
    if (compute_ifes(pairs, 0, trial).p != 1.0) {
      detail = "alpha=0 did not yield 1";
      return false;
    }
  }
  detail = "ratio values 1, 2/3, 17/22 exact; alpha=0 -> 1 on 100 random pair sets";
  return true;
}

// ---- criterion 7: metric oracles ----
bool criterion_metrics(std::string& detail) {
  if (*icc31({1, 2, 3}, {1, 2, 3}) != 1.0) return false;
  if (std::abs(*icc31({3, 2, 1}, {1, 2, 3}) + 1.0) > 1e-15) return false;
  if (mae({0, 10}, {10, 0}) != 10.0) return false;
  if (std::abs(mae({2, 3, 5}, {1, 3, 9}) - 5.0 / 3.0) > 1e-15) return false;

  Rng rng(707);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Vec pred(10), truth(10);
    for (int i = 0; i < 10; ++i) {
      pred[i] = rng.uniform(0, 10);
      truth[i] = rng.uniform(0, 10);
    }
    // explicit two-way ANOVA table as the reference
    const int n = 10;
    double grand = 0.0, col0 = 0.0, col1 = 0.0;
    for (int i = 0; i < n; ++i) {
      grand += pred[i] + truth[i];
      col0 += pred[i];
      col1 += truth[i];
    }
    grand /= 2.0 * n;
    col0 /= n;
    col1 /= n;
    double ss_rows = 0.0, ss_err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double row = 0.5 * (pred[i] + truth[i]);
      ss_rows += 2.0 * (row - grand) * (row - grand);
      const double e0 = pred[i] - row - col0 + grand;
      const double e1 = truth[i] - row - col1 + grand;
      ss_err += e0 * e0 + e1 * e1;
    }
    const double bms = ss_rows / (n - 1);
    const double ems = ss_err / (n - 1);
    const double reference = (bms - ems) / (bms + ems);
    worst = std::max(worst, std::abs(*icc31(pred, truth) - reference));
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "50 random pairs, worst ICC deviation %.2e", worst);
  detail = buf;
  return worst < 1e-10;
}

// ---- criterion 8: L-BFGS sanity ----
bool criterion_lbfgs(std::string& detail) {
  Rng rng(808);
  for (int dim : {2, 4, 8}) {
    Vec c(dim), x0(dim);
    for (int i = 0; i < dim; ++i) {
      c[i] = rng.uniform(-3, 3);
      x0[i] = rng.uniform(-3, 3);
    }
    const auto quad = [&c](const Vec& x, Vec& grad) {
      double v = 0.0;
      grad.assign(x.size(), 0.0);
      for (std::size_t i = 0; i < x.size(); ++i) {
        v += (x[i] - c[i]) * (x[i] - c[i]);
        grad[i] = 2.0 * (x[i] - c[i]);
      }
      return v;
    };
    const auto r = lbfgs_minimize(quad, x0, {});
    for (int i = 0; i < dim; ++i)
      if (std::abs(r.x[i] - c[i]) > 1e-8) {
        detail = "quadratic missed the center";
        return false;
      }
    for (std::size_t i = 1; i < r.trace.size(); ++i)
      if (r.trace[i].value > r.trace[i - 1].value) {
        detail = "quadratic trace increased";
        return false;
      }
  }

  const auto rosen = [](const Vec& x, Vec& grad) {
    const double a = x[1] - x[0] * x[0];
    const double b = 1.0 - x[0];
    grad.assign(2, 0.0);
    grad[0] = -400.0 * x[0] * a - 2.0 * b;
    grad[1] = 200.0 * a;
    return 100.0 * a * a + b * b;
  };
  LBFGSConfig cfg;
  cfg.max_iterations = 500;
  cfg.gradient_tolerance = 1e-10;
  const auto r = lbfgs_minimize(rosen, {-1.2, 1.0}, cfg);
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    if (r.trace[i].value > r.trace[i - 1].value) {
      detail = "rosenbrock trace increased";
      return false;
    }

  // a small HCRF training run, as one of "every training run"
  Rng data_rng(809);
  std::vector<Mat> seqs;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    seqs.push_back(random_features(data_rng, 5, 2));
    labels.push_back(i % 3);
  }
  HCRFTrainConfig hcfg;
  hcfg.n_classes = 3;
  hcfg.n_states = 2;
  hcfg.seed = 4;
  const auto trained = train_hcrf(seqs, labels, hcfg);
  for (std::size_t i = 1; i < trained.trace.size(); ++i)
    if (trained.trace[i].value > trained.trace[i - 1].value) {
      detail = "hcrf training trace increased";
      return false;
    }

  char buf[128];
  std::snprintf(buf, sizeof(buf), "quadratics exact, rosenbrock f* = %.2e, all accepted sequences non-increasing", r.value);
  detail = buf;
  return r.value < 1e-8;
}

// shared by criteria 9 and 11
json g_trend_report;

ExperimentConfig trend_config(FirstStage stage, const std::string& out_name) {
  ExperimentConfig cfg;
  cfg.synthetic.n_persons = 25;
  cfg.synthetic.sequences_per_person = 8;
  cfg.synthetic.t_min = 60;
  cfg.synthetic.t_max = 120;
  cfg.synthetic.n_landmarks = 66;
  cfg.synthetic.landmark_noise = 1.0;
  cfg.synthetic.expressiveness_min = 0.5;
  cfg.synthetic.expressiveness_max = 2.0;
  cfg.synthetic_seed = 11;
  cfg.n_train = 15;
  cfg.split_seed = 7;
  cfg.first_stage = stage;
  cfg.alphas = {0, 1, 2};
  cfg.repetitions = 5;
  cfg.seed = 1000;
  cfg.regressor.hidden_units = 16;
  cfg.regressor.head_units = 16;
  cfg.regressor.train.epochs = 8;
  cfg.regressor.seed = 2;
  cfg.hcrf.lambda = 1.0;
  cfg.hcrf.seed = 3;
  cfg.hcrf.lbfgs.max_iterations = 100;
  cfg.out_dir = fresh_dir(out_name).string();
  return cfg;
}

// ---- criterion 9: personalization trend ----
bool criterion_trend(std::string& detail) {
  const ExperimentConfig rnn_cfg = trend_config(FirstStage::BiLSTM, "trend_rnn");
  const ExperimentReport rnn_report = run_alpha_experiment(rnn_cfg);
  g_trend_report = json::parse(rnn_report.json);

  double mae_by_alpha[3] = {0, 0, 0};
  for (const auto& cond : g_trend_report.at("conditions"))
    mae_by_alpha[cond.at("alpha").get<int>()] = cond.at("mae_mean").get<double>();

  ExperimentConfig raw_cfg = trend_config(FirstStage::RawFeatures, "trend_raw");
  raw_cfg.alphas = {0};
  raw_cfg.repetitions = 1;  // no randomness at alpha = 0
  const ExperimentReport raw_report = run_alpha_experiment(raw_cfg);
  const double raw_mae =
      json::parse(raw_report.json).at("conditions").at(0).at("mae_mean").get<double>();

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "RNN-HCRF MAE a0=%.3f a1=%.3f a2=%.3f; HCRF(X) a0=%.3f", mae_by_alpha[0],
                mae_by_alpha[1], mae_by_alpha[2], raw_mae);
  detail = buf;

  return mae_by_alpha[1] < mae_by_alpha[0] && mae_by_alpha[2] <= mae_by_alpha[1] + 0.1 &&
         mae_by_alpha[2] < raw_mae;
}

// ---- criterion 10: manifest determinism ----
bool criterion_determinism(std::string& detail) {
  ExperimentConfig cfg;
  cfg.synthetic.n_persons = 8;
  cfg.synthetic.sequences_per_person = 4;
  cfg.synthetic.t_min = 18;
  cfg.synthetic.t_max = 26;
  cfg.synthetic.n_landmarks = 8;
  cfg.synthetic_seed = 5;
  cfg.n_train = 5;
  cfg.split_seed = 3;
  cfg.first_stage = FirstStage::GroundTruthPspi;
  cfg.alphas = {0, 1, 2};
  cfg.repetitions = 3;
  cfg.seed = 42;
  cfg.hcrf.n_states = 4;
  cfg.hcrf.lbfgs.max_iterations = 60;
  cfg.out_dir = fresh_dir("determinism").string();

  const ExperimentReport first = run_alpha_experiment(cfg);
  ExperimentConfig again =
      experiment_config_from_json(slurp(fs::path(cfg.out_dir) / "run_manifest.json"));
  again.out_dir = fresh_dir("determinism_rerun").string();
  const ExperimentReport second = run_alpha_experiment(again);

  detail = first.json == second.json ? "report reproduced byte for byte from the manifest"
                                     : "reports differ";
  return first.json == second.json;
}

// ---- criterion 11: structural echoes ----
bool criterion_structure(std::string& detail) {
  if (g_trend_report.is_null()) {
    detail = "trend report unavailable";
    return false;
  }
  int cells = 0;
  for (const auto& cond : g_trend_report.at("conditions")) {
    cells += static_cast<int>(cond.at("repetitions").size());
    if (cond.at("alpha").get<int>() == 0 && cond.at("mae_std").get<double>() != 0.0) {
      detail = "alpha=0 shows nonzero repetition variance";
      return false;
    }
    if (cond.at("per_person").size() != 10) {
      detail = "per-person table incomplete";
      return false;
    }
    if (cond.at("confusion_pooled").size() != 11) {
      detail = "confusion matrix malformed";
      return false;
    }
  }
  const fs::path out = fs::temp_directory_path() / "painvas_accept_trend_rnn";
  for (const char* file : {"per_person_mae.csv", "confusion_alpha0.csv", "confusion_alpha1.csv",
                           "confusion_alpha2.csv", "report.json", "run_manifest.json"}) {
    if (!fs::exists(out / file)) {
      detail = std::string("missing ") + file;
      return false;
    }
  }
  detail = std::to_string(cells) + " condition cells (= alphas x repetitions), alpha=0 std 0, "
           "per-person and confusion artifacts present";
  return cells == 15;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "PSPI exhaustive oracle", criterion_pspi},
      {2, "HCRF partition exactness vs brute force", criterion_partition},
      {3, "HCRF gradient exactness vs finite differences", criterion_hcrf_gradient},
      {4, "BiLSTM gradient exactness vs finite differences", criterion_bilstm_gradient},
      {5, "forward-backward marginal consistency", criterion_marginals},
      {6, "I-FES exact values", criterion_ifes},
      {7, "metrics oracles", criterion_metrics},
      {8, "L-BFGS sanity", criterion_lbfgs},
      {9, "personalization trend on the synthetic cohort", criterion_trend},
      {10, "determinism from the run manifest", criterion_determinism},
      {11, "structural echoes (zero alpha-0 variance, report artifacts)", criterion_structure},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %2d: %s (%.1fs) -- %s\n", ok ? "PASS" : "FAIL", criterion.number,
                criterion.name.c_str(), seconds, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
