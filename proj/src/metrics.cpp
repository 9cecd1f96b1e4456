#include "painvas/metrics.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace painvas {

double mae(const Vec& pred, const Vec& truth) {
  if (pred.empty()) throw Error("metrics: MAE of empty input");
  if (pred.size() != truth.size())
    throw Error("metrics: MAE length mismatch (" + std::to_string(pred.size()) + " vs " +
                std::to_string(truth.size()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

std::optional<double> icc31(const Vec& pred, const Vec& truth) {
  if (pred.size() != truth.size()) throw Error("metrics: ICC length mismatch");
  const int n = static_cast<int>(pred.size());
  if (n < 2) throw Error("metrics: ICC needs at least 2 targets");

  double grand = 0.0;
  for (int i = 0; i < n; ++i) grand += pred[i] + truth[i];
  grand /= 2.0 * n;

  const double col_pred = [&] {
    double s = 0.0;
    for (double v : pred) s += v;
    return s / n;
  }();
  const double col_truth = [&] {
    double s = 0.0;
    for (double v : truth) s += v;
    return s / n;
  }();

  double ss_rows = 0.0, ss_cols = 0.0, ss_total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double row_mean = 0.5 * (pred[i] + truth[i]);
    ss_rows += (row_mean - grand) * (row_mean - grand);
    ss_total += (pred[i] - grand) * (pred[i] - grand) + (truth[i] - grand) * (truth[i] - grand);
  }
  ss_rows *= 2.0;  // k = 2 raters
  ss_cols = n * ((col_pred - grand) * (col_pred - grand) + (col_truth - grand) * (col_truth - grand));
  const double ss_err = std::max(ss_total - ss_rows - ss_cols, 0.0);

  const double bms = ss_rows / (n - 1);
  const double ems = ss_err / (n - 1);  // (n-1)(k-1) with k = 2
  if (bms + ems <= 0.0) return std::nullopt;
  return (bms - ems) / (bms + ems);
}

std::vector<std::vector<long long>> confusion_matrix(const std::vector<int>& pred,
                                                     const std::vector<int>& truth, int n_labels) {
  if (pred.size() != truth.size()) throw Error("metrics: confusion length mismatch");
  std::vector<std::vector<long long>> m(n_labels, std::vector<long long>(n_labels, 0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n_labels || pred[i] < 0 || pred[i] >= n_labels)
      throw Error("metrics: label outside [0," + std::to_string(n_labels - 1) + ") at item " +
                  std::to_string(i));
    ++m[truth[i]][pred[i]];
  }
  return m;
}

std::string eval_report_to_json(const EvalReport& report) {
  json j;
  j["mae"] = report.mae;
  if (report.icc31)
    j["icc31"] = *report.icc31;
  else
    j["icc31"] = nullptr;
  j["confusion"] = report.confusion;
  j["n"] = report.n;
  return j.dump();
}

std::string confusion_to_csv(const std::vector<std::vector<long long>>& confusion) {
  std::ostringstream out;
  for (const auto& row : confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << "\n";
  }
  return out.str();
}

}  // namespace painvas
