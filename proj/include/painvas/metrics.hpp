#pragma once

// Evaluation measures: mean absolute error, ICC(3,1) agreement, and label
// confusion matrices.

#include <optional>
#include <string>
#include <vector>

#include "painvas/common.hpp"

namespace painvas {

struct EvalReport {
  double mae = 0.0;
  std::optional<double> icc31;  // absent when the two-rater ANOVA is degenerate
  std::vector<std::vector<long long>> confusion;
  int n = 0;
};

double mae(const Vec& pred, const Vec& truth);

// Two-way mixed, single measure, consistency: (BMS - EMS) / (BMS + EMS) for
// k = 2 raters.  Returns nullopt when all ratings are identical (BMS + EMS
// is zero), rather than inventing a number.
std::optional<double> icc31(const Vec& pred, const Vec& truth);

// entry (i, j) counts (truth = i, pred = j)
std::vector<std::vector<long long>> confusion_matrix(const std::vector<int>& pred,
                                                     const std::vector<int>& truth, int n_labels);

std::string eval_report_to_json(const EvalReport& report);
std::string confusion_to_csv(const std::vector<std::vector<long long>>& confusion);

}  // namespace painvas
