#include "painvas/personalization.hpp"

namespace painvas {

std::vector<int> select_ifes_subset(int n_pairs, int alpha, std::uint64_t seed) {
  if (alpha < 0 || alpha > n_pairs)
    throw Error("personalization: alpha=" + std::to_string(alpha) + " with " +
                std::to_string(n_pairs) + " sequences available");
  if (alpha == n_pairs) {
    std::vector<int> all(n_pairs);
    for (int i = 0; i < n_pairs; ++i) all[i] = i;
    return all;
  }
  Rng rng(seed);
  return rng.sample_without_replacement(n_pairs, alpha);
}

IFESScore compute_ifes(const std::vector<std::pair<int, int>>& pairs, int alpha,
                       std::uint64_t seed) {
  for (const auto& [opi, vas] : pairs) {
    if (opi < 0 || opi > 5) throw Error("personalization: opi=" + std::to_string(opi) + " outside [0,5]");
    if (vas < 0 || vas > 10) throw Error("personalization: vas=" + std::to_string(vas) + " outside [0,10]");
  }
  IFESScore score;
  score.alpha_used = alpha;
  if (alpha == 0) {
    score.p = 1.0;
    return score;
  }
  const auto subset = select_ifes_subset(static_cast<int>(pairs.size()), alpha, seed);
  double sum = 0.0;
  for (int i : subset) sum += (pairs[i].first + 1.0) / (pairs[i].second + 1.0);
  score.p = sum / alpha;
  return score;
}

Mat augment_features(const Mat& per_frame, double p) {
  Mat out(per_frame.rows, per_frame.cols + 1);
  for (int t = 0; t < per_frame.rows; ++t) {
    for (int c = 0; c < per_frame.cols; ++c) out(t, c) = per_frame(t, c);
    out(t, per_frame.cols) = p;
  }
  return out;
}

}  // namespace painvas
