#pragma once

// Individual facial expressiveness score: the per-person mean of
// (OPI + 1) / (VAS + 1) over a selected subset of sequences, and the feature
// augmentation that carries it into the sequence classifier.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "painvas/common.hpp"

namespace painvas {

struct IFESScore {
  std::string person_id;
  double p = 1.0;
  int alpha_used = 0;
};

// The subset of sequence indices used for a person's score: all of them when
// alpha equals the pair count, otherwise alpha drawn uniformly without
// replacement.  Shared by compute_ifes and the inference driver so the same
// seed always selects (and later excludes) the same sequences.
std::vector<int> select_ifes_subset(int n_pairs, int alpha, std::uint64_t seed);

// pairs are (opi, vas).  alpha = 0 yields p = 1.
IFESScore compute_ifes(const std::vector<std::pair<int, int>>& pairs, int alpha,
                       std::uint64_t seed);

// Appends the constant p as an extra coordinate to every frame.
Mat augment_features(const Mat& per_frame, double p);

}  // namespace painvas
