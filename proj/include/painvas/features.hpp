#pragma once

// Landmark normalization, PCA reduction, and PSPI-level frame balancing for
// regressor training.

#include <string>
#include <vector>

#include "painvas/common.hpp"
#include "painvas/data.hpp"

namespace painvas {

struct PCAModel {
  Vec mean;                      // D
  Mat basis;                     // n_components x D, orthonormal rows
  Vec explained_variance_ratio;  // per retained component, non-increasing
  Vec eigenvalues;               // per retained component (sample variance along each axis)

  int n_components() const { return basis.rows; }
  int input_dim() const { return basis.cols; }
};

// Per frame: subtract the centroid of the landmark points, divide by the
// root-mean-square point distance from it.  Frames are laid out as the x
// block followed by the y block.
Mat normalize_landmarks(const Mat& frames);

// Smallest component count whose cumulative explained variance reaches
// variance_target.  Covariance uses divisor (n-1); the sign of each basis row
// is fixed by making its largest-magnitude entry positive.
PCAModel fit_pca(const Mat& frames, double variance_target);

Vec project(const PCAModel& model, const double* frame, int dim);
Vec project(const PCAModel& model, const Vec& frame);
Mat project_all(const PCAModel& model, const Mat& frames);

std::string pca_to_json(const PCAModel& model);
PCAModel pca_from_json(const std::string& text);

// Retained window-center indices per sequence.  All frames with PSPI >= 1 are
// kept; neutral frames are kept up to the global count of PSPI=1 frames,
// dropping the neutrals farthest from any non-neutral frame first (ties keep
// the earlier sequence/frame).
std::vector<std::vector<int>> balance_training_frames(const std::vector<SequenceRecord>& sequences);

}  // namespace painvas
