#pragma once

// Prkachin-Solomon pain intensity from facial action-unit intensities.
//
// PSPI = AU4 + max(AU6, AU7) + max(AU9, AU10) + AU43.  The graded AUs live on
// a 0-5 ordinal scale and AU43 (eye closure) is binary, so the formula's range
// is 0..16 even though the score is conventionally quoted as 0-15.  The
// scaling denominator is configurable for that reason (default 16).

#include <algorithm>
#include <string>

#include "painvas/common.hpp"

namespace painvas {

struct AUVector {
  int au4 = 0;
  int au6 = 0;
  int au7 = 0;
  int au9 = 0;
  int au10 = 0;
  int au43 = 0;  // binary
};

constexpr int kDefaultMaxPspi = 16;

inline void validate_au(const AUVector& au) {
  const int graded[5] = {au.au4, au.au6, au.au7, au.au9, au.au10};
  for (int v : graded) {
    if (v < 0 || v > 5) throw Error("pspi: graded AU intensity " + std::to_string(v) + " outside [0,5]");
  }
  if (au.au43 != 0 && au.au43 != 1) throw Error("pspi: au43 must be 0 or 1");
}

inline int compute_pspi(const AUVector& au) {
  validate_au(au);
  return au.au4 + std::max(au.au6, au.au7) + std::max(au.au9, au.au10) + au.au43;
}

inline double scale_pspi(int s, int max_pspi = kDefaultMaxPspi) {
  if (max_pspi != 15 && max_pspi != 16) throw Error("pspi: max_pspi must be 15 or 16");
  if (s < 0 || s > max_pspi)
    throw Error("pspi: score " + std::to_string(s) + " outside [0," + std::to_string(max_pspi) + "]");
  return static_cast<double>(s) / static_cast<double>(max_pspi);
}

}  // namespace painvas
