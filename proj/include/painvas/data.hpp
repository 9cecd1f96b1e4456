#pragma once

// Dataset model: per-frame landmark features with frame-level PSPI and
// sequence-level VAS/OPI labels, grouped by person.  Cohorts are stored on
// disk as one JSON manifest plus one CSV per sequence, so users of licensed
// recordings can export their own copy into the documented format.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "painvas/common.hpp"
#include "painvas/pspi.hpp"

namespace painvas {

struct SequenceRecord {
  Mat frames;                 // T x D landmark coordinates, x block then y block
  std::vector<int> pspi;      // length T
  std::vector<AUVector> au;   // empty, or length T
  int vas = 0;                // 0..10, per sequence
  int opi = 0;                // 0..5, per sequence

  int length() const { return frames.rows; }
};

struct PersonRecord {
  std::string person_id;
  std::vector<SequenceRecord> sequences;
};

struct Cohort {
  std::vector<PersonRecord> persons;
  int feature_dim = 0;

  int total_sequences() const;
};

// Throws Error naming the offending person/sequence on any invariant breach.
void validate_cohort(const Cohort& cohort, int max_pspi = kDefaultMaxPspi);

Cohort load_cohort(const std::string& manifest_path, int max_pspi = kDefaultMaxPspi);

// Writes <out_dir>/manifest.json plus one CSV per sequence. Reals carry
// 9 significant digits.
void save_cohort(const Cohort& cohort, const std::string& out_dir);

// Disjoint partition of persons; same seed gives the same partition.
std::pair<Cohort, Cohort> split_subject_independent(const Cohort& cohort, int n_train,
                                                    std::uint64_t seed);

struct SyntheticConfig {
  int n_persons = 25;
  int sequences_per_person = 8;
  int t_min = 60;
  int t_max = 120;
  int n_landmarks = 66;
  double landmark_noise = 1.0;       // sd of iid coordinate noise, landmark units
  double expressiveness_min = 0.5;   // person factors are evenly spread over this range
  double expressiveness_max = 2.0;
  double peak_min = 0.05;            // latent pain peak range, 0..1
  double peak_max = 0.9;
};

// Each person carries an expressiveness factor e: the face displays
// clamp(e * latent pain), VAS self-reports the latent peak on 0-10, and the
// observer rates the displayed peak on the same axis capped at the OPI range,
// so OPI/VAS disagreement grows with e.  Landmarks are a fixed linear map of
// the AU intensities plus noise; PSPI is computed from the AUs.
Cohort generate_synthetic_cohort(const SyntheticConfig& cfg, std::uint64_t seed);

}  // namespace painvas
