#include "painvas/data.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace painvas {

int Cohort::total_sequences() const {
  int n = 0;
  for (const auto& p : persons) n += static_cast<int>(p.sequences.size());
  return n;
}

namespace {

std::string seq_tag(const std::string& person_id, int seq_idx) {
  return "person '" + person_id + "' sequence " + std::to_string(seq_idx);
}

void validate_sequence(const SequenceRecord& s, const std::string& tag, int feature_dim,
                       int max_pspi) {
  if (s.frames.rows < 1) throw Error("data: " + tag + ": empty sequence");
  if (s.frames.cols != feature_dim)
    throw Error("data: " + tag + ": feature dimension " + std::to_string(s.frames.cols) +
                " does not match cohort dimension " + std::to_string(feature_dim));
  if (static_cast<int>(s.pspi.size()) != s.frames.rows)
    throw Error("data: " + tag + ": " + std::to_string(s.pspi.size()) + " PSPI labels for " +
                std::to_string(s.frames.rows) + " frames");
  if (!s.au.empty() && static_cast<int>(s.au.size()) != s.frames.rows)
    throw Error("data: " + tag + ": AU rows do not match frame count");
  if (s.vas < 0 || s.vas > 10)
    throw Error("data: " + tag + ": vas=" + std::to_string(s.vas) + " outside [0,10]");
  if (s.opi < 0 || s.opi > 5)
    throw Error("data: " + tag + ": opi=" + std::to_string(s.opi) + " outside [0,5]");
  for (int t = 0; t < s.frames.rows; ++t) {
    if (s.pspi[t] < 0 || s.pspi[t] > max_pspi)
      throw Error("data: " + tag + ": frame " + std::to_string(t) + " pspi=" +
                  std::to_string(s.pspi[t]) + " outside [0," + std::to_string(max_pspi) + "]");
    for (int j = 0; j < s.frames.cols; ++j) {
      if (!std::isfinite(s.frames(t, j)))
        throw Error("data: " + tag + ": non-finite coordinate at frame " + std::to_string(t));
    }
  }
  for (std::size_t t = 0; t < s.au.size(); ++t) {
    try {
      validate_au(s.au[t]);
    } catch (const Error& e) {
      throw Error("data: " + tag + ": frame " + std::to_string(t) + ": " + e.what());
    }
  }
}

double parse_double(const std::string& tok, const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw Error("data: " + where + ": cannot parse '" + tok + "' as a number");
  }
  if (pos != tok.size()) throw Error("data: " + where + ": trailing characters in '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, const std::string& where) {
  const double v = parse_double(tok, where);
  const int i = static_cast<int>(std::lround(v));
  if (v != static_cast<double>(i)) throw Error("data: " + where + ": '" + tok + "' is not an integer");
  return i;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::stringstream ss(line);
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Header: x1..xN,y1..yN,pspi[,au4,au6,au7,au9,au10,au43]
SequenceRecord read_sequence_csv(const std::string& path, const std::string& tag) {
  std::ifstream in(path);
  if (!in) throw Error("data: " + tag + ": cannot open sequence file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error("data: " + tag + ": missing header row in '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_row(line);

  int n_x = 0;
  while (n_x < static_cast<int>(header.size()) && header[n_x] == "x" + std::to_string(n_x + 1)) ++n_x;
  if (n_x == 0) throw Error("data: " + tag + ": header of '" + path + "' must start with x1,...");
  for (int i = 0; i < n_x; ++i) {
    if (n_x + i >= static_cast<int>(header.size()) || header[n_x + i] != "y" + std::to_string(i + 1))
      throw Error("data: " + tag + ": header of '" + path + "' lacks y" + std::to_string(i + 1));
  }
  const int d = 2 * n_x;
  if (static_cast<int>(header.size()) < d + 1 || header[d] != "pspi")
    throw Error("data: " + tag + ": header of '" + path + "' lacks the pspi column");
  bool has_au = false;
  if (static_cast<int>(header.size()) == d + 7) {
    static const char* au_names[6] = {"au4", "au6", "au7", "au9", "au10", "au43"};
    has_au = true;
    for (int i = 0; i < 6; ++i) {
      if (header[d + 1 + i] != au_names[i])
        throw Error("data: " + tag + ": unexpected AU column '" + header[d + 1 + i] + "'");
    }
  } else if (static_cast<int>(header.size()) != d + 1) {
    throw Error("data: " + tag + ": header of '" + path + "' has " +
                std::to_string(header.size()) + " columns; expected " + std::to_string(d + 1) +
                " or " + std::to_string(d + 7));
  }

  std::vector<Vec> rows;
  std::vector<int> pspi;
  std::vector<AUVector> au;
  int frame = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = split_csv_row(line);
    const std::string where = tag + ", frame " + std::to_string(frame) + " of '" + path + "'";
    if (static_cast<int>(toks.size()) != static_cast<int>(header.size()))
      throw Error("data: " + where + ": " + std::to_string(toks.size()) + " values for " +
                  std::to_string(header.size()) + " columns");
    Vec row(d);
    for (int j = 0; j < d; ++j) row[j] = parse_double(toks[j], where);
    rows.push_back(std::move(row));
    pspi.push_back(parse_int(toks[d], where));
    if (has_au) {
      AUVector v;
      v.au4 = parse_int(toks[d + 1], where);
      v.au6 = parse_int(toks[d + 2], where);
      v.au7 = parse_int(toks[d + 3], where);
      v.au9 = parse_int(toks[d + 4], where);
      v.au10 = parse_int(toks[d + 5], where);
      v.au43 = parse_int(toks[d + 6], where);
      au.push_back(v);
    }
    ++frame;
  }
  if (rows.empty()) throw Error("data: " + tag + ": '" + path + "' has no frames");

  SequenceRecord s;
  s.frames = Mat(static_cast<int>(rows.size()), d);
  for (int t = 0; t < s.frames.rows; ++t)
    for (int j = 0; j < d; ++j) s.frames(t, j) = rows[t][j];
  s.pspi = std::move(pspi);
  s.au = std::move(au);
  return s;
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void validate_cohort(const Cohort& cohort, int max_pspi) {
  for (const auto& person : cohort.persons) {
    if (person.sequences.empty())
      throw Error("data: person '" + person.person_id + "' has no sequences");
    for (std::size_t j = 0; j < person.sequences.size(); ++j)
      validate_sequence(person.sequences[j], seq_tag(person.person_id, static_cast<int>(j)),
                        cohort.feature_dim, max_pspi);
  }
}

Cohort load_cohort(const std::string& manifest_path, int max_pspi) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("data: cannot open manifest '" + manifest_path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error("data: manifest '" + manifest_path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_array()) throw Error("data: manifest top level must be a list of persons");

  const fs::path base = fs::path(manifest_path).parent_path();
  Cohort cohort;
  for (const auto& pj : doc) {
    PersonRecord person;
    person.person_id = pj.at("person_id").get<std::string>();
    for (const auto& sj : pj.at("sequences")) {
      const std::string tag = seq_tag(person.person_id, static_cast<int>(person.sequences.size()));
      const std::string file = sj.at("file").get<std::string>();
      SequenceRecord s = read_sequence_csv((base / file).string(), tag);
      s.vas = sj.at("vas").get<int>();
      s.opi = sj.at("opi").get<int>();
      if (cohort.feature_dim == 0) cohort.feature_dim = s.frames.cols;
      person.sequences.push_back(std::move(s));
    }
    cohort.persons.push_back(std::move(person));
  }
  validate_cohort(cohort, max_pspi);
  return cohort;
}

void save_cohort(const Cohort& cohort, const std::string& out_dir) {
  fs::create_directories(out_dir);
  json manifest = json::array();
  const int n_pts = cohort.feature_dim / 2;
  for (const auto& person : cohort.persons) {
    json pj;
    pj["person_id"] = person.person_id;
    pj["sequences"] = json::array();
    fs::create_directories(fs::path(out_dir) / person.person_id);
    for (std::size_t j = 0; j < person.sequences.size(); ++j) {
      const auto& s = person.sequences[j];
      const std::string rel = person.person_id + "/seq" + std::to_string(j) + ".csv";
      std::ofstream out(fs::path(out_dir) / rel);
      if (!out) throw Error("data: cannot write '" + rel + "' under '" + out_dir + "'");
      for (int i = 1; i <= n_pts; ++i) out << "x" << i << ",";
      for (int i = 1; i <= n_pts; ++i) out << "y" << i << ",";
      out << "pspi";
      if (!s.au.empty()) out << ",au4,au6,au7,au9,au10,au43";
      out << "\n";
      for (int t = 0; t < s.frames.rows; ++t) {
        for (int c = 0; c < s.frames.cols; ++c) out << fmt_real(s.frames(t, c)) << ",";
        out << s.pspi[t];
        if (!s.au.empty()) {
          const auto& a = s.au[t];
          out << "," << a.au4 << "," << a.au6 << "," << a.au7 << "," << a.au9 << "," << a.au10
              << "," << a.au43;
        }
        out << "\n";
      }
      pj["sequences"].push_back({{"file", rel}, {"vas", s.vas}, {"opi", s.opi}});
    }
    manifest.push_back(std::move(pj));
  }
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

std::pair<Cohort, Cohort> split_subject_independent(const Cohort& cohort, int n_train,
                                                    std::uint64_t seed) {
  const int n = static_cast<int>(cohort.persons.size());
  if (n_train < 1 || n_train >= n)
    throw Error("data: n_train=" + std::to_string(n_train) + " outside [1," + std::to_string(n - 1) +
                "]");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  Cohort train, test;
  train.feature_dim = test.feature_dim = cohort.feature_dim;
  for (int i = 0; i < n; ++i) {
    (i < n_train ? train : test).persons.push_back(cohort.persons[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

Cohort generate_synthetic_cohort(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.n_persons < 1) throw Error("data: synthetic config needs n_persons >= 1");
  if (cfg.sequences_per_person < 1) throw Error("data: synthetic config needs sequences per person >= 1");
  if (cfg.t_min < 1 || cfg.t_max < cfg.t_min) throw Error("data: synthetic config has invalid T range");
  if (cfg.n_landmarks < 2) throw Error("data: synthetic config needs at least 2 landmarks");
  if (cfg.expressiveness_min <= 0 || cfg.expressiveness_max < cfg.expressiveness_min)
    throw Error("data: synthetic config has invalid expressiveness range");

  const int n_pts = cfg.n_landmarks;
  const int d = 2 * n_pts;
  Rng rng(seed);

  // Neutral face: points on an ellipse, jittered once per cohort.
  Vec base(d);
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (int i = 0; i < n_pts; ++i) {
    const double th = two_pi * i / n_pts;
    base[i] = 320.0 + 80.0 * std::cos(th) + 3.0 * rng.normal();
    base[n_pts + i] = 240.0 + 100.0 * std::sin(th) + 3.0 * rng.normal();
  }

  // Fixed linear map from the six AU intensities to landmark displacements.
  Mat au_map(d, 6);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < 6; ++c) au_map(r, c) = 4.0 * rng.normal();

  Cohort cohort;
  cohort.feature_dim = d;
  for (int pi = 0; pi < cfg.n_persons; ++pi) {
    PersonRecord person;
    person.person_id = "synth" + std::to_string(pi);

    const double e =
        cfg.n_persons == 1
            ? 0.5 * (cfg.expressiveness_min + cfg.expressiveness_max)
            : cfg.expressiveness_min + (cfg.expressiveness_max - cfg.expressiveness_min) * pi /
                                           (cfg.n_persons - 1);

    Vec face(base);
    for (int j = 0; j < d; ++j) face[j] += 2.0 * rng.normal();
    double gain[5];
    for (double& g : gain) g = rng.uniform(0.7, 1.0);

    for (int sj = 0; sj < cfg.sequences_per_person; ++sj) {
      const int t_len = rng.uniform_int(cfg.t_min, cfg.t_max);
      const double peak = rng.uniform(cfg.peak_min, cfg.peak_max);
      const double center = rng.uniform(0.3, 0.7) * t_len;
      const double width = rng.uniform(0.12, 0.25) * t_len;

      SequenceRecord s;
      s.frames = Mat(t_len, d);
      s.pspi.resize(t_len);
      s.au.resize(t_len);
      for (int t = 0; t < t_len; ++t) {
        const double latent = peak * std::exp(-0.5 * (t - center) * (t - center) / (width * width));
        const double display = std::clamp(e * latent, 0.0, 1.0);
        AUVector au;
        au.au4 = static_cast<int>(std::lround(5.0 * std::clamp(display * gain[0], 0.0, 1.0)));
        au.au6 = static_cast<int>(std::lround(5.0 * std::clamp(display * gain[1], 0.0, 1.0)));
        au.au7 = static_cast<int>(std::lround(5.0 * std::clamp(display * gain[2], 0.0, 1.0)));
        au.au9 = static_cast<int>(std::lround(5.0 * std::clamp(display * gain[3], 0.0, 1.0)));
        au.au10 = static_cast<int>(std::lround(5.0 * std::clamp(display * gain[4], 0.0, 1.0)));
        au.au43 = display > 0.85 ? 1 : 0;
        s.au[t] = au;
        s.pspi[t] = compute_pspi(au);

        const double au_vals[6] = {au.au4 / 5.0, au.au6 / 5.0, au.au7 / 5.0,
                                   au.au9 / 5.0, au.au10 / 5.0, static_cast<double>(au.au43)};
        for (int j = 0; j < d; ++j) {
          double v = face[j];
          for (int c = 0; c < 6; ++c) v += au_map(j, c) * au_vals[c];
          if (cfg.landmark_noise > 0) v += cfg.landmark_noise * rng.normal();
          s.frames(t, j) = v;
        }
      }
      // Self-report quantizes the latent peak to the 0-10 scale; the observer
      // rates the displayed intensity on the same axis, capped at 5.
      s.vas = static_cast<int>(std::lround(10.0 * std::clamp(peak, 0.0, 1.0)));
      s.opi = static_cast<int>(std::lround(std::clamp(10.0 * e * peak, 0.0, 5.0)));
      person.sequences.push_back(std::move(s));
    }
    cohort.persons.push_back(std::move(person));
  }
  validate_cohort(cohort);
  return cohort;
}

}  // namespace painvas
