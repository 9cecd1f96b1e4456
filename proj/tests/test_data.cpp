#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "painvas/data.hpp"
#include "painvas/personalization.hpp"

namespace fs = std::filesystem;
using namespace painvas;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("painvas_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Cohort tiny_cohort(int n_persons, int n_seq, int t_len, int n_pts = 3) {
  Rng rng(99);
  Cohort cohort;
  cohort.feature_dim = 2 * n_pts;
  for (int p = 0; p < n_persons; ++p) {
    PersonRecord person;
    person.person_id = "p" + std::to_string(p);
    for (int s = 0; s < n_seq; ++s) {
      SequenceRecord seq;
      seq.frames = Mat(t_len, cohort.feature_dim);
      for (double& v : seq.frames.a) v = rng.uniform(-1, 1);
      seq.pspi.assign(t_len, 0);
      seq.pspi[t_len / 2] = 3;
      seq.vas = (p + s) % 11;
      seq.opi = (p + s) % 6;
      person.sequences.push_back(std::move(seq));
    }
    cohort.persons.push_back(std::move(person));
  }
  return cohort;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("save and load round trip") {
  const auto dir = fresh_dir("roundtrip");
  Cohort cohort = tiny_cohort(2, 1, 3);
  // attach AUs to one sequence to cover the optional columns
  cohort.persons[0].sequences[0].au.assign(3, AUVector{1, 2, 0, 0, 1, 1});
  save_cohort(cohort, dir.string());

  const Cohort loaded = load_cohort((dir / "manifest.json").string());
  REQUIRE(loaded.persons.size() == 2);
  CHECK(loaded.feature_dim == cohort.feature_dim);
  for (std::size_t p = 0; p < 2; ++p) {
    CHECK(loaded.persons[p].person_id == cohort.persons[p].person_id);
    REQUIRE(loaded.persons[p].sequences.size() == 1);
    const auto& a = loaded.persons[p].sequences[0];
    const auto& b = cohort.persons[p].sequences[0];
    CHECK(a.length() == 3);
    CHECK(a.vas == b.vas);
    CHECK(a.opi == b.opi);
    CHECK(a.pspi == b.pspi);
    CHECK(a.au.size() == b.au.size());
  }

  // a second save of the loaded cohort reproduces the files byte for byte
  const auto dir2 = fresh_dir("roundtrip2");
  save_cohort(loaded, dir2.string());
  CHECK(slurp(dir2 / "manifest.json") == slurp(dir / "manifest.json"));
  CHECK(slurp(dir2 / "p0/seq0.csv") == slurp(dir / "p0/seq0.csv"));
  CHECK(slurp(dir2 / "p1/seq0.csv") == slurp(dir / "p1/seq0.csv"));
}

TEST_CASE("load_cohort reports labeled errors") {
  const auto dir = fresh_dir("errors");

  SUBCASE("label out of range") {
    Cohort cohort = tiny_cohort(1, 1, 2);
    save_cohort(cohort, dir.string());
    std::string manifest = slurp(dir / "manifest.json");
    const auto pos = manifest.find("\"vas\":");
    REQUIRE(pos != std::string::npos);
    const auto digits = manifest.find_first_of("0123456789", pos);
    const auto end = manifest.find_first_not_of("0123456789", digits);
    manifest.replace(digits, end - digits, "11");
    std::ofstream(dir / "manifest.json") << manifest;
    try {
      load_cohort((dir / "manifest.json").string());
      FAIL("expected an error");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("vas=11") != std::string::npos);
      CHECK(msg.find("p0") != std::string::npos);
      CHECK(msg.find("sequence 0") != std::string::npos);
    }
  }

  SUBCASE("frame with a missing value") {
    Cohort cohort = tiny_cohort(1, 1, 6);
    save_cohort(cohort, dir.string());
    // drop the last column of frame 5
    std::ifstream in(dir / "p0/seq0.csv");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();
    std::string& bad = lines[6];  // header + frames 0..5
    bad = bad.substr(0, bad.rfind(','));
    std::ofstream out(dir / "p0/seq0.csv");
    for (const auto& l : lines) out << l << "\n";
    out.close();
    try {
      load_cohort((dir / "manifest.json").string());
      FAIL("expected an error");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("frame 5") != std::string::npos);
    }
  }

  SUBCASE("missing sequence file") {
    Cohort cohort = tiny_cohort(1, 1, 2);
    save_cohort(cohort, dir.string());
    fs::remove(dir / "p0/seq0.csv");
    CHECK_THROWS_AS(load_cohort((dir / "manifest.json").string()), Error);
  }

  SUBCASE("empty sequence") {
    Cohort cohort = tiny_cohort(1, 1, 2);
    save_cohort(cohort, dir.string());
    std::ofstream out(dir / "p0/seq0.csv");
    out << "x1,x2,x3,y1,y2,y3,pspi\n";
    out.close();
    CHECK_THROWS_AS(load_cohort((dir / "manifest.json").string()), Error);
  }
}

TEST_CASE("structure echo: 2 persons x 1 sequence of T=3") {
  const auto dir = fresh_dir("echo");
  save_cohort(tiny_cohort(2, 1, 3), dir.string());
  const Cohort loaded = load_cohort((dir / "manifest.json").string());
  CHECK(loaded.persons.size() == 2);
  for (const auto& p : loaded.persons) {
    REQUIRE(p.sequences.size() == 1);
    CHECK(p.sequences[0].length() == 3);
  }
}

TEST_CASE("split_subject_independent") {
  const Cohort cohort = tiny_cohort(25, 1, 2);
  const auto [train, test] = split_subject_independent(cohort, 15, 4);
  CHECK(train.persons.size() == 15);
  CHECK(test.persons.size() == 10);

  const auto [t1, t2] = split_subject_independent(tiny_cohort(2, 1, 2), 1, 0);
  CHECK(t1.persons.size() == 1);
  CHECK(t2.persons.size() == 1);

  // determinism and disjointness over seeds
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 12345ull}) {
    const auto [a_train, a_test] = split_subject_independent(cohort, 15, seed);
    const auto [b_train, b_test] = split_subject_independent(cohort, 15, seed);
    std::vector<std::string> a_ids, b_ids;
    for (const auto& p : a_train.persons) a_ids.push_back(p.person_id);
    for (const auto& p : b_train.persons) b_ids.push_back(p.person_id);
    CHECK(a_ids == b_ids);

    std::set<std::string> train_ids(a_ids.begin(), a_ids.end());
    std::size_t union_size = train_ids.size();
    for (const auto& p : a_test.persons) {
      CHECK(train_ids.count(p.person_id) == 0);
      ++union_size;
    }
    CHECK(union_size == cohort.persons.size());
  }

  CHECK_THROWS_AS(split_subject_independent(cohort, 0, 0), Error);
  CHECK_THROWS_AS(split_subject_independent(cohort, 25, 0), Error);
}

TEST_CASE("synthetic cohort structure and invariants") {
  SyntheticConfig cfg;
  cfg.n_persons = 25;
  cfg.sequences_per_person = 8;
  cfg.t_min = 60;
  cfg.t_max = 120;
  const Cohort cohort = generate_synthetic_cohort(cfg, 3);
  CHECK(cohort.persons.size() == 25);
  CHECK(cohort.feature_dim == 132);
  validate_cohort(cohort);  // throws on any invariant breach
  for (const auto& person : cohort.persons) {
    CHECK(person.sequences.size() == 8);
    for (const auto& s : person.sequences) {
      CHECK(s.length() >= 60);
      CHECK(s.length() <= 120);
      REQUIRE(s.au.size() == static_cast<std::size_t>(s.length()));
      for (int t = 0; t < s.length(); ++t) CHECK(s.pspi[t] == compute_pspi(s.au[t]));
    }
  }
}

TEST_CASE("synthetic person with unit expressiveness and no noise agrees with itself") {
  SyntheticConfig cfg;
  cfg.n_persons = 1;
  cfg.sequences_per_person = 8;
  cfg.t_min = 30;
  cfg.t_max = 40;
  cfg.landmark_noise = 0.0;
  cfg.expressiveness_min = cfg.expressiveness_max = 1.0;
  cfg.peak_max = 0.5;  // self-report stays within the observer's 0-5 range
  const Cohort cohort = generate_synthetic_cohort(cfg, 17);

  std::vector<std::pair<int, int>> pairs;
  for (const auto& s : cohort.persons[0].sequences) {
    CHECK(s.opi == s.vas);  // observer reproduces the capped self-report exactly
    pairs.emplace_back(s.opi, s.vas);
  }
  const auto score = compute_ifes(pairs, static_cast<int>(pairs.size()), 0);
  CHECK(score.p == 1.0);
}

TEST_CASE("synthetic generation is deterministic under the seed") {
  SyntheticConfig cfg;
  cfg.n_persons = 4;
  cfg.sequences_per_person = 2;
  cfg.t_min = 10;
  cfg.t_max = 20;
  const Cohort a = generate_synthetic_cohort(cfg, 5);
  const Cohort b = generate_synthetic_cohort(cfg, 5);
  REQUIRE(a.persons.size() == b.persons.size());
  for (std::size_t p = 0; p < a.persons.size(); ++p) {
    for (std::size_t s = 0; s < a.persons[p].sequences.size(); ++s) {
      const auto& x = a.persons[p].sequences[s];
      const auto& y = b.persons[p].sequences[s];
      CHECK(x.frames.a == y.frames.a);
      CHECK(x.pspi == y.pspi);
      CHECK(x.vas == y.vas);
      CHECK(x.opi == y.opi);
    }
  }
  // a different seed produces different data
  const Cohort c = generate_synthetic_cohort(cfg, 6);
  CHECK(a.persons[0].sequences[0].frames.a != c.persons[0].sequences[0].frames.a);
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig cfg;
  cfg.n_persons = 0;
  CHECK_THROWS_AS(generate_synthetic_cohort(cfg, 0), Error);
  cfg.n_persons = 2;
  cfg.t_min = 0;
  CHECK_THROWS_AS(generate_synthetic_cohort(cfg, 0), Error);
}
