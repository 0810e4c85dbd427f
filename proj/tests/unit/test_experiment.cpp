#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "rrglab/experiment.hpp"
#include "rrglab/rng.hpp"

using namespace rrg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("trial seed derivation") {
  SUBCASE("pinned test vector of the mixer") {
    CHECK(derive_trial_seed(0, 0, 0) == 2558736989570252433ULL);
  }
  SUBCASE("no collisions over a million trials") {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(1 << 21);
    for (std::uint32_t t = 0; t < 1000000; ++t)
      CHECK(seen.insert(derive_trial_seed(12345, t & 7, t)).second);
  }
  SUBCASE("every argument matters") {
    Engine rng = make_engine(50);
    std::uniform_int_distribution<std::uint32_t> small(0, 1 << 20);
    for (int rep = 0; rep < 1000; ++rep) {
      const std::uint64_t base = rng();
      const std::uint32_t a = small(rng), b = small(rng);
      const std::uint64_t ref = derive_trial_seed(base, a, b);
      CHECK(derive_trial_seed(base + 1, a, b) != ref);
      CHECK(derive_trial_seed(base, a + 1, b) != ref);
      CHECK(derive_trial_seed(base, a, b + 1) != ref);
    }
  }
}

TEST_CASE("critical time") {
  CHECK(critical_time(1000, 0.1) == doctest::Approx(0.199526231496888).epsilon(1e-12));
  CHECK_THROWS_AS(critical_time(1, 0.1), std::invalid_argument);
}

TEST_CASE("config parsing and validation") {
  SUBCASE("round trip through the flat format") {
    std::istringstream src(
        "sizes = 100, 200\n"
        "degree = 3\n"
        "epsilon = 0.1\n"
        "trials = 40          # comment\n"
        "base_seed = 9\n"
        "times = 0, tstar\n"
        "kinds = coordinate-difference, indicator-set\n"
        "statistics = moments, ks\n"
        "output_dir = out\n");
    const ExperimentConfig config = parse_config(src);
    CHECK(config.sizes == std::vector<int>{100, 200});
    CHECK(config.trials == 40);
    CHECK(config.base_seed == 9);
    CHECK(config.times == std::vector<std::string>{"0", "tstar"});
    CHECK(config.kinds.size() == 2);
    CHECK(config.statistics.size() == 2);
    validate_config(config);
  }
  SUBCASE("unknown keys are rejected") {
    std::istringstream src("frobnicate = 7\n");
    CHECK_THROWS_AS(parse_config(src), std::invalid_argument);
  }
  SUBCASE("violations name their fields") {
    ExperimentConfig config;
    config.sizes = {40, 101};  // below minimum; odd parity with d=3
    config.epsilon = 1.5;
    config.trials = 0;
    try {
      validate_config(config);
      FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("sizes") != std::string::npos);
      CHECK(msg.find("epsilon") != std::string::npos);
      CHECK(msg.find("trials") != std::string::npos);
    }
  }
  SUBCASE("hash tracks content") {
    ExperimentConfig a;
    ExperimentConfig b;
    b.trials = a.trials + 1;
    CHECK(config_hash(a) == config_hash(a));
    CHECK(config_hash(a) != config_hash(b));
  }
}

TEST_CASE("minimal experiment run and determinism") {
  ExperimentConfig config;
  config.sizes = {100};
  config.trials = 10;
  config.statistics = {Statistic::kMoments};
  config.base_seed = 77;
  config.workers = 1;

  TempDir dir_a("rrglab_test_run_a");
  TempDir dir_b("rrglab_test_run_b");
  TempDir dir_c("rrglab_test_run_c");

  config.output_dir = dir_a.path.string();
  const ExperimentRecord rec_a = run_experiment(config);
  CHECK(rec_a.version == std::string(kVersion));
  CHECK(rec_a.excluded_trials == 0);
  REQUIRE_FALSE(rec_a.summaries.empty());

  // ten trial rows in the overlap CSV
  const std::string csv = slurp(
      dir_a.path / "overlaps_n100_t0_coordinate-difference.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);  // header + 10 rows
  CHECK(csv.rfind("N,d,seed,t,index,test_vector_id,value", 0) == 0);

  // identical config, byte-identical outputs
  config.output_dir = dir_b.path.string();
  run_experiment(config);
  for (const auto& entry : fs::directory_iterator(dir_a.path)) {
    const fs::path other = dir_b.path / entry.path().filename();
    REQUIRE(fs::exists(other));
    const std::string left = slurp(entry.path());
    std::string right = slurp(other);
    // output_dir differs inside record.json's file list; normalize
    size_t pos;
    std::string normalized = left;
    while ((pos = normalized.find(dir_a.path.string())) != std::string::npos)
      normalized.replace(pos, dir_a.path.string().size(), dir_b.path.string());
    CHECK(normalized == right);
  }

  // worker count must not change results
  config.output_dir = dir_c.path.string();
  config.workers = 2;
  run_experiment(config);
  const std::string csv_c = slurp(
      dir_c.path / "overlaps_n100_t0_coordinate-difference.csv");
  CHECK(csv == csv_c);
}

TEST_CASE("full statistic selection populates every schema") {
  ExperimentConfig config;
  config.sizes = {100};
  config.trials = 45;  // enough for the joint covariance precondition
  config.base_seed = 3;
  config.joint_k = 4;
  config.joint_m = 1;
  config.statistics = {Statistic::kMoments,   Statistic::kDecorrelation,
                       Statistic::kJoint,     Statistic::kLocalLaw,
                       Statistic::kSpacing,   Statistic::kGapSum,
                       Statistic::kKs,        Statistic::kDelocalization};
  TempDir dir("rrglab_test_run_full");
  config.output_dir = dir.path.string();
  const ExperimentRecord record = run_experiment(config);

  const std::set<std::string> expected = {
      "overlaps_n100_t0_coordinate-difference.csv",
      "summaries_n100_t0_coordinate-difference.json",
      "joint_n100_t0.json",
      "joint_n100_t0.csv",
      "local_law_n100.csv",
      "local_law_n100.json",
      "spacing_n100.csv",
      "spacing_n100.json",
      "gap_sum_n100.json",
      "delocalization_n100.json",
      "record.json",
  };
  for (const auto& name : expected) {
    INFO("missing " << name);
    CHECK(fs::exists(dir.path / name));
  }
  // schema headers
  CHECK(slurp(dir.path / "local_law_n100.csv")
            .rfind("N,d,seed,E,eta,deviation", 0) == 0);
  CHECK(slurp(dir.path / "spacing_n100.csv")
            .rfind("N,d,seed,k,edge_distance", 0) == 0);
  const std::string record_json = slurp(dir.path / "record.json");
  CHECK(record_json.find("excluded_trials") != std::string::npos);
  CHECK(record_json.find("config_hash") != std::string::npos);
  CHECK(record.summaries.size() >= 7);
}
