#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rrglab/metrics.hpp"
#include "rrglab/overlaps.hpp"

// Configuration-driven Monte Carlo orchestration. Trials run concurrently,
// each owning an engine seeded from derive_trial_seed, and are reduced in
// trial-index order, so outputs are byte-stable for a given config and
// independent of the worker count.

namespace rrg {

inline constexpr const char* kVersion = "rrglab 0.1.0";
inline constexpr const char* kWorkersEnvVar = "RRGLAB_WORKERS";

// splitmix-style mixing of (base_seed, size_index, trial_index); the exact
// chain is mix64(mix64(mix64(base) ^ size_index) ^ trial_index) with mix64
// from rng.hpp, so results are reproducible across implementations.
std::uint64_t derive_trial_seed(std::uint64_t base_seed, std::uint32_t size_index,
                                std::uint32_t trial_index);

// t* = n^(-1/3 + epsilon)
double critical_time(int n, double epsilon);

// worker resolution: explicit request > RRGLAB_WORKERS > hardware threads
int resolve_workers(int requested);

// Run fn(trial) for trial in [0, n_trials) on `workers` threads.
void run_trials(int n_trials, int workers, const std::function<void(int)>& fn);

// --- configuration ---------------------------------------------------------

enum class Statistic {
  kMoments,
  kDecorrelation,
  kJoint,
  kLocalLaw,
  kSpacing,
  kGapSum,
  kKs,
  kDelocalization,
};

std::string statistic_name(Statistic s);

struct ExperimentConfig {
  std::vector<int> sizes = {100};
  int degree = 3;
  double epsilon = 0.1;
  int trials = 100;
  std::uint64_t base_seed = 1;
  std::vector<std::string> times = {"0"};  // "0", "tstar", or a numeric literal
  std::vector<TestVectorKind> kinds = {TestVectorKind::kCoordinateDifference};
  int joint_k = 4;
  int joint_m = 1;
  std::vector<Statistic> statistics = {Statistic::kMoments};
  std::string output_dir = "out";
  int workers = 0;
  double delta_exponent = 5.0 / 36.0;  // mollifier width knob: delta = n^(-delta_exponent)
};

// Flat key = value text; '#' starts a comment. Unknown keys are rejected.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_file(const std::string& path);

// Throws with every violated field named.
void validate_config(const ExperimentConfig& config);

// Canonical serialization (sorted keys, 17-digit numerics) and its FNV-1a
// hash; the hash identifies the run in every output file.
std::string canonical_config(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

// --- measurement drivers ---------------------------------------------------

struct TrialFailure {
  int trial = 0;
  std::string reason;
};

// Per-trial overlap rows for one ensemble at one time.
struct OverlapMeasurement {
  std::vector<int> indices;              // spectral indices measured
  Eigen::MatrixXd rows;                  // successful trials x indices
  std::vector<std::uint64_t> trial_seeds;  // aligned with rows
  std::vector<int> trial_ids;              // aligned with rows
  std::vector<TrialFailure> failures;
  int dense_fallbacks = 0;  // iterative eigensolver retries through decompose()
  std::string test_vector_id;
};

enum class Ensemble { kGraph, kConstrainedGoe };

struct OverlapRunParams {
  Ensemble ensemble = Ensemble::kGraph;
  int n = 100;
  int d = 3;
  double t = 0.0;  // evolution time; 0 measures the raw ensemble
  TestVectorKind kind = TestVectorKind::kCoordinateDifference;
  std::uint64_t vector_seed = 0;  // test vector is fixed across trials
  std::vector<int> indices = {2};
  int trials = 100;
  std::uint64_t base_seed = 1;
  std::uint32_t size_index = 0;
  int workers = 0;
  bool force_dense = false;  // decompose() for every trial
  bool matched_seeds = false;  // derive seeds without the size index
};

OverlapMeasurement measure_overlaps(const OverlapRunParams& params);

// Non-constraint eigenvalues per trial (descending), dense values-only path.
struct SpectrumMeasurement {
  std::vector<Eigen::VectorXd> spectra;  // successful trials
  std::vector<std::uint64_t> trial_seeds;
  std::vector<int> trial_ids;
  std::vector<TrialFailure> failures;
};

struct SpectrumRunParams {
  int n = 100;
  int d = 3;
  int trials = 100;
  std::uint64_t base_seed = 1;
  std::uint32_t size_index = 0;
  int workers = 0;
  bool matched_seeds = false;
};

SpectrumMeasurement measure_spectra(const SpectrumRunParams& params);

// Local-law deviation statistics for one size: per-trial grid suprema, and
// the full (E, eta, deviation) tables when keep_tables is set.
struct LocalLawMeasurement {
  std::vector<double> suprema;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<int> trial_ids;
  std::vector<TrialFailure> failures;
  std::vector<std::vector<DeviationEntry>> tables;  // aligned with suprema
};

struct LocalLawRunParams {
  int n = 500;
  int d = 3;
  double epsilon = 0.1;
  int n_energies = 5;
  int n_etas = 20;
  TestVectorKind kind = TestVectorKind::kCoordinateDifference;
  std::uint64_t vector_seed = 0;
  int trials = 100;
  std::uint64_t base_seed = 1;
  std::uint32_t size_index = 0;
  int workers = 0;
  bool matched_seeds = true;  // same trial seeds across sizes
  bool keep_tables = false;
};

LocalLawMeasurement measure_local_law(const LocalLawRunParams& params);

// Per-trial delocalization statistics of u_2.
struct DelocalizationMeasurement {
  std::vector<DelocalizationStats> stats;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<int> trial_ids;
  std::vector<TrialFailure> failures;
  int dense_fallbacks = 0;
};

DelocalizationMeasurement measure_delocalization(const OverlapRunParams& params);

// --- full pipeline ---------------------------------------------------------

struct StatisticSummary {
  std::string statistic_name;
  int n = 0;
  int d = 0;
  double epsilon = 0;
  int trials = 0;       // successful trials entering the estimate
  double value = 0;
  double std_error = 0;
  std::uint64_t seed_first = 0;
  std::uint64_t seed_last = 0;
  int excluded_trials = 0;
  // rate-fit extras, set when the summary is a fitted exponent
  bool has_rate_fit = false;
  double exponent = 0, intercept = 0, residual = 0;
};

struct ExperimentRecord {
  std::string config_hash_hex;
  std::string version;
  std::vector<StatisticSummary> summaries;
  std::vector<std::string> files_written;
  int excluded_trials = 0;
  double wall_seconds = 0;  // reported on stderr, not serialized
};

// Runs every selected statistic for every size and writes the CSV/JSON
// outputs plus a deterministic record.json under config.output_dir.
ExperimentRecord run_experiment(const ExperimentConfig& config);

}  // namespace rrg
