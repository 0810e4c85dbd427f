#include "rrglab/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rrglab/constants.hpp"
#include "rrglab/io.hpp"
#include "rrglab/lanczos.hpp"
#include "rrglab/rng.hpp"
#include "rrglab/spectral.hpp"

namespace rrg {

std::uint64_t derive_trial_seed(std::uint64_t base_seed, std::uint32_t size_index,
                                std::uint32_t trial_index) {
  return mix64(mix64(mix64(base_seed) ^ size_index) ^ trial_index);
}

double critical_time(int n, double epsilon) {
  if (n < 2) throw std::invalid_argument("critical_time: need n >= 2");
  return std::pow(double(n), -1.0 / 3.0 + epsilon);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv(kWorkersEnvVar)) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void run_trials(int n_trials, int workers, const std::function<void(int)>& fn) {
  workers = std::min(resolve_workers(workers), std::max(1, n_trials));
  if (workers <= 1) {
    for (int t = 0; t < n_trials; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const int t = next.fetch_add(1);
        if (t >= n_trials) return;
        fn(t);
      }
    });
  }
  for (auto& th : pool) th.join();
}

std::string statistic_name(Statistic s) {
  switch (s) {
    case Statistic::kMoments: return "moments";
    case Statistic::kDecorrelation: return "decorrelation";
    case Statistic::kJoint: return "joint";
    case Statistic::kLocalLaw: return "local-law";
    case Statistic::kSpacing: return "spacing";
    case Statistic::kGapSum: return "gap-sum";
    case Statistic::kKs: return "ks";
    case Statistic::kDelocalization: return "delocalization";
  }
  throw std::logic_error("statistic_name: unreachable");
}

namespace {

Statistic statistic_from_name(const std::string& name) {
  static const std::map<std::string, Statistic> lut = {
      {"moments", Statistic::kMoments},
      {"decorrelation", Statistic::kDecorrelation},
      {"joint", Statistic::kJoint},
      {"local-law", Statistic::kLocalLaw},
      {"spacing", Statistic::kSpacing},
      {"gap-sum", Statistic::kGapSum},
      {"ks", Statistic::kKs},
      {"delocalization", Statistic::kDelocalization},
  };
  const auto it = lut.find(name);
  if (it == lut.end())
    throw std::invalid_argument("unknown statistic '" + name + "'");
  return it->second;
}

std::string kind_name(TestVectorKind kind) {
  switch (kind) {
    case TestVectorKind::kCoordinateDifference: return "coordinate-difference";
    case TestVectorKind::kRandomOrthogonal: return "random-orthogonal";
    case TestVectorKind::kIndicatorSet: return "indicator-set";
  }
  throw std::logic_error("kind_name: unreachable");
}

TestVectorKind kind_from_name(const std::string& name) {
  if (name == "coordinate-difference") return TestVectorKind::kCoordinateDifference;
  if (name == "random-orthogonal") return TestVectorKind::kRandomOrthogonal;
  if (name == "indicator-set") return TestVectorKind::kIndicatorSet;
  throw std::invalid_argument("unknown test-vector kind '" + name + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream ss(value);
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = token.find_last_not_of(" \t");
    out.push_back(token.substr(first, last - first + 1));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig config;
  // start from an empty selection; the file states what it wants
  config.sizes.clear();
  config.times.clear();
  config.kinds.clear();
  config.statistics.clear();

  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
    auto trim = [](std::string s) {
      const auto first = s.find_first_not_of(" \t");
      if (first == std::string::npos) return std::string();
      const auto last = s.find_last_not_of(" \t");
      return s.substr(first, last - first + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "sizes") {
      for (const auto& s : split_list(value)) config.sizes.push_back(std::stoi(s));
    } else if (key == "degree") {
      config.degree = std::stoi(value);
    } else if (key == "epsilon") {
      config.epsilon = std::stod(value);
    } else if (key == "trials") {
      config.trials = std::stoi(value);
    } else if (key == "base_seed") {
      config.base_seed = std::stoull(value);
    } else if (key == "times") {
      config.times = split_list(value);
    } else if (key == "kinds") {
      for (const auto& s : split_list(value)) config.kinds.push_back(kind_from_name(s));
    } else if (key == "joint_k") {
      config.joint_k = std::stoi(value);
    } else if (key == "joint_m") {
      config.joint_m = std::stoi(value);
    } else if (key == "statistics") {
      for (const auto& s : split_list(value))
        config.statistics.push_back(statistic_from_name(s));
    } else if (key == "output_dir") {
      config.output_dir = value;
    } else if (key == "workers") {
      config.workers = std::stoi(value);
    } else if (key == "delta_exponent") {
      config.delta_exponent = std::stod(value);
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
    }
  }
  if (config.sizes.empty()) config.sizes = {100};
  if (config.times.empty()) config.times = {"0"};
  if (config.kinds.empty()) config.kinds = {TestVectorKind::kCoordinateDifference};
  if (config.statistics.empty()) config.statistics = {Statistic::kMoments};
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file '" + path + "'");
  return parse_config(is);
}

void validate_config(const ExperimentConfig& config) {
  std::vector<std::string> problems;
  if (config.sizes.empty()) problems.push_back("sizes: must be non-empty");
  for (int n : config.sizes) {
    if (n < 50) problems.push_back("sizes: " + std::to_string(n) + " below the minimum 50");
    if ((static_cast<long long>(n) * config.degree) % 2 != 0)
      problems.push_back("sizes: " + std::to_string(n) +
                         " makes n*degree odd (handshake parity)");
  }
  if (config.degree < 3) problems.push_back("degree: must be >= 3");
  if (!(config.epsilon > 0 && config.epsilon < 1))
    problems.push_back("epsilon: must lie in (0, 1)");
  if (config.trials < 1) problems.push_back("trials: must be >= 1");
  for (const auto& token : config.times) {
    if (token == "0" || token == "tstar") continue;
    try {
      if (std::stod(token) < 0) problems.push_back("times: negative time " + token);
    } catch (const std::exception&) {
      problems.push_back("times: unparseable token '" + token + "'");
    }
  }
  if (config.joint_k < 1) problems.push_back("joint_k: must be >= 1");
  if (config.joint_m < 1) problems.push_back("joint_m: must be >= 1");
  if (config.joint_m > static_cast<int>(config.kinds.size()) &&
      std::count(config.statistics.begin(), config.statistics.end(),
                 Statistic::kJoint) > 0)
    problems.push_back("joint_m: needs at least joint_m entries in kinds");
  if (config.kinds.empty()) problems.push_back("kinds: must be non-empty");
  if (config.statistics.empty()) problems.push_back("statistics: must be non-empty");
  if (config.output_dir.empty()) problems.push_back("output_dir: must be non-empty");
  if (!(config.delta_exponent > 0 && config.delta_exponent < 1))
    problems.push_back("delta_exponent: must lie in (0, 1)");
  if (!problems.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
  }
}

std::string canonical_config(const ExperimentConfig& config) {
  std::ostringstream os;
  os << "base_seed=" << config.base_seed << '\n';
  os << "degree=" << config.degree << '\n';
  os << "delta_exponent=" << format_double(config.delta_exponent) << '\n';
  os << "epsilon=" << format_double(config.epsilon) << '\n';
  os << "joint_k=" << config.joint_k << '\n';
  os << "joint_m=" << config.joint_m << '\n';
  os << "kinds=";
  for (size_t i = 0; i < config.kinds.size(); ++i)
    os << (i ? "," : "") << kind_name(config.kinds[i]);
  os << '\n';
  os << "sizes=";
  for (size_t i = 0; i < config.sizes.size(); ++i)
    os << (i ? "," : "") << config.sizes[i];
  os << '\n';
  os << "statistics=";
  for (size_t i = 0; i < config.statistics.size(); ++i)
    os << (i ? "," : "") << statistic_name(config.statistics[i]);
  os << '\n';
  os << "times=";
  for (size_t i = 0; i < config.times.size(); ++i)
    os << (i ? "," : "") << config.times[i];
  os << '\n';
  os << "trials=" << config.trials << '\n';
  return os.str();
}

std::string config_hash(const ExperimentConfig& config) {
  // FNV-1a over the canonical serialization
  const std::string canon = canonical_config(config);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- measurement drivers ---------------------------------------------------

namespace {

struct TrialOutcome {
  bool ok = false;
  std::string reason;
};

// Eigenvector block for spectral indices 2..k_top+1, preferring the
// thick-restart path and falling back to the dense solver.
Eigen::MatrixXd top_vectors(const OverlapRunParams& params, int k_top,
                            std::uint64_t trial_seed, bool& used_dense) {
  used_dense = false;
  if (params.ensemble == Ensemble::kGraph) {
    const RegularGraph g = sample_regular_graph(
        params.n, params.d, split_seed(trial_seed, seed_tag::kGraph));
    if (params.t == 0.0) {
      if (!params.force_dense) {
        const TopEigenpairs top = topk_graph(g, k_top, trial_seed);
        if (top.converged) return top.vectors;
      }
      used_dense = true;
      const SpectralDecomposition sd = decompose(build_centered_adjacency(g));
      return sd.vectors().middleCols(1, k_top);
    }
    const CenteredMatrix evolved = evolve_exact(
        build_centered_adjacency(g), params.t, split_seed(trial_seed, seed_tag::kNoise));
    if (!params.force_dense) {
      const TopEigenpairs top = topk_nonconstraint(evolved, k_top, trial_seed);
      if (top.converged) return top.vectors;
    }
    used_dense = true;
    const SpectralDecomposition sd = decompose(evolved);
    return sd.vectors().middleCols(1, k_top);
  }
  const CenteredMatrix w = sample_constrained_goe(
      params.n, split_seed(trial_seed, seed_tag::kNoise));
  if (!params.force_dense) {
    const TopEigenpairs top = topk_nonconstraint(w, k_top, trial_seed);
    if (top.converged) return top.vectors;
  }
  used_dense = true;
  const SpectralDecomposition sd = decompose(w);
  return sd.vectors().middleCols(1, k_top);
}

}  // namespace

OverlapMeasurement measure_overlaps(const OverlapRunParams& params) {
  if (params.indices.empty())
    throw std::invalid_argument("measure_overlaps: no indices requested");
  for (int idx : params.indices)
    if (idx < 2 || idx > params.n)
      throw std::invalid_argument("measure_overlaps: spectral indices must be in [2, n]");
  const int k_top = *std::max_element(params.indices.begin(), params.indices.end()) - 1;

  const TestVector q = make_test_vector(params.kind, params.n, params.vector_seed);
  const std::uint32_t size_index = params.matched_seeds ? 0u : params.size_index;

  Eigen::MatrixXd rows(params.trials, params.indices.size());
  std::vector<TrialOutcome> outcomes(params.trials);
  std::vector<std::uint64_t> seeds(params.trials);
  std::atomic<int> dense_count{0};

  run_trials(params.trials, params.workers, [&](int trial) {
    const std::uint64_t trial_seed =
        derive_trial_seed(params.base_seed, size_index, trial);
    seeds[trial] = trial_seed;
    try {
      bool used_dense = false;
      const Eigen::MatrixXd vectors = top_vectors(params, k_top, trial_seed, used_dense);
      if (used_dense) dense_count.fetch_add(1);
      const std::vector<double> x =
          signed_overlaps(vectors, q.coords, split_seed(trial_seed, seed_tag::kSigns));
      for (size_t k = 0; k < params.indices.size(); ++k)
        rows(trial, k) = x[params.indices[k] - 2];
      outcomes[trial].ok = true;
    } catch (const std::exception& e) {
      outcomes[trial] = {false, e.what()};
    }
  });

  OverlapMeasurement out;
  out.indices = params.indices;
  out.test_vector_id = q.id;
  out.dense_fallbacks = dense_count.load();
  int successes = 0;
  for (const auto& o : outcomes) successes += o.ok;
  out.rows.resize(successes, params.indices.size());
  int row = 0;
  for (int trial = 0; trial < params.trials; ++trial) {
    if (!outcomes[trial].ok) {
      out.failures.push_back({trial, outcomes[trial].reason});
      continue;
    }
    out.rows.row(row) = rows.row(trial);
    out.trial_seeds.push_back(seeds[trial]);
    out.trial_ids.push_back(trial);
    ++row;
  }
  return out;
}

SpectrumMeasurement measure_spectra(const SpectrumRunParams& params) {
  const std::uint32_t size_index = params.matched_seeds ? 0u : params.size_index;
  std::vector<Eigen::VectorXd> spectra(params.trials);
  std::vector<TrialOutcome> outcomes(params.trials);
  std::vector<std::uint64_t> seeds(params.trials);

  run_trials(params.trials, params.workers, [&](int trial) {
    const std::uint64_t trial_seed =
        derive_trial_seed(params.base_seed, size_index, trial);
    seeds[trial] = trial_seed;
    try {
      const RegularGraph g = sample_regular_graph(
          params.n, params.d, split_seed(trial_seed, seed_tag::kGraph));
      spectra[trial] = nonconstraint_eigenvalues(build_centered_adjacency(g));
      outcomes[trial].ok = true;
    } catch (const std::exception& e) {
      outcomes[trial] = {false, e.what()};
    }
  });

  SpectrumMeasurement out;
  for (int trial = 0; trial < params.trials; ++trial) {
    if (!outcomes[trial].ok) {
      out.failures.push_back({trial, outcomes[trial].reason});
      continue;
    }
    out.spectra.push_back(std::move(spectra[trial]));
    out.trial_seeds.push_back(seeds[trial]);
    out.trial_ids.push_back(trial);
  }
  return out;
}

LocalLawMeasurement measure_local_law(const LocalLawRunParams& params) {
  const TestVector q = make_test_vector(params.kind, params.n, params.vector_seed);
  const std::vector<double> energies =
      edge_energy_grid(params.n, params.epsilon, params.n_energies);
  const std::vector<double> etas = eta_geometric_grid(params.n, params.n_etas);
  const std::uint32_t size_index = params.matched_seeds ? 0u : params.size_index;

  std::vector<double> suprema(params.trials, 0.0);
  std::vector<TrialOutcome> outcomes(params.trials);
  std::vector<std::uint64_t> seeds(params.trials);
  std::vector<std::vector<DeviationEntry>> tables(
      params.keep_tables ? params.trials : 0);

  run_trials(params.trials, params.workers, [&](int trial) {
    const std::uint64_t trial_seed =
        derive_trial_seed(params.base_seed, size_index, trial);
    seeds[trial] = trial_seed;
    try {
      const RegularGraph g = sample_regular_graph(
          params.n, params.d, split_seed(trial_seed, seed_tag::kGraph));
      const SpectralDecomposition sd = decompose(build_centered_adjacency(g));
      DeviationProfile profile =
          local_law_deviation_profile(sd, q.coords, energies, etas, params.epsilon);
      suprema[trial] = profile.supremum;
      if (params.keep_tables) tables[trial] = std::move(profile.table);
      outcomes[trial].ok = true;
    } catch (const std::exception& e) {
      outcomes[trial] = {false, e.what()};
    }
  });

  LocalLawMeasurement out;
  for (int trial = 0; trial < params.trials; ++trial) {
    if (!outcomes[trial].ok) {
      out.failures.push_back({trial, outcomes[trial].reason});
      continue;
    }
    out.suprema.push_back(suprema[trial]);
    out.trial_seeds.push_back(seeds[trial]);
    out.trial_ids.push_back(trial);
    if (params.keep_tables) out.tables.push_back(std::move(tables[trial]));
  }
  return out;
}

DelocalizationMeasurement measure_delocalization(const OverlapRunParams& params) {
  const std::uint32_t size_index = params.matched_seeds ? 0u : params.size_index;
  std::vector<DelocalizationStats> stats(params.trials);
  std::vector<TrialOutcome> outcomes(params.trials);
  std::vector<std::uint64_t> seeds(params.trials);
  std::atomic<int> dense_count{0};

  run_trials(params.trials, params.workers, [&](int trial) {
    const std::uint64_t trial_seed =
        derive_trial_seed(params.base_seed, size_index, trial);
    seeds[trial] = trial_seed;
    try {
      bool used_dense = false;
      const Eigen::MatrixXd vectors = top_vectors(params, 1, trial_seed, used_dense);
      if (used_dense) dense_count.fetch_add(1);
      stats[trial] = delocalization_from_vector(vectors.col(0),
                                                split_seed(trial_seed, seed_tag::kSet));
      outcomes[trial].ok = true;
    } catch (const std::exception& e) {
      outcomes[trial] = {false, e.what()};
    }
  });

  DelocalizationMeasurement out;
  out.dense_fallbacks = dense_count.load();
  for (int trial = 0; trial < params.trials; ++trial) {
    if (!outcomes[trial].ok) {
      out.failures.push_back({trial, outcomes[trial].reason});
      continue;
    }
    out.stats.push_back(stats[trial]);
    out.trial_seeds.push_back(seeds[trial]);
    out.trial_ids.push_back(trial);
  }
  return out;
}

// --- full pipeline ---------------------------------------------------------

namespace {

using nlohmann::json;

json summary_to_json(const StatisticSummary& s) {
  json j{{"statistic_name", s.statistic_name},
         {"N", s.n},
         {"d", s.d},
         {"epsilon", s.epsilon},
         {"trials", s.trials},
         {"value", s.value},
         {"std_error", s.std_error},
         {"seed_range", {s.seed_first, s.seed_last}},
         {"excluded_trials", s.excluded_trials}};
  if (s.has_rate_fit) {
    j["exponent"] = s.exponent;
    j["intercept"] = s.intercept;
    j["residual"] = s.residual;
  }
  return j;
}

StatisticSummary base_summary(std::string name, int n, const ExperimentConfig& config,
                              int trials, std::uint64_t seed_first,
                              std::uint64_t seed_last, int excluded) {
  StatisticSummary s;
  s.statistic_name = std::move(name);
  s.n = n;
  s.d = config.degree;
  s.epsilon = config.epsilon;
  s.trials = trials;
  s.seed_first = seed_first;
  s.seed_last = seed_last;
  s.excluded_trials = excluded;
  return s;
}

double robust_se_of_median(std::vector<double> v) {
  if (v.size() < 4) return 0.0;
  std::sort(v.begin(), v.end());
  const auto quantile = [&](double p) {
    const double pos = p * (v.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  return iqr / 1.349 / std::sqrt(double(v.size()));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double resolve_time(const std::string& token, int n, double epsilon) {
  if (token == "0") return 0.0;
  if (token == "tstar") return critical_time(n, epsilon);
  return std::stod(token);
}

double se_of_mean(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  double mean = 0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (double(x.size()) * (x.size() - 1)));
}

// estimate_moments_from_values requires 100 trials; small pilot runs still
// get plain plug-in summaries through this fallback
MomentEstimate plugin_moments(std::span<const double> x) {
  if (x.size() >= 100) return estimate_moments_from_values(x);
  MomentEstimate est;
  est.trials = static_cast<int>(x.size());
  std::vector<double> x2, x4;
  for (double v : x) {
    x2.push_back(v * v);
    x4.push_back(v * v * v * v);
  }
  for (size_t i = 0; i < x.size(); ++i) {
    est.mean += x[i] / double(x.size());
    est.second += x2[i] / double(x.size());
    est.fourth += x4[i] / double(x.size());
  }
  est.mean_se = se_of_mean(x);
  est.second_se = se_of_mean(x2);
  est.fourth_se = se_of_mean(x4);
  return est;
}

CorrelationEstimate plugin_decorrelation(std::span<const double> xi,
                                         std::span<const double> xj) {
  if (xi.size() >= 100) return estimate_decorrelation_from_values(xi, xj);
  CorrelationEstimate est;
  est.trials = static_cast<int>(xi.size());
  std::vector<double> prod;
  for (size_t k = 0; k < xi.size(); ++k) prod.push_back(xi[k] * xj[k]);
  for (double v : prod) est.value += v / double(prod.size());
  est.std_error = se_of_mean(prod);
  return est;
}

}  // namespace

ExperimentRecord run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);

  ExperimentRecord record;
  record.config_hash_hex = config_hash(config);
  record.version = kVersion;

  const auto out_path = [&](const std::string& name) {
    return (fs::path(config.output_dir) / name).string();
  };
  const auto note_file = [&](const std::string& path) {
    record.files_written.push_back(path);
  };

  const auto selected = [&](Statistic s) {
    return std::count(config.statistics.begin(), config.statistics.end(), s) > 0;
  };

  // per-statistic across-size series for rate fits
  std::vector<std::pair<double, double>> ks_series;
  std::vector<std::pair<double, double>> gap_sum_series;

  for (std::uint32_t size_index = 0; size_index < config.sizes.size(); ++size_index) {
    const int n = config.sizes[size_index];
    const std::string n_tag = "n" + std::to_string(n);

    // shared spectra for spacing and gap-sum
    std::optional<SpectrumMeasurement> spectra;
    if (selected(Statistic::kSpacing) || selected(Statistic::kGapSum)) {
      SpectrumRunParams sp;
      sp.n = n;
      sp.d = config.degree;
      sp.trials = config.trials;
      sp.base_seed = config.base_seed;
      sp.size_index = size_index;
      sp.workers = config.workers;
      spectra = measure_spectra(sp);
    }

    for (const auto& time_token : config.times) {
      const double t = resolve_time(time_token, n, config.epsilon);
      const std::string t_tag = time_token == "tstar" ? "tstar" : time_token;

      // overlap-based statistics share one measurement per kind
      const bool needs_overlaps = selected(Statistic::kMoments) ||
                                  selected(Statistic::kDecorrelation) ||
                                  selected(Statistic::kKs);
      if (needs_overlaps) {
        for (const auto kind : config.kinds) {
          OverlapRunParams params;
          params.ensemble = Ensemble::kGraph;
          params.n = n;
          params.d = config.degree;
          params.t = t;
          params.kind = kind;
          params.indices = selected(Statistic::kDecorrelation)
                               ? std::vector<int>{2, 3}
                               : std::vector<int>{2};
          params.trials = config.trials;
          params.base_seed = config.base_seed;
          params.size_index = size_index;
          params.workers = config.workers;
          const OverlapMeasurement meas = measure_overlaps(params);
          const int excluded = static_cast<int>(meas.failures.size());
          record.excluded_trials += excluded;
          const std::uint64_t seed_first =
              meas.trial_seeds.empty() ? 0 : meas.trial_seeds.front();
          const std::uint64_t seed_last =
              meas.trial_seeds.empty() ? 0 : meas.trial_seeds.back();

          const std::string kind_tag = kind_name(kind);
          const std::string csv_name =
              "overlaps_" + n_tag + "_t" + t_tag + "_" + kind_tag + ".csv";
          {
            std::ofstream os(out_path(csv_name));
            CsvWriter csv(os, "N,d,seed,t,index,test_vector_id,value");
            for (int r = 0; r < meas.rows.rows(); ++r)
              for (size_t k = 0; k < meas.indices.size(); ++k)
                csv.row({std::to_string(n), std::to_string(config.degree),
                         std::to_string(meas.trial_seeds[r]), format_double(t),
                         std::to_string(meas.indices[k]), meas.test_vector_id,
                         format_double(meas.rows(r, k))});
            note_file(out_path(csv_name));
          }

          std::vector<StatisticSummary> summaries;
          if (selected(Statistic::kMoments) && meas.rows.rows() >= 2) {
            const auto col = meas.rows.col(0);
            const std::vector<double> x2(col.data(), col.data() + col.size());
            const MomentEstimate est = plugin_moments(x2);
            auto s1 = base_summary("overlap_mean_x2_" + kind_tag, n, config,
                                   est.trials, seed_first, seed_last, excluded);
            s1.value = est.mean;
            s1.std_error = est.mean_se;
            auto s2 = base_summary("overlap_second_moment_x2_" + kind_tag, n, config,
                                   est.trials, seed_first, seed_last, excluded);
            s2.value = est.second;
            s2.std_error = est.second_se;
            auto s4 = base_summary("overlap_fourth_moment_x2_" + kind_tag, n, config,
                                   est.trials, seed_first, seed_last, excluded);
            s4.value = est.fourth;
            s4.std_error = est.fourth_se;
            summaries.insert(summaries.end(), {s1, s2, s4});
          }
          if (selected(Statistic::kDecorrelation) && meas.rows.rows() >= 2) {
            const auto xi = meas.rows.col(0);
            const auto xj = meas.rows.col(1);
            const CorrelationEstimate est = plugin_decorrelation(
                {xi.data(), size_t(xi.size())}, {xj.data(), size_t(xj.size())});
            auto s = base_summary("overlap_cross_moment_x2x3_" + kind_tag, n, config,
                                  est.trials, seed_first, seed_last, excluded);
            s.value = est.value;
            s.std_error = est.std_error;
            summaries.push_back(s);
          }
          if (selected(Statistic::kKs) && meas.rows.rows() >= 1) {
            const auto col = meas.rows.col(0);
            std::vector<double> x2(col.data(), col.data() + col.size());
            const double ks = ks_distance_to_normal(make_ecdf(x2));
            auto s = base_summary("ks_distance_x2_" + kind_tag, n, config,
                                  static_cast<int>(meas.rows.rows()), seed_first,
                                  seed_last, excluded);
            s.value = ks;
            s.std_error = 0.0;
            summaries.push_back(s);
            if (t == 0.0 && kind == config.kinds.front())
              ks_series.emplace_back(double(n), ks);
            // smoothed companion: E[f_delta(X2)] at the origin with the
            // configured width delta = n^(-delta_exponent)
            const double delta = std::pow(double(n), -config.delta_exponent);
            const Mollifier soft = build_mollifier(0.0, delta);
            std::vector<double> smoothed(x2.size());
            for (size_t r = 0; r < x2.size(); ++r) smoothed[r] = soft(x2[r]);
            auto sm = base_summary("smoothed_cdf_at_zero_x2_" + kind_tag, n, config,
                                   static_cast<int>(x2.size()), seed_first,
                                   seed_last, excluded);
            for (double v : smoothed) sm.value += v / double(smoothed.size());
            sm.std_error = se_of_mean(smoothed);
            summaries.push_back(sm);
          }

          if (!summaries.empty()) {
            json arr = json::array();
            for (const auto& s : summaries) {
              arr.push_back(summary_to_json(s));
              record.summaries.push_back(s);
            }
            const std::string json_name =
                "summaries_" + n_tag + "_t" + t_tag + "_" + kind_tag + ".json";
            std::ofstream os(out_path(json_name));
            os << arr.dump(2) << '\n';
            note_file(out_path(json_name));
          }
        }
      }

      if (selected(Statistic::kJoint)) {
        // joint overlaps of indices 2..K+1 against the first joint_m kinds
        const int big_k = config.joint_k;
        std::vector<int> indices(big_k);
        for (int i = 0; i < big_k; ++i) indices[i] = i + 2;

        std::vector<OverlapMeasurement> per_kind;
        for (int v = 0; v < config.joint_m; ++v) {
          OverlapRunParams params;
          params.ensemble = Ensemble::kGraph;
          params.n = n;
          params.d = config.degree;
          params.t = t;
          params.kind = config.kinds[v];
          params.vector_seed = v;
          params.indices = indices;
          params.trials = config.trials;
          params.base_seed = config.base_seed;
          params.size_index = size_index;
          params.workers = config.workers;
          per_kind.push_back(measure_overlaps(params));
        }
        // keep trials that succeeded for every kind
        std::vector<int> common;
        {
          std::vector<int> count(config.trials, 0);
          for (const auto& m : per_kind)
            for (int id : m.trial_ids) ++count[id];
          for (int trial = 0; trial < config.trials; ++trial)
            if (count[trial] == config.joint_m) common.push_back(trial);
        }
        JointOverlapMatrix joint;
        joint.K = big_k;
        joint.m = config.joint_m;
        joint.rows.resize(common.size(), big_k * config.joint_m);
        for (int v = 0; v < config.joint_m; ++v) {
          const auto& meas = per_kind[v];
          std::vector<int> row_of(config.trials, -1);
          for (size_t r = 0; r < meas.trial_ids.size(); ++r)
            row_of[meas.trial_ids[r]] = static_cast<int>(r);
          for (size_t c = 0; c < common.size(); ++c)
            joint.rows.block(c, v * big_k, 1, big_k) =
                meas.rows.row(row_of[common[c]]);
        }
        const int excluded = config.trials - static_cast<int>(common.size());
        record.excluded_trials += excluded;
        {
          const std::string csv_name = "joint_" + n_tag + "_t" + t_tag + ".csv";
          std::ofstream os(out_path(csv_name));
          CsvWriter csv(os, "N,d,seed,t,index,test_vector_id,value");
          for (size_t c = 0; c < common.size(); ++c) {
            const std::uint64_t seed =
                derive_trial_seed(config.base_seed, size_index, common[c]);
            for (int v = 0; v < config.joint_m; ++v)
              for (int k = 0; k < big_k; ++k)
                csv.row({std::to_string(n), std::to_string(config.degree),
                         std::to_string(seed), format_double(t),
                         std::to_string(k + 2), per_kind[v].test_vector_id,
                         format_double(joint.rows(c, v * big_k + k))});
          }
          note_file(out_path(csv_name));
        }
        if (static_cast<int>(common.size()) >= 10 * big_k * config.joint_m) {
          const JointCovariance cov = joint_covariance(joint);
          auto s = base_summary("joint_covariance_deviation", n, config,
                                static_cast<int>(common.size()), 0, 0, excluded);
          s.value = cov.deviation_from_identity;
          record.summaries.push_back(s);
          json arr = json::array({summary_to_json(s)});
          if (static_cast<int>(common.size()) >= 100) {
            const double proxy =
                multivariate_gaussian_distance(joint, 50, config.base_seed);
            auto p = base_summary("joint_projection_proxy", n, config,
                                  static_cast<int>(common.size()), 0, 0, excluded);
            p.value = proxy;
            record.summaries.push_back(p);
            arr.push_back(summary_to_json(p));
          }
          const std::string json_name = "joint_" + n_tag + "_t" + t_tag + ".json";
          std::ofstream os(out_path(json_name));
          os << arr.dump(2) << '\n';
          note_file(out_path(json_name));
        }
      }
    }

    if (selected(Statistic::kLocalLaw)) {
      LocalLawRunParams params;
      params.n = n;
      params.d = config.degree;
      params.epsilon = config.epsilon;
      params.trials = config.trials;
      params.base_seed = config.base_seed;
      params.size_index = size_index;
      params.workers = config.workers;
      params.keep_tables = true;
      const LocalLawMeasurement meas = measure_local_law(params);
      record.excluded_trials += static_cast<int>(meas.failures.size());
      const std::string csv_name = "local_law_" + n_tag + ".csv";
      {
        std::ofstream os(out_path(csv_name));
        CsvWriter csv(os, "N,d,seed,E,eta,deviation");
        for (size_t r = 0; r < meas.tables.size(); ++r)
          for (const auto& entry : meas.tables[r])
            csv.row({std::to_string(n), std::to_string(config.degree),
                     std::to_string(meas.trial_seeds[r]),
                     format_double(entry.energy), format_double(entry.eta),
                     format_double(entry.deviation)});
        note_file(out_path(csv_name));
      }
      if (!meas.suprema.empty()) {
        auto s = base_summary("local_law_supremum_median", n, config,
                              static_cast<int>(meas.suprema.size()),
                              meas.trial_seeds.front(), meas.trial_seeds.back(),
                              static_cast<int>(meas.failures.size()));
        s.value = median_of(meas.suprema);
        s.std_error = robust_se_of_median(meas.suprema);
        record.summaries.push_back(s);
        json arr = json::array({summary_to_json(s)});
        const std::string json_name = "local_law_" + n_tag + ".json";
        std::ofstream os(out_path(json_name));
        os << arr.dump(2) << '\n';
        note_file(out_path(json_name));
      }
    }

    if (spectra) {
      const auto& meas = *spectra;
      record.excluded_trials += static_cast<int>(meas.failures.size());
      if (selected(Statistic::kSpacing) && !meas.spectra.empty()) {
        const int k_max = std::min(40, n / 10);
        const std::string csv_name = "spacing_" + n_tag + ".csv";
        std::vector<double> mean_distance(k_max, 0.0);
        {
          std::ofstream os(out_path(csv_name));
          CsvWriter csv(os, "N,d,seed,k,edge_distance");
          for (size_t r = 0; r < meas.spectra.size(); ++r) {
            for (int k = 1; k <= k_max; ++k) {
              const double dist = 2.0 - meas.spectra[r](k - 1);
              mean_distance[k - 1] += dist;
              csv.row({std::to_string(n), std::to_string(config.degree),
                       std::to_string(meas.trial_seeds[r]), std::to_string(k),
                       format_double(dist)});
            }
          }
          note_file(out_path(csv_name));
        }
        for (auto& v : mean_distance) v /= double(meas.spectra.size());
        std::vector<std::pair<double, double>> pts;
        for (int k = 4; k <= std::min(40, k_max); ++k)
          if (mean_distance[k - 1] > 0)
            pts.emplace_back(double(k) / n, mean_distance[k - 1]);
        if (pts.size() >= 3) {
          const RateFit fit = fit_rate(pts);
          auto s = base_summary("spacing_exponent", n, config,
                                static_cast<int>(meas.spectra.size()),
                                meas.trial_seeds.front(), meas.trial_seeds.back(),
                                static_cast<int>(meas.failures.size()));
          s.value = fit.exponent;
          s.has_rate_fit = true;
          s.exponent = fit.exponent;
          s.intercept = fit.intercept;
          s.residual = fit.residual;
          record.summaries.push_back(s);
          json arr = json::array({summary_to_json(s)});
          const std::string json_name = "spacing_" + n_tag + ".json";
          std::ofstream os(out_path(json_name));
          os << arr.dump(2) << '\n';
          note_file(out_path(json_name));
        }
      }
      if (selected(Statistic::kGapSum) && !meas.spectra.empty()) {
        std::vector<double> sums;
        int degenerate = 0;
        for (const auto& spec : meas.spectra) {
          const GapSumResult r = gap_sum_from_values(
              {spec.data(), size_t(spec.size())}, 2);
          if (r.value)
            sums.push_back(*r.value);
          else
            ++degenerate;
        }
        if (!sums.empty()) {
          auto s = base_summary("gap_sum_median_x2", n, config,
                                static_cast<int>(sums.size()),
                                meas.trial_seeds.front(), meas.trial_seeds.back(),
                                static_cast<int>(meas.failures.size()) + degenerate);
          s.value = median_of(sums);
          s.std_error = robust_se_of_median(sums);
          record.summaries.push_back(s);
          gap_sum_series.emplace_back(double(n), s.value);
          json arr = json::array({summary_to_json(s)});
          const std::string json_name = "gap_sum_" + n_tag + ".json";
          std::ofstream os(out_path(json_name));
          os << arr.dump(2) << '\n';
          note_file(out_path(json_name));
        }
      }
    }

    if (selected(Statistic::kDelocalization)) {
      OverlapRunParams params;
      params.ensemble = Ensemble::kGraph;
      params.n = n;
      params.d = config.degree;
      params.trials = config.trials;
      params.base_seed = config.base_seed;
      params.size_index = size_index;
      params.workers = config.workers;
      const DelocalizationMeasurement meas = measure_delocalization(params);
      record.excluded_trials += static_cast<int>(meas.failures.size());
      if (!meas.stats.empty()) {
        std::vector<double> scaled;
        scaled.reserve(meas.stats.size());
        const double norm = std::sqrt(double(n)) / std::sqrt(std::log(double(n)));
        for (const auto& st : meas.stats) scaled.push_back(norm * st.sup_norm);
        std::sort(scaled.begin(), scaled.end());
        const size_t idx99 =
            std::min(scaled.size() - 1,
                     static_cast<size_t>(std::ceil(0.99 * scaled.size())) - 1);
        auto s = base_summary("delocalization_sup_norm_p99", n, config,
                              static_cast<int>(meas.stats.size()),
                              meas.trial_seeds.front(), meas.trial_seeds.back(),
                              static_cast<int>(meas.failures.size()));
        s.value = scaled[idx99];
        record.summaries.push_back(s);
        json arr = json::array({summary_to_json(s)});
        const std::string json_name = "delocalization_" + n_tag + ".json";
        std::ofstream os(out_path(json_name));
        os << arr.dump(2) << '\n';
        note_file(out_path(json_name));
      }
    }
  }

  // across-size rate fits
  const auto emit_rate = [&](const std::string& name,
                             const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 3) return;
    const RateFit fit = fit_rate(series);
    StatisticSummary s;
    s.statistic_name = name;
    s.d = config.degree;
    s.epsilon = config.epsilon;
    s.trials = config.trials;
    s.has_rate_fit = true;
    s.exponent = fit.exponent;
    s.intercept = fit.intercept;
    s.residual = fit.residual;
    s.value = fit.exponent;
    record.summaries.push_back(s);
    json arr = json::array({summary_to_json(s)});
    std::ofstream os(out_path(name + ".json"));
    os << arr.dump(2) << '\n';
    note_file(out_path(name + ".json"));
  };
  emit_rate("ks_rate_fit", ks_series);
  emit_rate("gap_sum_rate_fit", gap_sum_series);

  // deterministic run record
  {
    json j;
    j["config_hash"] = record.config_hash_hex;
    j["version"] = record.version;
    j["canonical_config"] = canonical_config(config);
    j["excluded_trials"] = record.excluded_trials;
    json files = json::array();
    for (const auto& f : record.files_written) files.push_back(f);
    j["files"] = files;
    json sums = json::array();
    for (const auto& s : record.summaries) sums.push_back(summary_to_json(s));
    j["summaries"] = sums;
    std::ofstream os(out_path("record.json"));
    os << j.dump(2) << '\n';
    record.files_written.push_back(out_path("record.json"));
  }

  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

}  // namespace rrg
