// Command line front end: seeded sampling, evolution, and the Monte Carlo
// measurement pipeline. Subcommand outputs follow the CSV/JSON schemas of
// the core library; `run` drives the full configuration-based pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "rrglab/constants.hpp"
#include "rrglab/ensemble.hpp"
#include "rrglab/experiment.hpp"
#include "rrglab/graph.hpp"
#include "rrglab/io.hpp"
#include "rrglab/lanczos.hpp"
#include "rrglab/metrics.hpp"
#include "rrglab/overlaps.hpp"
#include "rrglab/rng.hpp"
#include "rrglab/spectral.hpp"

namespace {

using nlohmann::json;
using namespace rrg;

std::unique_ptr<std::ostream> open_out(const std::string& path) {
  if (path.empty() || path == "-") return nullptr;  // stdout
  auto os = std::make_unique<std::ofstream>(path);
  if (!*os) throw std::runtime_error("cannot open output file '" + path + "'");
  return os;
}

std::ostream& out_stream(const std::unique_ptr<std::ostream>& os) {
  return os ? *os : std::cout;
}

TestVectorKind parse_kind(const std::string& name) {
  if (name == "coordinate-difference") return TestVectorKind::kCoordinateDifference;
  if (name == "random-orthogonal") return TestVectorKind::kRandomOrthogonal;
  if (name == "indicator-set") return TestVectorKind::kIndicatorSet;
  throw CLI::ValidationError("--kind", "unknown test-vector kind '" + name + "'");
}

double parse_time(const std::string& token, int n, double epsilon) {
  if (token == "0") return 0.0;
  if (token == "tstar") return critical_time(n, epsilon);
  return std::stod(token);
}

json summary_json(const std::string& name, int n, int d, double epsilon, int trials,
                  double value, double std_error, std::uint64_t seed_first,
                  std::uint64_t seed_last) {
  return json{{"statistic_name", name}, {"N", n},
              {"d", d},                 {"epsilon", epsilon},
              {"trials", trials},       {"value", value},
              {"std_error", std_error}, {"seed_range", {seed_first, seed_last}}};
}

struct CommonOptions {
  int n = 500;
  int d = 3;
  int trials = 200;
  std::uint64_t seed = 1;
  double epsilon = 0.1;
  std::string time = "0";
  std::string kind = "coordinate-difference";
  std::string out;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_time = true) {
  cmd->add_option("--n", opt.n, "matrix size")->check(CLI::PositiveNumber);
  cmd->add_option("--d", opt.d, "graph degree (>= 3)");
  cmd->add_option("--trials", opt.trials, "Monte Carlo trials");
  cmd->add_option("--seed", opt.seed, "base seed");
  cmd->add_option("--epsilon", opt.epsilon, "edge-window exponent parameter");
  if (with_time) cmd->add_option("--t", opt.time, "evolution time: 0, tstar, or a number");
  cmd->add_option("--kind", opt.kind, "test-vector kind");
  cmd->add_option("--out", opt.out, "output path (default stdout)");
  cmd->add_option("--workers", opt.workers, "worker threads (default: env or hardware)");
}

OverlapMeasurement run_overlap_measurement(const CommonOptions& opt,
                                           std::vector<int> indices) {
  OverlapRunParams params;
  params.ensemble = Ensemble::kGraph;
  params.n = opt.n;
  params.d = opt.d;
  params.t = parse_time(opt.time, opt.n, opt.epsilon);
  params.kind = parse_kind(opt.kind);
  params.indices = std::move(indices);
  params.trials = opt.trials;
  params.base_seed = opt.seed;
  params.workers = opt.workers;
  return measure_overlaps(params);
}

}  // namespace

int main(int argc, char** argv) {
  setenv("OPENBLAS_NUM_THREADS", "1", 0);  // trials are process-level parallel
  CLI::App app{"numerical laboratory for edge eigenvector statistics of random regular graphs"};
  app.require_subcommand(1);

  // --- sample ---------------------------------------------------------------
  struct {
    int n = 100;
    int d = 3;
    std::uint64_t seed = 1;
    std::string out;
  } sample_opt;
  auto* sample_cmd = app.add_subcommand("sample", "sample a random d-regular graph");
  sample_cmd->add_option("--n", sample_opt.n, "vertices")->required();
  sample_cmd->add_option("--d", sample_opt.d, "degree")->required();
  sample_cmd->add_option("--seed", sample_opt.seed, "seed");
  sample_cmd->add_option("--out", sample_opt.out, "output path (default stdout)");

  // --- evolve ---------------------------------------------------------------
  struct {
    int n = 100;
    int d = 3;
    std::uint64_t seed = 1;
    std::string time = "tstar";
    double epsilon = 0.1;
    bool path = false;
    int steps = 100;
    std::string in;
    std::string out;
  } evolve_opt;
  auto* evolve_cmd =
      app.add_subcommand("evolve", "evolve a constrained matrix and dump the result");
  evolve_cmd->add_option("--n", evolve_opt.n, "vertices (ignored with --in)");
  evolve_cmd->add_option("--d", evolve_opt.d, "degree");
  evolve_cmd->add_option("--seed", evolve_opt.seed, "seed");
  evolve_cmd->add_option("--t", evolve_opt.time, "time: 0, tstar, or a number");
  evolve_cmd->add_option("--epsilon", evolve_opt.epsilon, "epsilon for tstar");
  evolve_cmd->add_flag("--use-path", evolve_opt.path,
                       "integrate step by step instead of the closed form");
  evolve_cmd->add_option("--steps", evolve_opt.steps, "integrator steps for --use-path");
  evolve_cmd->add_option("--in", evolve_opt.in,
                         "start from a matrix dump instead of sampling a graph");
  evolve_cmd->add_option("--out", evolve_opt.out, "output path (default stdout)");

  // --- overlaps ---------------------------------------------------------------
  CommonOptions overlaps_opt;
  std::vector<int> overlap_indices = {2};
  auto* overlaps_cmd =
      app.add_subcommand("overlaps", "per-trial overlap records as CSV");
  add_common(overlaps_cmd, overlaps_opt);
  overlaps_cmd->add_option("--indices", overlap_indices, "spectral indices (>= 2)");

  // --- moments ----------------------------------------------------------------
  CommonOptions moments_opt;
  auto* moments_cmd =
      app.add_subcommand("moments", "overlap moment estimates as JSON");
  add_common(moments_cmd, moments_opt);

  // --- decorrelation ----------------------------------------------------------
  CommonOptions decor_opt;
  int decor_i = 2, decor_j = 3;
  auto* decor_cmd =
      app.add_subcommand("decorrelation", "cross moment E[X_i X_j] as JSON");
  add_common(decor_cmd, decor_opt);
  decor_cmd->add_option("--i", decor_i, "first spectral index");
  decor_cmd->add_option("--j", decor_j, "second spectral index");

  // --- joint --------------------------------------------------------------
  CommonOptions joint_opt;
  int joint_k = 4, joint_m = 1, joint_projections = 50;
  auto* joint_cmd = app.add_subcommand(
      "joint", "joint covariance deviation and projection proxy as JSON");
  add_common(joint_cmd, joint_opt);
  joint_cmd->add_option("--K", joint_k, "eigenvector count (indices 2..K+1)");
  joint_cmd->add_option("--m", joint_m, "test vector count");
  joint_cmd->add_option("--projections", joint_projections, "projection count");

  // --- local-law ------------------------------------------------------------
  CommonOptions law_opt;
  int law_energies = 5, law_etas = 20;
  auto* law_cmd = app.add_subcommand(
      "local-law", "resolvent deviation profile over the edge window as CSV");
  add_common(law_cmd, law_opt, false);
  law_cmd->add_option("--energies", law_energies, "energy grid points");
  law_cmd->add_option("--etas", law_etas, "eta grid points");

  // --- spacing ----------------------------------------------------------------
  CommonOptions spacing_opt;
  int spacing_kmax = 40;
  auto* spacing_cmd =
      app.add_subcommand("spacing", "edge spacing profile as CSV");
  add_common(spacing_cmd, spacing_opt, false);
  spacing_cmd->add_option("--kmax", spacing_kmax, "largest spacing index");

  // --- ks ------------------------------------------------------------------
  CommonOptions ks_opt;
  auto* ks_cmd = app.add_subcommand(
      "ks", "Kolmogorov distance of the edge overlap to the standard normal");
  add_common(ks_cmd, ks_opt);

  // --- rate ------------------------------------------------------------------
  std::vector<std::string> rate_points;
  std::string rate_input, rate_out;
  auto* rate_cmd =
      app.add_subcommand("rate", "log-log power-law fit of (N, statistic) points");
  rate_cmd->add_option("--points", rate_points, "points as N:value");
  rate_cmd->add_option("--input", rate_input, "two-column CSV of N,value");
  rate_cmd->add_option("--out", rate_out, "output path (default stdout)");

  // --- constants -----------------------------------------------------------
  struct {
    int d = 3;
    double epsilon = 0.1;
    double n = 1e6;
    double prefactor = 1.0;
    bool worked_preset = false;
    std::string out;
  } const_opt;
  auto* const_cmd = app.add_subcommand(
      "constants", "evaluate the explicit constants and finite-size bounds");
  const_cmd->add_option("--d", const_opt.d, "degree");
  const_cmd->add_option("--epsilon", const_opt.epsilon, "epsilon");
  const_cmd->add_option("--N", const_opt.n, "size for the bound evaluation");
  const_cmd->add_option("--prefactor", const_opt.prefactor,
                        "absolute prefactor for the inequality-form constants");
  const_cmd->add_flag("--worked-preset", const_opt.worked_preset,
                      "use the worked-example prefactor (100)");
  const_cmd->add_option("--out", const_opt.out, "output path (default stdout)");

  // --- run -------------------------------------------------------------------
  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "full pipeline from a config file");
  run_cmd->add_option("--config", run_config, "flat key=value config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample_cmd) {
      const RegularGraph g =
          sample_regular_graph(sample_opt.n, sample_opt.d, sample_opt.seed);
      auto os = open_out(sample_opt.out);
      write_edge_list(out_stream(os), g);
    } else if (*evolve_cmd) {
      const CenteredMatrix h0 = [&] {
        if (!evolve_opt.in.empty()) {
          std::ifstream is(evolve_opt.in);
          if (!is) throw std::runtime_error("cannot open '" + evolve_opt.in + "'");
          return CenteredMatrix::fromSymmetric(read_matrix_dump(is));
        }
        return build_centered_adjacency(
            sample_regular_graph(evolve_opt.n, evolve_opt.d,
                                 split_seed(evolve_opt.seed, seed_tag::kGraph)));
      }();
      const double t = parse_time(evolve_opt.time, h0.dim(), evolve_opt.epsilon);
      CenteredMatrix evolved = [&] {
        if (t == 0.0) return h0;
        if (evolve_opt.path)
          return evolve_path(h0, t, evolve_opt.steps,
                             split_seed(evolve_opt.seed, seed_tag::kNoise),
                             evolve_opt.steps)
              .states.back();
        return evolve_exact(h0, t, split_seed(evolve_opt.seed, seed_tag::kNoise));
      }();
      auto os = open_out(evolve_opt.out);
      write_matrix_dump(out_stream(os), evolved.matrix());
    } else if (*overlaps_cmd) {
      for (int idx : overlap_indices)
        if (idx < 2) throw CLI::ValidationError("--indices", "indices must be >= 2");
      const auto meas = run_overlap_measurement(overlaps_opt, overlap_indices);
      const double t = parse_time(overlaps_opt.time, overlaps_opt.n, overlaps_opt.epsilon);
      auto os = open_out(overlaps_opt.out);
      CsvWriter csv(out_stream(os), "N,d,seed,t,index,test_vector_id,value");
      for (int r = 0; r < meas.rows.rows(); ++r)
        for (size_t k = 0; k < meas.indices.size(); ++k)
          csv.row({std::to_string(overlaps_opt.n), std::to_string(overlaps_opt.d),
                   std::to_string(meas.trial_seeds[r]), format_double(t),
                   std::to_string(meas.indices[k]), meas.test_vector_id,
                   format_double(meas.rows(r, k))});
    } else if (*moments_cmd) {
      const auto meas = run_overlap_measurement(moments_opt, {2});
      const auto col = meas.rows.col(0);
      const MomentEstimate est =
          estimate_moments_from_values({col.data(), size_t(col.size())});
      const std::uint64_t s0 = meas.trial_seeds.empty() ? 0 : meas.trial_seeds.front();
      const std::uint64_t s1 = meas.trial_seeds.empty() ? 0 : meas.trial_seeds.back();
      json arr = json::array(
          {summary_json("overlap_mean_x2", moments_opt.n, moments_opt.d,
                        moments_opt.epsilon, est.trials, est.mean, est.mean_se, s0, s1),
           summary_json("overlap_second_moment_x2", moments_opt.n, moments_opt.d,
                        moments_opt.epsilon, est.trials, est.second, est.second_se, s0, s1),
           summary_json("overlap_fourth_moment_x2", moments_opt.n, moments_opt.d,
                        moments_opt.epsilon, est.trials, est.fourth, est.fourth_se, s0, s1)});
      auto os = open_out(moments_opt.out);
      out_stream(os) << arr.dump(2) << '\n';
    } else if (*decor_cmd) {
      const auto meas = run_overlap_measurement(decor_opt, {decor_i, decor_j});
      const auto xi = meas.rows.col(0);
      const auto xj = meas.rows.col(1);
      const CorrelationEstimate est = estimate_decorrelation_from_values(
          {xi.data(), size_t(xi.size())}, {xj.data(), size_t(xj.size())});
      const std::uint64_t s0 = meas.trial_seeds.empty() ? 0 : meas.trial_seeds.front();
      const std::uint64_t s1 = meas.trial_seeds.empty() ? 0 : meas.trial_seeds.back();
      json arr = json::array({summary_json(
          "overlap_cross_moment_x" + std::to_string(decor_i) + "x" +
              std::to_string(decor_j),
          decor_opt.n, decor_opt.d, decor_opt.epsilon, est.trials, est.value,
          est.std_error, s0, s1)});
      auto os = open_out(decor_opt.out);
      out_stream(os) << arr.dump(2) << '\n';
    } else if (*joint_cmd) {
      std::vector<int> indices(joint_k);
      for (int i = 0; i < joint_k; ++i) indices[i] = i + 2;
      JointOverlapMatrix joint;
      joint.K = joint_k;
      joint.m = joint_m;
      std::vector<OverlapMeasurement> per_kind;
      for (int v = 0; v < joint_m; ++v) {
        CommonOptions o = joint_opt;
        OverlapRunParams params;
        params.n = o.n;
        params.d = o.d;
        params.t = parse_time(o.time, o.n, o.epsilon);
        params.kind = parse_kind(o.kind);
        params.vector_seed = v;
        params.indices = indices;
        params.trials = o.trials;
        params.base_seed = o.seed;
        params.workers = o.workers;
        per_kind.push_back(measure_overlaps(params));
      }
      std::vector<int> count(joint_opt.trials, 0);
      for (const auto& m : per_kind)
        for (int id : m.trial_ids) ++count[id];
      std::vector<int> common;
      for (int t = 0; t < joint_opt.trials; ++t)
        if (count[t] == joint_m) common.push_back(t);
      joint.rows.resize(common.size(), joint_k * joint_m);
      for (int v = 0; v < joint_m; ++v) {
        std::vector<int> row_of(joint_opt.trials, -1);
        for (size_t r = 0; r < per_kind[v].trial_ids.size(); ++r)
          row_of[per_kind[v].trial_ids[r]] = static_cast<int>(r);
        for (size_t c = 0; c < common.size(); ++c)
          joint.rows.block(c, v * joint_k, 1, joint_k) =
              per_kind[v].rows.row(row_of[common[c]]);
      }
      const JointCovariance cov = joint_covariance(joint);
      const double proxy =
          multivariate_gaussian_distance(joint, joint_projections, joint_opt.seed);
      json arr = json::array(
          {summary_json("joint_covariance_deviation", joint_opt.n, joint_opt.d,
                        joint_opt.epsilon, static_cast<int>(common.size()),
                        cov.deviation_from_identity, 0.0, 0, 0),
           summary_json("joint_projection_proxy", joint_opt.n, joint_opt.d,
                        joint_opt.epsilon, static_cast<int>(common.size()), proxy,
                        0.0, 0, 0)});
      auto os = open_out(joint_opt.out);
      out_stream(os) << arr.dump(2) << '\n';
    } else if (*law_cmd) {
      LocalLawRunParams params;
      params.n = law_opt.n;
      params.d = law_opt.d;
      params.epsilon = law_opt.epsilon;
      params.n_energies = law_energies;
      params.n_etas = law_etas;
      params.kind = parse_kind(law_opt.kind);
      params.trials = law_opt.trials;
      params.base_seed = law_opt.seed;
      params.workers = law_opt.workers;
      params.keep_tables = true;
      const LocalLawMeasurement meas = measure_local_law(params);
      auto os = open_out(law_opt.out);
      CsvWriter csv(out_stream(os), "N,d,seed,E,eta,deviation");
      for (size_t r = 0; r < meas.tables.size(); ++r)
        for (const auto& e : meas.tables[r])
          csv.row({std::to_string(law_opt.n), std::to_string(law_opt.d),
                   std::to_string(meas.trial_seeds[r]), format_double(e.energy),
                   format_double(e.eta), format_double(e.deviation)});
    } else if (*spacing_cmd) {
      SpectrumRunParams params;
      params.n = spacing_opt.n;
      params.d = spacing_opt.d;
      params.trials = spacing_opt.trials;
      params.base_seed = spacing_opt.seed;
      params.workers = spacing_opt.workers;
      const SpectrumMeasurement meas = measure_spectra(params);
      const int k_max = std::min(spacing_kmax, spacing_opt.n / 10);
      auto os = open_out(spacing_opt.out);
      CsvWriter csv(out_stream(os), "N,d,seed,k,edge_distance");
      for (size_t r = 0; r < meas.spectra.size(); ++r)
        for (int k = 1; k <= k_max; ++k)
          csv.row({std::to_string(spacing_opt.n), std::to_string(spacing_opt.d),
                   std::to_string(meas.trial_seeds[r]), std::to_string(k),
                   format_double(2.0 - meas.spectra[r](k - 1))});
    } else if (*ks_cmd) {
      const auto meas = run_overlap_measurement(ks_opt, {2});
      const auto col = meas.rows.col(0);
      std::vector<double> x(col.data(), col.data() + col.size());
      const double ks = ks_distance_to_normal(make_ecdf(std::move(x)));
      const std::uint64_t s0 = meas.trial_seeds.empty() ? 0 : meas.trial_seeds.front();
      const std::uint64_t s1 = meas.trial_seeds.empty() ? 0 : meas.trial_seeds.back();
      json arr = json::array({summary_json(
          "ks_distance_x2", ks_opt.n, ks_opt.d, ks_opt.epsilon,
          static_cast<int>(meas.rows.rows()), ks, 0.0, s0, s1)});
      auto os = open_out(ks_opt.out);
      out_stream(os) << arr.dump(2) << '\n';
    } else if (*rate_cmd) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& group : rate_points) {
        std::istringstream gs(group);
        std::string token;
        while (std::getline(gs, token, ',')) {
          if (token.empty()) continue;
          const auto colon = token.find(':');
          if (colon == std::string::npos)
            throw CLI::ValidationError("--points", "expected N:value");
          pts.emplace_back(std::stod(token.substr(0, colon)),
                           std::stod(token.substr(colon + 1)));
        }
      }
      if (!rate_input.empty()) {
        std::ifstream is(rate_input);
        if (!is) throw std::runtime_error("cannot open '" + rate_input + "'");
        std::string line;
        while (std::getline(is, line)) {
          std::istringstream ls(line);
          double a = 0, b = 0;
          char comma = 0;
          if (ls >> a >> comma >> b) pts.emplace_back(a, b);
        }
      }
      const RateFit fit = fit_rate(pts);
      json j{{"exponent", fit.exponent},
             {"intercept", fit.intercept},
             {"residual", fit.residual},
             {"points", pts.size()}};
      auto os = open_out(rate_out);
      out_stream(os) << j.dump(2) << '\n';
    } else if (*const_cmd) {
      const double prefactor =
          const_opt.worked_preset ? kWorkedExamplePrefactor : const_opt.prefactor;
      json j;
      std::ostringstream table;
      table << "constant        value                description\n";
      for (const auto& spec : constant_table()) {
        const double value =
            evaluate_constant(spec.name, const_opt.d, const_opt.epsilon, prefactor);
        j[spec.name] = value;
        table << spec.name;
        for (size_t pad = spec.name.size(); pad < 16; ++pad) table << ' ';
        std::ostringstream num;
        num.precision(6);
        num << value;
        table << num.str();
        for (size_t pad = num.str().size(); pad < 21; ++pad) table << ' ';
        table << spec.description;
        if (spec.has_prefactor) table << " (prefactor " << prefactor << ")";
        table << '\n';
      }
      const BerryEsseenBound smooth = berry_esseen_bound(
          const_opt.n, const_opt.d, const_opt.epsilon, prefactor, RateKind::kSmooth);
      const BerryEsseenBound indicator =
          berry_esseen_bound(const_opt.n, const_opt.d, const_opt.epsilon, prefactor,
                             RateKind::kIndicator);
      j["n"] = const_opt.n;
      j["d"] = const_opt.d;
      j["epsilon"] = const_opt.epsilon;
      j["prefactor"] = prefactor;
      j["n_factor_smooth"] = smooth.n_factor;
      j["n_factor_indicator"] = indicator.n_factor;
      j["bound_smooth"] = smooth.bound;
      j["bound_indicator"] = indicator.bound;
      table << "\nN = " << const_opt.n << ":\n";
      table << "  N-factor (smooth rate)    " << smooth.n_factor << '\n';
      table << "  N-factor (indicator rate) " << indicator.n_factor << '\n';
      table << "  bound (smooth rate)       " << smooth.bound << '\n';
      auto os = open_out(const_opt.out);
      out_stream(os) << table.str() << '\n' << j.dump(2) << '\n';
    } else if (*run_cmd) {
      ExperimentConfig config = parse_config_file(run_config);
      const ExperimentRecord record = run_experiment(config);
      std::cerr << "run " << record.config_hash_hex << " finished in "
                << record.wall_seconds << " s, " << record.files_written.size()
                << " files, " << record.excluded_trials << " excluded trials\n";
      std::cout << record.config_hash_hex << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
