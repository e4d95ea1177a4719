#pragma once

// Configuration-driven studies shared by the command-line tool and the
// acceptance suite.
//
// Keys (defaults in parentheses):
//   g.numer, g.denom          transform coefficients, ascending powers of s
//   truth (KINK_1)            ZERO, CONST, SMOOTH or KINK_<m>
//   truth.m (3)               nominal smoothness of SMOOTH
//   design.T (8)              horizon
//   design.n                  sample sizes
//   design.refinement (8)     sub-grid factor of the forward quadrature
//   noise.kind (fgn)          iid or fgn
//   noise.alpha (1)           memory parameters, one study per value
//   noise.sigma (1)
//   kernels.L (r + 2)
//   lepski.a (2), lepski.gamma_sq_factor (4)
//   lepski.j (0)              derivative order of the tail study
//   policy (lepski)           lepski, fixed or oracle
//   policy.bandwidths         fixed bandwidths: one value or one per j
//   policy.oracle_c (1)
//   study.R (50), study.seed (1), study.threads (0 = all cores)
//   study.mono_n (largest n)  sample size of the alpha-monotonicity table
//   study.decomposition (0)   1 = also report R1..R3 (fixed/oracle policy)
//   study.fixed_search (0)    1 = also compare Lepski with the best fixed
//                             grid bandwidths

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "lapdecon/config.hpp"
#include "lapdecon/csv.hpp"
#include "lapdecon/harness.hpp"

namespace lapdecon {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "g.numer",      "g.denom",     "truth",          "truth.m",          "design.T",     "design.n",
      "design.refinement", "noise.kind", "noise.alpha", "noise.sigma",     "kernels.L",    "lepski.a",
      "lepski.gamma_sq_factor", "lepski.j", "policy",   "policy.bandwidths", "policy.oracle_c", "study.R",
      "study.seed",   "study.threads", "study.mono_n", "study.decomposition", "study.fixed_search"};
  return keys;
}

struct StudyConfig {
  Config raw;
  std::vector<double> numer;
  std::vector<double> denom;
  std::string truth = "KINK_1";
  int truth_m = 3;
  double horizon = 8.0;
  std::vector<int> n_list;
  int refinement = kDefaultRefinement;
  NoiseKind noise_kind = NoiseKind::FGN;
  std::vector<double> alphas{1.0};
  double sigma = 1.0;
  int L = 0;
  LepskiConfig lepski;
  int tail_j = 0;
  BandwidthPolicy policy;
  StudyOptions options;
  int mono_n = 0;
  bool decomposition = false;
  bool fixed_search = false;

  static StudyConfig from(const Config& cfg) {
    cfg.require_known(known_config_keys());
    StudyConfig s;
    s.raw = cfg;
    s.numer = cfg.get_list("g.numer");
    s.denom = cfg.get_list("g.denom");
    s.truth = cfg.get_string("truth", std::string("KINK_1"));
    s.truth_m = cfg.get_int("truth.m", 3);
    s.horizon = cfg.get_double("design.T", 8.0);
    s.n_list = cfg.get_int_list("design.n");
    for (int n : s.n_list)
      if (n < 2) throw ConfigError("config: design.n values must be >= 2");
    s.refinement = cfg.get_int("design.refinement", kDefaultRefinement);
    const std::string kind = cfg.get_string("noise.kind", std::string("fgn"));
    if (kind == "iid") s.noise_kind = NoiseKind::IID;
    else if (kind == "fgn") s.noise_kind = NoiseKind::FGN;
    else throw ConfigError("config: noise.kind must be iid or fgn");
    s.alphas = cfg.get_list("noise.alpha", std::vector<double>{1.0});
    if (s.noise_kind == NoiseKind::IID)
      for (double a : s.alphas)
        if (a != 1.0) throw ConfigError("config: iid noise requires noise.alpha = 1");
    s.sigma = cfg.get_double("noise.sigma", 1.0);
    s.L = cfg.get_int("kernels.L", 0);
    s.lepski.a = cfg.get_double("lepski.a", 2.0);
    s.lepski.gamma_sq_factor = cfg.get_double("lepski.gamma_sq_factor", 4.0);
    s.lepski.validate();
    s.tail_j = cfg.get_int("lepski.j", 0);
    const std::string policy = cfg.get_string("policy", std::string("lepski"));
    if (policy == "lepski") {
      s.policy = BandwidthPolicy::lepski();
    } else if (policy == "fixed") {
      s.policy = BandwidthPolicy::with_bandwidths(cfg.get_list("policy.bandwidths"));
    } else if (policy == "oracle") {
      s.policy = BandwidthPolicy::oracle(cfg.get_double("policy.oracle_c", 1.0));
    } else {
      throw ConfigError("config: policy must be lepski, fixed or oracle");
    }
    s.options.replicates = cfg.get_int("study.R", 50);
    const double seed = cfg.get_double("study.seed", 1.0);
    if (seed < 0 || seed != static_cast<double>(static_cast<std::uint64_t>(seed)))
      throw ConfigError("config: study.seed must be a nonnegative integer");
    s.options.seed = static_cast<std::uint64_t>(seed);
    s.options.threads = static_cast<unsigned>(std::max(0, cfg.get_int("study.threads", 0)));
    s.options.refinement = s.refinement;
    s.mono_n = cfg.get_int("study.mono_n", *std::max_element(s.n_list.begin(), s.n_list.end()));
    s.decomposition = cfg.get_int("study.decomposition", 0) != 0;
    s.fixed_search = cfg.get_int("study.fixed_search", 0) != 0;
    return s;
  }

  static StudyConfig load(const std::string& path) { return from(Config::load(path)); }

  RationalLaplaceKernel kernel() const { return {numer, denom}; }
  TruthSpec truth_spec() const { return make_truth(truth, horizon, truth_m); }
  Problem problem() const { return Problem(kernel(), truth_spec(), L); }
  NoiseModel noise(double alpha) const { return {noise_kind, alpha, sigma}; }

  std::vector<ExperimentDesign> designs() const {
    std::vector<ExperimentDesign> out;
    for (int n : n_list) out.emplace_back(n, horizon);
    return out;
  }
};

/// Metadata block written at the top of every CSV file.
inline void stamp(CsvTable& table, const StudyConfig& cfg, std::uint64_t seed) {
  table.meta("lapdecon", LAPDECON_VERSION);
  table.meta("seed", std::to_string(seed));
  table.meta("rng", std::string(kRngAlgorithm));
  table.meta("config_hash", cfg.raw.hash());
}

// ---------------------------------------------------------------------------
// Rate study

struct MonotonicityRow {
  int n = 0;
  double alpha = 0.0;
  double mean_ise = 0.0;
  double se = 0.0;
  /// Mean and standard error of ISE(this alpha) - ISE(previous, smaller alpha),
  /// paired by replicate (cells share the underlying normal draws).
  double diff = 0.0;
  double diff_se = 0.0;
  /// diff <= 2 * diff_se; always true for the smallest alpha.
  bool nonincreasing = true;
};

struct RateStudyResult {
  std::vector<RiskReport> reports;
  std::vector<MonotonicityRow> monotonicity;
  /// Per (alpha, n) when requested.
  std::vector<std::pair<double, std::pair<int, RiskDecomposition>>> decompositions;
  /// Per (alpha, n) when requested.
  std::vector<std::pair<double, FixedSearchResult>> fixed_search;
};

/// Pairs risk cells across ascending alpha at one sample size.
inline std::vector<MonotonicityRow> monotonicity_table(const std::vector<std::pair<double, RiskRow>>& cells) {
  std::vector<std::pair<double, RiskRow>> sorted = cells;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<MonotonicityRow> out;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const RiskRow& row = sorted[k].second;
    MonotonicityRow m{row.n, sorted[k].first, row.mean_ise, row.se, 0.0, 0.0, true};
    if (k > 0) {
      const RiskRow& prev = sorted[k - 1].second;
      std::vector<double> d;
      for (std::size_t r = 0; r < std::min(row.ise_samples.size(), prev.ise_samples.size()); ++r)
        d.push_back(row.ise_samples[r] - prev.ise_samples[r]);
      const MeanSe ms = mean_and_se(d);
      m.diff = ms.mean;
      m.diff_se = ms.se;
      m.nonincreasing = ms.mean <= 2.0 * ms.se;
    }
    out.push_back(m);
  }
  return out;
}

inline RateStudyResult rate_study(const StudyConfig& cfg) {
  const Problem problem = cfg.problem();
  RateStudyResult res;
  std::vector<std::pair<double, RiskRow>> mono_cells;
  for (double alpha : cfg.alphas) {
    const NoiseModel noise = cfg.noise(alpha);
    RiskReport report = mc_risk(problem, cfg.designs(), noise, cfg.policy, cfg.lepski, cfg.options);
    bool have_mono = false;
    for (const auto& row : report.per_n)
      if (row.n == cfg.mono_n) {
        mono_cells.emplace_back(alpha, row);
        have_mono = true;
      }
    if (!have_mono) {
      const DesignData data = prepare_design(problem, ExperimentDesign(cfg.mono_n, cfg.horizon), cfg.refinement);
      mono_cells.emplace_back(alpha, risk_cell(problem, data, noise, cfg.policy, cfg.lepski, cfg.options));
    }
    if (cfg.decomposition && cfg.policy.kind != PolicyKind::Lepski)
      for (const auto& design : cfg.designs()) {
        const auto bw = *cfg.policy.bandwidths(problem, design, alpha);
        res.decompositions.push_back({alpha, {design.n, risk_decomposition(problem, design, noise, bw, cfg.options)}});
      }
    if (cfg.fixed_search)
      for (const auto& design : cfg.designs())
        res.fixed_search.emplace_back(
            alpha, fixed_bandwidth_search(problem, prepare_design(problem, design, cfg.refinement), noise, cfg.lepski,
                                          cfg.options));
    res.reports.push_back(std::move(report));
  }
  res.monotonicity = monotonicity_table(mono_cells);
  return res;
}

inline void write_rate_study(const RateStudyResult& res, const StudyConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Problem problem = cfg.problem();
  const int r = problem.r();

  std::vector<std::string> header{"alpha", "n", "replicates", "mean_ise", "se", "mean_ise_full", "se_full"};
  for (int j = 0; j <= r; ++j) header.push_back("mean_lambda_" + std::to_string(j));
  CsvTable risk(header);
  stamp(risk, cfg, cfg.options.seed);
  risk.meta("truth", cfg.truth);
  risk.meta("policy", to_string(cfg.policy.kind));
  risk.meta("note", "mean_ise excludes boundary bands; fixed truth, so a lower envelope of the worst-case risk");
  for (const auto& rep : res.reports)
    for (const auto& row : rep.per_n) {
      std::vector<Cell> cells{rep.alpha, row.n, row.replicates, row.mean_ise, row.se, row.mean_ise_full, row.se_full};
      for (double l : row.mean_lambda) cells.emplace_back(l);
      risk.row(cells);
    }
  risk.write((dir / "risk.csv").string());

  CsvTable exps({"alpha", "m", "r", "fitted_exponent", "fitted_se", "theoretical_exponent", "sizes", "replicates"});
  stamp(exps, cfg, cfg.options.seed);
  for (const auto& rep : res.reports) {
    const bool fitted = rep.fit.has_value();
    exps.row({rep.alpha, problem.truth.m, r, fitted ? Cell(rep.fit->slope) : Cell("NA"),
              fitted ? Cell(rep.fit->slope_se) : Cell("NA"), rep.theoretical_exponent, rep.per_n.size(),
              cfg.options.replicates});
  }
  exps.write((dir / "exponents.csv").string());

  CsvTable mono({"n", "alpha", "mean_ise", "se", "diff_from_previous", "diff_se", "nonincreasing"});
  stamp(mono, cfg, cfg.options.seed);
  for (const auto& m : res.monotonicity) mono.row({m.n, m.alpha, m.mean_ise, m.se, m.diff, m.diff_se, m.nonincreasing});
  mono.write((dir / "monotonicity.csv").string());

  if (!res.decompositions.empty()) {
    CsvTable dec({"alpha", "n", "r1", "r2", "r3", "total", "total_se", "bound", "holds"});
    stamp(dec, cfg, cfg.options.seed);
    for (const auto& [alpha, cell] : res.decompositions) {
      const auto& d = cell.second;
      dec.row({alpha, cell.first, d.r1, d.r2, d.r3, d.total, d.total_se, d.bound, d.holds});
    }
    dec.write((dir / "decomposition.csv").string());
  }

  if (!res.fixed_search.empty()) {
    std::vector<std::string> h{"alpha", "n", "replicates", "lepski_median_ise", "best_fixed_median_ise", "ratio",
                               "combinations"};
    for (int j = 0; j <= r; ++j) h.push_back("best_lambda_" + std::to_string(j));
    CsvTable fs(h);
    stamp(fs, cfg, cfg.options.seed);
    for (const auto& [alpha, f] : res.fixed_search) {
      std::vector<Cell> cells{alpha, f.n, f.replicates, f.lepski_median, f.best_median,
                              f.lepski_median / f.best_median, f.combinations};
      for (double l : f.best_bandwidths) cells.emplace_back(l);
      fs.row(cells);
    }
    fs.write((dir / "fixed_search.csv").string());
  }
}

// ---------------------------------------------------------------------------
// Lepski tail study

inline std::vector<std::pair<double, std::vector<TailRow>>> tail_study(const StudyConfig& cfg) {
  std::vector<std::pair<double, std::vector<TailRow>>> out;
  const RationalLaplaceKernel g = cfg.kernel();
  for (double alpha : cfg.alphas)
    out.emplace_back(alpha, lepski_tail_study(g, cfg.designs(), cfg.noise(alpha), cfg.tail_j, cfg.truth_spec().m,
                                              cfg.lepski, cfg.options, cfg.L));
  return out;
}

inline void write_tail_study(const std::vector<std::pair<double, std::vector<TailRow>>>& res, const StudyConfig& cfg,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  CsvTable tail({"alpha", "n", "j", "lambda", "lambda_o", "lower_limit", "exceed", "replicates", "frequency"});
  stamp(tail, cfg, cfg.options.seed);
  tail.meta("note", "pure-noise data; frequency of ||q_lambda - q_lambda_o||^2 > gamma^2 rho^2_lambda");
  for (const auto& [alpha, rows] : res)
    for (const auto& t : rows)
      tail.row({alpha, t.n, t.j, t.lambda, t.lambda_o, t.lower_limit, t.exceed, t.replicates, t.frequency});
  tail.write((dir / "tail.csv").string());
}

}  // namespace lapdecon
