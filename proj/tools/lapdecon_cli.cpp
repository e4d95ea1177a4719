// lapdecon command-line tool. Every subcommand writes CSV; see README.md.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lapdecon/csv.hpp"
#include "lapdecon/deriv_kernels.hpp"
#include "lapdecon/lrd_noise.hpp"
#include "lapdecon/study.hpp"

namespace {

using namespace lapdecon;

void emit(const CsvTable& table, const std::string& out) {
  if (out.empty() || out == "-") std::cout << table.str();
  else table.write(out);
}

void kernels_check(int l_max, const std::string& out) {
  if (l_max < 1) throw ConfigError("--Lmax must be >= 1");
  CsvTable t({"L", "j", "l", "moment", "target", "abs_error"});
  t.meta("lapdecon", LAPDECON_VERSION);
  t.meta("tolerance", format_number(kMomentTolerance));
  for (const auto& r : moment_conformance(l_max)) t.row({r.L, r.j, r.l, r.moment, r.target, r.abs_error});
  emit(t, out);
}

void noise_eigs(double alpha, const std::vector<int>& n_list, const std::string& out) {
  const auto env = eigen_envelope(NoiseModel::fgn(alpha, 1.0), n_list);
  CsvTable t({"n", "lambda_min", "lambda_max", "fitted_slope"});
  t.meta("lapdecon", LAPDECON_VERSION);
  t.meta("alpha", format_number(alpha));
  t.meta("expected_slope", format_number(1.0 - alpha));
  for (const auto& r : env.rows)
    t.row({r.n, r.lambda_min, r.lambda_max, env.slope ? Cell(env.slope->slope) : Cell("NA")});
  emit(t, out);
}

StudyConfig single_run_config(const std::string& path) {
  StudyConfig cfg = StudyConfig::load(path);
  if (cfg.n_list.size() != 1 || cfg.alphas.size() != 1)
    throw ConfigError("this subcommand needs a single design.n and a single noise.alpha");
  return cfg;
}

void simulate_cmd(const std::string& config, std::uint64_t seed, const std::string& out) {
  const StudyConfig cfg = single_run_config(config);
  const ExperimentDesign design = cfg.designs().front();
  const TruthSpec truth = cfg.truth_spec();
  const RationalLaplaceKernel g = cfg.kernel();
  const std::vector<double> q = forward_convolve(g, [&](double t) { return truth(t); }, design, cfg.refinement);
  const std::vector<double> y = observe(q, NoiseSampler(cfg.noise(cfg.alphas.front()), design.n), seed);
  CsvTable t({"i", "t", "y", "q", "f"});
  stamp(t, cfg, seed);
  for (int i = 1; i <= design.n; ++i)
    t.row({i, design.time(i), y[static_cast<std::size_t>(i - 1)], q[static_cast<std::size_t>(i)], truth(design.time(i))});
  emit(t, out);
}

void estimate_cmd(const std::string& config, std::uint64_t seed, const std::filesystem::path& dir) {
  const StudyConfig cfg = single_run_config(config);
  const Problem problem = cfg.problem();
  const ExperimentDesign design = cfg.designs().front();
  const NoiseModel noise = cfg.noise(cfg.alphas.front());
  const DesignData data = prepare_design(problem, design, cfg.refinement);
  const std::vector<double> y = observe(data.q, NoiseSampler(noise, design.n), seed);
  LepskiConfig lepski = cfg.lepski;
  lepski.sigma = noise.sigma;
  lepski.alpha = noise.alpha;
  const EstimateResult est = estimate_f(y, problem.g, problem.coeffs, problem.kernels, lepski, design,
                                        cfg.policy.bandwidths(problem, design, noise.alpha));
  std::filesystem::create_directories(dir);

  std::vector<std::string> header{"t", "f_hat", "f"};
  for (int j = 0; j <= problem.r(); ++j) {
    header.push_back("q_hat_" + std::to_string(j));
    header.push_back("q_" + std::to_string(j));
  }
  CsvTable fit(header);
  stamp(fit, cfg, seed);
  std::string lambdas;
  for (double l : est.lambda_hat) lambdas += (lambdas.empty() ? "" : " ") + format_number(l);
  fit.meta("lambda_hat", lambdas);
  const Window w = interior_window(design, cfg.policy.boundary_band(problem, design, noise.alpha));
  fit.meta("ise_interior", format_number(l2_diff_sq(est.f_hat, data.f, design, w)));
  fit.meta("ise_full", format_number(l2_diff_sq(est.f_hat, data.f, design)));
  for (int i = 0; i <= design.n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    std::vector<Cell> cells{design.time(i), est.f_hat[k], data.f[k]};
    for (int j = 0; j <= problem.r(); ++j) {
      cells.emplace_back(est.q_hat[static_cast<std::size_t>(j)][k]);
      cells.emplace_back(data.q_derivs[static_cast<std::size_t>(j)][k]);
    }
    fit.row(cells);
  }
  fit.write((dir / "estimate.csv").string());

  CsvTable diag({"j", "lambda", "lambda_prime", "stat", "threshold", "accepted"});
  stamp(diag, cfg, seed);
  for (std::size_t j = 0; j < est.diagnostics.size(); ++j)
    for (const auto& c : est.diagnostics[j])
      diag.row({static_cast<int>(j), c.lambda, c.lambda_prime, c.stat, c.threshold, c.accepted});
  diag.write((dir / "diagnostics.csv").string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Laplace deconvolution with long-memory noise"};
  app.set_version_flag("--version", std::string(LAPDECON_VERSION));
  app.require_subcommand(1);

  auto* kernels = app.add_subcommand("kernels", "Derivative kernels");
  kernels->require_subcommand(1);
  auto* check = kernels->add_subcommand("check", "Moment-condition conformance table");
  int l_max = 8;
  std::string check_out;
  check->add_option("--Lmax", l_max, "Largest kernel order")->capture_default_str();
  check->add_option("--out", check_out, "Output file (default stdout)");

  auto* noise = app.add_subcommand("noise", "Error processes");
  noise->require_subcommand(1);
  auto* eigs = noise->add_subcommand("eigs", "Extreme covariance eigenvalues of fGn");
  double alpha = 0.5;
  std::vector<int> n_list;
  std::string eigs_out;
  eigs->add_option("--alpha", alpha, "Memory parameter in (0, 1]")->required();
  eigs->add_option("--n", n_list, "Sample sizes")->required()->delimiter(',');
  eigs->add_option("--out", eigs_out, "Output file (default stdout)");

  std::string config;
  std::uint64_t seed = 1;
  std::string out;

  auto* simulate = app.add_subcommand("simulate", "Simulate one observation vector");
  simulate->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", seed, "Seed")->required();
  simulate->add_option("--out", out, "Output CSV file")->required();

  auto* estimate = app.add_subcommand("estimate", "Simulate and estimate f once");
  estimate->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  estimate->add_option("--seed", seed, "Seed")->required();
  estimate->add_option("--out", out, "Output directory")->required();

  auto* rate = app.add_subcommand("rate-study", "Monte Carlo risk and rate exponents");
  rate->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  rate->add_option("--out", out, "Output directory")->required();

  auto* lepski = app.add_subcommand("lepski-study", "Pure-noise exceedance frequencies");
  lepski->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  lepski->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) kernels_check(l_max, check_out);
    else if (*eigs) noise_eigs(alpha, n_list, eigs_out);
    else if (*simulate) simulate_cmd(config, seed, out);
    else if (*estimate) estimate_cmd(config, seed, out);
    else if (*rate) {
      const StudyConfig cfg = StudyConfig::load(config);
      for (double a : cfg.alphas)
        for (const auto& d : cfg.designs())
          for (const auto& w : d.warnings(a)) std::cerr << "warning: n=" << d.n << " alpha=" << a << ": " << w << "\n";
      write_rate_study(rate_study(cfg), cfg, out);
    } else if (*lepski) {
      const StudyConfig cfg = StudyConfig::load(config);
      write_tail_study(tail_study(cfg), cfg, out);
    }
  } catch (const lapdecon::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
