// command line front end: solves, assemblies, and verification suites
#include <sys/stat.h>

#include <chrono>
#include <iostream>

#include "CLI11.hpp"
#include "pekar/audits.hpp"
#include "pekar/fock_toy.hpp"
#include "pekar/gaussian_gas.hpp"
#include "pekar/measures.hpp"
#include "pekar/report.hpp"

using namespace pekar;

namespace {

constexpr const char* kVersion = "pekarlab 1.0";

struct Session {
  Config cfg;
  std::string out_dir;
  uint64_t seed = 1;

  std::string out_path(const std::string& name) const { return out_dir + "/" + name; }

  RunReport new_report(const std::string& command) const {
    RunReport rep;
    rep.command = command;
    rep.artifact_version = kVersion;
    rep.config_hash = hex64(fnv1a(cfg.canonical_dump()));
    auto now = std::chrono::system_clock::now();
    rep.timestamp = std::to_string(
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
    return rep;
  }

  PekarSolution solution(bool tall) const {
    std::string cache = out_path(tall ? "pekar_tall.solution" : "pekar.solution");
    struct stat st;
    if (::stat(cache.c_str(), &st) == 0) {
      try {
        return PekarSolution::load(cache);
      } catch (const ComputeError&) {
        // fall through to a fresh solve
      }
    }
    CacheLock lock(out_dir);
    auto grid = tall ? make_grid(cfg.get_double("tall.r_max"), cfg.get_int("tall.n"))
                     : make_grid(cfg.get_double("grid.r_max"), cfg.get_int("grid.n"));
    PekarSolution sol = solve_pekar(grid, cfg.get_double("tol"), cfg.get_double("mixing"));
    sol.save(cache);
    return sol;
  }
};

void finish(Session& s, RunReport& rep, const std::string& file,
            std::chrono::steady_clock::time_point t0) {
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.write_json(s.out_path(file), s.cfg);
  for (const auto& c : rep.checks)
    std::cout << (c.pass ? "[pass] " : "[FAIL] ") << c.name << "\n";
  if (!rep.all_pass()) std::exit(3);
}

// ---- suite bodies -------------------------------------------------------------

void suite_cutoff(Session& s, RunReport& rep) {
  GapSweepReport gap = norm_gap_experiment({2.0, 4.0}, {0.05, 0.08, 0.125, 0.2, 0.32, 0.5},
                                           {0.0, 0.25, 0.5, 1.0, 2.0},
                                           s.out_path("gap_sweep.csv"));
  rep.checks.push_back({"cutoff gap ~ sqrt(l) at matched centers",
                        std::abs(gap.ell_fit.slope - 0.5) <= 0.1 && gap.ell_fit.r2 >= 0.95,
                        "{\"slope\":" + std::to_string(gap.ell_fit.slope) + "}"});
  rep.checks.push_back({"cutoff gap ~ displacement",
                        std::abs(gap.dist_fit.slope - 1.0) <= 0.2 && gap.dist_fit.r2 >= 0.95,
                        "{\"slope\":" + std::to_string(gap.dist_fit.slope) + "}"});
  rep.checks.push_back({"one envelope constant across the sweep",
                        gap.bound_constant > 0 && gap.bound_constant < 5.0,
                        "{\"constant\":" + std::to_string(gap.bound_constant) + "}"});
  std::vector<double> rs = {1.0, 2.5, 6.3, 16.0, 40.0};
  std::vector<double> tails;
  for (double r : rs) tails.push_back(projected_w_tail(5.0, r));
  LineFit tail_fit = fit_power(rs, tails);
  rep.checks.push_back({"projected interaction tail ~ r^{-1/2}",
                        std::abs(tail_fit.slope + 0.5) <= 0.1 && tail_fit.r2 >= 0.95,
                        "{\"slope\":" + std::to_string(tail_fit.slope) + "}"});
  CubeBasis b(2.6, 0.28, {0, 0, 0});
  auto hs = exterior_hs_profile(b, {4.0, 6.0, 10.0, 16.0, 26.0, 42.0});
  LineFit far_fit = fit_power({4.0, 6.0, 10.0, 16.0, 26.0, 42.0}, hs);
  rep.checks.push_back({"exterior test operators ~ r^{-1/2}",
                        std::abs(far_fit.slope + 0.5) <= 0.1 && far_fit.r2 >= 0.95,
                        "{\"slope\":" + std::to_string(far_fit.slope) + "}"});
}

void suite_median(Session& s, RunReport& rep) {
  MedianAuditConfig mc;
  mc.trials = s.cfg.get_int("trials");
  mc.q = s.cfg.get_double("q");
  mc.seed = s.seed;
  MedianAuditReport m = median_stability_audit(mc);
  rep.metrics["median_max_ratio"] = m.max_ratio_median;
  rep.checks.push_back({"median stability under single spikes",
                        m.violations_median == 0 && m.trials_run >= mc.trials * 9 / 10, ""});
  rep.checks.push_back({"quantile shift bounded by total variation",
                        m.violations_quantile == 0, ""});
  rep.checks.push_back({"spiked quantiles stay confined", m.violations_confine == 0, ""});
  rep.checks.push_back({"no trial flagged for review", m.flagged_for_review == 0, ""});
}

void suite_gaussian(Session& s, RunReport& rep) {
  GaussianDiagonal d = mehler_density(8, 2.0, 0.3, 0.1);
  int bound_ok = 0, n_queries = 4;
  for (uint64_t k = 0; k < static_cast<uint64_t>(n_queries); ++k) {
    Rng rng(s.seed + 11 * k + 3);
    DMat A(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) A(i, j) = rng.uniform(-1, 1);
    DMat G = 0.5 * (A * A.transpose()) / 8;
    Eigen::SelfAdjointEigenSolver<DMat> es(G);
    double edge = d.w / std::pow(es.eigenvalues().maxCoeff(), 2);
    TailQuery q{G, 0.35};
    double bound = gaussian_tail(q, d, 0.6 * edge);
    auto [mc, sigma] = gaussian_tail_mc(q, d, 300000, s.seed * 7 + k);
    if (bound >= mc - 3 * sigma) ++bound_ok;
  }
  rep.checks.push_back({"closed-form tail bound dominates the sampler",
                        bound_ok == n_queries, ""});
  CondensationTailConfig cc;
  cc.seed = s.seed;
  cc.trials = std::max(10000, s.cfg.get_int("trials") * 10);
  CondensationTailReport r = condensation_tail_experiment(cc);
  rep.metrics["tail_slope"] = r.fit_euclid.slope;
  rep.metrics["tail_r2"] = r.fit_euclid.r2;
  rep.checks.push_back({"condensed tails decay exponentially in alpha^2",
                        r.fit_euclid.slope < 0 && r.fit_euclid.r2 >= 0.95, ""});
}

void suite_fock(Session& s, RunReport& rep) {
  std::vector<Vec3> sites = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  ToyFockSpace fock(sites, 4, 2.0);
  double eps = 1.0 / 4.0;
  double worst_ccr = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CMat comm = fock.a(i) * fock.a_dagger(j) - fock.a_dagger(j) * fock.a(i);
      for (int p = 0; p < fock.dim(); ++p) {
        if (fock.total_occupation(p) > fock.n_max() - 1) continue;
        for (int q = 0; q < fock.dim(); ++q) {
          if (fock.total_occupation(q) > fock.n_max() - 1) continue;
          std::complex<double> want = (p == q && i == j) ? eps : 0.0;
          worst_ccr = std::max(worst_ccr, std::abs(comm(p, q) - want));
        }
      }
    }
  rep.metrics["ccr_defect"] = worst_ccr;
  rep.checks.push_back({"rescaled commutators on retained sectors", worst_ccr <= 1e-12, ""});
  Rng rng(s.seed);
  CMat f1(3, 3), f2(9, 9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) f1(i, j) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) f2(i, j) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  double d1 = wick_reorder_defect(fock, 1, f1);
  double d2 = wick_reorder_defect(fock, 2, f2);
  rep.metrics["wick_defect_m1"] = d1;
  rep.metrics["wick_defect_m2"] = d2;
  rep.checks.push_back({"operator reordering identities", d1 <= 1e-12 && d2 <= 1e-12, ""});
  DVec nvec = fock.f_hat_diagonal([](const PointMeasure& m) { return m.total_mass(); });
  CMat N = fock.number_operator();
  double worst_n = 0.0;
  for (int p = 0; p < fock.dim(); ++p) worst_n = std::max(worst_n, std::abs(N(p, p).real() - nvec[p]));
  rep.checks.push_back({"number operator equals the total-mass multiplier", worst_n <= 1e-12, ""});
}

void suite_quadratic(Session& s, RunReport& rep, bool coercivity_only) {
  PekarSolution sol = s.solution(true);
  HessianSpectrum spec = assemble_KL(sol, s.cfg.get_int("hessian.l_max"),
                                     s.cfg.get_int("hessian.M"));
  QuadraticAuditConfig qc;
  qc.lambda = s.cfg.get_double("basis.lambda");
  qc.ell = s.cfg.get_double("basis.ell");
  qc.samples = s.cfg.get_int("samples");
  qc.seed = s.seed;
  qc.csv_path = s.out_path("quadratic_audit.csv");
  QuadraticAuditReport r = quadratic_bound_audit(qc, sol, spec);
  rep.metrics["c52"] = r.c52;
  rep.metrics["floor52"] = r.floor52;
  rep.metrics["C54"] = r.C54;
  rep.metrics["Ccoer"] = r.Ccoer;
  rep.metrics["delta0"] = r.delta0_first_failure;
  if (!coercivity_only) {
    rep.checks.push_back({"quadratic expansion controlled by the local norm",
                          r.violations52 == 0 && r.violations52_clean == 0, ""});
    rep.checks.push_back({"flattened lower bound with compensator", r.violations54 == 0, ""});
  }
  rep.checks.push_back({"energy gap controls the distance to the minimizer family",
                        r.violations_coer == 0, ""});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational polaron laboratory"};
  app.set_version_flag("--version", kVersion);
  std::string config_path, out_dir = "out";
  uint64_t seed = 0;
  int jobs = 0;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--jobs", jobs, "worker threads (0 = hardware)");
  app.add_option("--out", out_dir, "output directory");
  app.require_subcommand(1);

  auto* cmd_pekar = app.add_subcommand("pekar", "solve the variational minimizer");
  auto* cmd_basis = app.add_subcommand("basis", "build the cube-mode basis and manifest");
  auto* cmd_corr = app.add_subcommand("correction", "curvature spectrum and trace correction");
  auto* cmd_audit = app.add_subcommand("audit-quadratic", "quadratic expansion audits");
  auto* cmd_median = app.add_subcommand("median", "median stability audits");
  auto* cmd_gauss = app.add_subcommand("gaussian", "gaussian tail experiments");
  auto* cmd_fock = app.add_subcommand("fock", "truncated-space operator identities");
  auto* cmd_verify = app.add_subcommand("verify", "run a verification suite");
  std::string suite;
  cmd_verify->add_option("suite", suite, "cutoff|median|gaussian|fock|quadratic|coercivity|all")
      ->required();

  CLI11_PARSE(app, argc, argv);

  Session s;
  try {
    if (!config_path.empty()) s.cfg = Config::from_file(config_path);
    s.cfg.validate();
    s.out_dir = out_dir;
    ::mkdir(out_dir.c_str(), 0755);
    s.seed = seed ? seed : static_cast<uint64_t>(s.cfg.get_int("seed"));
    int j = jobs ? jobs : s.cfg.get_int("jobs");
    if (j > 0) set_worker_count(j);
  } catch (const ComputeError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  }

  auto t0 = std::chrono::steady_clock::now();
  try {
    if (*cmd_pekar) {
      RunReport rep = s.new_report("pekar");
      PekarSolution sol = s.solution(false);
      rep.metrics["e_pek"] = sol.e_pek;
      rep.metrics["mu_pek"] = sol.mu_pek;
      rep.metrics["residual"] = sol.residual;
      rep.metrics["iterations"] = sol.iterations;
      rep.checks.push_back({"self-consistent residual under tolerance",
                            sol.residual <= s.cfg.get_double("tol"), ""});
      std::cout << "e_pek = " << sol.e_pek << "  mu_pek = " << sol.mu_pek << "\n";
      finish(s, rep, "pekar_report.json", t0);
    } else if (*cmd_basis) {
      RunReport rep = s.new_report("basis");
      CubeBasis basis(s.cfg.get_double("basis.lambda"), s.cfg.get_double("basis.ell"),
                      {0, 0, 0});
      basis.save_manifest(s.out_path("basis_manifest.json"));
      rep.metrics["modes"] = basis.n_real();
      DMat G = basis.gram_refined();
      double worst = (G - DMat::Identity(basis.n_real(), basis.n_real())).cwiseAbs().maxCoeff();
      rep.metrics["gram_defect"] = worst;
      rep.checks.push_back({"mode system orthonormal", worst <= 1e-10, ""});
      std::cout << "modes = " << basis.n_real() << "\n";
      finish(s, rep, "basis_report.json", t0);
    } else if (*cmd_corr) {
      RunReport rep = s.new_report("correction");
      PekarSolution sol = s.solution(true);
      int L = s.cfg.get_int("hessian.l_max"), M = s.cfg.get_int("hessian.M");
      HessianSpectrum spec = assemble_KL(sol, L, M);
      spec.save_spectrum(s.out_path("spectrum.json"));
      CorrectionResult corr = quantum_correction(spec);
      HessianSpectrum half = assemble_KL(sol, L / 2, M / 2);
      CorrectionResult chalf = quantum_correction(half);
      std::cout << "Tr[1 - sqrt(H)] = " << corr.trace << "  (" << L / 2 << "," << M / 2
                << ") -> " << chalf.trace << "  zero modes = " << corr.zero_modes << "\n";
      rep.metrics["trace"] = corr.trace;
      rep.metrics["trace_half"] = chalf.trace;
      rep.metrics["zero_modes"] = corr.zero_modes;
      rep.checks.push_back({"three translation zero modes", corr.zero_modes == 3, ""});
      finish(s, rep, "correction_report.json", t0);
    } else if (*cmd_audit) {
      RunReport rep = s.new_report("audit-quadratic");
      suite_quadratic(s, rep, false);
      finish(s, rep, "quadratic_report.json", t0);
    } else if (*cmd_median) {
      RunReport rep = s.new_report("median");
      suite_median(s, rep);
      finish(s, rep, "median_report.json", t0);
    } else if (*cmd_gauss) {
      RunReport rep = s.new_report("gaussian");
      suite_gaussian(s, rep);
      finish(s, rep, "gaussian_report.json", t0);
    } else if (*cmd_fock) {
      RunReport rep = s.new_report("fock");
      suite_fock(s, rep);
      finish(s, rep, "fock_report.json", t0);
    } else if (*cmd_verify) {
      RunReport rep = s.new_report("verify " + suite);
      if (suite == "cutoff") {
        suite_cutoff(s, rep);
      } else if (suite == "median") {
        suite_median(s, rep);
      } else if (suite == "gaussian") {
        suite_gaussian(s, rep);
      } else if (suite == "fock") {
        suite_fock(s, rep);
      } else if (suite == "quadratic") {
        suite_quadratic(s, rep, false);
      } else if (suite == "coercivity") {
        suite_quadratic(s, rep, true);
      } else if (suite == "all") {
        suite_cutoff(s, rep);
        suite_median(s, rep);
        suite_gaussian(s, rep);
        suite_fock(s, rep);
        suite_quadratic(s, rep, false);
      } else {
        std::cerr << "unknown suite: " << suite << "\n";
        return 1;
      }
      finish(s, rep, "verify_report.json", t0);
    }
  } catch (const ComputeError& e) {
    std::cerr << "computation failed: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
