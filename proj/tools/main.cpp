#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ksflow/analysis.hpp"
#include "ksflow/io.hpp"
#include "ksflow/vector_fields.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace ksflow;

namespace {

// Exit codes: 2 config/usage, 3 monitor alarm, 4 numeric/integrity failure,
// 5 property violation.
constexpr int kExitConfig = 2;
constexpr int kExitAlarm = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitViolation = 5;

void apply_thread_cap() {
#ifdef _OPENMP
  if (const char* env = std::getenv("KSFLOW_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path, const std::string& out_override, bool exploratory,
            const std::optional<std::uint64_t>& seed_override) {
  std::string text = read_file(config_path);
  ExperimentConfig cfg = config_from_text(text);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (exploratory) cfg.exploratory = true;
  if (seed_override) cfg.initial.seed = *seed_override;
  const std::string cfg_hash = hash_of_text(text);

  AdmissibilityReport adm = check_admissibility(cfg.interaction, cfg.d);
  std::cout << adm.summary << "\n";
  if (!adm.admissible && !cfg.interaction.trivial() && !cfg.exploratory) {
    std::cerr << "run: interaction is outside the admissible family; pass --exploratory to "
                 "proceed anyway\n";
    return kExitConfig;
  }

  Grid grid = Grid::make(cfg.d, cfg.n, cfg.half_length);
  FiniteRankOperator kappa0;
  Schedule sched = cfg.schedule;
  if (!cfg.snapshot_path.empty()) {
    Snapshot snap = read_snapshot(cfg.snapshot_path);
    kappa0 = operator_of(snap, grid);
    sched.t0 = snap.time;
  } else {
    kappa0 = gaussian_mixture_initial(grid, cfg.initial);
  }

  fs::create_directories(cfg.out_dir);
  Trajectory traj = evolve(kappa0, cfg.interaction, sched, /*compute_w2=*/cfg.d == 1,
                           [](const NormRow& row, const EvolutionState&) {
                             std::cout << "t = " << row.t << "  trace = " << row.trace
                                       << "  energy = " << row.energy
                                       << "  boundary = " << row.boundary_mass << "\n";
                           });
  write_series_csv((fs::path(cfg.out_dir) / "series.csv").string(), traj.series);
  if (sched.dyadic_snapshots) {
    for (const auto& s : traj.snapshots) {
      std::ostringstream name;
      name << "snapshot_t" << s.t << ".ksnap";
      write_snapshot((fs::path(cfg.out_dir) / name.str()).string(),
                     snapshot_of(s.kappa, s.t, cfg.initial.seed, cfg_hash));
    }
  }
  write_snapshot((fs::path(cfg.out_dir) / "final.ksnap").string(),
                 snapshot_of(traj.final_kappa, traj.final_time, cfg.initial.seed, cfg_hash));

  if (cfg.suite_scattering) {
    ScatteringResult sc = scattering_extract(traj.snapshots);
    std::ofstream out(fs::path(cfg.out_dir) / "scattering.csv");
    out << "t,cauchy_diff,residual\n";
    for (std::size_t i = 0; i < sc.times.size(); ++i)
      out << format_g17(sc.times[i]) << ','
          << format_g17(i + 1 < sc.times.size() ? sc.cauchy_diffs[i] : 0.0) << ','
          << format_g17(sc.residuals[i]) << "\n";
    std::cout << "scattering: cauchy tail " << (sc.cauchy_decreasing ? "decreasing" : "NOT decreasing")
              << "\n";
  }
  if (cfg.suite_apriori) {
    AprioriReport rep = apriori_monitor(traj.series, 1, 10.0, cfg.interaction);
    std::cout << "apriori: sup W1(t)/W1(" << rep.s_ref << ") = " << rep.sup_ratio
              << (rep.within_bound ? " (within bound)" : " (FLAGGED)") << "\n";
    if (!rep.within_bound) return kExitAlarm;
  }
  if (traj.boundary_alarm) {
    std::cerr << "run: boundary-mass alarm tripped; box too small for this horizon\n";
    return kExitAlarm;
  }
  return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, int samples,
               const std::string& out_dir, const std::string& snapshot_path) {
  fs::create_directories(out_dir);
  if (!snapshot_path.empty()) {
    // Integrity check mode: any read failure is a numeric/integrity error.
    Snapshot s = read_snapshot(snapshot_path);
    std::cout << "snapshot ok: rank " << s.coeffs.size() << " at t = " << s.time << "\n";
    return 0;
  }
  if (suite == "identities") {
    Grid g = Grid::make(1, 1024, 64.0);
    double worst_jac = 0.0, worst_jd = 0.0, worst_ddc = 0.0, worst_jfree = 0.0;
    int failures = 0;
    for (int i = 0; i < samples; ++i) {
      for (double t : {0.5, 1.0, 2.0}) {
        IdentityResiduals r = identity_residuals(g, seed + static_cast<std::uint64_t>(i), t);
        worst_jac = std::max(worst_jac, r.jacobi);
        worst_jd = std::max(worst_jd, r.jd);
        worst_ddc = std::max(worst_ddc, r.ddc);
        worst_jfree = std::max(worst_jfree, r.jfree);
        if (r.jacobi > 1e-10 || r.jd > 1e-6 || r.ddc > 1e-8 || r.jfree > 1e-8) ++failures;
      }
    }
    std::ofstream out(fs::path(out_dir) / "identities.txt");
    out << "jacobi_max = " << worst_jac << "\njd_max = " << worst_jd
        << "\nddc_max = " << worst_ddc << "\njfree_max = " << worst_jfree
        << "\nfailures = " << failures << "\n";
    std::cout << "identities: jacobi " << worst_jac << ", jd " << worst_jd << ", ddc " << worst_ddc
              << ", jfree " << worst_jfree << ", failures " << failures << "\n";
    return failures == 0 ? 0 : kExitViolation;
  }
  if (suite == "inequalities") {
    Grid g = Grid::make(1, 256, 16.0);
    int violations = 0;
    double worst_exact = 0.0, max_gnk = 0.0, max_den = 0.0;
    for (int i = 0; i < samples; ++i) {
      FiniteRankOperator k =
          materialize_random_op(g, draw_random_op(seed + static_cast<std::uint64_t>(i), 1));
      FiniteRankOperator kp = materialize_random_op(
          g, draw_random_op(seed + 1000003ull + static_cast<std::uint64_t>(i), 1));
      GridFunction f = materialize_orbital(
          g, draw_random_op(seed + 2000003ull + static_cast<std::uint64_t>(i), 1).terms[0].left);
      for (SampleRatio r : {verify_xy_rc_bound(k, 4.0), verify_gamma_domination(k, 4.0),
                            verify_product_estimate(f, k, 4.0, 4.0),
                            verify_pointwise_rho_bound(k, 1.0)}) {
        if (r.skipped) continue;
        worst_exact = std::max(worst_exact, r.ratio);
        if (r.ratio > 1.0 + 1e-10) ++violations;
      }
      max_gnk = std::max(max_gnk, verify_gnk(k, 2.0, 4.0, 1).ratio);
      max_den = std::max(max_den, verify_density_estimate(k, kp, 2.0, 4.0, 4.0).ratio);
    }
    std::ofstream out(fs::path(out_dir) / "inequalities.txt");
    out << "exact_max_ratio = " << worst_exact << "\ngnk_max_ratio = " << max_gnk
        << "\ndensity_max_ratio = " << max_den << "\nviolations = " << violations << "\n";
    std::cout << "inequalities: exact max ratio " << worst_exact << ", gnk max " << max_gnk
              << ", density max " << max_den << ", violations " << violations << "\n";
    return violations == 0 ? 0 : kExitViolation;
  }
  if (suite == "dynamics-oracles") {
    // Free rank-1 Gaussian against the closed form, and the Duhamel fixed
    // point against the split-step integrator on a short horizon.
    Grid g = Grid::make(1, 512, 64.0);
    InitialDataParams ip;
    ip.rank = 1;
    ip.seed = seed;
    ip.width_min = ip.width_max = 1.0;
    FiniteRankOperator k0 = gaussian_mixture_initial(g, ip);
    SelfInteraction free_spec;
    int failures = 0;
    for (double t : {1.0, 2.0, 4.0}) {
      FiniteRankOperator kt = free_conjugation(k0, t);
      double got = gamma_local_norm(compose(adjoint(kt), kt),
                                    std::numeric_limits<double>::infinity());
      double want = 1.0 / std::sqrt(M_PI * (1.0 + 4.0 * t * t));
      if (std::abs(got - want) / want > 1e-6) ++failures;
    }
    SelfInteraction spec;
    spec.lambda2 = 0.05;
    spec.beta = 2.0;
    const double T = 0.05;
    FiniteRankOperator duh = picard_duhamel(k0, spec, T, 6);
    EvolutionState st{k0, 0.0};
    for (int i = 0; i < 50; ++i) st = step_strang(st, spec, T / 50);
    double diff = relative_hs_difference(duh, st.kappa);
    if (diff > 1e-6) ++failures;
    double moved = relative_hs_difference(st.kappa, k0);
    if (moved < 1e-4) ++failures;  // the comparison must not be vacuous
    std::cout << "dynamics-oracles: duhamel vs split-step " << diff << ", moved " << moved
              << ", failures " << failures
              << "\n";
    return failures == 0 ? 0 : kExitViolation;
  }
  std::cerr << "verify: unknown suite '" << suite
            << "' (expected identities | inequalities | dynamics-oracles)\n";
  return kExitConfig;
}

int cmd_fit(const std::string& series_path, const std::string& column, double t0, double t1) {
  CsvTable t = read_csv(series_path);
  std::size_t ci = t.columns.size();
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i] == column) ci = i;
  if (ci == t.columns.size()) {
    std::cerr << "fit: no column '" << column << "' in " << series_path << "\n";
    return kExitConfig;
  }
  std::vector<double> ts, vs;
  for (const auto& row : t.rows) {
    ts.push_back(row[0]);
    vs.push_back(row[ci]);
  }
  DecayFit fit = fit_decay(ts, vs, t0, t1);
  std::cout << "column = " << column << ", window = [" << fit.t0 << ", " << fit.t1
            << "], nu = " << format_g17(fit.nu) << ", band95 = " << format_g17(fit.band95)
            << ", r2 = " << format_g17(fit.r2) << "\n";
  return 0;
}

int cmd_report(const std::string& out_dir) {
  CsvTable t = read_csv((fs::path(out_dir) / "series.csv").string());
  if (t.rows.empty()) {
    std::cerr << "report: empty series\n";
    return kExitConfig;
  }
  const auto& first = t.rows.front();
  const auto& last = t.rows.back();
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (t.columns[i] == name) return i;
    throw std::invalid_argument("report: missing column " + name);
  };
  std::cout << "rows = " << t.rows.size() << "\n";
  std::cout << "time = [" << first[0] << ", " << last[0] << "]\n";
  std::size_t tr = col("trace"), en = col("energy");
  double tr_drift = std::abs(last[tr] - first[tr]) / std::max(std::abs(first[tr]), 1e-300);
  double en_drift = std::abs(last[en] - first[en]) / std::max(std::abs(first[en]), 1e-300);
  std::cout << "trace_drift = " << format_g17(tr_drift) << "\n";
  std::cout << "energy_drift = " << format_g17(en_drift) << "\n";
  for (const char* name : {"gamma_inf", "L2r_Linf_c"}) {
    std::size_t ci = col(name);
    std::vector<double> ts, vs;
    for (const auto& row : t.rows) {
      ts.push_back(row[0]);
      vs.push_back(row[ci]);
    }
    if (last[0] >= 40.0) {
      DecayFit fit = fit_decay(ts, vs, 5.0, std::min(last[0], 40.0));
      std::cout << name << "_nu = " << format_g17(fit.nu) << " (r2 " << format_g17(fit.r2)
                << ")\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();
  CLI::App app{"finite-rank Kohn-Sham flow lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir, suite = "identities", series_path, column = "gamma_inf";
  std::string snapshot_path;
  std::uint64_t seed = 0;
  int samples = 100;
  bool exploratory = false;
  double t0 = 5.0, t1 = 40.0;

  auto* run = app.add_subcommand("run", "integrate a configured trajectory");
  run->add_option("--config", config_path)->required();
  run->add_option("--out", out_dir);
  run->add_option("--seed", seed);
  run->add_flag("--exploratory", exploratory);

  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("--suite", suite);
  verify->add_option("--seed", seed);
  verify->add_option("--samples", samples);
  verify->add_option("--out", out_dir)->default_val(".");
  verify->add_option("--snapshot", snapshot_path);

  auto* fit = app.add_subcommand("fit", "fit a decay exponent from a series CSV");
  fit->add_option("--series", series_path)->required();
  fit->add_option("--column", column);
  fit->add_option("--t0", t0);
  fit->add_option("--t1", t1);

  auto* report = app.add_subcommand("report", "summarize a run directory");
  report->add_option("--out", out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed())
      return cmd_run(config_path, out_dir, exploratory,
                     run->count("--seed") ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (verify->parsed()) return cmd_verify(suite, seed, samples, out_dir, snapshot_path);
    if (fit->parsed()) return cmd_fit(series_path, column, t0, t1);
    if (report->parsed()) return cmd_report(out_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
