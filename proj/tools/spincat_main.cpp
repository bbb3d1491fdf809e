// Command-line driver: evolve, scan, optimize, fringe, spectrum, eigen, qfunc.
// Every run writes a manifest echoing the resolved configuration; outputs are
// byte-reproducible for a fixed seed.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "spincat/catfit.hpp"
#include "spincat/eigen_structure.hpp"
#include "spincat/interferometry.hpp"
#include "spincat/io.hpp"
#include "spincat/rng.hpp"
#include "spincat/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spincat;

namespace {

// Angle literals: "0.0204pi" (units of pi), "0.3rad" or a plain number (radians).
double parse_angle(const std::string& text) {
  std::string t = text;
  double scale = 1.0;
  if (t.size() > 2 && t.substr(t.size() - 2) == "pi") {
    scale = kPi;
    t = t.substr(0, t.size() - 2);
  } else if (t.size() > 3 && t.substr(t.size() - 3) == "rad") {
    t = t.substr(0, t.size() - 3);
  }
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument("");
    return scale * v;
  } catch (const std::exception&) {
    throw CLI::ValidationError("angle", "cannot parse angle literal '" + text + "'");
  }
}

std::string format_angle_pi(double v) { return fmt_double(v / kPi) + "pi"; }

// "start:stop:count" with angle-literal endpoints.
Vector parse_grid(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw CLI::ValidationError("grid", "expected start:stop:count, got '" + text + "'");
  const double lo = parse_angle(text.substr(0, c1));
  const double hi = parse_angle(text.substr(c1 + 1, c2 - c1 - 1));
  const int n = std::stoi(text.substr(c2 + 1));
  if (n < 1) throw CLI::ValidationError("grid", "count must be >= 1");
  Vector v(n);
  if (n == 1)
    v[0] = 0.5 * (lo + hi);
  else
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

// "spin:gauss:0.05" / "omega:uniform:0.05" / "lambda:uniform:0.02"
NoiseSpec parse_noise(const std::string& text, int trials, std::uint64_t seed) {
  NoiseSpec spec;
  spec.trials = trials;
  spec.seed = seed;
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw CLI::ValidationError("noise", "expected target:shape:sigma, got '" + text + "'");
  const std::string target = text.substr(0, c1);
  const std::string shape = text.substr(c1 + 1, c2 - c1 - 1);
  if (target == "spin")
    spec.target = NoiseTarget::spin_number;
  else if (target == "omega")
    spec.target = NoiseTarget::drive_strength;
  else if (target == "lambda")
    spec.target = NoiseTarget::nonlinear_energy;
  else
    throw CLI::ValidationError("noise", "unknown target '" + target + "' (spin|omega|lambda)");
  if (shape == "gauss")
    spec.shape = NoiseShape::gaussian;
  else if (shape == "uniform")
    spec.shape = NoiseShape::uniform;
  else
    throw CLI::ValidationError("noise", "unknown shape '" + shape + "' (gauss|uniform)");
  spec.sigma_rel = std::stod(text.substr(c2 + 1));
  spec.validate();
  return spec;
}

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = ".";
  std::string format = "csv";
};

json base_manifest(const GlobalOpts& g, const std::string& command) {
  return json{{"tool", kToolName},
              {"version", kVersion},
              {"command", command},
              {"seed", g.seed},
              {"threads", g.threads},
              {"rng", Rng::kAlgorithm},
              {"config", json::object()},
              {"outputs", json::array()}};
}

void emit_table(const GlobalOpts& g, json& manifest, const std::string& stem, const CsvWriter& table) {
  const fs::path path = fs::path(g.out_dir) / (stem + (g.format == "json" ? ".json" : ".csv"));
  if (g.format == "json")
    write_json(path, table.json());
  else
    table.write(path);
  manifest["outputs"].push_back(path.string());
}

void finish(const GlobalOpts& g, json& manifest) {
  write_json(fs::path(g.out_dir) / "manifest.json", manifest);
}

OptimalDrive prepare_drive(TotalSpin j, double omega, double phi, double tau_end, double dtau,
                           std::optional<double> tau_opt_override, std::uint64_t seed) {
  ScanConfig cfg;
  cfg.tau_end = tau_end;
  cfg.step = StepControl::unverified(dtau);
  cfg.fit.seed = seed;
  if (!tau_opt_override) return evaluate_known_drive(j, omega, phi, cfg);
  // Known evolution time: fit the state there instead of searching.
  DriveParams drive{j, omega, phi, cfg.r};
  Stepper stepper(canonical_initial(j), drive, dtau);
  stepper.advance_to(*tau_opt_override);
  BasinHopConfig fit_cfg;
  fit_cfg.hops = 12;
  fit_cfg.seed = seed;
  auto fit = fit_mss(stepper.state(), fit_cfg);
  return OptimalDrive{j, omega, phi, *tau_opt_override, fit.fidelity, fit.delta0, fit.params};
}

json drive_json(const OptimalDrive& d) {
  return json{{"J", d.j.j()},
              {"omega_tilde", d.omega_opt},
              {"omega_tilde_over_pi", d.omega_opt / kPi},
              {"phi", d.phi_opt},
              {"phi_over_pi", d.phi_opt / kPi},
              {"tau_opt", d.tau_opt},
              {"f_opt", d.f_opt},
              {"delta_opt_over_pi", d.delta_opt / kPi},
              {"angles",
               {{"alpha", d.angles_opt.alpha},
                {"beta", d.angles_opt.beta},
                {"gamma_prime", d.angles_opt.gamma_prime}}}};
}

void write_qfunc_csv(const GlobalOpts& g, json& manifest, const std::string& stem,
                     const SpinState& state, int n_alpha, int n_beta) {
  auto q = q_function(state, SphereGrid::uniform(n_alpha, n_beta));
  CsvWriter csv({"alpha", "beta", "q"});
  for (int ib = 0; ib < q.grid.betas.size(); ++ib)
    for (int ia = 0; ia < q.grid.alphas.size(); ++ia)
      csv.row({q.grid.alphas[ia], q.grid.betas[ib], q.values(ib, ia)});
  emit_table(g, manifest, stem, csv);
}

int cmd_evolve(const GlobalOpts& g, double j_in, double omega, double phi, double r, double tau_end,
               double dtau, double tol, double record_every, double fit_every, int hops,
               const std::vector<double>& qfunc_at, bool dump_trajectory, bool dump_amps,
               bool dump_states) {
  TotalSpin j = TotalSpin::from_j(j_in);
  DriveParams drive{j, omega, phi, r};

  json manifest = base_manifest(g, "evolve");
  manifest["config"] = {{"J", j.j()},
                        {"omega_tilde", format_angle_pi(omega)},
                        {"phi", format_angle_pi(phi)},
                        {"r", r},
                        {"tau_end", tau_end},
                        {"dtau", dtau},
                        {"tol", tol},
                        {"record_every", record_every},
                        {"fit_every", fit_every},
                        {"hops", hops}};

  std::vector<double> fit_grid;
  for (long i = 0; i * fit_every < tau_end - 1e-12; ++i) fit_grid.push_back(i * fit_every);
  fit_grid.push_back(tau_end);

  StepControl step;
  step.dtau = dtau;
  step.tolerance = tol;
  step.record_every = record_every;
  BasinHopConfig fit_cfg = BasinHopConfig::fast();
  fit_cfg.hops = hops;
  fit_cfg.seed = g.seed;

  auto trace = fidelity_trace(drive, fit_grid, fit_cfg, step, true);

  CsvWriter csv({"tau", "F", "gamma_prime_0", "delta_0_over_pi"});
  csv.comment("J", fmt_double(j.j()));
  csv.comment("omega_tilde", format_angle_pi(omega));
  csv.comment("phi", format_angle_pi(phi));
  csv.comment("seed", std::to_string(g.seed));
  csv.comment("rng", Rng::kAlgorithm);
  for (std::size_t i = 0; i < trace.taus.size(); ++i)
    csv.row({trace.taus[i], trace.fits[i].fidelity, trace.fits[i].params.gamma_prime,
             trace.fits[i].delta0 / kPi});
  emit_table(g, manifest, "trace", csv);

  for (std::size_t qi = 0; qi < qfunc_at.size(); ++qi) {
    const double tq = qfunc_at[qi];
    std::size_t nearest = 0;
    for (std::size_t i = 0; i < trace.taus.size(); ++i)
      if (std::abs(trace.taus[i] - tq) < std::abs(trace.taus[nearest] - tq)) nearest = i;
    write_qfunc_csv(g, manifest, "qfunc_" + std::to_string(qi), trace.states[nearest], 201, 101);
  }

  if (dump_trajectory) {
    std::vector<std::string> cols = {"tau", "norm"};
    if (dump_amps)
      for (int k = 0; k < j.dim(); ++k) {
        cols.push_back("re_" + std::to_string(k));
        cols.push_back("im_" + std::to_string(k));
      }
    CsvWriter tcsv(cols);
    for (std::size_t i = 0; i < trace.taus.size(); ++i) {
      std::vector<double> row = {trace.taus[i], trace.states[i].norm()};
      if (dump_amps)
        for (int k = 0; k < j.dim(); ++k) {
          row.push_back(trace.states[i].amps[k].real());
          row.push_back(trace.states[i].amps[k].imag());
        }
      tcsv.row(row);
    }
    emit_table(g, manifest, "trajectory", tcsv);
  }

  if (dump_states) {
    json snaps = json::array();
    for (std::size_t i = 0; i < trace.taus.size(); ++i) {
      json s = state_to_json(trace.states[i]);
      s["tau"] = trace.taus[i];
      snaps.push_back(std::move(s));
    }
    const fs::path path = fs::path(g.out_dir) / "states.json";
    write_json(path, snaps);
    manifest["outputs"].push_back(path.string());
  }

  finish(g, manifest);
  return 0;
}

int cmd_scan(const GlobalOpts& g, double j_in, const std::string& omega_grid,
             const std::string& phi_grid, double tau_end, double trace_dtau, double dtau, int hops) {
  TotalSpin j = TotalSpin::from_j(j_in);
  Vector og = parse_grid(omega_grid);
  Vector pg = parse_grid(phi_grid);

  ScanConfig cfg;
  cfg.tau_end = tau_end;
  cfg.trace_dtau = trace_dtau;
  cfg.step = StepControl::unverified(dtau);
  cfg.fit.hops = hops;
  cfg.seed = g.seed;

  json manifest = base_manifest(g, "scan");
  manifest["config"] = {{"J", j.j()},        {"omega_grid", omega_grid},
                        {"phi_grid", phi_grid}, {"tau_end", tau_end},
                        {"trace_dtau", trace_dtau}, {"dtau", dtau},
                        {"hops", hops}};

  auto scan = scan_drive(j, og, pg, cfg);

  CsvWriter csv({"J", "omega_tilde_over_pi", "phi_over_pi", "tau_max", "f_max", "delta_max_over_pi"});
  csv.comment("seed", std::to_string(g.seed));
  csv.comment("rng", Rng::kAlgorithm);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  json failures = json::array();
  for (int io = 0; io < og.size(); ++io)
    for (int ip = 0; ip < pg.size(); ++ip) {
      const auto& p = scan.at(io, ip);
      if (p.ok)
        csv.row({j.j(), p.omega_tilde / kPi, p.phi / kPi, p.tau_max, p.f_max, p.delta_max / kPi});
      else {
        csv.row({j.j(), p.omega_tilde / kPi, p.phi / kPi, nan, nan, nan});
        failures.push_back({{"omega_tilde_over_pi", p.omega_tilde / kPi},
                            {"phi_over_pi", p.phi / kPi},
                            {"error", p.error}});
      }
    }
  emit_table(g, manifest, "scan", csv);
  manifest["failures"] = failures;
  finish(g, manifest);
  return 0;
}

int cmd_optimize(const GlobalOpts& g, double j_in, const std::string& omega_grid,
                 const std::string& phi_grid, double tau_end, double trace_dtau, double dtau,
                 int hops, double delta_min, double refine_step, int top_k,
                 std::optional<double> chi) {
  TotalSpin j = TotalSpin::from_j(j_in);
  Vector og = parse_grid(omega_grid);
  Vector pg = parse_grid(phi_grid);

  OptimizeConfig cfg;
  cfg.omega_min = og[0];
  cfg.omega_max = og[og.size() - 1];
  cfg.omega_count = static_cast<int>(og.size());
  cfg.phi_min = pg[0];
  cfg.phi_max = pg[pg.size() - 1];
  cfg.phi_count = static_cast<int>(pg.size());
  cfg.delta_min = delta_min;
  cfg.refine_step = refine_step;
  cfg.top_k = top_k;
  cfg.scan.tau_end = tau_end;
  cfg.scan.trace_dtau = trace_dtau;
  cfg.scan.step = StepControl::unverified(dtau);
  cfg.scan.fit.hops = hops;
  cfg.scan.seed = g.seed;

  json manifest = base_manifest(g, "optimize");
  manifest["config"] = {{"J", j.j()},
                        {"omega_grid", omega_grid},
                        {"phi_grid", phi_grid},
                        {"tau_end", tau_end},
                        {"trace_dtau", trace_dtau},
                        {"dtau", dtau},
                        {"hops", hops},
                        {"delta_min_over_pi", delta_min / kPi},
                        {"refine_step_over_pi", refine_step / kPi},
                        {"top_k", top_k}};

  auto best = optimize_drive(j, cfg);
  json out = drive_json(best);
  if (chi) {
    auto t = physical_time(best.tau_opt, *chi, j.j());
    out["physical_time"] = {{"chi_hz", *chi},
                            {"seconds", t.seconds},
                            {"oat_cat_seconds", t.oat_cat_seconds},
                            {"oat_pi_seconds", t.oat_pi_seconds}};
  }
  const fs::path path = fs::path(g.out_dir) / "optimal.json";
  write_json(path, out);
  manifest["outputs"].push_back(path.string());
  finish(g, manifest);
  return 0;
}

int cmd_fringe(const GlobalOpts& g, double nbar, double omega, double phi, double tau_end,
               double dtau, std::optional<double> tau_opt, const std::string& noise, int trials,
               double theta_max_in, int theta_count, bool emit_analytic) {
  TotalSpin j = TotalSpin::from_j(0.5 * nbar);
  auto drive = prepare_drive(j, omega, phi, tau_end, dtau, tau_opt, g.seed);

  const double theta_max = theta_max_in > 0.0 ? theta_max_in : 0.8 * kPi / j.j();
  std::vector<double> thetas(theta_count);
  for (int i = 0; i < theta_count; ++i)
    thetas[i] = -theta_max + 2.0 * theta_max * i / (theta_count - 1);

  json manifest = base_manifest(g, "fringe");
  manifest["config"] = {{"Nbar", nbar},
                        {"omega_tilde", format_angle_pi(omega)},
                        {"phi", format_angle_pi(phi)},
                        {"tau_opt", drive.tau_opt},
                        {"noise", noise.empty() ? "none" : noise},
                        {"trials", trials},
                        {"theta_max", theta_max},
                        {"theta_count", theta_count}};
  manifest["drive"] = drive_json(drive);

  CsvWriter csv({"theta", "variance_mean", "variance_std", "sqrt_variance_mean"});
  csv.comment("seed", std::to_string(g.seed));
  csv.comment("trials", std::to_string(noise.empty() ? 1 : trials));
  csv.comment("noise", noise.empty() ? "none" : noise);
  csv.comment("rng", Rng::kAlgorithm);

  if (noise.empty()) {
    DriveParams d{j, drive.omega_opt, drive.phi_opt, 1.0};
    Stepper stepper(canonical_initial(j), d, dtau);
    stepper.advance_to(drive.tau_opt);
    auto fc = fringe_exact(stepper.state(), thetas);
    for (std::size_t i = 0; i < thetas.size(); ++i)
      csv.row({thetas[i], fc.variance[i], 0.0, std::sqrt(fc.variance[i])});
  } else {
    NoiseSpec spec = parse_noise(noise, trials, g.seed);
    auto exp = fringe_experiment(drive, spec, thetas, StepControl::unverified(dtau));
    manifest["failed_trials"] = exp.failed_trials;
    for (std::size_t i = 0; i < thetas.size(); ++i)
      csv.row({thetas[i], exp.curve.variance[i], exp.curve.stds[i],
               std::sqrt(exp.curve.variance[i])});
  }
  emit_table(g, manifest, "fringe", csv);

  if (emit_analytic) {
    auto ana = fringe_analytic(j, drive.angles_opt.beta, drive.angles_opt.gamma_prime, thetas);
    auto mix = fringe_mixed(j, drive.angles_opt.alpha, drive.angles_opt.beta,
                            drive.angles_opt.gamma_prime, thetas);
    CsvWriter acsv({"theta", "variance_analytic", "variance_mixed"});
    for (std::size_t i = 0; i < thetas.size(); ++i)
      acsv.row({thetas[i], ana.variance[i], mix.variance[i]});
    emit_table(g, manifest, "fringe_reference", acsv);
  }
  finish(g, manifest);
  return 0;
}

int cmd_spectrum(const GlobalOpts& g, double nbar, double omega, double phi, double tau_end,
                 double dtau, std::optional<double> tau_opt, const std::string& noise, int trials,
                 bool emit_raw) {
  TotalSpin j = TotalSpin::from_j(0.5 * nbar);
  auto drive = prepare_drive(j, omega, phi, tau_end, dtau, tau_opt, g.seed);
  const double beta = drive.angles_opt.beta;
  auto thetas = spectrum_protocol_thetas(j, beta);

  json manifest = base_manifest(g, "spectrum");
  manifest["config"] = {{"Nbar", nbar},
                        {"omega_tilde", format_angle_pi(omega)},
                        {"phi", format_angle_pi(phi)},
                        {"tau_opt", drive.tau_opt},
                        {"beta_over_pi", beta / kPi},
                        {"noise", noise.empty() ? "none" : noise},
                        {"trials", trials},
                        {"theta_samples", thetas.size()}};
  manifest["drive"] = drive_json(drive);

  FringeCurve fringe;
  if (noise.empty()) {
    DriveParams d{j, drive.omega_opt, drive.phi_opt, 1.0};
    Stepper stepper(canonical_initial(j), d, dtau);
    stepper.advance_to(drive.tau_opt);
    fringe = fringe_exact(stepper.state(), thetas);
  } else {
    NoiseSpec spec = parse_noise(noise, trials, g.seed);
    auto exp = fringe_experiment(drive, spec, thetas, StepControl::unverified(dtau));
    manifest["failed_trials"] = exp.failed_trials;
    fringe = std::move(exp.curve);
  }

  SpectrumOptions opt;
  opt.analytic_beta = beta;
  auto sp = spectrum_discrete(fringe, j, opt);
  manifest["dip_frequencies"] = {sp.dip_frequencies[0], sp.dip_frequencies[1]};
  manifest["protocol_mismatch"] = sp.protocol_mismatch;

  CsvWriter csv({"omega_theta", "discrete_value", "analytic_value"});
  csv.comment("seed", std::to_string(g.seed));
  csv.comment("trials", std::to_string(noise.empty() ? 1 : trials));
  csv.comment("noise", noise.empty() ? "none" : noise);
  csv.comment("rng", Rng::kAlgorithm);
  for (int i = 0; i < sp.omegas.size(); ++i)
    csv.row({sp.omegas[i], sp.values[i], sp.analytic[i]});
  emit_table(g, manifest, "spectrum", csv);

  if (emit_raw) {
    CsvWriter rcsv({"omega_theta", "raw_value"});
    for (int i = 0; i < sp.omegas.size(); ++i) rcsv.row({sp.omegas[i], sp.raw[i]});
    emit_table(g, manifest, "spectrum_raw", rcsv);
  }
  finish(g, manifest);
  return 0;
}

int cmd_eigen(const GlobalOpts& g, double j_in, double omega, double phi, const std::string& which,
              double tau_end, int samples) {
  TotalSpin j = TotalSpin::from_j(j_in);
  DriveParams drive{j, omega, phi, 1.0};

  json manifest = base_manifest(g, "eigen");
  manifest["config"] = {{"J", j.j()},
                        {"omega_tilde", format_angle_pi(omega)},
                        {"phi", format_angle_pi(phi)},
                        {"trace", which},
                        {"tau_end", tau_end},
                        {"samples", samples}};

  std::vector<double> grid(samples);
  for (int i = 0; i < samples; ++i) grid[i] = tau_end * i / (samples - 1);

  if (which == "gap") {
    auto trace = gap_trace(drive, grid);
    CsvWriter csv({"tau", "phase_over_pi", "gap"});
    if (trace.first_closure_tau) csv.comment("first_closure_tau", fmt_double(*trace.first_closure_tau));
    for (std::size_t i = 0; i < grid.size(); ++i)
      csv.row({trace.taus[i], trace.phases[i] / kPi, trace.gaps[i]});
    emit_table(g, manifest, "gap", csv);
  } else if (which == "pop") {
    auto pops = initial_populations(drive);
    CsvWriter csv({"J", "p1", "p2", "p_rest"});
    csv.row({j.j(), pops.p1, pops.p2, pops.rest});
    emit_table(g, manifest, "pop", csv);
  } else if (which == "phase") {
    auto pts = eigen_phase_profiles(drive, grid);
    CsvWriter csv({"tau", "level", "m_over_j", "gamma_prime", "defined"});
    for (const auto& pt : pts) {
      for (const auto& e : pt.top) csv.row({pt.tau, 1.0, e.m / j.j(), e.gamma, e.defined ? 1.0 : 0.0});
      for (const auto& e : pt.second)
        csv.row({pt.tau, 2.0, e.m / j.j(), e.gamma, e.defined ? 1.0 : 0.0});
    }
    emit_table(g, manifest, "phase", csv);
  } else {
    throw CLI::ValidationError("trace", "expected gap|pop|phase");
  }
  finish(g, manifest);
  return 0;
}

int cmd_qfunc(const GlobalOpts& g, double j_in, double omega, double phi, double tau, double dtau,
              const std::string& state_file, int n_alpha, int n_beta) {
  json manifest = base_manifest(g, "qfunc");
  if (!state_file.empty()) {
    std::ifstream is(state_file);
    if (!is) throw std::invalid_argument("cannot read state file " + state_file);
    json sj = json::parse(is);
    SpinState state = state_from_json(sj);
    manifest["config"] = {{"state", state_file},
                          {"grid", std::to_string(n_alpha) + "x" + std::to_string(n_beta)}};
    write_qfunc_csv(g, manifest, "qfunc", state, n_alpha, n_beta);
  } else {
    TotalSpin j = TotalSpin::from_j(j_in);
    DriveParams drive{j, omega, phi, 1.0};
    Stepper stepper(canonical_initial(j), drive, dtau);
    stepper.advance_to(tau);
    manifest["config"] = {{"J", j.j()},
                          {"omega_tilde", format_angle_pi(omega)},
                          {"phi", format_angle_pi(phi)},
                          {"tau", tau},
                          {"dtau", dtau},
                          {"grid", std::to_string(n_alpha) + "x" + std::to_string(n_beta)}};
    write_qfunc_csv(g, manifest, "qfunc", stepper.state(), n_alpha, n_beta);
  }
  finish(g, manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spincat: driven collective-spin cat states, parity fringes and spectra"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed for every stochastic stage");
  app.add_option("--threads", g.threads, "worker threads (0 = library default)");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--format", g.format, "table format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  // evolve
  auto* evolve = app.add_subcommand("evolve", "propagate and fit the fidelity trace");
  double j_in = 0.0;
  std::string omega_s = "0.02pi", phi_s = "0.0", r_s = "1.0";
  double tau_end = 25.0, dtau = 1e-3, tol = 1e-8, record_every = 0.01, fit_every = 0.01;
  int hops = 4;
  std::vector<double> qfunc_at;
  bool dump_trajectory = false, dump_amps = false, dump_states = false;
  evolve->add_option("--J", j_in, "total spin (half-integers allowed)")->required();
  evolve->add_option("--omega", omega_s, "rescaled drive frequency (angle literal)");
  evolve->add_option("--phi", phi_s, "drive phase (angle literal)");
  evolve->add_option("--r", r_s, "rescaled drive strength");
  evolve->add_option("--tau-end", tau_end, "rescaled end time");
  evolve->add_option("--dtau", dtau, "integrator step");
  evolve->add_option("--tol", tol, "half-step verification tolerance (<= 0 disables)");
  evolve->add_option("--record-every", record_every, "snapshot cadence");
  evolve->add_option("--fit-every", fit_every, "fidelity sampling cadence");
  evolve->add_option("--hops", hops, "basin hops per fit");
  evolve->add_option("--qfunc-at", qfunc_at, "emit Q-function tables at these times");
  evolve->add_flag("--dump-trajectory", dump_trajectory, "write (tau, norm) table");
  evolve->add_flag("--dump-amps", dump_amps, "add amplitude columns to the trajectory table");
  evolve->add_flag("--dump-states", dump_states, "write JSON snapshots");

  // scan
  auto* scan = app.add_subcommand("scan", "grid scan of the driving parameters");
  double s_j = 0.0;
  std::string s_og = "0.005pi:0.05pi:51", s_pg = "-0.05pi:0.05pi:51";
  double s_tau_end = 45.0, s_trace = 0.05, s_dtau = 1e-3;
  int s_hops = 4;
  scan->add_option("--J", s_j, "total spin")->required();
  scan->add_option("--omega-grid", s_og, "start:stop:count (angle literals)");
  scan->add_option("--phi-grid", s_pg, "start:stop:count (angle literals)");
  scan->add_option("--tau-end", s_tau_end, "trace end time");
  scan->add_option("--trace-dtau", s_trace, "fidelity sampling cadence");
  scan->add_option("--dtau", s_dtau, "integrator step");
  scan->add_option("--hops", s_hops, "basin hops per fit");

  // optimize
  auto* opt = app.add_subcommand("optimize", "coarse scan plus local refinement");
  double o_j = 0.0;
  std::string o_og = "0.005pi:0.05pi:51", o_pg = "-0.05pi:0.05pi:51";
  double o_tau_end = 45.0, o_trace = 0.05, o_dtau = 1e-3;
  int o_hops = 4, o_topk = 2;
  std::string o_delta_min = "0.4pi", o_refine = "0.0001pi";
  double o_chi = 0.0;
  opt->add_option("--J", o_j, "total spin")->required();
  opt->add_option("--omega-grid", o_og, "coarse grid start:stop:count");
  opt->add_option("--phi-grid", o_pg, "coarse grid start:stop:count");
  opt->add_option("--tau-end", o_tau_end, "trace end time");
  opt->add_option("--trace-dtau", o_trace, "fidelity sampling cadence");
  opt->add_option("--dtau", o_dtau, "integrator step");
  opt->add_option("--hops", o_hops, "basin hops per fit");
  opt->add_option("--delta-min", o_delta_min, "admissibility bound on delta_max");
  opt->add_option("--refine-step", o_refine, "final refinement step");
  opt->add_option("--top-k", o_topk, "coarse peaks taken into refinement");
  opt->add_option("--chi", o_chi, "interaction energy in Hz for the physical-time block");

  // fringe
  auto* fringe = app.add_subcommand("fringe", "parity fringes with optional noise ensembles");
  double f_nbar = 0.0;
  std::string f_omega = "0.0174pi", f_phi = "0.012pi", f_noise;
  double f_tau_end = 35.0, f_dtau = 1e-3, f_theta_max = 0.0, f_tau_opt = -1.0;
  int f_trials = 250, f_theta_count = 200;
  bool f_emit_analytic = false;
  fringe->add_option("--Nbar", f_nbar, "nominal spin count")->required();
  fringe->add_option("--omega", f_omega, "drive frequency (angle literal)");
  fringe->add_option("--phi", f_phi, "drive phase (angle literal)");
  fringe->add_option("--tau-end", f_tau_end, "search window for the first fidelity maximum");
  fringe->add_option("--tau-opt", f_tau_opt, "skip the search and use this evolution time");
  fringe->add_option("--dtau", f_dtau, "integrator step");
  fringe->add_option("--noise", f_noise, "target:shape:sigma, e.g. spin:gauss:0.05");
  fringe->add_option("--trials", f_trials, "ensemble size");
  fringe->add_option("--theta-max", f_theta_max, "half-width of the theta window (0 = auto)");
  fringe->add_option("--theta-count", f_theta_count, "theta samples");
  fringe->add_flag("--emit-analytic", f_emit_analytic,
                   "also write the ideal and mixed-state curves");

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "discrete fringe spectrum on the protocol grid");
  double sp_nbar = 0.0;
  std::string sp_omega = "0.0174pi", sp_phi = "0.012pi", sp_noise;
  double sp_tau_end = 35.0, sp_dtau = 1e-3, sp_tau_opt = -1.0;
  int sp_trials = 250;
  bool sp_emit_raw = false;
  spectrum->add_option("--Nbar", sp_nbar, "nominal spin count")->required();
  spectrum->add_option("--omega", sp_omega, "drive frequency (angle literal)");
  spectrum->add_option("--phi", sp_phi, "drive phase (angle literal)");
  spectrum->add_option("--tau-end", sp_tau_end, "search window for the first fidelity maximum");
  spectrum->add_option("--tau-opt", sp_tau_opt, "skip the search and use this evolution time");
  spectrum->add_option("--dtau", sp_dtau, "integrator step");
  spectrum->add_option("--noise", sp_noise, "target:shape:sigma");
  spectrum->add_option("--trials", sp_trials, "ensemble size");
  spectrum->add_flag("--emit-raw", sp_emit_raw, "also write the unscaled transform");

  // eigen
  auto* eigen = app.add_subcommand("eigen", "instantaneous eigensystem traces");
  double e_j = 0.0;
  std::string e_omega = "0.0151pi", e_phi = "-0.0128pi", e_trace = "gap";
  double e_tau_end = 20.0;
  int e_samples = 201;
  eigen->add_option("--J", e_j, "total spin")->required();
  eigen->add_option("--omega", e_omega, "drive frequency (angle literal)");
  eigen->add_option("--phi", e_phi, "drive phase (angle literal)");
  eigen->add_option("--trace", e_trace, "gap|pop|phase");
  eigen->add_option("--tau-end", e_tau_end, "trace end time");
  eigen->add_option("--samples", e_samples, "tau samples");

  // qfunc
  auto* qf = app.add_subcommand("qfunc", "Q-function table of an evolved or stored state");
  double q_j = 1.0, q_tau = 0.0, q_dtau = 1e-3;
  std::string q_omega = "0.0204pi", q_phi = "0.024pi", q_state;
  int q_na = 201, q_nb = 101;
  qf->add_option("--J", q_j, "total spin");
  qf->add_option("--omega", q_omega, "drive frequency (angle literal)");
  qf->add_option("--phi", q_phi, "drive phase (angle literal)");
  qf->add_option("--tau", q_tau, "evolution time");
  qf->add_option("--dtau", q_dtau, "integrator step");
  qf->add_option("--state", q_state, "JSON state file (overrides the drive options)");
  qf->add_option("--grid-alpha", q_na, "alpha samples");
  qf->add_option("--grid-beta", q_nb, "beta samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

  try {
    if (*evolve)
      return cmd_evolve(g, j_in, parse_angle(omega_s), parse_angle(phi_s), std::stod(r_s), tau_end,
                        dtau, tol, record_every, fit_every, hops, qfunc_at, dump_trajectory,
                        dump_amps, dump_states);
    if (*scan) return cmd_scan(g, s_j, s_og, s_pg, s_tau_end, s_trace, s_dtau, s_hops);
    if (*opt)
      return cmd_optimize(g, o_j, o_og, o_pg, o_tau_end, o_trace, o_dtau, o_hops,
                          parse_angle(o_delta_min), parse_angle(o_refine), o_topk,
                          o_chi > 0.0 ? std::optional<double>(o_chi) : std::nullopt);
    if (*fringe)
      return cmd_fringe(g, f_nbar, parse_angle(f_omega), parse_angle(f_phi), f_tau_end, f_dtau,
                        f_tau_opt > 0.0 ? std::optional<double>(f_tau_opt) : std::nullopt, f_noise,
                        f_trials, f_theta_max, f_theta_count, f_emit_analytic);
    if (*spectrum)
      return cmd_spectrum(g, sp_nbar, parse_angle(sp_omega), parse_angle(sp_phi), sp_tau_end,
                          sp_dtau,
                          sp_tau_opt > 0.0 ? std::optional<double>(sp_tau_opt) : std::nullopt,
                          sp_noise, sp_trials, sp_emit_raw);
    if (*eigen)
      return cmd_eigen(g, e_j, parse_angle(e_omega), parse_angle(e_phi), e_trace, e_tau_end,
                       e_samples);
    if (*qf)
      return cmd_qfunc(g, q_j, parse_angle(q_omega), parse_angle(q_phi), q_tau, q_dtau, q_state,
                       q_na, q_nb);
  } catch (const CLI::Error& e) {
    std::cerr << json{{"error", {{"type", "usage"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"error", {{"type", "usage"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << json{{"error", {{"type", "infeasible"}, {"message", e.what()}}}}.dump() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"type", "numerical"}, {"message", e.what()}}}}.dump() << "\n";
    return 3;
  }
  return 2;
}
