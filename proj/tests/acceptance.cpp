// Acceptance suite: one self-contained check per criterion, each printing a
// single [PASS]/[FAIL] line. Run all with no arguments or one with
// --criterion N. Exit code is the number of failed criteria.
//
// Tolerances, grids and seeds are pinned here; nothing is calibrated at run
// time.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spincat/catfit.hpp"
#include "spincat/eigen_structure.hpp"
#include "spincat/interferometry.hpp"
#include "spincat/rng.hpp"

using namespace spincat;

namespace {

constexpr std::uint64_t kSeed = 20260810;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += "FAILED: " + what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

double parity_defect(const SpinState& s) {
  CVector flipped = s.amps.reverse();
  return (flipped - s.amps).norm();
}

// The Fig.-1 drive and the two appendix drives quoted in the captions.
constexpr double kOmega50 = 0.0204 * kPi, kPhi50 = 0.024 * kPi;
constexpr double kOmega74 = 0.0174 * kPi, kPhi74 = 0.012 * kPi;  // phi sign checked in c5
constexpr double kOmega200 = 0.0151 * kPi, kPhi200 = -0.0128 * kPi;

OptimalDrive prepare(TotalSpin j, double omega, double phi, double tau_end) {
  ScanConfig cfg;
  cfg.tau_end = tau_end;
  cfg.fit.hops = 8;
  cfg.fit.seed = kSeed;
  return evaluate_known_drive(j, omega, phi, cfg);
}

// J = 74.5 drive with the caption's ambiguous phase sign: both are evaluated
// and the one reproducing the high-fidelity window wins.
OptimalDrive prepare_j74(std::string* which = nullptr) {
  TotalSpin j(149);
  auto plus = prepare(j, kOmega74, kPhi74, 35.0);
  auto minus = prepare(j, kOmega74, -kPhi74, 35.0);
  if (which)
    *which = "phi=+0.012pi F=" + fmt(plus.f_opt) + " vs phi=-0.012pi F=" + fmt(minus.f_opt);
  return plus.f_opt >= minus.f_opt ? plus : minus;
}

// ---------------------------------------------------------------------------

Check criterion1() {
  // Free twisting to tau = pi J (chi t = pi/2) for J = 2, 5, 10: best-fit
  // fidelity >= 1 - 1e-6 and delta_0 = pi within 1e-3.
  Check c;
  for (int two_j : {4, 10, 20}) {
    TotalSpin j(two_j);
    DriveParams drive{j, 0.0, 0.0, 0.0};
    auto traj = propagate(canonical_initial(j), drive, kPi * j.j(), StepControl::unverified());
    BasinHopConfig cfg;
    cfg.hops = 30;
    cfg.seed = kSeed;
    auto fit = fit_mss(traj.final_state(), cfg);
    c.note("J=" + fmt(j.j()) + ": F=" + fmt(fit.fidelity) + " delta0=" + fmt(fit.delta0 / kPi) + "pi");
    c.require(fit.fidelity >= 1.0 - 1e-6, "J=" + fmt(j.j()) + " fidelity >= 1-1e-6");
    c.require(std::abs(fit.delta0 - kPi) <= 1e-3, "J=" + fmt(j.j()) + " delta0 = pi +- 1e-3");
  }
  return c;
}

Check criterion2() {
  // J=50 at the quoted drive: the tau <= 25 trace contains a window with
  // F >= 0.99 and delta_0 >= 0.95 pi, and gamma'_0 = 0 (+-1e-3) everywhere.
  Check c;
  TotalSpin j(100);
  DriveParams drive{j, kOmega50, kPhi50, 1.0};
  auto grid = linspace(0.0, 25.0, 2501);
  StepControl step;  // verified at the default 1e-8 tolerance
  BasinHopConfig fit_cfg = BasinHopConfig::fast();
  fit_cfg.seed = kSeed;
  auto trace = fidelity_trace(drive, grid, fit_cfg, step, false);

  int window = 0;
  double best_f = 0.0, worst_gp = 0.0;
  for (const auto& fr : trace.fits) {
    if (fr.fidelity >= 0.99 && fr.delta0 >= 0.95 * kPi) ++window;
    best_f = std::max(best_f, fr.fidelity);
    worst_gp = std::max(worst_gp, std::abs(fr.params.gamma_prime));
  }
  c.note("window samples=" + std::to_string(window) + " best F=" + fmt(best_f) +
         " worst |gamma'_0|=" + fmt(worst_gp));
  c.require(window > 0, "a sample with F >= 0.99 and delta_0 >= 0.95 pi exists");
  c.require(worst_gp <= 1e-3, "gamma'_0 = 0 within 1e-3 at every sample");
  return c;
}

Check criterion3() {
  // optimize_drive at reduced (CI) grid density: F_opt >= 0.95 at J=150 and
  // >= 0.82 at J=250, under the delta_max > 0.4 pi constraint.
  Check c;
  auto run = [&](int two_j, double bound) {
    OptimizeConfig cfg;  // paper window, reduced to 11 x 11 for CI
    cfg.omega_count = 11;
    cfg.phi_count = 11;
    cfg.top_k = 2;
    cfg.scan.tau_end = 45.0;
    cfg.scan.seed = kSeed;
    try {
      auto best = optimize_drive(TotalSpin(two_j), cfg);
      c.note("J=" + fmt(0.5 * two_j) + ": F_opt=" + fmt(best.f_opt) + " at (" +
             fmt(best.omega_opt / kPi) + "pi, " + fmt(best.phi_opt / kPi) + "pi) tau_opt=" +
             fmt(best.tau_opt) + " delta=" + fmt(best.delta_opt / kPi) + "pi");
      c.require(best.f_opt >= bound, "J=" + fmt(0.5 * two_j) + " F_opt >= " + fmt(bound));
      c.require(best.delta_opt > 0.4 * kPi - 1e-9, "J=" + fmt(0.5 * two_j) + " delta constraint");
    } catch (const std::exception& e) {
      c.require(false, std::string("optimize_drive: ") + e.what());
    }
  };
  run(300, 0.95);
  run(500, 0.82);
  return c;
}

Check criterion4() {
  // Parity-sector conservation on the runs of criteria 1-3: free-twisting
  // cats, the J=50 figure drive, and the large-J appendix drives.
  Check c;
  double worst = 0.0;
  auto check_traj = [&](TotalSpin j, double omega, double phi, double r, double tau_end) {
    DriveParams drive{j, omega, phi, r};
    StepControl ctl = StepControl::unverified();
    ctl.record_every = 0.05;
    auto traj = propagate(canonical_initial(j), drive, tau_end, ctl);
    for (const auto& s : traj.states) worst = std::max(worst, parity_defect(s));
    // supplementary gloss: strong amplitude pairs carry zero relative phase
    for (std::size_t i = 0; i < traj.states.size(); i += 50)
      for (const auto& e : relative_phase_profile(traj.states[i], 1e-4))
        if (e.defined) c.require(std::abs(e.gamma) <= 1e-6, "gamma'_M = 0 on strong amplitudes");
  };
  for (int two_j : {4, 10, 20}) check_traj(TotalSpin(two_j), 0.0, 0.0, 0.0, kPi * two_j * 0.5);
  check_traj(TotalSpin(100), kOmega50, kPhi50, 1.0, 25.0);
  check_traj(TotalSpin(149), kOmega74, kPhi74, 1.0, 20.0);
  check_traj(TotalSpin(400), kOmega200, kPhi200, 1.0, 20.0);
  c.note("worst ||X psi - psi|| = " + fmt(worst));
  c.require(worst <= 1e-6, "parity defect <= 1e-6 on every snapshot");
  return c;
}

Check criterion5() {
  // Perfect cat at J=74.5 with the fitted angles: exact fringe within 0.02 of
  // the Gaussian form over |theta| <= 10 sigma; mixed control flat at 1.
  Check c;
  std::string which;
  auto drive = prepare_j74(&which);
  c.note(which);
  TotalSpin j(149);
  const CatParams p = drive.angles_opt;
  auto cat = mss_state(j, p);
  const double sigma = std::sqrt(1.0 / (4.0 * j.j() * std::sin(p.beta) * std::sin(p.beta)));
  auto thetas = linspace(-10.0 * sigma, 10.0 * sigma, 1001);
  auto exact = fringe_exact(cat, thetas);
  auto approx = fringe_analytic(j, p.beta, p.gamma_prime, thetas);
  double worst = 0.0;
  for (std::size_t i = 0; i < thetas.size(); ++i)
    worst = std::max(worst, std::abs(exact.variance[i] - approx.variance[i]));
  c.note("fitted beta=" + fmt(p.beta / kPi) + "pi gamma'=" + fmt(p.gamma_prime) +
         " max|exact-analytic|=" + fmt(worst));
  c.require(worst <= 0.02, "max |fringe_exact - analytic| <= 0.02");

  auto mixed = fringe_mixed(j, p.alpha, p.beta, p.gamma_prime, thetas);
  double worst_mixed = 0.0;
  for (double v : mixed.variance) worst_mixed = std::max(worst_mixed, std::abs(v - 1.0));
  c.note("max |mixed-1| = " + fmt(worst_mixed));
  c.require(worst_mixed <= 1e-6, "mixed-state control flat at 1 within 1e-6");
  return c;
}

Check criterion6() {
  // Parity statistics and exact fringes against the full tensor product for
  // N <= 4 on 100 random states.
  Check c;
  Rng rng(kSeed);
  double worst = 0.0;
  auto thetas = linspace(-1.2, 1.2, 13);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 1 + static_cast<int>(rng.next() % 4);
    TotalSpin j(n);
    CVector amps(j.dim());
    for (int k = 0; k < j.dim(); ++k) amps[k] = Complex(rng.normal(), rng.normal());
    SpinState s(j, amps);
    s.renormalize();
    worst = std::max(worst, std::abs(parity_stats(s).expectation - oracle::parity_x_kron(s)));
    auto fc = fringe_exact(s, thetas);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double ex = oracle::rotated_parity_kron(s, thetas[i]);
      worst = std::max(worst, std::abs(fc.variance[i] - (1.0 - ex * ex)));
    }
  }
  c.note("worst deviation = " + fmt(worst));
  c.require(worst <= 1e-12, "Kronecker oracle agreement at 1e-12");
  return c;
}

struct DipResult {
  double freq_lo = 0.0, freq_hi = 0.0, depth = 0.0;
};

DipResult dips_of(const SpectrumResult& sp) {
  DipResult d;
  d.freq_lo = sp.dip_frequencies[0];
  d.freq_hi = sp.dip_frequencies[1];
  int idx = 0;
  (sp.omegas.array() - d.freq_hi).abs().minCoeff(&idx);
  d.depth = -sp.values[idx];
  return d;
}

Check criterion7() {
  // N=149 spectra on the sampling protocol: perfect-cat dips at +-4J cos beta
  // within one bin and at the ideal depth within 5%; 5% Gaussian spin-number
  // noise keeps the positions and cuts the depth by 40-60%.
  Check c;
  auto drive = prepare_j74();
  TotalSpin j(149);
  const CatParams p = drive.angles_opt;
  const double omega_bar = 4.0 * j.j() * std::cos(p.beta);
  auto thetas = spectrum_protocol_thetas(j, p.beta);
  SpectrumOptions opt;
  opt.analytic_beta = p.beta;

  auto perfect = spectrum_discrete(fringe_exact(mss_state(j, p), thetas), j, opt);
  const double bin = perfect.omegas[1] - perfect.omegas[0];
  auto dp = dips_of(perfect);
  c.note("perfect cat: dips at " + fmt(dp.freq_lo) + ", " + fmt(dp.freq_hi) + " (omega_bar=" +
         fmt(omega_bar) + ", bin=" + fmt(bin) + ") depth=" + fmt(dp.depth));
  c.require(std::abs(dp.freq_hi - omega_bar) <= bin, "right dip at +4J cos beta within one bin");
  c.require(std::abs(dp.freq_lo + omega_bar) <= bin, "left dip at -4J cos beta within one bin");

  int idx = 0;
  (perfect.omegas.array() - omega_bar).abs().minCoeff(&idx);
  const double analytic_depth = -perfect.analytic[idx];
  c.note("analytic depth=" + fmt(analytic_depth));
  c.require(std::abs(dp.depth - analytic_depth) <= 0.05 * analytic_depth,
            "discrete dip depth within 5% of the ideal spectrum");

  // Noiseless driven state as the depth baseline, then the seeded ensemble.
  DriveParams d{j, drive.omega_opt, drive.phi_opt, 1.0};
  Stepper stepper(canonical_initial(j), d, 1e-3);
  stepper.advance_to(drive.tau_opt);
  auto base = spectrum_discrete(fringe_exact(stepper.state(), thetas), j, opt);
  auto db = dips_of(base);

  NoiseSpec spec;
  spec.target = NoiseTarget::spin_number;
  spec.shape = NoiseShape::gaussian;
  spec.sigma_rel = 0.05;
  spec.trials = 250;
  spec.seed = kSeed;
  auto exp = fringe_experiment(drive, spec, thetas);
  auto noisy = spectrum_discrete(exp.curve, j, opt);
  auto dn = dips_of(noisy);
  const double reduction = 1.0 - dn.depth / db.depth;
  c.note("noiseless depth=" + fmt(db.depth) + " noisy depth=" + fmt(dn.depth) + " reduction=" +
         fmt(100.0 * reduction) + "%");
  c.require(std::abs(dn.freq_hi - db.freq_hi) <= bin, "noisy right dip position within one bin");
  c.require(std::abs(dn.freq_lo - db.freq_lo) <= bin, "noisy left dip position within one bin");
  c.require(reduction >= 0.40 && reduction <= 0.60, "dip depth reduced by 40-60%");
  return c;
}

Check criterion8() {
  // 10% spin-number noise at Nbar=149: the mean fringe keeps sqrt(variance)
  // clearly below one on both sides of the first peak near 0.38 pi / J.
  Check c;
  auto drive = prepare_j74();
  TotalSpin j(149);
  NoiseSpec spec;
  spec.sigma_rel = 0.10;
  spec.trials = 250;
  spec.seed = kSeed + 8;
  auto thetas = linspace(1e-4, 0.7 * kPi / j.j(), 141);
  auto exp = fringe_experiment(drive, spec, thetas);

  const double lo = 0.25 * kPi / j.j(), hi = 0.5 * kPi / j.j();
  int peak = -1;
  for (std::size_t i = 0; i < thetas.size(); ++i)
    if (thetas[i] >= lo && thetas[i] <= hi &&
        (peak < 0 || exp.curve.variance[i] > exp.curve.variance[peak]))
      peak = static_cast<int>(i);
  double left = 2.0, right = 2.0;
  for (int i = 0; i < peak; ++i) left = std::min(left, std::sqrt(exp.curve.variance[i]));
  for (std::size_t i = peak + 1; i < thetas.size(); ++i)
    right = std::min(right, std::sqrt(exp.curve.variance[i]));
  c.note("peak at theta=" + fmt(thetas[peak] * j.j() / kPi) + " pi/J; min sqrt(var) left=" +
         fmt(left) + " right=" + fmt(right));
  c.require(left < 0.98, "sub-unity region left of the first peak");
  c.require(right < 0.98, "sub-unity region right of the first peak");
  return c;
}

Check criterion9() {
  // J=200 at the quoted drive: p2 = 0, the gap closes before tau_opt, and the
  // top two eigenstates read gamma'_M = 0 / pi while the gap is open.
  Check c;
  TotalSpin j(400);
  auto drive_eval = prepare(j, kOmega200, kPhi200, 30.0);
  DriveParams drive{j, kOmega200, kPhi200, 1.0};

  auto pops = initial_populations(drive);
  c.note("p1=" + fmt(pops.p1) + " p2=" + fmt(pops.p2));
  c.require(pops.p2 <= 1e-10, "p2 = 0 within 1e-10");

  auto grid = linspace(0.0, drive_eval.tau_opt, 337);
  auto gaps = gap_trace(drive, grid);
  if (gaps.first_closure_tau)
    c.note("gap closes at tau=" + fmt(*gaps.first_closure_tau) + " (tau_opt=" +
           fmt(drive_eval.tau_opt) + ")");
  c.require(gaps.first_closure_tau.has_value() &&
                *gaps.first_closure_tau < drive_eval.tau_opt,
            "gap crosses below 1e-6 before tau_opt");

  const double probe = gaps.first_closure_tau ? 0.5 * *gaps.first_closure_tau
                                              : 0.5 * drive_eval.tau_opt;
  auto profiles = eigen_phase_profiles(drive, std::vector<double>{0.0, probe});
  for (const auto& pt : profiles) {
    if (pt.closed) continue;
    for (const auto& e : pt.top)
      if (e.defined) c.require(std::abs(e.gamma) <= 1e-6, "eps_1 profile reads 0");
    for (const auto& e : pt.second)
      if (e.defined) c.require(std::abs(std::abs(e.gamma) - kPi) <= 1e-6, "eps_2 profile reads pi");
  }
  return c;
}

Check criterion10() {
  // tau_opt at J=74.5 converts to ~3.9 ms at chi = 26 Hz (within 15%), and
  // the pi/chi comparison at 0.44 Hz is 7.14 s exactly.
  Check c;
  auto drive = prepare_j74();
  auto t = physical_time(drive.tau_opt, 26.0, 74.5);
  c.note("tau_opt=" + fmt(drive.tau_opt) + " -> t=" + fmt(1e3 * t.seconds) + " ms");
  c.require(std::abs(t.seconds - 3.9e-3) <= 0.15 * 3.9e-3, "t = 3.9 ms within 15%");
  auto oat = physical_time(1.0, 0.44, 250.0);
  c.require(std::abs(oat.oat_pi_seconds - kPi / 0.44) <= 1e-12, "pi/chi at 0.44 Hz exact");
  c.note("pi/chi = " + fmt(oat.oat_pi_seconds) + " s");
  return c;
}

struct Entry {
  int id;
  const char* name;
  std::function<Check()> run;
};

const Entry kCriteria[] = {
    {1, "free-twisting cat oracle", criterion1},
    {2, "J=50 fidelity-trace window", criterion2},
    {3, "optimized drives at J=150 and J=250", criterion3},
    {4, "parity-sector conservation", criterion4},
    {5, "fringe consistency at J=74.5", criterion5},
    {6, "tensor-product parity oracle", criterion6},
    {7, "fringe spectrum at N=149", criterion7},
    {8, "fringe visibility under 10% number noise", criterion8},
    {9, "eigenstructure at J=200", criterion9},
    {10, "physical generation time", criterion10},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }

  int failures = 0;
  for (const auto& entry : kCriteria) {
    if (only != 0 && entry.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = entry.run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.note(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s (%.1f s) %s\n", c.ok ? "PASS" : "FAIL", entry.id,
                entry.name, secs, c.detail.c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
  }
  if (only == 0) std::printf("summary: %d of 10 criteria failed\n", failures);
  return failures;
}
