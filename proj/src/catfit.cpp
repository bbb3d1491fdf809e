#include "spincat/catfit.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "spincat/rng.hpp"

namespace spincat {

namespace {

double reflect_into(double x, double lo, double hi) {
  const double span = hi - lo;
  double t = std::fmod(x - lo, 2.0 * span);
  if (t < 0.0) t += 2.0 * span;
  return lo + (t <= span ? t : 2.0 * span - t);
}

std::array<double, 3> fold(const std::array<double, 3>& x) {
  return {reflect_into(x[0], -kPi, kPi), reflect_into(x[1], 0.0, kPi), reflect_into(x[2], -kPi, kPi)};
}

CatParams to_params(const std::array<double, 3>& x) {
  auto f = fold(x);
  return {wrap_angle(f[0]), f[1], wrap_angle(f[2])};
}

// Stationary relative phase of F(g) = |u + e^{-ig} w|^2 / (2 (1 + s cos g)).
// dF/dg = 0 reduces to A sin g + B cos g + C = 0 with the terms below. The
// symmetric phases 0 and pi are tried first so they win exact ties; for
// parity-even states this pins gamma' at zero instead of conditioning noise.
double stationary_gamma(const MssOverlapParts& parts, double fallback) {
  const Complex cross = std::conj(parts.u) * parts.w;
  const double rho = std::abs(cross);
  const double phase = std::arg(cross);
  const double p = std::norm(parts.u) + std::norm(parts.w);
  const double a = parts.s * p - 2.0 * rho * std::cos(phase);
  const double b = 2.0 * rho * std::sin(phase);
  const double c = parts.s * b;
  const double rad = std::hypot(a, b);

  double best_g = 0.0;
  double best_f = mss_fidelity_at(parts, 0.0);
  auto consider = [&](double g) {
    const double f = mss_fidelity_at(parts, g);
    if (f > best_f) {
      best_f = f;
      best_g = g;
    }
  };
  consider(kPi);
  if (rad > 1e-300) {
    const double q = std::clamp(-c / rad, -1.0, 1.0);
    const double psi = std::atan2(b, a);
    consider(wrap_angle(std::asin(q) - psi));
    consider(wrap_angle(kPi - std::asin(q) - psi));
  }
  consider(fallback);
  return best_g;
}

struct Objective {
  const CssProjector& proj;
  const CVector& amps;

  double fidelity(const std::array<double, 3>& x) const {
    auto f = fold(x);
    return mss_fidelity_at(mss_overlap_parts(proj, amps, f[0], f[1]), f[2]);
  }

  // Replaces x[2] by the exact stationary phase at (x[0], x[1]).
  double polish_gamma(std::array<double, 3>& x) const {
    auto f = fold(x);
    const auto parts = mss_overlap_parts(proj, amps, f[0], f[1]);
    const double g = stationary_gamma(parts, f[2]);
    x = {f[0], f[1], g};
    return mss_fidelity_at(parts, g);
  }
};

struct NmResult {
  std::array<double, 3> x;
  double f;
};

// Nelder-Mead ascent on the folded box; maximizes obj.fidelity.
NmResult nelder_mead(const Objective& obj, std::array<double, 3> start, int max_iter, double f_tol) {
  constexpr int n = 3;
  const std::array<double, 3> h = {0.12, 0.12, 0.25};
  std::array<std::array<double, 3>, n + 1> x;
  std::array<double, n + 1> f;
  x[0] = start;
  f[0] = obj.fidelity(x[0]);
  for (int i = 0; i < n; ++i) {
    x[i + 1] = start;
    x[i + 1][i] += h[i];
    f[i + 1] = obj.fidelity(x[i + 1]);
  }

  std::array<int, n + 1> idx = {0, 1, 2, 3};
  auto sort_desc = [&] { std::sort(idx.begin(), idx.end(), [&](int a, int b) { return f[a] > f[b]; }); };

  for (int it = 0; it < max_iter; ++it) {
    sort_desc();
    if (f[idx[0]] - f[idx[n]] < f_tol) break;

    std::array<double, 3> centroid = {0, 0, 0};
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < n; ++d) centroid[d] += x[idx[i]][d] / n;
    const auto& worst = x[idx[n]];

    auto blend = [&](double t) {
      std::array<double, 3> y;
      for (int d = 0; d < n; ++d) y[d] = centroid[d] + t * (centroid[d] - worst[d]);
      return y;
    };

    auto xr = blend(1.0);
    double fr = obj.fidelity(xr);
    if (fr > f[idx[0]]) {
      auto xe = blend(2.0);
      double fe = obj.fidelity(xe);
      if (fe > fr) {
        x[idx[n]] = xe;
        f[idx[n]] = fe;
      } else {
        x[idx[n]] = xr;
        f[idx[n]] = fr;
      }
      continue;
    }
    if (fr > f[idx[n - 1]]) {
      x[idx[n]] = xr;
      f[idx[n]] = fr;
      continue;
    }
    auto xc = blend(fr > f[idx[n]] ? 0.5 : -0.5);
    double fc = obj.fidelity(xc);
    if (fc > std::max(fr, f[idx[n]])) {
      x[idx[n]] = xc;
      f[idx[n]] = fc;
      continue;
    }
    for (int i = 1; i <= n; ++i) {  // shrink toward best
      for (int d = 0; d < n; ++d) x[idx[i]][d] = x[idx[0]][d] + 0.5 * (x[idx[i]][d] - x[idx[0]][d]);
      f[idx[i]] = obj.fidelity(x[idx[i]]);
    }
  }
  sort_desc();
  return {x[idx[0]], f[idx[0]]};
}

NmResult descend(const Objective& obj, std::array<double, 3> start, const BasinHopConfig& cfg) {
  NmResult r = nelder_mead(obj, start, cfg.nm_max_iter, cfg.nm_f_tol);
  double polished = obj.polish_gamma(r.x);
  if (polished > r.f + 1e-15) {
    // The phase moved; give the simplex one short pass from the new point.
    r = nelder_mead(obj, r.x, cfg.nm_max_iter / 2, cfg.nm_f_tol);
    polished = obj.polish_gamma(r.x);
  }
  r.f = polished;
  return r;
}

const std::array<CatParams, 8>& seed_grid() {
  static const std::array<CatParams, 8> seeds = {{
      {0.5 * kPi, 0.5 * kPi, 0.0},
      {0.25 * kPi, 0.35 * kPi, 0.0},
      {0.75 * kPi, 0.35 * kPi, 0.0},
      {0.05 * kPi, 0.45 * kPi, 0.0},
      {0.5 * kPi, 0.5 * kPi, kPi},
      {0.25 * kPi, 0.35 * kPi, kPi},
      {0.75 * kPi, 0.35 * kPi, kPi},
      {0.05 * kPi, 0.45 * kPi, kPi},
  }};
  return seeds;
}

}  // namespace

MssFitter::MssFitter(TotalSpin j, BasinHopConfig config)
    : j_(j), config_(std::move(config)), proj_(j) {}

double MssFitter::fidelity(const SpinState& state, const CatParams& p) const {
  return mss_fidelity(proj_, state.amps, p);
}

FitResult MssFitter::fit(const SpinState& state) const { return fit(state, {}); }

FitResult MssFitter::fit(const SpinState& state, std::span<const CatParams> warm_starts) const {
  if (state.j != j_) throw std::invalid_argument("MssFitter: state has a different total spin");
  Objective obj{proj_, state.amps};

  std::array<double, 3> seed_best{};
  double seed_best_f = -1.0;
  auto consider = [&](const CatParams& p) {
    std::array<double, 3> x = {p.alpha, p.beta, p.gamma_prime};
    double f = obj.fidelity(x);
    if (f > seed_best_f) {
      seed_best_f = f;
      seed_best = x;
    }
  };
  for (const auto& p : warm_starts) consider(p);
  for (const auto& p : config_.warm_starts) consider(p);
  for (const auto& p : seed_grid()) consider(p);

  NmResult best = descend(obj, seed_best, config_);
  if (best.f < seed_best_f) best = {seed_best, seed_best_f};

  Rng rng(config_.seed);
  NmResult current = best;
  int last_improvement = 0;
  for (int hop = 1; hop <= config_.hops; ++hop) {
    std::array<double, 3> start = current.x;
    for (int d = 0; d < 3; ++d) start[d] += config_.perturb[d] * rng.normal();
    NmResult cand = descend(obj, start, config_);
    if (cand.f > best.f + 1e-9) last_improvement = hop;
    if (cand.f > best.f) best = cand;
    if (cand.f >= current.f || rng.uniform01() < std::exp((cand.f - current.f) / config_.temperature))
      current = cand;
  }

  FitResult out;
  out.params = to_params(best.x);
  // Canonicalize to the beta <= pi/2 branch; (alpha, beta, gamma') and
  // (-alpha, pi-beta, -gamma') label the same family member.
  if (out.params.beta > 0.5 * kPi)
    out.params = {wrap_angle(-out.params.alpha), kPi - out.params.beta,
                  wrap_angle(-out.params.gamma_prime)};
  out.fidelity = best.f;
  out.delta0 = displacement_angle(out.params.alpha, out.params.beta);
  out.converged = last_improvement < config_.hops;
  return out;
}

FitResult fit_mss(const SpinState& state, const BasinHopConfig& config) {
  return MssFitter(state.j, config).fit(state);
}

FidelityTrace fidelity_trace(const DriveParams& drive, std::span<const double> tau_grid,
                             const BasinHopConfig& fit_config, const StepControl& step,
                             bool keep_states) {
  Trajectory traj = propagate_at(canonical_initial(drive.j), drive, tau_grid, step);
  MssFitter fitter(drive.j, fit_config);
  FidelityTrace out;
  out.drive = drive;
  out.taus.assign(tau_grid.begin(), tau_grid.end());
  out.fits.reserve(tau_grid.size());
  std::array<CatParams, 1> warm{};
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    FitResult fr = i == 0 ? fitter.fit(traj.states[i])
                          : fitter.fit(traj.states[i], std::span<const CatParams>(warm));
    warm[0] = fr.params;
    out.fits.push_back(fr);
  }
  if (keep_states) out.states = std::move(traj.states);
  return out;
}

std::optional<LocalMax> first_local_max(std::span<const double> taus, std::span<const double> values,
                                        const std::function<double(double)>& eval,
                                        double tau_resolution) {
  if (taus.size() < 3 || taus.size() != values.size())
    throw std::invalid_argument("first_local_max: need at least 3 samples");
  constexpr double kJitter = 1e-8;  // ignore sub-numerical wiggles in the fitted trace
  for (std::size_t i = 1; i + 1 < taus.size(); ++i) {
    if (values[i] > values[i - 1] + kJitter && values[i] > values[i + 1] + kJitter) {
      double a = taus[i - 1], b = taus[i + 1];
      constexpr double invphi = 0.6180339887498949;
      double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
      double f1 = eval(x1), f2 = eval(x2);
      while (b - a > tau_resolution) {
        if (f1 < f2) {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + invphi * (b - a);
          f2 = eval(x2);
        } else {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - invphi * (b - a);
          f1 = eval(x1);
        }
      }
      LocalMax out;
      out.index = static_cast<int>(i);
      if (f1 >= f2 && f1 >= values[i]) {
        out.tau = x1;
        out.value = f1;
      } else if (f2 >= f1 && f2 >= values[i]) {
        out.tau = x2;
        out.value = f2;
      } else {
        out.tau = taus[i];
        out.value = values[i];
      }
      return out;
    }
  }
  return std::nullopt;
}

std::optional<DriveEvaluation> evaluate_drive(TotalSpin j, double omega_tilde, double phi,
                                              const ScanConfig& config) {
  const DriveParams drive{j, omega_tilde, phi, config.r};
  const MssFitter fitter(j, config.fit);
  Stepper stepper(canonical_initial(j), drive, config.step.dtau, config.step.kernel);

  std::vector<double> taus;
  std::vector<double> fvals;
  std::vector<CatParams> params;
  std::array<SpinState, 3> ring = {SpinState::zero(j), SpinState::zero(j), SpinState::zero(j)};
  std::array<CatParams, 1> warm{};

  const long n_samples = static_cast<long>(std::floor(config.tau_end / config.trace_dtau + 1e-9));
  for (long k = 0; k <= n_samples; ++k) {
    const double t = std::min(k * config.trace_dtau, config.tau_end);
    stepper.advance_to(t);
    ring[k % 3] = stepper.state();
    FitResult fr = k == 0 ? fitter.fit(stepper.state())
                          : fitter.fit(stepper.state(), std::span<const CatParams>(warm));
    warm[0] = fr.params;
    taus.push_back(t);
    fvals.push_back(fr.fidelity);
    params.push_back(fr.params);

    const std::size_t i = taus.size();
    if (i >= 3 && fvals[i - 2] > fvals[i - 3] + 1e-8 && fvals[i - 2] > fvals[i - 1] + 1e-8) {
      const SpinState& left = ring[(k - 2) % 3];
      const double t_left = taus[i - 3];
      const CatParams peak_params = params[i - 2];
      auto eval = [&](double tau) {
        Stepper s(left, drive, config.step.dtau, config.step.kernel, t_left);
        s.advance_to(tau);
        std::array<CatParams, 1> w{peak_params};
        return fitter.fit(s.state(), std::span<const CatParams>(w)).fidelity;
      };
      auto lm = first_local_max(std::span<const double>(taus).subspan(i - 3),
                                std::span<const double>(fvals).subspan(i - 3), eval,
                                config.refine_resolution);
      if (!lm) continue;  // jitter guard rejected the trio

      Stepper s(left, drive, config.step.dtau, config.step.kernel, t_left);
      s.advance_to(lm->tau);
      std::array<CatParams, 1> w{peak_params};
      FitResult final_fit = fitter.fit(s.state(), std::span<const CatParams>(w));

      DriveEvaluation ev{DriveScanPoint{omega_tilde, phi, lm->tau, final_fit.fidelity,
                                        final_fit.delta0, true, {}},
                         final_fit, s.state()};
      return ev;
    }
  }
  return std::nullopt;
}

ScanResult scan_drive(TotalSpin j, const Vector& omega_grid, const Vector& phi_grid,
                      const ScanConfig& config) {
  if (omega_grid.size() == 0 || phi_grid.size() == 0)
    throw std::invalid_argument("scan_drive: empty grid");
  ScanResult out{omega_grid, phi_grid, {}};
  const int no = static_cast<int>(omega_grid.size());
  const int np = static_cast<int>(phi_grid.size());
  out.points.resize(static_cast<std::size_t>(no) * np);

  std::uint64_t seed_state = config.seed;
  const std::uint64_t seed_base = splitmix64(seed_state);

#pragma omp parallel for collapse(2) schedule(dynamic)
  for (int io = 0; io < no; ++io) {
    for (int ip = 0; ip < np; ++ip) {
      const int idx = io * np + ip;
      ScanConfig local = config;
      local.fit.seed = seed_base ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(idx) + 1));
      DriveScanPoint pt;
      pt.omega_tilde = omega_grid[io];
      pt.phi = phi_grid[ip];
      try {
        auto ev = evaluate_drive(j, omega_grid[io], phi_grid[ip], local);
        if (ev) {
          pt = ev->point;
        } else {
          pt.error = "no local maximum in [0, tau_end]";
        }
      } catch (const std::exception& e) {
        pt.error = e.what();
      }
      out.points[idx] = pt;
    }
  }
  return out;
}

namespace {

Vector linspace(double lo, double hi, int n) {
  Vector v(n);
  if (n == 1) {
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

struct RankedPoint {
  double f = -1.0;
  double omega = 0.0;
  double phi = 0.0;
};

}  // namespace

OptimalDrive optimize_drive(TotalSpin j, const OptimizeConfig& config) {
  const Vector og = linspace(config.omega_min, config.omega_max, config.omega_count);
  const Vector pg = linspace(config.phi_min, config.phi_max, config.phi_count);
  ScanResult coarse = scan_drive(j, og, pg, config.scan);

  auto feasible = [&](const DriveScanPoint& p) {
    return p.ok && p.delta_max - config.delta_min > -1e-9;
  };

  // Rank feasible coarse points; ties resolve to the lowest omega index, then
  // the lowest phi index.
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(coarse.points.size()); ++i)
    if (feasible(coarse.points[i])) order.push_back(i);
  if (order.empty())
    throw InfeasibleError("optimize_drive: no scanned point satisfies the displacement constraint");
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (coarse.points[a].f_max != coarse.points[b].f_max)
      return coarse.points[a].f_max > coarse.points[b].f_max;
    return a < b;
  });

  RankedPoint best{coarse.points[order[0]].f_max, coarse.points[order[0]].omega_tilde,
                   coarse.points[order[0]].phi};

  const double coarse_dw = config.omega_count > 1 ? og[1] - og[0] : 10.0 * config.refine_step;
  const double coarse_dp = config.phi_count > 1 ? pg[1] - pg[0] : 10.0 * config.refine_step;
  const int half_span = config.refine_points / 2;
  const int n_candidates = std::min<int>(config.top_k, static_cast<int>(order.size()));

  std::uint64_t seed_state = config.scan.seed + 0x51A9B2C7;
  for (int c = 0; c < n_candidates; ++c) {
    const DriveScanPoint& start = coarse.points[order[c]];
    RankedPoint center{start.f_max, start.omega_tilde, start.phi};
    double dw = coarse_dw, dp = coarse_dp;
    while (dw > config.refine_step || dp > config.refine_step) {
      dw = std::max(dw / 4.0, config.refine_step);
      dp = std::max(dp / 4.0, config.refine_step);
      Vector local_og = linspace(center.omega - half_span * dw, center.omega + half_span * dw,
                                 config.refine_points);
      Vector local_pg = linspace(center.phi - half_span * dp, center.phi + half_span * dp,
                                 config.refine_points);
      ScanConfig round_cfg = config.scan;
      round_cfg.seed = splitmix64(seed_state);
      ScanResult local = scan_drive(j, local_og, local_pg, round_cfg);
      for (const auto& p : local.points)
        if (feasible(p) && p.f_max > center.f) center = {p.f_max, p.omega_tilde, p.phi};
    }
    if (center.f > best.f) best = center;
  }

  ScanConfig final_cfg = config.scan;
  final_cfg.seed = splitmix64(seed_state);
  auto ev = evaluate_drive(j, best.omega, best.phi, final_cfg);
  if (!ev) throw NumericError("optimize_drive: refined optimum lost its local maximum");

  OptimalDrive out{j,
                   best.omega,
                   best.phi,
                   ev->point.tau_max,
                   std::max(best.f, ev->point.f_max),
                   ev->point.delta_max,
                   ev->fit.params};
  return out;
}

OptimalDrive evaluate_known_drive(TotalSpin j, double omega_tilde, double phi,
                                  const ScanConfig& config) {
  auto ev = evaluate_drive(j, omega_tilde, phi, config);
  if (!ev)
    throw NumericError("evaluate_known_drive: fidelity trace has no local maximum in [0, tau_end]");
  return OptimalDrive{j,
                      omega_tilde,
                      phi,
                      ev->point.tau_max,
                      ev->point.f_max,
                      ev->point.delta_max,
                      ev->fit.params};
}

}  // namespace spincat
