#include "spincat/interferometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spincat/rng.hpp"

namespace spincat {

namespace {

bool uniform_from_origin(std::span<const double> thetas, double* dtheta) {
  if (thetas.size() < 2) return false;
  const double dt = thetas[1] - thetas[0];
  if (!(dt > 0.0)) return false;
  if (std::abs(thetas[0] - dt) > 1e-9 * std::max(1.0, std::abs(dt))) return false;
  for (std::size_t i = 1; i < thetas.size(); ++i)
    if (std::abs(thetas[i] - (i + 1) * dt) > 1e-7 * std::max(1.0, thetas[i])) return false;
  *dtheta = dt;
  return true;
}

double pow_2j(double base, int two_j) {
  if (base == 0.0) return 0.0;
  double mag = std::exp(two_j * std::log(std::abs(base)));
  return (base < 0.0 && (two_j & 1)) ? -mag : mag;
}

}  // namespace

FringeCurve fringe_exact(const SpinState& state, std::span<const double> thetas) {
  const int d = state.j.dim();
  // <X>(theta) = Re sum_k conj(a_k) a_{2J-k} e^{2 i M_k theta}
  CVector cross(d);
  for (int k = 0; k < d; ++k) cross[k] = std::conj(state.amps[k]) * state.amps[d - 1 - k];

  FringeCurve out;
  out.thetas.assign(thetas.begin(), thetas.end());
  out.variance.resize(thetas.size());

  double dtheta = 0.0;
  if (uniform_from_origin(thetas, &dtheta)) {
    // March the per-k phases instead of re-evaluating exponentials.
    CVector phase(d), step(d);
    for (int k = 0; k < d; ++k) {
      step[k] = std::polar(1.0, 2.0 * state.j.m(k) * dtheta);
      phase[k] = step[k];
    }
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      Complex acc = 0.0;
      for (int k = 0; k < d; ++k) acc += cross[k] * phase[k];
      const double ex = std::clamp(acc.real(), -1.0, 1.0);
      out.variance[i] = std::clamp(1.0 - ex * ex, 0.0, 1.0);
      for (int k = 0; k < d; ++k) phase[k] *= step[k];
      if ((i & 0xFFF) == 0xFFF)
        for (int k = 0; k < d; ++k) phase[k] /= std::abs(phase[k]);
    }
  } else {
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      Complex acc = 0.0;
      for (int k = 0; k < d; ++k) acc += cross[k] * std::polar(1.0, 2.0 * state.j.m(k) * thetas[i]);
      const double ex = std::clamp(acc.real(), -1.0, 1.0);
      out.variance[i] = std::clamp(1.0 - ex * ex, 0.0, 1.0);
    }
  }
  return out;
}

FringeCurve fringe_analytic(TotalSpin j, double beta, double gamma_prime,
                            std::span<const double> thetas) {
  FringeCurve out;
  out.thetas.assign(thetas.begin(), thetas.end());
  out.variance.resize(thetas.size());
  const double jj = j.j();
  const double s2 = std::sin(beta) * std::sin(beta);
  const double cb = std::cos(beta);
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double th = thetas[i];
    const double envelope = std::exp(-2.0 * jj * th * th * s2);
    const double osc = std::cos(2.0 * jj * th * cb + gamma_prime);
    out.variance[i] = std::clamp(1.0 - envelope * osc * osc, 0.0, 1.0);
  }
  return out;
}

FringeCurve fringe_mixed(TotalSpin j, double alpha, double beta, double gamma_prime,
                         std::span<const double> thetas) {
  FringeCurve out;
  out.thetas.assign(thetas.begin(), thetas.end());
  out.variance.resize(thetas.size());
  const int two_j = j.spin_count();
  const double sin_b = pow_2j(std::sin(beta), two_j);
  const double denom = 2.0 * (1.0 + pow_2j(std::cos(alpha), two_j) * sin_b * std::cos(gamma_prime));
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double th = thetas[i];
    const double num = (pow_2j(std::cos(th + alpha), two_j) + pow_2j(std::cos(th - alpha), two_j)) * sin_b;
    out.variance[i] = std::clamp(1.0 - num / denom, 0.0, 1.0);
  }
  return out;
}

void NoiseSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("NoiseSpec: trials must be >= 1");
  if (sigma_rel < 0.0) throw std::invalid_argument("NoiseSpec: sigma_rel must be >= 0");
  if (target == NoiseTarget::spin_number && shape != NoiseShape::gaussian)
    throw std::invalid_argument("NoiseSpec: spin-number noise is Gaussian");
  if (target != NoiseTarget::spin_number && shape != NoiseShape::uniform)
    throw std::invalid_argument("NoiseSpec: drive-strength and nonlinear-energy noise are uniform");
}

std::vector<double> draw_noise_ensemble(const NoiseSpec& spec, double nominal) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<double> draws(spec.trials);

  for (int batch = 0; batch < spec.max_batches; ++batch) {
    if (spec.shape == NoiseShape::gaussian) {
      const double sigma = spec.sigma_rel * nominal;
      bool valid = true;
      for (auto& x : draws) {
        x = std::round(nominal + sigma * rng.normal());
        if (x < 1.0) valid = false;  // fewer than one spin is not a trial
      }
      if (!valid) continue;
      const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / spec.trials;
      double var = 0.0;
      for (double x : draws) var += (x - mean) * (x - mean);
      const double sd = std::sqrt(var / spec.trials);
      if (std::abs(mean - nominal) > 0.01 * nominal) continue;
      if (sigma > 0.0 && std::abs(sd - sigma) > 0.1 * sigma) continue;
      return draws;
    } else {
      for (auto& x : draws) x = nominal * (1.0 + spec.sigma_rel * (2.0 * rng.uniform01() - 1.0));
      const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / spec.trials;
      if (std::abs(mean - nominal) > 0.01 * std::abs(nominal)) continue;
      return draws;
    }
  }
  std::ostringstream msg;
  msg << "draw_noise_ensemble: no batch met the sample-statistics constraints within "
      << spec.max_batches << " redraws";
  throw NumericError(msg.str());
}

FringeExperiment fringe_experiment(const OptimalDrive& drive, const NoiseSpec& spec,
                                   std::span<const double> thetas, const StepControl& step) {
  spec.validate();
  const double nominal = spec.target == NoiseTarget::spin_number
                             ? static_cast<double>(drive.j.spin_count())
                             : 1.0;
  FringeExperiment out;
  out.draws = draw_noise_ensemble(spec, nominal);

  const int nt = static_cast<int>(thetas.size());
  std::vector<char> failed(spec.trials, 0);
  std::vector<double> mean(nt, 0.0), m2(nt, 0.0);
  long seen = 0;

  // Trials are independent; run them in parallel chunks but fold the sums in
  // trial order so the result does not depend on scheduling.
  const int chunk = std::clamp(static_cast<int>(32'000'000 / (8 * std::max(nt, 1))), 1, spec.trials);
  Matrix block(chunk, nt);
  for (int base = 0; base < spec.trials; base += chunk) {
    const int count = std::min(chunk, spec.trials - base);
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < count; ++t) {
      const int trial = base + t;
      try {
        TotalSpin jt = drive.j;
        DriveParams d{jt, drive.omega_opt, drive.phi_opt, 1.0};
        double tau_end = drive.tau_opt;
        switch (spec.target) {
          case NoiseTarget::spin_number: {
            jt = TotalSpin(static_cast<int>(out.draws[trial]));
            d = DriveParams{jt, drive.omega_opt, drive.phi_opt, 1.0};
            break;
          }
          case NoiseTarget::drive_strength:
            d.r = out.draws[trial];
            break;
          case NoiseTarget::nonlinear_energy: {
            // lambda -> c lambda at fixed lab time and drive: tau = c tau_opt,
            // omega~ = omega~/c, r unchanged.
            const double c = out.draws[trial];
            d.omega_tilde = drive.omega_opt / c;
            tau_end = c * drive.tau_opt;
            break;
          }
        }
        Stepper stepper(canonical_initial(jt), d, step.dtau, step.kernel);
        stepper.advance_to(tau_end);
        FringeCurve fc = fringe_exact(stepper.state(), thetas);
        for (int i = 0; i < nt; ++i) block(t, i) = fc.variance[i];
      } catch (const std::exception&) {
        failed[trial] = 1;
      }
    }
    for (int t = 0; t < count; ++t) {
      if (failed[base + t]) continue;
      ++seen;
      for (int i = 0; i < nt; ++i) {
        const double delta = block(t, i) - mean[i];
        mean[i] += delta / seen;
        m2[i] += delta * (block(t, i) - mean[i]);
      }
    }
  }

  out.failed_trials = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
  if (out.failed_trials * 20 > spec.trials) {
    std::ostringstream msg;
    msg << "fringe_experiment: " << out.failed_trials << " of " << spec.trials << " trials failed";
    throw NumericError(msg.str());
  }

  out.curve.thetas.assign(thetas.begin(), thetas.end());
  out.curve.variance.resize(nt);
  out.curve.stds.resize(nt);
  const int good = spec.trials - out.failed_trials;
  for (int i = 0; i < nt; ++i) {
    out.curve.variance[i] = mean[i];
    out.curve.stds[i] = good > 1 ? std::sqrt(std::max(0.0, m2[i]) / (good - 1)) : 0.0;
  }
  return out;
}

Vector spectrum_analytic(TotalSpin j, double beta, const Vector& omega_grid) {
  if (!(beta > 0.0) || !(beta < kPi))
    throw std::invalid_argument("spectrum_analytic: beta must lie in (0, pi)");
  const double jj = j.j();
  const double sigma2 = 1.0 / (4.0 * jj * std::sin(beta) * std::sin(beta));
  const double sigma = std::sqrt(sigma2);
  const double omega_bar = 4.0 * jj * std::cos(beta);
  Vector out(omega_grid.size());
  for (int i = 0; i < omega_grid.size(); ++i) {
    const double w = omega_grid[i];
    out[i] = -(sigma / 4.0) * (2.0 * std::exp(-0.5 * sigma2 * w * w) +
                               std::exp(-0.5 * sigma2 * (w - omega_bar) * (w - omega_bar)) +
                               std::exp(-0.5 * sigma2 * (w + omega_bar) * (w + omega_bar)));
  }
  return out;
}

std::vector<double> spectrum_protocol_thetas(TotalSpin j, double beta) {
  const double jj = j.j();
  const double omega_bar = 4.0 * jj * std::cos(beta);
  if (!(omega_bar > 0.0))
    throw std::invalid_argument("spectrum_protocol_thetas: need cos(beta) > 0");
  const double dtheta = 1.0 / (10.0 * omega_bar);
  // Ten decay widths of the fringe envelope: theta_max = 10 / sigma_omega with
  // the spectral width sigma_omega = sqrt(4 J sin^2 beta). Sampling further
  // only adds decayed signal and starts resolving the individual even-integer
  // frequency lines, which breaks the correspondence with the ideal spectrum.
  const double theta_max = 10.0 * std::sqrt(1.0 / (4.0 * jj * std::sin(beta) * std::sin(beta)));
  const long n_max = static_cast<long>(std::floor(theta_max / dtheta + 1e-9));
  std::vector<double> thetas(n_max);
  for (long n = 1; n <= n_max; ++n) thetas[n - 1] = n * dtheta;
  return thetas;
}

SpectrumResult spectrum_discrete(const FringeCurve& fringe, TotalSpin j,
                                 const SpectrumOptions& options) {
  if (fringe.thetas.size() < 2)
    throw std::invalid_argument("spectrum_discrete: need at least two fringe samples");
  SpectrumResult out;

  double dtheta = 0.0;
  out.protocol_mismatch = !uniform_from_origin(fringe.thetas, &dtheta);
  if (out.protocol_mismatch) dtheta = fringe.thetas[1] - fringe.thetas[0];

  if (options.omega_grid.size() > 0) {
    out.omegas = options.omega_grid;
  } else {
    const double omega_bar = 1.0 / (10.0 * dtheta);  // the protocol encodes the fringe frequency
    // Bin at half the window resolution 2 pi / theta_max; finer bins would
    // only sample the resolution-limited smoothing.
    const double bin = kPi / fringe.thetas.back();
    const int half = std::max(16, static_cast<int>(std::ceil(1.25 * omega_bar / bin)));
    out.omegas.resize(2 * half + 1);
    for (int i = 0; i <= 2 * half; ++i) out.omegas[i] = (i - half) * bin;
  }

  const int nw = static_cast<int>(out.omegas.size());
  const int nt = static_cast<int>(fringe.thetas.size());
  out.raw.resize(nw);
  const double scale = std::sqrt(2.0 / kPi) * dtheta;

#pragma omp parallel for schedule(static)
  for (int iw = 0; iw < nw; ++iw) {
    const Complex step = std::polar(1.0, -out.omegas[iw] * dtheta);
    Complex phase = std::polar(1.0, -out.omegas[iw] * fringe.thetas[0]);
    Complex acc = 0.0;
    if (!out.protocol_mismatch) {
      for (int n = 0; n < nt; ++n) {
        acc += (fringe.variance[n] - 1.0) * phase;
        phase *= step;
      }
    } else {
      for (int n = 0; n < nt; ++n)
        acc += (fringe.variance[n] - 1.0) * std::polar(1.0, -out.omegas[iw] * fringe.thetas[n]);
    }
    out.raw[iw] = acc.real();
  }
  out.values = scale * out.raw;

  if (options.analytic_beta) out.analytic = spectrum_analytic(j, *options.analytic_beta, out.omegas);

  // Dominant dips on each side of zero, skipping the central feature.
  const double omega_bar_est = 1.0 / (10.0 * dtheta);
  auto deepest = [&](bool positive) {
    int best = -1;
    for (int i = 1; i + 1 < nw; ++i) {
      const double w = out.omegas[i];
      if (positive ? w < 0.3 * omega_bar_est : w > -0.3 * omega_bar_est) continue;
      if (out.values[i] <= out.values[i - 1] && out.values[i] <= out.values[i + 1])
        if (best < 0 || out.values[i] < out.values[best]) best = i;
    }
    return best;
  };
  const int lo = deepest(false), hi = deepest(true);
  out.dip_frequencies = {lo >= 0 ? out.omegas[lo] : 0.0, hi >= 0 ? out.omegas[hi] : 0.0};
  return out;
}

PhysicalTime physical_time(double tau_opt, double chi_hz, double j) {
  if (!(chi_hz > 0.0)) throw std::invalid_argument("physical_time: chi must be positive");
  if (!(j > 0.0)) throw std::invalid_argument("physical_time: J must be positive");
  return {tau_opt / (2.0 * chi_hz * j), kPi / (2.0 * chi_hz), kPi / chi_hz};
}

}  // namespace spincat
