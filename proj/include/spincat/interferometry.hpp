// Parity-fringe witness and spectroscopy: exact and analytic fringe curves,
// the mixed-state control, seeded noise ensembles, discrete Fourier spectra
// and the conversion back to laboratory time.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spincat/catfit.hpp"
#include "spincat/dynamics.hpp"
#include "spincat/spin_core.hpp"

namespace spincat {

struct FringeCurve {
  std::vector<double> thetas;
  std::vector<double> variance;  // <(Delta sigma_x^(x)N)^2>, each in [0, 1]
  std::vector<double> stds;      // per-theta ensemble standard deviation, empty if single-shot
};

enum class NoiseTarget { spin_number, drive_strength, nonlinear_energy };
enum class NoiseShape { gaussian, uniform };

/// Which physical quantity fluctuates across trials. Spin number takes
/// Gaussian draws (rounded to integers), drive strength and nonlinear energy
/// take uniform draws on [(1-sigma) nominal, (1+sigma) nominal].
struct NoiseSpec {
  NoiseTarget target = NoiseTarget::spin_number;
  NoiseShape shape = NoiseShape::gaussian;
  double sigma_rel = 0.05;
  int trials = 250;
  std::uint64_t seed = 0;
  int max_batches = 10000;

  void validate() const;
};

/// Rotate-then-measure parity fringe of a single state; no approximation.
FringeCurve fringe_exact(const SpinState& state, std::span<const double> thetas);

/// Gaussian-approximation fringe 1 - exp(-2J theta^2 sin^2 beta)
/// cos^2(2J theta cos beta + gamma').
FringeCurve fringe_analytic(TotalSpin j, double beta, double gamma_prime,
                            std::span<const double> thetas);

/// Fringe of the incoherent two-component mixture; ~1 for paper-scale J.
FringeCurve fringe_mixed(TotalSpin j, double alpha, double beta, double gamma_prime,
                         std::span<const double> thetas);

/// Batch of perturbed values for the targeted quantity. Batches are redrawn
/// until the sample statistics match the requested distribution (mean within
/// 1% of nominal; for Gaussian draws also std within 10% of sigma).
/// Deterministic for a fixed spec.seed.
std::vector<double> draw_noise_ensemble(const NoiseSpec& spec, double nominal);

struct FringeExperiment {
  FringeCurve curve;       // per-theta ensemble mean and standard deviation
  int failed_trials = 0;
  std::vector<double> draws;
};

/// Per trial: perturb the targeted quantity, re-propagate the canonical
/// initial state to the nominal tau_opt of the drive, and measure the exact
/// fringe. Trials run independently on substreams of spec.seed. Throws
/// NumericError when more than 5% of trials fail.
FringeExperiment fringe_experiment(const OptimalDrive& drive, const NoiseSpec& spec,
                                   std::span<const double> thetas,
                                   const StepControl& step = StepControl::unverified());

/// Fourier transform of the ideal fringe residual: three Gaussians with
/// spectral width sigma_s^2 = 1/(4J sin^2 beta), dips at +-4J cos(beta).
Vector spectrum_analytic(TotalSpin j, double beta, const Vector& omega_grid);

/// theta_n = n Delta_theta with Delta_theta = 1/(10 omega_bar) and
/// theta <= 10/sigma_s: the sampling protocol the spectra are defined on.
std::vector<double> spectrum_protocol_thetas(TotalSpin j, double beta);

struct SpectrumResult {
  Vector omegas;
  Vector values;     // sqrt(2/pi) * dtheta * Re[sum_n (variance_n - 1) e^{-i omega theta_n}]
  Vector raw;        // the plain Re[sum ...] without the scale factor
  Vector analytic;   // matching ideal curve; empty unless a beta was supplied
  std::array<double, 2> dip_frequencies = {0.0, 0.0};  // grid minima left/right of 0
  bool protocol_mismatch = false;
};

struct SpectrumOptions {
  Vector omega_grid;                  // empty: +-1.25/(10 dtheta) with 2501 bins
  std::optional<double> analytic_beta;
};

/// Discrete transform of (variance - 1). Linear in the residual; emits a
/// protocol-mismatch flag when the fringe grid is not the uniform protocol
/// grid starting at Delta_theta.
SpectrumResult spectrum_discrete(const FringeCurve& fringe, TotalSpin j,
                                 const SpectrumOptions& options = {});

struct PhysicalTime {
  double seconds;          // tau_opt / (2 chi J)
  double oat_cat_seconds;  // pi / (2 chi), the bare twisting cat time
  double oat_pi_seconds;   // pi / chi, the conservative comparison time
};

/// Converts a rescaled evolution time back to seconds for interaction energy
/// chi (Hz), lambda = 2 chi J.
PhysicalTime physical_time(double tau_opt, double chi_hz, double j);

}  // namespace spincat
