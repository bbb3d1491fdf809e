// Fitting evolved states to the cat-state family, locating the first fidelity
// maximum in time, and scanning/refining the driving parameters.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spincat/dynamics.hpp"
#include "spincat/spin_core.hpp"

namespace spincat {

struct FitResult {
  double fidelity = 0.0;
  CatParams params;
  double delta0 = 0.0;  // displacement_angle(params)
  bool converged = true;
};

/// Basin hopping around Nelder-Mead descents on (alpha, beta, gamma'), with
/// reflective bounds and deterministic seeding. After every descent the
/// relative phase is polished to its exact stationary value at the descent's
/// (alpha, beta), which keeps gamma'_0 noise-free for parity-even states.
struct BasinHopConfig {
  int hops = 50;
  double temperature = 0.1;                      // Metropolis scale, fidelity units
  std::array<double, 3> perturb = {0.3, 0.3, 0.6};  // hop scales (rad)
  std::uint64_t seed = 0;
  int nm_max_iter = 400;
  double nm_f_tol = 1e-13;
  std::vector<CatParams> warm_starts;            // tried before the built-in seed grid

  /// Cheap settings for dense traces and scans (relies on warm starts).
  static BasinHopConfig fast() {
    BasinHopConfig c;
    c.hops = 4;
    c.nm_max_iter = 250;
    return c;
  }
};

/// Reusable fitter; caches the CSS projector for one J.
class MssFitter {
 public:
  MssFitter(TotalSpin j, BasinHopConfig config);

  FitResult fit(const SpinState& state) const;
  FitResult fit(const SpinState& state, std::span<const CatParams> warm_starts) const;

  /// Fidelity of a single family member against a state (clamped evaluation).
  double fidelity(const SpinState& state, const CatParams& p) const;

  const BasinHopConfig& config() const { return config_; }

 private:
  TotalSpin j_;
  BasinHopConfig config_;
  CssProjector proj_;
};

FitResult fit_mss(const SpinState& state, const BasinHopConfig& config = {});

struct FidelityTrace {
  DriveParams drive;
  std::vector<double> taus;
  std::vector<FitResult> fits;
  std::vector<SpinState> states;  // empty unless keep_states
};

/// Fits trajectory snapshots on the given grid, warm-starting each sample
/// from its predecessor's optimum.
FidelityTrace fidelity_trace(const DriveParams& drive, std::span<const double> tau_grid,
                             const BasinHopConfig& fit_config, const StepControl& step = {},
                             bool keep_states = true);

struct LocalMax {
  double tau = 0.0;
  double value = 0.0;
  int index = 0;  // grid index of the interior sample that exceeded both neighbors
};

/// First interior sample whose value exceeds both neighbors (in temporal
/// order), refined by golden-section search between its neighbors down to
/// tau_resolution. Returns nullopt for monotone traces. `eval` must return
/// the traced quantity at an arbitrary tau inside the bracket.
std::optional<LocalMax> first_local_max(std::span<const double> taus, std::span<const double> values,
                                        const std::function<double(double)>& eval,
                                        double tau_resolution = 1e-3);

struct ScanConfig {
  double tau_end = 45.0;
  double trace_dtau = 0.05;
  double refine_resolution = 1e-3;
  double r = 1.0;
  StepControl step = StepControl::unverified();
  BasinHopConfig fit = BasinHopConfig::fast();
  std::uint64_t seed = 0;
};

struct DriveScanPoint {
  double omega_tilde = 0.0;
  double phi = 0.0;
  double tau_max = 0.0;
  double f_max = 0.0;
  double delta_max = 0.0;
  bool ok = false;
  std::string error;  // per-point failure, scan continues
};

/// Full evaluation of one (omega~, phi) cell: trace, first local maximum,
/// golden-section refinement, final fit at the refined time.
struct DriveEvaluation {
  DriveScanPoint point;
  FitResult fit;
  SpinState state_at_max;
};

std::optional<DriveEvaluation> evaluate_drive(TotalSpin j, double omega_tilde, double phi,
                                              const ScanConfig& config = {});

struct ScanResult {
  Vector omegas;
  Vector phis;
  std::vector<DriveScanPoint> points;  // row-major, omega outer / phi inner

  const DriveScanPoint& at(int io, int ip) const { return points[io * phis.size() + ip]; }
};

/// Embarrassingly parallel scan over the drive grid; per-point failures are
/// recorded and the scan continues. Deterministic for a fixed config.seed
/// regardless of thread count.
ScanResult scan_drive(TotalSpin j, const Vector& omega_grid, const Vector& phi_grid,
                      const ScanConfig& config = {});

struct OptimalDrive {
  TotalSpin j;
  double omega_opt = 0.0;
  double phi_opt = 0.0;
  double tau_opt = 0.0;
  double f_opt = 0.0;
  double delta_opt = 0.0;
  CatParams angles_opt;
};

struct OptimizeConfig {
  double omega_min = 0.005 * kPi;
  double omega_max = 0.05 * kPi;
  int omega_count = 51;
  double phi_min = -0.05 * kPi;
  double phi_max = 0.05 * kPi;
  int phi_count = 51;
  double delta_min = 0.4 * kPi;   // admissibility constraint on delta_max
  double refine_step = kPi * 1e-4;
  int refine_points = 7;          // refinement grids are refine_points^2
  int top_k = 2;                  // coarse peaks taken into refinement
  ScanConfig scan;
};

/// Coarse scan plus iterative local grid refinement down to refine_step,
/// maximizing f_max subject to delta_max > delta_min. Throws InfeasibleError
/// when no scanned point satisfies the constraint.
OptimalDrive optimize_drive(TotalSpin j, const OptimizeConfig& config = {});

/// Evaluates a known (omega~, phi) pair and packages it as an OptimalDrive
/// (no constraint applied). Throws NumericError when no local maximum exists.
OptimalDrive evaluate_known_drive(TotalSpin j, double omega_tilde, double phi,
                                  const ScanConfig& config = {});

}  // namespace spincat
