// Norm-preserving propagation under the rescaled driven-twisting generator
// h(tau) = Jz^2/(2J) + r Jx cos(omega~ tau + phi).
//
// Each step applies exp(-i dtau h(tau_mid)) exactly (second-order Magnus).
// Two interchangeable step kernels are provided: a Chebyshev expansion of the
// step unitary driven by tridiagonal matvecs (default), and an
// eigendecomposition of the tridiagonal step generator kept as the slower
// reference. Both are compared in the test and benchmark targets.
#pragma once

#include <memory>
#include <span>
#include <vector>

#include "spincat/spin_core.hpp"

namespace spincat {

struct DriveParams {
  TotalSpin j;
  double omega_tilde = 0.0;  // omega / lambda
  double phi = 0.0;
  double r = 1.0;            // Omega / lambda, >= 0

  double cosine_at(double tau) const { return std::cos(omega_tilde * tau + phi); }
};

enum class StepKernel { chebyshev, eigendecomposition };

struct StepControl {
  double dtau = 1e-3;
  /// Bound on the final-state 2-norm error vs a half-step reference. The step
  /// size is halved until the bound holds; <= 0 disables the verification.
  double tolerance = 1e-8;
  double record_every = 0.01;
  double min_dtau = 1e-7;
  StepKernel kernel = StepKernel::chebyshev;

  static StepControl unverified(double dtau_ = 1e-3) {
    StepControl c;
    c.dtau = dtau_;
    c.tolerance = 0.0;
    return c;
  }
};

struct Trajectory {
  std::vector<double> taus;
  std::vector<SpinState> states;
  double dtau_used = 0.0;
  double error_estimate = 0.0;  // final-state half-step difference, 0 if unverified
  long steps = 0;

  const SpinState& final_state() const { return states.back(); }
};

/// Dense h(tau) for inspection and oracles; the propagator works on the bands.
Matrix hamiltonian_at(const OperatorSet& ops, const DriveParams& drive, double tau);

/// CSS(0, pi/2), the x-polarized product state all runs start from.
SpinState canonical_initial(TotalSpin j);

/// Low-level stepping: advances a state to increasing times with a fixed
/// nominal step, splitting each advance into equal substeps of at most dtau.
class Stepper {
 public:
  Stepper(SpinState initial, const DriveParams& drive, double dtau,
          StepKernel kernel = StepKernel::chebyshev, double start_tau = 0.0);
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;

  void advance_to(double tau);
  const SpinState& state() const { return state_; }
  double tau() const { return tau_; }
  long steps() const { return steps_; }

 private:
  struct Kernel;
  SpinState state_;
  DriveParams drive_;
  double dtau_;
  double tau_ = 0.0;
  long steps_ = 0;
  std::unique_ptr<Kernel> kernel_;
};

/// Propagates recording at multiples of ctl.record_every (tau = 0 included,
/// tau_end always recorded). Throws StepSizeUnderflow when the verification
/// tolerance cannot be met above ctl.min_dtau.
Trajectory propagate(const SpinState& initial, const DriveParams& drive, double tau_end,
                     const StepControl& ctl = {});

/// Same contract, recording exactly at the given increasing times.
Trajectory propagate_at(const SpinState& initial, const DriveParams& drive,
                        std::span<const double> record_taus, const StepControl& ctl = {});

}  // namespace spincat
