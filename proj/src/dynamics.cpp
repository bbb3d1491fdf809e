#include "spincat/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <Eigen/Dense>

namespace spincat {

Matrix hamiltonian_at(const OperatorSet& ops, const DriveParams& drive, double tau) {
  const int d = ops.j.dim();
  const double inv2j = 1.0 / ops.j.spin_count();
  const double c = drive.r * drive.cosine_at(tau);
  Matrix h = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    h(k, k) = ops.jz2_diag[k] * inv2j;
    if (k + 1 < d) {
      h(k, k + 1) = c * ops.jx_off[k];
      h(k + 1, k) = c * ops.jx_off[k];
    }
  }
  return h;
}

SpinState canonical_initial(TotalSpin j) { return css_state(j, 0.0, 0.5 * kPi); }

namespace {

constexpr Complex kImag{0.0, 1.0};

// One midpoint-exponential step psi <- exp(-i dt (D + c K)) psi, where
// D = Jz^2/(2J) (diagonal) and K = Jx (tridiagonal band).
struct StepWorkspace {
  Vector diag;      // D entries
  Vector off;       // K band
  double two_j;
  double r;

  // Chebyshev scaling H~ = (H - center)/half with fixed worst-case bounds.
  double center = 0.0;
  double half = 0.0;
  Vector scaled_diag;         // (D - center)/half
  Vector scaled_off;          // K/half
  double coeff_dt = -1.0;     // step size the coefficients were built for
  std::vector<double> bessel; // J_k(half*dt), k = 0..K
  CVector t0, t1, t2, acc;

  explicit StepWorkspace(const OperatorSet& ops, const DriveParams& drive)
      : diag(ops.jz2_diag / ops.j.spin_count()), off(ops.jx_off), two_j(ops.j.spin_count()), r(drive.r) {
    // Gershgorin bounds over the whole drive range |c| <= r.
    double lo = diag[0], hi = diag[0];
    const int d = static_cast<int>(diag.size());
    for (int k = 0; k < d; ++k) {
      double row = 0.0;
      if (k > 0) row += std::abs(off[k - 1]);
      if (k + 1 < d) row += std::abs(off[k]);
      lo = std::min(lo, diag[k] - r * row);
      hi = std::max(hi, diag[k] + r * row);
    }
    center = 0.5 * (hi + lo);
    half = 0.5 * (hi - lo) * 1.0000001 + 1e-12;
    scaled_diag = (diag.array() - center) / half;
    scaled_off = off / half;
  }

  bool diagonal_only() const { return r == 0.0 || off.size() == 0; }

  void build_coeffs(double dt) {
    if (dt == coeff_dt) return;
    coeff_dt = dt;
    bessel.clear();
    const double z = half * dt;
    for (int k = 0; k < 4000; ++k) {
      double b = std::cyl_bessel_j(k, z);
      bessel.push_back(b);
      if (k > z + 8 && std::abs(b) < 1e-18) break;
    }
  }

  // y = H~(c) x with c the drive cosine factor.
  void apply_scaled(double c, const CVector& x, CVector& y) const {
    const int d = static_cast<int>(diag.size());
    y.resize(d);
    const double* sd = scaled_diag.data();
    const double* so = scaled_off.data();
    const Complex* xv = x.data();
    Complex* yv = y.data();
    yv[0] = sd[0] * xv[0] + (d > 1 ? c * so[0] * xv[1] : Complex{0.0, 0.0});
    for (int k = 1; k + 1 < d; ++k)
      yv[k] = sd[k] * xv[k] + c * (so[k - 1] * xv[k - 1] + so[k] * xv[k + 1]);
    if (d > 1) yv[d - 1] = sd[d - 1] * xv[d - 1] + c * so[d - 2] * xv[d - 2];
  }

  void step_chebyshev(CVector& psi, double c, double dt) {
    build_coeffs(dt);
    const int terms = static_cast<int>(bessel.size());
    t0 = psi;
    apply_scaled(c, t0, t1);
    acc = bessel[0] * t0;
    Complex ik = -kImag;  // (-i)^k
    if (terms > 1) acc += 2.0 * bessel[1] * ik * t1;
    for (int k = 2; k < terms; ++k) {
      apply_scaled(c, t1, t2);
      t2 = 2.0 * t2 - t0;
      std::swap(t0, t1);
      std::swap(t1, t2);
      ik *= -kImag;
      acc += 2.0 * bessel[k] * ik * t1;
    }
    psi = std::polar(1.0, -center * dt) * acc;
  }

  void step_eigendecomposition(CVector& psi, double c, double dt) {
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.computeFromTridiagonal(diag, c * off, Eigen::ComputeEigenvectors);
    const Matrix& v = es.eigenvectors();
    const Vector& evals = es.eigenvalues();
    Vector cr = v.transpose() * psi.real();
    Vector ci = v.transpose() * psi.imag();
    CVector coeffs(psi.size());
    for (int k = 0; k < coeffs.size(); ++k)
      coeffs[k] = Complex(cr[k], ci[k]) * std::polar(1.0, -evals[k] * dt);
    Vector pr = v * coeffs.real().matrix();
    Vector pim = v * coeffs.imag().matrix();
    for (int k = 0; k < psi.size(); ++k) psi[k] = Complex(pr[k], pim[k]);
  }

  void step_diagonal(CVector& psi, double dt) {
    for (int k = 0; k < psi.size(); ++k) psi[k] *= std::polar(1.0, -diag[k] * dt);
  }
};

}  // namespace

struct Stepper::Kernel {
  StepWorkspace ws;
  StepKernel which;
  Kernel(const OperatorSet& ops, const DriveParams& drive, StepKernel k) : ws(ops, drive), which(k) {}
};

Stepper::Stepper(SpinState initial, const DriveParams& drive, double dtau, StepKernel kernel,
                 double start_tau)
    : state_(std::move(initial)), drive_(drive), dtau_(dtau), tau_(start_tau) {
  if (state_.j != drive.j) throw std::invalid_argument("Stepper: state and drive total spin differ");
  if (!(dtau > 0.0)) throw std::invalid_argument("Stepper: dtau must be positive");
  if (drive.r < 0.0) throw std::invalid_argument("Stepper: drive strength r must be >= 0");
  kernel_ = std::make_unique<Kernel>(build_operators(drive.j), drive, kernel);
}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

void Stepper::advance_to(double tau) {
  if (tau < tau_ - 1e-12) throw std::invalid_argument("Stepper: cannot advance backwards");
  const double span = tau - tau_;
  if (span <= 0.0) return;
  const long n = std::max(1L, static_cast<long>(std::ceil(span / dtau_ - 1e-12)));
  const double dt = span / n;
  StepWorkspace& ws = kernel_->ws;
  for (long i = 0; i < n; ++i) {
    const double mid = tau_ + (i + 0.5) * dt;
    if (ws.diagonal_only()) {
      ws.step_diagonal(state_.amps, dt);
    } else {
      const double c = drive_.r * drive_.cosine_at(mid);
      if (kernel_->which == StepKernel::chebyshev)
        ws.step_chebyshev(state_.amps, c, dt);
      else
        ws.step_eigendecomposition(state_.amps, c, dt);
    }
  }
  steps_ += n;
  tau_ = tau;
}

namespace {

Trajectory run_once(const SpinState& initial, const DriveParams& drive,
                    std::span<const double> record_taus, double dtau, StepKernel kernel) {
  Trajectory out;
  out.dtau_used = dtau;
  Stepper stepper(initial, drive, dtau, kernel);
  out.taus.reserve(record_taus.size());
  out.states.reserve(record_taus.size());
  for (double t : record_taus) {
    stepper.advance_to(t);
    out.taus.push_back(t);
    out.states.push_back(stepper.state());
  }
  out.steps = stepper.steps();
  return out;
}

}  // namespace

Trajectory propagate_at(const SpinState& initial, const DriveParams& drive,
                        std::span<const double> record_taus, const StepControl& ctl) {
  if (record_taus.empty()) throw std::invalid_argument("propagate_at: no recording times");
  double prev = -1e-300;
  for (double t : record_taus) {
    if (t < 0.0 || t <= prev - 1e-12) throw std::invalid_argument("propagate_at: times must be nonnegative and increasing");
    prev = t;
  }

  if (ctl.tolerance <= 0.0) return run_once(initial, drive, record_taus, ctl.dtau, ctl.kernel);

  Trajectory coarse = run_once(initial, drive, record_taus, ctl.dtau, ctl.kernel);
  double dtau = ctl.dtau;
  while (true) {
    Trajectory fine = run_once(initial, drive, record_taus, 0.5 * dtau, ctl.kernel);
    const double err = (coarse.final_state().amps - fine.final_state().amps).norm();
    if (err <= ctl.tolerance) {
      fine.error_estimate = err;
      return fine;
    }
    dtau *= 0.5;
    if (0.5 * dtau < ctl.min_dtau) {
      std::ostringstream msg;
      msg << "propagate: tolerance " << ctl.tolerance << " unreachable; at dtau = " << 0.5 * dtau
          << " the half-step error is still " << err << " (tau_end = " << record_taus.back() << ")";
      throw StepSizeUnderflow(msg.str());
    }
    coarse = std::move(fine);
  }
}

Trajectory propagate(const SpinState& initial, const DriveParams& drive, double tau_end,
                     const StepControl& ctl) {
  if (!(tau_end > 0.0)) throw std::invalid_argument("propagate: tau_end must be positive");
  std::vector<double> taus;
  taus.push_back(0.0);
  const double step = ctl.record_every > 0.0 ? ctl.record_every : tau_end;
  for (long i = 1; i * step < tau_end - 1e-12; ++i) taus.push_back(i * step);
  taus.push_back(tau_end);
  return propagate_at(initial, drive, taus, ctl);
}

}  // namespace spincat
