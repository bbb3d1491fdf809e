// Dicke-basis representation of the symmetric subspace of N spin-1/2 particles:
// collective operators, coherent and cat states, parity statistics, Q-functions
// and the geometric quantities of the cat-state family.
#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace spincat {

inline constexpr double kPi = 3.14159265358979323846;

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double x) {
  double y = std::remainder(x, 2.0 * kPi);
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

/// Numerical failure that is not a usage error (propagation breakdown, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Step-size control could not reach the requested tolerance.
struct StepSizeUnderflow : NumericError {
  using NumericError::NumericError;
};

/// A constrained search had no feasible point.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Total spin J = N/2 of a symmetric ensemble of N = 2J spin-1/2 particles.
///
/// Basis ordering is fixed globally: index k = 0..2J holds |J, M = J-k>, i.e.
/// k counts flipped (down) spins. All matrices and amplitude vectors in this
/// library follow this ordering.
class TotalSpin {
 public:
  TotalSpin() = default;  // single spin, J = 1/2
  explicit TotalSpin(int two_j) : two_j_(two_j) {
    if (two_j < 1) throw std::invalid_argument("TotalSpin: need 2J >= 1");
  }
  /// Rejects non-half-integer j.
  static TotalSpin from_j(double j);
  static TotalSpin from_spin_count(int n) { return TotalSpin(n); }

  int two_j() const { return two_j_; }
  double j() const { return 0.5 * two_j_; }
  int dim() const { return two_j_ + 1; }
  int spin_count() const { return two_j_; }
  /// Jz eigenvalue at basis index k.
  double m(int k) const { return 0.5 * (two_j_ - 2 * k); }

  friend bool operator==(TotalSpin a, TotalSpin b) { return a.two_j_ == b.two_j_; }
  friend bool operator!=(TotalSpin a, TotalSpin b) { return !(a == b); }

 private:
  int two_j_ = 1;
};

/// Pure state of the symmetric sector, amplitudes over |J, J-k>.
struct SpinState {
  TotalSpin j;
  CVector amps;

  SpinState(TotalSpin j_, CVector a) : j(j_), amps(std::move(a)) {
    if (amps.size() != j.dim()) throw std::invalid_argument("SpinState: amplitude size mismatch");
  }
  static SpinState zero(TotalSpin j_) { return SpinState(j_, CVector::Zero(j_.dim())); }

  double norm() const { return amps.norm(); }
  SpinState& renormalize();
  /// <this|other>
  Complex overlap(const SpinState& other) const;
};

/// J-dependent collective operators in the Dicke basis. jz and jz^2 are
/// diagonal, jx is symmetric tridiagonal (stored as its superdiagonal band),
/// parity (sigma_x on every spin) is the index-reversal permutation.
struct OperatorSet {
  TotalSpin j;
  Vector jz_diag;   // entries M = J, J-1, ..., -J
  Vector jx_off;    // jx(k, k+1) = 0.5*sqrt((J+M_k)(J-M_k+1))
  Vector jz2_diag;  // entries M^2

  Matrix jz() const;
  Matrix jx() const;
  Matrix jz2() const;
  Matrix parity() const;

  /// y = jx * x for complex vectors (tridiagonal band product).
  void apply_jx(const CVector& x, CVector& y) const;
};

/// Standard angular-momentum matrices for the given J.
OperatorSet build_operators(TotalSpin j);

/// One member of the cat-state family: superposition of CSS(alpha, beta) and
/// its mirror CSS(-alpha, pi-beta), with relative phase gamma_prime between
/// the amplitudes on |J, M> and |J, -M>. The points (0, pi/2) and (pi, pi/2),
/// where the two branches coincide, are excluded.
struct CatParams {
  double alpha = 0.0;        // (-pi, pi]
  double beta = 0.0;         // [0, pi]
  double gamma_prime = 0.0;  // (-pi, pi]
};

/// Throws std::invalid_argument on out-of-range angles or a degenerate point.
void validate(const CatParams& p, double tol = 1e-12);

/// Coherent spin state |alpha, beta>^{(x)2J}; amplitudes are assembled in log
/// space so construction stays finite and normalized up to at least N ~ 1000.
SpinState css_state(TotalSpin j, double alpha, double beta);

/// Normalization constant A(J; alpha, beta, gamma) of the cat family,
/// sqrt(2[1 + cos^2J(alpha) sin^2J(beta) cos(gamma - 2J alpha)]).
double mss_norm(TotalSpin j, double alpha, double beta, double gamma);

/// Normalized (CSS(alpha,beta) + e^{i gamma} CSS(-alpha,pi-beta)) / A with
/// gamma_prime = gamma - 2J alpha as the primary phase parameter.
SpinState mss_state(TotalSpin j, const CatParams& p);

/// Great-circle angle between the two superposed coherent components.
double displacement_angle(double alpha, double beta);

/// exp(-i Jz theta) |s>.
SpinState rotate_z(const SpinState& s, double theta);

struct ParityStats {
  double expectation;  // <X>, X|J,M> = |J,-M>
  double variance;     // 1 - <X>^2
};
ParityStats parity_stats(const SpinState& s);

/// Uniform-in-angle sphere sampling, alpha in (-pi, pi], beta in [0, pi].
struct SphereGrid {
  Vector alphas;
  Vector betas;
  static SphereGrid uniform(int n_alpha = 201, int n_beta = 101);
};

struct QFunction {
  SphereGrid grid;
  Matrix values;  // values(ib, ia) = Q(alphas[ia], betas[ib])

  /// Quadrature of Q over the sphere with weight sin(beta).
  double integral() const;
  /// (ib, ia) of the largest value.
  std::pair<int, int> argmax() const;
};

/// Husimi function Q(alpha,beta) = (2J+1)/(4 pi) |<CSS(alpha,beta)|s>|^2.
QFunction q_function(const SpinState& s, const SphereGrid& grid);

struct PhaseEntry {
  double m;
  double gamma;  // arg(a_{-M}) - arg(a_M), wrapped into (-pi, pi]
  bool defined;
};

/// Relative phases between the |J, M> and |J, -M> amplitudes for M > 0,
/// ordered M = J, J-1, ... Entries where either amplitude magnitude falls
/// below the threshold are flagged undefined.
std::vector<PhaseEntry> relative_phase_profile(const SpinState& s, double amp_threshold = 1e-8);

/// Cached half-log binomial weights for fast repeated CSS overlaps at fixed J.
class CssProjector {
 public:
  explicit CssProjector(TotalSpin j);

  TotalSpin total_spin() const { return j_; }

  /// w[n] = sqrt(C(2J,n)) cos^{2J-n}(beta/2) sin^n(beta/2)
  void weights(double beta, Vector& w) const;

  /// <CSS(alpha, beta)|amps>
  Complex overlap(const CVector& amps, double alpha, double beta) const;

  /// Both branch overlaps in one pass:
  /// first  = <CSS(alpha, beta)|amps>, second = <CSS(-alpha, pi-beta)|amps>.
  std::pair<Complex, Complex> branch_overlaps(const CVector& amps, double alpha, double beta) const;

 private:
  TotalSpin j_;
  Vector half_log_binom_;
};

/// Pieces of the cat-family overlap at fixed (alpha, beta):
/// |<MSS(alpha,beta,g)|amps>|^2 = |u + e^{-ig} w|^2 / (2 (1 + s cos g)).
struct MssOverlapParts {
  Complex u;  // <CSS(alpha, beta)|amps>
  Complex w;  // e^{-2iJ alpha} <CSS(-alpha, pi-beta)|amps>
  double s;   // cos^{2J}(alpha) sin^{2J}(beta)
};

/// Computes the overlap pieces, clamping beta away from pi/2 by 1e-6 when
/// alpha is within 1e-6 of the degenerate axis (0 or +-pi).
MssOverlapParts mss_overlap_parts(const CssProjector& proj, const CVector& amps, double alpha,
                                  double beta);

/// Fidelity of the overlap pieces at a given relative phase.
double mss_fidelity_at(const MssOverlapParts& parts, double gamma_prime);

/// |<MSS(p)|amps>|^2 evaluated without building the cat state. Applies the
/// same near-degenerate-point clamping as the fitter.
double mss_fidelity(const CssProjector& proj, const CVector& amps, const CatParams& p);

}  // namespace spincat
