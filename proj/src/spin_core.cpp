#include "spincat/spin_core.hpp"

#include <algorithm>
#include <cmath>

namespace spincat {

TotalSpin TotalSpin::from_j(double j) {
  double two_j = 2.0 * j;
  double rounded = std::round(two_j);
  if (std::abs(two_j - rounded) > 1e-9 || rounded < 1.0)
    throw std::invalid_argument("TotalSpin: J must be a positive half-integer, got " + std::to_string(j));
  return TotalSpin(static_cast<int>(rounded));
}

SpinState& SpinState::renormalize() {
  double n = amps.norm();
  if (!(n > 0.0)) throw NumericError("SpinState: cannot normalize a zero state");
  amps /= n;
  return *this;
}

Complex SpinState::overlap(const SpinState& other) const {
  if (j != other.j) throw std::invalid_argument("overlap: mismatched total spin");
  return amps.dot(other.amps);  // Eigen dot conjugates the left factor
}

OperatorSet build_operators(TotalSpin j) {
  const int d = j.dim();
  OperatorSet ops{j, Vector(d), Vector(d - 1), Vector(d)};
  for (int k = 0; k < d; ++k) {
    double m = j.m(k);
    ops.jz_diag[k] = m;
    ops.jz2_diag[k] = m * m;
    if (k + 1 < d) ops.jx_off[k] = 0.5 * std::sqrt((j.j() + m) * (j.j() - m + 1.0));
  }
  return ops;
}

Matrix OperatorSet::jz() const { return jz_diag.asDiagonal(); }

Matrix OperatorSet::jz2() const { return jz2_diag.asDiagonal(); }

Matrix OperatorSet::jx() const {
  const int d = j.dim();
  Matrix m = Matrix::Zero(d, d);
  for (int k = 0; k + 1 < d; ++k) {
    m(k, k + 1) = jx_off[k];
    m(k + 1, k) = jx_off[k];
  }
  return m;
}

Matrix OperatorSet::parity() const {
  const int d = j.dim();
  Matrix m = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) m(d - 1 - k, k) = 1.0;
  return m;
}

void OperatorSet::apply_jx(const CVector& x, CVector& y) const {
  const int d = j.dim();
  y.resize(d);
  for (int k = 0; k < d; ++k) {
    Complex acc = 0.0;
    if (k > 0) acc += jx_off[k - 1] * x[k - 1];
    if (k + 1 < d) acc += jx_off[k] * x[k + 1];
    y[k] = acc;
  }
}

void validate(const CatParams& p, double tol) {
  if (p.alpha < -kPi - 1e-12 || p.alpha > kPi + 1e-12)
    throw std::invalid_argument("CatParams: alpha outside (-pi, pi]");
  if (p.beta < -1e-12 || p.beta > kPi + 1e-12)
    throw std::invalid_argument("CatParams: beta outside [0, pi]");
  bool alpha_axis = std::abs(p.alpha) <= tol || std::abs(std::abs(p.alpha) - kPi) <= tol;
  if (alpha_axis && std::abs(p.beta - 0.5 * kPi) <= tol)
    throw std::invalid_argument("CatParams: (alpha, beta) at a degenerate point of the cat family");
}

CssProjector::CssProjector(TotalSpin j) : j_(j), half_log_binom_(j.dim()) {
  const int n = j.spin_count();
  const double lg_all = std::lgamma(n + 1.0);
  for (int k = 0; k <= n; ++k)
    half_log_binom_[k] = 0.5 * (lg_all - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

void CssProjector::weights(double beta, Vector& w) const {
  const int two_j = j_.spin_count();
  w.resize(two_j + 1);
  const double ch = std::cos(0.5 * beta);
  const double sh = std::sin(0.5 * beta);
  const double lc = std::log(std::abs(ch));
  const double ls = std::log(std::abs(sh));
  for (int n = 0; n <= two_j; ++n) {
    double lw = half_log_binom_[n];
    if (n < two_j) lw += (two_j - n) * lc;  // guard 0 * (-inf) at the endpoints
    if (n > 0) lw += n * ls;
    w[n] = std::exp(lw);
  }
}

Complex CssProjector::overlap(const CVector& amps, double alpha, double beta) const {
  thread_local Vector w;
  weights(beta, w);
  const int d = j_.dim();
  Complex acc = 0.0;
  Complex ph = 1.0;
  const Complex step = std::polar(1.0, -alpha);
  for (int k = 0; k < d; ++k) {
    acc += w[k] * ph * amps[k];
    ph *= step;
  }
  return acc;
}

std::pair<Complex, Complex> CssProjector::branch_overlaps(const CVector& amps, double alpha,
                                                          double beta) const {
  thread_local Vector w;
  weights(beta, w);
  const int d = j_.dim();
  // Weights of the mirrored branch are the reverse of w:
  // w_n(pi - beta) = w_{2J-n}(beta).
  Complex u = 0.0, v = 0.0;
  Complex ph = 1.0;
  const Complex step = std::polar(1.0, -alpha);
  for (int k = 0; k < d; ++k) {
    u += w[k] * ph * amps[k];
    v += w[d - 1 - k] * std::conj(ph) * amps[k];
    ph *= step;
  }
  return {u, v};
}

SpinState css_state(TotalSpin j, double alpha, double beta) {
  if (beta < -1e-12 || beta > kPi + 1e-12) throw std::invalid_argument("css_state: beta outside [0, pi]");
  CssProjector proj(j);
  Vector w;
  proj.weights(beta, w);
  const int d = j.dim();
  CVector amps(d);
  Complex ph = 1.0;
  const Complex step = std::polar(1.0, alpha);
  for (int k = 0; k < d; ++k) {
    amps[k] = w[k] * ph;
    ph *= step;
  }
  SpinState s(j, std::move(amps));
  return s.renormalize();
}

namespace {

// cos^{2J}(alpha) * sin^{2J}(beta), sign-correct for odd 2J, underflow-safe.
double branch_overlap_scale(int two_j, double alpha, double beta) {
  const double c = std::cos(alpha);
  const double sb = std::sin(beta);
  if (c == 0.0 || sb <= 0.0) return 0.0;
  double s = std::exp(two_j * (std::log(std::abs(c)) + std::log(sb)));
  if (c < 0.0 && (two_j & 1)) s = -s;
  return s;
}

}  // namespace

double mss_norm(TotalSpin j, double alpha, double beta, double gamma) {
  const double gamma_prime = wrap_angle(gamma - j.spin_count() * alpha);
  const double s = branch_overlap_scale(j.spin_count(), alpha, beta);
  return std::sqrt(std::max(0.0, 2.0 * (1.0 + s * std::cos(gamma_prime))));
}

SpinState mss_state(TotalSpin j, const CatParams& p) {
  validate(p);
  CssProjector proj(j);
  Vector w;
  proj.weights(p.beta, w);
  const int d = j.dim();
  const Complex g = std::polar(1.0, p.gamma_prime);
  CVector amps = CVector::Zero(d);
  Complex ph = 1.0;
  const Complex step = std::polar(1.0, p.alpha);
  for (int n = 0; n < d; ++n) {
    const Complex base = w[n] * ph;
    amps[n] += base;
    amps[d - 1 - n] += base * g;
    ph *= step;
  }
  SpinState s(j, std::move(amps));
  return s.renormalize();
}

double displacement_angle(double alpha, double beta) {
  const double arg = 0.5 * ((1.0 - std::cos(2.0 * alpha)) + (1.0 + std::cos(2.0 * alpha)) * std::cos(2.0 * beta));
  return kPi - std::acos(std::clamp(arg, -1.0, 1.0));
}

SpinState rotate_z(const SpinState& s, double theta) {
  const int d = s.j.dim();
  CVector amps(d);
  Complex ph = std::polar(1.0, -s.j.m(0) * theta);
  const Complex step = std::polar(1.0, theta);
  for (int k = 0; k < d; ++k) {
    amps[k] = s.amps[k] * ph;
    ph *= step;
  }
  return SpinState(s.j, std::move(amps));
}

ParityStats parity_stats(const SpinState& s) {
  const int d = s.j.dim();
  Complex acc = 0.0;
  for (int k = 0; k < d; ++k) acc += std::conj(s.amps[k]) * s.amps[d - 1 - k];
  const double ex = std::clamp(acc.real(), -1.0, 1.0);
  return {ex, std::clamp(1.0 - ex * ex, 0.0, 1.0)};
}

SphereGrid SphereGrid::uniform(int n_alpha, int n_beta) {
  if (n_alpha < 1 || n_beta < 2) throw std::invalid_argument("SphereGrid: grid too small");
  SphereGrid g{Vector(n_alpha), Vector(n_beta)};
  const double da = 2.0 * kPi / n_alpha;
  for (int i = 0; i < n_alpha; ++i) g.alphas[i] = -kPi + da * (i + 1);  // covers (-pi, pi]
  for (int i = 0; i < n_beta; ++i) g.betas[i] = kPi * i / (n_beta - 1);
  return g;
}

QFunction q_function(const SpinState& s, const SphereGrid& grid) {
  const int na = static_cast<int>(grid.alphas.size());
  const int nb = static_cast<int>(grid.betas.size());
  if (na == 0 || nb == 0) throw std::invalid_argument("q_function: empty grid");
  QFunction q{grid, Matrix(nb, na)};
  const CssProjector proj(s.j);
  const double scale = (s.j.dim()) / (4.0 * kPi);
  const int d = s.j.dim();
#pragma omp parallel for schedule(static)
  for (int ib = 0; ib < nb; ++ib) {
    Vector w;
    proj.weights(grid.betas[ib], w);
    for (int ia = 0; ia < na; ++ia) {
      Complex acc = 0.0;
      Complex ph = 1.0;
      const Complex step = std::polar(1.0, -grid.alphas[ia]);
      for (int k = 0; k < d; ++k) {
        acc += w[k] * ph * s.amps[k];
        ph *= step;
      }
      q.values(ib, ia) = scale * std::norm(acc);
    }
  }
  return q;
}

double QFunction::integral() const {
  const int na = static_cast<int>(grid.alphas.size());
  const int nb = static_cast<int>(grid.betas.size());
  const double da = 2.0 * kPi / na;
  const double db = (grid.betas[nb - 1] - grid.betas[0]) / (nb - 1);
  double total = 0.0;
  for (int ib = 0; ib < nb; ++ib) {
    const double wb = (ib == 0 || ib == nb - 1) ? 0.5 : 1.0;  // trapezoid in beta
    total += wb * std::sin(grid.betas[ib]) * values.row(ib).sum();
  }
  return total * da * db;
}

std::pair<int, int> QFunction::argmax() const {
  int ib = 0, ia = 0;
  values.maxCoeff(&ib, &ia);
  return {ib, ia};
}

std::vector<PhaseEntry> relative_phase_profile(const SpinState& s, double amp_threshold) {
  const int d = s.j.dim();
  std::vector<PhaseEntry> out;
  for (int k = 0; s.j.m(k) > 0.0; ++k) {
    const Complex up = s.amps[k];            // amplitude on |J, M>
    const Complex dn = s.amps[d - 1 - k];    // amplitude on |J, -M>
    PhaseEntry e{s.j.m(k), 0.0, std::abs(up) > amp_threshold && std::abs(dn) > amp_threshold};
    if (e.defined) e.gamma = wrap_angle(std::arg(dn) - std::arg(up));
    out.push_back(e);
  }
  return out;
}

MssOverlapParts mss_overlap_parts(const CssProjector& proj, const CVector& amps, double alpha,
                                  double beta) {
  // Clamp beta away from pi/2 when alpha sits on the degenerate axis.
  const bool alpha_axis = std::abs(alpha) <= 1e-6 || std::abs(std::abs(alpha) - kPi) <= 1e-6;
  if (alpha_axis && std::abs(beta - 0.5 * kPi) < 1e-6)
    beta = 0.5 * kPi + (beta >= 0.5 * kPi ? 1e-6 : -1e-6);

  const auto [u, v] = proj.branch_overlaps(amps, alpha, beta);
  const int two_j = proj.total_spin().spin_count();
  return {u, std::polar(1.0, -two_j * alpha) * v, branch_overlap_scale(two_j, alpha, beta)};
}

double mss_fidelity_at(const MssOverlapParts& parts, double gamma_prime) {
  const double denom = 2.0 * (1.0 + parts.s * std::cos(gamma_prime));
  if (!(denom > 1e-300)) return 0.0;
  return std::min(1.0, std::norm(parts.u + std::polar(1.0, -gamma_prime) * parts.w) / denom);
}

double mss_fidelity(const CssProjector& proj, const CVector& amps, const CatParams& p) {
  return mss_fidelity_at(mss_overlap_parts(proj, amps, p.alpha, p.beta), p.gamma_prime);
}

}  // namespace spincat
