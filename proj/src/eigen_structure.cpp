#include "spincat/eigen_structure.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace spincat {

namespace {

// Tridiagonal bands of h(tau).
void bands_at(const OperatorSet& ops, const DriveParams& drive, double tau, Vector& diag,
              Vector& off) {
  diag = ops.jz2_diag / ops.j.spin_count();
  off = (drive.r * drive.cosine_at(tau)) * ops.jx_off;
}

double parity_expectation(const Vector& v) {
  const int d = static_cast<int>(v.size());
  double acc = 0.0;
  for (int k = 0; k < d; ++k) acc += v[k] * v[d - 1 - k];
  return acc;
}

void fix_sign(Vector& v) {
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;
}

}  // namespace

std::vector<EigenPair> top_eigenpairs(const OperatorSet& ops, const DriveParams& drive, double tau,
                                      int k, double degeneracy_tol) {
  const int d = ops.j.dim();
  if (k < 1 || k > d) throw std::invalid_argument("top_eigenpairs: k out of range");
  Vector diag, off;
  bands_at(ops, drive, tau, diag, off);

  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  const Vector& evals = es.eigenvalues();  // ascending
  Matrix evecs = es.eigenvectors();

  // Re-diagonalize numerically degenerate clusters in the parity basis, so the
  // returned vectors have definite parity whenever the spectrum allows it.
  int hi = d - 1;
  int taken = 0;
  std::vector<EigenPair> out;
  while (taken < k) {
    int lo = hi;
    while (lo > 0 && std::abs(evals[lo - 1] - evals[hi]) < degeneracy_tol) --lo;
    const int cluster = hi - lo + 1;
    if (cluster > 1) {
      Matrix block(d, cluster);
      for (int c = 0; c < cluster; ++c) block.col(c) = evecs.col(lo + c);
      Matrix xb(cluster, cluster);
      for (int a = 0; a < cluster; ++a)
        for (int b = 0; b < cluster; ++b) xb(a, b) = block.col(a).dot(block.col(b).reverse());
      Eigen::SelfAdjointEigenSolver<Matrix> sub(0.5 * (xb + xb.transpose()));
      Matrix rotated = block * sub.eigenvectors();
      for (int c = 0; c < cluster; ++c) evecs.col(lo + c) = rotated.col(c);
    }
    for (int i = hi; i >= lo && taken < k; --i, ++taken) {
      Vector v = evecs.col(i);
      fix_sign(v);
      const double x = parity_expectation(v);
      ParityCharacter pc = ParityCharacter::undefined;
      if (x > 1.0 - 1e-6)
        pc = ParityCharacter::even;
      else if (x < -(1.0 - 1e-6))
        pc = ParityCharacter::odd;
      CVector amps = v.cast<Complex>();
      out.push_back(EigenPair{evals[i], SpinState(ops.j, std::move(amps)), pc});
    }
    hi = lo - 1;
    if (hi < 0) break;
  }
  return out;
}

GapTrace gap_trace(const DriveParams& drive, std::span<const double> tau_grid,
                   double closure_threshold) {
  for (std::size_t i = 1; i < tau_grid.size(); ++i)
    if (tau_grid[i] <= tau_grid[i - 1]) throw std::invalid_argument("gap_trace: grid must increase");
  const OperatorSet ops = build_operators(drive.j);
  const int n = static_cast<int>(tau_grid.size());
  GapTrace out;
  out.taus.assign(tau_grid.begin(), tau_grid.end());
  out.gaps.resize(n);
  out.phases.resize(n);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    Vector diag, off;
    bands_at(ops, drive, tau_grid[i], diag, off);
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    const Vector& evals = es.eigenvalues();
    const int d = static_cast<int>(evals.size());
    out.gaps[i] = std::max(0.0, evals[d - 1] - (d > 1 ? evals[d - 2] : evals[d - 1]));
    out.phases[i] = drive.omega_tilde * tau_grid[i] + drive.phi;
  }

  for (int i = 0; i < n; ++i) {
    if (out.gaps[i] < closure_threshold) {
      out.first_closure_tau = out.taus[i];
      break;
    }
  }
  return out;
}

InitialPopulations initial_populations(const DriveParams& drive) {
  const OperatorSet ops = build_operators(drive.j);
  auto pairs = top_eigenpairs(ops, drive, 0.0, 2);
  const SpinState init = canonical_initial(drive.j);
  const double p1 = std::norm(pairs[0].vector.overlap(init));
  const double p2 = pairs.size() > 1 ? std::norm(pairs[1].vector.overlap(init)) : 0.0;
  return {p1, p2, 1.0 - p1 - p2};
}

std::vector<EigenPhasePoint> eigen_phase_profiles(const DriveParams& drive,
                                                  std::span<const double> tau_grid,
                                                  double closure_threshold, double amp_threshold) {
  const OperatorSet ops = build_operators(drive.j);
  const int n = static_cast<int>(tau_grid.size());
  std::vector<EigenPhasePoint> out(n);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    auto pairs = top_eigenpairs(ops, drive, tau_grid[i], 2);
    EigenPhasePoint pt;
    pt.tau = tau_grid[i];
    pt.gap = pairs[0].value - (pairs.size() > 1 ? pairs[1].value : pairs[0].value);
    pt.closed = pt.gap < closure_threshold;
    pt.top = relative_phase_profile(pairs[0].vector, amp_threshold);
    if (pairs.size() > 1) pt.second = relative_phase_profile(pairs[1].vector, amp_threshold);
    if (pt.closed) {
      for (auto& e : pt.top) e.defined = false;
      for (auto& e : pt.second) e.defined = false;
    }
    out[i] = std::move(pt);
  }
  return out;
}

MeanFieldEnergy meanfield_energy(const DriveParams& drive, double alpha, double beta, double tau) {
  const double jj = drive.j.j();
  const double c = drive.cosine_at(tau);
  const double value = jj * (0.5 * std::cos(beta) * std::cos(beta) +
                             drive.r * std::cos(alpha) * std::sin(beta) * c);
  return {value, drive.r * jj * c};
}

}  // namespace spincat
