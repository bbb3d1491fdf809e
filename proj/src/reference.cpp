#include "spincat/reference.hpp"

namespace spincat::reference {

FringeCurve fringe_direct(const SpinState& state, std::span<const double> thetas) {
  FringeCurve out;
  out.thetas.assign(thetas.begin(), thetas.end());
  out.variance.reserve(thetas.size());
  for (double th : thetas) out.variance.push_back(parity_stats(rotate_z(state, th)).variance);
  return out;
}

QFunction q_function_serial(const SpinState& state, const SphereGrid& grid) {
  const int na = static_cast<int>(grid.alphas.size());
  const int nb = static_cast<int>(grid.betas.size());
  QFunction q{grid, Matrix(nb, na)};
  const CssProjector proj(state.j);
  const double scale = state.j.dim() / (4.0 * kPi);
  for (int ib = 0; ib < nb; ++ib)
    for (int ia = 0; ia < na; ++ia)
      q.values(ib, ia) = scale * std::norm(proj.overlap(state.amps, grid.alphas[ia], grid.betas[ib]));
  return q;
}

}  // namespace spincat::reference
