// Straightforward serial implementations of the hot kernels. The production
// paths (phase-recurrence fringes, parallel Q grids, Chebyshev stepping) are
// checked against these in the tests and timed against them in the benchmark.
#pragma once

#include <span>

#include "spincat/interferometry.hpp"
#include "spincat/spin_core.hpp"

namespace spincat::reference {

/// Rotate-then-measure fringe, one z-rotation and parity readout per sample.
FringeCurve fringe_direct(const SpinState& state, std::span<const double> thetas);

/// Per-point Q-function without row parallelism or weight reuse.
QFunction q_function_serial(const SpinState& state, const SphereGrid& grid);

}  // namespace spincat::reference
