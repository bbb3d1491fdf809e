// Instantaneous eigensystem of the driven generator: gap traces, initial-state
// populations, eigenstate relative phases and mean-field energy contours.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spincat/dynamics.hpp"
#include "spincat/spin_core.hpp"

namespace spincat {

enum class ParityCharacter { even, odd, undefined };

struct EigenPair {
  double value;
  SpinState vector;
  ParityCharacter parity;
};

/// The k largest eigenpairs of h(tau), descending. Eigenvectors carry a
/// deterministic sign (largest-magnitude component positive); numerically
/// degenerate clusters are re-diagonalized in the parity basis so vectors
/// have definite parity where possible.
std::vector<EigenPair> top_eigenpairs(const OperatorSet& ops, const DriveParams& drive, double tau,
                                      int k = 2, double degeneracy_tol = 1e-10);

struct GapTrace {
  std::vector<double> taus;
  std::vector<double> gaps;    // eps_1 - eps_2 >= 0
  std::vector<double> phases;  // omega~ tau + phi per sample
  std::optional<double> first_closure_tau;
};

/// Gap between the two largest eigenvalues along a tau grid; flags the first
/// sample where the gap falls below closure_threshold.
GapTrace gap_trace(const DriveParams& drive, std::span<const double> tau_grid,
                   double closure_threshold = 1e-6);

struct InitialPopulations {
  double p1;    // |<eps_1(0)|CSS(0, pi/2)>|^2
  double p2;    // |<eps_2(0)|CSS(0, pi/2)>|^2
  double rest;  // 1 - p1 - p2
};

InitialPopulations initial_populations(const DriveParams& drive);

struct EigenPhasePoint {
  double tau;
  double gap;
  bool closed;                     // gap below the closure threshold
  std::vector<PhaseEntry> top;     // relative phases of |eps_1(tau)>
  std::vector<PhaseEntry> second;  // relative phases of |eps_2(tau)>
};

/// Relative-phase profiles of the two highest eigenstates along a tau grid.
/// All entries are flagged undefined once the gap is closed.
std::vector<EigenPhasePoint> eigen_phase_profiles(const DriveParams& drive,
                                                  std::span<const double> tau_grid,
                                                  double closure_threshold = 1e-6,
                                                  double amp_threshold = 1e-8);

struct MeanFieldEnergy {
  double value;       // J (cos^2(beta)/2 + r cos(alpha) sin(beta) cos(omega~ tau + phi))
  double separatrix;  // r J cos(omega~ tau + phi)
};

MeanFieldEnergy meanfield_energy(const DriveParams& drive, double alpha, double beta, double tau);

}  // namespace spincat
