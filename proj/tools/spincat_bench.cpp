// Timing harness for the kernel pairs: the production paths (phase-recurrence
// fringe, row-parallel Q grid, Chebyshev stepping, threaded scans) against
// their serial reference implementations, with agreement checks.
#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "spincat/catfit.hpp"
#include "spincat/reference.hpp"
#include "spincat/rng.hpp"

using namespace spincat;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const char* name, double fast, double slow, double agreement) {
  std::printf("%-34s %9.4f s vs %9.4f s  speedup %5.2fx  max|diff| %.2e\n", name, fast, slow,
              slow / fast, agreement);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif

  // Fringe kernel: phase recurrence vs rotate-and-measure.
  {
    TotalSpin j(149);
    auto cat = mss_state(j, {0.3, 0.2 * kPi, 0.0});
    auto thetas = spectrum_protocol_thetas(j, 0.2 * kPi);
    auto t0 = Clock::now();
    auto fast = fringe_exact(cat, thetas);
    const double tf = seconds_since(t0);
    t0 = Clock::now();
    auto slow = reference::fringe_direct(cat, thetas);
    const double ts = seconds_since(t0);
    double diff = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i)
      diff = std::max(diff, std::abs(fast.variance[i] - slow.variance[i]));
    report("fringe: recurrence vs direct", tf, ts, diff);
  }

  // Q-function: parallel rows with weight reuse vs naive per-point overlaps.
  {
    TotalSpin j(200);
    auto cat = mss_state(j, {0.4, 0.25 * kPi, 0.0});
    auto grid = SphereGrid::uniform(201, 101);
    auto t0 = Clock::now();
    auto fast = q_function(cat, grid);
    const double tf = seconds_since(t0);
    t0 = Clock::now();
    auto slow = reference::q_function_serial(cat, grid);
    const double ts = seconds_since(t0);
    report("q function: parallel vs serial", tf, ts,
           (fast.values - slow.values).cwiseAbs().maxCoeff());
  }

  // Step kernels: Chebyshev matvec expansion vs per-step eigendecomposition.
  {
    TotalSpin j(200);
    DriveParams drive{j, 0.0151 * kPi, -0.0128 * kPi, 1.0};
    auto init = canonical_initial(j);
    StepControl cheb = StepControl::unverified(2e-3);
    cheb.record_every = 2.0;
    StepControl eig = cheb;
    eig.kernel = StepKernel::eigendecomposition;
    auto t0 = Clock::now();
    auto a = propagate(init, drive, 2.0, cheb);
    const double tf = seconds_since(t0);
    t0 = Clock::now();
    auto b = propagate(init, drive, 2.0, eig);
    const double ts = seconds_since(t0);
    report("stepping: chebyshev vs eigensolve", tf, ts,
           (a.final_state().amps - b.final_state().amps).norm());
  }

  // Drive scan: threaded vs single-threaded (identical results by design).
  {
    TotalSpin j(100);
    ScanConfig cfg;
    cfg.tau_end = 20.0;
    Vector og(3), pg(2);
    og << 0.018 * kPi, 0.0204 * kPi, 0.023 * kPi;
    pg << 0.01 * kPi, 0.024 * kPi;
#ifdef _OPENMP
    const int max_threads = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    auto t0 = Clock::now();
    auto serial = scan_drive(j, og, pg, cfg);
    const double ts = seconds_since(t0);
#ifdef _OPENMP
    omp_set_num_threads(max_threads);
#endif
    t0 = Clock::now();
    auto parallel = scan_drive(j, og, pg, cfg);
    const double tf = seconds_since(t0);
    double diff = 0.0;
    for (std::size_t i = 0; i < serial.points.size(); ++i)
      diff = std::max(diff, std::abs(serial.points[i].f_max - parallel.points[i].f_max));
    report("drive scan: threaded vs serial", tf, ts, diff);
  }

  return 0;
}
