#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "spincat/interferometry.hpp"
#include "spincat/reference.hpp"
#include "spincat/rng.hpp"

using namespace spincat;

namespace {

SpinState random_state(TotalSpin j, Rng& rng) {
  CVector amps(j.dim());
  for (int k = 0; k < j.dim(); ++k) amps[k] = Complex(rng.normal(), rng.normal());
  SpinState s(j, std::move(amps));
  return s.renormalize();
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

TEST_CASE("exact fringe matches the tensor-product oracle for up to four spins") {
  Rng rng(101);
  for (int n = 1; n <= 4; ++n) {
    for (int rep = 0; rep < 8; ++rep) {
      auto s = random_state(TotalSpin(n), rng);
      auto thetas = linspace(-1.5, 1.5, 21);
      auto fc = fringe_exact(s, thetas);
      for (std::size_t i = 0; i < thetas.size(); ++i) {
        const double ex = oracle::rotated_parity_kron(s, thetas[i]);
        CHECK(std::abs(fc.variance[i] - (1.0 - ex * ex)) < 1e-12);
      }
    }
  }
}

TEST_CASE("recurrence fringe equals the direct rotate-and-measure kernel") {
  Rng rng(55);
  auto s = random_state(TotalSpin(60), rng);
  auto thetas = spectrum_protocol_thetas(TotalSpin(60), 0.2 * kPi);
  thetas.resize(4000);
  auto fast = fringe_exact(s, thetas);
  auto ref = reference::fringe_direct(s, thetas);
  double worst = 0.0;
  for (std::size_t i = 0; i < thetas.size(); ++i)
    worst = std::max(worst, std::abs(fast.variance[i] - ref.variance[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("fringe on an x-parity eigenstate vanishes at theta = 0") {
  auto s = canonical_initial(TotalSpin(17));
  auto fc = fringe_exact(s, std::vector<double>{0.0});
  CHECK(fc.variance[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("analytic fringe") {
  TotalSpin j(149);
  const double beta = 0.2 * kPi;
  SUBCASE("zero at the origin for zero phase") {
    auto fc = fringe_analytic(j, beta, 0.0, std::vector<double>{0.0});
    CHECK(fc.variance[0] == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("zeros sit at the cosine nodes") {
    const double gp = 0.4;
    for (int k = -2; k <= 2; ++k) {
      const double theta = (k * kPi - gp) / (2.0 * j.j() * std::cos(beta));
      auto fc = fringe_analytic(j, beta, gp, std::vector<double>{theta});
      const double envelope = std::exp(-2.0 * j.j() * theta * theta * std::sin(beta) * std::sin(beta));
      CHECK(fc.variance[0] == doctest::Approx(1.0 - envelope).epsilon(1e-10));
    }
  }
  SUBCASE("successive peaks are one fringe width apart") {
    const double width = kPi / (2.0 * j.j() * std::cos(beta) * std::cos(beta));
    (void)width;  // the node spacing in theta is pi/(2J cos beta)
    const double spacing = kPi / (2.0 * j.j() * std::cos(beta));
    auto peaks = fringe_analytic(j, beta, 0.0, std::vector<double>{0.5 * spacing, 1.5 * spacing});
    CHECK(peaks.variance[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(peaks.variance[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("exact fringe of a perfect cat follows the Gaussian approximation") {
  TotalSpin j(100);
  CatParams p{0.3, 0.2 * kPi, 0.0};
  auto cat = mss_state(j, p);
  const double sigma = std::sqrt(1.0 / (4.0 * j.j() * std::sin(p.beta) * std::sin(p.beta)));
  auto thetas = linspace(-10.0 * sigma, 10.0 * sigma, 801);
  auto exact = fringe_exact(cat, thetas);
  auto approx = fringe_analytic(j, p.beta, p.gamma_prime, thetas);
  double worst = 0.0;
  for (std::size_t i = 0; i < thetas.size(); ++i)
    worst = std::max(worst, std::abs(exact.variance[i] - approx.variance[i]));
  CHECK(worst < 0.02);
}

TEST_CASE("mixed-state control") {
  SUBCASE("flat at one for paper-scale parameters") {
    auto fc = fringe_mixed(TotalSpin(200), 0.3, 0.2 * kPi, 0.0, linspace(-0.05, 0.05, 41));
    for (double v : fc.variance) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("small-J value where the shortcut fails") {
    auto fc = fringe_mixed(TotalSpin(2), 0.0, 0.5 * kPi, 0.0, std::vector<double>{0.0});
    CHECK(fc.variance[0] == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("pi-periodic for integer J") {
    auto a = fringe_mixed(TotalSpin(8), 0.4, 0.3 * kPi, 0.2, std::vector<double>{0.13});
    auto b = fringe_mixed(TotalSpin(8), 0.4, 0.3 * kPi, 0.2, std::vector<double>{0.13 + kPi});
    CHECK(a.variance[0] == doctest::Approx(b.variance[0]).epsilon(1e-12));
  }
}

TEST_CASE("noise ensembles") {
  SUBCASE("zero width returns the nominal value") {
    NoiseSpec spec;
    spec.sigma_rel = 0.0;
    spec.trials = 50;
    auto draws = draw_noise_ensemble(spec, 149.0);
    for (double d : draws) CHECK(d == 149.0);
  }
  SUBCASE("gaussian batches meet the sample constraints and are integers") {
    NoiseSpec spec;
    spec.sigma_rel = 15.0 / 380.0;
    spec.seed = 42;
    auto draws = draw_noise_ensemble(spec, 380.0);
    REQUIRE(draws.size() == 250);
    double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
    CHECK(std::abs(mean - 380.0) <= 3.8);
    double var = 0.0;
    for (double d : draws) {
      CHECK(d == std::round(d));
      var += (d - mean) * (d - mean);
    }
    CHECK(std::abs(std::sqrt(var / draws.size()) - 15.0) <= 1.5);
  }
  SUBCASE("uniform batches stay inside the interval with a tight mean") {
    NoiseSpec spec;
    spec.target = NoiseTarget::drive_strength;
    spec.shape = NoiseShape::uniform;
    spec.sigma_rel = 0.05;
    spec.seed = 7;
    auto draws = draw_noise_ensemble(spec, 1.0);
    double mean = 0.0;
    for (double d : draws) {
      CHECK(d >= 0.95);
      CHECK(d <= 1.05);
      mean += d;
    }
    CHECK(std::abs(mean / draws.size() - 1.0) <= 0.01);
  }
  SUBCASE("same seed, same draws") {
    NoiseSpec spec;
    spec.sigma_rel = 0.05;
    spec.seed = 11;
    CHECK(draw_noise_ensemble(spec, 149.0) == draw_noise_ensemble(spec, 149.0));
  }
  SUBCASE("mismatched target and shape are rejected") {
    NoiseSpec spec;
    spec.target = NoiseTarget::spin_number;
    spec.shape = NoiseShape::uniform;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
  SUBCASE("exhausted resampling budget reports an error") {
    NoiseSpec spec;
    spec.sigma_rel = 0.05;
    spec.max_batches = 0;
    CHECK_THROWS_AS(draw_noise_ensemble(spec, 149.0), NumericError);
  }
}

TEST_CASE("fringe experiment") {
  TotalSpin j(40);
  ScanConfig cfg;
  cfg.tau_end = 15.0;
  auto drive = evaluate_known_drive(j, 0.025 * kPi, 0.02 * kPi, cfg);
  auto thetas = linspace(0.005, 0.06, 24);

  SUBCASE("zero noise reproduces the single noiseless curve") {
    NoiseSpec spec;
    spec.sigma_rel = 0.0;
    spec.trials = 8;
    auto exp = fringe_experiment(drive, spec, thetas);
    Stepper stepper(canonical_initial(j), DriveParams{j, drive.omega_opt, drive.phi_opt, 1.0}, 1e-3);
    stepper.advance_to(drive.tau_opt);
    auto noiseless = fringe_exact(stepper.state(), thetas);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      CHECK(exp.curve.variance[i] == doctest::Approx(noiseless.variance[i]).epsilon(1e-12));
      CHECK(exp.curve.stds[i] == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
  SUBCASE("identical seeds give identical mean curves") {
    NoiseSpec spec;
    spec.sigma_rel = 0.05;
    spec.trials = 12;
    spec.seed = 31;
    auto a = fringe_experiment(drive, spec, thetas);
    auto b = fringe_experiment(drive, spec, thetas);
    CHECK(a.curve.variance == b.curve.variance);
    CHECK(a.curve.stds == b.curve.stds);
    CHECK(a.draws == b.draws);
  }
  SUBCASE("bounds hold for every theta") {
    NoiseSpec spec;
    spec.sigma_rel = 0.1;
    spec.trials = 16;
    spec.seed = 5;
    auto exp = fringe_experiment(drive, spec, thetas);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      CHECK(exp.curve.variance[i] >= 0.0);
      CHECK(exp.curve.variance[i] <= 1.0);
      CHECK(exp.curve.stds[i] >= 0.0);
    }
  }
}

TEST_CASE("analytic spectrum") {
  TotalSpin j(60);
  const double beta = 0.2 * kPi;
  const double jj = j.j();
  const double sigma = std::sqrt(1.0 / (4.0 * jj * std::sin(beta) * std::sin(beta)));
  const double omega_bar = 4.0 * jj * std::cos(beta);

  Vector grid(5);
  grid << -omega_bar, -0.5 * omega_bar, 0.0, 0.5 * omega_bar, omega_bar;
  Vector curve = spectrum_analytic(j, beta, grid);

  CHECK(curve[0] == doctest::Approx(curve[4]).epsilon(1e-14));  // even in omega
  CHECK(curve[1] == doctest::Approx(curve[3]).epsilon(1e-14));
  CHECK(curve[4] == doctest::Approx(-sigma / 4.0).epsilon(1e-6));  // dip value
  CHECK(curve[2] == doctest::Approx(-sigma / 2.0).epsilon(1e-6));  // merged central weight

  // beta = pi/2 merges all three Gaussians at zero frequency.
  Vector origin(1);
  origin << 0.0;
  Vector merged = spectrum_analytic(j, 0.5 * kPi, origin);
  const double sigma_eq = std::sqrt(1.0 / (4.0 * jj));
  CHECK(merged[0] == doctest::Approx(-sigma_eq).epsilon(1e-12));
}

TEST_CASE("discrete spectrum") {
  TotalSpin j(60);  // J = 30 keeps the protocol grid small
  CatParams p{0.3, 0.2 * kPi, 0.0};

  SUBCASE("zero residual transforms to zero") {
    FringeCurve flat;
    flat.thetas = {0.01, 0.02, 0.03, 0.04};
    flat.variance = {1.0, 1.0, 1.0, 1.0};
    auto sp = spectrum_discrete(flat, j);
    CHECK(sp.raw.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sp.values.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("linear in the residual (exact power-of-two scaling)") {
    auto thetas = spectrum_protocol_thetas(j, p.beta);
    auto fringe = fringe_exact(mss_state(j, p), thetas);
    FringeCurve doubled = fringe;
    for (auto& v : doubled.variance) v = 1.0 + 2.0 * (v - 1.0);
    auto a = spectrum_discrete(fringe, j);
    auto b = spectrum_discrete(doubled, j);
    for (int i = 0; i < a.values.size(); ++i) CHECK(2.0 * a.raw[i] == b.raw[i]);
  }
  SUBCASE("perfect cat dips at +-4J cos(beta) and matches the analytic depth") {
    auto thetas = spectrum_protocol_thetas(j, p.beta);
    auto fringe = fringe_exact(mss_state(j, p), thetas);
    SpectrumOptions opt;
    opt.analytic_beta = p.beta;
    auto sp = spectrum_discrete(fringe, j, opt);
    CHECK_FALSE(sp.protocol_mismatch);
    const double omega_bar = 4.0 * j.j() * std::cos(p.beta);
    const double bin = sp.omegas[1] - sp.omegas[0];
    CHECK(std::abs(sp.dip_frequencies[1] - omega_bar) <= bin);
    CHECK(std::abs(sp.dip_frequencies[0] + omega_bar) <= bin);
    // depth against the analytic curve at the dip
    int idx = 0;
    (sp.omegas.array() - omega_bar).abs().minCoeff(&idx);
    CHECK(sp.values[idx] == doctest::Approx(sp.analytic[idx]).epsilon(0.05));
  }
  SUBCASE("off-protocol grids are flagged") {
    FringeCurve odd;
    odd.thetas = {0.0, 0.01, 0.03};
    odd.variance = {0.5, 0.6, 0.7};
    CHECK(spectrum_discrete(odd, j).protocol_mismatch);
  }
}

TEST_CASE("physical time conversion") {
  auto t = physical_time(1.0, 1.0, 0.5);
  CHECK(t.seconds == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(physical_time(1.0, 0.44, 0.5).oat_pi_seconds == doctest::Approx(kPi / 0.44).epsilon(1e-15));
  CHECK(physical_time(1.0, 26.0, 74.5).oat_cat_seconds == doctest::Approx(kPi / 52.0).epsilon(1e-15));
  CHECK_THROWS_AS(physical_time(1.0, 0.0, 1.0), std::invalid_argument);
}

