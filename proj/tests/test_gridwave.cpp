#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "branchsim/grains.hpp"
#include "branchsim/grid.hpp"
#include "branchsim/singling.hpp"
#include "branchsim/stats.hpp"

using namespace branchsim;

namespace {

// natural units for most of the file: hbar = m = 1
const Grid1D kGrid(2048, 80.0 / 2048, -40.0);

GridWave packet(double x0, double sigma, double k0) {
  return gaussian_packet(kGrid, x0, sigma, k0, 1.0, 1.0);
}

double analytic_width(double sigma0, double t) {
  const double tau = t / (2 * sigma0 * sigma0);  // hbar = m = 1
  return sigma0 * std::sqrt(1 + tau * tau);
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid1D(100, 0.1, 0.0), ContractError);   // not a power of two
  CHECK_THROWS_AS(Grid1D(32, 0.1, 0.0), ContractError);    // too small
  CHECK_THROWS_AS(Grid1D(64, -0.1, 0.0), ContractError);   // bad spacing
  const Grid1D g(64, 0.5, -16.0);
  CHECK(g.x(0) == -16.0);
  CHECK(g.right() == 16.0);
}

TEST_CASE("gaussian packet: normalization, width, momentum, minimal product") {
  const GridWave w = packet(0.0, 1.5, 3.0);
  CHECK(std::abs(norm_sq(w) - 1.0) < 1e-12);

  const auto u = uncertainty_product(w);
  CHECK(std::abs(u.dx - 1.5) < 0.01 * 1.5);
  CHECK(std::abs(mean_momentum(w) - 3.0) < 0.01 * 3.0);
  CHECK(std::abs(u.product - 0.5) < 0.005);  // hbar/2 within 1%

  CHECK_THROWS_AS(packet(38.0, 1.0, 0.0), ContractError);   // support off-grid
  CHECK_THROWS_AS(packet(0.0, 1.0, 1e6), ContractError);    // beyond Nyquist
}

TEST_CASE("evolve_free: identity at t = 0 and unitarity") {
  const GridWave w = packet(-5.0, 1.0, 2.0);
  const GridWave w0 = evolve_free(w, 0.0);
  CHECK((w0.psi - w.psi).cwiseAbs().maxCoeff() < 1e-12);

  const GridWave wt = evolve_free(w, 1.7);
  CHECK(std::abs(norm_sq(wt) - 1.0) < 1e-9);

  // momentum magnitudes are preserved exactly by the kinetic phase
  const Eigen::ArrayXd before = spectrum_shifted(w).array().abs();
  const Eigen::ArrayXd after = spectrum_shifted(wt).array().abs();
  CHECK((before - after).abs().maxCoeff() < 1e-9);
}

TEST_CASE("evolve_free: gaussian dispersion law within half a percent") {
  for (double sigma0 : {0.8, 1.2}) {
    for (double t : {0.5, 1.0, 2.0}) {
      const GridWave wt = evolve_free(packet(0.0, sigma0, 0.0), t);
      const double dx = uncertainty_product(wt).dx;
      const double expect = analytic_width(sigma0, t);
      CHECK(std::abs(dx - expect) < 0.005 * expect);
    }
  }
}

TEST_CASE("evolve_free: wrap-around is rejected") {
  // fast packet reaches the boundary well before t = 40
  const GridWave w = packet(20.0, 1.0, 10.0);
  CHECK_THROWS_AS(evolve_free(w, 40.0), SimulationError);
}

TEST_CASE("spread_estimate: calcium numbers and limiting forms") {
  // 10 nm initial spread, a tenth of a millisecond, calcium mass, rounded hbar
  const double spread = spread_estimate(1e-8, 1e-4, 66e-27, 1e-34);
  CHECK(spread > 450e-9);
  CHECK(spread < 600e-9);
  CHECK(spread == doctest::Approx(std::sqrt(1e-16 + 2e-4 * 1e-34 / 66e-27)).epsilon(1e-12));

  CHECK(spread_estimate(1e-8, 0.0, 66e-27, 1e-34) == 1e-8);
  CHECK(spread_estimate(0.0, 1e-4, 66e-27, 1e-34) ==
        doctest::Approx(std::sqrt(2e-4 * 1e-34 / 66e-27)).epsilon(1e-12));
  CHECK_THROWS_AS(spread_estimate(1.0, 1.0, 0.0, 1.0), ContractError);
}

TEST_CASE("uncertainty_product: rectangle wave and evolved packets stay above hbar/2") {
  // hard-truncated rectangle: dx = L / sqrt(12), product strictly above hbar/2
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(kGrid.n);
  const long a = 900, b = 1150;  // L = 250 samples
  for (long i = a; i < b; ++i) psi(i) = 1.0;
  const GridWave rect = normalized(GridWave(kGrid, psi, 1.0, 1.0));
  const auto u = uncertainty_product(rect);
  const double L = static_cast<double>(b - a) * kGrid.dx;
  CHECK(std::abs(u.dx - L / std::sqrt(12.0)) < 0.01 * u.dx);
  CHECK(u.product > 0.5);

  // spreading packets grow but never dip below the bound
  double last = 0.5;
  for (double t : {0.4, 0.8, 1.6}) {
    const auto ut = uncertainty_product(evolve_free(packet(0.0, 1.0, 0.0), t));
    const double expect = 0.5 * std::sqrt(1 + std::pow(t / 2.0, 2));  // sigma0 = 1
    CHECK(std::abs(ut.product - expect) < 0.01 * expect);
    CHECK(ut.product >= last);
    CHECK(ut.product >= 0.5 * (1 - 1e-2));
    last = ut.product;
  }
}

TEST_CASE("slit_mask: fractions and post-selection error") {
  const GridWave w = packet(0.0, 2.0, 0.0);

  const auto full = slit_mask(w, {{0, kGrid.n}});
  CHECK(full.transmitted_fraction == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((full.wave.psi - w.psi).cwiseAbs().maxCoeff() < 1e-12);

  // two slits placed symmetrically pass twice the single-slit mass
  const long c = kGrid.n / 2;
  // the mirror of sample range [c-120, c-80) under x -> -x is [c+81, c+121)
  const std::vector<IndexRange> both = {{c - 120, c - 80}, {c + 81, c + 121}};
  const double two = slit_mask(w, both).transmitted_fraction;
  const double one = slit_mask(w, {{c + 81, c + 121}}).transmitted_fraction;
  CHECK(std::abs(two - 2 * one) < 1e-12);

  // a slit where the wave vanishes identically transmits nothing
  CHECK_THROWS_AS(slit_mask(w, {{kGrid.n - 40, kGrid.n}}), SimulationError);
  CHECK_THROWS_AS(slit_mask(w, {{-5, 10}}), ContractError);
}

TEST_CASE("screen_pattern: single rect slit gives a sinc^2 central lobe") {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(kGrid.n);
  const long c = kGrid.n / 2, half = 16;
  for (long i = c - half; i < c + half; ++i) psi(i) = 1.0;
  const GridWave slit = normalized(GridWave(kGrid, psi, 1.0, 1.0));

  const ScreenPattern p = screen_pattern_far_field(slit, static_cast<int>(kGrid.n));
  CHECK(p.intensity.minCoeff() >= 0.0);
  CHECK(std::abs(p.intensity.sum() - 1.0) < 1e-9);

  // strictly decreasing from the central maximum to the first zero, and in
  // agreement with the sinc^2 oracle for the continuum aperture
  const double L = 2.0 * half * kGrid.dx;
  long peak;
  p.intensity.maxCoeff(&peak);
  const double peak_val = p.intensity(peak);
  double prev = peak_val;
  for (long i = peak + 1; i < p.intensity.size(); ++i) {
    const double k = p.bin_center(i);  // hbar = m = t_flight = 1
    if (k * L / 2 >= M_PI) break;
    CHECK(p.intensity(i) < prev);
    const double s = std::sin(k * L / 2) / (k * L / 2);
    CHECK(std::abs(p.intensity(i) / peak_val - s * s) < 0.01);
    prev = p.intensity(i);
  }
}

TEST_CASE("screen_pattern: rect double slit has deep interior minima at the nodes") {
  const GridWave broad = packet(0.0, 5.0, 0.0);
  const long c = kGrid.n / 2;
  const long sep = 128, half = 16;  // d = 5, a = 1.25 in grid units
  const std::vector<IndexRange> slits = {{c - sep / 2 - half, c - sep / 2 + half},
                                         {c + sep / 2 - half, c + sep / 2 + half}};
  const auto masked = slit_mask(broad, slits);
  const ScreenPattern p = screen_pattern_far_field(masked.wave, static_cast<int>(kGrid.n));

  const double d = static_cast<double>(sep) * kGrid.dx;
  const double peak = p.intensity.maxCoeff();

  // the deepest interior local minimum sits essentially at zero
  double deepest = peak;
  for (long i = 1; i + 1 < p.intensity.size(); ++i) {
    const double k = p.bin_center(i);
    if (std::abs(k) > 4.0) continue;  // stay under the envelope
    if (p.intensity(i) < p.intensity(i - 1) && p.intensity(i) < p.intensity(i + 1))
      deepest = std::min(deepest, p.intensity(i));
  }
  CHECK(deepest < 1e-3 * peak);

  // minima sit at the destructive momenta (2m+1) pi / d
  for (int m = 0; m < 2; ++m) {
    const double kz = (2 * m + 1) * M_PI / d;
    long iz = 0;
    (p.bin_center - kz).abs().minCoeff(&iz);
    CHECK(p.intensity(iz) < 2e-3 * peak);
  }
}

TEST_CASE("screen_pattern: orthogonal tags reduce to the sum of single-slit patterns") {
  const GridWave left = packet(-1.5, 0.1, 0.0);
  const GridWave right = packet(+1.5, 0.1, 0.0);

  // tagged by orthogonal internal states: intensities add with no cross term
  const Eigen::ArrayXd il = spectrum_shifted(left).array().abs2();
  const Eigen::ArrayXd ir = spectrum_shifted(right).array().abs2();
  const Eigen::ArrayXd tagged = 0.5 * (il + ir);

  const ScreenPattern pl = detail::rebin_pattern(momentum_axis(kGrid), il, 512);
  const ScreenPattern pr = detail::rebin_pattern(momentum_axis(kGrid), ir, 512);
  const ScreenPattern pt = detail::rebin_pattern(momentum_axis(kGrid), tagged, 512);
  CHECK((pt.intensity - 0.5 * (pl.intensity + pr.intensity)).abs().maxCoeff() < 1e-9);

  // the coherent sum, by contrast, shows fringes: visibility 1 vs 0
  Eigen::VectorXcd coherent = (left.psi + right.psi) * M_SQRT1_2;
  const GridWave both = normalized(GridWave(kGrid, coherent, 1.0, 1.0));
  const Eigen::ArrayXd ic = spectrum_shifted(both).array().abs2();
  const Eigen::ArrayXd env = il + ir;
  CHECK(fringe_visibility(ic, env) > 0.999);
  CHECK(fringe_visibility(tagged, env) == 0.0);
}

TEST_CASE("screen_pattern: evolved mode bins the position density") {
  const GridWave w = packet(0.0, 1.0, 0.0);
  const ScreenPattern p = screen_pattern_evolved(w, 1.0, 128);
  CHECK(std::abs(p.intensity.sum() - 1.0) < 1e-9);
  long peak;
  p.intensity.maxCoeff(&peak);
  CHECK(std::abs(p.bin_center(peak)) < 1.0);  // packet stays centered
}

TEST_CASE("grain_exposure: uniform wave over four equal grains") {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Constant(kGrid.n, 1.0);
  const GridWave w = normalized(GridWave(kGrid, psi, 1.0, 1.0));
  const GrainArray grains = GrainArray::tile(0, kGrid.n, 4);
  const GrainExposure ge = grain_exposure(w, grains);

  REQUIRE(ge.branches.size() == 4);
  for (std::size_t b = 0; b < ge.branches.size(); ++b) {
    CHECK(std::abs(ge.branches.branches[b].weight() - 0.25) < 1e-12);
    CHECK(ge.branches.branches[b].label.outcomes.size() == 1);  // one grain fires
    CHECK(ge.quanta[b] == 1);                                   // one whole quantum
  }
}

TEST_CASE("grain_exposure: single grain and coverage contract") {
  const GridWave w = packet(0.0, 1.0, 0.0);
  const GrainExposure all = grain_exposure(w, GrainArray::tile(0, kGrid.n, 1));
  REQUIRE(all.branches.size() == 1);
  CHECK(std::abs(all.branches.branches[0].weight() - 1.0) < 1e-12);

  // grains covering only a tail violate the coverage precondition
  CHECK_THROWS_AS(grain_exposure(w, GrainArray::tile(0, 200, 4)), ContractError);
  CHECK_THROWS_AS(GrainArray({{10, 5}}), ContractError);
  CHECK_THROWS_AS(GrainArray({{0, 10}, {5, 20}}), ContractError);  // overlap
}

TEST_CASE("grain_exposure: double-slit fringe histogram against quadrature oracle") {
  // gaussian-apodized slits: analytic far field 4 exp(-2 s^2 k^2) cos^2(kd/2)
  const double d = 3.0, s = 0.1;
  const GridWave left = packet(-d / 2, s, 0.0);
  const GridWave right = packet(+d / 2, s, 0.0);
  Eigen::VectorXcd coherent = (left.psi + right.psi) * M_SQRT1_2;
  const GridWave both = normalized(GridWave(kGrid, coherent, 1.0, 1.0));

  const Eigen::ArrayXd k = momentum_axis(kGrid);
  Eigen::ArrayXd inten = spectrum_shifted(both).array().abs2();
  ScreenPattern fine{k, inten / inten.sum()};

  // one grain per bright fringe between the first few nodes
  std::vector<IndexRange> regions;
  std::vector<long> nodes;
  for (int m = -3; m <= 2; ++m) {
    const double kz = (2 * m + 1) * M_PI / d;
    long iz;
    (k - kz).abs().minCoeff(&iz);
    nodes.push_back(iz);
  }
  regions.push_back({0, nodes.front()});
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    regions.push_back({nodes[i], nodes[i + 1]});
  regions.push_back({nodes.back(), kGrid.n});
  const GrainExposure ge = grain_exposure(fine, GrainArray(regions));

  // quadrature oracle: trapezoid over the analytic continuum intensity
  const double dk = k(1) - k(0);
  std::vector<double> oracle;
  double total = 0;
  for (const auto& r : regions) {
    double acc = 0;
    for (long i = r.begin; i < r.end; ++i) {
      const double f = std::exp(-2 * s * s * k(i) * k(i)) *
                       std::pow(std::cos(k(i) * d / 2), 2);
      acc += f * dk;
    }
    oracle.push_back(acc);
    total += acc;
  }
  for (std::size_t g = 0; g < oracle.size(); ++g) {
    oracle[g] /= total;
    if (oracle[g] > 1e-3)
      CHECK(std::abs(ge.grain_weights[g] - oracle[g]) < 0.01 * oracle[g]);
  }

  // Born-sampling the exposure branches reproduces the weights
  const std::size_t n = 100000;
  const auto draws = sample_many(ge.branches, SinglingPolicy::Born(), 4242, n);
  std::vector<double> counts(ge.branches.size(), 0.0);
  for (auto dr : draws) counts[dr] += 1.0;
  for (std::size_t b = 0; b < ge.branches.size(); ++b)
    CHECK(count_within_3sigma(counts[b], static_cast<double>(n),
                              ge.branches.branches[b].weight()));
}

TEST_CASE("pattern csv export format") {
  ScreenPattern p;
  p.bin_center = Eigen::ArrayXd::LinSpaced(3, -1.0, 1.0);
  p.intensity = Eigen::ArrayXd::Constant(3, 1.0 / 3);
  std::ostringstream os;
  write_pattern_csv(os, p);
  const std::string out = os.str();
  CHECK(out.substr(0, 23) == "bin_center_m,intensity\n");
  CHECK(out.find("-1,") != std::string::npos);
}
