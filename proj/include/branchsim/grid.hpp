#ifndef BRANCHSIM_GRID_HPP
#define BRANCHSIM_GRID_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <vector>

#include "branchsim/constants.hpp"
#include "branchsim/errors.hpp"

namespace branchsim {

/// Uniform 1-D spatial grid. Sample count is a power of two so the discrete
/// Fourier transform is exact and fast; boundaries are periodic.
struct Grid1D {
  long n = 0;
  double dx = 0;
  double origin = 0;

  Grid1D() = default;
  Grid1D(long n_, double dx_, double origin_) : n(n_), dx(dx_), origin(origin_) {
    if (n < 64 || (n & (n - 1)) != 0)
      throw ContractError("grid size must be a power of two >= 64");
    if (!(dx > 0)) throw ContractError("grid spacing must be positive");
  }

  double x(long i) const { return origin + static_cast<double>(i) * dx; }
  double length() const { return static_cast<double>(n) * dx; }
  double right() const { return origin + length(); }

  Eigen::ArrayXd positions() const {
    return origin + Eigen::ArrayXd::LinSpaced(n, 0, static_cast<double>(n - 1)) * dx;
  }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

/// Complex wave function sampled on a grid, with the particle mass and hbar
/// it evolves under attached. Normalization is sum |psi|^2 dx = 1.
template <typename Scalar = double>
struct GridWaveT {
  using Complex = std::complex<Scalar>;
  using Vector = Eigen::Vector<Complex, Eigen::Dynamic>;

  Grid1D grid;
  Vector psi;
  double mass = 0;
  double hbar = constants::hbar_si;

  GridWaveT() = default;
  GridWaveT(Grid1D g, Vector p, double mass_, double hbar_ = constants::hbar_si)
      : grid(g), psi(std::move(p)), mass(mass_), hbar(hbar_) {
    if (psi.size() != grid.n) throw CompositionError("sample count does not match grid");
    if (!(mass > 0)) throw ContractError("mass must be positive");
    if (!(hbar > 0)) throw ContractError("hbar must be positive");
  }

  Eigen::ArrayXd density() const { return psi.array().abs2(); }
};

using GridWave = GridWaveT<double>;

template <typename Scalar>
double norm_sq(const GridWaveT<Scalar>& w) {
  return w.psi.squaredNorm() * w.grid.dx;
}

template <typename Scalar>
bool is_normalized(const GridWaveT<Scalar>& w, double tol = 1e-9) {
  return std::abs(norm_sq(w) - 1.0) <= tol;
}

template <typename Scalar>
GridWaveT<Scalar> normalized(const GridWaveT<Scalar>& w) {
  const double n2 = norm_sq(w);
  if (!(n2 > 0)) throw ContractError("cannot normalize a zero wave");
  GridWaveT<Scalar> out = w;
  out.psi /= std::sqrt(n2);
  return out;
}

/// Probability mass in the outer 5% of samples (2.5% per edge). Used to
/// guard against wrap-around under the periodic transform.
template <typename Scalar>
double boundary_mass(const GridWaveT<Scalar>& w) {
  const long edge = std::max<long>(1, w.grid.n / 40);
  double m = 0;
  for (long i = 0; i < edge; ++i)
    m += std::norm(w.psi(i)) + std::norm(w.psi(w.grid.n - 1 - i));
  return m * w.grid.dx;
}

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

/// Angular wavenumber of FFT bin j (standard layout: 0..n/2-1 positive,
/// then negative).
inline double fft_k(long j, long n, double dx) {
  const long f = (j <= n / 2 - 1) ? j : j - n;
  return 2.0 * M_PI * static_cast<double>(f) / (static_cast<double>(n) * dx);
}

}  // namespace detail

/// Forward transform (unscaled), FFT bin layout.
inline Eigen::VectorXcd spectrum(const GridWave& w) {
  Eigen::VectorXcd out;
  detail::fft_engine().fwd(out, w.psi);
  return out;
}

/// Ascending momentum axis k_j (shifted layout, -Nyquist first).
inline Eigen::ArrayXd momentum_axis(const Grid1D& g) {
  Eigen::ArrayXd k(g.n);
  const double dk = 2.0 * M_PI / (static_cast<double>(g.n) * g.dx);
  for (long j = 0; j < g.n; ++j) k(j) = dk * static_cast<double>(j - g.n / 2);
  return k;
}

/// Spectrum rearranged to match momentum_axis ordering.
inline Eigen::VectorXcd spectrum_shifted(const GridWave& w) {
  const Eigen::VectorXcd s = spectrum(w);
  Eigen::VectorXcd out(w.grid.n);
  const long h = w.grid.n / 2;
  out.head(h) = s.tail(h);
  out.tail(h) = s.head(h);
  return out;
}

/// Normalized Gaussian packet exp(-(x-x0)^2/(4 sigma0^2) + i k0 x).
/// Position spread is sigma0 and mean momentum hbar*k0; the minimal packet
/// saturates the uncertainty product at hbar/2. The support must sit well
/// inside the grid (x0 +- 6 sigma0) and k0 inside the Nyquist band.
inline GridWave gaussian_packet(const Grid1D& grid, double x0, double sigma0,
                                double k0, double mass,
                                double hbar = constants::hbar_si) {
  if (!(sigma0 > 0)) throw ContractError("sigma0 must be positive");
  if (x0 - 6 * sigma0 < grid.origin || x0 + 6 * sigma0 > grid.right())
    throw ContractError("packet support (x0 +- 6 sigma0) exceeds the grid");
  if (std::abs(k0) >= M_PI / grid.dx)
    throw ContractError("k0 beyond the Nyquist band of this grid");

  Eigen::VectorXcd psi(grid.n);
  for (long i = 0; i < grid.n; ++i) {
    const double u = grid.x(i) - x0;
    psi(i) = std::polar(std::exp(-u * u / (4 * sigma0 * sigma0)), k0 * grid.x(i));
  }
  GridWave w(grid, std::move(psi), mass, hbar);
  return normalized(w);
}

/// Exact free propagation: each momentum component picks up the kinetic
/// phase exp(-i hbar k^2 t / 2m). No time-stepping error; the only failure
/// mode is the packet spreading into the periodic boundary, which is
/// rejected.
inline GridWave evolve_free(const GridWave& w, double t) {
  if (!is_normalized(w)) throw ContractError("evolve_free requires a normalized wave");
  Eigen::VectorXcd spec = spectrum(w);
  const double c = w.hbar * t / (2.0 * w.mass);
  for (long j = 0; j < w.grid.n; ++j) {
    const double k = detail::fft_k(j, w.grid.n, w.grid.dx);
    spec(j) *= std::polar(1.0, -c * k * k);
  }
  Eigen::VectorXcd psi;
  detail::fft_engine().inv(psi, spec);
  GridWave out(w.grid, std::move(psi), w.mass, w.hbar);
  if (boundary_mass(out) > 1e-6)
    throw SimulationError("dispersion overflow: wave reached the grid boundary");
  return out;
}

/// Uncertainty-relation spreading estimate sqrt(x0^2 + 2 t hbar / m):
/// the packet width after time t, to order of magnitude, starting from
/// initial spread x0. Exact dispersion can exceed it well outside its
/// validity regime; see uncertainty_product for the measured quantity.
inline double spread_estimate(double x0, double t, double mass,
                              double hbar = constants::hbar_si) {
  if (x0 < 0 || t < 0 || !(mass > 0) || !(hbar > 0))
    throw ContractError("spread_estimate arguments out of range");
  return std::sqrt(x0 * x0 + 2.0 * t * hbar / mass);
}

struct UncertaintyProduct {
  double dx = 0;       // rms position spread [m]
  double dp = 0;       // rms momentum spread [kg m/s]
  double product = 0;  // dx * dp [J s]
};

/// Moment-based position and momentum spreads. The product is bounded below
/// by hbar/2 up to a 1% grid tolerance.
inline UncertaintyProduct uncertainty_product(const GridWave& w) {
  if (!is_normalized(w)) throw ContractError("uncertainty_product requires a normalized wave");
  const Eigen::ArrayXd x = w.grid.positions();
  const Eigen::ArrayXd rho = w.density() * w.grid.dx;
  const double mean_x = (x * rho).sum();
  const double var_x = ((x - mean_x).square() * rho).sum();

  const Eigen::VectorXcd spec = spectrum_shifted(w);
  const Eigen::ArrayXd k = momentum_axis(w.grid);
  Eigen::ArrayXd pk = spec.array().abs2();
  pk /= pk.sum();
  const double mean_k = (k * pk).sum();
  const double var_k = ((k - mean_k).square() * pk).sum();

  UncertaintyProduct u;
  u.dx = std::sqrt(var_x);
  u.dp = w.hbar * std::sqrt(var_k);
  u.product = u.dx * u.dp;
  return u;
}

/// Mean momentum <p> from the discrete spectrum [kg m/s].
inline double mean_momentum(const GridWave& w) {
  const Eigen::VectorXcd spec = spectrum_shifted(w);
  const Eigen::ArrayXd k = momentum_axis(w.grid);
  Eigen::ArrayXd pk = spec.array().abs2();
  pk /= pk.sum();
  return w.hbar * (k * pk).sum();
}

/// Half-open sample range [begin, end) on a grid.
struct IndexRange {
  long begin = 0;
  long end = 0;
  long width() const { return end - begin; }
};

struct SlitMaskResult {
  GridWave wave;                // renormalized post-mask wave
  double transmitted_fraction;  // pre-mask mass inside the slits
};

/// Zero the wave outside the slit ranges and renormalize. The transmitted
/// fraction is reported so callers can keep absolute rates.
inline SlitMaskResult slit_mask(const GridWave& w,
                                const std::vector<IndexRange>& slits) {
  if (slits.empty()) throw ContractError("slit_mask needs at least one slit");
  for (const auto& s : slits)
    if (s.begin < 0 || s.end > w.grid.n || s.begin >= s.end)
      throw ContractError("slit range outside the grid");

  Eigen::VectorXcd masked = Eigen::VectorXcd::Zero(w.grid.n);
  for (const auto& s : slits)
    masked.segment(s.begin, s.width()) = w.psi.segment(s.begin, s.width());

  const double total = w.psi.squaredNorm() * w.grid.dx;
  const double inside = masked.squaredNorm() * w.grid.dx;
  const double fraction = inside / total;
  if (inside < 1e-12)
    throw SimulationError("slit mask transmitted no mass (post-selection empty)");

  GridWave out(w.grid, std::move(masked), w.mass, w.hbar);
  return {normalized(out), fraction};
}

/// Intensity pattern over screen bins; nonnegative, sums to 1.
struct ScreenPattern {
  Eigen::ArrayXd bin_center;  // [m]
  Eigen::ArrayXd intensity;
};

namespace detail {

inline ScreenPattern rebin_pattern(const Eigen::ArrayXd& coords,
                                   const Eigen::ArrayXd& values, int bins) {
  if (bins < 1) throw ContractError("screen needs at least one bin");
  const double lo = coords.minCoeff();
  const double hi = coords.maxCoeff();
  const double width = (hi - lo) / bins;
  ScreenPattern p;
  p.bin_center.resize(bins);
  p.intensity = Eigen::ArrayXd::Zero(bins);
  for (int b = 0; b < bins; ++b) p.bin_center(b) = lo + (b + 0.5) * width;
  for (long i = 0; i < coords.size(); ++i) {
    long b = width > 0 ? static_cast<long>((coords(i) - lo) / width) : 0;
    if (b >= bins) b = bins - 1;
    if (b < 0) b = 0;
    p.intensity(b) += values(i);
  }
  p.intensity /= p.intensity.sum();
  return p;
}

}  // namespace detail

/// Far-field (Fraunhofer) screen pattern: |spectrum|^2 with momentum bin k
/// mapped to screen position x = (hbar k / m) * t_flight.
inline ScreenPattern screen_pattern_far_field(const GridWave& w, int bins,
                                              double t_flight = 1.0) {
  if (!is_normalized(w)) throw ContractError("screen_pattern requires a normalized wave");
  if (!(t_flight > 0)) throw ContractError("t_flight must be positive");
  const Eigen::ArrayXd coords = momentum_axis(w.grid) * (w.hbar / w.mass) * t_flight;
  const Eigen::ArrayXd inten = spectrum_shifted(w).array().abs2();
  return detail::rebin_pattern(coords, inten, bins);
}

/// Near-field screen pattern: evolve for time t, then bin |psi(x)|^2 at the
/// positions themselves (screen at the grid).
inline ScreenPattern screen_pattern_evolved(const GridWave& w, double t, int bins) {
  const GridWave wt = evolve_free(w, t);
  return detail::rebin_pattern(wt.grid.positions(), wt.density(), bins);
}

/// Fringe visibility (I_max - I_min)/(I_max + I_min) of the pattern after
/// dividing out a known envelope (for twin symmetric apertures the incoherent
/// single-aperture sum). Bins where the envelope is below floor_frac of its
/// peak are skipped. Equals the magnitude of the which-path marker overlap.
inline double fringe_visibility(const Eigen::ArrayXd& intensity,
                                const Eigen::ArrayXd& envelope,
                                double floor_frac = 1e-6) {
  if (intensity.size() != envelope.size())
    throw CompositionError("visibility: pattern/envelope size mismatch");
  const double floor = floor_frac * envelope.maxCoeff();
  double fmax = -1.0, fmin = -1.0;
  for (long i = 0; i < intensity.size(); ++i) {
    if (envelope(i) <= floor) continue;
    const double f = intensity(i) / envelope(i);
    if (fmax < 0 || f > fmax) fmax = f;
    if (fmin < 0 || f < fmin) fmin = f;
  }
  if (fmax < 0) throw ContractError("visibility: envelope vanishes everywhere");
  if (fmax + fmin == 0) return 0.0;
  return (fmax - fmin) / (fmax + fmin);
}

/// CSV export, one row per bin: bin_center_m,intensity.
inline void write_pattern_csv(std::ostream& os, const ScreenPattern& p) {
  os << "bin_center_m,intensity\n";
  char buf[64];
  for (long i = 0; i < p.bin_center.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.bin_center(i), p.intensity(i));
    os << buf;
  }
}

}  // namespace branchsim

#endif  // BRANCHSIM_GRID_HPP
