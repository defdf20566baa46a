#ifndef BRANCHSIM_BOHM_HPP
#define BRANCHSIM_BOHM_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <vector>

#include "branchsim/errors.hpp"
#include "branchsim/grid.hpp"
#include "branchsim/rng.hpp"

namespace branchsim {

/// Guidance velocity samples on a grid.
struct VelocityField {
  Grid1D grid;
  Eigen::ArrayXd v;  // [m/s]
};

namespace detail {

/// Guidance field from wave samples and their spatial derivative:
/// v = (hbar/m) Im(psi* psi') / |psi|^2, the probability-current form of the
/// phase-gradient law. It avoids unwrapping the phase angle near nodes.
/// Below the density floor (1e-12 of peak) the velocity is set to zero;
/// trajectories carry essentially no mass there.
inline Eigen::ArrayXd guidance_from_samples(const Eigen::VectorXcd& psi,
                                            const Eigen::VectorXcd& dpsi,
                                            double hbar_over_m) {
  const Eigen::ArrayXd rho = psi.array().abs2();
  const double floor = 1e-12 * rho.maxCoeff();
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(psi.size());
  for (long i = 0; i < psi.size(); ++i) {
    if (rho(i) < floor) continue;
    v(i) = hbar_over_m * std::imag(std::conj(psi(i)) * dpsi(i)) / rho(i);
  }
  return v;
}

/// Exact free evolution with cached spectrum; hands out the wave and its
/// guidance field at arbitrary times.
class FreeEvolver {
 public:
  explicit FreeEvolver(const GridWave& w0) : w0_(w0) {
    spec0_ = spectrum(w0);
    k_.resize(w0.grid.n);
    for (long j = 0; j < w0.grid.n; ++j)
      k_(j) = fft_k(j, w0.grid.n, w0.grid.dx);
  }

  const GridWave& initial() const { return w0_; }

  GridWave wave_at(double t) const {
    Eigen::VectorXcd psi;
    fft_engine().inv(psi, spectrum_at(t));
    return {w0_.grid, std::move(psi), w0_.mass, w0_.hbar};
  }

  Eigen::ArrayXd velocity_at(double t) const {
    const Eigen::VectorXcd spec = spectrum_at(t);
    Eigen::VectorXcd psi, dpsi;
    fft_engine().inv(psi, spec);
    Eigen::VectorXcd dspec(spec.size());
    for (long j = 0; j < spec.size(); ++j)
      dspec(j) = std::complex<double>(0, k_(j)) * spec(j);
    fft_engine().inv(dpsi, dspec);
    return guidance_from_samples(psi, dpsi, w0_.hbar / w0_.mass);
  }

 private:
  Eigen::VectorXcd spectrum_at(double t) const {
    const double c = w0_.hbar * t / (2.0 * w0_.mass);
    Eigen::VectorXcd spec(spec0_.size());
    for (long j = 0; j < spec0_.size(); ++j)
      spec(j) = spec0_(j) * std::polar(1.0, -c * k_(j) * k_(j));
    return spec;
  }

  GridWave w0_;
  Eigen::VectorXcd spec0_;
  Eigen::ArrayXd k_;
};

inline double interp_velocity(const Grid1D& g, const Eigen::ArrayXd& v, double x) {
  const double s = (x - g.origin) / g.dx;
  if (s < 0 || s > static_cast<double>(g.n - 1))
    throw SimulationError("trajectory left the grid");
  long i = static_cast<long>(s);
  if (i > g.n - 2) i = g.n - 2;
  const double f = s - static_cast<double>(i);
  return v(i) * (1.0 - f) + v(i + 1) * f;
}

}  // namespace detail

/// Guidance velocity field of a wave at one instant.
inline VelocityField velocity_field(const GridWave& w) {
  if (!is_normalized(w)) throw ContractError("velocity_field requires a normalized wave");
  const detail::FreeEvolver ev(w);
  return {w.grid, ev.velocity_at(0.0)};
}

/// Time-indexed positions of an advected sample of trajectories.
struct TrajectoryEnsemble {
  std::vector<double> times;  // [s], recorded instants
  Eigen::MatrixXd positions;  // trajectory x time [m]

  long n_traj() const { return positions.rows(); }
  long n_times() const { return positions.cols(); }

  Eigen::VectorXd final_positions() const { return positions.col(positions.cols() - 1); }

  /// 1-D flow lines cannot cross: the sort order of trajectories must be the
  /// same at every recorded time.
  bool order_preserved() const {
    std::vector<long> idx(static_cast<std::size_t>(n_traj()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](long a, long b) { return positions(a, 0) < positions(b, 0); });
    for (long t = 0; t < n_times(); ++t)
      for (std::size_t i = 1; i < idx.size(); ++i)
        if (positions(idx[i - 1], t) > positions(idx[i], t)) return false;
    return true;
  }
};

/// Positions drawn from |psi|^2 by inverse-CDF sampling: deterministic given
/// the seed, with linear interpolation inside density cells.
inline Eigen::VectorXd sample_positions(const GridWave& w, int n_traj,
                                        std::uint64_t seed,
                                        std::uint64_t stream = 0) {
  if (n_traj < 1) throw ContractError("need at least one trajectory");
  const Eigen::ArrayXd rho = w.density();
  std::vector<double> cum(static_cast<std::size_t>(w.grid.n));
  double acc = 0;
  for (long i = 0; i < w.grid.n; ++i) {
    acc += rho(i) * w.grid.dx;
    cum[static_cast<std::size_t>(i)] = acc;
  }
  Philox rng(seed, stream);
  Eigen::VectorXd x(n_traj);
  for (int t = 0; t < n_traj; ++t) {
    const double target = rng.uniform01() * acc;
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    const long cell = std::min<long>(static_cast<long>(it - cum.begin()), w.grid.n - 1);
    const double below = cell > 0 ? cum[static_cast<std::size_t>(cell - 1)] : 0.0;
    const double mass = cum[static_cast<std::size_t>(cell)] - below;
    const double frac = mass > 0 ? (target - below) / mass : 0.5;
    x(t) = w.grid.x(cell) + frac * w.grid.dx;
  }
  return x;
}

/// Advect a |psi_0|^2-distributed ensemble along the guidance flow of the
/// exactly-evolved wave. Each recorded step is integrated with 8 RK4
/// substeps; the velocity field is refreshed from the exact wave at every
/// substep boundary and midpoint, and interpolated linearly in space.
inline TrajectoryEnsemble advect(const GridWave& w0, double t_final, int steps,
                                 int n_traj, std::uint64_t seed,
                                 int substeps_per_step = 8) {
  if (!is_normalized(w0)) throw ContractError("advect requires a normalized wave");
  if (steps < 1 || substeps_per_step < 1) throw ContractError("need at least one step");
  if (!(t_final >= 0)) throw ContractError("t_final must be nonnegative");

  const detail::FreeEvolver ev(w0);
  Eigen::VectorXd x = sample_positions(w0, n_traj, seed);

  TrajectoryEnsemble ens;
  ens.times.resize(static_cast<std::size_t>(steps) + 1);
  ens.positions.resize(n_traj, steps + 1);
  ens.times[0] = 0.0;
  ens.positions.col(0) = x;

  const double h = t_final / static_cast<double>(steps * substeps_per_step);
  Eigen::ArrayXd v_start = ev.velocity_at(0.0), v_mid, v_end;
  double t = 0.0;
  for (int s = 0; s < steps; ++s) {
    for (int sub = 0; sub < substeps_per_step; ++sub) {
      v_mid = ev.velocity_at(t + 0.5 * h);
      v_end = ev.velocity_at(t + h);
      for (int i = 0; i < n_traj; ++i) {
        const double k1 = detail::interp_velocity(w0.grid, v_start, x(i));
        const double k2 = detail::interp_velocity(w0.grid, v_mid, x(i) + 0.5 * h * k1);
        const double k3 = detail::interp_velocity(w0.grid, v_mid, x(i) + 0.5 * h * k2);
        const double k4 = detail::interp_velocity(w0.grid, v_end, x(i) + h * k3);
        x(i) += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      }
      v_start.swap(v_end);
      t += h;
    }
    ens.times[static_cast<std::size_t>(s) + 1] = t;
    ens.positions.col(s + 1) = x;
  }
  return ens;
}

/// One Gaussian component of a superposed wave: amplitude times a packet at
/// (x0, sigma0) with mean wavenumber k0.
struct PacketComponent {
  std::complex<double> amplitude;
  double x0 = 0;
  double sigma0 = 0;
  double k0 = 0;
};

struct PacketFractions {
  std::vector<double> weights;    // |a_i|^2 targets (normalized)
  std::vector<double> fractions;  // measured trajectory fractions
  double max_pair_overlap = 0;    // worst inter-packet overlap mass at t_final
  TrajectoryEnsemble ensemble;
};

/// Launch sum_i a_i g_i(x), advect an equilibrium ensemble, and report the
/// fraction of trajectories ending inside each packet's support. Packets
/// must be disjoint at t_final (pairwise overlap mass < 1e-6); supports are
/// the midpoint intervals between the drifted packet centers.
inline PacketFractions packet_fractions(const Grid1D& grid, double mass,
                                        double hbar,
                                        std::vector<PacketComponent> comps,
                                        double t_final, int steps, int n_traj,
                                        std::uint64_t seed) {
  if (comps.size() < 1) throw ContractError("need at least one packet");
  double wsum = 0;
  for (const auto& c : comps) wsum += std::norm(c.amplitude);
  if (!(wsum > 0)) throw ContractError("all packet amplitudes vanish");

  PacketFractions out;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(grid.n);
  std::vector<GridWave> parts;
  for (auto& c : comps) {
    c.amplitude /= std::sqrt(wsum);
    out.weights.push_back(std::norm(c.amplitude));
    GridWave g = gaussian_packet(grid, c.x0, c.sigma0, c.k0, mass, hbar);
    psi += c.amplitude * g.psi;
    parts.push_back(std::move(g));
  }
  GridWave w0 = normalized(GridWave(grid, std::move(psi), mass, hbar));

  // disjointness of the evolved components
  std::vector<Eigen::ArrayXd> rho_t;
  for (const auto& p : parts) rho_t.push_back(evolve_free(p, t_final).density());
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      const double overlap = rho_t[i].min(rho_t[j]).sum() * grid.dx;
      out.max_pair_overlap = std::max(out.max_pair_overlap, overlap);
    }
  if (out.max_pair_overlap >= 1e-6)
    throw SimulationError("packets still overlap at t_final");

  // supports: midpoint intervals between drifted centers, in center order
  std::vector<std::pair<double, std::size_t>> centers;
  for (std::size_t i = 0; i < comps.size(); ++i)
    centers.emplace_back(comps[i].x0 + hbar * comps[i].k0 / mass * t_final, i);
  std::sort(centers.begin(), centers.end());

  out.ensemble = advect(w0, t_final, steps, n_traj, seed);
  const Eigen::VectorXd xf = out.ensemble.final_positions();

  out.fractions.assign(comps.size(), 0.0);
  for (long t = 0; t < xf.size(); ++t) {
    std::size_t region = 0;
    while (region + 1 < centers.size() &&
           xf(t) > 0.5 * (centers[region].first + centers[region + 1].first))
      ++region;
    out.fractions[centers[region].second] += 1.0;
  }
  for (auto& f : out.fractions) f /= static_cast<double>(xf.size());
  return out;
}

/// CSV export, one row per recorded time: t_s,traj_0_m,...,traj_{n-1}_m.
inline void write_trajectories_csv(std::ostream& os, const TrajectoryEnsemble& ens) {
  os << "t_s";
  for (long i = 0; i < ens.n_traj(); ++i) os << ",traj_" << i << "_m";
  os << "\n";
  char buf[64];
  for (long t = 0; t < ens.n_times(); ++t) {
    std::snprintf(buf, sizeof(buf), "%.17g", ens.times[static_cast<std::size_t>(t)]);
    os << buf;
    for (long i = 0; i < ens.n_traj(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", ens.positions(i, t));
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace branchsim

#endif  // BRANCHSIM_BOHM_HPP
