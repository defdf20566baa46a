#ifndef BRANCHSIM_GRAINS_HPP
#define BRANCHSIM_GRAINS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "branchsim/branching.hpp"
#include "branchsim/errors.hpp"
#include "branchsim/grid.hpp"
#include "branchsim/ket.hpp"

namespace branchsim {

/// Disjoint contiguous detector grains over a grid or pattern, in ascending
/// order. Overlaps are rejected so "exactly one grain exposed per branch"
/// stays well defined.
class GrainArray {
 public:
  explicit GrainArray(std::vector<IndexRange> regions) : regions_(std::move(regions)) {
    if (regions_.empty()) throw ContractError("grain array must not be empty");
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      if (regions_[i].begin >= regions_[i].end)
        throw ContractError("grain " + std::to_string(i) + " is empty");
      if (i > 0 && regions_[i].begin < regions_[i - 1].end)
        throw ContractError("grains must be disjoint and ascending");
    }
  }

  /// n_grains equal grains tiling [begin, end).
  static GrainArray tile(long begin, long end, int n_grains) {
    if (n_grains < 1 || end <= begin) throw ContractError("bad grain tiling");
    std::vector<IndexRange> regions;
    for (int g = 0; g < n_grains; ++g) {
      const long b = begin + (end - begin) * g / n_grains;
      const long e = begin + (end - begin) * (g + 1) / n_grains;
      regions.push_back({b, e});
    }
    return GrainArray(std::move(regions));
  }

  const std::vector<IndexRange>& regions() const { return regions_; }
  std::size_t size() const { return regions_.size(); }

 private:
  std::vector<IndexRange> regions_;
};

/// Branch bookkeeping of a grain exposure event. Each branch exposes exactly
/// one grain, and that grain absorbs one whole quantum — never a fraction,
/// however little of the wave reached it.
struct GrainExposure {
  BranchSet branches;               // pointer subsystem "grain"
  std::vector<int> quanta;          // per branch; always exactly 1
  std::vector<double> grain_weights;  // per grain, renormalized over coverage
  double covered_mass = 0;          // fraction of the input mass under grains

  int exposed_grain(std::size_t branch) const {
    return branches.branches[branch].label.index_of("grain");
  }
};

namespace detail {

inline GrainExposure grain_exposure_from_masses(std::vector<double> masses,
                                                double total_mass) {
  double covered = 0;
  for (double m : masses) covered += m;
  if (covered < 0.99 * total_mass)
    throw ContractError("grains cover less than 99% of the mass");

  GrainExposure out;
  out.covered_mass = covered / total_mass;
  out.grain_weights.reserve(masses.size());
  for (double m : masses) out.grain_weights.push_back(m / covered);

  // one pointer subsystem whose basis indexes the grains; branch i is the
  // term in which grain i alone fires
  const auto n = static_cast<int>(masses.size());
  const SpaceShape shape = SpaceShape::single("grain", n);
  Ket::Vector amps(n);
  for (int i = 0; i < n; ++i) amps(i) = std::sqrt(out.grain_weights[static_cast<std::size_t>(i)]);
  out.branches = decompose(Ket(shape, std::move(amps)), {"grain"});
  out.quanta.assign(out.branches.size(), 1);
  return out;
}

}  // namespace detail

/// Exposure branches of a position-space wave over film grains: branch i's
/// squared coefficient is the integrated |psi|^2 over grain i, renormalized
/// over the covered mass. The grains must catch at least 99% of the wave.
inline GrainExposure grain_exposure(const GridWave& w, const GrainArray& grains) {
  const Eigen::ArrayXd rho = w.density();
  std::vector<double> masses;
  masses.reserve(grains.size());
  for (const auto& r : grains.regions()) {
    if (r.end > w.grid.n) throw ContractError("grain extends past the grid");
    masses.push_back(rho.segment(r.begin, r.width()).sum() * w.grid.dx);
  }
  return detail::grain_exposure_from_masses(std::move(masses), norm_sq(w));
}

/// Same, for a screen pattern: grain ranges index pattern bins.
inline GrainExposure grain_exposure(const ScreenPattern& p, const GrainArray& grains) {
  std::vector<double> masses;
  masses.reserve(grains.size());
  for (const auto& r : grains.regions()) {
    if (r.end > p.intensity.size()) throw ContractError("grain extends past the pattern");
    masses.push_back(p.intensity.segment(r.begin, r.width()).sum());
  }
  return detail::grain_exposure_from_masses(std::move(masses), p.intensity.sum());
}

}  // namespace branchsim

#endif  // BRANCHSIM_GRAINS_HPP
