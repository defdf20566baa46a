#ifndef BRANCHSIM_SINGLING_HPP
#define BRANCHSIM_SINGLING_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "branchsim/branching.hpp"
#include "branchsim/errors.hpp"
#include "branchsim/rng.hpp"

namespace branchsim {

/// Rule that singles out one branch as the perceived one on a given run.
/// `born` selects with weight |a(i)|^2 exactly. `norm_monotone` selects with
/// weight g(|a(i)|^2) for a strictly increasing g with g(0) = 0; the power
/// laws g(w) = w^c cover the family used in practice. `independent_minds`
/// draws per-mind with Born weights; the joint statistics it produces for
/// two observers are what many_minds_joint() counts.
struct SinglingPolicy {
  enum class Kind { born, norm_monotone, independent_minds };

  Kind kind = Kind::born;
  std::function<double(double)> weight_fn;  // only for norm_monotone
  std::string name = "born";

  static SinglingPolicy Born() { return {}; }

  static SinglingPolicy IndependentMinds() {
    return {Kind::independent_minds, {}, "independent_minds"};
  }

  static SinglingPolicy NormMonotone(std::function<double(double)> g,
                                     std::string label = "norm_monotone") {
    if (!g) throw ContractError("norm_monotone policy needs a weight function");
    return {Kind::norm_monotone, std::move(g), std::move(label)};
  }

  /// g(w) = w^c, c > 0. c = 1 reproduces the Born weights.
  static SinglingPolicy PowerLaw(double c) {
    if (!(c > 0)) throw ContractError("power-law exponent must be positive");
    return NormMonotone([c](double w) { return std::pow(w, c); },
                        "power_law(" + std::to_string(c) + ")");
  }

  /// Selection weights for the given branch weights |a(i)|^2 (unnormalized).
  std::vector<double> selection_weights(const std::vector<double>& w2) const {
    std::vector<double> out;
    out.reserve(w2.size());
    if (kind == Kind::norm_monotone) {
      if (std::abs(weight_fn(0.0)) > 1e-12)
        throw ContractError("norm_monotone weight function must vanish at 0");
      for (double w : w2) out.push_back(weight_fn(w));
      for (std::size_t i = 0; i + 1 < w2.size(); ++i)
        for (std::size_t j = i + 1; j < w2.size(); ++j)
          if ((w2[i] < w2[j] && out[i] >= out[j] && w2[j] - w2[i] > 1e-12) ||
              (w2[j] < w2[i] && out[j] >= out[i] && w2[i] - w2[j] > 1e-12))
            throw ContractError("norm_monotone weight function is not strictly increasing");
    } else {
      out = w2;  // born and independent_minds both weight by |a|^2 per mind
    }
    return out;
  }
};

namespace detail {

/// Inverse-CDF draw over unnormalized weights; ties resolve to the lowest
/// index, so the result is a deterministic function of (weights, u).
inline std::size_t draw_index(const std::vector<double>& weights, double u) {
  double total = 0;
  for (double w : weights) total += w;
  if (!(total > 0)) throw ContractError("all selection weights vanish");
  const double target = u * total;
  double cum = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (target < cum) return i;
  }
  return weights.size() - 1;
}

}  // namespace detail

/// One perceived branch index per call sequence, deterministic given the
/// generator state.
inline std::size_t sample_branch_index(const BranchSet& bs,
                                       const SinglingPolicy& policy,
                                       Philox& rng) {
  if (bs.branches.empty()) throw ContractError("cannot sample an empty branch set");
  return detail::draw_index(policy.selection_weights(bs.weights()),
                            rng.uniform01());
}

/// Single perceived label for (seed); stream 0 of the seed.
inline BranchLabel sample_perception(const BranchSet& bs,
                                     const SinglingPolicy& policy,
                                     std::uint64_t seed) {
  Philox rng(seed);
  return bs.branches[sample_branch_index(bs, policy, rng)].label;
}

/// n independent draws from one stream; returned as branch indices.
inline std::vector<std::size_t> sample_many(const BranchSet& bs,
                                            const SinglingPolicy& policy,
                                            std::uint64_t seed, std::size_t n,
                                            std::uint64_t stream = 0) {
  Philox rng(seed, stream);
  std::vector<std::size_t> out(n);
  const std::vector<double> sel = policy.selection_weights(bs.weights());
  for (auto& o : out) o = detail::draw_index(sel, rng.uniform01());
  return out;
}

/// Joint selection statistics for two observers of the same two-branch
/// event with weight p1 on state 1. `independent` draws each observer's
/// perception separately; `correlated` draws one shared selection for both.
struct ManyMindsJoint {
  double f11 = 0;        // both perceive state 1
  double f22 = 0;        // both perceive state 2
  double f_disagree = 0; // mixed perceptions
};

enum class MindMode { independent, correlated };

inline ManyMindsJoint many_minds_joint(double p1, MindMode mode,
                                       std::size_t n_samples,
                                       std::uint64_t seed) {
  if (!(p1 >= 0.0 && p1 <= 1.0))
    throw ContractError("p1 must lie in [0, 1]");
  if (n_samples == 0) throw ContractError("n_samples must be positive");
  Philox rng(seed);
  std::size_t n11 = 0, n22 = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    bool a, b;
    if (mode == MindMode::independent) {
      a = rng.bernoulli(p1);
      b = rng.bernoulli(p1);
    } else {
      a = b = rng.bernoulli(p1);
    }
    if (a && b) ++n11;
    else if (!a && !b) ++n22;
  }
  const double n = static_cast<double>(n_samples);
  ManyMindsJoint j;
  j.f11 = static_cast<double>(n11) / n;
  j.f22 = static_cast<double>(n22) / n;
  j.f_disagree = static_cast<double>(n_samples - n11 - n22) / n;
  return j;
}

}  // namespace branchsim

#endif  // BRANCHSIM_SINGLING_HPP
