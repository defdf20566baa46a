#ifndef BRANCHSIM_PROBABILITY_CHECK_HPP
#define BRANCHSIM_PROBABILITY_CHECK_HPP

#include <cmath>
#include <string>
#include <vector>

#include "branchsim/branching.hpp"
#include "branchsim/errors.hpp"

namespace branchsim {

enum class ProbabilityVerdict { consistent, normalization_failure, refinement_failure };

inline std::string to_string(ProbabilityVerdict v) {
  switch (v) {
    case ProbabilityVerdict::consistent: return "consistent";
    case ProbabilityVerdict::normalization_failure: return "normalization_failure";
    case ProbabilityVerdict::refinement_failure: return "refinement_failure";
  }
  return "?";
}

/// Outcome of probing a candidate probability law p(i) = (|a(i)|^2)^k.
/// Both symptoms are evaluated and reported: the sum of candidate
/// probabilities, and the stability of untouched branches under unitary
/// fine-graining. verdict() collapses them, naming the normalization
/// symptom first when both fire.
struct ProbabilityFunctionalResult {
  double exponent = 1.0;
  double prob_sum = 0.0;             // sum of (|a|^2)^k over branches
  bool normalization_ok = false;     // |prob_sum - 1| <= 1e-9
  bool refinement_ok = false;        // untouched renormalized probs stable
  double max_refinement_shift = 0.0; // worst untouched-branch change

  bool consistent() const { return normalization_ok && refinement_ok; }

  ProbabilityVerdict verdict() const {
    if (!normalization_ok) return ProbabilityVerdict::normalization_failure;
    if (!refinement_ok) return ProbabilityVerdict::refinement_failure;
    return ProbabilityVerdict::consistent;
  }
};

/// Test whether p(i) = (|a(i)|^2)^k could serve as a probability law.
///
/// Check 1 (normalization): the candidate probabilities must sum to 1, since
/// the squared coefficients do.
///
/// Check 2 (refinement): fine-grain each branch in turn into two equal
/// orthogonal sub-branches (coefficient a/sqrt(2) each, a pointer extension
/// touching nothing else — a unitary relabeling of one branch). The
/// renormalized candidate probability of every *untouched* branch must not
/// move; a law that redistributes probability when someone refines an
/// unrelated outcome is inconsistent. Only k = 1 passes both checks.
inline ProbabilityFunctionalResult check_probability_functional(
    double exponent, const BranchSet& bs) {
  if (!(exponent > 0)) throw ContractError("exponent must be positive");
  if (bs.branches.empty()) throw ContractError("empty branch set");

  constexpr double tol = 1e-9;
  const std::vector<double> w2 = bs.weights();
  const std::size_t n = w2.size();

  ProbabilityFunctionalResult res;
  res.exponent = exponent;

  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::pow(w2[i], exponent);
    res.prob_sum += p[i];
  }
  res.normalization_ok = std::abs(res.prob_sum - 1.0) <= tol;

  // refinement probe, applied to every branch in turn
  res.max_refinement_shift = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double p_half = std::pow(w2[r] / 2.0, exponent);
    double refined_sum = 2.0 * p_half;
    for (std::size_t i = 0; i < n; ++i)
      if (i != r) refined_sum += p[i];
    for (std::size_t i = 0; i < n; ++i) {
      if (i == r) continue;
      const double before = p[i] / res.prob_sum;
      const double after = p[i] / refined_sum;
      res.max_refinement_shift =
          std::max(res.max_refinement_shift, std::abs(after - before));
    }
  }
  res.refinement_ok = res.max_refinement_shift <= tol;
  return res;
}

}  // namespace branchsim

#endif  // BRANCHSIM_PROBABILITY_CHECK_HPP
