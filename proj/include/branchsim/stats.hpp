#ifndef BRANCHSIM_STATS_HPP
#define BRANCHSIM_STATS_HPP

#include <algorithm>
#include <cmath>

namespace branchsim {

/// Two-sided agreement test between a binomial count and its expectation at
/// the 3-sigma confidence level. For well-populated bins this is the usual
/// |count - np| <= 3 sqrt(np(1-p)); for sparsely populated bins the normal
/// band under-covers (it can forbid outcomes of ~0.5% probability), so the
/// exact Poisson tail is used at the same level instead.
inline bool count_within_3sigma(double count, double n, double p) {
  const double mu = n * p;
  const double nu = n - mu;
  if (mu >= 25.0 && nu >= 25.0)
    return std::abs(count - mu) <= 3.0 * std::sqrt(mu * (1.0 - p));

  // test the sparse side against its Poisson law
  double lambda = mu, c = count;
  if (nu < mu) {
    lambda = nu;
    c = n - count;
  }
  constexpr double tail_3sigma = 0.00135;  // one-sided normal tail at 3 sigma
  if (c >= lambda) {
    double term = std::exp(-lambda), cdf = 0.0;  // P(X >= c) = 1 - CDF(c-1)
    for (long k = 0; k < static_cast<long>(c); ++k) {
      cdf += term;
      term *= lambda / static_cast<double>(k + 1);
    }
    return 1.0 - cdf >= tail_3sigma;
  }
  double term = std::exp(-lambda), cdf = term;  // P(X <= c)
  for (long k = 1; k <= static_cast<long>(c); ++k) {
    term *= lambda / static_cast<double>(k);
    cdf += term;
  }
  return cdf >= tail_3sigma;
}

}  // namespace branchsim

#endif  // BRANCHSIM_STATS_HPP
