#ifndef BRANCHSIM_TEST_HELPERS_HPP
#define BRANCHSIM_TEST_HELPERS_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

#include "branchsim/ket.hpp"
#include "branchsim/linear_map.hpp"
#include "branchsim/rng.hpp"

namespace testutil {

using branchsim::Ket;
using branchsim::LinearMap;
using branchsim::Philox;
using branchsim::SpaceShape;

inline std::complex<double> random_amp(Philox& rng) {
  return {rng.uniform(-1, 1), rng.uniform(-1, 1)};
}

inline Ket random_ket(const SpaceShape& shape, Philox& rng) {
  Ket::Vector v(shape.total_dim());
  for (long i = 0; i < v.size(); ++i) v(i) = random_amp(rng);
  return branchsim::normalized(Ket(shape, std::move(v)));
}

inline LinearMap::Matrix random_matrix(long rows, long cols, Philox& rng) {
  LinearMap::Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = random_amp(rng);
  return m;
}

/// Haar-ish random unitary from the QR decomposition of a Ginibre matrix.
inline LinearMap random_unitary(const SpaceShape& shape, Philox& rng) {
  const long n = shape.total_dim();
  const LinearMap::Matrix g = random_matrix(n, n, rng);
  Eigen::HouseholderQR<LinearMap::Matrix> qr(g);
  LinearMap::Matrix q = qr.householderQ();
  return {shape, shape, std::move(q), true};
}

/// Upper-tail chi-square quantiles at the 99.9% level, dof 1..15.
inline double chi2_quantile_999(int dof) {
  static const double table[] = {10.828, 13.816, 16.266, 18.467, 20.515,
                                 22.458, 24.322, 26.124, 27.877, 29.588,
                                 31.264, 32.909, 34.528, 36.123, 37.697};
  return table[dof - 1];
}

}  // namespace testutil

#endif  // BRANCHSIM_TEST_HELPERS_HPP
