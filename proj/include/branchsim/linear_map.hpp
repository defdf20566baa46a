#ifndef BRANCHSIM_LINEAR_MAP_HPP
#define BRANCHSIM_LINEAR_MAP_HPP

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "branchsim/errors.hpp"
#include "branchsim/ket.hpp"
#include "branchsim/space.hpp"

namespace branchsim {

/// Dense linear map between labeled spaces. Maps flagged unitary are checked
/// at construction (M^dag M = 1 within 1e-10). Projectors and other
/// norm-shrinking maps simply leave the flag off; the surviving norm of an
/// apply() result is read back with norm().
template <typename Scalar = double>
struct LinearMapT {
  using Complex = std::complex<Scalar>;
  using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  SpaceShape shape_in;
  SpaceShape shape_out;
  Matrix matrix;
  bool unitary = false;

  LinearMapT() = default;

  LinearMapT(SpaceShape in, SpaceShape out, Matrix m, bool unitary_flag = false)
      : shape_in(std::move(in)),
        shape_out(std::move(out)),
        matrix(std::move(m)),
        unitary(unitary_flag) {
    if (matrix.rows() != shape_out.total_dim() ||
        matrix.cols() != shape_in.total_dim())
      throw CompositionError("matrix is " + std::to_string(matrix.rows()) +
                             "x" + std::to_string(matrix.cols()) +
                             ", expected " +
                             std::to_string(shape_out.total_dim()) + "x" +
                             std::to_string(shape_in.total_dim()));
    if (unitary) {
      if (matrix.rows() != matrix.cols())
        throw CompositionError("unitary map must be square");
      const Matrix gram = matrix.adjoint() * matrix;
      const Scalar dev =
          (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
      if (dev > Scalar(1e-10))
        throw ContractError("unitary flag set but M^dag M deviates from identity by " +
                            std::to_string(static_cast<double>(dev)));
    }
  }
};

using LinearMap = LinearMapT<double>;

template <typename Scalar = double>
LinearMapT<Scalar> identity_map(const SpaceShape& shape) {
  return {shape, shape,
          LinearMapT<Scalar>::Matrix::Identity(shape.total_dim(), shape.total_dim()),
          true};
}

/// Rank-one projector |k><k| onto one ket (not necessarily a basis vector).
template <typename Scalar>
LinearMapT<Scalar> projector_onto(const KetT<Scalar>& k) {
  typename LinearMapT<Scalar>::Matrix m = k.amps * k.amps.adjoint();
  return {k.shape, k.shape, std::move(m), false};
}

/// Matrix-vector application. Unitary maps preserve the norm; projectors may
/// shrink it and the caller decides what to do with a zero survivor.
template <typename Scalar>
KetT<Scalar> apply(const LinearMapT<Scalar>& m, const KetT<Scalar>& psi) {
  if (!(m.shape_in == psi.shape))
    throw CompositionError("apply shape mismatch: map expects " +
                           m.shape_in.str() + ", got " + psi.shape.str());
  return {m.shape_out, m.matrix * psi.amps};
}

/// Embed a map acting on a subset of subsystems into a larger shape, acting
/// as the identity on everything else. `targets[i]` names the subsystem of
/// `full_shape` that plays the role of factor i of m.shape_in; dims must
/// match. Requires m square (same in/out shape family). Preserves the
/// unitary flag.
template <typename Scalar>
LinearMapT<Scalar> lift(const LinearMapT<Scalar>& m,
                        const std::vector<std::string>& targets,
                        const SpaceShape& full_shape) {
  if (targets.size() != m.shape_in.count())
    throw CompositionError("lift: target count " + std::to_string(targets.size()) +
                           " does not match map arity " +
                           std::to_string(m.shape_in.count()));
  if (!(m.shape_in == m.shape_out) &&
      m.shape_in.total_dim() != m.shape_out.total_dim())
    throw CompositionError("lift requires a square map");

  std::vector<int> positions;
  positions.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int p = full_shape.position_of(targets[i]);  // throws if unknown
    if (full_shape.subsystems()[static_cast<std::size_t>(p)].dim !=
        m.shape_in.subsystems()[i].dim)
      throw CompositionError("lift: dim mismatch on target '" + targets[i] + "'");
    for (std::size_t j = 0; j < i; ++j)
      if (targets[j] == targets[i])
        throw CompositionError("lift: repeated target '" + targets[i] + "'");
    positions.push_back(p);
  }

  const long n = full_shape.total_dim();
  const long dt = m.shape_in.total_dim();
  typename LinearMapT<Scalar>::Matrix big =
      LinearMapT<Scalar>::Matrix::Zero(n, n);

  std::vector<int> multi;
  for (long col = 0; col < n; ++col) {
    multi = full_shape.decode(col);
    // flat index of the target factors, in the order the caller listed them
    long tin = 0;
    for (std::size_t i = 0; i < positions.size(); ++i)
      tin = tin * m.shape_in.subsystems()[i].dim +
            multi[static_cast<std::size_t>(positions[i])];
    for (long tout = 0; tout < dt; ++tout) {
      const auto val = m.matrix(tout, tin);
      if (val == typename LinearMapT<Scalar>::Complex(0)) continue;
      std::vector<int> out_multi = multi;
      long rem = tout;
      for (std::size_t i = positions.size(); i-- > 0;) {
        const int d = m.shape_in.subsystems()[i].dim;
        out_multi[static_cast<std::size_t>(positions[i])] = static_cast<int>(rem % d);
        rem /= d;
      }
      big(full_shape.encode(out_multi), col) = val;
    }
  }
  return {full_shape, full_shape, std::move(big), m.unitary};
}

}  // namespace branchsim

#endif  // BRANCHSIM_LINEAR_MAP_HPP
