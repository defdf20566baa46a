#ifndef BRANCHSIM_KET_HPP
#define BRANCHSIM_KET_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <vector>

#include "branchsim/errors.hpp"
#include "branchsim/space.hpp"

namespace branchsim {

/// Dense complex state vector over a labeled tensor-product space.
/// Immutable by convention: every operation returns a fresh value.
template <typename Scalar = double>
struct KetT {
  using Complex = std::complex<Scalar>;
  using Vector = Eigen::Vector<Complex, Eigen::Dynamic>;

  SpaceShape shape;
  Vector amps;

  KetT() = default;

  KetT(SpaceShape shape_, Vector amps_)
      : shape(std::move(shape_)), amps(std::move(amps_)) {
    if (amps.size() != shape.total_dim())
      throw CompositionError("amplitude count " + std::to_string(amps.size()) +
                             " does not match shape " + shape.str());
    if (!amps.allFinite()) throw ContractError("non-finite amplitude");
  }

  Complex operator[](long i) const { return amps(i); }
  long dim() const { return amps.size(); }
};

using Ket = KetT<double>;

template <typename Scalar>
Scalar norm(const KetT<Scalar>& k) {
  return k.amps.norm();
}

template <typename Scalar>
Scalar norm_sq(const KetT<Scalar>& k) {
  return k.amps.squaredNorm();
}

template <typename Scalar>
bool is_normalized(const KetT<Scalar>& k, Scalar tol = Scalar(1e-12)) {
  return std::abs(norm_sq(k) - Scalar(1)) <= tol;
}

template <typename Scalar>
KetT<Scalar> normalized(const KetT<Scalar>& k) {
  const Scalar n = norm(k);
  if (n == Scalar(0)) throw ContractError("cannot normalize the zero vector");
  return {k.shape, k.amps / n};
}

/// Basis vector |i> of a shape (flat index).
template <typename Scalar = double>
KetT<Scalar> basis_ket(const SpaceShape& shape, long index) {
  if (index < 0 || index >= shape.total_dim())
    throw CompositionError("basis index out of range");
  typename KetT<Scalar>::Vector v =
      KetT<Scalar>::Vector::Zero(shape.total_dim());
  v(index) = typename KetT<Scalar>::Complex(1);
  return {shape, std::move(v)};
}

/// Basis vector from a per-subsystem multi-index.
template <typename Scalar = double>
KetT<Scalar> basis_ket(const SpaceShape& shape, const std::vector<int>& multi) {
  if (multi.size() != shape.count())
    throw CompositionError("multi-index arity mismatch");
  for (std::size_t i = 0; i < multi.size(); ++i)
    if (multi[i] < 0 || multi[i] >= shape.subsystems()[i].dim)
      throw CompositionError("multi-index out of range");
  return basis_ket<Scalar>(shape, shape.encode(multi));
}

/// Single-subsystem ket from explicit amplitudes.
template <typename Scalar = double>
KetT<Scalar> make_ket(const std::string& name,
                      std::initializer_list<std::complex<Scalar>> amps) {
  typename KetT<Scalar>::Vector v(static_cast<long>(amps.size()));
  long i = 0;
  for (const auto& a : amps) v(i++) = a;
  return {SpaceShape::single(name, static_cast<int>(amps.size())), std::move(v)};
}

/// Tensor product. Subsystem names must be disjoint; the result shape is the
/// concatenation and amplitudes are all pairwise products in row-major order,
/// so |a (x) b| = |a| * |b|.
template <typename Scalar>
KetT<Scalar> tensor(const KetT<Scalar>& a, const KetT<Scalar>& b) {
  for (const auto& s : a.shape.subsystems())
    if (b.shape.has(s.name))
      throw CompositionError("tensor name clash on subsystem '" + s.name + "'");
  SpaceShape shape = a.shape + b.shape;
  typename KetT<Scalar>::Vector v(shape.total_dim());
  const long nb = b.amps.size();
  for (long i = 0; i < a.amps.size(); ++i)
    v.segment(i * nb, nb) = a.amps(i) * b.amps;
  return {std::move(shape), std::move(v)};
}

/// Hermitian inner product, conjugate-linear in the first argument.
template <typename Scalar>
std::complex<Scalar> inner(const KetT<Scalar>& a, const KetT<Scalar>& b) {
  if (!(a.shape == b.shape))
    throw CompositionError("inner product shape mismatch: " + a.shape.str() +
                           " vs " + b.shape.str());
  return a.amps.dot(b.amps);  // Eigen dot conjugates the left operand
}

template <typename Scalar>
KetT<Scalar> operator+(const KetT<Scalar>& a, const KetT<Scalar>& b) {
  if (!(a.shape == b.shape)) throw CompositionError("ket sum shape mismatch");
  return {a.shape, a.amps + b.amps};
}

template <typename Scalar>
KetT<Scalar> operator-(const KetT<Scalar>& a, const KetT<Scalar>& b) {
  if (!(a.shape == b.shape)) throw CompositionError("ket difference shape mismatch");
  return {a.shape, a.amps - b.amps};
}

template <typename Scalar>
KetT<Scalar> operator*(std::complex<Scalar> c, const KetT<Scalar>& k) {
  return {k.shape, c * k.amps};
}

template <typename Scalar>
KetT<Scalar> operator*(Scalar c, const KetT<Scalar>& k) {
  return {k.shape, std::complex<Scalar>(c) * k.amps};
}

}  // namespace branchsim

#endif  // BRANCHSIM_KET_HPP
