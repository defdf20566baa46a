#ifndef BRANCHSIM_BRANCHING_HPP
#define BRANCHSIM_BRANCHING_HPP

#include <algorithm>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "branchsim/ket.hpp"
#include "branchsim/linear_map.hpp"
#include "branchsim/space.hpp"

namespace branchsim {

/// One outcome assignment: a basis index for every pointer subsystem.
struct BranchLabel {
  std::vector<std::pair<std::string, int>> outcomes;

  friend bool operator==(const BranchLabel&, const BranchLabel&) = default;

  int index_of(const std::string& subsystem) const {
    for (const auto& [name, idx] : outcomes)
      if (name == subsystem) return idx;
    throw CompositionError("label has no entry for '" + subsystem + "'");
  }

  std::string str() const {
    std::string out;
    for (const auto& [name, idx] : outcomes) {
      if (!out.empty()) out += ",";
      out += name + "=" + std::to_string(idx);
    }
    return out;
  }
};

/// One term of an orthogonal branch decomposition: coefficient a(i) times a
/// unit-norm relative state of the non-pointer factors.
struct Branch {
  BranchLabel label;
  std::complex<double> coefficient;
  Ket relative_ket;

  double weight() const { return std::norm(coefficient); }
};

/// Orthogonal decomposition of a normalized ket over a pointer basis.
/// Invariants: labels pairwise distinct, weights sum to 1 (conservation of
/// probability), and reconstruct() returns the source ket.
struct BranchSet {
  std::vector<Branch> branches;
  std::vector<std::string> pointer;
  SpaceShape source_shape;

  std::size_t size() const { return branches.size(); }

  std::vector<double> weights() const {
    std::vector<double> w;
    w.reserve(branches.size());
    for (const auto& b : branches) w.push_back(b.weight());
    return w;
  }

  double total_weight() const {
    double s = 0;
    for (const auto& b : branches) s += b.weight();
    return s;
  }
};

namespace detail {

/// Split a shape into (pointer part, rest part) positions, preserving order.
inline void split_positions(const SpaceShape& shape,
                            const std::vector<std::string>& pointer,
                            std::vector<int>& pointer_pos,
                            std::vector<int>& rest_pos) {
  pointer_pos.clear();
  rest_pos.clear();
  for (const auto& name : pointer) pointer_pos.push_back(shape.position_of(name));
  for (int i = 0; i < static_cast<int>(shape.count()); ++i)
    if (std::find(pointer_pos.begin(), pointer_pos.end(), i) == pointer_pos.end())
      rest_pos.push_back(i);
}

inline SpaceShape subshape(const SpaceShape& shape, const std::vector<int>& pos) {
  std::vector<Subsystem> subs;
  subs.reserve(pos.size());
  for (int p : pos) subs.push_back(shape.subsystems()[static_cast<std::size_t>(p)]);
  return SpaceShape(std::move(subs));
}

}  // namespace detail

/// Branch decomposition over the given pointer subsystems. One branch per
/// pointer basis assignment carrying nonzero mass; assignments with squared
/// mass below 1e-14 are dropped as numerically meaningless. The coefficient
/// carries the phase of the slice's largest component, so every relative ket
/// has its dominant amplitude real and positive — a deterministic convention.
inline BranchSet decompose(const Ket& state,
                           const std::vector<std::string>& pointer) {
  if (pointer.empty()) throw CompositionError("decompose: empty pointer list");
  if (std::abs(norm_sq(state) - 1.0) > 1e-10)
    throw ContractError("decompose requires a normalized state");

  std::vector<int> ppos, rpos;
  detail::split_positions(state.shape, pointer, ppos, rpos);
  const SpaceShape pointer_shape = detail::subshape(state.shape, ppos);
  const SpaceShape rest_shape = detail::subshape(state.shape, rpos);

  const long np = pointer_shape.total_dim();
  const long nr = rest_shape.total_dim();

  // gather slices: slice[p](r) = psi(full index with pointer part p, rest r)
  std::vector<Ket::Vector> slices(static_cast<std::size_t>(np),
                                  Ket::Vector::Zero(nr));
  std::vector<int> multi;
  for (long j = 0; j < state.dim(); ++j) {
    multi = state.shape.decode(j);
    long p = 0;
    for (std::size_t i = 0; i < ppos.size(); ++i)
      p = p * pointer_shape.subsystems()[i].dim +
          multi[static_cast<std::size_t>(ppos[i])];
    long r = 0;
    for (std::size_t i = 0; i < rpos.size(); ++i)
      r = r * rest_shape.subsystems()[i].dim +
          multi[static_cast<std::size_t>(rpos[i])];
    slices[static_cast<std::size_t>(p)](r) = state.amps(j);
  }

  BranchSet bs;
  bs.pointer = pointer;
  bs.source_shape = state.shape;
  for (long p = 0; p < np; ++p) {
    const auto& v = slices[static_cast<std::size_t>(p)];
    const double mass = v.squaredNorm();
    if (mass < 1e-14) continue;

    long imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const std::complex<double> phase = v(imax) / std::abs(v(imax));
    const std::complex<double> coeff = phase * std::sqrt(mass);

    BranchLabel label;
    const auto pmulti = pointer_shape.decode(p);
    for (std::size_t i = 0; i < pointer.size(); ++i)
      label.outcomes.emplace_back(pointer[i], pmulti[i]);

    bs.branches.push_back({std::move(label), coeff, Ket(rest_shape, v / coeff)});
  }
  return bs;
}

/// Rebuild the source ket from its branches (used to verify decompositions).
inline Ket reconstruct(const BranchSet& bs) {
  Ket::Vector v = Ket::Vector::Zero(bs.source_shape.total_dim());
  std::vector<int> ppos, rpos;
  detail::split_positions(bs.source_shape, bs.pointer, ppos, rpos);
  const SpaceShape rest_shape = detail::subshape(bs.source_shape, rpos);

  for (const auto& b : bs.branches) {
    std::vector<int> multi(bs.source_shape.count(), 0);
    for (std::size_t i = 0; i < bs.pointer.size(); ++i)
      multi[static_cast<std::size_t>(ppos[i])] = b.label.outcomes[i].second;
    for (long r = 0; r < rest_shape.total_dim(); ++r) {
      const auto rmulti = rest_shape.decode(r);
      for (std::size_t i = 0; i < rpos.size(); ++i)
        multi[static_cast<std::size_t>(rpos[i])] = rmulti[i];
      v(bs.source_shape.encode(multi)) += b.coefficient * b.relative_ket.amps(r);
    }
  }
  return {bs.source_shape, std::move(v)};
}

/// Pointer coupling: copy the measured subsystem's basis index into a
/// register subsystem, as a permutation |k, r> -> |k, r+k mod R>. Acting on
/// a ready register (r = 0) this records k faithfully; it is unitary on the
/// whole space, hence linear across branches.
struct MeasurementCoupling {
  std::string measured;
  std::string register_name;
};

inline LinearMap coupling_map(const MeasurementCoupling& c, const SpaceShape& full) {
  const int dk = full.dim_of(c.measured);
  const int dr = full.dim_of(c.register_name);
  if (dr < dk)
    throw CompositionError("register '" + c.register_name + "' (dim " +
                           std::to_string(dr) + ") too small to record '" +
                           c.measured + "' (dim " + std::to_string(dk) + ")");
  SpaceShape pair({{c.measured, dk}, {c.register_name, dr}});
  LinearMap::Matrix m = LinearMap::Matrix::Zero(pair.total_dim(), pair.total_dim());
  for (int k = 0; k < dk; ++k)
    for (int r = 0; r < dr; ++r)
      m(pair.encode({k, (r + k) % dr}), pair.encode({k, r})) = 1.0;
  LinearMap local(pair, pair, std::move(m), true);
  return lift(local, {c.measured, c.register_name}, full);
}

/// Measurement as entanglement: sum_k a_k |k>|R_0> -> sum_k a_k |k>|R_k>.
/// The register must be in its ready state (index 0) in every branch that
/// carries mass, otherwise the record would be scrambled.
inline Ket measure_entangle(const Ket& state, const MeasurementCoupling& c) {
  const int rpos = state.shape.position_of(c.register_name);
  state.shape.position_of(c.measured);
  for (long j = 0; j < state.dim(); ++j) {
    if (std::norm(state.amps(j)) < 1e-14) continue;
    if (state.shape.decode(j)[static_cast<std::size_t>(rpos)] != 0)
      throw ContractError("register '" + c.register_name +
                          "' not in its ready state");
  }
  return apply(coupling_map(c, state.shape), state);
}

}  // namespace branchsim

#endif  // BRANCHSIM_BRANCHING_HPP
