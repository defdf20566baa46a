#ifndef BRANCHSIM_SPACE_HPP
#define BRANCHSIM_SPACE_HPP

#include <string>
#include <vector>

#include "branchsim/errors.hpp"

namespace branchsim {

struct Subsystem {
  std::string name;
  int dim = 0;

  friend bool operator==(const Subsystem&, const Subsystem&) = default;
};

/// Ordered list of named finite-dimensional tensor factors. The order is
/// fixed at construction; there is no implicit reordering anywhere — callers
/// lift maps into a shape instead of permuting it.
class SpaceShape {
 public:
  SpaceShape() = default;

  explicit SpaceShape(std::vector<Subsystem> subsystems)
      : subsystems_(std::move(subsystems)) {
    total_dim_ = 1;
    for (const auto& s : subsystems_) {
      if (s.dim < 1) throw CompositionError("subsystem '" + s.name + "' has dim < 1");
      for (const auto& t : subsystems_)
        if (&s != &t && s.name == t.name)
          throw CompositionError("duplicate subsystem name '" + s.name + "'");
      total_dim_ *= static_cast<long>(s.dim);
    }
  }

  static SpaceShape single(const std::string& name, int dim) {
    return SpaceShape({{name, dim}});
  }

  const std::vector<Subsystem>& subsystems() const { return subsystems_; }
  std::size_t count() const { return subsystems_.size(); }
  long total_dim() const { return total_dim_; }

  bool has(const std::string& name) const { return find(name) >= 0; }

  /// Position of a subsystem, or -1.
  int find(const std::string& name) const {
    for (std::size_t i = 0; i < subsystems_.size(); ++i)
      if (subsystems_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  int position_of(const std::string& name) const {
    const int p = find(name);
    if (p < 0) throw CompositionError("unknown subsystem '" + name + "'");
    return p;
  }

  int dim_of(const std::string& name) const {
    return subsystems_[static_cast<std::size_t>(position_of(name))].dim;
  }

  /// Row-major flat index of a multi-index (one entry per subsystem).
  long encode(const std::vector<int>& multi) const {
    long idx = 0;
    for (std::size_t i = 0; i < subsystems_.size(); ++i)
      idx = idx * subsystems_[i].dim + multi[i];
    return idx;
  }

  std::vector<int> decode(long index) const {
    std::vector<int> multi(subsystems_.size());
    for (std::size_t i = subsystems_.size(); i-- > 0;) {
      multi[i] = static_cast<int>(index % subsystems_[i].dim);
      index /= subsystems_[i].dim;
    }
    return multi;
  }

  friend bool operator==(const SpaceShape& a, const SpaceShape& b) {
    return a.subsystems_ == b.subsystems_;
  }

  /// Concatenation; subsystem names must stay unique.
  friend SpaceShape operator+(const SpaceShape& a, const SpaceShape& b) {
    std::vector<Subsystem> all = a.subsystems_;
    all.insert(all.end(), b.subsystems_.begin(), b.subsystems_.end());
    return SpaceShape(std::move(all));
  }

  std::string str() const {
    std::string out;
    for (const auto& s : subsystems_) {
      if (!out.empty()) out += "*";
      out += s.name + "(" + std::to_string(s.dim) + ")";
    }
    return out.empty() ? "scalar" : out;
  }

 private:
  std::vector<Subsystem> subsystems_;
  long total_dim_ = 1;
};

}  // namespace branchsim

#endif  // BRANCHSIM_SPACE_HPP
