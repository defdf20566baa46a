#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "branchsim/branching.hpp"
#include "branchsim/probability_check.hpp"
#include "branchsim/singling.hpp"
#include "helpers.hpp"

using namespace branchsim;
using testutil::random_ket;
using testutil::random_unitary;

namespace {

/// Analyzer split at theta entangled with two yes/no detectors and an
/// observer register: cos |x,yes,no,o0> + sin |y,no,yes,o1>.
Ket analyzer_universe(double theta_rad) {
  const SpaceShape full({{"ph", 2}, {"dx", 2}, {"dy", 2}, {"obs", 2}});
  Ket::Vector v = Ket::Vector::Zero(full.total_dim());
  v(full.encode({0, 1, 0, 0})) = std::cos(theta_rad);
  v(full.encode({1, 0, 1, 1})) = std::sin(theta_rad);
  return {full, std::move(v)};
}

BranchSet two_branch_set(double w0, double w1) {
  Ket::Vector v(2);
  v(0) = std::sqrt(w0);
  v(1) = std::sqrt(w1);
  return decompose(Ket(SpaceShape::single("s", 2), std::move(v)), {"s"});
}

}  // namespace

TEST_CASE("decompose: analyzer state at 30 degrees gives (0.75, 0.25)") {
  const BranchSet bs = decompose(analyzer_universe(M_PI / 6), {"dx", "dy", "obs"});
  REQUIRE(bs.size() == 2);
  CHECK(std::abs(bs.branches[0].weight() - 0.25) < 1e-12);  // (dx=0, dy=1, obs=1)
  CHECK(std::abs(bs.branches[1].weight() - 0.75) < 1e-12);  // (dx=1, dy=0, obs=0)
  CHECK(bs.branches[1].label.index_of("dx") == 1);
  CHECK(bs.branches[1].label.index_of("dy") == 0);
  CHECK(bs.branches[0].label.index_of("dy") == 1);
  for (const auto& b : bs.branches)
    CHECK(std::abs(norm(b.relative_ket) - 1.0) < 1e-12);
}

TEST_CASE("decompose: product state has a single unit branch") {
  Philox rng(31);
  const Ket sys = random_ket(SpaceShape::single("sys", 3), rng);
  const Ket apparatus = basis_ket(SpaceShape::single("app", 4), 0L);
  const BranchSet bs = decompose(tensor(sys, apparatus), {"app"});
  REQUIRE(bs.size() == 1);
  CHECK(std::abs(std::abs(bs.branches[0].coefficient) - 1.0) < 1e-12);
  CHECK(bs.branches[0].label.index_of("app") == 0);
}

TEST_CASE("decompose: spin-1 measurement gives exactly three branches") {
  const std::vector<double> w = {0.5, 0.3, 0.2};
  Ket::Vector amps(3);
  for (int i = 0; i < 3; ++i) amps(i) = std::sqrt(w[static_cast<std::size_t>(i)]);
  Ket state(SpaceShape::single("spin", 3), std::move(amps));
  state = tensor(state, basis_ket(SpaceShape::single("det", 3), 0L));
  state = tensor(state, basis_ket(SpaceShape::single("obs", 3), 0L));
  state = measure_entangle(state, {"spin", "det"});
  state = measure_entangle(state, {"det", "obs"});
  const BranchSet bs = decompose(state, {"det", "obs"});
  REQUIRE(bs.size() == 3);
  for (const auto& b : bs.branches) {
    const int k = b.label.index_of("det");
    CHECK(b.label.index_of("obs") == k);
    CHECK(std::abs(b.weight() - w[static_cast<std::size_t>(k)]) < 1e-12);
  }
}

TEST_CASE("decompose: contract checks and pruning") {
  const SpaceShape s({{"a", 2}, {"b", 2}});
  Ket::Vector v = Ket::Vector::Zero(4);
  v(0) = 0.5;
  CHECK_THROWS_AS(decompose(Ket(s, v), {"a"}), ContractError);        // unnormalized
  Ket ok = basis_ket(s, 0L);
  CHECK_THROWS_AS(decompose(ok, {"zz"}), CompositionError);           // unknown pointer

  // branches below 1e-14 squared mass are dropped, ones above survive
  Ket::Vector w = Ket::Vector::Zero(4);
  w(0) = std::sqrt(1.0 - 1e-16 - 1e-12);
  w(2) = 1e-8;  // squared 1e-16 -> dropped
  w(3) = 1e-6;  // squared 1e-12 -> kept
  const BranchSet bs = decompose(Ket(s, w), {"a", "b"});
  CHECK(bs.size() == 2);
}

TEST_CASE("decompose/reconstruct: random states round-trip") {
  Philox rng(32);
  const SpaceShape shape({{"a", 2}, {"b", 3}, {"c", 2}});
  for (int it = 0; it < 30; ++it) {
    const Ket psi = random_ket(shape, rng);
    const std::vector<std::vector<std::string>> pointers = {
        {"a"}, {"b"}, {"a", "c"}, {"a", "b", "c"}};
    for (const auto& ptr : pointers) {
      const BranchSet bs = decompose(psi, ptr);
      CHECK(std::abs(bs.total_weight() - 1.0) < 1e-10);
      CHECK(norm(reconstruct(bs) - psi) < 1e-10);
      for (const auto& b : bs.branches) {
        CHECK(std::abs(norm(b.relative_ket) - 1.0) < 1e-12);
        CHECK(b.label.outcomes.size() == ptr.size());
      }
    }
  }
}

TEST_CASE("measure_entangle: records the measured index in the register") {
  Philox rng(33);
  const int n = 3;
  Ket sys = random_ket(SpaceShape::single("sys", n), rng);
  Ket state = tensor(sys, basis_ket(SpaceShape::single("reg", n), 0L));
  const Ket out = measure_entangle(state, {"sys", "reg"});

  // oracle: amplitudes moved from (k, 0) to (k, k), everything else zero
  const SpaceShape full = state.shape;
  for (int k = 0; k < n; ++k)
    CHECK(std::abs(out.amps(full.encode({k, k})) - sys.amps(k)) < 1e-14);
  CHECK(std::abs(norm(out) - 1.0) < 1e-12);

  // matches the lifted coupling matrix route
  const Ket via_map = apply(coupling_map({"sys", "reg"}, full), state);
  CHECK(norm(out - via_map) < 1e-14);
}

TEST_CASE("measure_entangle: definite input stays a single branch") {
  Ket state = tensor(basis_ket(SpaceShape::single("sys", 3), 1L),
                     basis_ket(SpaceShape::single("reg", 3), 0L));
  const Ket out = measure_entangle(state, {"sys", "reg"});
  const BranchSet bs = decompose(out, {"reg"});
  REQUIRE(bs.size() == 1);
  CHECK(bs.branches[0].label.index_of("reg") == 1);
}

TEST_CASE("measure_entangle: repeated measurement records (k, k) only") {
  Philox rng(34);
  for (int it = 0; it < 20; ++it) {
    Ket state = random_ket(SpaceShape::single("sys", 3), rng);
    state = tensor(state, basis_ket(SpaceShape::single("r1", 3), 0L));
    state = tensor(state, basis_ket(SpaceShape::single("r2", 3), 0L));
    state = measure_entangle(state, {"sys", "r1"});
    state = measure_entangle(state, {"sys", "r2"});
    for (const auto& b : decompose(state, {"r1", "r2"}).branches)
      CHECK(b.label.index_of("r1") == b.label.index_of("r2"));
  }
}

TEST_CASE("measure_entangle: contract violations") {
  // register already holding a record
  Ket bad = tensor(basis_ket(SpaceShape::single("sys", 2), 0L),
                   basis_ket(SpaceShape::single("reg", 2), 1L));
  CHECK_THROWS_AS(measure_entangle(bad, {"sys", "reg"}), ContractError);

  // register too small to hold the outcome
  Ket small = tensor(basis_ket(SpaceShape::single("sys", 3), 0L),
                     basis_ket(SpaceShape::single("reg", 2), 0L));
  CHECK_THROWS_AS(measure_entangle(small, {"sys", "reg"}), CompositionError);
}

TEST_CASE("property: branch isolation under pointer-sector dynamics") {
  Philox rng(35);
  const SpaceShape shape({{"ptr", 3}, {"rest", 4}});
  for (int it = 0; it < 30; ++it) {
    const Ket psi = random_ket(shape, rng);
    const LinearMap u = random_unitary(SpaceShape::single("rest", 4), rng);
    const LinearMap lifted = lift(u, {"rest"}, shape);

    const BranchSet evolved_then = decompose(apply(lifted, psi), {"ptr"});
    const BranchSet then_evolved = decompose(psi, {"ptr"});

    REQUIRE(evolved_then.size() == then_evolved.size());
    for (std::size_t i = 0; i < then_evolved.size(); ++i) {
      const auto& b0 = then_evolved.branches[i];
      const auto& b1 = evolved_then.branches[i];
      CHECK(b0.label == b1.label);
      // compare coefficient * ket products: the per-branch phase convention
      // must not matter
      const Ket lhs = b1.coefficient * b1.relative_ket;
      const Ket rhs = b0.coefficient * apply(u, b0.relative_ket);
      CHECK(norm(lhs - rhs) < 1e-10);
    }
  }
}

TEST_CASE("property: two observers of one apparatus always agree") {
  Philox rng(36);
  for (int it = 0; it < 30; ++it) {
    Ket state = random_ket(SpaceShape::single("sys", 3), rng);
    state = tensor(state, basis_ket(SpaceShape::single("app", 3), 0L));
    state = tensor(state, basis_ket(SpaceShape::single("o1", 3), 0L));
    state = tensor(state, basis_ket(SpaceShape::single("o2", 3), 0L));
    state = measure_entangle(state, {"sys", "app"});
    state = measure_entangle(state, {"app", "o1"});
    state = measure_entangle(state, {"app", "o2"});
    for (const auto& b : decompose(state, {"app", "o1", "o2"}).branches) {
      CHECK(b.label.index_of("o1") == b.label.index_of("app"));
      CHECK(b.label.index_of("o2") == b.label.index_of("app"));
    }
  }
}

TEST_CASE("sample_perception: born frequencies at (.35, .65)") {
  const BranchSet bs = two_branch_set(0.35, 0.65);
  const std::size_t n = 100000;
  const auto draws = sample_many(bs, SinglingPolicy::Born(), 2024, n);
  std::size_t ones = 0;
  for (auto d : draws) ones += d;
  const double f1 = static_cast<double>(ones) / static_cast<double>(n);
  const double sigma = std::sqrt(0.35 * 0.65 / static_cast<double>(n));
  CHECK(std::abs(f1 - 0.65) <= 3 * sigma);
}

TEST_CASE("sample_perception: degenerate and error cases") {
  const BranchSet single = two_branch_set(1.0, 0.0);  // zero branch pruned
  REQUIRE(single.size() == 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    CHECK(sample_perception(single, SinglingPolicy::Born(), seed) ==
          single.branches[0].label);

  BranchSet empty;
  CHECK_THROWS_AS(sample_perception(empty, SinglingPolicy::Born(), 1), ContractError);
}

TEST_CASE("sample_perception: ten nearly-certain runs, binomial structure") {
  // closed-form binomial oracle
  const double p1 = 0.9999;
  const double p_all_ones = std::pow(p1, 10);

  // enumerate the outcome space explicitly
  int sequences = 0, five_twos = 0;
  for (int mask = 0; mask < (1 << 10); ++mask) {
    ++sequences;
    int twos = 0;
    for (int b = 0; b < 10; ++b)
      if (mask & (1 << b)) ++twos;
    if (twos == 5) ++five_twos;
  }
  CHECK(sequences == 1024);
  CHECK(five_twos == 252);

  // Monte Carlo through the sampling machinery
  const BranchSet bs = two_branch_set(1 - p1, p1);  // index 1 = outcome "1"
  const std::size_t runs = 100000;
  Philox rng(55);
  std::size_t all_ones = 0;
  const auto weights = SinglingPolicy::Born().selection_weights(bs.weights());
  for (std::size_t r = 0; r < runs; ++r) {
    bool all1 = true;
    for (int k = 0; k < 10; ++k)
      if (detail::draw_index(weights, rng.uniform01()) != 1) all1 = false;
    all_ones += all1;
  }
  const double f = static_cast<double>(all_ones) / static_cast<double>(runs);
  const double sigma = std::sqrt(p_all_ones * (1 - p_all_ones) / static_cast<double>(runs));
  CHECK(std::abs(f - p_all_ones) <= 3 * sigma);
}

TEST_CASE("sample_perception: norm-monotone power-law policies") {
  const BranchSet bs = two_branch_set(0.5, 0.5);
  // g(w) = w^2 on unequal weights: selection follows w^2 / sum
  const BranchSet uneven = two_branch_set(0.25, 0.75);
  const auto w2 = SinglingPolicy::PowerLaw(2.0).selection_weights(uneven.weights());
  CHECK(std::abs(w2[0] / (w2[0] + w2[1]) - 0.0625 / 0.625) < 1e-12);

  const std::size_t n = 100000;
  const auto draws = sample_many(uneven, SinglingPolicy::PowerLaw(2.0), 77, n);
  std::size_t ones = 0;
  for (auto d : draws) ones += d;
  const double expect = 0.5625 / 0.625;  // w1^2 / (w0^2 + w1^2)
  const double sigma = std::sqrt(expect * (1 - expect) / static_cast<double>(n));
  CHECK(std::abs(static_cast<double>(ones) / static_cast<double>(n) - expect) <= 3 * sigma);

  // c = 1 reproduces born selection weights exactly
  const auto w1 = SinglingPolicy::PowerLaw(1.0).selection_weights(uneven.weights());
  CHECK(std::abs(w1[0] - 0.25) < 1e-12);

  CHECK_THROWS_AS(SinglingPolicy::PowerLaw(0.0), ContractError);
  // a weight function that is not strictly increasing is rejected
  const auto bad = SinglingPolicy::NormMonotone([](double) { return 1.0; });
  CHECK_THROWS_AS(bad.selection_weights(bs.weights()), ContractError);
  (void)bs;
}

TEST_CASE("sample_perception: independent-minds policy weights like born per mind") {
  const BranchSet bs = two_branch_set(0.3, 0.7);
  const auto born = SinglingPolicy::Born().selection_weights(bs.weights());
  const auto minds = SinglingPolicy::IndependentMinds().selection_weights(bs.weights());
  CHECK(born == minds);
  const auto a = sample_many(bs, SinglingPolicy::Born(), 5150, 500);
  const auto b = sample_many(bs, SinglingPolicy::IndependentMinds(), 5150, 500);
  CHECK(a == b);
}

TEST_CASE("sample_perception: determinism and stream separation") {
  const BranchSet bs = two_branch_set(0.3, 0.7);
  const auto a = sample_many(bs, SinglingPolicy::Born(), 123, 1000, 0);
  const auto b = sample_many(bs, SinglingPolicy::Born(), 123, 1000, 0);
  const auto c = sample_many(bs, SinglingPolicy::Born(), 123, 1000, 1);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("property: chi-square goodness of fit across random branch sets") {
  Philox rng(91);
  for (int it = 0; it < 8; ++it) {
    const int nb = 2 + static_cast<int>(rng.index(7));
    Ket::Vector v(nb);
    for (int i = 0; i < nb; ++i) v(i) = testutil::random_amp(rng);
    const BranchSet bs =
        decompose(normalized(Ket(SpaceShape::single("s", nb), v)), {"s"});
    const std::size_t n = 100000;
    const auto draws = sample_many(bs, SinglingPolicy::Born(), 1000 + it, n);
    std::vector<double> counts(bs.size(), 0.0);
    for (auto d : draws) counts[d] += 1.0;
    double chi2 = 0;
    for (std::size_t i = 0; i < bs.size(); ++i) {
      const double e = static_cast<double>(n) * bs.branches[i].weight();
      chi2 += (counts[i] - e) * (counts[i] - e) / e;
    }
    CHECK(chi2 < testutil::chi2_quantile_999(static_cast<int>(bs.size()) - 1));
  }
}

TEST_CASE("check_probability_functional: only the identity exponent works") {
  Philox rng(92);
  for (int it = 0; it < 20; ++it) {
    const int nb = 2 + static_cast<int>(rng.index(6));
    Ket::Vector v(nb);
    for (int i = 0; i < nb; ++i) v(i) = testutil::random_amp(rng);
    const BranchSet bs =
        decompose(normalized(Ket(SpaceShape::single("s", nb), v)), {"s"});
    const auto res = check_probability_functional(1.0, bs);
    CHECK(res.normalization_ok);
    CHECK(res.refinement_ok);
    CHECK(res.verdict() == ProbabilityVerdict::consistent);
  }
}

TEST_CASE("check_probability_functional: squared law fails normalization at (.35,.65)") {
  const auto res = check_probability_functional(2.0, two_branch_set(0.35, 0.65));
  CHECK(std::abs(res.prob_sum - 0.545) < 1e-12);
  CHECK_FALSE(res.normalization_ok);
  CHECK(res.verdict() == ProbabilityVerdict::normalization_failure);
}

TEST_CASE("check_probability_functional: squared law fails refinement at (.5,.5)") {
  const auto res = check_probability_functional(2.0, two_branch_set(0.5, 0.5));
  // fine-graining one branch moves the untouched branch from 1/2 to
  // 0.25/0.375 = 2/3 under the squared law
  CHECK_FALSE(res.refinement_ok);
  CHECK(std::abs(res.max_refinement_shift - (2.0 / 3.0 - 0.5)) < 1e-9);
}

TEST_CASE("check_probability_functional: other exponents fail on both fixtures") {
  for (double k : {0.5, 2.0, 3.0}) {
    for (auto& bs : {two_branch_set(0.35, 0.65), two_branch_set(0.5, 0.5)}) {
      const auto res = check_probability_functional(k, bs);
      CHECK_FALSE(res.consistent());
    }
  }
  CHECK_THROWS_AS(check_probability_functional(0.0, two_branch_set(0.5, 0.5)),
                  ContractError);
  CHECK_THROWS_AS(check_probability_functional(-1.0, two_branch_set(0.5, 0.5)),
                  ContractError);
}

TEST_CASE("many_minds_joint: independent minds disagree, shared selection never") {
  const auto ind = many_minds_joint(0.2, MindMode::independent, 1000000, 314);
  const double n = 1000000;
  CHECK(std::abs(ind.f11 - 0.04) <= 3 * std::sqrt(0.04 * 0.96 / n));
  CHECK(std::abs(ind.f22 - 0.64) <= 3 * std::sqrt(0.64 * 0.36 / n));
  CHECK(std::abs(ind.f_disagree - 0.32) <= 3 * std::sqrt(0.32 * 0.68 / n));
  CHECK(std::abs(ind.f11 + ind.f22 + ind.f_disagree - 1.0) < 1e-12);

  const auto cor = many_minds_joint(0.2, MindMode::correlated, 100000, 314);
  CHECK(cor.f_disagree == 0.0);
  CHECK(std::abs(cor.f11 - 0.2) <= 3 * std::sqrt(0.2 * 0.8 / 100000.0));

  const auto degenerate = many_minds_joint(0.0, MindMode::independent, 1000, 1);
  CHECK(degenerate.f22 == 1.0);
  CHECK_THROWS_AS(many_minds_joint(1.5, MindMode::independent, 10, 1), ContractError);
}
