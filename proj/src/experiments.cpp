#include "branchsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>

#include "branchsim/bohm.hpp"
#include "branchsim/branching.hpp"
#include "branchsim/errors.hpp"
#include "branchsim/grains.hpp"
#include "branchsim/grid.hpp"
#include "branchsim/ket.hpp"
#include "branchsim/linear_map.hpp"
#include "branchsim/singling.hpp"
#include "branchsim/stats.hpp"

namespace branchsim {

namespace {

double deg2rad(double deg) { return deg * M_PI / 180.0; }

struct Interval {
  double lo = 0, hi = 0;
};

/// Wilson score interval for a binomial proportion at z standard errors.
Interval wilson(double successes, double n, double z) {
  const double phat = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2 * n)) / denom;
  const double half =
      z * std::sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / denom;
  return {center - half, center + half};
}

/// Analyzer basis change: maps {|theta>, |theta_perp>} onto the
/// computational basis, so a pointer decomposition afterwards reads out the
/// analyzer outcomes.
LinearMap analyzer_rotation(double theta_rad) {
  LinearMap::Matrix m(2, 2);
  m << std::cos(theta_rad), std::sin(theta_rad),
      -std::sin(theta_rad), std::cos(theta_rad);
  return {SpaceShape::single("pol", 2), SpaceShape::single("pol", 2),
          std::move(m), true};
}

Ket polarization_singlet() {
  SpaceShape shape({{"polA", 2}, {"polB", 2}});
  Ket::Vector v = Ket::Vector::Zero(4);
  v(shape.encode({0, 1})) = M_SQRT1_2;
  v(shape.encode({1, 0})) = -M_SQRT1_2;
  return {std::move(shape), std::move(v)};
}

/// Joint +-1 outcome probabilities for analyzers at angles (a, b).
/// Index s*2+t with s,t = 0 for the analyzer's pass axis, 1 for the
/// perpendicular one.
std::array<double, 4> singlet_joint_probs(double a_rad, double b_rad) {
  Ket psi = polarization_singlet();
  psi = apply(lift(analyzer_rotation(a_rad), {"polA"}, psi.shape), psi);
  psi = apply(lift(analyzer_rotation(b_rad), {"polB"}, psi.shape), psi);
  const BranchSet bs = decompose(psi, {"polA", "polB"});
  std::array<double, 4> p{0, 0, 0, 0};
  for (const auto& b : bs.branches) {
    const int s = b.label.index_of("polA");
    const int t = b.label.index_of("polB");
    p[static_cast<std::size_t>(s * 2 + t)] = b.weight();
  }
  return p;
}

double correlation_from_probs(const std::array<double, 4>& p) {
  return p[0] + p[3] - p[1] - p[2];
}

/// max |S| over the 16 deterministic local assignments, in exact integer
/// arithmetic.
int chsh_local_bound() {
  int best = 0;
  for (int a : {-1, 1})
    for (int ap : {-1, 1})
      for (int b : {-1, 1})
        for (int bp : {-1, 1})
          best = std::max(best, std::abs(a * b - a * bp + ap * b + ap * bp));
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// polarization
// ---------------------------------------------------------------------------

ExperimentReport run_polarization(double theta_deg, long n_photons,
                                  std::uint64_t seed) {
  if (n_photons < 1) throw ContractError("n_photons must be at least 1");
  const double th = deg2rad(theta_deg);

  // projection route: the polarizer keeps the x component, and the surviving
  // norm squared is the pass probability
  const Ket photon = make_ket<double>("pol", {std::cos(th), std::sin(th)});
  const LinearMap proj_x = projector_onto(make_ket<double>("pol", {1.0, 0.0}));
  const double pass_weight = norm_sq(apply(proj_x, photon));

  // branching route: a detector register entangled with the polarization
  Ket state = tensor(photon, basis_ket(SpaceShape::single("det", 2), 0L));
  state = measure_entangle(state, {"pol", "det"});
  const BranchSet bs = decompose(state, {"det"});

  double branch_pass_weight = 0;
  for (const auto& b : bs.branches)
    if (b.label.index_of("det") == 0) branch_pass_weight = b.weight();

  const auto draws = sample_many(bs, SinglingPolicy::Born(), seed,
                                 static_cast<std::size_t>(n_photons));
  long pass_count = 0;
  for (auto d : draws)
    if (bs.branches[d].label.index_of("det") == 0) ++pass_count;

  const double n = static_cast<double>(n_photons);
  const double expected = n * branch_pass_weight;
  const double sigma = std::sqrt(n * branch_pass_weight * (1 - branch_pass_weight));

  ExperimentReport r;
  r.name = "run_polarization";
  r.params = {{"theta_deg", theta_deg}, {"n_photons", n_photons}, {"seed", seed}};
  r.scalars = {{"pass_probability", branch_pass_weight},
               {"projector_pass_weight", pass_weight},
               {"pass_count", static_cast<double>(pass_count)},
               {"pass_fraction", static_cast<double>(pass_count) / n},
               {"expected_count", expected},
               {"sigma_count", sigma}};
  r.verdicts = {{"projection_matches_branch_weight",
                 std::abs(pass_weight - branch_pass_weight) <= 1e-12},
                {"counts_within_3sigma",
                 count_within_3sigma(static_cast<double>(pass_count), n,
                                     branch_pass_weight)}};
  return r;
}

// ---------------------------------------------------------------------------
// stern-gerlach
// ---------------------------------------------------------------------------

ExperimentReport run_stern_gerlach(const std::vector<std::complex<double>>& amplitudes,
                                   const std::vector<std::string>& chain,
                                   long n_runs, std::uint64_t seed) {
  const int n = static_cast<int>(amplitudes.size());
  if (n < 2) throw ContractError("need at least two spin components");
  double wsum = 0;
  for (const auto& a : amplitudes) wsum += std::norm(a);
  if (std::abs(wsum - 1.0) > 1e-9)
    throw ContractError("spin amplitudes must have unit total weight");
  if (chain.empty()) throw ContractError("measurement chain must not be empty");
  for (const auto& axis : chain)
    if (axis != "z")
      throw ContractError("only z-axis measurement chains are supported");
  if (n_runs < 1) throw ContractError("n_runs must be at least 1");

  const int stages = static_cast<int>(chain.size());
  Ket::Vector spin_amps(n);
  for (int i = 0; i < n; ++i) spin_amps(i) = amplitudes[static_cast<std::size_t>(i)];
  Ket state(SpaceShape::single("spin", n), std::move(spin_amps));

  std::vector<std::string> pointer;
  for (int j = 0; j < stages; ++j) {
    const std::string det = "det_" + std::to_string(j + 1);
    const std::string obs = "obs_" + std::to_string(j + 1);
    state = tensor(state, basis_ket(SpaceShape::single(det, n), 0L));
    state = tensor(state, basis_ket(SpaceShape::single(obs, n), 0L));
    pointer.push_back(det);
    pointer.push_back(obs);
  }
  for (int j = 0; j < stages; ++j) {
    const std::string det = "det_" + std::to_string(j + 1);
    const std::string obs = "obs_" + std::to_string(j + 1);
    state = measure_entangle(state, {"spin", det});  // detector reads the spin
    state = measure_entangle(state, {det, obs});     // observer reads the detector
  }

  const BranchSet bs = decompose(state, pointer);

  bool concordant = true;
  std::vector<double> branch_weights(static_cast<std::size_t>(n), 0.0);
  for (const auto& b : bs.branches) {
    const int k = b.label.outcomes[0].second;
    for (const auto& [name, idx] : b.label.outcomes)
      if (idx != k) concordant = false;
    branch_weights[static_cast<std::size_t>(k)] = b.weight();
  }

  bool weights_match = true;
  std::vector<double> input_weights;
  for (int k = 0; k < n; ++k) {
    input_weights.push_back(std::norm(amplitudes[static_cast<std::size_t>(k)]));
    if (std::abs(branch_weights[static_cast<std::size_t>(k)] - input_weights.back()) > 1e-10)
      weights_match = false;
  }

  const auto draws = sample_many(bs, SinglingPolicy::Born(), seed,
                                 static_cast<std::size_t>(n_runs));
  std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
  for (auto d : draws)
    counts[static_cast<std::size_t>(bs.branches[d].label.index_of("det_1"))] += 1.0;

  bool counts_ok = true;
  for (int k = 0; k < n; ++k)
    if (!count_within_3sigma(counts[static_cast<std::size_t>(k)],
                             static_cast<double>(n_runs),
                             branch_weights[static_cast<std::size_t>(k)]))
      counts_ok = false;

  long expected_branches = 0;
  for (double w : input_weights)
    if (w > 1e-14) ++expected_branches;

  std::vector<double> amp_echo;
  for (const auto& a : amplitudes) {
    amp_echo.push_back(a.real());
    amp_echo.push_back(a.imag());
  }

  ExperimentReport r;
  r.name = "run_stern_gerlach";
  r.params = {{"amplitudes_re_im", amp_echo},
              {"chain", chain},
              {"n_runs", n_runs},
              {"seed", seed}};
  r.scalars = {{"branch_count", static_cast<double>(bs.size())},
               {"spin_components", static_cast<double>(n)},
               {"measurements", static_cast<double>(stages)}};
  r.arrays = {{"branch_weights", branch_weights},
              {"input_weights", input_weights},
              {"counts", counts}};
  r.verdicts = {{"weights_match_born", weights_match},
                {"records_concordant", concordant},
                {"branch_count_matches", static_cast<long>(bs.size()) == expected_branches},
                {"counts_within_3sigma", counts_ok}};
  return r;
}

// ---------------------------------------------------------------------------
// schrodinger cat
// ---------------------------------------------------------------------------

ExperimentReport run_schrodinger_cat(double p_decay, long n_runs,
                                     std::uint64_t seed) {
  if (!(p_decay >= 0.0 && p_decay <= 1.0))
    throw ContractError("p_decay must lie in [0, 1]");
  if (n_runs < 1) throw ContractError("n_runs must be at least 1");

  Ket nucleus = make_ket<double>("nucleus", {std::sqrt(1.0 - p_decay), std::sqrt(p_decay)});
  Ket state = tensor(nucleus, basis_ket(SpaceShape::single("memory", 2), 0L));
  state = tensor(state, basis_ket(SpaceShape::single("observer", 2), 0L));
  state = measure_entangle(state, {"nucleus", "memory"});
  state = measure_entangle(state, {"memory", "observer"});

  const BranchSet bs = decompose(state, {"memory", "observer"});

  bool observer_concordant = true;
  for (const auto& b : bs.branches)
    if (b.label.index_of("memory") != b.label.index_of("observer"))
      observer_concordant = false;

  const auto draws = sample_many(bs, SinglingPolicy::Born(), seed,
                                 static_cast<std::size_t>(n_runs));
  long ones = 0;
  bool single_record = true;
  for (auto d : draws) {
    const BranchLabel& label = bs.branches[d].label;
    int memory_entries = 0, record = -1;
    for (const auto& [name, idx] : label.outcomes)
      if (name == "memory") {
        ++memory_entries;
        record = idx;
      }
    if (memory_entries != 1 || (record != 0 && record != 1)) single_record = false;
    if (record == 1) ++ones;
  }

  const double expected = static_cast<double>(n_runs) * p_decay;
  const double sigma = std::sqrt(static_cast<double>(n_runs) * p_decay * (1 - p_decay));

  ExperimentReport r;
  r.name = "run_schrodinger_cat";
  r.params = {{"p_decay", p_decay}, {"n_runs", n_runs}, {"seed", seed}};
  r.scalars = {{"ones_count", static_cast<double>(ones)},
               {"zeros_count", static_cast<double>(n_runs - ones)},
               {"ones_fraction", static_cast<double>(ones) / static_cast<double>(n_runs)},
               {"expected_ones", expected},
               {"sigma_ones", sigma}};
  r.verdicts = {{"one_record_per_run", single_record},
                {"observer_concordant", observer_concordant},
                {"ones_within_3sigma",
                 count_within_3sigma(static_cast<double>(ones),
                                     static_cast<double>(n_runs), p_decay)}};
  return r;
}

// ---------------------------------------------------------------------------
// bell / chsh
// ---------------------------------------------------------------------------

ExperimentReport run_bell_chsh(const std::array<double, 4>& angles_deg,
                               ChshMode mode, long n_samples,
                               std::uint64_t seed) {
  const double a = deg2rad(angles_deg[0]);
  const double ap = deg2rad(angles_deg[1]);
  const double b = deg2rad(angles_deg[2]);
  const double bp = deg2rad(angles_deg[3]);

  const std::array<std::pair<double, double>, 4> pairs = {
      {{a, b}, {a, bp}, {ap, b}, {ap, bp}}};

  std::array<double, 4> E{};
  std::array<std::array<double, 4>, 4> probs{};
  for (std::size_t i = 0; i < 4; ++i) {
    probs[i] = singlet_joint_probs(pairs[i].first, pairs[i].second);
    E[i] = correlation_from_probs(probs[i]);
  }
  const double S = E[0] - E[1] + E[2] + E[3];
  const int local_bound = chsh_local_bound();

  ExperimentReport r;
  r.name = "run_bell_chsh";
  r.params = {{"angles_deg", std::vector<double>(angles_deg.begin(), angles_deg.end())},
              {"mode", mode == ChshMode::analytic ? "analytic" : "sampled"}};
  r.scalars = {{"E_ab", E[0]},
               {"E_ab_prime", E[1]},
               {"E_aprime_b", E[2]},
               {"E_aprime_bprime", E[3]},
               {"S", S},
               {"S_abs", std::abs(S)},
               {"local_bound", static_cast<double>(local_bound)}};
  r.verdicts = {{"local_bound_is_two", local_bound == 2},
                {"quantum_exceeds_local_bound", std::abs(S) > local_bound}};

  if (mode == ChshMode::sampled) {
    if (n_samples < 1) throw ContractError("n_samples must be at least 1");
    r.params["n_samples"] = n_samples;
    r.params["seed"] = seed;
    // one sub-stream per analyzer pair
    double S_hat = 0, S_lo = 0, S_hi = 0;
    const std::array<double, 4> coeff = {1.0, -1.0, 1.0, 1.0};
    for (std::size_t i = 0; i < 4; ++i) {
      Philox rng(seed, i);
      const std::vector<double> w(probs[i].begin(), probs[i].end());
      long same = 0;
      for (long t = 0; t < n_samples; ++t) {
        const std::size_t o = detail::draw_index(w, rng.uniform01());
        if (o == 0 || o == 3) ++same;
      }
      const double e_hat = 2.0 * static_cast<double>(same) / n_samples - 1.0;
      const Interval w3 = wilson(static_cast<double>(same),
                                 static_cast<double>(n_samples), 3.0);
      const Interval ei = {2 * w3.lo - 1, 2 * w3.hi - 1};
      S_hat += coeff[i] * e_hat;
      S_lo += coeff[i] > 0 ? ei.lo : -ei.hi;
      S_hi += coeff[i] > 0 ? ei.hi : -ei.lo;
    }
    r.scalars["S_sampled"] = S_hat;
    r.scalars["S_wilson_lo"] = S_lo;
    r.scalars["S_wilson_hi"] = S_hi;
    r.verdicts["analytic_S_within_wilson"] = (S >= S_lo && S <= S_hi);
  }
  return r;
}

// ---------------------------------------------------------------------------
// mach-zehnder
// ---------------------------------------------------------------------------

ExperimentReport run_mach_zehnder(double phase_rad, bool second_bs,
                                  MzDecision /*decision: orders the run log
                                               only; amplitudes identical*/) {
  const SpaceShape path = SpaceShape::single("path", 2);
  LinearMap::Matrix h(2, 2);
  h << M_SQRT1_2, M_SQRT1_2, M_SQRT1_2, -M_SQRT1_2;
  const LinearMap splitter(path, path, h, true);

  LinearMap::Matrix ph = LinearMap::Matrix::Identity(2, 2);
  ph(1, 1) = std::polar(1.0, phase_rad);
  const LinearMap arm_phase(path, path, ph, true);

  Ket psi = basis_ket(path, 0L);
  psi = apply(splitter, psi);
  psi = apply(arm_phase, psi);
  if (second_bs) psi = apply(splitter, psi);

  const double p0 = std::norm(psi[0]);
  const double p1 = std::norm(psi[1]);

  ExperimentReport r;
  r.name = "run_mach_zehnder";
  r.params = {{"phase_rad", phase_rad}, {"second_bs", second_bs}};
  r.scalars = {{"p_detector_0", p0}, {"p_detector_1", p1}};
  r.verdicts = {{"probabilities_sum_to_one", std::abs(p0 + p1 - 1.0) <= 1e-12}};
  return r;
}

// ---------------------------------------------------------------------------
// quantum eraser and double slit
// ---------------------------------------------------------------------------

namespace {

struct SlitWaves {
  Grid1D grid;
  Eigen::ArrayXd k;          // cropped ascending momentum axis
  Eigen::VectorXcd specL;    // shifted spectra over the cropped window
  Eigen::VectorXcd specR;
  Eigen::ArrayXd envelope;   // |sL|^2 + |sR|^2
  double separation = 0;
};

/// Two unit-norm slit waves, Gaussian-apodized by default, and their
/// far-field spectra cropped to the window that carries the envelope mass.
SlitWaves make_slit_waves(const std::string& profile, long grid_n,
                          double half_width, double separation,
                          double slit_sigma, double rect_width) {
  const Grid1D grid(grid_n, 2 * half_width / static_cast<double>(grid_n), -half_width);
  GridWave wl(grid, Eigen::VectorXcd::Zero(grid_n), 1.0, 1.0);
  GridWave wr = wl;
  if (profile == "gaussian") {
    wl = gaussian_packet(grid, -separation / 2, slit_sigma, 0.0, 1.0, 1.0);
    wr = gaussian_packet(grid, +separation / 2, slit_sigma, 0.0, 1.0, 1.0);
  } else if (profile == "rect") {
    const GridWave broad = gaussian_packet(grid, 0.0, half_width / 8, 0.0, 1.0, 1.0);
    const auto range = [&](double center) {
      const long c = static_cast<long>((center - grid.origin) / grid.dx);
      const long w = std::max<long>(2, static_cast<long>(rect_width / grid.dx));
      return IndexRange{c - w / 2, c - w / 2 + w};
    };
    wl = slit_mask(broad, {range(-separation / 2)}).wave;
    wr = slit_mask(broad, {range(+separation / 2)}).wave;
  } else {
    throw ContractError("slit_profile must be 'gaussian' or 'rect'");
  }

  const Eigen::VectorXcd sl = spectrum_shifted(wl);
  const Eigen::VectorXcd sr = spectrum_shifted(wr);
  const Eigen::ArrayXd env = sl.array().abs2() + sr.array().abs2();
  const double floor = 1e-10 * env.maxCoeff();
  long lo = 0, hi = grid_n - 1;
  while (lo < hi && env(lo) < floor) ++lo;
  while (hi > lo && env(hi) < floor) --hi;
  const long len = hi - lo + 1;

  SlitWaves s;
  s.grid = grid;
  s.k = momentum_axis(grid).segment(lo, len);
  s.specL = sl.segment(lo, len);
  s.specR = sr.segment(lo, len);
  s.envelope = env.segment(lo, len);
  s.separation = separation;
  return s;
}

Eigen::ArrayXd tagged_intensity(const SlitWaves& s, const Eigen::Vector2cd& polL,
                                const Eigen::Vector2cd& polR) {
  Eigen::ArrayXd out(s.k.size());
  for (long i = 0; i < s.k.size(); ++i)
    out(i) = 0.5 * (s.specL(i) * polL + s.specR(i) * polR).squaredNorm();
  return out;
}

/// Coincidence amplitude after projecting the partner onto the analyzer
/// direction theta.
Eigen::ArrayXd conditioned_intensity(const SlitWaves& s,
                                     const Eigen::Vector2cd& polL,
                                     const Eigen::Vector2cd& polR,
                                     double theta_rad) {
  const std::complex<double> cl =
      std::cos(theta_rad) * polL(0) + std::sin(theta_rad) * polL(1);
  const std::complex<double> cr =
      std::cos(theta_rad) * polR(0) + std::sin(theta_rad) * polR(1);
  Eigen::ArrayXd out(s.k.size());
  for (long i = 0; i < s.k.size(); ++i)
    out(i) = 0.5 * std::norm(s.specL(i) * cl + s.specR(i) * cr);
  return out;
}

std::vector<double> to_std(const Eigen::ArrayXd& a) {
  return {a.data(), a.data() + a.size()};
}

}  // namespace

ExperimentReport run_quantum_eraser(int variant, double cond_angle_deg,
                                    int screen_bins,
                                    const std::string& slit_profile) {
  if (variant < 1 || variant > 4) throw ContractError("variant must be 1..4");
  if (screen_bins < 8) throw ContractError("screen_bins must be at least 8");

  const SlitWaves s = make_slit_waves(slit_profile, 4096, 40.0, 3.0, 0.1, 0.5);
  const bool orthogonal_tags = variant != 1;
  const bool conditioned = variant >= 3;
  const Eigen::Vector2cd pol_x(1.0, 0.0), pol_y(0.0, 1.0);
  const Eigen::Vector2cd polL = pol_x;
  const Eigen::Vector2cd polR = orthogonal_tags ? pol_y : pol_x;
  const double marker_overlap = std::abs(polL.dot(polR));

  const Eigen::ArrayXd unconditioned = tagged_intensity(s, polL, polR);
  const double total = unconditioned.sum();
  const ScreenPattern unc_binned = detail::rebin_pattern(s.k, unconditioned, screen_bins);

  ExperimentReport r;
  r.name = "run_quantum_eraser";
  r.params = {{"tagging", orthogonal_tags ? "orthogonal" : "aligned"},
              {"conditioned", conditioned},
              {"screen_bins", screen_bins},
              {"slit_profile", slit_profile},
              {"slit_separation", s.separation}};
  r.scalars["marker_overlap"] = marker_overlap;
  r.arrays["bin_center_m"] = to_std(unc_binned.bin_center);

  if (!conditioned) {
    const double vis = fringe_visibility(unconditioned, s.envelope);
    r.scalars["visibility"] = vis;
    r.arrays["intensity"] = to_std(unc_binned.intensity);
    if (variant == 1) {
      r.verdicts["visibility_near_unit"] = vis > 0.999;
    } else {
      // orthogonal tags: the pattern must equal the incoherent sum of the
      // two single-slit patterns
      const Eigen::ArrayXd single_sum =
          0.5 * (s.specL.array().abs2() + s.specR.array().abs2());
      const ScreenPattern sum_binned = detail::rebin_pattern(s.k, single_sum, screen_bins);
      r.arrays["intensity_incoherent_sum"] = to_std(sum_binned.intensity);
      const double maxdiff =
          (unc_binned.intensity - sum_binned.intensity).abs().maxCoeff();
      r.scalars["max_deviation_from_incoherent_sum"] = maxdiff;
      r.verdicts["visibility_zero"] = vis < 1e-9;
      r.verdicts["equals_incoherent_sum"] = maxdiff < 1e-9;
    }
    return r;
  }

  // coincidence post-selection at theta and theta + 90
  const double th = deg2rad(cond_angle_deg);
  const Eigen::ArrayXd cond = conditioned_intensity(s, polL, polR, th);
  const Eigen::ArrayXd cond_perp = conditioned_intensity(s, polL, polR, th + M_PI / 2);
  const double f = cond.sum() / total;
  const double f_perp = cond_perp.sum() / total;

  const double vis = fringe_visibility(cond, s.envelope);
  const double vis_perp = fringe_visibility(cond_perp, s.envelope);
  const std::complex<double> cl = std::cos(th) * polL(0) + std::sin(th) * polL(1);
  const std::complex<double> cr = std::cos(th) * polR(0) + std::sin(th) * polR(1);
  const double expected_vis =
      2 * std::abs(cl) * std::abs(cr) / (std::norm(cl) + std::norm(cr));

  const ScreenPattern cond_binned = detail::rebin_pattern(s.k, cond, screen_bins);
  const ScreenPattern perp_binned = detail::rebin_pattern(s.k, cond_perp, screen_bins);
  const Eigen::ArrayXd recombined =
      f * cond_binned.intensity + f_perp * perp_binned.intensity;
  const double maxdiff = (recombined - unc_binned.intensity).abs().maxCoeff();

  r.params["cond_angle_deg"] = cond_angle_deg;
  r.scalars["visibility"] = vis;
  r.scalars["visibility_complementary"] = vis_perp;
  r.scalars["expected_visibility"] = expected_vis;
  r.scalars["coincidence_fraction"] = f;
  r.scalars["coincidence_fraction_complementary"] = f_perp;
  r.scalars["max_recombination_error"] = maxdiff;
  r.arrays["intensity"] = to_std(cond_binned.intensity);
  r.arrays["intensity_complementary"] = to_std(perp_binned.intensity);
  r.arrays["intensity_unconditioned"] = to_std(unc_binned.intensity);
  r.verdicts["visibility_matches_marker"] = std::abs(vis - expected_vis) < 1e-3;
  r.verdicts["fractions_sum_to_one"] = std::abs(f + f_perp - 1.0) < 1e-9;
  r.verdicts["recombines_to_unconditioned"] = maxdiff < 1e-9;
  return r;
}

ExperimentReport run_double_slit(long n_draws, std::uint64_t seed) {
  if (n_draws < 1) throw ContractError("n_draws must be at least 1");

  const SlitWaves s = make_slit_waves("gaussian", 4096, 40.0, 3.0, 0.1, 0.5);
  // coherent double-slit pattern: both paths carry the same internal state
  const Eigen::Vector2cd pol(1.0, 0.0);
  const Eigen::ArrayXd fine = tagged_intensity(s, pol, pol);

  ScreenPattern fine_pattern{s.k, fine / fine.sum()};

  // grain boundaries at the destructive momenta k = (2m+1) pi / d; each node
  // gets its own single-bin grain, each bright fringe the span between them
  const double dk = s.k(1) - s.k(0);
  std::vector<long> node_idx;
  const double kmin = s.k(0) + 2 * dk, kmax = s.k(s.k.size() - 1) - 2 * dk;
  for (int m = -64; m <= 64; ++m) {
    const double kz = (2 * m + 1) * M_PI / s.separation;
    if (kz < kmin || kz > kmax) continue;
    node_idx.push_back(static_cast<long>(std::lround((kz - s.k(0)) / dk)));
  }
  std::sort(node_idx.begin(), node_idx.end());

  std::vector<IndexRange> regions;
  std::vector<bool> is_node;
  long prev = 0;
  for (long idx : node_idx) {
    if (idx > prev) {
      regions.push_back({prev, idx});
      is_node.push_back(false);
    }
    regions.push_back({idx, idx + 1});
    is_node.push_back(true);
    prev = idx + 1;
  }
  if (prev < s.k.size()) {
    regions.push_back({prev, s.k.size()});
    is_node.push_back(false);
  }
  const GrainArray grains(regions);
  const GrainExposure ge = grain_exposure(fine_pattern, grains);

  double peak_weight = 0, node_peak = 0;
  for (std::size_t g = 0; g < grains.size(); ++g) {
    const double w = ge.grain_weights[g];
    if (is_node[g]) node_peak = std::max(node_peak, w);
    else peak_weight = std::max(peak_weight, w);
  }

  bool one_grain_per_branch = true;
  bool whole_quanta = true;
  for (std::size_t b = 0; b < ge.branches.size(); ++b) {
    if (ge.branches.branches[b].label.outcomes.size() != 1) one_grain_per_branch = false;
    if (ge.quanta[b] != 1) whole_quanta = false;
  }

  const auto draws = sample_many(ge.branches, SinglingPolicy::Born(), seed,
                                 static_cast<std::size_t>(n_draws));
  std::vector<double> counts(grains.size(), 0.0);
  for (auto d : draws)
    counts[static_cast<std::size_t>(ge.exposed_grain(d))] += 1.0;

  bool histogram_ok = true;
  const double n = static_cast<double>(n_draws);
  for (std::size_t g = 0; g < grains.size(); ++g)
    if (!count_within_3sigma(counts[g], n, ge.grain_weights[g]))
      histogram_ok = false;

  const ScreenPattern binned = detail::rebin_pattern(s.k, fine, 256);

  ExperimentReport r;
  r.name = "run_double_slit";
  r.params = {{"n_draws", n_draws},
              {"seed", seed},
              {"slit_profile", "gaussian"},
              {"slit_separation", s.separation},
              {"screen_bins", 256}};
  r.scalars = {{"n_grains", static_cast<double>(grains.size())},
               {"covered_mass", ge.covered_mass},
               {"peak_grain_weight", peak_weight},
               {"node_peak_weight", node_peak},
               {"node_to_peak_ratio", node_peak / peak_weight}};
  r.arrays = {{"bin_center_m", to_std(binned.bin_center)},
              {"intensity", to_std(binned.intensity)},
              {"grain_weights", ge.grain_weights},
              {"grain_counts", counts}};
  r.verdicts = {{"one_grain_per_branch", one_grain_per_branch},
                {"whole_quantum_per_branch", whole_quanta},
                {"node_weights_small", node_peak < 1e-3 * peak_weight},
                {"histogram_within_3sigma", histogram_ok}};
  return r;
}

// ---------------------------------------------------------------------------
// wave packet spread
// ---------------------------------------------------------------------------

ExperimentReport run_wave_packet_spread(double x0_m, double t_s, double mass_kg,
                                        double hbar) {
  const double spread = spread_estimate(x0_m, t_s, mass_kg, hbar);
  ExperimentReport r;
  r.name = "run_wave_packet_spread";
  r.params = {{"x0_m", x0_m}, {"t_s", t_s}, {"mass_kg", mass_kg}, {"hbar", hbar}};
  r.scalars = {{"x_spread_m", spread},
               {"growth_ratio", x0_m > 0 ? spread / x0_m : 0.0}};
  r.verdicts = {{"spread_not_below_initial", spread >= x0_m}};
  return r;
}

// ---------------------------------------------------------------------------
// bohm fractions
// ---------------------------------------------------------------------------

ExperimentReport run_bohm_fractions(const std::vector<double>& weights,
                                    long n_traj, std::uint64_t seed) {
  const std::size_t np = weights.size();
  if (np < 1 || np > 4) throw ContractError("need 1..4 packets");
  double wsum = 0;
  for (double w : weights) {
    if (w < 0) throw ContractError("weights must be nonnegative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw ContractError("weights must sum to 1");
  if (n_traj < 10) throw ContractError("n_traj must be at least 10");

  // natural units (hbar = m = 1): beams just past the splitting field,
  // already distinct and diverging
  const Grid1D grid(2048, 80.0 / 2048, -40.0);
  const double t_final = 2.0;
  std::vector<PacketComponent> comps;
  for (std::size_t i = 0; i < np; ++i) {
    const double offset = static_cast<double>(i) - (static_cast<double>(np) - 1) / 2.0;
    comps.push_back({std::sqrt(weights[i]), 10.0 * offset, 1.0, 4.0 * offset});
  }
  const PacketFractions pf =
      packet_fractions(grid, 1.0, 1.0, comps, t_final, 80, static_cast<int>(n_traj), seed);

  // quantum-equilibrium check: decile bins of the exact evolved density
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(grid.n);
  for (const auto& c : comps)
    psi0 += (c.amplitude / std::sqrt(wsum)) *
            gaussian_packet(grid, c.x0, c.sigma0, c.k0, 1.0, 1.0).psi;
  const GridWave w0 = normalized(GridWave(grid, std::move(psi0), 1.0, 1.0));
  const GridWave wt = evolve_free(w0, t_final);
  const Eigen::ArrayXd rho = wt.density() * grid.dx;
  const int n_bins = 10;
  const double total = rho.sum();
  // decile-ish edges snapped to the grid, with each bin's exact mass
  std::vector<double> edges, bin_mass;
  double acc = 0, prev_mass = 0;
  int next = 1;
  for (long i = 0; i < grid.n && next < n_bins; ++i) {
    acc += rho(i);
    while (next < n_bins && acc >= total * next / n_bins) {
      edges.push_back(grid.x(i) + grid.dx);
      bin_mass.push_back(acc - prev_mass);
      prev_mass = acc;
      ++next;
    }
  }
  bin_mass.push_back(total - prev_mass);
  std::vector<double> bin_counts(bin_mass.size(), 0.0);
  const Eigen::VectorXd xf = pf.ensemble.final_positions();
  for (long t = 0; t < xf.size(); ++t) {
    std::size_t b = 0;
    while (b < edges.size() && xf(t) >= edges[b]) ++b;
    bin_counts[b] += 1.0;
  }
  double tv = 0;
  for (std::size_t b = 0; b < bin_mass.size(); ++b)
    tv += std::abs(bin_counts[b] / static_cast<double>(n_traj) - bin_mass[b] / total);
  tv /= 2;

  bool fractions_ok = true;
  for (std::size_t i = 0; i < np; ++i)
    if (!count_within_3sigma(pf.fractions[i] * static_cast<double>(n_traj),
                             static_cast<double>(n_traj), pf.weights[i]))
      fractions_ok = false;

  ExperimentReport r;
  r.name = "run_bohm_fractions";
  r.params = {{"weights", weights}, {"n_traj", n_traj}, {"seed", seed}};
  r.scalars = {{"tv_distance", tv},
               {"max_pair_overlap", pf.max_pair_overlap},
               {"t_final", t_final}};
  r.arrays = {{"target_weights", pf.weights}, {"fractions", pf.fractions}};
  r.verdicts = {{"fractions_within_3sigma", fractions_ok},
                {"order_preserved", pf.ensemble.order_preserved()},
                {"equilibrium_tv_below_002", tv < 0.02}};
  return r;
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

const ParamSpec* find_param(const ExperimentInfo& info, const std::string& key) {
  for (const auto& p : info.params)
    if (p.key == key) return &p;
  return nullptr;
}

void validate_params(const ExperimentInfo& info, const json& params) {
  if (!params.is_object())
    throw ConfigError("params for experiment '" + info.name + "' must be an object");
  for (const auto& [key, val] : params.items()) {
    const ParamSpec* spec = find_param(info, key);
    if (!spec)
      throw ConfigError("unknown parameter '" + key + "' for experiment '" +
                        info.name + "'");
    const std::string& t = spec->type;
    const bool ok = (t == "number" && val.is_number()) ||
                    (t == "integer" && val.is_number_integer()) ||
                    (t == "boolean" && val.is_boolean()) ||
                    (t == "string" && val.is_string()) ||
                    (t == "array" && val.is_array());
    if (!ok)
      throw ConfigError("parameter '" + key + "' of experiment '" + info.name +
                        "' must be of type " + t);
  }
}

template <typename T>
T param_or(const json& params, const std::string& key, T fallback) {
  if (params.contains(key)) return params.at(key).get<T>();
  return fallback;
}

long count_param(const json& params, const std::string& key, const RunContext& ctx,
                 long fallback) {
  if (params.contains(key)) return params.at(key).get<long>();
  if (ctx.n_runs > 0) return ctx.n_runs;
  return fallback;
}

std::vector<std::complex<double>> parse_amplitudes(const json& arr) {
  std::vector<std::complex<double>> out;
  for (const auto& item : arr) {
    if (item.is_number()) {
      out.emplace_back(item.get<double>(), 0.0);
    } else if (item.is_array() && item.size() == 2) {
      out.emplace_back(item[0].get<double>(), item[1].get<double>());
    } else {
      throw ConfigError("parameter 'amplitudes' entries must be numbers or [re, im] pairs");
    }
  }
  return out;
}

std::vector<ExperimentInfo> build_registry() {
  std::vector<ExperimentInfo> reg;

  reg.push_back(
      {"run_polarization",
       "Malus-law photon polarization branching at a linear analyzer",
       {{"theta_deg", "number", 60.0, "polarization angle against the analyzer axis"},
        {"n_photons", "integer", 100000, "photons sent through the analyzer"}},
       [](const json& p, const RunContext& ctx) {
         return run_polarization(param_or(p, "theta_deg", 60.0),
                                 count_param(p, "n_photons", ctx, 100000), ctx.seed);
       }});

  reg.push_back(
      {"run_stern_gerlach",
       "Stern-Gerlach spin measurement with chained detector readout",
       {{"amplitudes", "array", json::array({0.8660254037844386, 0.5}),
         "spin component amplitudes; numbers or [re, im] pairs, unit total weight"},
        {"chain", "array", json::array({"z", "z"}), "measurement axes; all must be 'z'"},
        {"n_runs", "integer", 10000, "perceived-outcome samples"}},
       [](const json& p, const RunContext& ctx) {
         std::vector<std::complex<double>> amps;
         if (p.contains("amplitudes")) amps = parse_amplitudes(p.at("amplitudes"));
         else amps = {std::sqrt(0.75), std::sqrt(0.25)};
         std::vector<std::string> chain =
             param_or<std::vector<std::string>>(p, "chain", {"z", "z"});
         return run_stern_gerlach(amps, chain, count_param(p, "n_runs", ctx, 10000),
                                  ctx.seed);
       }});

  reg.push_back(
      {"run_schrodinger_cat",
       "Schrodinger's cat with a decay-record memory device",
       {{"p_decay", "number", 0.65, "decay weight |a(1)|^2"},
        {"n_runs", "integer", 10000, "independent runs of the experiment"}},
       [](const json& p, const RunContext& ctx) {
         return run_schrodinger_cat(param_or(p, "p_decay", 0.65),
                                    count_param(p, "n_runs", ctx, 10000), ctx.seed);
       }});

  reg.push_back(
      {"run_bell_chsh",
       "Bell/CHSH correlation test on a polarization singlet (Aspect-type)",
       {{"angles_deg", "array", json::array({0.0, 45.0, 22.5, 67.5}),
         "analyzer angles a, a', b, b'"},
        {"mode", "string", "analytic", "'analytic' or 'sampled'"},
        {"n_samples", "integer", 100000, "joint-outcome samples per pair (sampled mode)"}},
       [](const json& p, const RunContext& ctx) {
         const auto v = param_or<std::vector<double>>(p, "angles_deg",
                                                      {0.0, 45.0, 22.5, 67.5});
         if (v.size() != 4)
           throw ConfigError("parameter 'angles_deg' must have exactly 4 entries");
         const std::string mode = param_or<std::string>(p, "mode", "analytic");
         if (mode != "analytic" && mode != "sampled")
           throw ConfigError("parameter 'mode' must be 'analytic' or 'sampled'");
         return run_bell_chsh({v[0], v[1], v[2], v[3]},
                              mode == "analytic" ? ChshMode::analytic : ChshMode::sampled,
                              count_param(p, "n_samples", ctx, 100000), ctx.seed);
       }});

  reg.push_back(
      {"run_mach_zehnder",
       "Wheeler delayed-choice Mach-Zehnder interferometer",
       {{"phase_rad", "number", 0.0, "relative phase on the second arm"},
        {"second_bs", "boolean", true, "recombining beam splitter present"},
        {"decision", "string", "before_first_bs",
         "when the recombiner was chosen; orders the log only"}},
       [](const json& p, const RunContext&) {
         const std::string d = param_or<std::string>(p, "decision", "before_first_bs");
         if (d != "before_first_bs" && d != "after_first_bs")
           throw ConfigError("parameter 'decision' must be 'before_first_bs' or 'after_first_bs'");
         return run_mach_zehnder(param_or(p, "phase_rad", 0.0),
                                 param_or(p, "second_bs", true),
                                 d == "before_first_bs" ? MzDecision::before_first_bs
                                                        : MzDecision::after_first_bs);
       }});

  reg.push_back(
      {"run_quantum_eraser",
       "Walborn-type quantum eraser with coincidence post-selection",
       {{"variant", "integer", 2,
         "1: aligned tags; 2: orthogonal tags; 3/4: orthogonal + conditioned"},
        {"cond_angle_deg", "number", 45.0, "partner analyzer angle (variants 3/4)"},
        {"screen_bins", "integer", 256, "screen resolution of the report"},
        {"slit_profile", "string", "gaussian", "'gaussian' or 'rect' apodization"}},
       [](const json& p, const RunContext&) {
         return run_quantum_eraser(static_cast<int>(param_or<long>(p, "variant", 2)),
                                   param_or(p, "cond_angle_deg", 45.0),
                                   static_cast<int>(param_or<long>(p, "screen_bins", 256)),
                                   param_or<std::string>(p, "slit_profile", "gaussian"));
       }});

  reg.push_back(
      {"run_double_slit",
       "Young double slit onto a film-grain screen with Born-sampled exposures",
       {{"n_draws", "integer", 100000, "perceived grain exposures to sample"}},
       [](const json& p, const RunContext& ctx) {
         return run_double_slit(count_param(p, "n_draws", ctx, 100000), ctx.seed);
       }});

  reg.push_back(
      {"run_wave_packet_spread",
       "free wave-packet dispersion estimate at synaptic calcium-ion scale",
       {{"x0_m", "number", 1e-8, "initial packet spread [m]"},
        {"t_s", "number", 1e-4, "spreading time [s]"},
        {"mass_kg", "number", constants::calcium_mass_kg, "particle mass [kg]"},
        {"hbar", "number", nullptr, "hbar override [J s]; defaults to the configured constant"}},
       [](const json& p, const RunContext& ctx) {
         return run_wave_packet_spread(param_or(p, "x0_m", 1e-8),
                                       param_or(p, "t_s", 1e-4),
                                       param_or(p, "mass_kg", constants::calcium_mass_kg),
                                       param_or(p, "hbar", ctx.hbar));
       }});

  reg.push_back(
      {"run_bohm_fractions",
       "de Broglie-Bohm guidance trajectories for separating beams",
       {{"weights", "array", json::array({0.75, 0.25}), "packet weights |a(i)|^2, unit sum"},
        {"n_traj", "integer", 10000, "trajectories in the ensemble"}},
       [](const json& p, const RunContext& ctx) {
         const auto w = param_or<std::vector<double>>(p, "weights", {0.75, 0.25});
         return run_bohm_fractions(w, count_param(p, "n_traj", ctx, 10000), ctx.seed);
       }});

  return reg;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> reg = build_registry();
  return reg;
}

const ExperimentInfo* find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry())
    if (e.name == name) return &e;
  return nullptr;
}

ExperimentReport run_experiment(const std::string& name,
                                const nlohmann::json& params,
                                const RunContext& ctx) {
  const ExperimentInfo* info = find_experiment(name);
  if (!info) throw ConfigError("unknown experiment name '" + name + "'");
  validate_params(*info, params);
  return info->run(params, ctx);
}

std::string list_experiments_text() {
  std::ostringstream os;
  for (const auto& e : experiment_registry()) {
    os << e.name << " — " << e.anchor << "\n";
    for (const auto& p : e.params) {
      os << "  " << p.key << " (" << p.type;
      if (!p.default_value.is_null()) os << ", default " << p.default_value.dump();
      os << "): " << p.doc << "\n";
    }
  }
  return os.str();
}

}  // namespace branchsim
