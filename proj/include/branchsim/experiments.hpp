#ifndef BRANCHSIM_EXPERIMENTS_HPP
#define BRANCHSIM_EXPERIMENTS_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "branchsim/constants.hpp"
#include "branchsim/report.hpp"

namespace branchsim {

// ---------------------------------------------------------------------------
// Canned experiments. Each builds its state from the library modules, runs
// deterministically for a given (parameters, seed), and returns a structured
// report. Analytic quantities never depend on the seed.
// ---------------------------------------------------------------------------

/// Photon beam against a linear polarizer at theta: the pass/absorb branch
/// weights follow the squared projection, and counts follow the weights.
ExperimentReport run_polarization(double theta_deg, long n_photons,
                                  std::uint64_t seed);

/// Spin measured along z by a chain of detector+observer register pairs.
/// Every entry of `chain` must name the same axis ("z"): the repeated
/// measurement of one property, which is what the record-consistency
/// properties are about.
ExperimentReport run_stern_gerlach(const std::vector<std::complex<double>>& amplitudes,
                                   const std::vector<std::string>& chain,
                                   long n_runs, std::uint64_t seed);

/// Decay detector wired to a memory device read by an observer; each run
/// perceives exactly one record, with ones appearing at the decay weight.
ExperimentReport run_schrodinger_cat(double p_decay, long n_runs,
                                     std::uint64_t seed);

enum class ChshMode { analytic, sampled };

/// Polarization-singlet CHSH: correlations from the 4-dim state under
/// rotated analyzer bases, the CHSH combination S, and the exhaustive bound
/// max|S| = 2 over the 16 deterministic local strategies. Sampled mode draws
/// joint outcomes and reports 3-sigma Wilson bounds on S.
ExperimentReport run_bell_chsh(const std::array<double, 4>& angles_deg,
                               ChshMode mode, long n_samples,
                               std::uint64_t seed);

enum class MzDecision { before_first_bs, after_first_bs };

/// Mach-Zehnder with an optional second beam splitter. The `decision` tag
/// records when the second splitter was chosen relative to the photon's
/// flight; it orders the run log only — the amplitudes are computed
/// identically, so reports for both tags are byte-equal.
ExperimentReport run_mach_zehnder(double phase_rad, bool second_bs,
                                  MzDecision decision);

/// Double slit with a which-path polarization tag on the entangled partner.
/// Variant 1: both slits tagged alike (full fringes). Variant 2: orthogonal
/// tags (no fringes; the pattern is the incoherent single-slit sum).
/// Variants 3 and 4: orthogonal tags plus coincidence post-selection on the
/// partner's polarizer at cond_angle; 4 differs from 3 only in detection
/// order, which changes nothing.
ExperimentReport run_quantum_eraser(int variant, double cond_angle_deg,
                                    int screen_bins,
                                    const std::string& slit_profile = "gaussian");

/// Double slit onto a film-grain screen: far-field fringes, exposure
/// branches with exactly one grain per branch, and a Born-sampled exposure
/// histogram.
ExperimentReport run_double_slit(long n_draws, std::uint64_t seed);

/// Free-packet spreading estimate sqrt(x0^2 + 2 t hbar/m); defaults are the
/// synaptic calcium-ion numbers.
ExperimentReport run_wave_packet_spread(double x0_m, double t_s, double mass_kg,
                                        double hbar);

/// Separating packets with given weights; the fraction of guidance
/// trajectories ending in each packet reproduces the weights, while the
/// ensemble stays |psi_t|^2-distributed and never crosses.
ExperimentReport run_bohm_fractions(const std::vector<double>& weights,
                                    long n_traj, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Registry: name -> parameter schema, literature anchor, generic runner.
// ---------------------------------------------------------------------------

struct ParamSpec {
  std::string key;
  std::string type;  // "number" | "integer" | "boolean" | "string" | "array"
  nlohmann::json default_value;
  std::string doc;
};

struct RunContext {
  std::uint64_t seed = 0;
  long n_runs = 0;  // 0 = use the experiment default
  double hbar = constants::hbar_si;
};

struct ExperimentInfo {
  std::string name;
  std::string anchor;  // canonical experiment it reproduces
  std::vector<ParamSpec> params;
  std::function<ExperimentReport(const nlohmann::json& params, const RunContext&)> run;
};

const std::vector<ExperimentInfo>& experiment_registry();

/// nullptr when the name is not registered.
const ExperimentInfo* find_experiment(const std::string& name);

/// Validates parameter names/types against the schema before dispatch;
/// throws ConfigError naming the offending key.
ExperimentReport run_experiment(const std::string& name,
                                const nlohmann::json& params,
                                const RunContext& ctx);

/// Human-readable registry dump (stable across runs).
std::string list_experiments_text();

}  // namespace branchsim

#endif  // BRANCHSIM_EXPERIMENTS_HPP
