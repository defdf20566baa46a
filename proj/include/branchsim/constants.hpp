#ifndef BRANCHSIM_CONSTANTS_HPP
#define BRANCHSIM_CONSTANTS_HPP

namespace branchsim::constants {

/// Reduced Planck constant, CODATA value [J s].
inline constexpr double hbar_si = 1.054571817e-34;

/// Rounded hbar often used in back-of-envelope synaptic-scale estimates.
inline constexpr double hbar_rounded = 1.0e-34;

/// Calcium atom mass [kg], as used in the synaptic spreading estimate.
inline constexpr double calcium_mass_kg = 66e-27;

}  // namespace branchsim::constants

#endif  // BRANCHSIM_CONSTANTS_HPP
