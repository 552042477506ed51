#pragma once

// Frozen constants. Each value is twice the largest ratio observed on the
// pilot sample produced by calibrate_constants(kPilotSamples, kPilotModes,
// kPilotSeed); tests/test_inequalities.cpp reruns that procedure and
// compares.

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "glstable/gl_dynamics.hpp"
#include "glstable/inequalities.hpp"

namespace glstable::calibration {

inline constexpr std::size_t kPilotSamples = 100000;
inline constexpr int kPilotModes = 64;
inline constexpr std::uint64_t kPilotSeed = 20261015;
inline constexpr double kSafety = 2.0;

inline constexpr InequalityConstants kConstants = {
    .nv = 2.0 * 0.99989973110641583,
    .nxy_quarter = 2.0 * 0.99999860699138554,
    .nxy_low = 2.0 * 0.54192575611167393,
    .nh = 2.0 * 0.36802075682854873,
    .nuvu = 2.0 * 0.00010140665699869038,
};

/// Forcing constant of the energy estimate: the mixed bound enters the
/// energy identity with a factor 2.
inline constexpr double kEnergyC = 2.0 * kConstants.nuvu;

/// Constant C in the return bound e^{-(pi - 3/2)t} R + C (eps^4 + eps^2 + eps),
/// derived from kEnergyC: ||Y_t|| <= e^{-(pi-3/2)t} R + (eps + sqrt(kEnergyC) eps^2) / sqrt(2 pi - 3)
/// and ||Z_t||_H <= eps / (2 pi) <= eps.
inline double return_constant() { return 1.0 + (1.0 + std::sqrt(kEnergyC)) / std::sqrt(kEnergyRate); }

}  // namespace glstable::calibration
