#pragma once

#include <cstdint>

#include "labyrinth/units.hpp"

namespace labyrinth {

/// Position [wavelengths], velocity [wavelength * Gamma] and time [1/Gamma].
struct AtomState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double time = 0.0;

    bool finite() const { return position.allFinite() && velocity.allFinite() && std::isfinite(time); }
};

enum class EscapeKind : std::uint8_t { none = 0, transverse = 1, axial = 2 };

}  // namespace labyrinth
