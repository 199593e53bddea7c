#pragma once

#include <cmath>
#include <stdexcept>

#include "labyrinth/units.hpp"

namespace labyrinth {

/// Two-level atom. The dipole moment is derived from the Einstein
/// coefficient through Gamma = k^3 mu^2 / (3 pi epsilon0 hbar), the SI form of
/// the Gaussian-units relation Gamma = 4 k^3 |mu|^2 / (3 hbar).
struct AtomSpecies {
    double mass_kg = 0.0;
    double gamma_per_s = 0.0;
    double transition_wavelength_m = 0.0;
    double dipole_moment = 0.0;  // C m

    static AtomSpecies make(double mass_kg, double gamma_per_s, double transition_wavelength_m) {
        if (!(mass_kg > 0.0) || !(gamma_per_s > 0.0) || !(transition_wavelength_m > 0.0))
            throw std::invalid_argument("AtomSpecies: mass, gamma and wavelength must be positive");
        AtomSpecies s;
        s.mass_kg = mass_kg;
        s.gamma_per_s = gamma_per_s;
        s.transition_wavelength_m = transition_wavelength_m;
        const double k = two_pi / transition_wavelength_m;
        s.dipole_moment = std::sqrt(3.0 * pi * si::epsilon0 * si::hbar * gamma_per_s / (k * k * k));
        return s;
    }

    /// Rb-85 on the 795 nm D1 line, Gamma = 3.7e7 1/s.
    static AtomSpecies rubidium85() { return make(84.911789738 * si::amu, 3.7e7, 795e-9); }

    double transition_omega() const { return two_pi * si::c / transition_wavelength_m; }
};

}  // namespace labyrinth
