#pragma once

// Physical constants and the nondimensional unit system used by the
// simulation: length in laser wavelengths, time in units of 1/Gamma,
// energy in hbar*Gamma. Everything physical is converted exactly once, at
// configuration time.

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace labyrinth {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

namespace si {
inline constexpr double c = 299792458.0;
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double k_B = 1.380649e-23;
inline constexpr double epsilon0 = 8.8541878128e-12;
inline constexpr double amu = 1.66053906660e-27;
inline constexpr double standard_gravity = 9.80665;
}  // namespace si

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Vacuum impedance mu0*c = 1/(epsilon0*c).
inline double vacuum_impedance() { return 1.0 / (si::epsilon0 * si::c); }

/// Conversion between SI and simulation units for one laser/atom pair.
struct SimUnits {
    double wavelength_m = 862e-9;  // laser wavelength, the length unit
    double gamma_per_s = 3.7e7;    // Einstein coefficient, inverse time unit

    double length() const { return wavelength_m; }
    double time() const { return 1.0 / gamma_per_s; }
    double velocity() const { return wavelength_m * gamma_per_s; }
    double acceleration() const { return wavelength_m * gamma_per_s * gamma_per_s; }
    double energy() const { return si::hbar * gamma_per_s; }

    // Mass in units of hbar/(lambda^2 Gamma); the inverse is the
    // recoil-like ratio hbar/(m lambda^2 Gamma).
    double mass(double kg) const {
        return kg * wavelength_m * wavelength_m * gamma_per_s / si::hbar;
    }
    double temperature_energy(double kelvin) const { return si::k_B * kelvin / energy(); }
    double gravity() const { return si::standard_gravity / acceleration(); }
    // Speed of light in lambda*Gamma.
    double light_speed() const { return si::c / velocity(); }
};

}  // namespace labyrinth
