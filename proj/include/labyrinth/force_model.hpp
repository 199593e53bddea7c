#pragma once

#include <memory>
#include <stdexcept>

#include "labyrinth/beam_field.hpp"
#include "labyrinth/state.hpp"

namespace labyrinth {

/// full: velocity-dependent mean force; simple: far-off-resonance limit;
/// dipole_only: the conservative alpha term of the simple law.
enum class ForceLaw { full, simple, dipole_only };

/// Rates in units of Gamma (so gamma = 1 in simulation units); hbar = 1.
struct ForceParams {
    double gamma = 1.0;
    double detuning = 0.0;  // laser minus transition angular frequency
};

struct ForceContext {
    double p = 0.0;
    double p_prime = 0.0;
    cdouble gamma_prime{0.0, 0.0};
    double gamma_tilde = 0.0;
    double population_difference = 1.0;  // D = 1 / (1 + p)
    double detuning = 0.0;
};

struct ForceResult {
    Vec3 force = Vec3::Zero();  // units of hbar Gamma / wavelength
    ForceContext context;
};

class SingularForceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// p = 2 |g|^2 / ((Gamma/2)^2 + detuning^2).
double saturation(const CouplingSample& coupling, double detuning, double gamma);

/// Velocity-dependent mean radiative force. Degenerate couplings give zero.
ForceResult full_force(const CouplingSample& coupling, const Vec3& velocity, const ForceParams& params);

/// Far-off-resonance limit hbar p/(1+p) [Gamma/2 beta - detuning alpha].
Vec3 simple_force(const CouplingSample& coupling, const ForceParams& params);

/// The alpha term of simple_force alone, equal to -grad dipole_potential.
Vec3 dipole_force(const CouplingSample& coupling, const ForceParams& params);

/// U = (hbar detuning / 2) ln(1 + p), in units of hbar Gamma.
double dipole_potential(double p, const ForceParams& params);

/// Everything a trajectory needs: the coupling field, force law, atom mass
/// and gravity, all in simulation units. Immutable and shareable.
struct Environment {
    std::shared_ptr<const CouplingField> field;  // null means no light
    ForceParams params;
    ForceLaw law = ForceLaw::full;
    double mass = 1.0;     // hbar / (wavelength^2 Gamma)
    double gravity = 0.0;  // magnitude along -z, wavelength * Gamma^2

    Vec3 acceleration(const Vec3& r, const Vec3& v) const;
    double potential(const Vec3& r) const;  // dipole + gravity
    double energy(const AtomState& s) const;
};

Vec3 total_acceleration(const AtomState& state, const Environment& env);

}  // namespace labyrinth
