#include "labyrinth/force_model.hpp"

#include <cmath>

namespace labyrinth {

double saturation(const CouplingSample& coupling, double detuning, double gamma) {
    return 2.0 * coupling.intensity / (0.25 * gamma * gamma + detuning * detuning);
}

ForceResult full_force(const CouplingSample& coupling, const Vec3& velocity, const ForceParams& params) {
    ForceResult out;
    const double gamma = params.gamma;
    const double delta = params.detuning;
    out.context.detuning = delta;
    out.context.gamma_prime = cdouble(0.5 * gamma, -delta);
    out.context.gamma_tilde = 1.0 / gamma;
    if (coupling.degenerate) return out;

    const double p = saturation(coupling, delta, gamma);
    const double va = velocity.dot(coupling.alpha);
    const double vb = velocity.dot(coupling.beta);
    const double r = (1.0 - p) / (1.0 + p);
    const cdouble gamma_prime(va * r + 0.5 * gamma, vb - delta);
    const double p_prime = 2.0 * coupling.intensity / std::norm(gamma_prime);
    const double denominator =
        gamma * (1.0 + p_prime) + 2.0 * va * (1.0 - p / p_prime - p) * (p_prime / (1.0 + p));
    if (!(std::abs(denominator) > 1e-14 * gamma * (1.0 + p_prime)))
        throw SingularForceError("full_force: Gamma-tilde denominator vanishes; check parameters");
    const double gamma_tilde = gamma / denominator;

    out.context.p = p;
    out.context.p_prime = p_prime;
    out.context.gamma_prime = gamma_prime;
    out.context.gamma_tilde = gamma_tilde;
    out.context.population_difference = 1.0 / (1.0 + p);
    out.force = gamma_tilde * p_prime * ((va * r + 0.5 * gamma) * coupling.beta + (vb - delta) * coupling.alpha);
    return out;
}

Vec3 simple_force(const CouplingSample& coupling, const ForceParams& params) {
    if (coupling.degenerate) return Vec3::Zero();
    const double p = saturation(coupling, params.detuning, params.gamma);
    return (p / (1.0 + p)) * (0.5 * params.gamma * coupling.beta - params.detuning * coupling.alpha);
}

Vec3 dipole_force(const CouplingSample& coupling, const ForceParams& params) {
    if (coupling.degenerate) return Vec3::Zero();
    const double p = saturation(coupling, params.detuning, params.gamma);
    return -(p / (1.0 + p)) * params.detuning * coupling.alpha;
}

double dipole_potential(double p, const ForceParams& params) { return 0.5 * params.detuning * std::log1p(p); }

Vec3 Environment::acceleration(const Vec3& r, const Vec3& v) const {
    Vec3 a(0.0, 0.0, -gravity);
    if (!field) return a;
    const CouplingSample c = field->sample(r);
    switch (law) {
        case ForceLaw::full: a += full_force(c, v, params).force / mass; break;
        case ForceLaw::simple: a += simple_force(c, params) / mass; break;
        case ForceLaw::dipole_only: a += dipole_force(c, params) / mass; break;
    }
    return a;
}

double Environment::potential(const Vec3& r) const {
    double u = mass * gravity * r.z();
    if (field) u += dipole_potential(saturation(field->sample(r), params.detuning, params.gamma), params);
    return u;
}

double Environment::energy(const AtomState& s) const {
    return 0.5 * mass * s.velocity.squaredNorm() + potential(s.position);
}

Vec3 total_acceleration(const AtomState& state, const Environment& env) {
    return env.acceleration(state.position, state.velocity);
}

}  // namespace labyrinth
