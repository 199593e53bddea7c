#pragma once

#include <memory>

#include "labyrinth/config.hpp"
#include "labyrinth/ensemble.hpp"

namespace labyrinth {

/// Physical constants of a run in simulation units, derived from a config.
struct Physics {
    AtomSpecies species;
    SimUnits units;
    double detuning = 0.0;  // units of Gamma, negative for red
    double mass = 0.0;
    double gravity = 0.0;
    double light_speed = 0.0;
};

Physics make_physics(const RunConfig& config);

/// Beam with amplitude set for the given irradiance. The amplitude carries
/// the 1/wavelength of the gradient so E comes out in V/m.
std::shared_ptr<const BeamField> make_beam(const RunConfig& config, const Physics& physics, double irradiance_kw_cm2);

/// Everything shared across irradiances: the unit-amplitude grid and its lobe map.
struct Lattice {
    RunConfig config;
    Physics physics;
    std::shared_ptr<const BeamField> unit_beam;
    std::shared_ptr<const FieldGrid> grid;
    std::shared_ptr<const LobeMap> lobes;

    static Lattice build(const RunConfig& config);

    Environment environment(double irradiance_kw_cm2) const;
    EnsembleSpec ensemble_spec() const;
    TrappingCriteria criteria() const;
    RunOptions run_options(int threads) const;
    AnalysisParams analysis_params() const;
    IntegratorOptions integrator_options() const;
};

/// Peak saturation parameter at the configured irradiance (regression constant).
double peak_saturation(const Lattice& lattice, double irradiance_kw_cm2);

}  // namespace labyrinth
