#include "labyrinth/pipeline.hpp"

namespace labyrinth {

Physics make_physics(const RunConfig& config) {
    config.validate();
    Physics p;
    p.species = AtomSpecies::make(config.mass_amu * si::amu, config.gamma_per_s, config.transition_nm * 1e-9);
    const double laser_m = (config.transition_nm + config.detuning_nm) * 1e-9;
    p.units = SimUnits{laser_m, config.gamma_per_s};
    p.detuning = two_pi * si::c * (1.0 / laser_m - 1.0 / p.species.transition_wavelength_m) / config.gamma_per_s;
    p.mass = p.units.mass(p.species.mass_kg);
    p.gravity = config.gravity ? p.units.gravity() : 0.0;
    p.light_speed = p.units.light_speed();
    return p;
}

namespace {
FieldMode unit_mode(const RunConfig& config, const Physics& physics) {
    return FieldMode::from_ratio(config.kz_ratio, config.parity, config.a, 1.0, physics.light_speed);
}
}  // namespace

std::shared_ptr<const BeamField> make_beam(const RunConfig& config, const Physics& physics, double irradiance_kw_cm2) {
    const BeamField unit(unit_mode(config, physics));
    FieldMode mode = unit.mode();
    mode.amplitude =
        amplitude_for_irradiance(irradiance_kw_cm2 * 1e7, unit.peak_unit_gradient() / physics.units.length()) /
        physics.units.length();
    return std::make_shared<const BeamField>(mode);
}

Lattice Lattice::build(const RunConfig& config) {
    Lattice l;
    l.config = config;
    l.physics = make_physics(config);
    l.unit_beam = std::make_shared<const BeamField>(unit_mode(config, l.physics));
    l.grid = FieldGrid::build(l.unit_beam->quadrature(),
                              GridSpec{config.grid_half_width, config.grid_points, config.grid_tile});
    l.lobes = std::make_shared<const LobeMap>(lobe_segmentation(*l.grid, config.lobe_threshold, config.lobe_stride));
    return l;
}

Environment Lattice::environment(double irradiance_kw_cm2) const {
    if (!(irradiance_kw_cm2 >= 0.0)) throw std::invalid_argument("irradiance must be non-negative");
    Environment env;
    env.params.gamma = 1.0;
    env.params.detuning = physics.detuning;
    env.law = config.force_law;
    env.mass = physics.mass;
    env.gravity = physics.gravity;
    if (irradiance_kw_cm2 > 0.0) {
        FieldMode mode = unit_beam->mode();
        mode.amplitude = amplitude_for_irradiance(irradiance_kw_cm2 * 1e7,
                                                  unit_beam->peak_unit_gradient() / physics.units.length()) /
                         physics.units.length();
        auto beam = std::make_shared<const BeamField>(mode);
        env.field = std::make_shared<const CouplingField>(beam, physics.species, grid);
    }
    return env;
}

EnsembleSpec Lattice::ensemble_spec() const {
    EnsembleSpec s;
    s.n_atoms = static_cast<std::size_t>(config.n_atoms);
    s.disk_radius = config.disk_radius;
    s.t_xy_min = config.t_xy_min_uk * 1e-6;
    s.t_xy_max = config.t_xy_max_uk * 1e-6;
    s.t_z = config.t_z_uk * 1e-6;
    s.z0 = config.z0;
    s.seed = config.seed;
    s.t_final = config.t_final;
    return s;
}

TrappingCriteria Lattice::criteria() const { return {config.radial_bound, config.axial_bound, config.horizon}; }

AnalysisParams Lattice::analysis_params() const {
    AnalysisParams a;
    a.motion = MotionParams{config.epsilon, config.max_peaks, config.peak_width};
    a.spectrum.min_samples = static_cast<std::size_t>(config.min_spectrum_samples);
    a.spectrum_coordinate = config.spectrum_coordinate;
    a.lobe_threshold = config.lobe_threshold;
    a.hysteresis = config.hysteresis;
    a.bin_width = config.bin_width;
    return a;
}

IntegratorOptions Lattice::integrator_options() const {
    IntegratorOptions o;
    o.rtol = config.rtol;
    o.atol = config.atol;
    o.min_step = config.min_step;
    o.max_speed = config.max_speed;
    return o;
}

RunOptions Lattice::run_options(int threads) const {
    RunOptions o;
    o.threads = threads;
    o.sample_interval = config.sample_interval;
    o.integrator = integrator_options();
    o.analysis = analysis_params();
    o.lobes = lobes;
    return o;
}

double peak_saturation(const Lattice& lattice, double irradiance_kw_cm2) {
    const Environment env = lattice.environment(irradiance_kw_cm2);
    if (!env.field) return 0.0;
    const auto pk = lattice.unit_beam->peak_location();
    const auto c = env.field->sample_direct(Vec3(pk.x(), pk.y(), 0.0));
    return saturation(c, env.params.detuning, env.params.gamma);
}

}  // namespace labyrinth
