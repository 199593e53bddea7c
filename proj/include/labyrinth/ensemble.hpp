#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "labyrinth/analysis.hpp"
#include "labyrinth/force_model.hpp"
#include "labyrinth/integrator.hpp"
#include "labyrinth/units.hpp"

namespace labyrinth {

/// Temperatures in kelvin, lengths in wavelengths, times in 1/Gamma.
/// Each atom draws its transverse temperature uniformly from
/// [t_xy_min, t_xy_max]; equal bounds give a fixed temperature.
struct EnsembleSpec {
    std::size_t n_atoms = 100;
    double disk_radius = 20.0;
    double t_xy_min = 2.9e-6;
    double t_xy_max = 3.1e-6;
    double t_z = 0.2e-6;
    double z0 = 0.0;
    std::uint64_t seed = 1;
    double t_final = 1.25e8;

    void validate() const;
};

struct TrappingCriteria {
    double radial_bound = 80.0;
    double axial_bound = 5.0;
    double horizon = 1.25e8;

    void validate() const;
};

enum class TrappingLabel { trapped, escaped_transverse, escaped_axial };

const char* to_string(TrappingLabel label);
const char* to_string(MotionLabel label);

struct TrappingResult {
    TrappingLabel label = TrappingLabel::trapped;
    std::optional<double> crossing_time;
};

class InconclusiveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Initial states with time 0. Atom i uses its own random stream derived
/// from (seed, i), so any subset of atoms can be regenerated independently.
std::vector<AtomState> sample_initial_conditions(const EnsembleSpec& spec, const SimUnits& units, double mass);
AtomState sample_initial_condition(const EnsembleSpec& spec, const SimUnits& units, double mass, std::uint64_t atom_id);

/// Predicate for the integrator: radial distance first, then axial offset from z0.
EscapePredicate make_escape_predicate(const TrappingCriteria& criteria, double z0);

/// The axial reference is the z of the first sample. Crossing times of
/// sampled violations are located by linear interpolation of the violated
/// quantity between samples.
TrappingResult classify_trapping(const Trajectory& trajectory, const TrappingCriteria& criteria);

struct AnalysisParams {
    MotionParams motion;
    SpectrumOptions spectrum;
    int spectrum_coordinate = 0;
    double lobe_threshold = 0.1;
    double hysteresis = 1.5;
    double bin_width = 50.0;
};

/// Per-atom outcome. Motion fields are filled only for trapped atoms whose
/// record is long enough for a spectrum; `error` holds any per-atom failure.
struct AtomResult {
    std::uint64_t atom_id = 0;
    AtomState initial;
    TrappingLabel trapping = TrappingLabel::trapped;
    std::optional<double> escape_time;
    std::optional<MotionLabel> motion;
    double flatness = 0.0;
    double peak_fraction = 0.0;
    std::uint64_t transitions = 0;
    AtomState final_state;
    std::uint64_t checksum = 0;  // FNV-1a over the sample records
    IntegrationStats stats;
    std::string error;

    bool failed() const { return !error.empty(); }
    bool operator==(const AtomResult&) const;
};

/// FNV-1a 64 over the little-endian (t, x, y, z, vx, vy, vz) records.
std::uint64_t trajectory_checksum(const Trajectory& trajectory);

/// Trapping and motion analysis of one finished trajectory.
AtomResult analyze_atom(const Trajectory& trajectory, const TrappingCriteria& criteria, const AnalysisParams& params,
                        const LobeMap* lobes);

struct RunOptions {
    int threads = 1;
    double sample_interval = 20.0;
    IntegratorOptions integrator;
    AnalysisParams analysis;
    std::shared_ptr<const LobeMap> lobes;
    /// Results already known (e.g. from a checkpoint); those atoms are skipped.
    std::map<std::uint64_t, AtomResult> completed;
    /// Called once per newly finished atom, serialized across workers.
    std::function<void(const AtomResult&)> on_result;
    /// Called with each trajectory before it is dropped, serialized.
    std::function<void(const AtomResult&, const Trajectory&)> on_trajectory;
    /// Stop scheduling after this many new atoms (0 = no limit).
    std::size_t stop_after = 0;
};

/// Integrate and classify every atom. Results are ordered by atom id
/// whatever the thread count; a run stopped by stop_after returns only the
/// finished atoms.
std::vector<AtomResult> run_ensemble(const Environment& env, const EnsembleSpec& spec, const TrappingCriteria& criteria,
                                     const SimUnits& units, RunOptions options);

struct ClassFractions {
    double value = 0.0;
    double error = 0.0;  // binomial standard error
};

struct SweepPoint {
    double irradiance_kw_cm2 = 0.0;
    std::size_t n_atoms = 0;
    std::size_t escaped_transverse = 0;
    std::size_t escaped_axial = 0;
    std::size_t quasiperiodic = 0;
    std::size_t chaotic = 0;
    std::size_t unclassified = 0;  // trapped but too short for a spectrum
    std::size_t failed = 0;
    ClassFractions non_trapped, trapped, quasiperiodic_fraction, chaotic_fraction;
    std::vector<AtomResult> atoms;
};

struct SweepReport {
    std::vector<SweepPoint> points;
};

SweepPoint summarize(double irradiance_kw_cm2, std::vector<AtomResult> atoms);

ClassFractions binomial_fraction(std::size_t successes, std::size_t trials);

struct SweepHooks {
    /// Known results for one irradiance (checkpoint resume).
    std::function<std::map<std::uint64_t, AtomResult>(double)> load;
    /// Persist one newly finished atom for one irradiance.
    std::function<void(double, const AtomResult&)> store;
};

/// Run every irradiance through run_ensemble. `make_environment` maps an
/// irradiance in kW/cm^2 to the environment; per-atom failures are recorded.
SweepReport run_sweep(const std::vector<double>& irradiances_kw_cm2,
                      const std::function<Environment(double)>& make_environment, const EnsembleSpec& spec,
                      const TrappingCriteria& criteria, const SimUnits& units, const RunOptions& options,
                      const SweepHooks& hooks = {});

}  // namespace labyrinth
