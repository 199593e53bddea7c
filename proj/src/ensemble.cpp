#include "labyrinth/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "labyrinth/random.hpp"

namespace labyrinth {

void EnsembleSpec::validate() const {
    if (n_atoms < 1) throw std::invalid_argument("ensemble: n_atoms must be at least 1");
    if (!(disk_radius > 0.0)) throw std::invalid_argument("ensemble: disk_radius must be positive");
    if (!(t_xy_min > 0.0) || !(t_xy_max >= t_xy_min))
        throw std::invalid_argument("ensemble: need 0 < t_xy_min <= t_xy_max");
    if (!(t_z > 0.0)) throw std::invalid_argument("ensemble: t_z must be positive");
    if (!std::isfinite(z0)) throw std::invalid_argument("ensemble: z0 must be finite");
    if (!(t_final > 0.0)) throw std::invalid_argument("ensemble: t_final must be positive");
}

void TrappingCriteria::validate() const {
    if (!(radial_bound > 0.0) || !(axial_bound > 0.0) || !(horizon > 0.0))
        throw std::invalid_argument("trapping: bounds and horizon must be positive");
}

const char* to_string(TrappingLabel label) {
    switch (label) {
        case TrappingLabel::trapped: return "trapped";
        case TrappingLabel::escaped_transverse: return "escaped_transverse";
        case TrappingLabel::escaped_axial: return "escaped_axial";
    }
    return "?";
}

const char* to_string(MotionLabel label) {
    return label == MotionLabel::quasiperiodic ? "quasiperiodic" : "chaotic";
}

AtomState sample_initial_condition(const EnsembleSpec& spec, const SimUnits& units, double mass,
                                   std::uint64_t atom_id) {
    Rng rng(spec.seed, atom_id);
    const double r = spec.disk_radius * std::sqrt(rng.uniform());
    const double theta = two_pi * rng.uniform();
    const double t_xy = spec.t_xy_min + (spec.t_xy_max - spec.t_xy_min) * rng.uniform();
    const double s_xy = std::sqrt(units.temperature_energy(t_xy) / mass);
    const double s_z = std::sqrt(units.temperature_energy(spec.t_z) / mass);
    AtomState s;
    s.position = Vec3(r * std::cos(theta), r * std::sin(theta), spec.z0);
    const double vx = rng.normal(), vy = rng.normal(), vz = rng.normal();
    s.velocity = Vec3(s_xy * vx, s_xy * vy, s_z * vz);
    return s;
}

std::vector<AtomState> sample_initial_conditions(const EnsembleSpec& spec, const SimUnits& units, double mass) {
    spec.validate();
    if (!(mass > 0.0)) throw std::invalid_argument("sample_initial_conditions: mass must be positive");
    std::vector<AtomState> out;
    out.reserve(spec.n_atoms);
    for (std::size_t i = 0; i < spec.n_atoms; ++i) out.push_back(sample_initial_condition(spec, units, mass, i));
    return out;
}

EscapePredicate make_escape_predicate(const TrappingCriteria& criteria, double z0) {
    return [criteria, z0](const AtomState& s) {
        if (std::hypot(s.position.x(), s.position.y()) >= criteria.radial_bound) return EscapeKind::transverse;
        if (std::abs(s.position.z() - z0) >= criteria.axial_bound) return EscapeKind::axial;
        return EscapeKind::none;
    };
}

TrappingResult classify_trapping(const Trajectory& trajectory, const TrappingCriteria& criteria) {
    const auto& s = trajectory.samples;
    if (s.empty()) throw InconclusiveError("classify_trapping: empty trajectory");
    const double z_ref = s.front().position.z();
    auto radial = [&](const AtomState& a) { return std::hypot(a.position.x(), a.position.y()); };
    auto axial = [&](const AtomState& a) { return std::abs(a.position.z() - z_ref); };
    auto crossing = [&](std::size_t i, double f0, double f1, double bound) {
        if (i == 0 || f1 == f0) return s[i].time;
        return s[i - 1].time + (bound - f0) / (f1 - f0) * (s[i].time - s[i - 1].time);
    };

    for (std::size_t i = 0; i < s.size() && s[i].time <= criteria.horizon; ++i) {
        const double r = radial(s[i]), dz = axial(s[i]);
        const bool out_r = r >= criteria.radial_bound, out_z = dz >= criteria.axial_bound;
        if (!out_r && !out_z) continue;
        const double tr = out_r ? crossing(i, i ? radial(s[i - 1]) : r, r, criteria.radial_bound) : INFINITY;
        const double tz = out_z ? crossing(i, i ? axial(s[i - 1]) : dz, dz, criteria.axial_bound) : INFINITY;
        if (tr <= tz) return {TrappingLabel::escaped_transverse, tr};
        return {TrappingLabel::escaped_axial, tz};
    }
    if (trajectory.escape && trajectory.escape->time <= criteria.horizon) {
        const auto label = trajectory.escape->kind == EscapeKind::axial ? TrappingLabel::escaped_axial
                                                                        : TrappingLabel::escaped_transverse;
        return {label, trajectory.escape->time};
    }
    const double step = trajectory.sample_interval > 0.0 ? trajectory.sample_interval : 0.0;
    if (s.back().time + step * (1.0 + 1e-9) < criteria.horizon)
        throw InconclusiveError("classify_trapping: trajectory ends before the horizon without escaping");
    return {TrappingLabel::trapped, std::nullopt};
}

std::uint64_t trajectory_checksum(const Trajectory& trajectory) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& s : trajectory.samples) {
        feed(s.time);
        for (int k = 0; k < 3; ++k) feed(s.position[k]);
        for (int k = 0; k < 3; ++k) feed(s.velocity[k]);
    }
    return h;
}

bool AtomResult::operator==(const AtomResult& o) const {
    return atom_id == o.atom_id && initial.position == o.initial.position && initial.velocity == o.initial.velocity &&
           initial.time == o.initial.time && trapping == o.trapping && escape_time == o.escape_time &&
           motion == o.motion && flatness == o.flatness && peak_fraction == o.peak_fraction &&
           transitions == o.transitions && final_state.position == o.final_state.position &&
           final_state.velocity == o.final_state.velocity && final_state.time == o.final_state.time &&
           checksum == o.checksum && stats.accepted == o.stats.accepted && stats.rejected == o.stats.rejected &&
           stats.evaluations == o.stats.evaluations && error == o.error;
}

AtomResult analyze_atom(const Trajectory& trajectory, const TrappingCriteria& criteria, const AnalysisParams& params,
                        const LobeMap* lobes) {
    AtomResult r;
    r.atom_id = trajectory.meta.atom_id;
    if (!trajectory.samples.empty()) {
        r.initial = trajectory.samples.front();
        r.final_state = trajectory.escape ? trajectory.escape->state : trajectory.samples.back();
    }
    r.checksum = trajectory_checksum(trajectory);
    r.stats = trajectory.stats;
    const auto trap = classify_trapping(trajectory, criteria);
    r.trapping = trap.label;
    r.escape_time = trap.crossing_time;
    if (trap.label != TrappingLabel::trapped) return r;
    if (trajectory.samples.size() >= params.spectrum.min_samples) {
        const auto spectrum = power_spectrum(trajectory, params.spectrum_coordinate, params.spectrum);
        const auto motion = classify_motion(spectrum, params.motion);
        r.motion = motion.label;
        r.flatness = motion.flatness;
        r.peak_fraction = motion.peak_fraction;
    }
    if (lobes) {
        const auto events = lobe_events(trajectory, *lobes, params.hysteresis);
        r.transitions = events.empty() ? 0 : events.size() - 1;
    }
    return r;
}

std::vector<AtomResult> run_ensemble(const Environment& env, const EnsembleSpec& spec, const TrappingCriteria& criteria,
                                     const SimUnits& units, RunOptions options) {
    spec.validate();
    criteria.validate();
    options.integrator.escape = make_escape_predicate(criteria, spec.z0);

    std::vector<std::uint64_t> pending;
    for (std::uint64_t id = 0; id < spec.n_atoms; ++id)
        if (!options.completed.count(id)) pending.push_back(id);

    std::vector<std::optional<AtomResult>> fresh(pending.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex sink;
    std::exception_ptr failure;
    const std::size_t limit =
        options.stop_after > 0 ? std::min(options.stop_after, pending.size()) : pending.size();

    auto work = [&]() {
        while (!abort.load()) {
            const std::size_t k = next.fetch_add(1);
            if (k >= limit) return;
            const std::uint64_t id = pending[k];
            const AtomState initial = sample_initial_condition(spec, units, env.mass, id);
            AtomResult result;
            std::optional<Trajectory> traj;
            try {
                traj = integrate(initial, env, spec.t_final, options.sample_interval, options.integrator);
                traj->meta.atom_id = id;
                traj->meta.seed = spec.seed;
                result = analyze_atom(*traj, criteria, options.analysis, options.lobes.get());
            } catch (const std::exception& e) {
                result = AtomResult{};
                result.atom_id = id;
                result.initial = initial;
                result.error = e.what();
                if (auto* ie = dynamic_cast<const IntegrationError*>(&e)) result.final_state = ie->state;
            }
            try {
                std::lock_guard lock(sink);
                if (options.on_trajectory && traj) options.on_trajectory(result, *traj);
                if (options.on_result) options.on_result(result);
            } catch (...) {
                std::lock_guard lock(sink);
                if (!failure) failure = std::current_exception();
                abort = true;
                return;
            }
            fresh[k] = std::move(result);
        }
    };

    const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(std::max<std::size_t>(limit, 1))));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<AtomResult> out;
    for (auto& [id, r] : options.completed)
        if (id < spec.n_atoms) out.push_back(r);
    for (auto& r : fresh)
        if (r) out.push_back(std::move(*r));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.atom_id < b.atom_id; });
    return out;
}

ClassFractions binomial_fraction(std::size_t successes, std::size_t trials) {
    if (trials == 0) return {};
    const double p = static_cast<double>(successes) / static_cast<double>(trials);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

SweepPoint summarize(double irradiance_kw_cm2, std::vector<AtomResult> atoms) {
    SweepPoint p;
    p.irradiance_kw_cm2 = irradiance_kw_cm2;
    p.n_atoms = atoms.size();
    for (const auto& a : atoms) {
        if (a.failed()) {
            ++p.failed;
        } else if (a.trapping == TrappingLabel::escaped_transverse) {
            ++p.escaped_transverse;
        } else if (a.trapping == TrappingLabel::escaped_axial) {
            ++p.escaped_axial;
        } else if (!a.motion) {
            ++p.unclassified;
        } else if (*a.motion == MotionLabel::quasiperiodic) {
            ++p.quasiperiodic;
        } else {
            ++p.chaotic;
        }
    }
    const std::size_t trapped = p.quasiperiodic + p.chaotic + p.unclassified;
    p.non_trapped = binomial_fraction(p.escaped_transverse + p.escaped_axial, p.n_atoms);
    p.trapped = binomial_fraction(trapped, p.n_atoms);
    p.quasiperiodic_fraction = binomial_fraction(p.quasiperiodic, p.n_atoms);
    p.chaotic_fraction = binomial_fraction(p.chaotic, p.n_atoms);
    p.atoms = std::move(atoms);
    return p;
}

SweepReport run_sweep(const std::vector<double>& irradiances_kw_cm2,
                      const std::function<Environment(double)>& make_environment, const EnsembleSpec& spec,
                      const TrappingCriteria& criteria, const SimUnits& units, const RunOptions& options,
                      const SweepHooks& hooks) {
    if (irradiances_kw_cm2.empty()) throw std::invalid_argument("run_sweep: empty irradiance list");
    SweepReport report;
    for (double irradiance : irradiances_kw_cm2) {
        RunOptions opt = options;
        if (hooks.load) opt.completed = hooks.load(irradiance);
        if (hooks.store) {
            opt.on_result = [&, irradiance, user = options.on_result](const AtomResult& r) {
                hooks.store(irradiance, r);
                if (user) user(r);
            };
        }
        const Environment env = make_environment(irradiance);
        report.points.push_back(summarize(irradiance, run_ensemble(env, spec, criteria, units, std::move(opt))));
    }
    return report;
}

}  // namespace labyrinth
