#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

using namespace labyrinth;

namespace {

Trajectory synthetic(std::size_t n, double dt, const std::function<Vec3(double)>& path) {
    Trajectory tr;
    tr.sample_interval = dt;
    tr.horizon = dt * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = dt * static_cast<double>(i);
        tr.samples.push_back({path(t), Vec3::Zero(), t});
    }
    return tr;
}

}  // namespace

TEST_CASE("initial conditions: disk, kinetic energy, determinism") {
    const SimUnits units;
    const double mass = units.mass(AtomSpecies::rubidium85().mass_kg);
    EnsembleSpec spec;
    spec.n_atoms = 10000;
    spec.seed = 42;
    const auto atoms = sample_initial_conditions(spec, units, mass);
    REQUIRE(atoms.size() == 10000);

    double ex = 0, ey = 0, ez = 0, r2 = 0;
    for (const AtomState& a : atoms) {
        CHECK(a.position.head<2>().squaredNorm() <= 400.0);
        CHECK(a.position.z() == spec.z0);
        CHECK(a.time == 0.0);
        ex += 0.5 * mass * a.velocity.x() * a.velocity.x();
        ey += 0.5 * mass * a.velocity.y() * a.velocity.y();
        ez += 0.5 * mass * a.velocity.z() * a.velocity.z();
        r2 += a.position.head<2>().squaredNorm();
    }
    const double n = 1e4;
    ex /= n, ey /= n, ez /= n, r2 /= n;
    // 1/2 m v^2 = 1/2 kT chi2(1): sigma of the mean is kT / sqrt(2 n)
    const double kt_xy = units.temperature_energy(3.0e-6);
    const double kt_z = units.temperature_energy(0.2e-6);
    CHECK(std::abs(ex - 0.5 * kt_xy) < 3 * kt_xy / std::sqrt(2 * n));
    CHECK(std::abs(ey - 0.5 * kt_xy) < 3 * kt_xy / std::sqrt(2 * n));
    CHECK(std::abs(ez - 0.5 * kt_z) < 3 * kt_z / std::sqrt(2 * n));
    // area-uniform: <r^2> = R^2 / 2, sd of r^2 is R^2 / sqrt(12)
    CHECK(std::abs(r2 - 200.0) < 3 * 400.0 / std::sqrt(12 * n));

    const auto again = sample_initial_conditions(spec, units, mass);
    CHECK(again[1234].position == atoms[1234].position);
    CHECK(again[1234].velocity == atoms[1234].velocity);
    const AtomState one = sample_initial_condition(spec, units, mass, 777);
    CHECK(one.velocity == atoms[777].velocity);
    spec.seed = 43;
    CHECK(sample_initial_condition(spec, units, mass, 777).velocity != atoms[777].velocity);
}

TEST_CASE("fixed transverse temperature via equal bounds") {
    EnsembleSpec spec;
    spec.t_xy_min = spec.t_xy_max = 3e-6;
    CHECK_NOTHROW(spec.validate());
    spec.t_xy_max = 1e-6;
    CHECK_THROWS(spec.validate());
    spec = EnsembleSpec{};
    spec.n_atoms = 0;
    CHECK_THROWS(spec.validate());
    TrappingCriteria c;
    c.axial_bound = -1;
    CHECK_THROWS(c.validate());
}

TEST_CASE("trapping classification of synthetic paths") {
    TrappingCriteria crit{80.0, 5.0, 1000.0};
    SUBCASE("at rest") {
        const auto tr = synthetic(101, 10.0, [](double) { return Vec3::Zero(); });
        CHECK(classify_trapping(tr, crit).label == TrappingLabel::trapped);
    }
    SUBCASE("radial ballistic") {
        const auto tr = synthetic(101, 10.0, [](double t) { return Vec3(0.3 * t, 0.4 * t, 0.0); });
        const auto r = classify_trapping(tr, crit);
        CHECK(r.label == TrappingLabel::escaped_transverse);
        CHECK(*r.crossing_time == doctest::Approx(160.0));
    }
    SUBCASE("axial drift") {
        const auto tr = synthetic(101, 10.0, [](double t) { return Vec3(1.0, 0.0, 2.0 - 0.01 * t); });
        const auto r = classify_trapping(tr, crit);
        CHECK(r.label == TrappingLabel::escaped_axial);
        CHECK(*r.crossing_time == doctest::Approx(500.0));
    }
    SUBCASE("earlier crossing wins") {
        const auto tr = synthetic(101, 10.0, [](double t) { return Vec3(0.1 * t, 0.0, 0.011 * t); });
        CHECK(classify_trapping(tr, crit).label == TrappingLabel::escaped_axial);
    }
    SUBCASE("violations after the horizon do not count") {
        const auto tr = synthetic(201, 10.0, [](double t) { return Vec3(0.05 * t, 0.0, 0.0); });
        CHECK(classify_trapping(tr, crit).label == TrappingLabel::trapped);
    }
    SUBCASE("short record without escape is inconclusive") {
        const auto tr = synthetic(11, 10.0, [](double) { return Vec3::Zero(); });
        CHECK_THROWS_AS(classify_trapping(tr, crit), InconclusiveError);
    }
    SUBCASE("escape flag from the integrator") {
        auto tr = synthetic(11, 10.0, [](double) { return Vec3::Zero(); });
        tr.escape = EscapeRecord{EscapeKind::axial, 104.0, {}};
        const auto r = classify_trapping(tr, crit);
        CHECK(r.label == TrappingLabel::escaped_axial);
        CHECK(*r.crossing_time == 104.0);
    }
}

TEST_CASE("escape predicate checks the radial bound first") {
    const auto pred = make_escape_predicate(TrappingCriteria{80, 5, 1}, 1.0);
    CHECK(pred(AtomState{Vec3(0, 0, 1), Vec3::Zero(), 0}) == EscapeKind::none);
    CHECK(pred(AtomState{Vec3(0, 0, 6.5), Vec3::Zero(), 0}) == EscapeKind::axial);
    CHECK(pred(AtomState{Vec3(90, 0, 6.5), Vec3::Zero(), 0}) == EscapeKind::transverse);
}

TEST_CASE("binomial fractions") {
    const auto f = binomial_fraction(70, 100);
    CHECK(f.value == doctest::Approx(0.7));
    CHECK(f.error == doctest::Approx(std::sqrt(0.7 * 0.3 / 100)));
    CHECK(binomial_fraction(0, 0).value == 0.0);
}

TEST_CASE("lattice ensembles") {
    RunConfig config = testing::small_config();
    config.n_atoms = 8;
    config.t_final = config.horizon = 6e4;
    const Lattice lattice = Lattice::build(config);
    const EnsembleSpec spec = lattice.ensemble_spec();
    const TrappingCriteria crit = lattice.criteria();

    SUBCASE("zero irradiance: everything escapes") {
        RunConfig dark = config;
        dark.t_final = dark.horizon = 1e6;
        dark.n_atoms = 20;
        const Lattice l = Lattice::build(dark);
        const auto results = run_ensemble(l.environment(0.0), l.ensemble_spec(), l.criteria(),
                                          l.physics.units, l.run_options(1));
        const SweepPoint p = summarize(0.0, results);
        CHECK(p.n_atoms == 20);
        CHECK(p.non_trapped.value == 1.0);
        CHECK(p.escaped_transverse + p.escaped_axial == 20);
    }

    SUBCASE("thread count does not change results") {
        const Environment env = lattice.environment(6.0);
        const auto one = run_ensemble(env, spec, crit, lattice.physics.units, lattice.run_options(1));
        const auto three = run_ensemble(env, spec, crit, lattice.physics.units, lattice.run_options(3));
        REQUIRE(one.size() == 8);
        CHECK(one == three);
        const SweepPoint p = summarize(6.0, one);
        CHECK(p.escaped_transverse + p.escaped_axial + p.quasiperiodic + p.chaotic + p.unclassified + p.failed == 8);
        CHECK(p.non_trapped.value + p.trapped.value == doctest::Approx(1.0));
    }

    SUBCASE("interrupted run resumes to the same result") {
        const Environment env = lattice.environment(6.0);
        const auto full = run_ensemble(env, spec, crit, lattice.physics.units, lattice.run_options(2));
        RunOptions first = lattice.run_options(2);
        first.stop_after = 3;
        std::map<std::uint64_t, AtomResult> stored;
        first.on_result = [&](const AtomResult& r) { stored[r.atom_id] = r; };
        const auto partial = run_ensemble(env, spec, crit, lattice.physics.units, first);
        CHECK(partial.size() == 3);
        CHECK(stored.size() == 3);
        RunOptions second = lattice.run_options(2);
        second.completed = stored;
        std::size_t fresh = 0;
        second.on_result = [&](const AtomResult&) { ++fresh; };
        const auto resumed = run_ensemble(env, spec, crit, lattice.physics.units, second);
        CHECK(fresh == 5);
        CHECK(resumed == full);
    }

    SUBCASE("callback failures propagate, per-atom failures do not") {
        const Environment env = lattice.environment(6.0);
        RunOptions opt = lattice.run_options(2);
        opt.on_result = [](const AtomResult&) { throw std::runtime_error("disk full"); };
        CHECK_THROWS_WITH(run_ensemble(env, spec, crit, lattice.physics.units, opt), "disk full");

        RunOptions strict = lattice.run_options(1);
        strict.integrator.max_speed = 1e-6;
        const auto results = run_ensemble(env, spec, crit, lattice.physics.units, strict);
        REQUIRE(results.size() == 8);
        for (const auto& r : results) CHECK(r.failed());
        CHECK(summarize(6.0, results).failed == 8);
    }

    SUBCASE("sweep with checkpoint hooks") {
        std::map<double, std::map<std::uint64_t, AtomResult>> store;
        SweepHooks hooks;
        hooks.load = [&](double irr) { return store[irr]; };
        hooks.store = [&](double irr, const AtomResult& r) { store[irr][r.atom_id] = r; };
        auto make_env = [&](double irr) { return lattice.environment(irr); };
        RunOptions opt = lattice.run_options(1);
        const SweepReport a = run_sweep({0.5, 6.0}, make_env, spec, crit, lattice.physics.units, opt, hooks);
        REQUIRE(a.points.size() == 2);
        CHECK(store[6.0].size() == 8);
        std::size_t fresh = 0;
        opt.on_result = [&](const AtomResult&) { ++fresh; };
        const SweepReport b = run_sweep({0.5, 6.0}, make_env, spec, crit, lattice.physics.units, opt, hooks);
        CHECK(fresh == 0);
        CHECK(b.points[1].atoms == a.points[1].atoms);
        CHECK_THROWS(run_sweep({}, make_env, spec, crit, lattice.physics.units, opt, hooks));
    }
}
