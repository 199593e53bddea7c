#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "support.hpp"

using namespace labyrinth;
using namespace testing::signals;

namespace {

void check_parseval(const PowerSpectrum& s) { CHECK(parseval_error(s) <= 1e-10); }

// Two Gaussian bumps on the x axis, the left one brighter.
LobeMap two_bumps(double threshold = 0.1) {
    const int n = 201;
    const double hw = 10.0;
    std::vector<double> intensity(n * n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const double x = -hw + 0.1 * ix, y = -hw + 0.1 * iy;
            intensity[iy * n + ix] = std::exp(-((x + 3) * (x + 3) + y * y) / 2.0) +
                                     0.8 * std::exp(-((x - 3) * (x - 3) + y * y) / 2.0);
        }
    return lobe_segmentation(intensity, n, hw, threshold);
}

Trajectory path(const std::vector<double>& xs, double dt = 1.0) {
    Trajectory tr;
    tr.sample_interval = dt;
    for (std::size_t i = 0; i < xs.size(); ++i) tr.samples.push_back({Vec3(xs[i], 0, 0), Vec3::Zero(), dt * i});
    tr.horizon = tr.duration();
    return tr;
}

}  // namespace

TEST_CASE("sinusoid gives one clean peak") {
    const std::size_t n = kSamples;
    const auto t = times();
    SUBCASE("on a bin") {
        const double f0 = 211.0 / (4096 * kDt);
        const PowerSpectrum s = power_spectrum(t, tones({{f0, 1.0, 0.3}}));
        check_parseval(s);
        CHECK(s.segments >= 8);
        CHECK(s.segment_length * (s.segments + 1) / 2 <= n);
        const auto top = std::max_element(s.power.begin(), s.power.end()) - s.power.begin();
        CHECK(std::abs(s.frequency[top] - f0) <= s.frequency[1] - s.frequency[0]);
        double side = 0.0;
        for (std::size_t k = 0; k < s.power.size(); ++k)
            if (std::abs(static_cast<double>(k) - top) > 1) side += s.power[k];
        CHECK(side < 1e-4 * s.power[top]);
        CHECK(find_peaks(s, 20, 3).front().bin == static_cast<std::size_t>(top));
        CHECK(classify_motion(s).label == MotionLabel::quasiperiodic);
    }
    SUBCASE("between bins") {
        const double f0 = 211.5 / (4096 * kDt);
        const PowerSpectrum s = power_spectrum(t, tones({{f0, 1.0, 0.3}}));
        check_parseval(s);
        const auto top = std::max_element(s.power.begin(), s.power.end()) - s.power.begin();
        CHECK(std::abs(s.frequency[top] - f0) <= s.frequency[1] - s.frequency[0]);
        double side = 0.0;
        for (std::size_t k = 0; k < s.power.size(); ++k)
            if (std::abs(static_cast<double>(k) - top) > 4) side = std::max(side, s.power[k]);
        CHECK(side < 1e-4 * s.power[top]);
        CHECK(classify_motion(s).label == MotionLabel::quasiperiodic);
    }
}

TEST_CASE("two incommensurate tones give exactly two peaks") {
    const auto x = tones({{0.5 / (kDt * std::numbers::sqrt2 * 4.0), 1.0, 0.0}, {0.5 / (kDt * pi), 0.6, 1.0}});
    const PowerSpectrum s = power_spectrum(times(), x);
    check_parseval(s);
    const auto peaks = find_peaks(s, 20, 3);
    double total = s.total(), top_two = 0.0;
    for (std::size_t i = 0; i < 2; ++i) top_two += peaks[i].power;
    CHECK(top_two / total > 0.99);
    std::size_t significant = 0;
    for (const auto& p : peaks) significant += p.power > 1e-4 * total;
    CHECK(significant == 2);
}

TEST_CASE("white noise is flat") {
    std::mt19937_64 gen(1);
    const auto x = colored_noise(gen, 0.0, 1);
    const PowerSpectrum s = power_spectrum(times(), x);
    check_parseval(s);
    CHECK(spectral_flatness(s) > 0.9);
    CHECK(classify_motion(s).label == MotionLabel::chaotic);
}

TEST_CASE("spectrum input errors") {
    auto t = times(1 << 12);
    std::vector<double> x(t.size(), 1.0);
    CHECK_THROWS_AS(power_spectrum(t, x), AnalysisError);  // too short
    t = times();
    x.assign(t.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.01 * i);
    auto bent = t;
    bent[100] += 3.0;
    CHECK_THROWS_AS(power_spectrum(bent, x), AnalysisError);
    std::vector<double> zeros(t.size(), 0.0);
    CHECK_THROWS_AS(classify_motion(power_spectrum(t, zeros)), AnalysisError);
}

TEST_CASE("classifier suite: 100 multitone signals and 100 noise signals") {
    const auto t = times();
    int wrong = 0;
    for (const Case& c : classifier_suite(2024)) {
        const PowerSpectrum s = power_spectrum(t, c.values);
        check_parseval(s);
        wrong += classify_motion(s).label != c.expected;
    }
    CHECK(wrong == 0);
}

TEST_CASE("lobe segmentation of two bumps") {
    const LobeMap m = two_bumps();
    REQUIRE(m.count() == 2);
    CHECK(m.component_peak[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m.component_peak_location[0].x() == doctest::Approx(-3.0).epsilon(1e-6));
    CHECK(m.lobe_at(-3, 0) == 0);
    CHECK(m.lobe_at(3, 0) == 1);
    CHECK(m.component_at(0, 0) == -1);
    CHECK(m.lobe_at(-0.5, 4) == 0);
    CHECK(m.lobe_at(9.9, -9.9) == 1);
    CHECK(m.lobe_at(50, 0) == -1);
    CHECK_THROWS_AS(two_bumps(1.5), AnalysisError);
    CHECK(two_bumps().lobe == m.lobe);
}

TEST_CASE("lobe events") {
    const LobeMap m = two_bumps();
    SUBCASE("single lobe") {
        std::vector<double> xs(500);
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = -3 + std::sin(0.05 * i);
        const auto ev = lobe_events(path(xs), m);
        REQUIRE(ev.size() == 1);
        CHECK(ev[0].lobe_id == 0);
        CHECK(ev[0].duration() == 499.0);
        CHECK(completed_dwells(ev).empty());
    }
    SUBCASE("A -> B -> A with dwells 100, 200, 300") {
        std::vector<double> xs;
        for (int i = 0; i < 100; ++i) xs.push_back(-3.0);
        for (int i = 0; i < 200; ++i) xs.push_back(3.0);
        for (int i = 0; i <= 300; ++i) xs.push_back(-3.0);
        const auto ev = lobe_events(path(xs), m);
        REQUIRE(ev.size() == 3);
        CHECK(ev[0].duration() == 100.0);
        CHECK(ev[1].duration() == 200.0);
        CHECK(ev[2].duration() == 300.0);
        CHECK(ev[1].lobe_id == 1);
        CHECK(ev[1].entry_index == ev[0].exit_index + 1);
        CHECK(completed_dwells(ev).size() == 2);
    }
    SUBCASE("chatter across the boundary stays one event") {
        std::vector<double> xs;
        for (int i = 0; i < 50; ++i) xs.push_back(-3.0 + 3.0 * i / 50.0);
        // reaches 0.11-0.14 of the peak on both sides: inside either
        // component but short of 1.5 times the threshold
        for (int i = 0; i < 400; ++i) xs.push_back(-1.02 * std::cos(0.3 * i) * (i < 10 ? 0.0 : 1.0));
        for (int i = 0; i < 50; ++i) xs.push_back(-3.0 * i / 50.0);
        const auto ev = lobe_events(path(xs), m);
        CHECK(ev.size() == 1);
        // without the margin the same path chatters
        CHECK(lobe_events(path(xs), m, 1.0).size() > 10);
    }
    SUBCASE("durations partition the record") {
        std::mt19937_64 gen(8);
        std::vector<double> xs;
        std::uniform_int_distribution<int> len(1, 60);
        double x = -3;
        while (xs.size() < 3000) {
            x = -x;
            for (int k = len(gen); k > 0; --k) xs.push_back(x);
        }
        const Trajectory tr = path(xs, 0.5);
        const auto ev = lobe_events(tr, m);
        double sum = 0.0;
        for (std::size_t i = 0; i < ev.size(); ++i) {
            CHECK(ev[i].exit_time > ev[i].entry_time);
            if (i) {
                CHECK(ev[i].lobe_id != ev[i - 1].lobe_id);
                CHECK(ev[i].entry_time == ev[i - 1].exit_time);
            }
            sum += ev[i].duration();
        }
        CHECK(sum == doctest::Approx(tr.duration()).epsilon(1e-15));
        const auto hist = permanency_histogram(completed_dwells(ev), 5.0);
        CHECK(hist.total == ev.size() - 1);
        CHECK(std::accumulate(hist.counts.begin(), hist.counts.end(), std::uint64_t{0}) == ev.size() - 1);
    }
}

TEST_CASE("permanency histogram") {
    SUBCASE("constant dwells land in one bin") {
        const std::vector<double> d(40, 75.0);
        const auto h = permanency_histogram(d);
        REQUIRE(h.counts.size() == 2);
        CHECK(h.counts[0] == 0);
        CHECK(h.counts[1] == 40);
        CHECK(h.min_dwell == 75.0);
        CHECK(h.longest_dwell == 75.0);
        CHECK(h.log_counts()[0] == 0.0);
        CHECK(h.log_counts()[1] == doctest::Approx(std::log10(40.0)));
    }
    SUBCASE("power-law dwells recover the exponent") {
        std::mt19937_64 gen(6);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> d(2000000);
        for (double& x : d) x = 100.0 / (1.0 - u(gen));  // density ~ T^-2 above 100
        const auto h = permanency_histogram(d, 50.0);
        MESSAGE("slope " << h.slope << " over " << h.fit_points << " maxima, r2 " << h.r_squared);
        CHECK(h.fit_points >= 3);
        CHECK(h.slope == doctest::Approx(-2.0).epsilon(0.1));
        CHECK(h.total == d.size());
    }
    SUBCASE("empty input") {
        const auto h = permanency_histogram(std::vector<double>{});
        CHECK(h.total == 0);
        CHECK(h.counts.empty());
        CHECK_THROWS(permanency_histogram(std::vector<double>{1.0}, 0.0));
    }
}

TEST_CASE("partial trajectories") {
    const LobeMap m = two_bumps();
    std::vector<double> xs;
    for (int i = 0; i < 500; ++i) xs.push_back(-3.0);
    for (int i = 0; i < 8100; ++i) xs.push_back(3.0);
    for (int i = 0; i < 300; ++i) xs.push_back(-3.0);
    const Trajectory tr = path(xs);
    const auto ev = lobe_events(tr, m);
    REQUIRE(ev.size() == 3);
    const auto sel = extract_partial_trajectories(tr, ev, 8000, 1000);
    REQUIRE(sel.size() == 1);
    CHECK(sel[0].lobe_id == 1);
    CHECK(sel[0].exit_time - sel[0].entry_time == 8100.0);
    CHECK(sel[0].positions.size() == 8100);

    const auto all = extract_partial_trajectories(tr, ev, 0.0, 1e9);
    std::size_t covered = 0, next = 0;
    for (const auto& s : all) {
        CHECK(s.first_index == next);
        next += s.positions.size();
        covered += s.positions.size();
    }
    CHECK(covered == tr.samples.size());
    CHECK(extract_partial_trajectories(tr, ev, 50000, 10).empty());
}

TEST_CASE("phase space") {
    Trajectory tr;
    const double w = 0.07, a = 2.0;
    for (int i = 0; i < 400; ++i) {
        const double t = 0.37 * i;
        tr.samples.push_back({Vec3(0, a * std::cos(w * t) + 0.5, 0), Vec3(0, -a * w * std::sin(w * t), 0), t});
    }
    const auto pts = phase_space_export(tr, 1, 1);
    REQUIRE(pts.size() == 400);
    // conic A y^2 + B y v + C v^2 + D y + E v = 1
    Eigen::MatrixXd M(400, 5);
    Eigen::VectorXd one = Eigen::VectorXd::Ones(400);
    for (int i = 0; i < 400; ++i) {
        const auto [y, v] = pts[i];
        M.row(i) << y * y, y * v, v * v, y, v;
    }
    const Eigen::VectorXd c = M.colPivHouseholderQr().solve(one);
    CHECK((M * c - one).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(c(1) * c(1) - 4 * c(0) * c(2) < 0.0);  // ellipse

    Trajectory still;
    for (int i = 0; i < 10; ++i) still.samples.push_back({Vec3(1, 2, 3), Vec3::Zero(), 1.0 * i});
    for (const auto& p : phase_space_export(still, 0, 0)) {
        CHECK(p.first == 1.0);
        CHECK(p.second == 0.0);
    }
    CHECK_THROWS(phase_space_export(still, 3, 0));
}

TEST_CASE("lobes of the lattice field") {
    const RunConfig config = testing::small_config();
    const Lattice lattice = Lattice::build(config);
    const LobeMap& m = *lattice.lobes;
    const int n = m.points;

    SUBCASE("central ring and the first mirror pair") {
        // at 10% the bright central pair is joined through a faint ring
        CHECK(m.component_at(1.2, 0.0) == 0);
        CHECK(m.component_at(-1.2, 0.0) == 0);
        CHECK(m.component_at(0.0, 1.2) == 0);
        CHECK(m.component_at(0.0, 0.0) == -1);
        CHECK(m.component_peak_location[1].x() == doctest::Approx(-m.component_peak_location[2].x()));
        CHECK(std::abs(m.component_peak_location[1].x()) == doctest::Approx(3.6).epsilon(0.02));
        const LobeMap split = lobe_segmentation(*lattice.grid, 0.35);
        CHECK(split.component_peak_location[0].x() * split.component_peak_location[1].x() < 0.0);
        CHECK(std::abs(split.component_peak_location[0].x()) == doctest::Approx(1.2).epsilon(0.03));
    }

    SUBCASE("mirror symmetry in y") {
        std::map<int, int> image;
        for (std::size_t c = 0; c < m.count(); ++c) {
            const auto p = m.component_peak_location[c];
            image[static_cast<int>(c)] = m.component_at(p.x(), -p.y());
        }
        int bad = 0;
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                const int a = m.lobe[iy * n + ix], b = m.lobe[(n - 1 - iy) * n + ix];
                bad += image.at(a) != b;
                CHECK(m.intensity[iy * n + ix] == doctest::Approx(m.intensity[(n - 1 - iy) * n + ix]).epsilon(1e-9));
            }
        CHECK(bad == 0);
    }

    SUBCASE("near-peak threshold keeps one maximum per component") {
        const LobeMap top = lobe_segmentation(*lattice.grid, 0.999);
        std::vector<int> maxima(top.count(), 0);
        for (int iy = 1; iy + 1 < n; ++iy)
            for (int ix = 1; ix + 1 < n; ++ix) {
                const double v = top.intensity[iy * n + ix];
                const int c = top.component[iy * n + ix];
                if (c < 0) continue;
                bool is_max = true;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        if ((dx || dy) && top.intensity[(iy + dy) * n + ix + dx] > v) is_max = false;
                maxima[c] += is_max;
            }
        for (int k : maxima) CHECK(k == 1);
    }

    SUBCASE("deterministic") {
        CHECK(lobe_segmentation(*lattice.grid, 0.1).lobe == m.lobe);
    }
}
