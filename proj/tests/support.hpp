#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <vector>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "labyrinth/analysis.hpp"
#include "labyrinth/beam_field.hpp"
#include "labyrinth/config.hpp"
#include "labyrinth/pipeline.hpp"

namespace testing {

using namespace labyrinth;

inline FieldMode unit_mode(Parity parity = Parity::even, double a = 0.0) {
    SimUnits u;
    return FieldMode::from_ratio(0.975, parity, a, 1.0, u.light_speed());
}

// d^m/dx^m d^n/dy^n psi straight from the plane-wave superposition
// psi = int A(phi) exp(-i k (x cos phi + y sin phi)) dphi, tanh-sinh on each
// half of the circle. The spectrum is rebuilt from the endpoint distance so
// sin(phi) keeps full relative precision next to the singularities.
inline std::complex<double> psi_oracle(const FieldMode& mode, double x, double y, int m = 0, int n = 0) {
    const double k = mode.k_perp;
    const std::complex<double> i(0.0, 1.0);
    boost::math::quadrature::tanh_sinh<double> ts;
    std::complex<double> total = 0.0;
    for (int half = 0; half < 2; ++half) {
        const double sign = half == 0 ? 1.0 : -1.0;  // phi in (0, pi) or (-pi, 0)
        auto integrand = [&](double phi, double xc) {
            const double dist = std::abs(xc);
            const double s_abs = std::sin(dist);
            // |tan(phi/2)| is tan(dist/2) near phi = 0 and cot(dist/2) near +-pi
            const bool near_zero = std::abs(phi) < 0.5 * pi;
            const double log_tan = near_zero ? std::log(std::tan(0.5 * dist)) : -std::log(std::tan(0.5 * dist));
            std::complex<double> a = std::polar(1.0 / (2.0 * std::sqrt(pi * s_abs)), mode.a * log_tan);
            if (mode.parity == Parity::odd) a *= sign > 0 ? -i : i;
            const double c = std::cos(phi), s = sign * s_abs;
            std::complex<double> f = a * std::exp(-i * k * (x * c + y * s));
            for (int j = 0; j < m; ++j) f *= -i * k * c;
            for (int j = 0; j < n; ++j) f *= -i * k * s;
            return f;
        };
        const double lo = half == 0 ? 0.0 : -pi;
        const double hi = lo + pi;
        const double re = ts.integrate([&](double p, double xc) { return integrand(p, xc).real(); }, lo, hi, 1e-14);
        const double im = ts.integrate([&](double p, double xc) { return integrand(p, xc).imag(); }, lo, hi, 1e-14);
        total += std::complex<double>(re, im);
    }
    return total;
}

// Reduced lattice that builds in about a second.
inline RunConfig small_config() {
    RunConfig c;
    c.grid_half_width = 24.0;
    c.grid_points = 384;
    c.grid_tile = 64;
    c.n_atoms = 6;
    c.t_final = 2e5;
    c.horizon = 2e5;
    c.disk_radius = 8.0;
    c.radial_bound = 22.0;
    c.min_spectrum_samples = 4096;
    return c;
}

namespace signals {

constexpr std::size_t kSamples = 1 << 15;
constexpr double kDt = 20.0;

inline std::vector<double> times(std::size_t n = kSamples, double dt = kDt) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = dt * static_cast<double>(i);
    return t;
}

inline double parseval_error(const PowerSpectrum& s) {
    return std::abs(s.total() - s.time_domain_power) / s.time_domain_power;
}

struct Tone {
    double f, amplitude, phase;
};

inline std::vector<double> tones(const std::vector<Tone>& list, std::size_t n = kSamples) {
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (const Tone& t : list) v[i] += t.amplitude * std::cos(two_pi * t.f * kDt * static_cast<double>(i) + t.phase);
    return v;
}

// AR(1) noise, optionally smoothed by a short moving average
inline std::vector<double> colored_noise(std::mt19937_64& gen, double rho, int smooth, std::size_t n = kSamples) {
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    double x = 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = x = rho * x + g(gen);
    if (smooth > 1) {
        std::vector<double> w(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (int k = 0; k < smooth && k <= static_cast<int>(i); ++k) w[i] += v[i - k] / smooth;
        v = w;
    }
    return v;
}

struct Case {
    std::vector<double> values;
    MotionLabel expected;
};

// 100 multitone signals (1 to 6 well separated tones) and 100 colored noises.
inline std::vector<Case> classifier_suite(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Case> out;
    for (int c = 0; c < 100; ++c) {
        const int count = 1 + c % 6;
        std::vector<Tone> list;
        while (static_cast<int>(list.size()) < count) {
            const double f = (0.02 + 0.4 * u(gen)) / kDt;
            bool close = false;
            for (const Tone& o : list) close = close || std::abs(o.f - f) * kDt * 4096 < 8;
            if (!close) list.push_back({f, 0.2 + u(gen), two_pi * u(gen)});
        }
        out.push_back({tones(list), MotionLabel::quasiperiodic});
    }
    for (int c = 0; c < 100; ++c) {
        const double rho = 0.99 * u(gen);
        out.push_back({colored_noise(gen, rho, 1 + c % 8), MotionLabel::chaotic});
    }
    return out;
}

}  // namespace signals

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("labyrinth_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
