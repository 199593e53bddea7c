#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "support.hpp"

using namespace labyrinth;
using testing::psi_oracle;
using testing::unit_mode;

TEST_CASE("psi at the origin is Gamma(1/4)/Gamma(3/4)") {
    BeamField beam(unit_mode());
    const cdouble v = beam.scalar_mode(0.0, 0.0);
    CHECK(v.real() == doctest::Approx(2.958675119).epsilon(1e-9));
    CHECK(std::abs(v.imag()) < 1e-12);
    CHECK(std::abs(psi_oracle(beam.mode(), 0, 0) - v) < 1e-10);
}

TEST_CASE("quadrature agrees with an independent tanh-sinh evaluation") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (auto [parity, a] : {std::pair{Parity::even, 0.0}, std::pair{Parity::odd, 0.0}, std::pair{Parity::even, 0.7}}) {
        ModeQuadrature q(unit_mode(parity, a));
        const double l1 = spectrum_l1_norm();
        const double k = q.mode().k_perp;
        for (int i = 0; i < 12; ++i) {
            const double x = u(gen), y = u(gen);
            const ModeJet j = q.jet(x, y, 2);
            CHECK(std::abs(j.value() - psi_oracle(q.mode(), x, y)) / l1 < 1e-10);
            CHECK(std::abs(j.dx() - psi_oracle(q.mode(), x, y, 1, 0)) / (l1 * k) < 1e-10);
            CHECK(std::abs(j.d[1][1] - psi_oracle(q.mode(), x, y, 1, 1)) / (l1 * k * k) < 1e-10);
        }
    }
}

TEST_CASE("Helmholtz residual and finite-difference gradient") {
    BeamField beam(unit_mode());
    const double k = beam.mode().k_perp;
    const double scale = spectrum_l1_norm();
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-15.0, 15.0);
    const double h = 1e-4;
    for (int i = 0; i < 40; ++i) {
        const double x = u(gen), y = u(gen);
        const ModeJet j = beam.jet(x, y, 2);
        const cdouble residual = j.d[2][0] + j.d[0][2] + k * k * j.value();
        CHECK(std::abs(residual) / (k * k * scale) < 1e-10);
        const cdouble fx = (beam.scalar_mode(x + h, y) - beam.scalar_mode(x - h, y)) / (2 * h);
        const cdouble fy = (beam.scalar_mode(x, y + h) - beam.scalar_mode(x, y - h)) / (2 * h);
        CHECK(std::abs(fx - j.dx()) / (k * scale) < 1e-6);
        CHECK(std::abs(fy - j.dy()) / (k * scale) < 1e-6);
    }
}

TEST_CASE("parity symmetry") {
    BeamField even(unit_mode(Parity::even));
    BeamField odd(unit_mode(Parity::odd));
    for (auto [x, y] : {std::pair{1.3, 0.4}, std::pair{-3.1, 2.2}, std::pair{5.5, -7.0}}) {
        CHECK(std::abs(even.scalar_mode(x, -y) - even.scalar_mode(x, y)) < 1e-11);
        CHECK(std::abs(odd.scalar_mode(x, -y) + odd.scalar_mode(x, y)) < 1e-11);
    }
    CHECK(std::abs(odd.scalar_mode(2.0, 0.0)) < 1e-11);
}

TEST_CASE("TE field is transverse and divergence free") {
    BeamField beam(unit_mode());
    const double h = 1e-4;
    for (auto [x, y, z] : {std::array{0.7, -0.3, 0.1}, std::array{-4.0, 2.5, 0.37}}) {
        const CVec3 e = beam.te_field(x, y, z, 0.0, true);
        CHECK(std::abs(e.z()) == 0.0);
        const cdouble div = (beam.te_field(x + h, y, z, 0, true).x() - beam.te_field(x - h, y, z, 0, true).x() +
                             beam.te_field(x, y + h, z, 0, true).y() - beam.te_field(x, y - h, z, 0, true).y()) /
                            (2 * h);
        CHECK(std::abs(div) / (beam.mode().k_perp * e.norm()) < 1e-6);
    }
}

TEST_CASE("mode validation") {
    FieldMode m = unit_mode();
    m.k_perp *= 1.01;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    CHECK_THROWS_AS(FieldMode::from_ratio(1.2, Parity::even, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(amplitude_for_irradiance(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("peak of the transverse gradient") {
    BeamField beam(unit_mode());
    CHECK(beam.peak_unit_gradient() == doctest::Approx(2.98706).epsilon(1e-5));
    CHECK(std::abs(beam.peak_location().x()) == doctest::Approx(1.2251).epsilon(1e-3));
    CHECK(std::abs(beam.peak_location().y()) < 1e-6);
}

TEST_CASE("biquintic grid reproduces the direct profile") {
    BeamField beam(unit_mode());
    auto grid = FieldGrid::build(beam.quadrature(), GridSpec{12.0, 257, 64});
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-11.9, 11.9);
    const double k = beam.mode().k_perp;
    const double scale = spectrum_l1_norm() * k;
    double worst = 0.0, worst_grad = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double x = u(gen), y = u(gen);
        const auto g = grid->interpolate(x, y);
        const auto d = coupling_profile_direct(beam.quadrature(), x, y);
        worst = std::max(worst, std::abs(g.q - d.q) / scale);
        worst_grad = std::max({worst_grad, std::abs(g.qx - d.qx) / (k * scale), std::abs(g.qy - d.qy) / (k * scale)});
    }
    MESSAGE("grid error " << worst << ", gradient " << worst_grad);
    CHECK(worst < 1e-7);
    CHECK(worst_grad < 1e-6);
    // nodes are exact
    const auto n = grid->interpolate(grid->coordinate(100), grid->coordinate(37));
    const auto d = coupling_profile_direct(beam.quadrature(), grid->coordinate(100), grid->coordinate(37));
    CHECK(std::abs(n.q - d.q) / scale < 1e-11);
}

TEST_CASE("coupling gradient identity grad g = (alpha + i beta) g") {
    SimUnits units;
    FieldMode m = unit_mode();
    m.amplitude = 1e4;
    auto beam = std::make_shared<const BeamField>(m);
    CouplingField field(beam, AtomSpecies::rubidium85());
    const Vec3 r(0.8, -1.7, 0.13);
    const CouplingSample s = field.sample_direct(r);
    REQUIRE(!s.degenerate);
    const double h = 1e-5;
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 dr = Vec3::Zero();
        dr[axis] = h;
        const cdouble fd = (field.sample_direct(r + dr).g - field.sample_direct(r - dr).g) / (2 * h);
        const cdouble model = cdouble(s.alpha[axis], s.beta[axis]) * s.g;
        CHECK(std::abs(fd - model) / (std::abs(s.g) * two_pi) < 1e-6);
    }
    CHECK(s.intensity == doctest::Approx(std::norm(s.g)));
    (void)units;
}
