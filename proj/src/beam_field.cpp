#include "labyrinth/beam_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "gauss_legendre.hpp"

namespace labyrinth {

namespace {

constexpr double kHalfRange = 1.2533141373155002512;  // sqrt(pi / 2)

double parity_sign(Parity p) { return p == Parity::even ? 1.0 : -1.0; }

// Spectrum on (0, pi) written in terms of the substitution variable t so that
// sin(phi) and tan(phi/2) never suffer cancellation near the endpoints.
// branch 0: phi = t^2, branch 1: phi = pi - t^2.
cdouble spectrum_times_jacobian(const FieldMode& mode, double t, int branch) {
    const double t2 = t * t;
    const double sin_phi = std::sin(t2);
    double log_tan = std::log(std::tan(0.5 * t2));
    if (branch == 1) log_tan = -log_tan;
    // 2t / (2 sqrt(pi sin t^2)), smooth as t -> 0.
    const double magnitude = t / std::sqrt(pi * sin_phi);
    cdouble value = mode.a == 0.0 ? cdouble(magnitude, 0.0)
                                  : std::polar(magnitude, mode.a * log_tan);
    if (mode.parity == Parity::odd) value *= cdouble(0.0, -1.0);
    return value;
}

void append_panel(const FieldMode& mode, double lo, double hi, int branch, SpectrumRule& rule) {
    const auto& gl = detail::gauss_legendre16();
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double t = mid + half * gl.nodes[k];
        const double t2 = t * t;
        const double phi_c = std::cos(t2);
        const double phi_s = std::sin(t2);
        rule.cos_phi.push_back(branch == 0 ? phi_c : -phi_c);
        rule.sin_phi.push_back(phi_s);
        rule.weight.push_back(half * gl.weights[k] * spectrum_times_jacobian(mode, t, branch));
    }
}

}  // namespace

FieldMode FieldMode::from_ratio(double kz_ratio, Parity parity, double a, double amplitude,
                                double light_speed, double wavelength) {
    if (!(kz_ratio > 0.0 && kz_ratio < 1.0))
        throw std::invalid_argument("FieldMode: k_z/k must lie in (0, 1)");
    FieldMode m;
    m.parity = parity;
    m.a = a;
    m.wavelength = wavelength;
    m.light_speed = light_speed;
    m.amplitude = amplitude;
    const double k = two_pi / wavelength;
    m.omega = light_speed * k;
    m.k_z = kz_ratio * k;
    m.k_perp = k * std::sqrt((1.0 - kz_ratio) * (1.0 + kz_ratio));
    m.validate();
    return m;
}

void FieldMode::validate() const {
    if (!(k_perp > 0.0)) throw std::invalid_argument("FieldMode: k_perp must be positive");
    if (!(amplitude >= 0.0)) throw std::invalid_argument("FieldMode: amplitude must be non-negative");
    const double expected = light_speed * std::hypot(k_z, k_perp);
    if (!(std::abs(omega - expected) <= 1e-12 * std::abs(expected)))
        throw std::invalid_argument("FieldMode: omega violates omega = c sqrt(k_z^2 + k_perp^2)");
}

cdouble angular_spectrum(const FieldMode& mode, double phi) {
    const double s = std::sin(phi);
    const double magnitude = 1.0 / (2.0 * std::sqrt(pi * std::abs(s)));
    cdouble value = mode.a == 0.0
                        ? cdouble(magnitude, 0.0)
                        : std::polar(magnitude, mode.a * std::log(std::abs(std::tan(0.5 * phi))));
    if (mode.parity == Parity::odd) value *= (phi < 0.0 ? cdouble(0.0, 1.0) : cdouble(0.0, -1.0));
    return value;
}

double spectrum_l1_norm() {
    // (1 / (2 sqrt(pi))) * integral |sin phi|^{-1/2} over (-pi, pi)
    return std::tgamma(0.25) / std::tgamma(0.75);
}

int panels_for_radius(double k_perp, double r) {
    return static_cast<int>(std::ceil(k_perp * r * pi / 10.0)) + 2;
}

SpectrumRule make_spectrum_rule(const FieldMode& mode, int panels, int geometric_levels) {
    SpectrumRule rule;
    const double width = kHalfRange / panels;
    const std::size_t expected = 2u * 16u * static_cast<std::size_t>(panels + (mode.a != 0.0 ? geometric_levels : 0));
    rule.cos_phi.reserve(expected);
    rule.sin_phi.reserve(expected);
    rule.weight.reserve(expected);
    for (int branch = 0; branch < 2; ++branch) {
        int first = 0;
        if (mode.a != 0.0) {
            // log-periodic oscillation of the phase near t = 0
            double hi = width;
            for (int level = 0; level < geometric_levels; ++level) {
                append_panel(mode, 0.5 * hi, hi, branch, rule);
                hi *= 0.5;
            }
            append_panel(mode, 0.0, hi, branch, rule);
            first = 1;
        }
        for (int p = first; p < panels; ++p) append_panel(mode, p * width, (p + 1) * width, branch, rule);
    }
    return rule;
}

ModeQuadrature::ModeQuadrature(FieldMode mode, QuadratureOptions options)
    : mode_(mode), options_(options) {
    mode_.validate();
}

ModeJet ModeQuadrature::jet_fixed(const SpectrumRule& rule, double x, double y, int order) const {
    const double k = mode_.k_perp;
    const double parity = parity_sign(mode_.parity);
    std::array<std::array<cdouble, 4>, 4> acc{};
    const cdouble minus_ik(0.0, -k);
    for (std::size_t j = 0; j < rule.size(); ++j) {
        const double c = rule.cos_phi[j];
        const double s = rule.sin_phi[j];
        const cdouble e = rule.weight[j] * std::polar(1.0, -k * x * c);
        const double ky = k * y * s;
        const double cy = 2.0 * std::cos(ky);
        const double sy = 2.0 * std::sin(ky);
        // (phi, -phi) pair: exp(-iky s) + sign * exp(iky s)
        const cdouble sym = cdouble(cy, 0.0);
        const cdouble anti = cdouble(0.0, -sy);
        double cm = 1.0;
        for (int m = 0; m <= order; ++m) {
            double sn = 1.0;
            for (int n = 0; m + n <= order; ++n) {
                const bool even_in_s = (n % 2 == 0) == (parity > 0.0);
                acc[m][n] += e * (cm * sn) * (even_in_s ? sym : anti);
                sn *= s;
            }
            cm *= c;
        }
    }
    ModeJet jet;
    cdouble fm = 1.0;
    for (int m = 0; m <= order; ++m) {
        cdouble fmn = fm;
        for (int n = 0; m + n <= order; ++n) {
            jet.d[m][n] = acc[m][n] * fmn;
            fmn *= minus_ik;
        }
        fm *= minus_ik;
    }
    return jet;
}

ModeJet ModeQuadrature::jet(double x, double y, int order) const {
    const double k = mode_.k_perp;
    const double l1 = spectrum_l1_norm();
    int panels = panels_for_radius(k, std::hypot(x, y));
    ModeJet previous = jet_fixed(make_spectrum_rule(mode_, panels, options_.geometric_levels), x, y, order);
    double achieved = 0.0;
    while (2 * panels <= options_.max_panels) {
        panels *= 2;
        ModeJet current = jet_fixed(make_spectrum_rule(mode_, panels, options_.geometric_levels), x, y, order);
        achieved = 0.0;
        for (int m = 0; m <= order; ++m) {
            for (int n = 0; m + n <= order; ++n)
                achieved = std::max(achieved, std::abs(current.d[m][n] - previous.d[m][n]) /
                                                  (l1 * std::pow(k, m + n)));
        }
        if (achieved <= options_.tolerance) return current;
        previous = current;
    }
    std::ostringstream os;
    os << "angular spectrum quadrature did not converge at (" << x << ", " << y
       << "); achieved relative tolerance " << achieved;
    throw QuadratureError(os.str(), achieved);
}

std::pair<Eigen::Vector2d, double> find_gradient_peak(const ModeQuadrature& quad) {
    const double k = quad.mode().k_perp;
    const double period = two_pi / k;
    const double radius = 3.0 * period;
    const double step = period / 16.0;
    const SpectrumRule rule = make_spectrum_rule(quad.mode(), 2 * panels_for_radius(k, 1.5 * radius),
                                                 quad.options().geometric_levels);
    auto gradient_norm2 = [](const ModeJet& j) { return std::norm(j.dx()) + std::norm(j.dy()); };

    Eigen::Vector2d best(0.0, 0.0);
    double best_value = -1.0;
    const int n = static_cast<int>(std::ceil(radius / step));
    for (int iy = -n; iy <= n; ++iy) {
        for (int ix = -n; ix <= n; ++ix) {
            const double x = ix * step, y = iy * step;
            if (x * x + y * y > radius * radius) continue;
            const double v = gradient_norm2(quad.jet_fixed(rule, x, y, 1));
            if (v > best_value + 1e-14 * std::abs(best_value)) {
                best_value = v;
                best = {x, y};
            }
        }
    }

    // Newton on grad |grad psi|^2 = 0.
    for (int iter = 0; iter < 50; ++iter) {
        const ModeJet j = quad.jet_fixed(rule, best.x(), best.y(), 3);
        const auto& d = j.d;
        const cdouble px = d[1][0], py = d[0][1];
        const Eigen::Vector2cd gpx(d[2][0], d[1][1]), gpy(d[1][1], d[0][2]);
        Eigen::Matrix2cd hpx, hpy;
        hpx << d[3][0], d[2][1], d[2][1], d[1][2];
        hpy << d[2][1], d[1][2], d[1][2], d[0][3];
        Eigen::Vector2d f;
        Eigen::Matrix2d h;
        for (int a = 0; a < 2; ++a) {
            f(a) = std::real(std::conj(px) * gpx(a) + std::conj(py) * gpy(a));
            for (int b = 0; b < 2; ++b)
                h(a, b) = std::real(std::conj(gpx(a)) * gpx(b) + std::conj(px) * hpx(a, b) +
                                    std::conj(gpy(a)) * gpy(b) + std::conj(py) * hpy(a, b));
        }
        const Eigen::Vector2d delta = -h.partialPivLu().solve(f);
        if (!delta.allFinite() || delta.norm() > step) break;
        best += delta;
        if (delta.norm() < 1e-14 * period) break;
    }
    const double value = std::sqrt(gradient_norm2(quad.jet_fixed(rule, best.x(), best.y(), 1)));
    return {best, value};
}

BeamField::BeamField(FieldMode mode, QuadratureOptions options) : quad_(mode, options) {
    std::tie(peak_location_, peak_unit_gradient_) = find_gradient_peak(quad_);
}

ModeJet BeamField::jet(double x, double y, int order) const {
    ModeJet j = quad_.jet(x, y, order);
    for (auto& row : j.d)
        for (auto& v : row) v *= mode().amplitude;
    return j;
}

cdouble BeamField::scalar_mode(double x, double y) const { return jet(x, y, 0).value(); }

Eigen::Vector2cd BeamField::scalar_mode_gradient(double x, double y) const {
    const ModeJet j = jet(x, y, 1);
    return {j.dx(), j.dy()};
}

CVec3 BeamField::te_field(double x, double y, double z, double t, bool standing) const {
    const ModeJet j = jet(x, y, 1);
    const FieldMode& m = mode();
    const cdouble temporal = std::polar(1.0, -m.omega * t);
    const cdouble axial = standing ? cdouble(2.0 * std::cos(m.k_z * z), 0.0) : std::polar(1.0, m.k_z * z);
    const cdouble f = axial * temporal;
    return CVec3(j.dy() * f, -j.dx() * f, cdouble(0.0, 0.0));
}

double amplitude_for_irradiance(double irradiance_w_m2, double peak_unit_gradient) {
    if (irradiance_w_m2 < 0.0) throw std::invalid_argument("irradiance must be non-negative");
    const double e_peak = std::sqrt(2.0 * vacuum_impedance() * irradiance_w_m2);
    return e_peak / peak_unit_gradient;
}

FieldGrid::Sample coupling_profile_direct(const ModeQuadrature& quad, double x, double y) {
    const ModeJet j = quad.jet(x, y, 2);
    const cdouble i(0.0, 1.0);
    return {j.d[0][1] - i * j.d[1][0], j.d[1][1] - i * j.d[2][0], j.d[0][2] - i * j.d[1][1]};
}

std::shared_ptr<const FieldGrid> FieldGrid::build(const ModeQuadrature& quad, GridSpec spec) {
    if (spec.points < 4 || !(spec.half_width > 0.0) || spec.tile < 1)
        throw std::invalid_argument("FieldGrid: need >= 4 points, positive half width and tile");
    auto grid = std::make_shared<FieldGrid>();
    grid->spec_ = spec;
    grid->spacing_ = 2.0 * spec.half_width / (spec.points - 1);
    grid->nodes_.resize(static_cast<std::size_t>(spec.points) * spec.points);

    const FieldMode& mode = quad.mode();
    const double k = mode.k_perp;
    const bool even = mode.parity == Parity::even;
    const cdouble minus_ik(0.0, -k);
    const cdouble i(0.0, 1.0);

    // d^a/dx^a d^b/dy^b q = M(a, b+1) - i M(a+1, b), M(m, n) = d^m/dx^m d^n/dy^n psi
    std::vector<std::array<int, 2>> moments;
    auto moment_index = [&](int m, int n) {
        for (std::size_t q = 0; q < moments.size(); ++q)
            if (moments[q][0] == m && moments[q][1] == n) return q;
        moments.push_back({m, n});
        return moments.size() - 1;
    };
    std::array<std::array<std::size_t, 2>, 9> recipe{};
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; b <= 2; ++b) recipe[3 * a + b] = {moment_index(a, b + 1), moment_index(a + 1, b)};

    std::vector<Eigen::MatrixXcd> result(moments.size());
    for (int ty = 0; ty < spec.points; ty += spec.tile) {
        const int ny = std::min(spec.tile, spec.points - ty);
        for (int tx = 0; tx < spec.points; tx += spec.tile) {
            const int nx = std::min(spec.tile, spec.points - tx);
            double r_max = 0.0;
            for (int cx : {tx, tx + nx - 1})
                for (int cy : {ty, ty + ny - 1})
                    r_max = std::max(r_max, std::hypot(grid->coordinate(cx), grid->coordinate(cy)));
            const SpectrumRule rule =
                make_spectrum_rule(mode, panels_for_radius(k, r_max) + 2, quad.options().geometric_levels);
            const Eigen::Index m_nodes = static_cast<Eigen::Index>(rule.size());

            Eigen::MatrixXd ycos(m_nodes, ny), ysin(m_nodes, ny);
            for (int c = 0; c < ny; ++c) {
                const double y = grid->coordinate(ty + c);
                for (Eigen::Index j = 0; j < m_nodes; ++j) {
                    const double arg = k * y * rule.sin_phi[j];
                    ycos(j, c) = 2.0 * std::cos(arg);
                    ysin(j, c) = 2.0 * std::sin(arg);
                }
            }
            Eigen::MatrixXcd xbase(nx, m_nodes);
            for (int r = 0; r < nx; ++r) {
                const double x = grid->coordinate(tx + r);
                for (Eigen::Index j = 0; j < m_nodes; ++j)
                    xbase(r, j) = rule.weight[j] * std::polar(1.0, -k * x * rule.cos_phi[j]);
            }

            Eigen::MatrixXd xr(nx, m_nodes), xi(nx, m_nodes);
            for (std::size_t q = 0; q < moments.size(); ++q) {
                const int m = moments[q][0], n = moments[q][1];
                for (Eigen::Index j = 0; j < m_nodes; ++j) {
                    const double scale = std::pow(rule.cos_phi[j], m) * std::pow(rule.sin_phi[j], n);
                    for (int r = 0; r < nx; ++r) {
                        const cdouble v = xbase(r, j) * scale;
                        xr(r, j) = v.real();
                        xi(r, j) = v.imag();
                    }
                }
                // folding the (phi, -phi) pair leaves 2 cos or -2i sin in y
                const bool cos_type = (n % 2 == 0) == even;
                const Eigen::MatrixXd& ymat = cos_type ? ycos : ysin;
                const Eigen::MatrixXd re = xr * ymat;
                const Eigen::MatrixXd im = xi * ymat;
                cdouble factor = std::pow(minus_ik, m + n);
                if (!cos_type) factor *= cdouble(0.0, -1.0);
                result[q] = (re.cast<cdouble>() + i * im.cast<cdouble>()) * factor;
            }
            for (int c = 0; c < ny; ++c) {
                for (int r = 0; r < nx; ++r) {
                    Node& node = grid->nodes_[static_cast<std::size_t>(ty + c) * spec.points + (tx + r)];
                    for (std::size_t d = 0; d < 9; ++d)
                        node.d[d] = result[recipe[d][0]](r, c) - i * result[recipe[d][1]](r, c);
                }
            }
        }
    }
    return grid;
}

namespace {

// Quintic Hermite basis on [0, 1]: index 3 * end + order, where end 0/1 is
// the left/right node and order 0..2 the matched derivative.
void quintic_basis(double u, double b[6], double db[6]) {
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    b[0] = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
    b[1] = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
    b[2] = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
    b[3] = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
    b[4] = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
    b[5] = 0.5 * (u3 - 2.0 * u4 + u5);
    db[0] = -30.0 * u2 + 60.0 * u3 - 30.0 * u4;
    db[1] = 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4;
    db[2] = 0.5 * (2.0 * u - 9.0 * u2 + 12.0 * u3 - 5.0 * u4);
    db[3] = 30.0 * u2 - 60.0 * u3 + 30.0 * u4;
    db[4] = -12.0 * u2 + 28.0 * u3 - 15.0 * u4;
    db[5] = 0.5 * (3.0 * u2 - 8.0 * u3 + 5.0 * u4);
}

}  // namespace

FieldGrid::Sample FieldGrid::interpolate(double x, double y) const {
    const double h = spacing_;
    const int last = spec_.points - 2;
    const double fx = (x + spec_.half_width) / h;
    const double fy = (y + spec_.half_width) / h;
    const int ix = std::clamp(static_cast<int>(std::floor(fx)), 0, last);
    const int iy = std::clamp(static_cast<int>(std::floor(fy)), 0, last);
    const double u = fx - ix;
    const double v = fy - iy;

    double bu[6], dbu[6], bv[6], dbv[6];
    quintic_basis(u, bu, dbu);
    quintic_basis(v, bv, dbv);
    const double hp[3] = {1.0, h, h * h};

    cdouble val(0.0), du(0.0), dv(0.0);
    for (int eb = 0; eb < 2; ++eb) {
        for (int ea = 0; ea < 2; ++ea) {
            const Node& n = node(ix + ea, iy + eb);
            for (int a = 0; a < 3; ++a) {
                const double wu = bu[3 * ea + a] * hp[a];
                const double wdu = dbu[3 * ea + a] * hp[a];
                for (int b = 0; b < 3; ++b) {
                    const cdouble f = n.d[3 * a + b] * hp[b];
                    const double wv = bv[3 * eb + b];
                    val += f * (wu * wv);
                    du += f * (wdu * wv);
                    dv += f * (wu * dbv[3 * eb + b]);
                }
            }
        }
    }
    return {val, du / h, dv / h};
}

CouplingField::CouplingField(std::shared_ptr<const BeamField> beam, const AtomSpecies& species,
                             std::shared_ptr<const FieldGrid> grid, double degeneracy)
    : beam_(std::move(beam)), grid_(std::move(grid)), degeneracy_(degeneracy) {
    // g = mu |E_sigma| / (2 hbar); the standing pair contributes 2 cos(k_z z),
    // so g = (mu A / (hbar Gamma)) cos(k_z z) q_unit in units of Gamma.
    scale_ = species.dipole_moment * beam_->mode().amplitude / (si::hbar * species.gamma_per_s);
    peak_coupling_ = scale_ * beam_->peak_unit_gradient();
}

CouplingSample CouplingField::assemble(const FieldGrid::Sample& p, double z) const {
    CouplingSample s;
    const double kz = beam_->mode().k_z;
    const double cz = std::cos(kz * z);
    const double sz = std::sin(kz * z);
    s.g = scale_ * cz * p.q;
    s.intensity = std::norm(s.g);
    s.degenerate = !(std::abs(s.g) > degeneracy_ * peak_coupling_);
    if (s.degenerate) return s;
    const cdouble lx = p.qx / p.q;
    const cdouble ly = p.qy / p.q;
    const double lz = -kz * sz / cz;
    s.alpha = Vec3(lx.real(), ly.real(), lz);
    s.beta = Vec3(lx.imag(), ly.imag(), 0.0);
    return s;
}

CouplingSample CouplingField::sample(const Vec3& r) const {
    if (grid_ && grid_->contains(r.x(), r.y())) return assemble(grid_->interpolate(r.x(), r.y()), r.z());
    return sample_direct(r);
}

CouplingSample CouplingField::sample_direct(const Vec3& r) const {
    return assemble(coupling_profile_direct(beam_->quadrature(), r.x(), r.y()), r.z());
}

CouplingSample coupling(const BeamField& beam, const AtomSpecies& species, const Vec3& position,
                        double degeneracy) {
    auto shared = std::make_shared<const BeamField>(beam);
    return CouplingField(shared, species, nullptr, degeneracy).sample_direct(position);
}

}  // namespace labyrinth
