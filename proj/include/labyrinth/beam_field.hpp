#pragma once

#include <array>
#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "labyrinth/species.hpp"
#include "labyrinth/units.hpp"

namespace labyrinth {

using cdouble = std::complex<double>;

enum class Parity { even, odd };

/// Label of one propagation-invariant parabolic-cylinder mode. Lengths are
/// in laser wavelengths and frequencies in units of Gamma. `amplitude`
/// multiplies the unit scalar mode; the TE electric field is
/// E = curl(e_z Psi), so with positions in wavelengths E comes out in V/m
/// when amplitude is given in V/m * wavelength.
struct FieldMode {
    Parity parity = Parity::even;
    double a = 0.0;
    double k_perp = 0.0;
    double k_z = 0.0;
    double omega = 0.0;
    double amplitude = 1.0;
    double wavelength = 1.0;
    double light_speed = 1.0;  // c in simulation units, used by the dispersion check

    /// Mode with k_z = kz_ratio * omega / c and omega = 2 pi c / wavelength.
    static FieldMode from_ratio(double kz_ratio, Parity parity, double a, double amplitude,
                                double light_speed, double wavelength = 1.0);

    /// Throws std::invalid_argument unless the dispersion relation holds to
    /// 1e-12, k_perp > 0 and amplitude >= 0.
    void validate() const;
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_tolerance(achieved) {}
    double achieved_tolerance;
};

/// Partial derivatives d^m/dx^m d^n/dy^n psi for m + n <= 3, stored as d[m][n].
struct ModeJet {
    std::array<std::array<cdouble, 4>, 4> d{};
    cdouble value() const { return d[0][0]; }
    cdouble dx() const { return d[1][0]; }
    cdouble dy() const { return d[0][1]; }
};

/// Angular spectrum weight of the mode at azimuth phi, with the |sin phi|
/// convention for the square root.
cdouble angular_spectrum(const FieldMode& mode, double phi);

struct QuadratureOptions {
    double tolerance = 1e-12;  // relative to the L1 norm of the spectrum times k_perp^order
    int max_panels = 1 << 12;
    int geometric_levels = 40;  // graded panels at the endpoints when a != 0
};

/// Quadrature nodes over (0, pi). The substitutions phi = t^2 and
/// phi = pi - t^2 absorb the |sin phi|^{-1/2} endpoint singularities; the
/// (-pi, 0) half is folded in through the parity of the spectrum.
struct SpectrumRule {
    std::vector<double> cos_phi;
    std::vector<double> sin_phi;
    std::vector<cdouble> weight;  // GL weight * jacobian * spectrum
    std::size_t size() const { return weight.size(); }
};

SpectrumRule make_spectrum_rule(const FieldMode& mode, int panels, int geometric_levels);

/// Panel count that resolves the plane-wave phase out to radius r.
int panels_for_radius(double k_perp, double r);

/// L1 norm of the angular spectrum, the natural scale of |psi|.
double spectrum_l1_norm();

/// Unit-amplitude evaluator of psi and its derivatives by quadrature of the
/// angular spectrum. Thread-safe and immutable.
class ModeQuadrature {
public:
    explicit ModeQuadrature(FieldMode mode, QuadratureOptions options = {});

    /// Adaptive evaluation: panels are doubled until two successive rules
    /// agree to the tolerance. Throws QuadratureError otherwise.
    ModeJet jet(double x, double y, int order = 1) const;

    /// Evaluation with a fixed rule; smooth in (x, y), used by grids.
    ModeJet jet_fixed(const SpectrumRule& rule, double x, double y, int order) const;

    const FieldMode& mode() const { return mode_; }
    const QuadratureOptions& options() const { return options_; }

private:
    FieldMode mode_;
    QuadratureOptions options_;
};

/// A beam of given mode with its irradiance normalization.
class BeamField {
public:
    explicit BeamField(FieldMode mode, QuadratureOptions options = {});

    const FieldMode& mode() const { return quad_.mode(); }
    const ModeQuadrature& quadrature() const { return quad_; }

    /// psi(x, y), scaled by the mode amplitude.
    cdouble scalar_mode(double x, double y) const;
    /// (d psi/dx, d psi/dy), scaled by the mode amplitude.
    Eigen::Vector2cd scalar_mode_gradient(double x, double y) const;
    /// Full derivative jet, scaled by the mode amplitude.
    ModeJet jet(double x, double y, int order) const;

    /// TE electric field E = curl(e_z Psi) of the traveling mode, or of the
    /// counter-propagating pair when `standing` is set. Time dependence
    /// exp(-i omega t) is included.
    CVec3 te_field(double x, double y, double z, double t, bool standing) const;

    /// Location and value of the maximum of |grad psi| for unit amplitude.
    Eigen::Vector2d peak_location() const { return peak_location_; }
    double peak_unit_gradient() const { return peak_unit_gradient_; }

private:
    ModeQuadrature quad_;
    Eigen::Vector2d peak_location_{0.0, 0.0};
    double peak_unit_gradient_ = 0.0;
};

/// Amplitude such that one traveling beam has peak time-averaged intensity
/// I = |E|^2 / (2 Z0).
double amplitude_for_irradiance(double irradiance_w_m2, double peak_unit_gradient);

/// Locate the maximum of |grad psi|^2 near the beam axis (coarse scan, then
/// Newton on the gradient of |grad psi|^2).
std::pair<Eigen::Vector2d, double> find_gradient_peak(const ModeQuadrature& quad);

/// Complex coupling g and its logarithmic gradient, grad g = (alpha + i beta) g.
struct CouplingSample {
    cdouble g{0.0, 0.0};
    Vec3 alpha = Vec3::Zero();
    Vec3 beta = Vec3::Zero();
    double intensity = 0.0;  // |g|^2
    bool degenerate = true;
};

struct GridSpec {
    double half_width = 82.0;  // wavelengths
    int points = 1024;
    int tile = 128;
};

/// Tabulation of the unit transverse coupling profile q = dpsi/dy - i dpsi/dx
/// (the sigma+ projection of curl(e_z psi)) with the nodal derivatives
/// d^a/dx^a d^b/dy^b q, a, b <= 2, for biquintic Hermite interpolation. The
/// interpolant is C2 and its gradient is exact for the interpolated profile.
class FieldGrid {
public:
    struct Node {
        std::array<cdouble, 9> d;  // d[3 * a + b] = d^a/dx^a d^b/dy^b q
    };
    struct Sample {
        cdouble q, qx, qy;
    };

    static std::shared_ptr<const FieldGrid> build(const ModeQuadrature& quad, GridSpec spec);

    bool contains(double x, double y) const {
        return x >= -spec_.half_width && x <= spec_.half_width && y >= -spec_.half_width &&
               y <= spec_.half_width;
    }
    Sample interpolate(double x, double y) const;

    const GridSpec& spec() const { return spec_; }
    double spacing() const { return spacing_; }
    double coordinate(int i) const { return -spec_.half_width + spacing_ * i; }
    const Node& node(int ix, int iy) const { return nodes_[static_cast<std::size_t>(iy) * spec_.points + ix]; }

private:
    GridSpec spec_;
    double spacing_ = 0.0;
    std::vector<Node> nodes_;
};

/// Transverse coupling profile q and derivatives evaluated by quadrature.
FieldGrid::Sample coupling_profile_direct(const ModeQuadrature& quad, double x, double y);

/// Coupling of a two-level atom to the standing-wave lattice:
/// g = mu E_sigma / (2 hbar), E_sigma = E_x + i E_y, expressed in units of Gamma.
class CouplingField {
public:
    CouplingField(std::shared_ptr<const BeamField> beam, const AtomSpecies& species,
                  std::shared_ptr<const FieldGrid> grid = nullptr, double degeneracy = 1e-12);

    CouplingSample sample(const Vec3& r) const;
    CouplingSample sample_direct(const Vec3& r) const;

    /// Reference |g| used for the degeneracy threshold.
    double peak_coupling() const { return peak_coupling_; }
    double scale() const { return scale_; }
    const BeamField& beam() const { return *beam_; }
    const FieldGrid* grid() const { return grid_.get(); }

private:
    CouplingSample assemble(const FieldGrid::Sample& p, double z) const;

    std::shared_ptr<const BeamField> beam_;
    std::shared_ptr<const FieldGrid> grid_;
    double scale_ = 0.0;
    double peak_coupling_ = 0.0;
    double degeneracy_ = 1e-12;
};

/// Direct single-point coupling; builds no grid.
CouplingSample coupling(const BeamField& beam, const AtomSpecies& species, const Vec3& position,
                        double degeneracy = 1e-12);

}  // namespace labyrinth
