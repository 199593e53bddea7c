#pragma once

// Adaptive Dormand-Prince 5(4) integration of a single atom with PI step
// control and the fourth-order continuous extension for uniform sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "labyrinth/force_model.hpp"
#include "labyrinth/state.hpp"

namespace labyrinth {

struct TrajectoryMeta {
    std::uint64_t atom_id = 0;
    std::uint64_t seed = 0;
    std::uint64_t params_hash = 0;
};

struct EscapeRecord {
    EscapeKind kind = EscapeKind::none;
    double time = 0.0;
    AtomState state;
};

struct IntegrationStats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t evaluations = 0;
};

/// Uniformly sampled record; samples[k].time == k * sample_interval.
struct Trajectory {
    double sample_interval = 0.0;
    double horizon = 0.0;  // requested final time
    std::vector<AtomState> samples;
    TrajectoryMeta meta;
    std::optional<EscapeRecord> escape;
    IntegrationStats stats;

    double duration() const { return samples.empty() ? 0.0 : samples.back().time; }
};

using EscapePredicate = std::function<EscapeKind(const AtomState&)>;

struct IntegratorOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double min_step = 1e-12;
    double max_speed = 0.5;  // wavelength * Gamma
    double initial_step = 0.0;  // 0: automatic
    double max_step = 0.0;      // 0: unlimited
    EscapePredicate escape;
};

class IntegrationError : public std::runtime_error {
public:
    enum class Kind { step_underflow, poisoned_state, speed_bound };
    IntegrationError(Kind kind, const std::string& what, AtomState state)
        : std::runtime_error(what), kind(kind), state(state) {}
    Kind kind;
    AtomState state;  // last good state
};

namespace detail {

using State6 = Eigen::Matrix<double, 6, 1>;

inline State6 pack(const AtomState& s) {
    State6 y;
    y << s.position, s.velocity;
    return y;
}
inline AtomState unpack(const State6& y, double t) { return {y.head<3>(), y.tail<3>(), t}; }

inline std::string describe(const AtomState& s) {
    std::ostringstream os;
    os.precision(17);
    os << "t=" << s.time << " r=(" << s.position.transpose() << ") v=(" << s.velocity.transpose() << ")";
    return os.str();
}

}  // namespace detail

/// Integrate d r/dt = v, d v/dt = accel(r, v) from `initial` (time 0) to
/// t_final, sampling every sample_interval. Stops early when the escape
/// predicate fires; the crossing time is located on the dense output.
template <class Accel>
Trajectory integrate_with(Accel&& accel, const AtomState& initial, double t_final, double sample_interval,
                          const IntegratorOptions& opt = {}) {
    using detail::State6;
    if (!(t_final > 0.0)) throw std::invalid_argument("integrate: t_final must be positive");
    if (!(sample_interval > 0.0) || sample_interval > t_final)
        throw std::invalid_argument("integrate: sample_interval must lie in (0, t_final]");
    if (!initial.finite()) throw std::invalid_argument("integrate: non-finite initial state");

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
    static constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
    static constexpr double fac_min = 1.0 / 10.0, fac_max = 5.0;  // h_new / h limits

    Trajectory traj;
    traj.sample_interval = sample_interval;
    traj.horizon = t_final;
    traj.samples.reserve(static_cast<std::size_t>(t_final / sample_interval) + 2);

    auto rhs = [&](const State6& y, double t) {
        State6 f;
        f.head<3>() = y.tail<3>();
        f.tail<3>() = accel(Vec3(y.head<3>()), Vec3(y.tail<3>()));
        ++traj.stats.evaluations;
        if (!f.allFinite())
            throw IntegrationError(IntegrationError::Kind::poisoned_state,
                                   "integrate: non-finite acceleration at " + detail::describe(detail::unpack(y, t)),
                                   detail::unpack(y, t));
        return f;
    };

    State6 y = detail::pack(initial);
    double t = 0.0;
    State6 k1 = rhs(y, t);
    traj.samples.push_back(detail::unpack(y, 0.0));

    auto weights = [&](const State6& y0) {
        return (opt.atol + opt.rtol * y0.cwiseAbs().array()).matrix();
    };

    double h = opt.initial_step;
    if (!(h > 0.0)) {
        // Hairer's starting step heuristic for order 5
        const State6 sk = weights(y);
        const double dnf = (k1.cwiseQuotient(sk)).squaredNorm() / 6.0;
        const double dny = (y.cwiseQuotient(sk)).squaredNorm() / 6.0;
        h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        h = std::min(h, t_final);
        const State6 k2 = rhs(y + h * k1, h);
        const double der2 = ((k2 - k1).cwiseQuotient(sk)).norm() / std::sqrt(6.0) / h;
        const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
        h = std::min({100.0 * h, h1, t_final});
    }
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

    double fac_old = 1e-4;
    std::uint64_t next_sample = 1;
    bool last = false;
    bool rejected_previous = false;

    while (true) {
        if (t + 1.01 * h >= t_final) {
            h = t_final - t;
            last = true;
        }
        if (h < opt.min_step)
            throw IntegrationError(IntegrationError::Kind::step_underflow,
                                   "integrate: step size underflow (stiff or discontinuous force) at " +
                                       detail::describe(detail::unpack(y, t)),
                                   detail::unpack(y, t));

        const State6 k2 = rhs(y + h * a21 * k1, t + c2 * h);
        const State6 k3 = rhs(y + h * (a31 * k1 + a32 * k2), t + c3 * h);
        const State6 k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3), t + c4 * h);
        const State6 k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), t + c5 * h);
        const State6 k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), t + h);
        const State6 y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const State6 k7 = rhs(y1, t + h);
        const State6 err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const State6 sk = (opt.atol + opt.rtol * y.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
        const double err = std::sqrt(err_vec.cwiseQuotient(sk).squaredNorm() / 6.0);
        if (!std::isfinite(err))
            throw IntegrationError(IntegrationError::Kind::poisoned_state,
                                   "integrate: non-finite error estimate at " + detail::describe(detail::unpack(y, t)),
                                   detail::unpack(y, t));

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            ++traj.stats.accepted;
            // dense output coefficients
            const State6 r1 = y;
            const State6 r2 = y1 - y;
            const State6 r3 = h * k1 - r2;
            const State6 r4 = r2 - h * k7 - r3;
            const State6 r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            auto dense = [&](double theta) {
                const double theta1 = 1.0 - theta;
                return State6(r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5))));
            };
            const double t1 = last ? t_final : t + h;

            double stop_time = t1;
            std::optional<EscapeRecord> escape;
            if (opt.escape) {
                const EscapeKind kind = opt.escape(detail::unpack(y1, t1));
                if (kind != EscapeKind::none) {
                    double lo = 0.0, hi = 1.0;
                    EscapeKind found = kind;
                    for (int it = 0; it < 60; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        const EscapeKind k = opt.escape(detail::unpack(dense(mid), t + mid * h));
                        if (k != EscapeKind::none) {
                            hi = mid;
                            found = k;
                        } else {
                            lo = mid;
                        }
                    }
                    stop_time = t + hi * h;
                    escape = EscapeRecord{found, stop_time, detail::unpack(dense(hi), stop_time)};
                }
            }

            while (true) {
                const double ts = static_cast<double>(next_sample) * sample_interval;
                if (ts > stop_time * (1.0 + 1e-15)) break;
                const double theta = std::min(1.0, (ts - t) / h);
                traj.samples.push_back(detail::unpack(theta >= 1.0 ? y1 : dense(theta), ts));
                ++next_sample;
            }
            if (escape) {
                traj.escape = escape;
                return traj;
            }

            if (y1.tail<3>().norm() > opt.max_speed)
                throw IntegrationError(IntegrationError::Kind::speed_bound,
                                       "integrate: speed bound exceeded at " + detail::describe(detail::unpack(y1, t1)),
                                       detail::unpack(y1, t1));
            y = y1;
            k1 = k7;
            t = t1;
            if (last) return traj;

            double fac = fac11 / std::pow(fac_old, beta);
            fac = std::clamp(fac / safe, 1.0 / fac_max, 1.0 / fac_min);
            fac_old = std::max(err, 1e-4);
            double h_new = h / fac;
            if (rejected_previous) h_new = std::min(h_new, h);
            if (opt.max_step > 0.0) h_new = std::min(h_new, opt.max_step);
            rejected_previous = false;
            h = h_new;
        } else {
            ++traj.stats.rejected;
            last = false;
            rejected_previous = true;
            h /= std::min(fac_max, fac11 / safe);
        }
    }
}

/// Integrate one atom through the environment.
Trajectory integrate(const AtomState& initial, const Environment& env, double t_final, double sample_interval,
                     const IntegratorOptions& options = {});

/// Resample onto a coarser uniform grid. Integer ratios decimate exactly;
/// otherwise positions use cubic Hermite interpolation with the sampled
/// velocities and velocities are interpolated linearly. The first sample is
/// kept; the last is kept when the duration is a multiple of new_interval.
Trajectory resample(const Trajectory& trajectory, double new_interval);

}  // namespace labyrinth
