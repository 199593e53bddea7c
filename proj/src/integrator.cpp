#include "labyrinth/integrator.hpp"

#include <cmath>

namespace labyrinth {

Trajectory integrate(const AtomState& initial, const Environment& env, double t_final, double sample_interval,
                     const IntegratorOptions& options) {
    return integrate_with([&env](const Vec3& r, const Vec3& v) { return env.acceleration(r, v); }, initial,
                          t_final, sample_interval, options);
}

Trajectory resample(const Trajectory& trajectory, double new_interval) {
    const double old_interval = trajectory.sample_interval;
    if (!(new_interval >= old_interval * (1.0 - 1e-12)))
        throw std::invalid_argument("resample: new interval must not be shorter than the original");
    if (trajectory.samples.empty()) throw std::invalid_argument("resample: empty trajectory");

    Trajectory out;
    out.sample_interval = new_interval;
    out.horizon = trajectory.horizon;
    out.meta = trajectory.meta;
    out.escape = trajectory.escape;
    out.stats = trajectory.stats;

    const auto& in = trajectory.samples;
    const double ratio = new_interval / old_interval;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) <= 1e-9 * ratio) {
        const auto stride = static_cast<std::size_t>(rounded);
        for (std::size_t i = 0; i < in.size(); i += stride) {
            AtomState s = in[i];
            s.time = static_cast<double>(i / stride) * new_interval;
            out.samples.push_back(s);
        }
        return out;
    }

    const double duration = trajectory.duration();
    const auto count = static_cast<std::size_t>(std::floor(duration / new_interval * (1.0 + 1e-12))) + 1;
    out.samples.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * new_interval;
        const double f = t / old_interval;
        std::size_t i = static_cast<std::size_t>(std::floor(f));
        if (i + 1 >= in.size()) i = in.size() >= 2 ? in.size() - 2 : 0;
        if (in.size() == 1) {
            out.samples.push_back({in[0].position, in[0].velocity, t});
            continue;
        }
        const double s = std::clamp(f - static_cast<double>(i), 0.0, 1.0);
        const AtomState& a = in[i];
        const AtomState& b = in[i + 1];
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        AtomState r;
        r.time = t;
        r.position = h00 * a.position + h10 * old_interval * a.velocity + h01 * b.position +
                     h11 * old_interval * b.velocity;
        r.velocity = (1.0 - s) * a.velocity + s * b.velocity;
        out.samples.push_back(r);
    }
    return out;
}

}  // namespace labyrinth
