#pragma once

#include <array>
#include <cmath>

#include "labyrinth/units.hpp"

namespace labyrinth::detail {

struct GaussLegendre16 {
    std::array<double, 16> nodes{};
    std::array<double, 16> weights{};
};

// 16-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_16.
inline const GaussLegendre16& gauss_legendre16() {
    static const GaussLegendre16 rule = [] {
        GaussLegendre16 r;
        constexpr int n = 16;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            r.nodes[i] = x;
            r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    return rule;
}

}  // namespace labyrinth::detail
