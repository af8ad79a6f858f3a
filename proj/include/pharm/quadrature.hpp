#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "pharm/common.hpp"

namespace pharm {

// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5)), dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

// composite Gauss-Legendre on [a, b]
template <class F>
double composite_gl(F&& f, double a, double b, int panels, int order = 8) {
    static thread_local std::pair<std::vector<double>, std::vector<double>> cache;
    if (static_cast<int>(cache.first.size()) != order) cache = gauss_legendre(order);
    const auto& [x, w] = cache;
    const double len = (b - a) / panels;
    double s = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + k * len;
        for (int i = 0; i < order; ++i) s += 0.5 * len * w[i] * f(lo + 0.5 * len * (x[i] + 1.0));
    }
    return s;
}

}  // namespace pharm
