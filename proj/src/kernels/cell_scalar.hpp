#pragma once

#include <cstddef>

#include "pharm/kernels.hpp"

namespace pharm::kernels::detail {

// One Q1 cell with 2x2 Gauss points; returns its weighted energy.
inline double cell_energy(const EnergyInput& in, std::size_t plane, std::size_t n00, double w,
                          double* grad, double* diag) {
    const std::size_t nx = static_cast<std::size_t>(in.nx);
    const std::size_t n10 = n00 + 1, n01 = n00 + nx, n11 = n01 + 1;
    const double inv_h2 = 1.0 / (in.h * in.h);
    const double quarter = 0.25 * in.h * in.h;
    const double eps2 = in.eps * in.eps;
    const double gx[2] = {kGaussLo, kGaussHi};
    double e = 0.0;
    for (int a = 0; a < 2; ++a) {
        const double xi = gx[a];
        for (int b = 0; b < 2; ++b) {
            const double eta = gx[b];
            double s = 0.0;
            for (int c = 0; c < in.ncomp; ++c) {
                const double* v = in.values + c * plane;
                double Gx = (1.0 - eta) * (v[n10] - v[n00]) + eta * (v[n11] - v[n01]);
                double Gy = (1.0 - xi) * (v[n01] - v[n00]) + xi * (v[n11] - v[n10]);
                s += Gx * Gx + Gy * Gy;
            }
            double phi, dphi;
            density(s * inv_h2, in.p, eps2, phi, dphi);
            e += w * quarter * phi;
            if (!grad) continue;
            const double coef = w * quarter * 2.0 * dphi * inv_h2;
            for (int c = 0; c < in.ncomp; ++c) {
                const double* v = in.values + c * plane;
                double* g = grad + c * plane;
                double Gx = coef * ((1.0 - eta) * (v[n10] - v[n00]) + eta * (v[n11] - v[n01]));
                double Gy = coef * ((1.0 - xi) * (v[n01] - v[n00]) + xi * (v[n11] - v[n10]));
                g[n00] += -(1.0 - eta) * Gx - (1.0 - xi) * Gy;
                g[n10] += (1.0 - eta) * Gx - xi * Gy;
                g[n01] += -eta * Gx + (1.0 - xi) * Gy;
                g[n11] += eta * Gx + xi * Gy;
            }
            if (diag) {
                const double e0 = (1.0 - eta) * (1.0 - eta), e1 = eta * eta;
                const double x0 = (1.0 - xi) * (1.0 - xi), x1 = xi * xi;
                diag[n00] += coef * (e0 + x0);
                diag[n10] += coef * (e0 + x1);
                diag[n01] += coef * (e1 + x0);
                diag[n11] += coef * (e1 + x1);
            }
        }
    }
    return e;
}

}  // namespace pharm::kernels::detail
