#pragma once

#include <cmath>

namespace pharm::kernels {

// 2x2 Gauss points on the unit cell
inline constexpr double kGaussLo = 0.21132486540518711775;  // 1/2 - 1/(2 sqrt 3)
inline constexpr double kGaussHi = 0.78867513459481288225;

struct RowRange {
    int begin = 0;
    int end = 0;
};

// Bilinear (Q1) p-energy of a field stored as ncomp planes of nx*ny nodes.
// Cell (ci,cj) has corners (ci,cj)..(ci+1,cj+1) and weight cell_weight[cj*(nx-1)+ci].
struct EnergyInput {
    int nx = 0;
    int ny = 0;
    int ncomp = 0;
    double h = 0.0;
    double p = 2.0;
    double eps = 0.0;
    const double* values = nullptr;
    const double* cell_weight = nullptr;
    const RowRange* rows = nullptr;  // ny-1 entries
};

// phi(s) = (s + eps^2)^{p/2} / p and dphi/ds
inline void density(double s, double p, double eps2, double& phi, double& dphi) {
    double t = s + eps2;
    if (p == 2.0) {
        phi = 0.5 * t;
        dphi = 0.5;
        return;
    }
    if (t <= 0.0) {
        phi = 0.0;
        dphi = 0.0;
        return;
    }
    double pw = std::pow(t, 0.5 * p);
    phi = pw / p;
    dphi = 0.5 * pw / t;
}

// Energy; when grad/diag are non-null the gradient w.r.t. nodal values and a
// Jacobi-style diagonal are accumulated into them (caller zeroes).
double energy_scalar(const EnergyInput& in, double* grad, double* diag);
double energy_avx2(const EnergyInput& in, double* grad, double* diag);

enum class Isa { Scalar, Avx2 };

bool avx2_supported();
Isa selected_isa();
// overrides autodetection; Avx2 silently falls back when unsupported
void select_isa(Isa isa);
const char* isa_name(Isa isa);

double energy(const EnergyInput& in, double* grad = nullptr, double* diag = nullptr);

}  // namespace pharm::kernels
