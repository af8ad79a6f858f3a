#include <cstddef>

#include "cell_scalar.hpp"

namespace pharm::kernels {

double energy_scalar(const EnergyInput& in, double* grad, double* diag) {
    const std::size_t nx = static_cast<std::size_t>(in.nx);
    const std::size_t plane = nx * static_cast<std::size_t>(in.ny);
    double total = 0.0;
    for (int cj = 0; cj + 1 < in.ny; ++cj) {
        double row_sum = 0.0;
        const RowRange r = in.rows[cj];
        for (int ci = r.begin; ci < r.end; ++ci) {
            const double w = in.cell_weight[static_cast<std::size_t>(cj) * (nx - 1) + ci];
            if (w == 0.0) continue;
            row_sum += detail::cell_energy(in, plane, static_cast<std::size_t>(cj) * nx + ci, w, grad, diag);
        }
        total += row_sum;
    }
    return total;
}

}  // namespace pharm::kernels
