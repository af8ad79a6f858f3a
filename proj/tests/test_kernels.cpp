#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pharm/kernels.hpp"

using namespace pharm;
using namespace pharm::kernels;

namespace {

struct Problem {
    int nx, ny, nc;
    double h;
    std::vector<double> v, w;
    std::vector<RowRange> rows;

    EnergyInput input(double p, double eps) const {
        return {nx, ny, nc, h, p, eps, v.data(), w.data(), rows.data()};
    }
};

Problem random_problem(std::mt19937_64& rng, int nc) {
    std::uniform_int_distribution<int> size(3, 40);
    std::uniform_real_distribution<double> u(-1.0, 1.0), frac(0.0, 1.0);
    Problem P{size(rng), size(rng), nc, 1.0 / 32.0, {}, {}, {}};
    P.v.resize(static_cast<std::size_t>(P.nx) * P.ny * nc);
    for (auto& x : P.v) x = u(rng);
    P.w.assign(static_cast<std::size_t>(P.nx - 1) * (P.ny - 1), 0.0);
    for (int j = 0; j < P.ny - 1; ++j) {
        std::uniform_int_distribution<int> b(0, P.nx - 2);
        int a = b(rng), c = b(rng);
        if (a > c) std::swap(a, c);
        P.rows.push_back({a, c + 1});
        for (int i = a; i <= c; ++i) P.w[static_cast<std::size_t>(j) * (P.nx - 1) + i] = frac(rng) < 0.2 ? frac(rng) : 1.0;
    }
    return P;
}

}  // namespace

TEST_CASE("linear field has the exact Q1 energy") {
    // u = A x on a full 9x7 grid: |Du|^2 = |A|^2 everywhere
    const int nx = 9, ny = 7;
    const double h = 0.1, a = 0.7, b = -1.3;
    Problem P{nx, ny, 1, h, {}, {}, {}};
    P.v.resize(nx * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) P.v[j * nx + i] = a * i * h + b * j * h;
    P.w.assign((nx - 1) * (ny - 1), 1.0);
    P.rows.assign(ny - 1, {0, nx - 1});
    for (double p : {1.2, 1.5, 2.0}) {
        const double area = (nx - 1) * (ny - 1) * h * h;
        const double expect = std::pow(a * a + b * b, 0.5 * p) / p * area;
        CHECK(energy_scalar(P.input(p, 0.0), nullptr, nullptr) == doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("scalar gradient matches central differences") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        Problem P = random_problem(rng, 2);
        const double p = 1.3 + 0.07 * trial, eps = 1e-3;
        std::vector<double> g(P.v.size(), 0.0), d(P.v.size(), 0.0);
        energy_scalar(P.input(p, eps), g.data(), d.data());
        for (int k = 0; k < 20; ++k) {
            std::size_t idx = rng() % P.v.size();
            const double s = 1e-6, x0 = P.v[idx];
            P.v[idx] = x0 + s;
            double ep = energy_scalar(P.input(p, eps), nullptr, nullptr);
            P.v[idx] = x0 - s;
            double em = energy_scalar(P.input(p, eps), nullptr, nullptr);
            P.v[idx] = x0;
            CHECK(g[idx] == doctest::Approx((ep - em) / (2 * s)).epsilon(1e-5).scale(1e-8));
            CHECK(d[idx] >= 0.0);
        }
    }
}

TEST_CASE("AVX2 kernel agrees with the scalar reference (property)") {
    if (!avx2_supported()) {
        MESSAGE("AVX2 not available on this host; equivalence not exercised");
        return;
    }
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> pd(1.01, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        Problem P = random_problem(rng, 1 + static_cast<int>(rng() % 4));
        const double p = trial % 10 == 0 ? 2.0 : pd(rng), eps = trial % 3 == 0 ? 0.0 : 1e-4;
        std::vector<double> g1(P.v.size(), 0.0), d1(P.v.size(), 0.0), g2(P.v.size(), 0.0), d2(P.v.size(), 0.0);
        const double e1 = energy_scalar(P.input(p, eps), g1.data(), d1.data());
        const double e2 = energy_avx2(P.input(p, eps), g2.data(), d2.data());
        CHECK(e2 == doctest::Approx(e1).epsilon(1e-12));
        double gmax = 0.0, err = 0.0, dmax = 0.0, derr = 0.0;
        for (std::size_t k = 0; k < g1.size(); ++k) {
            gmax = std::max(gmax, std::abs(g1[k]));
            err = std::max(err, std::abs(g1[k] - g2[k]));
            dmax = std::max(dmax, std::abs(d1[k]));
            derr = std::max(derr, std::abs(d1[k] - d2[k]));
        }
        CHECK(err <= 1e-12 * (1.0 + gmax));
        CHECK(derr <= 1e-12 * (1.0 + dmax));
        // energy-only path equals the energy of the full path
        CHECK(energy_avx2(P.input(p, eps), nullptr, nullptr) == doctest::Approx(e2).epsilon(1e-14));
    }
}

TEST_CASE("dispatch honours the override") {
    const Isa before = selected_isa();
    select_isa(Isa::Scalar);
    CHECK(selected_isa() == Isa::Scalar);
    select_isa(Isa::Avx2);
    CHECK(selected_isa() == (avx2_supported() ? Isa::Avx2 : Isa::Scalar));
    select_isa(before);
    CHECK(std::string(isa_name(Isa::Scalar)) == "scalar");
}
