#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pharm/field.hpp"
#include "pharm/solver.hpp"

using namespace pharm;

namespace {

GridPtr disk_grid(double h) { return std::make_shared<const DomainGrid>(DomainShape::unit_disk(), h); }

DiscreteField hedgehog(GridPtr g, int d = 1, Vec2 at = {}) {
    return DiscreteField::from_function(g, TargetManifold::circle(), [d, at](Vec2 x, std::span<double> v) {
        const double t = d * std::atan2(x.y - at.y, x.x - at.x);
        v[0] = std::cos(t);
        v[1] = std::sin(t);
    });
}

DiscreteField constant(GridPtr g) {
    return DiscreteField::from_function(g, TargetManifold::circle(), [](Vec2, std::span<double> v) {
        v[0] = 1.0;
        v[1] = 0.0;
    });
}

}  // namespace

TEST_CASE("grid is symmetric with no node at the origin") {
    auto g = disk_grid(1.0 / 16.0);
    bool origin = false;
    for (std::size_t k = 0; k < g->node_count(); ++k) {
        Vec2 x = g->node(k);
        origin = origin || norm(x) < 1e-12;
        if (g->inside(k)) CHECK(g->shape().contains(x));
    }
    CHECK_FALSE(origin);
    CHECK(g->origin().x == doctest::Approx(-g->node(g->nx() - 1, 0).x));
}

TEST_CASE("cell weights approximate the area") {
    auto g = disk_grid(1.0 / 64.0);
    double area = 0.0;
    for (double w : g->cell_weights()) area += w;
    area *= g->spacing() * g->spacing();
    // staircase of fully inside cells: within a boundary strip of width ~2h
    CHECK(area <= kPi);
    CHECK(area >= kPi * (1.0 - 4.0 * g->spacing()));

    auto holed = g->perforated({{{0.3, 0.1}, 0.2}});
    double area2 = 0.0;
    for (double w : holed.cell_weights()) area2 += w;
    area2 *= g->spacing() * g->spacing();
    CHECK(area - area2 == doctest::Approx(kPi * 0.04).epsilon(0.01));
}

TEST_CASE("constant field has zero energy for every p") {
    auto u = constant(disk_grid(1.0 / 32.0));
    for (double p : {1.0, 1.5, 2.0}) CHECK(p_energy(u, p) == 0.0);
}

TEST_CASE("hedgehog energies") {
    // the interpolant caps |Du| at O(1/h) in the core: the deficit decays like h^{2-p}
    const double p = 1.5, exact = 2 * kPi / (p * (2 - p));
    const double d128 = 1.0 - p_energy(hedgehog(disk_grid(1.0 / 128.0)), p) / exact;
    const double d256 = 1.0 - p_energy(hedgehog(disk_grid(1.0 / 256.0)), p) / exact;
    CHECK(d256 > 0.0);
    CHECK(d256 < 0.04);
    CHECK(d128 / d256 == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));
    // away from the core the energy is accurate
    auto u = hedgehog(disk_grid(1.0 / 256.0));
    const double outside = p_energy_region(u, p, Region{{}, {{{0.0, 0.0}, 0.05}}});
    CHECK(outside == doctest::Approx(exact * (1.0 - std::sqrt(0.05))).epsilon(0.002));

    auto a = std::make_shared<const DomainGrid>(DomainShape::annulus(0.25, 1.0), 1.0 / 256.0);
    CHECK(p_energy(hedgehog(a), 2.0) == doctest::Approx(kPi * std::log(4.0)).epsilon(0.02));
}

TEST_CASE("region integration: areas and energies") {
    auto g = disk_grid(1.0 / 64.0);
    auto u = hedgehog(g);
    auto one = [](Vec2, double) { return 1.0; };
    // disk of radius 0.4 about (0.2, -0.1), fully inside the domain
    CHECK(integrate_region(u, Region{{{{0.2, -0.1}, 0.4}}, {}}, one) == doctest::Approx(kPi * 0.16).epsilon(1e-6));
    // annulus 0.2 < r < 0.7 about the vortex: energy pi log(3.5) at p = 2
    const Region ann{{{{0.0, 0.0}, 0.7}}, {{{0.0, 0.0}, 0.2}}};
    CHECK(p_energy_region(u, 2.0, ann) == doctest::Approx(kPi * std::log(3.5)).epsilon(0.01));
    // the empty include list means the whole domain
    CHECK(p_energy_region(u, 1.5, Region{}) == doctest::Approx(p_energy(u, 1.5)).epsilon(1e-9));
}

TEST_CASE("region integration is additive over a split (property)") {
    auto g = disk_grid(1.0 / 32.0);
    auto u = hedgehog(g, 1, {0.1, 0.05});
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> c(-0.4, 0.4), r(0.05, 0.4);
    for (int trial = 0; trial < 20; ++trial) {
        const Disk D{{c(rng), c(rng)}, r(rng)};
        const Disk core{{0.1, 0.05}, 0.1};
        const double whole = p_energy_region(u, 1.5, Region{{}, {core}});
        const double in = p_energy_region(u, 1.5, Region{{D}, {core}});
        const double out = p_energy_region(u, 1.5, Region{{}, {core, D}});
        CHECK(in + out == doctest::Approx(whole).epsilon(1e-6));
    }
}

TEST_CASE("circle traces") {
    auto g = disk_grid(1.0 / 64.0);
    auto u = hedgehog(g);
    CHECK(loop_charge(u.target(), circle_trace(u, {0, 0}, 0.5, 128)).windings == std::vector<int>{1});
    CHECK(loop_charge(u.target(), circle_trace(constant(g), {0, 0}, 0.5, 128)).windings == std::vector<int>{0});
    CHECK(loop_charge(u.target(), circle_trace(hedgehog(g, 3), {0, 0}, 0.5, 128)).windings == std::vector<int>{3});
    CHECK_THROWS_AS(circle_trace(u, {0.9, 0.0}, 0.5, 128), Error);
}

TEST_CASE("circle energy densities of the hedgehog") {
    auto u = hedgehog(disk_grid(1.0 / 128.0));
    for (double r : {0.1, 0.3, 0.6}) {
        CHECK(circle_energy_density(u, {0, 0}, r, 2.0) == doctest::Approx(kPi / r).epsilon(0.03));
        CHECK(circle_energy_density(u, {0, 0}, r, 1.0) == doctest::Approx(kTwoPi).epsilon(0.03));
        CHECK(circle_energy_density(constant(u.grid_ptr()), {0, 0}, r, 2.0) == 0.0);
    }
}

TEST_CASE("weak quasinorm of the hedgehog gradient") {
    const double h = 1.0 / 128.0;
    auto u = hedgehog(disk_grid(h));
    CHECK(weak_quasinorm(u, 2.0, 1.0 / (8.0 * h)) == doctest::Approx(kPi).epsilon(0.05));
}

TEST_CASE("snapshot round trip is exact") {
    auto g = disk_grid(1.0 / 16.0);
    auto u = hedgehog(g, 1, {0.1, -0.2});
    std::ostringstream os;
    write_snapshot(os, u);
    const std::string text = os.str();
    CHECK(text.rfind("x,y,inside,v1,v2\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    std::istringstream is(text);
    auto v = read_snapshot(is, g, u.target());
    CHECK(v.values() == u.values());
    std::istringstream bad("a,b\n");
    CHECK_THROWS_AS(read_snapshot(bad, g, u.target()), Error);
}

TEST_CASE("configuration separation radius") {
    auto c = make_configuration(DomainShape::unit_disk(),
                                {{{0.3, 0.0}, HomotopyCharge{{1}}}, {{-0.3, 0.0}, HomotopyCharge{{1}}}});
    CHECK(c.separation_radius == doctest::Approx(0.6));
    auto d = make_configuration(DomainShape::unit_disk(), {{{0.8, 0.0}, HomotopyCharge{{1}}}});
    CHECK(d.separation_radius == doctest::Approx(0.2));
}
