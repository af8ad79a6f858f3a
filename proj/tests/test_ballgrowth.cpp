#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pharm/ballgrowth.hpp"
#include "pharm/energetics.hpp"
#include "pharm/solver.hpp"

using namespace pharm;

namespace {

GridPtr disk_grid(double h) { return std::make_shared<const DomainGrid>(DomainShape::unit_disk(), h); }

DiscreteField vortices(GridPtr g, std::vector<Vec2> at) {
    return DiscreteField::from_function(g, TargetManifold::circle(), [at](Vec2 x, std::span<double> v) {
        double t = 0.0;
        for (auto a : at) t += std::atan2(x.y - a.y, x.x - a.x);
        v[0] = std::cos(t);
        v[1] = std::sin(t);
    });
}

bool covers(const Disk& outer, const Disk& inner, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 64; ++k) {
        const double t = kTwoPi * u(rng), f = std::sqrt(u(rng));
        const Vec2 x = inner.center + (f * inner.radius) * Vec2{std::cos(t), std::sin(t)};
        if (dist(x, outer.center) > outer.radius * (1.0 + 1e-12)) return false;
    }
    return true;
}

int count(const DiskCollection& c, GrowthEventType t) {
    int n = 0;
    for (const auto& e : c.history) n += e.type == t;
    return n;
}

}  // namespace

TEST_CASE("merging examples") {
    auto m = merge_disks({{{0, 0}, 1}, {{1.5, 0}, 1}});
    REQUIRE(m.disks.size() == 1);
    CHECK(m.disks[0].center.x == doctest::Approx(0.75));
    CHECK(m.disks[0].center.y == 0.0);
    CHECK(m.disks[0].radius == 2.0);

    std::vector<Disk> apart{{{0, 0}, 0.5}, {{2, 0}, 0.5}, {{0, 3}, 1}};
    auto same = merge_disks(apart);
    REQUIRE(same.disks.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(same.disks[k].center.x == apart[k].center.x);
        CHECK(same.disks[k].radius == apart[k].radius);
    }
    CHECK(same.steps.empty());

    std::vector<Disk> chain{{{0, 0}, 1}, {{1.8, 0}, 1}, {{3.6, 0}, 1}};
    auto c = merge_disks(chain);
    REQUIRE(c.disks.size() == 1);
    CHECK(c.disks[0].radius == doctest::Approx(3.0).epsilon(1e-15));
    std::mt19937_64 rng(51);
    for (const auto& d : chain) CHECK(covers(c.disks[0], d, rng));
}

TEST_CASE("disk merging (property)") {
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> pos(-1.0, 1.0), rad(0.001, 0.4);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Disk> in(1 + rng() % 15);
        for (auto& d : in) d = {{pos(rng), pos(rng)}, rad(rng)};
        auto m = merge_disks(in);
        double a = 0.0, b = 0.0;
        for (const auto& d : in) a += d.radius;
        for (const auto& d : m.disks) b += d.radius;
        CHECK(std::abs(a - b) <= 1e-12 * a);
        CHECK(m.steps.size() == in.size() - m.disks.size());
        for (std::size_t i = 0; i < m.disks.size(); ++i)
            for (std::size_t j = i + 1; j < m.disks.size(); ++j)
                CHECK(dist(m.disks[i].center, m.disks[j].center) >= m.disks[i].radius + m.disks[j].radius);
        REQUIRE(m.owner.size() == in.size());
        for (std::size_t i = 0; i < in.size(); ++i) CHECK(covers(m.disks[static_cast<std::size_t>(m.owner[i])], in[i], rng));
    }
}

TEST_CASE("singularity detection") {
    const double h = 1.0 / 64.0;
    auto g = disk_grid(h);
    auto det = detect_singularities(vortices(g, {{0, 0}}));
    REQUIRE(det.config.points.size() == 1);
    CHECK(det.config.points[0].charge.windings == std::vector<int>{1});
    CHECK(norm(det.config.points[0].location) <= 2 * h);

    auto two = detect_singularities(vortices(g, {{-0.3, 0.1}, {0.35, -0.2}}));
    REQUIRE(two.config.points.size() == 2);
    for (const auto& s : two.config.points) CHECK(s.charge.windings == std::vector<int>{1});
    // nearest obstacle is the boundary for the vortex at (0.35, -0.2)
    CHECK(two.config.separation_radius == doctest::Approx(1.0 - norm({0.35, -0.2})).epsilon(0.05));

    auto flat = DiscreteField::from_function(g, TargetManifold::circle(), [](Vec2, std::span<double> v) {
        v[0] = 0.0;
        v[1] = 1.0;
    });
    CHECK(detect_singularities(flat).config.empty());

    auto tor = DiscreteField::from_function(g, TargetManifold::torus(), [](Vec2 x, std::span<double> v) {
        const double t = std::atan2(x.y, x.x);
        v[0] = std::cos(t);
        v[1] = std::sin(t);
        v[2] = std::cos(-t);
        v[3] = std::sin(-t);
    });
    auto td = detect_singularities(tor);
    REQUIRE(td.config.points.size() == 1);
    CHECK(td.config.points[0].charge.windings == std::vector<int>{1, -1});
}

TEST_CASE("growth around a single vortex") {
    auto g = disk_grid(1.0 / 64.0);
    auto u = vortices(g, {{0, 0}});
    auto c = grow_balls(u, 1.5, 0.5);
    REQUIRE(c.disks.size() == 1);
    CHECK(c.reached_delta);
    CHECK(2.0 * c.disks[0].disk.radius == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(norm(c.disks[0].disk.center) <= 2.0 / 64.0);
    CHECK(c.history.front().type == GrowthEventType::Seed);
    CHECK(c.history.back().type == GrowthEventType::Stop);
    CHECK(count(c, GrowthEventType::Merge) == 0);
    // growth is monotone in s and in every radius
    for (std::size_t k = 1; k < c.history.size(); ++k) CHECK(c.history[k].s >= c.history[k - 1].s);
    REQUIRE_FALSE(c.segments.empty());
    CHECK(c.segments.back().r_hi == doctest::Approx(0.25).epsilon(1e-12));

    std::ostringstream os;
    write_growth_trace(os, c);
    auto j = nlohmann::json::parse(os.str());
    REQUIRE(j.is_array());
    CHECK(j.front()["type"] == "seed");
    CHECK(j.back()["type"] == "stop");
    CHECK(j.back()["disks"][0]["charge"] == nlohmann::json::array({1}));
    CHECK(j.back()["disks"][0].contains("cx"));
}

TEST_CASE("two separated vortices grow alike") {
    const double h = 1.0 / 64.0;
    auto u = vortices(disk_grid(h), {{-0.3, 0.0}, {0.3, 0.0}});
    auto c = grow_balls(u, 1.7, 0.2);
    REQUIRE(c.disks.size() == 2);
    CHECK(count(c, GrowthEventType::Merge) == 0);
    CHECK(std::abs(c.disks[0].disk.radius - c.disks[1].disk.radius) <= h);
    for (const auto& d : c.disks) CHECK(d.charge.windings == std::vector<int>{1});
    CHECK(c.radius_sum() == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("close vortices merge once") {
    auto u = vortices(disk_grid(1.0 / 128.0), {{-0.05, 0.0}, {0.05, 0.0}});
    auto c = grow_balls(u, 1.5, 0.5);
    CHECK(count(c, GrowthEventType::Merge) == 1);
    REQUIRE(c.disks.size() == 1);
    CHECK(c.disks[0].charge.windings == std::vector<int>{2});
    CHECK(2.0 * c.radius_sum() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("growth preconditions") {
    auto g = disk_grid(1.0 / 32.0);
    auto u = vortices(g, {{0, 0}});
    CHECK_THROWS_WITH_AS(grow_balls(u, 2.0, 0.5), "ball growth needs 1 < p < 2", Error);
    CHECK_THROWS_AS(grow_balls(u, 1.5, 0.0), Error);
    CHECK_THROWS_WITH_AS(grow_balls(vortices(g, {{0.7, 0.0}}), 1.5, 0.5), "singularities too close to the boundary",
                         Error);
    auto flat = DiscreteField::from_function(g, TargetManifold::circle(), [](Vec2, std::span<double> v) {
        v[0] = 1.0;
        v[1] = 0.0;
    });
    CHECK_THROWS_AS(grow_balls(flat, 1.5, 0.5), Error);
}

TEST_CASE("annulus lower bound") {
    CHECK(annulus_lower_bound(kTwoPi, 0.0, 1.0, 1.5) == doctest::Approx(kTwoPi / (1.5 * 0.5)).epsilon(1e-14));
    CHECK(annulus_lower_bound(0.0, 0.1, 1.0, 1.5) == 0.0);
    CHECK(annulus_lower_bound(kTwoPi, 0.25, 1.0, 2.0) == doctest::Approx(kPi * std::log(4.0)).epsilon(1e-14));
    CHECK_THROWS_WITH_AS(annulus_lower_bound(kTwoPi, 0.0, 1.0, 2.0), "divergent bound", Error);
    // continuous as p -> 2
    CHECK(annulus_lower_bound(kTwoPi, 0.25, 1.0, 2.0 - 1e-7) ==
          doctest::Approx(annulus_lower_bound(kTwoPi, 0.25, 1.0, 2.0)).epsilon(1e-5));
    // monotone in both radii (property)
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double p = 1.0 + u(rng), s = 0.5 * u(rng), r = s + 0.01 + u(rng);
        CHECK(annulus_lower_bound(kTwoPi, s, r + 0.1, p) >= annulus_lower_bound(kTwoPi, s, r, p));
        CHECK(annulus_lower_bound(kTwoPi, s * 0.5, r, p) >= annulus_lower_bound(kTwoPi, s, r, p));
    }
}

TEST_CASE("pointwise convexity inequality (property)") {
    std::mt19937_64 rng(54);
    std::uniform_real_distribution<double> ab(0.0, 10.0), pd(1.0, 2.0);
    int bad = 0;
    for (int k = 0; k < 20000; ++k)
        if (!pointwise_convexity_holds(ab(rng), ab(rng), pd(rng))) ++bad;
    CHECK(bad == 0);
    // equality at p = 1 and p = 2 when a = b
    CHECK(pointwise_convexity_holds(3.0, 3.0, 1.0));
    CHECK(pointwise_convexity_holds(3.0, 3.0, 2.0));
}

TEST_CASE("U-field of a single growth") {
    auto u = vortices(disk_grid(1.0 / 64.0), {{0, 0}});
    const double p = 1.5;
    auto c = grow_balls(u, p, 0.5);
    UField U(c.segments, p);
    // radially nonincreasing and zero outside the final disk
    double prev = INFINITY;
    for (double r = 0.01; r < 0.5; r += 0.01) {
        const double v = U({r, 0.0});
        CHECK(v <= prev);
        prev = v;
    }
    CHECK(U({0.3, 0.0}) == 0.0);
    // level sets are disks about the vortex with the prescribed radius
    for (double t : {5.0, 10.0, 40.0}) {
        auto L = U.level_set(t);
        double expect = 0.0;
        for (const auto& s : c.segments)
            if (t < s.kappa / (kTwoPi * s.r_lo)) expect = std::max(expect, std::min(s.r_hi, s.kappa / (kTwoPi * t)));
        if (expect > 0.0) {
            REQUIRE(L.size() == 1);
            CHECK(L[0].radius == doctest::Approx(expect));
            CHECK(U.level_volume(t) == doctest::Approx(kPi * expect * expect));
            CHECK(U.level_perimeter(t) == doctest::Approx(kTwoPi * expect));
        }
    }
    CHECK(U.sup_weak(p) > 0.0);

    UField none({}, p);
    CHECK(none({0.1, 0.2}) == 0.0);
    CHECK(none.sup_weak(p) == 0.0);
    CHECK(none.sup_perimeter(p) == 0.0);
    CHECK(none.level_set(1.0).empty());
}

TEST_CASE("estimates hold on the hedgehog") {
    auto g = disk_grid(1.0 / 128.0);
    auto u = vortices(g, {{0, 0}});
    auto sing = detect_singularities(u).config;
    for (double p : {1.5, 1.9}) {
        auto c = grow_balls(u, p, 0.5);
        UField U(c.segments, p);
        auto m = mixed_estimate(u, c, U, sing);
        for (const auto& r : m.rows) CHECK_MESSAGE(r.pass, r.name);
        for (const auto& r : annulus_rows(u, c, p, 0.10)) CHECK_MESSAGE(r.pass, r.name);
        for (const auto& r : circle_rows(u, c, p, 0.05)) CHECK_MESSAGE(r.pass, r.name);
        CHECK(disk_union_row(u, c, sing, 0.10).pass);
    }
    // systole certificate on annuli away from the vortex
    auto rows = systole_rows(u, {{{0.5, 0.0}, 0.05, 0.2}, {{0.0, 0.0}, 0.1, 0.5}}, 1.5);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].pass);
    // around the vortex the hedgehog is the equality case
    CHECK(rows[1].lhs == doctest::Approx(rows[1].rhs).epsilon(0.02));
}

TEST_CASE("certificate rows") {
    auto up = upper_row("x", 1.05, 1.0, 0.1);
    CHECK(up.pass);
    CHECK(up.slack == doctest::Approx(0.1));
    CHECK_FALSE(upper_row("x", 1.2, 1.0, 0.1).pass);
    CHECK(lower_row("y", 0.95, 1.0, 0.1).pass);
    CHECK_FALSE(lower_row_abs("y", 0.5, 1.0, 0.1).pass);
    std::ostringstream os;
    write_certificates(os, {up, lower_row("y", 0.5, 1.0, 0.0)});
    CHECK(os.str() == "bound_name,lhs,rhs,slack,pass\nx,1.05,1,0.10000000000000001,true\ny,0.5,1,0,false\n");
}
