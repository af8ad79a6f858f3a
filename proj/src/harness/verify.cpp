#include <algorithm>
#include <cmath>
#include <random>

#include "pharm/harness.hpp"

namespace pharm {

namespace {

struct Suite {
    Json checks = Json::array();
    bool pass = true;

    void add(const std::string& name, bool ok, Json detail) {
        Json c;
        c["name"] = name;
        c["pass"] = ok;
        c["detail"] = std::move(detail);
        checks.push_back(c);
        pass = pass && ok;
    }
};

void geometry(Suite& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(-1.0, 1.0), rad(0.01, 0.3);
    std::uniform_int_distribution<int> count(1, 12);
    std::uniform_real_distribution<double> ang(0.0, kTwoPi);
    int conservation = 0, overlap = 0, uncovered = 0, merges = 0;
    double worst_sum = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Disk> in(static_cast<std::size_t>(count(rng)));
        for (auto& d : in) d = {{pos(rng), pos(rng)}, rad(rng)};
        const auto m = merge_disks(in);
        merges += static_cast<int>(m.steps.size());
        double a = 0.0, b = 0.0;
        for (const auto& d : in) a += d.radius;
        for (const auto& d : m.disks) b += d.radius;
        const double err = std::abs(a - b) / a;
        worst_sum = std::max(worst_sum, err);
        if (err > 1e-12) ++conservation;
        for (std::size_t i = 0; i < m.disks.size(); ++i)
            for (std::size_t j = i + 1; j < m.disks.size(); ++j)
                if (dist(m.disks[i].center, m.disks[j].center) < m.disks[i].radius + m.disks[j].radius) ++overlap;
        for (std::size_t i = 0; i < in.size(); ++i) {
            const Disk& D = m.disks[static_cast<std::size_t>(m.owner[i])];
            for (int k = 0; k < 16; ++k) {
                const double t = ang(rng), f = std::sqrt(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
                const Vec2 x = in[i].center + (f * in[i].radius) * Vec2{std::cos(t), std::sin(t)};
                if (dist(x, D.center) > D.radius * (1.0 + 1e-12)) ++uncovered;
            }
        }
    }
    Json d;
    d["cases"] = 1000;
    d["merges"] = merges;
    d["worst_relative_sum_error"] = worst_sum;
    d["conservation_failures"] = conservation;
    d["overlapping_pairs"] = overlap;
    d["uncovered_samples"] = uncovered;
    s.add("disk_merging", conservation == 0 && overlap == 0 && uncovered == 0, d);

    {
        auto m = merge_disks({{{-0.1, 0.0}, 0.2}, {{0.1, 0.0}, 0.2}});
        const bool ok = m.disks.size() == 1 && std::abs(m.disks[0].radius - 0.4) < 1e-15 &&
                        norm(m.disks[0].center) < 1e-15;
        s.add("merge_symmetric_pair", ok, Json{{"radius", m.disks.empty() ? 0.0 : m.disks[0].radius}});
    }

    // detection on analytic fields
    auto grid = std::make_shared<const DomainGrid>(DomainShape::unit_disk(), 1.0 / 32.0);
    auto circle = TargetManifold::circle();
    auto vortex = [&](int d) {
        return DiscreteField::from_function(grid, circle, [d](Vec2 x, std::span<double> v) {
            const double t = d * std::atan2(x.y, x.x);
            v[0] = std::cos(t);
            v[1] = std::sin(t);
        });
    };
    for (int d : {1, -1}) {
        auto det = detect_singularities(vortex(d));
        const bool ok = det.config.points.size() == 1 && det.config.points[0].charge.windings == std::vector<int>{d} &&
                        norm(det.config.points[0].location) < 1.0 / 32.0;
        s.add("detect_vortex_degree_" + std::to_string(d), ok, Json{{"count", det.config.points.size()}});
    }
    {
        auto c = DiscreteField::from_function(grid, circle, [](Vec2, std::span<double> v) {
            v[0] = 1.0;
            v[1] = 0.0;
        });
        auto det = detect_singularities(c);
        s.add("detect_constant_field", det.config.empty() && det.unresolved.empty(),
              Json{{"count", det.config.points.size()}});
    }
    {
        auto torus = TargetManifold::torus();
        auto f = DiscreteField::from_function(grid, torus, [](Vec2 x, std::span<double> v) {
            const double t = std::atan2(x.y, x.x);
            v[0] = std::cos(t);
            v[1] = std::sin(t);
            v[2] = std::cos(t);
            v[3] = -std::sin(t);
        });
        auto det = detect_singularities(f);
        const bool ok = det.config.points.size() == 1 &&
                        det.config.points[0].charge.windings == std::vector<int>{1, -1};
        s.add("detect_torus_vortex", ok, Json{{"count", det.config.points.size()}});
    }
    {
        const double v = annulus_lower_bound(kTwoPi, 0.25, 1.0, 2.0);
        s.add("annulus_bound_log_case", std::abs(v - kPi * std::log(4.0)) <= 1e-12 * v, Json{{"value", v}});
    }
}

void scalar(Suite& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ab(0.0, 10.0), pd(1.0, 2.0);
    int bad = 0;
    for (int k = 0; k < 100000; ++k) {
        const double a = ab(rng), b = ab(rng), p = pd(rng);
        if (!pointwise_convexity_holds(a, b, p)) ++bad;
    }
    s.add("pointwise_convexity_inequality", bad == 0, Json{{"triples", 100000}, {"violations", bad}});

    int hbad = 0, cells = 0;
    for (int i = 1; i <= 100; ++i) {
        const double p = 1.0 + 0.01 * i;
        for (int k = 1; k <= 1000; ++k, ++cells)
            if (hanner_predicate_violated(p, 0.01 * k)) ++hbad;
    }
    s.add("two_point_power_predicate", hbad == 0, Json{{"grid_points", cells}, {"violations", hbad}});

    for (double a : {0.1, 0.3})
        for (double p : {1.5, 1.9}) {
            auto r = sandwich_check(a, p);
            Json d;
            d["a"] = a;
            d["p"] = p;
            d["integral"] = r.integral;
            d["lower"] = r.lower;
            d["upper"] = r.upper;
            s.add("translated_singularity_sandwich", r.pass, d);
        }
}

void energetics(Suite& s) {
    for (int d = -4; d <= 4; ++d) {
        if (d == 0) continue;
        const double v = singular_energy(HomotopyCharge{{d}}, 2.0);
        s.add("circle_resolution_degree_" + std::to_string(d), std::abs(v - std::abs(d) * kPi) <= 1e-12 * v,
              Json{{"value", v}});
    }
    {
        auto r15 = minimal_resolution(HomotopyCharge{{1, 1}}, 1.5);
        auto r2 = minimal_resolution(HomotopyCharge{{1, 1}}, 2.0);
        Json d;
        d["charges_p1.5"] = r15.resolution.charges.size();
        d["optimal_count_p1.5"] = r15.optimal_count;
        d["optimal_count_p2"] = r2.optimal_count;
        d["value_p2"] = r2.value;
        const bool ok = r15.resolution.charges.size() == 1 && r15.optimal_count == 1 && r2.optimal_count == 2 &&
                        std::abs(r2.value - 2.0 * kPi) <= 1e-12 * r2.value;
        s.add("torus_resolution_switch", ok, d);
    }
    std::vector<double> grid;
    for (int k = 0; k <= 10; ++k) grid.push_back(1.5 + 0.05 * k);
    for (const auto& [name, c] : {std::pair{"circle_2", HomotopyCharge{{2}}}, std::pair{"torus_1_1", HomotopyCharge{{1, 1}}},
                                  std::pair{"torus_2_-1", HomotopyCharge{{2, -1}}}}) {
        auto rep = check_p_continuity(c, grid, kTwoPi);
        s.add(std::string("p_continuity_") + name, rep.pass,
              Json{{"lipschitz_bound", rep.lipschitz_bound}, {"worst_ratio", rep.worst_ratio}});
    }
    {
        const double l[] = {kTwoPi};
        const double v = h_term(l);
        s.add("h_term_unit_charge", std::abs(v - 0.5 * kPi) <= 1e-12, Json{{"value", v}});
    }
    {
        bool ok = true;
        for (double p : {1.0, 1.25, 1.5, 1.75, 2.0})
            for (const auto& c : {HomotopyCharge{{1}}, HomotopyCharge{{3}}, HomotopyCharge{{1, 2}}})
                ok = ok && singular_energy(c, p) >= std::pow(kTwoPi, p) / (p * std::pow(kTwoPi, p - 1.0)) * (1 - 1e-12);
        s.add("singular_energy_floor", ok, Json::object());
    }
}

}  // namespace

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
    if (name != "geometry" && name != "scalar" && name != "energetics" && name != "all")
        throw ConfigError("unknown suite '" + name + "'");
    Suite s;
    if (name == "geometry" || name == "all") geometry(s, seed);
    if (name == "scalar" || name == "all") scalar(s, seed);
    if (name == "energetics" || name == "all") energetics(s);
    SuiteResult r;
    r.summary["suite"] = name;
    r.summary["seed"] = seed;
    r.summary["checks"] = s.checks;
    r.summary["pass"] = s.pass;
    r.pass = s.pass;
    return r;
}

}  // namespace pharm
