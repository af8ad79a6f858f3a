#include "pharm/energetics.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include "pharm/quadrature.hpp"

namespace pharm {

double charge_cost(const HomotopyCharge& c, double p) {
    double lam = lambda_of(c);
    return std::pow(lam, p) / (p * std::pow(kTwoPi, p - 1.0));
}

namespace {

std::vector<HomotopyCharge> candidate_charges(std::size_t dim, int bound) {
    std::vector<HomotopyCharge> out;
    std::vector<int> w(dim, -bound);
    if (dim == 0) return out;
    for (;;) {
        HomotopyCharge c{w};
        if (!c.is_zero()) out.push_back(c);
        std::size_t k = dim;
        while (k > 0) {
            --k;
            if (w[k] < bound) {
                ++w[k];
                break;
            }
            w[k] = -bound;
            if (k == 0) return out;
        }
    }
}

double l2(const HomotopyCharge& c) { return lambda_of(c) / kTwoPi; }

struct Search {
    double p;
    std::vector<HomotopyCharge> cands;
    std::vector<double> costs;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::size_t>> optima;  // index multisets
    std::vector<std::size_t> stack;

    static bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

    void dfs(std::size_t from, const HomotopyCharge& remaining, double cost) {
        if (remaining.is_zero() && !stack.empty()) {
            if (same(cost, best)) {
                optima.push_back(stack);
            } else if (cost < best) {
                best = cost;
                optima.assign(1, stack);
            }
            // a nonzero continuation can never sum back to zero more cheaply than stopping
        }
        // each further charge costs at least its l2 length times 2pi/p (|w|^p >= |w| for |w| >= 1)
        const double lb = kTwoPi * l2(remaining) / p;
        if (cost + lb > best && !same(cost + lb, best)) return;
        for (std::size_t i = from; i < cands.size(); ++i) {
            if (cost + costs[i] > best && !same(cost + costs[i], best)) continue;
            stack.push_back(i);
            dfs(i, remaining + (-cands[i]), cost + costs[i]);
            stack.pop_back();
        }
    }
};

Resolution to_resolution(const Search& s, const std::vector<std::size_t>& idx) {
    Resolution r;
    for (std::size_t i : idx) r.charges.push_back(s.cands[i]);
    std::sort(r.charges.begin(), r.charges.end());
    return r;
}

Search run_search(const HomotopyCharge& total, double p) {
    if (!(p >= 1.0)) throw Error("resolution exponent must be >= 1");
    Search s;
    s.p = p;
    s.cands = candidate_charges(total.windings.size(), total.l1());
    for (const auto& c : s.cands) s.costs.push_back(charge_cost(c, p));
    // splitting into unit charges along the axes is always admissible; its cost caps the depth
    s.best = total.l1() * std::pow(kTwoPi, p) / (p * std::pow(kTwoPi, p - 1.0)) * (1.0 + 1e-9);
    if (!total.is_zero()) s.dfs(0, total, 0.0);
    return s;
}

}  // namespace

std::vector<Resolution> all_minimal_resolutions(const HomotopyCharge& total, double p) {
    Search s = run_search(total, p);
    std::vector<Resolution> out;
    for (const auto& idx : s.optima) out.push_back(to_resolution(s, idx));
    // fewer charges first, then lexicographic
    std::sort(out.begin(), out.end(), [](const Resolution& a, const Resolution& b) {
        if (a.charges.size() != b.charges.size()) return a.charges.size() < b.charges.size();
        return a.charges < b.charges;
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const Resolution& a, const Resolution& b) { return a.charges == b.charges; }),
              out.end());
    return out;
}

ResolutionResult minimal_resolution(const HomotopyCharge& total, double p) {
    ResolutionResult r;
    if (total.is_zero()) {
        if (!(p >= 1.0)) throw Error("resolution exponent must be >= 1");
        return r;
    }
    auto all = all_minimal_resolutions(total, p);
    r.resolution = all.front();
    r.optimal_count = static_cast<int>(all.size());
    for (const auto& c : r.resolution.charges) r.value += charge_cost(c, p);
    return r;
}

double singular_energy(const HomotopyCharge& total, double p) { return minimal_resolution(total, p).value; }

double h_term(std::span<const double> lambdas) {
    double s = 0.0;
    for (double lam : lambdas) {
        if (!(lam > 0.0)) throw Error("trivial charge has no H-term");
        double r = kTwoPi / lam;
        s += lam * lam / (8.0 * kPi) * (1.0 + std::log(r * r));
    }
    return s;
}

RenormEstimate extrapolate_ladder(std::vector<double> radii, std::vector<double> values) {
    RenormEstimate e;
    e.radii = std::move(radii);
    e.values = std::move(values);
    if (e.values.empty()) return e;
    e.raw_smallest = e.value = e.values.back();
    const std::size_t n = e.values.size();
    if (n < 3) return e;
    const double v1 = e.values[n - 3], v2 = e.values[n - 2], v3 = e.values[n - 1];
    const double d1 = v1 - v2, d2 = v2 - v3;
    if (d2 == 0.0 || d1 / d2 <= 0.0) return e;
    const double q = e.radii[n - 2] / e.radii[n - 1];
    const double alpha = std::log(d1 / d2) / std::log(q);
    if (std::abs(alpha) < 0.25 || std::abs(alpha) > 4.0) return e;
    e.alpha = alpha;
    e.value = v3 - d2 / (std::pow(q, alpha) - 1.0);
    e.extrapolated = true;
    return e;
}

namespace {

std::vector<double> radius_ladder(const DiscreteField& u, const SingularityConfiguration& sing,
                                  const RenormOptions& opts) {
    if (sing.empty()) throw Error("invalid configuration");
    const double h = u.grid().spacing();
    const double rmin = opts.core_cells * h;
    const double sigma = opts.sigma > 0.0 ? opts.sigma : 0.5 * sing.separation_radius;
    if (!(sing.separation_radius > 4.0 * h) || !(sigma >= rmin)) throw Error("invalid configuration");
    for (std::size_t i = 0; i < sing.points.size(); ++i) {
        if (u.grid().shape().distance_to_boundary(sing.points[i].location) < sigma) throw Error("invalid configuration");
        for (std::size_t j = i + 1; j < sing.points.size(); ++j)
            if (dist(sing.points[i].location, sing.points[j].location) < 2.0 * sigma)
                throw Error("invalid configuration");
    }
    std::vector<double> r;
    for (double s = sigma; s >= rmin * (1.0 - 1e-12); s *= 0.5) r.push_back(s);
    return r;
}

Region holes(const SingularityConfiguration& sing, double r) {
    Region reg;
    for (const auto& s : sing.points) reg.exclude.push_back({s.location, r});
    return reg;
}

double log_weight(const SingularityConfiguration& sing) {
    double s = 0.0;
    for (const auto& pt : sing.points) {
        double lam = lambda_of(pt.charge);
        s += lam * lam / (4.0 * kPi);
    }
    return s;
}

}  // namespace

RenormEstimate renormalized_energy(const DiscreteField& u, const SingularityConfiguration& sing, RenormRoute route,
                                   const RenormOptions& opts) {
    const auto radii = radius_ladder(u, sing, opts);
    const double W = log_weight(sing);
    std::vector<double> vals;
    if (route == RenormRoute::Limit) {
        for (double r : radii) vals.push_back(p_energy_region(u, 2.0, holes(sing, r)) - W * std::log(1.0 / r));
        return extrapolate_ladder(radii, vals);
    }
    // far field at sigma, then inward shells of circle densities minus lambda^2 / (4 pi r)
    const double h = u.grid().spacing();
    double acc = p_energy_region(u, 2.0, holes(sing, radii.front())) + W * std::log(radii.front());
    vals.push_back(acc);
    for (std::size_t k = 1; k < radii.size(); ++k) {
        const double lo = radii[k], hi = radii[k - 1];
        const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / (0.25 * h))));
        for (const auto& pt : sing.points) {
            const double lam = lambda_of(pt.charge);
            acc += composite_gl(
                [&](double r) {
                    return circle_energy_density(u, pt.location, r, 2.0) - lam * lam / (4.0 * kPi * r);
                },
                lo, hi, panels, 4);
        }
        vals.push_back(acc);
    }
    return extrapolate_ladder(radii, vals);
}

double renormalized_energy_value(const DiscreteField& u, const SingularityConfiguration& sing, RenormRoute route) {
    return renormalized_energy(u, sing, route).value;
}

double singular_p_part(const SingularityConfiguration& sing, double p) {
    double s = 0.0;
    for (const auto& pt : sing.points)
        s += std::pow(lambda_of(pt.charge), p) / (std::pow(kTwoPi, p - 1.0) * p * (2.0 - p));
    return s;
}

RenormEstimate p_renormalized_energy(const DiscreteField& u, const SingularityConfiguration& sing, double p,
                                     const RenormOptions& opts) {
    if (!(p >= 1.0 && p < 2.0)) throw Error("p must lie in [1, 2)");
    if (sing.empty()) {
        RenormEstimate e;
        e.value = e.raw_smallest = p_energy(u, p);
        return e;
    }
    const auto radii = radius_ladder(u, sing, opts);
    std::vector<double> vals;
    const double S = singular_p_part(sing, p);
    for (double r : radii) vals.push_back(p_energy_region(u, p, holes(sing, r)) - S * (1.0 - std::pow(r, 2.0 - p)));
    return extrapolate_ladder(radii, vals);
}

double core_corrected_region_energy(const DiscreteField& u, const SingularityConfiguration& sing, double p,
                                    const Region& region, double core_cells) {
    if (!(p >= 1.0 && p < 2.0)) throw Error("p must lie in [1, 2)");
    const double r = core_cells * u.grid().spacing();
    Region outer = region;
    double cores = 0.0;
    for (const auto& pt : sing.points) {
        bool in = region.include.empty();
        for (const auto& d : region.include) in = in || contains(d, pt.location);
        for (const auto& d : region.exclude) in = in && !contains(d, pt.location);
        if (!in) continue;
        outer.exclude.push_back({pt.location, r});
        cores += std::pow(lambda_of(pt.charge), p) * std::pow(r, 2.0 - p) /
                 (std::pow(kTwoPi, p - 1.0) * p * (2.0 - p));
    }
    return p_energy_region(u, p, outer) + cores;
}

double core_corrected_energy(const DiscreteField& u, const SingularityConfiguration& sing, double p,
                             double core_cells) {
    return core_corrected_region_energy(u, sing, p, Region{}, core_cells);
}

ConfigEnergyResult config_energy(GridPtr grid, const TargetManifold& target, const BoundaryDatum& g,
                                 const SingularityConfiguration& sing, double rho, const ConfigEnergyOptions& opts) {
    if (target.kind() == ManifoldKind::Euclidean && !sing.empty())
        throw Error("configuration energy needs nonzero charges");
    if (sing.empty()) throw Error("configuration energy needs at least one singularity");
    if (!(rho > 0.0 && rho < sing.separation_radius)) throw Error("rho must lie in (0, separation radius)");
    HomotopyCharge sum = zero_charge(target);
    for (const auto& s : sing.points) sum = sum + s.charge;
    if (sum != g.charge) throw Error("charges do not resolve the boundary datum");

    std::vector<Disk> disks;
    for (const auto& s : sing.points) disks.push_back({s.location, rho});
    auto perforated = std::make_shared<const DomainGrid>(grid->perforated(disks));

    // seed: product of point vortices with a faded degree-0 boundary correction
    const int nf = target.circle_factors();
    const double R = std::max(std::abs(grid->origin().x), std::abs(grid->origin().y));
    std::vector<double> buf(static_cast<std::size_t>(target.ambient_dim()));
    auto phase = [&](Vec2 x, int f) {
        double ph = 0.0;
        for (const auto& s : sing.points)
            ph += s.charge.windings[f] * std::atan2(x.y - s.location.y, x.x - s.location.x);
        return ph;
    };
    auto seed = DiscreteField::from_function(perforated, target, [&](Vec2 x, std::span<double> out) {
        double th = std::atan2(x.y, x.x);
        g.g(th, buf);
        for (int f = 0; f < nf; ++f) {
            Vec2 xb{R * std::cos(th), R * std::sin(th)};
            double gphase = std::atan2(buf[2 * f + 1], buf[2 * f]);
            double mismatch = std::remainder(gphase - phase(xb, f), kTwoPi);
            double ph = phase(x, f) + mismatch * std::min(1.0, norm(x) / R);
            out[2 * f] = std::cos(ph);
            out[2 * f + 1] = std::sin(ph);
        }
    });
    // boundary nodes must carry g exactly
    auto boundary = DiscreteField::from_function(perforated, target, [&](Vec2 x, std::span<double> out) {
        g.g(std::atan2(x.y, x.x), out);
    });
    seed = boundary.with_values(seed.values());

    ConfigEnergyResult res{0.0, 0.0, minimize_p_harmonic(seed, 2.0, opts.solver)};
    const DiscreteField& u = res.solve.field;
    const double h = grid->spacing();
    for (const auto& s : sing.points) {
        double r = rho + 2.0 * h;
        auto c = loop_charge(target, circle_trace(u, s.location, r, default_circle_samples(*grid, r)));
        if (c != s.charge) throw Error("left homotopy sector");
    }
    res.dirichlet = p_energy_region(u, 2.0, Region{});
    res.value = res.dirichlet - log_weight(sing) * std::log(1.0 / rho);
    return res;
}

ContinuityReport check_p_continuity(const HomotopyCharge& total, std::span<const double> p_grid, double systole) {
    ContinuityReport rep;
    double M = 0.0;
    for (double p : p_grid) {
        if (!(p >= 1.5 && p <= 2.0)) throw Error("continuity grid must lie in [1.5, 2]");
        auto r = minimal_resolution(total, p);
        double f = std::pow(kTwoPi, p - 1.0) * p * r.value;
        rep.rows.push_back({p, f, static_cast<int>(r.resolution.charges.size()), r.optimal_count});
        M = std::max(M, f);
    }
    double L = std::abs(systole * std::log(systole));
    if (M > 0.0) L = std::max(L, std::abs(M * std::log(M)));
    rep.lipschitz_bound = L;
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
        for (std::size_t j = i + 1; j < rep.rows.size(); ++j) {
            double dp = std::abs(rep.rows[i].p - rep.rows[j].p);
            if (dp == 0.0) continue;
            double ratio = std::abs(rep.rows[i].f - rep.rows[j].f) / (L * dp);
            rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        }
    rep.pass = rep.worst_ratio <= 1.0;
    return rep;
}

bool hanner_predicate_violated(double p, double x) {
    return x > 0.0 && 2.0 >= std::pow(1.0 + x, p) + std::pow(std::abs(1.0 - x), p);
}

namespace {

// smooth step: 1 on [0, 1/2], 0 beyond 1
double bump(double s) {
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    double t = (s - 0.5) / 0.5;
    auto psi = [](double z) { return z > 0.0 ? std::exp(-1.0 / z) : 0.0; };
    return psi(1.0 - t) / (psi(1.0 - t) + psi(t));
}

// integral over B(c, R) of f in polar coordinates about c with r = R t^{1/(2-p)}
double polar_singular(const std::function<double(Vec2)>& f, Vec2 c, double R, double p, int n_theta, int panels) {
    const double k = 1.0 / (2.0 - p);
    double total = 0.0;
    for (int j = 0; j < n_theta; ++j) {
        const double th = kTwoPi * (j + 0.5) / n_theta, ct = std::cos(th), st = std::sin(th);
        // r dr = R^2 k t^{2k-1} dt; times r^p folded into the integrand keeps it bounded
        total += composite_gl(
            [&](double t) {
                if (t <= 0.0) return 0.0;
                const double r = R * std::pow(t, k);
                return f({c.x + r * ct, c.y + r * st}) * R * R * k * std::pow(t, 2.0 * k - 1.0);
            },
            0.0, 1.0, panels, 8);
    }
    return total * kTwoPi / n_theta;
}

}  // namespace

SandwichResult sandwich_check(double a, double p) {
    if (!(a > 0.0 && a < 0.5) || !(p > 1.0 && p < 2.0)) throw Error("sandwich needs 0 < |a| < 1/2 and 1 < p < 2");
    const Vec2 A{a, 0.0};
    const double R = 0.5 * a;
    auto f = [&](Vec2 x) {
        double r0 = norm(x), r1 = dist(x, A);
        if (r0 == 0.0 || r1 == 0.0) return 0.0;
        return std::pow(std::abs(1.0 / r0 - 1.0 / r1), p);
    };
    auto chi = [&](Vec2 x) { return bump(dist(x, A) / R); };
    const double near = polar_singular([&](Vec2 x) { return chi(x) * f(x); }, A, R, p, 256, 64);
    const double far = polar_singular([&](Vec2 x) { return (1.0 - chi(x)) * f(x); }, {0.0, 0.0}, 1.0, p, 1024, 256);
    SandwichResult s;
    s.integral = near + far;
    s.lower = std::pow(2.0, 1.0 - p) * std::pow(3.0, p - 2.0) * kPi * std::pow(a, 2.0 - p) / (2.0 - p);
    s.upper = 32.0 * kPi * std::pow(a, 2.0 - p) / (2.0 - p);
    s.pass = s.lower <= s.integral && s.integral <= s.upper;
    return s;
}

}  // namespace pharm
