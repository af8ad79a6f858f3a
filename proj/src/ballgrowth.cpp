#include "pharm/ballgrowth.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "pharm/energetics.hpp"

namespace pharm {

// ---------------------------------------------------------------- detection

Detection detect_singularities(const DiscreteField& u) {
    const DomainGrid& g = u.grid();
    const TargetManifold& m = u.target();
    const int nf = m.circle_factors();
    Detection out;
    if (nf == 0) return out;

    const int cx = g.nx() - 1, cy = g.ny() - 1;
    const std::size_t ncell = static_cast<std::size_t>(cx) * cy;
    std::vector<int> wind(ncell * nf, 0);
    std::vector<std::uint8_t> flag(ncell, 0), bad(ncell, 0);
    for (int cj = 0; cj < cy; ++cj)
        for (int ci = 0; ci < cx; ++ci) {
            const std::size_t n00 = g.index(ci, cj);
            const std::size_t cyc[5] = {n00, n00 + 1, n00 + 1 + g.nx(), n00 + g.nx(), n00};
            bool all_in = true;
            for (int k = 0; k < 4; ++k) all_in = all_in && g.inside(cyc[k]);
            if (!all_in) continue;
            const std::size_t cell = static_cast<std::size_t>(cj) * cx + ci;
            for (int f = 0; f < nf; ++f) {
                auto X = u.plane(2 * f), Y = u.plane(2 * f + 1);
                double sum = 0.0;
                for (int k = 0; k < 4; ++k) {
                    double d = angle_increment(X[cyc[k]], Y[cyc[k]], X[cyc[k + 1]], Y[cyc[k + 1]]);
                    if (std::abs(d) >= kPi - 1e-9) bad[cell] = 1;
                    sum += d;
                }
                wind[cell * nf + f] = static_cast<int>(std::lround(sum / kTwoPi));
                if (wind[cell * nf + f] != 0) flag[cell] = 1;
            }
            if (bad[cell]) flag[cell] = 1;
        }

    auto centre = [&](std::size_t cell) {
        Vec2 c = g.node(static_cast<int>(cell % cx), static_cast<int>(cell / cx));
        return Vec2{c.x + 0.5 * g.spacing(), c.y + 0.5 * g.spacing()};
    };
    for (std::size_t c = 0; c < ncell; ++c)
        if (bad[c]) out.unresolved.push_back(centre(c));

    const double h = g.spacing();
    std::vector<std::uint8_t> seen(ncell, 0);
    std::vector<Singularity> points;
    for (std::size_t start = 0; start < ncell; ++start) {
        if (!flag[start] || seen[start]) continue;
        std::vector<std::size_t> cluster{start}, stack{start};
        seen[start] = 1;
        while (!stack.empty()) {
            std::size_t c = stack.back();
            stack.pop_back();
            const int ci = static_cast<int>(c % cx), cj = static_cast<int>(c / cx);
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    const int a = ci + di, b = cj + dj;
                    if (a < 0 || b < 0 || a >= cx || b >= cy) continue;
                    const std::size_t n = static_cast<std::size_t>(b) * cx + a;
                    if (flag[n] && !seen[n]) {
                        seen[n] = 1;
                        stack.push_back(n);
                        cluster.push_back(n);
                    }
                }
        }
        HomotopyCharge q = zero_charge(m);
        bool unresolved = false;
        double wsum = 0.0;
        Vec2 acc{0.0, 0.0};
        for (std::size_t c : cluster) {
            double w = bad[c] ? 1.0 : 0.0;
            for (int f = 0; f < nf; ++f) {
                q.windings[f] += wind[c * nf + f];
                w += std::abs(wind[c * nf + f]);
            }
            unresolved = unresolved || bad[c];
            acc = acc + w * centre(c);
            wsum += w;
        }
        const Vec2 loc = (1.0 / wsum) * acc;
        if (unresolved) {
            // charge of the smallest resolvable circle around the core
            for (double r = 2.5 * h; r <= 8.0 * h; r += 0.5 * h) {
                try {
                    q = loop_charge(m, circle_trace(u, loc, r, default_circle_samples(g, r)));
                    break;
                } catch (const Error&) {
                }
            }
        }
        if (!q.is_zero()) points.push_back({loc, q});
    }
    out.config = make_configuration(g.shape(), std::move(points));
    return out;
}

// ---------------------------------------------------------------- merging

namespace {

bool intersect(const Disk& a, const Disk& b) { return dist(a.center, b.center) <= a.radius + b.radius; }

Disk merged(const Disk& a, const Disk& b) {
    const double r = a.radius + b.radius;
    if (r == 0.0) return {a.center, 0.0};
    return {(1.0 / r) * (a.radius * a.center + b.radius * b.center), r};
}

bool first_intersecting(const std::vector<Disk>& d, std::size_t& i, std::size_t& j) {
    for (i = 0; i < d.size(); ++i)
        for (j = i + 1; j < d.size(); ++j)
            if (intersect(d[i], d[j])) return true;
    return false;
}

}  // namespace

MergeResult merge_disks(const std::vector<Disk>& disks) {
    MergeResult r;
    r.disks = disks;
    std::vector<std::vector<int>> members(disks.size());
    for (std::size_t k = 0; k < disks.size(); ++k) members[k] = {static_cast<int>(k)};
    std::size_t i, j;
    while (first_intersecting(r.disks, i, j)) {
        Disk m = merged(r.disks[i], r.disks[j]);
        r.steps.push_back({static_cast<int>(i), static_cast<int>(j), m});
        r.disks[i] = m;
        r.disks.erase(r.disks.begin() + static_cast<std::ptrdiff_t>(j));
        members[i].insert(members[i].end(), members[j].begin(), members[j].end());
        members.erase(members.begin() + static_cast<std::ptrdiff_t>(j));
    }
    r.owner.assign(disks.size(), 0);
    for (std::size_t k = 0; k < members.size(); ++k)
        for (int in : members[k]) r.owner[static_cast<std::size_t>(in)] = static_cast<int>(k);
    return r;
}

// ---------------------------------------------------------------- growth

double DiskCollection::radius_sum() const {
    double s = 0.0;
    for (const auto& d : disks) s += d.disk.radius;
    return s;
}

namespace {

struct Active {
    Vec2 center;
    double r0 = 0.0;    // radius frozen at the last event
    double rate = 0.0;  // E_sg^{1,p'} of the anchoring trace
    HomotopyCharge charge;

    double radius(double s) const { return std::max(r0, s * rate); }
};

double kappa_of(double rate, double pc) { return std::pow(std::pow(kTwoPi, pc - 1.0) * pc * rate, 1.0 / pc); }

}  // namespace

DiskCollection grow_balls(const DiscreteField& u, double p, double delta) {
    if (!(p > 1.0 && p < 2.0)) throw Error("ball growth needs 1 < p < 2");
    if (!(delta > 0.0)) throw Error("delta must be positive");
    const DomainGrid& g = u.grid();
    const double h = g.spacing();
    const double pc = conjugate_exponent(p);
    Detection det = detect_singularities(u);
    if (det.config.empty()) throw Error("ball growth needs at least one nonzero charge");
    for (const auto& pt : det.config.points)
        if (g.shape().distance_to_boundary(pt.location) < delta) throw Error("singularities too close to the boundary");

    DiskCollection out;
    out.p = p;
    out.delta = delta;
    std::vector<Active> act;
    for (const auto& pt : det.config.points) act.push_back({pt.location, 0.0, singular_energy(pt.charge, pc), pt.charge});

    auto snapshot = [&](double s) {
        std::vector<GrowingDisk> d;
        for (const auto& a : act) d.push_back({{a.center, a.radius(s)}, a.charge});
        return d;
    };
    auto diam_sum = [&](double s) {
        double t = 0.0;
        for (const auto& a : act) t += 2.0 * a.radius(s);
        return t;
    };
    auto gap = [&](double s) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < act.size(); ++i)
            for (std::size_t j = i + 1; j < act.size(); ++j)
                m = std::min(m, dist(act[i].center, act[j].center) - act[i].radius(s) - act[j].radius(s));
        return m;
    };
    auto close_segments = [&](double s) {
        for (const auto& a : act) {
            double r = a.radius(s);
            if (a.rate > 0.0 && r > a.r0) out.segments.push_back({a.center, a.r0, r, kappa_of(a.rate, pc), a.charge});
        }
    };

    double s = 0.0;
    out.history.push_back({GrowthEventType::Seed, 0.0, snapshot(0.0)});
    for (;;) {
        double rate_max = 0.0;
        for (const auto& a : act) rate_max = std::max(rate_max, a.rate);
        if (rate_max == 0.0) {
            out.reached_delta = false;
            break;
        }
        // stopping parameter: the diameter sum is piecewise linear and nondecreasing in s
        double lo = s, hi = std::max(s, 1e-300);
        while (diam_sum(hi) < delta) hi = hi * 2.0 + 1e-12;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            double mid = 0.5 * (lo + hi);
            (diam_sum(mid) < delta ? lo : hi) = mid;
        }
        double frozen = 0.0, rates = 0.0;
        for (const auto& a : act) {
            if (hi * a.rate > a.r0)
                rates += a.rate;
            else
                frozen += a.r0;
        }
        const double s_stop = rates > 0.0 ? (0.5 * delta - frozen) / rates : hi;

        if (act.size() < 2 || gap(s_stop) > 0.0) {
            close_segments(s_stop);
            s = s_stop;
            out.reached_delta = true;
            break;
        }
        // first contact, to a radius tolerance of h/10
        lo = s;
        hi = s_stop;
        while ((hi - lo) * rate_max > 0.1 * h) {
            double mid = 0.5 * (lo + hi);
            (gap(mid) > 0.0 ? lo : hi) = mid;
        }
        s = hi;
        close_segments(s);
        for (auto& a : act) a.r0 = a.radius(s);
        out.history.push_back({GrowthEventType::Grow, s, snapshot(s)});

        std::size_t i, j;
        std::vector<Disk> cur;
        for (const auto& a : act) cur.push_back({a.center, a.r0});
        while (first_intersecting(cur, i, j)) {
            Disk m = merged(cur[i], cur[j]);
            HomotopyCharge q;
            try {
                q = loop_charge(u.target(), circle_trace(u, m.center, m.radius, default_circle_samples(g, m.radius)));
            } catch (const Error& e) {
                if (std::string(e.what()) == "trace outside domain") throw;
                throw Error("insufficient resolution at radius " + fmt17(m.radius));
            }
            act[i] = {m.center, m.radius, singular_energy(q, pc), q};
            act.erase(act.begin() + static_cast<std::ptrdiff_t>(j));
            cur[i] = m;
            cur.erase(cur.begin() + static_cast<std::ptrdiff_t>(j));
        }
        out.history.push_back({GrowthEventType::Merge, s, snapshot(s)});
    }
    out.disks = snapshot(s);
    out.history.push_back({GrowthEventType::Stop, s, out.disks});
    return out;
}

void write_growth_trace(std::ostream& os, const DiskCollection& c) {
    static const char* names[] = {"seed", "grow", "merge", "stop"};
    os << "[\n";
    for (std::size_t k = 0; k < c.history.size(); ++k) {
        const auto& e = c.history[k];
        os << "  {\"type\": \"" << names[static_cast<int>(e.type)] << "\", \"s\": " << fmt17(e.s) << ", \"disks\": [";
        for (std::size_t d = 0; d < e.disks.size(); ++d) {
            const auto& gd = e.disks[d];
            os << (d ? ", " : "") << "{\"cx\": " << fmt17(gd.disk.center.x) << ", \"cy\": " << fmt17(gd.disk.center.y)
               << ", \"r\": " << fmt17(gd.disk.radius) << ", \"charge\": [";
            for (std::size_t w = 0; w < gd.charge.windings.size(); ++w) os << (w ? ", " : "") << gd.charge.windings[w];
            os << "]}";
        }
        os << "]}" << (k + 1 < c.history.size() ? "," : "") << "\n";
    }
    os << "]\n";
}

// ---------------------------------------------------------------- scalar bounds

double annulus_lower_bound(double lambda, double sigma, double rho, double p) {
    if (!(sigma >= 0.0 && sigma < rho)) throw Error("annulus needs 0 <= sigma < rho");
    if (!(p >= 1.0 && p <= 2.0)) throw Error("p must lie in [1, 2]");
    if (p == 2.0) {
        if (sigma == 0.0) throw Error("divergent bound");
        return lambda * lambda / (4.0 * kPi) * std::log(rho / sigma);
    }
    if (lambda == 0.0) return 0.0;
    return (std::pow(rho, 2.0 - p) - std::pow(sigma, 2.0 - p)) * std::pow(lambda, p) /
           (std::pow(kTwoPi, p - 1.0) * p * (2.0 - p));
}

bool pointwise_convexity_holds(double a, double b, double p) {
    const double ap = std::pow(a, p), bp = std::pow(b, p);
    const double lhs = ap / p + std::pow(a, p - 1.0) * (b - a) + (1.0 - 1.0 / p) * std::pow(std::max(b - a, 0.0), p);
    const double rhs = 0.5 * (3.0 - p) * bp;
    return lhs <= rhs + 1e-12 * std::max({1.0, ap, bp});
}

BoundRow upper_row_abs(std::string name, double lhs, double rhs, double allowance) {
    return {std::move(name), lhs, rhs, allowance, lhs <= rhs + allowance};
}

BoundRow lower_row_abs(std::string name, double lhs, double rhs, double allowance) {
    return {std::move(name), lhs, rhs, allowance, lhs >= rhs - allowance};
}

BoundRow upper_row(std::string name, double lhs, double rhs, double rel) {
    return upper_row_abs(std::move(name), lhs, rhs, rel * std::abs(rhs));
}

BoundRow lower_row(std::string name, double lhs, double rhs, double rel) {
    return lower_row_abs(std::move(name), lhs, rhs, rel * std::abs(rhs));
}

void write_certificates(std::ostream& os, const std::vector<BoundRow>& rows) {
    os << "bound_name,lhs,rhs,slack,pass\n";
    for (const auto& r : rows)
        os << r.name << ',' << fmt17(r.lhs) << ',' << fmt17(r.rhs) << ',' << fmt17(r.slack) << ','
           << (r.pass ? "true" : "false") << '\n';
}

// ---------------------------------------------------------------- U-field

UField::UField(std::vector<GrowthSegment> segments, double p) : p_(p) {
    for (auto& s : segments)
        if (s.kappa > 0.0 && s.r_hi > s.r_lo) seg_.push_back(std::move(s));
}

double UField::operator()(Vec2 x) const {
    double v = 0.0;
    for (const auto& s : seg_) {
        const double r = dist(x, s.center);
        if (r >= s.r_hi) continue;
        const double rr = std::max(s.r_lo, r);
        if (rr == 0.0) return std::numeric_limits<double>::infinity();
        v = std::max(v, s.kappa / (kTwoPi * rr));
    }
    return v;
}

std::vector<Disk> UField::level_set(double t) const {
    std::vector<Disk> d;
    for (const auto& s : seg_) {
        if (s.r_lo > 0.0 && !(t < s.kappa / (kTwoPi * s.r_lo))) continue;
        d.push_back({s.center, std::min(s.r_hi, s.kappa / (kTwoPi * t))});
    }
    // history disks are nested or disjoint; keep the maximal ones
    std::vector<Disk> out;
    for (std::size_t i = 0; i < d.size(); ++i) {
        bool inner = false;
        for (std::size_t j = 0; j < d.size() && !inner; ++j) {
            if (i == j) continue;
            const bool within = dist(d[i].center, d[j].center) + d[i].radius <= d[j].radius * (1.0 + 1e-12);
            const bool same = within && std::abs(d[i].radius - d[j].radius) <= 1e-12 * d[j].radius;
            inner = within && (!same || j < i);
        }
        if (!inner) out.push_back(d[i]);
    }
    return out;
}

double UField::level_volume(double t) const {
    double v = 0.0;
    for (const auto& d : level_set(t)) v += kPi * d.radius * d.radius;
    return v;
}

double UField::level_perimeter(double t) const {
    double v = 0.0;
    for (const auto& d : level_set(t)) v += kTwoPi * d.radius;
    return v;
}

std::vector<double> UField::breakpoints() const {
    std::vector<double> b;
    for (const auto& s : seg_) {
        b.push_back(s.kappa / (kTwoPi * s.r_hi));
        if (s.r_lo > 0.0) b.push_back(s.kappa / (kTwoPi * s.r_lo));
    }
    std::sort(b.begin(), b.end());
    return b;
}

namespace {

// sup over t of t^q m(t) where m(t) = A t^a + B between breakpoints (a = -2 volume, -1 perimeter)
template <class M>
double level_sup(const std::vector<double>& bp, double q, double a, M&& measure) {
    if (bp.empty()) return 0.0;
    double best = 0.0;
    auto at = [&](double t) { best = std::max(best, std::pow(t, q) * measure(t)); };
    for (std::size_t k = 0; k < bp.size(); ++k) {
        at(bp[k] * (1.0 - 1e-12));
        at(bp[k] * (1.0 + 1e-12));
        if (k + 1 == bp.size()) break;
        const double lo = bp[k] * (1.0 + 1e-12), hi = bp[k + 1] * (1.0 - 1e-12);
        if (!(hi > lo)) continue;
        // recover A and B from two evaluations, then the stationary point of A t^{q+a} + B t^q
        const double m1 = measure(lo), m2 = measure(hi);
        const double A = (m1 - m2) / (std::pow(lo, a) - std::pow(hi, a)), B = m1 - A * std::pow(lo, a);
        if (A > 0.0 && B > 0.0 && q + a < 0.0) {
            const double t = std::pow(q * B / (-(q + a) * A), 1.0 / a);
            if (t > lo && t < hi) at(t);
        }
    }
    return best;
}

}  // namespace

double UField::sup_weak(double q) const {
    return level_sup(breakpoints(), q, -2.0, [this](double t) { return level_volume(t); });
}

double UField::sup_perimeter(double q) const {
    return level_sup(breakpoints(), q, -1.0, [this](double t) { return level_perimeter(t); });
}

double UField::min_positive() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : seg_) m = std::min(m, s.kappa / (kTwoPi * s.r_hi));
    return seg_.empty() ? 0.0 : m;
}

std::vector<double> UField::samples(const DomainGrid& g) const {
    std::vector<double> v(g.node_count(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k)
        if (g.inside(k)) v[k] = (*this)(g.node(k));
    return v;
}

// ---------------------------------------------------------------- certificates

namespace {

std::vector<Disk> final_disks(const DiskCollection& c) {
    std::vector<Disk> d;
    for (const auto& gd : c.disks) d.push_back(gd.disk);
    return d;
}

HomotopyCharge total_charge(const DiskCollection& c) {
    HomotopyCharge q = c.disks.front().charge;
    for (std::size_t k = 1; k < c.disks.size(); ++k) q = q + c.disks[k].charge;
    return q;
}

}  // namespace

MixedEstimateReport mixed_estimate(const DiscreteField& u, const DiskCollection& growth, const UField& U,
                                   const SingularityConfiguration& sing) {
    const double p = growth.p, pc = conjugate_exponent(p);
    const double sys = u.target().systole();
    const double delta = growth.radius_sum();
    const Region disks{final_disks(growth), {}};
    MixedEstimateReport r;
    r.energy = core_corrected_energy(u, sing, p);
    r.disk_energy = core_corrected_region_energy(u, sing, p, disks);
    r.excess = integrate_region(u, disks, [&](Vec2 x, double s) {
        double e = std::sqrt(s) - U(x);
        return e > 0.0 ? std::pow(e, p) : 0.0;
    });
    double esg = 0.0;
    for (const auto& gd : growth.disks) esg += singular_energy(gd.charge, pc);
    const double lhs = (p - 1.0) / p * r.excess + std::pow(kTwoPi * delta, 2.0 - p) /
                                                      (std::pow(p, 2.0 - p) * std::pow(p - 1.0, p - 1.0)) *
                                                      std::pow(esg, p - 1.0);
    r.rows.push_back(upper_row("mixed_marcinkiewicz", lhs, 0.5 * (3.0 - p) * p * r.disk_energy, 0.10));
    r.rows.push_back(upper_row("weak_lp_of_u", U.sup_weak(p),
                               (2.0 - p) * std::pow(p, p - 1.0) /
                                   (2.0 * std::pow(p - 1.0, p - 1.0) * std::pow(kTwoPi, 2.0 - p)) * r.energy,
                               0.10));
    r.rows.push_back(upper_row("perimeter_of_u_levels", U.sup_perimeter(p - 1.0),
                               (2.0 - p) * std::pow(kTwoPi, 3.0 - p) * std::pow(pc, p - 1.0) / sys * r.energy, 0.10));
    r.rows.push_back(lower_row("u_floor", U.min_positive(), sys / (kTwoPi * delta), 1e-9));
    return r;
}

std::vector<BoundRow> annulus_rows(const DiscreteField& u, const DiskCollection& growth, double p, double slack) {
    std::vector<BoundRow> rows;
    const double core = 4.0 * u.grid().spacing();
    for (const auto& s : growth.segments) {
        const double lo = std::max(s.r_lo, core);
        if (!(s.r_hi > lo)) continue;
        const double e = p_energy_region(u, p, Region{{{s.center, s.r_hi}}, {{s.center, lo}}});
        rows.push_back(lower_row("annulus_lower_bound", e, annulus_lower_bound(lambda_of(s.charge), lo, s.r_hi, p), slack));
    }
    return rows;
}

std::vector<BoundRow> circle_rows(const DiscreteField& u, const DiskCollection& growth, double p, double slack) {
    std::vector<BoundRow> rows;
    const double core = 4.0 * u.grid().spacing();
    for (const auto& s : growth.segments) {
        const double lo = std::max(s.r_lo, core);
        if (!(s.r_hi > lo)) continue;
        const double r = 0.5 * (lo + s.r_hi);
        const double eta = lambda_of(s.charge), a = eta / (kTwoPi * r);
        const double excess = circle_integral(u, s.center, r, [&](double g2) {
            double e = std::sqrt(g2) - a;
            return e > 0.0 ? std::pow(e, p) : 0.0;
        });
        const double lhs = std::pow(eta, p) / (p * std::pow(kTwoPi * r, p - 1.0)) + (1.0 - 1.0 / p) * excess;
        const double rhs = 0.5 * (3.0 - p) * p * circle_energy_density(u, s.center, r, p);
        rows.push_back(upper_row("circle_inequality", lhs, rhs, slack));
    }
    return rows;
}

BoundRow disk_union_row(const DiscreteField& u, const DiskCollection& growth, const SingularityConfiguration& sing,
                        double slack) {
    const double p = growth.p, pc = conjugate_exponent(p);
    const double delta = growth.radius_sum();
    const double lhs = std::pow(delta, 2.0 - p) * std::pow(singular_energy(total_charge(growth), pc), p - 1.0);
    const double e = core_corrected_region_energy(u, sing, p, Region{final_disks(growth), {}});
    const double rhs = (2.0 - p) * std::pow(p - 1.0, p - 1.0) / std::pow(kTwoPi / p, 2.0 - p) * e;
    return upper_row("disk_union_lower_bound", lhs, rhs, slack);
}

std::vector<BoundRow> systole_rows(const DiscreteField& u, const std::vector<Annulus>& annuli, double p) {
    std::vector<BoundRow> rows;
    const double sys = u.target().systole();
    if (!std::isfinite(sys)) return rows;
    for (const auto& an : annuli) {
        const double e = p_energy_region(u, p, Region{{{an.center, an.r_out}}, {{an.center, an.r_in}}});
        const double bound = annulus_lower_bound(sys, an.r_in, an.r_out, p);
        bool ok = e >= bound;
        if (!ok) {
            ok = true;
            for (double f : {0.25, 0.5, 0.75}) {
                const double r = an.r_in + f * (an.r_out - an.r_in);
                ok = ok && loop_charge(u.target(), circle_trace(u, an.center, r, default_circle_samples(u.grid(), r)))
                               .is_zero();
            }
        }
        rows.push_back({"systole_certificate", e, bound, 0.0, ok});
    }
    return rows;
}

}  // namespace pharm
