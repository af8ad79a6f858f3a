#include <algorithm>
#include <cmath>
#include <limits>

#include "pharm/harness.hpp"

namespace pharm {

namespace {

Json charge_json(const HomotopyCharge& c) { return Json(c.windings); }

Json row_json(const BoundRow& r) {
    Json j;
    j["name"] = r.name;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["slack"] = r.slack;
    j["pass"] = r.pass;
    return j;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// centre of the domain's largest inscribed disk about the origin, and its radius
double inradius(const DomainShape& s) {
    switch (s.kind) {
        case DomainKind::UnitDisk: return 1.0;
        case DomainKind::Rectangle: return 0.5 * std::min(s.width, s.height);
        case DomainKind::Annulus: return 0.0;
    }
    return 0.0;
}

// four probe annuli, used for the systole certificate where they avoid the singularities
std::vector<Annulus> probe_annuli(const DiscreteField& u, const SingularityConfiguration& sing) {
    const DomainShape& s = u.grid().shape();
    const double h = u.grid().spacing();
    double ring, r_in, r_out;
    if (s.kind == DomainKind::Annulus) {
        const double w = 0.5 * (s.r_out - s.r_in);
        ring = 0.5 * (s.r_in + s.r_out);
        r_in = 0.1 * w;
        r_out = 0.4 * w;
    } else {
        const double R = inradius(s);
        ring = 0.6 * R;
        r_in = 0.05 * R;
        r_out = 0.15 * R;
    }
    std::vector<Annulus> out;
    if (r_in < 4.0 * h) return out;
    for (int k = 0; k < 4; ++k) {
        const double th = 0.25 * kPi + 0.5 * kPi * k;
        const Vec2 c{ring * std::cos(th), ring * std::sin(th)};
        if (s.distance_to_boundary(c) < r_out + 2.0 * h) continue;
        bool clear = true;
        for (const auto& a : sing.points) clear = clear && dist(a.location, c) > r_out + 4.0 * h;
        if (clear) out.push_back({c, r_in, r_out});
    }
    return out;
}

std::optional<BoundRow> decreasing_row(const DiscreteField& u, const SingularityConfiguration& sing, double p) {
    const DomainShape& s = u.grid().shape();
    const double h = u.grid().spacing();
    if (sing.empty() || s.kind == DomainKind::Annulus) return std::nullopt;
    double reach = 0.0;
    for (const auto& a : sing.points) reach = std::max(reach, norm(a.location));
    const double r_in = std::min(0.5 * sing.separation_radius, 0.05);
    const double R = 0.5 * (reach + r_in + inradius(s));
    if (r_in < 4.0 * h || R - reach - r_in < 4.0 * h) return std::nullopt;
    try {
        double inner = 0.0;
        for (const auto& a : sing.points) {
            const auto c = loop_charge(u.target(),
                                       circle_trace(u, a.location, r_in, default_circle_samples(u.grid(), r_in)));
            inner += singular_energy(c, p);
        }
        const auto outer =
            loop_charge(u.target(), circle_trace(u, {0.0, 0.0}, R, default_circle_samples(u.grid(), R)));
        return upper_row("decreasing_singular_energy", singular_energy(outer, p), inner, 1e-12);
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

Json EnergyReport::to_json() const {
    Json j;
    j["seed"] = seed;
    j["p"] = p;
    j["total_energy"] = total_energy;
    j["core_corrected_energy"] = core_corrected_energy;
    j["e_sg_p"] = e_sg_p;
    j["e_sg_2"] = e_sg_2;
    j["e_ren_limit"] = optional_json(e_ren_limit);
    j["e_ren_limit_raw"] = optional_json(e_ren_limit_raw);
    j["e_ren_integral"] = optional_json(e_ren_integral);
    j["e_ren_p"] = optional_json(e_ren_p);
    j["e_ren_skipped"] = e_ren_skipped.empty() ? Json(nullptr) : Json(e_ren_skipped);
    j["h_term"] = h_term;
    j["weak_lp_quasinorm"] = weak_lp_quasinorm;
    Json solver;
    solver["converged"] = converged;
    solver["iterations"] = iterations;
    solver["grad_norm"] = grad_norm;
    j["solver"] = solver;
    Json pts = Json::array();
    for (const auto& s : singularities.points) {
        Json q;
        q["x"] = s.location.x;
        q["y"] = s.location.y;
        q["charge"] = charge_json(s.charge);
        q["lambda"] = lambda_of(s.charge);
        pts.push_back(q);
    }
    j["singularities"] = pts;
    j["separation_radius"] = singularities.separation_radius;
    Json unres = Json::array();
    for (auto v : unresolved) unres.push_back(Json::array({v.x, v.y}));
    j["unresolved"] = unres;
    Json rows = Json::array();
    for (const auto& r : bounds) rows.push_back(row_json(r));
    j["bounds"] = rows;
    return j;
}

EnergyReport energy_report(const DiscreteField& u, double p, const HomotopyCharge& boundary_charge,
                           std::uint64_t seed) {
    EnergyReport r;
    r.seed = seed;
    r.p = p;
    const double h = u.grid().spacing();
    Detection det = detect_singularities(u);
    r.singularities = det.config;
    r.unresolved = det.unresolved;
    const auto& sing = r.singularities;

    r.total_energy = p_energy(u, p);
    r.core_corrected_energy = p < 2.0 ? core_corrected_energy(u, sing, p) : r.total_energy;
    r.e_sg_p = singular_energy(boundary_charge, p);
    r.e_sg_2 = singular_energy(boundary_charge, 2.0);

    std::vector<double> lambdas;
    for (const auto& s : sing.points) lambdas.push_back(lambda_of(s.charge));
    if (sing.empty()) {
        r.e_ren_skipped = "no charges";
    } else {
        r.h_term = h_term(lambdas);
        try {
            auto lim = renormalized_energy(u, sing, RenormRoute::Limit);
            auto in = renormalized_energy(u, sing, RenormRoute::Integral);
            r.e_ren_limit = lim.value;
            r.e_ren_limit_raw = lim.raw_smallest;
            r.e_ren_integral = in.value;
            if (p < 2.0) r.e_ren_p = p_renormalized_energy(u, sing, p).value;
        } catch (const Error& e) {
            r.e_ren_skipped = e.what();
        }
    }
    r.weak_lp_quasinorm = weak_quasinorm(u, 2.0, 1.0 / (8.0 * h));

    const double sys = u.target().systole();
    if (r.e_sg_p > 0.0 && std::isfinite(sys))
        r.bounds.push_back(lower_row("singular_energy_floor", r.e_sg_p,
                                     std::pow(sys, p) / (p * std::pow(kTwoPi, p - 1.0)), 1e-12));
    if (!sing.empty()) {
        double sum = 0.0;
        for (double l : lambdas) sum += l * l;
        r.bounds.push_back(lower_row("weak_lp_lower_bound", r.weak_lp_quasinorm, sum / (4.0 * kPi), 0.05));
    }
    if (auto row = decreasing_row(u, sing, p)) r.bounds.push_back(*row);
    if (r.e_ren_limit && r.e_ren_integral)
        r.bounds.push_back(upper_row_abs("renormalized_routes_agree", std::abs(*r.e_ren_limit - *r.e_ren_integral),
                                         0.0, 1e-3 * (1.0 + std::abs(*r.e_ren_limit))));
    for (auto& row : systole_rows(u, probe_annuli(u, sing), p)) r.bounds.push_back(row);
    return r;
}

void attach_solve(EnergyReport& r, const SolveResult& s) {
    r.converged = s.converged;
    r.iterations = s.iterations;
    r.grad_norm = s.grad_norm;
}

double richardson(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (xs.size() != ys.size() || xs.empty()) throw Error("richardson: mismatched data");
    const std::size_t n = xs.size();
    if (n == 1) return ys[0];
    if (n == 2) return ys[0] + (ys[1] - ys[0]) * (x - xs[0]) / (xs[1] - xs[0]);
    const double x0 = xs[n - 3], x1 = xs[n - 2], x2 = xs[n - 1];
    const double y0 = ys[n - 3], y1 = ys[n - 2], y2 = ys[n - 1];
    return y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2)) + y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2)) +
           y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
}

Setup make_setup(const StudyConfig& cfg) {
    try {
        TargetManifold t = TargetManifold::parse(cfg.target);
        BoundaryDatum g = parse_boundary(cfg.boundary, t);
        return {std::make_shared<const DomainGrid>(cfg.domain, cfg.h), t, std::move(g)};
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

HomotopyCharge enclosed_charge(const Setup& s) {
    return s.grid->shape().kind == DomainKind::Annulus ? zero_charge(s.target) : s.datum.charge;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 of the pair
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace pharm
