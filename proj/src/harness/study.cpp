#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "pharm/harness.hpp"

namespace pharm {

namespace {

namespace fs = std::filesystem;

Json row_json(const BoundRow& r, double p) {
    Json j;
    j["p"] = p;
    j["name"] = r.name;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["slack"] = r.slack;
    j["pass"] = r.pass;
    return j;
}

Json disks_json(const std::vector<GrowingDisk>& disks) {
    Json a = Json::array();
    for (const auto& d : disks) {
        Json j;
        j["cx"] = d.disk.center.x;
        j["cy"] = d.disk.center.y;
        j["r"] = d.disk.radius;
        j["charge"] = d.charge.windings;
        a.push_back(j);
    }
    return a;
}

std::vector<LadderStep> solve_ladder(const Setup& S, const StudyConfig& cfg, bool parallel) {
    ContinuationLadder ladder{cfg.ladder, {cfg.solver}};
    ladder.validate();
    if (!parallel) {
        InitOptions io = cfg.init;
        io.seed = cfg.seed;
        return run_ladder(initial_field(S.grid, S.target, S.datum, io), ladder);
    }
    const std::size_t n = cfg.ladder.size();
    std::vector<std::optional<LadderStep>> slots(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < n;) {
            try {
                InitOptions io = cfg.init;
                io.seed = derive_seed(cfg.seed, k);
                auto init = initial_field(S.grid, S.target, S.datum, io);
                slots[k] = LadderStep{cfg.ladder[k], minimize_p_harmonic(init, cfg.ladder[k], cfg.solver)};
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    std::vector<LadderStep> steps;
    for (std::size_t k = 0; k < n; ++k) {
        if (!slots[k]) throw Error("ladder point p=" + p_label(cfg.ladder[k]) + ": " + errors[k]);
        steps.push_back(std::move(*slots[k]));
    }
    return steps;
}

std::vector<HomotopyCharge> resolution_charges(const HomotopyCharge& total) {
    if (total.is_zero()) return {};
    return minimal_resolution(total, 2.0).resolution.charges;
}

}  // namespace

StudyResult run_study(const StudyConfig& cfg, bool parallel, bool write_files) {
    Setup S = make_setup(cfg);
    const fs::path out(cfg.out);
    if (write_files) fs::create_directories(out);

    const std::vector<LadderStep> steps = solve_ladder(S, cfg, parallel);
    const std::size_t n = steps.size();

    StudyResult res;
    std::vector<std::pair<double, BoundRow>> rows;
    auto add = [&](double p, const BoundRow& r) { rows.emplace_back(p, r); };

    Json reports = Json::array(), growth = Json::array();
    std::vector<EnergyReport> reps;
    for (std::size_t k = 0; k < n; ++k) {
        const double p = steps[k].p;
        const auto& sol = steps[k].result;
        const auto& u = sol.field;
        EnergyReport rep = energy_report(u, p, enclosed_charge(S), cfg.seed);
        attach_solve(rep, sol);

        Json g;
        g["p"] = p;
        if (!rep.singularities.empty()) {
            try {
                DiskCollection c = grow_balls(u, p, cfg.delta);
                UField U(c.segments, p);
                auto mixed = mixed_estimate(u, c, U, rep.singularities);
                for (auto& r : mixed.rows) rep.bounds.push_back(r);
                for (auto& r : annulus_rows(u, c, p, 0.10)) rep.bounds.push_back(r);
                for (auto& r : circle_rows(u, c, p, 0.05)) rep.bounds.push_back(r);
                rep.bounds.push_back(disk_union_row(u, c, rep.singularities, 0.10));
                g["reached_delta"] = c.reached_delta;
                g["radius_sum"] = c.radius_sum();
                g["disks"] = disks_json(c.disks);
                g["error"] = nullptr;
                if (write_files) {
                    std::ostringstream os;
                    write_growth_trace(os, c);
                    write_text(out / ("growth_p" + p_label(p) + ".json"), os.str());
                }
            } catch (const Error& e) {
                g["error"] = e.what();
                rep.bounds.push_back({"ball_growth_completed", 0.0, 0.0, 0.0, false});
            }
        } else {
            g["error"] = "no charges";
        }
        growth.push_back(g);
        for (const auto& r : rep.bounds) add(p, r);
        reports.push_back(rep.to_json());
        if (write_files) {
            const std::string tag = p_label(p);
            std::ostringstream f, l;
            write_snapshot(f, u);
            write_iteration_log(l, sol.log);
            write_text(out / ("field_p" + tag + ".csv"), f.str());
            write_text(out / ("iterlog_p" + tag + ".csv"), l.str());
            write_text(out / ("report_p" + tag + ".json"), dump_json(rep.to_json()));
        }
        reps.push_back(std::move(rep));
    }

    const auto& ustar = steps.back().result.field;
    const EnergyReport& last = reps.back();
    const auto& sing_star = last.singularities;

    // first-order limit of (2-p) E_p
    std::vector<double> ps, scaled, scaled_raw;
    for (const auto& r : reps) {
        ps.push_back(r.p);
        scaled.push_back((2.0 - r.p) * r.core_corrected_energy);
        scaled_raw.push_back((2.0 - r.p) * r.total_energy);
    }
    Json limit;
    limit["p"] = ps;
    limit["scaled_core_corrected"] = scaled;
    limit["scaled_raw"] = scaled_raw;
    const double extrap = richardson(ps, scaled, 2.0);
    limit["richardson"] = extrap;
    limit["richardson_raw"] = richardson(ps, scaled_raw, 2.0);
    limit["target"] = last.e_sg_2;
    const double limit_tol = last.e_sg_2 > kPi * (1.0 + 1e-9) ? 0.07 : 0.05;
    if (last.e_sg_2 > 0.0)
        add(2.0, BoundRow{upper_row_abs("first_order_limit", std::abs(extrap - last.e_sg_2), 0.0,
                                        limit_tol * last.e_sg_2)});
    else
        add(2.0, upper_row_abs("first_order_limit", std::abs(extrap), 0.0, 0.05));

    // trajectories
    Json traj = Json::array();
    for (const auto& r : reps) {
        Json t;
        t["p"] = r.p;
        Json pts = Json::array();
        for (const auto& s : r.singularities.points) {
            Json q;
            q["x"] = s.location.x;
            q["y"] = s.location.y;
            q["charge"] = s.charge.windings;
            pts.push_back(q);
        }
        t["points"] = pts;
        double sep = 0.0;
        if (r.singularities.points.size() >= 2) {
            sep = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < r.singularities.points.size(); ++i)
                for (std::size_t j = i + 1; j < r.singularities.points.size(); ++j)
                    sep = std::min(sep, dist(r.singularities.points[i].location, r.singularities.points[j].location));
        }
        t["min_mutual_distance"] = sep;
        traj.push_back(t);
    }

    // narrow convergence: mass of (2-p)|Du|^p/p near the detected vortices
    Json narrow = Json::array();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& r = reps[k];
        if (r.singularities.empty()) continue;
        const double p = r.p, total = (2.0 - p) * r.core_corrected_energy;
        for (double rad : {0.05, 0.1, 0.2}) {
            Region reg;
            for (const auto& s : r.singularities.points) reg.include.push_back({s.location, rad});
            const double mass = (2.0 - p) * core_corrected_region_energy(steps[k].result.field, r.singularities, p, reg);
            Json row;
            row["p"] = p;
            row["radius"] = rad;
            row["mass"] = mass;
            row["fraction_of_total"] = mass / total;
            row["fraction_of_limit"] = last.e_sg_2 > 0.0 ? Json(mass / last.e_sg_2) : Json(nullptr);
            narrow.push_back(row);
            if (k + 1 == n && rad == 0.1 && last.e_sg_2 > 0.0 && p >= 1.95)
                add(p, lower_row_abs("narrow_concentration", mass / last.e_sg_2, 0.9, 0.0));
        }
    }

    // strong convergence away from the vortices of the finest field
    Json strong = Json::array();
    {
        Region away;
        for (const auto& s : sing_star.points) away.exclude.push_back({s.location, 0.2});
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double p = steps[k].p;
            Json row;
            row["p"] = p;
            row["value"] = p * p_energy_region(steps[k].result.field.difference(ustar), p, away);
            strong.push_back(row);
        }
    }

    // sandwich between the renormalized energy of the finest field and the H-term
    if (last.e_ren_limit) {
        const double eren = *last.e_ren_limit, H = last.h_term;
        for (const auto& r : reps) {
            const double lhs = r.core_corrected_energy - last.e_sg_2 / (2.0 - r.p);
            add(r.p, lower_row_abs("upper_bound_sandwich_low", lhs, eren, 0.1));
            add(r.p, upper_row_abs("upper_bound_sandwich_high", lhs, eren + H, 0.1 * (1.0 + H)));
            // same window with the exact p-cost of the cores subtracted instead of the p = 2 one
            const double lhs_p = r.core_corrected_energy - singular_p_part(r.singularities, r.p);
            add(r.p, lower_row_abs("p_sandwich_low", lhs_p, eren, 0.1));
            add(r.p, upper_row_abs("p_sandwich_high", lhs_p, eren + H, 0.1 * (1.0 + H)));
        }
    }

    // configuration energy at the detected vortices, and the position scan
    Json config = nullptr;
    const double rho = cfg.scan ? cfg.scan->rho : 0.1;
    if (!sing_star.empty()) {
        config = Json::object();
        config["rho"] = rho;
        if (rho < sing_star.separation_radius) {
            try {
                ConfigEnergyOptions co{cfg.solver, cfg.init};
                auto ce = config_energy(S.grid, S.target, S.datum, sing_star, rho, co);
                config["value"] = ce.value;
                config["error"] = nullptr;
                if (last.e_ren_limit) {
                    const double allow = 0.1 * (1.0 + std::abs(ce.value));
                    add(2.0, upper_row_abs("configuration_energy_below_renormalized", ce.value, *last.e_ren_limit,
                                           allow));
                }
            } catch (const Error& e) {
                config["error"] = e.what();
            }
        } else {
            config["error"] = "rho exceeds the separation radius";
        }
    }

    Json scan = nullptr;
    if (cfg.scan) {
        scan = Json::object();
        GridPtr grid = cfg.scan->h > 0.0 ? std::make_shared<const DomainGrid>(cfg.domain, cfg.scan->h) : S.grid;
        const auto charges = resolution_charges(enclosed_charge(S));
        Json entries = Json::array();
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < cfg.scan->points.size(); ++k) {
            const auto& pts = cfg.scan->points[k];
            if (pts.size() != charges.size())
                throw ConfigError("scan.points: each configuration needs " + std::to_string(charges.size()) +
                                  " points");
            std::vector<Singularity> sv;
            for (std::size_t i = 0; i < pts.size(); ++i) sv.push_back({pts[i], charges[i]});
            Json e;
            Json pj = Json::array();
            for (auto v : pts) pj.push_back(Json::array({v.x, v.y}));
            e["points"] = pj;
            try {
                auto conf = make_configuration(cfg.domain, sv);
                if (!(cfg.scan->rho < conf.separation_radius)) throw Error("rho exceeds the separation radius");
                ConfigEnergyOptions co{cfg.solver, cfg.init};
                auto ce = config_energy(grid, S.target, S.datum, conf, cfg.scan->rho, co);
                e["value"] = ce.value;
                e["error"] = nullptr;
                if (ce.value < best) {
                    best = ce.value;
                    best_k = k;
                }
            } catch (const Error& err) {
                e["value"] = nullptr;
                e["error"] = err.what();
            }
            entries.push_back(e);
        }
        scan["rho"] = cfg.scan->rho;
        scan["h"] = grid->spacing();
        scan["entries"] = entries;
        if (std::isfinite(best)) {
            scan["minimizer"] = best_k;
            const auto& pts = cfg.scan->points[best_k];
            // matching distance: each detected vortex to its nearest scan point
            if (sing_star.points.size() == pts.size()) {
                double worst = 0.0;
                for (const auto& s : sing_star.points) {
                    double d = std::numeric_limits<double>::infinity();
                    for (auto v : pts) d = std::min(d, dist(s.location, v));
                    worst = std::max(worst, d);
                }
                scan["vortex_distance"] = worst;
                add(2.0, upper_row_abs("vortex_near_scan_minimizer", worst, 0.0, 0.05));
            }
        }
    }

    // assemble
    Json bounds = Json::array();
    for (const auto& [p, r] : rows) {
        bounds.push_back(row_json(r, p));
        BoundRow named = r;
        named.name = r.name + "@p" + p_label(p);
        res.certificates.push_back(named);
        res.all_pass = res.all_pass && r.pass;
    }
    Json j;
    j["seed"] = cfg.seed;
    j["parallel"] = parallel;
    j["config"] = cfg.raw;
    j["ladder"] = cfg.ladder;
    j["reports"] = reports;
    j["growth"] = growth;
    j["limit"] = limit;
    j["trajectories"] = traj;
    j["narrow_convergence"] = narrow;
    j["strong_convergence"] = strong;
    j["configuration"] = config;
    j["scan"] = scan;
    j["bounds"] = bounds;
    j["all_pass"] = res.all_pass;
    res.report = j;
    if (write_files) {
        write_text(out / "study.json", dump_json(j));
        std::ostringstream os;
        write_certificates(os, res.certificates);
        write_text(out / "certificates.csv", os.str());
    }
    return res;
}

}  // namespace pharm
