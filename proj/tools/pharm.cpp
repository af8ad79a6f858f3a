#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pharm/harness.hpp"

namespace fs = std::filesystem;
using namespace pharm;

namespace {

constexpr int kOk = 0, kSolverError = 2, kConfigError = 3;

struct Args {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> p;
    bool parallel = false;
    std::string suite;
};

StudyConfig load(const Args& a) {
    StudyConfig cfg = load_config(a.config);
    if (!a.out.empty()) {
        cfg.out = a.out;
        cfg.raw["out"] = a.out;
    }
    if (a.seed) {
        cfg.seed = *a.seed;
        cfg.init.seed = *a.seed;
        cfg.raw["seed"] = *a.seed;
    }
    return cfg;
}

double chosen_p(const Args& a, const StudyConfig& cfg) {
    const double p = a.p ? *a.p : cfg.ladder.back();
    if (!(p > 1.0 && p <= 2.0)) throw ConfigError("--p must lie in (1, 2]");
    return p;
}

SolveResult solve_at(const Setup& S, const StudyConfig& cfg, double p) {
    return minimize_p_harmonic(initial_field(S.grid, S.target, S.datum, cfg.init), p, cfg.solver);
}

// the stored snapshot for this p if there is one, else a fresh solve
DiscreteField field_for(const Setup& S, const StudyConfig& cfg, double p, std::optional<SolveResult>& solved) {
    const fs::path snap = fs::path(cfg.out) / ("field_p" + p_label(p) + ".csv");
    if (fs::exists(snap)) {
        std::ifstream in(snap);
        return read_snapshot(in, S.grid, S.target);
    }
    solved = solve_at(S, cfg, p);
    return solved->field;
}

int cmd_solve(const Args& a) {
    StudyConfig cfg = load(a);
    const double p = chosen_p(a, cfg);
    Setup S = make_setup(cfg);
    SolveResult r = solve_at(S, cfg, p);
    fs::create_directories(cfg.out);
    const std::string tag = p_label(p);
    EnergyReport rep = energy_report(r.field, p, enclosed_charge(S), cfg.seed);
    attach_solve(rep, r);
    std::ostringstream f, l;
    write_snapshot(f, r.field);
    write_iteration_log(l, r.log);
    write_text(fs::path(cfg.out) / ("field_p" + tag + ".csv"), f.str());
    write_text(fs::path(cfg.out) / ("iterlog_p" + tag + ".csv"), l.str());
    write_text(fs::path(cfg.out) / ("report_p" + tag + ".json"), dump_json(rep.to_json()));
    if (r.max_iters_reached) std::cerr << "warning: max_iters reached at p=" << tag << "\n";
    std::cout << "p=" << tag << " energy=" << fmt17(rep.total_energy) << " iterations=" << r.iterations
              << " singularities=" << rep.singularities.points.size() << "\n";
    return kOk;
}

int cmd_study(const Args& a) {
    StudyConfig cfg = load(a);
    auto res = run_study(cfg, a.parallel);
    int failed = 0;
    for (const auto& r : res.certificates) failed += r.pass ? 0 : 1;
    std::cout << "study written to " << cfg.out << ": " << res.certificates.size() << " bound rows, " << failed
              << " failed\n";
    return kOk;
}

int cmd_growballs(const Args& a) {
    StudyConfig cfg = load(a);
    const double p = chosen_p(a, cfg);
    if (!(p < 2.0)) throw ConfigError("growballs needs --p < 2");
    Setup S = make_setup(cfg);
    std::optional<SolveResult> solved;
    DiscreteField u = field_for(S, cfg, p, solved);
    DiskCollection c = grow_balls(u, p, cfg.delta);
    fs::create_directories(cfg.out);
    std::ostringstream os;
    write_growth_trace(os, c);
    write_text(fs::path(cfg.out) / ("growth_p" + p_label(p) + ".json"), os.str());
    auto sing = detect_singularities(u).config;
    std::vector<BoundRow> rows;
    for (auto& r : annulus_rows(u, c, p, 0.10)) rows.push_back(r);
    for (auto& r : circle_rows(u, c, p, 0.05)) rows.push_back(r);
    if (!sing.empty()) rows.push_back(disk_union_row(u, c, sing, 0.10));
    std::ostringstream cs;
    write_certificates(cs, rows);
    write_text(fs::path(cfg.out) / ("growth_certificates_p" + p_label(p) + ".csv"), cs.str());
    std::cout << "disks=" << c.disks.size() << " radius_sum=" << fmt17(c.radius_sum()) << " events=" << c.history.size()
              << "\n";
    return kOk;
}

int cmd_energy(const Args& a) {
    StudyConfig cfg = load(a);
    const double p = chosen_p(a, cfg);
    Setup S = make_setup(cfg);
    std::optional<SolveResult> solved;
    DiscreteField u = field_for(S, cfg, p, solved);
    EnergyReport rep = energy_report(u, p, enclosed_charge(S), cfg.seed);
    if (solved) attach_solve(rep, *solved);
    fs::create_directories(cfg.out);
    const std::string text = dump_json(rep.to_json());
    write_text(fs::path(cfg.out) / ("report_p" + p_label(p) + ".json"), text);
    std::cout << text;
    return kOk;
}

int cmd_verify(const Args& a) {
    auto r = run_suite(a.suite, a.seed.value_or(0));
    const std::string text = dump_json(r.summary);
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        write_text(fs::path(a.out) / ("verify_" + a.suite + ".json"), text);
    }
    std::cout << text;
    return r.pass ? kOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"p-harmonic maps: minimization, ball growth and energy certificates"};
    app.require_subcommand(1);
    Args a;
    auto common = [&](CLI::App* sub, bool need_config) {
        auto* c = sub->add_option("--config", a.config, "study configuration (JSON)");
        if (need_config) c->required();
        sub->add_option("--out", a.out, "output directory (overrides the config)");
        sub->add_option("--seed", a.seed, "master seed (overrides the config)");
    };
    auto* solve = app.add_subcommand("solve", "one minimization at --p");
    common(solve, true);
    solve->add_option("--p", a.p, "exponent (default: last ladder entry)");
    auto* study = app.add_subcommand("study", "ladder, ball growth and all bound checks");
    common(study, true);
    study->add_flag("--parallel", a.parallel, "cold-start ladder points concurrently");
    auto* grow = app.add_subcommand("growballs", "expansion of circles on a solved field");
    common(grow, true);
    grow->add_option("--p", a.p, "exponent (default: last ladder entry)");
    auto* energy = app.add_subcommand("energy", "energy report of a solved field");
    common(energy, true);
    energy->add_option("--p", a.p, "exponent (default: last ladder entry)");
    auto* verify = app.add_subcommand("verify", "invariant suites");
    common(verify, false);
    verify->add_option("suite", a.suite, "geometry | scalar | energetics | all")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*solve) return cmd_solve(a);
        if (*study) return cmd_study(a);
        if (*grow) return cmd_growballs(a);
        if (*energy) return cmd_energy(a);
        return cmd_verify(a);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolverError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSolverError;
    }
}
