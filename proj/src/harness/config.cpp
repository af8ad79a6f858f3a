#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pharm/harness.hpp"

namespace pharm {

namespace {

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double number(const Json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError(key + ": expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(key + ": not finite");
    return v;
}

double positive(const Json& j, const std::string& key) {
    double v = number(j, key);
    if (!(v > 0.0)) throw ConfigError(key + ": must be positive");
    return v;
}

std::string text(const Json& j, const std::string& key) {
    if (!j.is_string()) throw ConfigError(key + ": expected a string");
    return j.get<std::string>();
}

Vec2 point(const Json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(key + ": expected [x, y]");
    return {number(j[0], key), number(j[1], key)};
}

DomainShape parse_domain(const Json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "disk") return DomainShape::unit_disk();
        throw ConfigError("domain: only \"disk\" may be given as a bare name");
    }
    check_keys(j, "domain", {"kind", "width", "height", "r_in", "r_out"});
    if (!j.contains("kind")) throw ConfigError("domain: missing kind");
    std::string kind = text(j["kind"], "domain.kind");
    if (kind == "disk") return DomainShape::unit_disk();
    if (kind == "rectangle") {
        if (!j.contains("width") || !j.contains("height")) throw ConfigError("domain: rectangle needs width and height");
        return DomainShape::rectangle(positive(j["width"], "domain.width"), positive(j["height"], "domain.height"));
    }
    if (kind == "annulus") {
        if (!j.contains("r_in") || !j.contains("r_out")) throw ConfigError("domain: annulus needs r_in and r_out");
        double a = positive(j["r_in"], "domain.r_in"), b = positive(j["r_out"], "domain.r_out");
        if (!(a < b)) throw ConfigError("domain: annulus needs r_in < r_out");
        return DomainShape::annulus(a, b);
    }
    throw ConfigError("domain: unknown kind '" + kind + "'");
}

SolverOptions parse_solver(const Json& j) {
    check_keys(j, "solver",
               {"max_iters", "grad_tol", "initial_step", "backtracking_factor", "armijo_c", "epsilon", "conjugate"});
    SolverOptions o;
    if (j.contains("max_iters")) {
        if (!j["max_iters"].is_number_integer()) throw ConfigError("solver.max_iters: expected an integer");
        o.max_iters = j["max_iters"].get<int>();
    }
    if (j.contains("grad_tol")) o.grad_tol = number(j["grad_tol"], "solver.grad_tol");
    if (j.contains("initial_step")) o.initial_step = number(j["initial_step"], "solver.initial_step");
    if (j.contains("backtracking_factor"))
        o.backtracking_factor = number(j["backtracking_factor"], "solver.backtracking_factor");
    if (j.contains("armijo_c")) o.armijo_c = number(j["armijo_c"], "solver.armijo_c");
    if (j.contains("epsilon")) o.epsilon = number(j["epsilon"], "solver.epsilon");
    if (j.contains("conjugate")) {
        if (!j["conjugate"].is_boolean()) throw ConfigError("solver.conjugate: expected a boolean");
        o.conjugate = j["conjugate"].get<bool>();
    }
    return o;
}

}  // namespace

StudyConfig parse_config(const Json& j) {
    check_keys(j, "config",
               {"domain", "h", "target", "boundary", "ladder", "solver", "init", "delta", "seed", "out", "scan"});
    StudyConfig c;
    if (j.contains("domain")) c.domain = parse_domain(j["domain"]);
    if (j.contains("h")) {
        c.h = positive(j["h"], "h");
        if (c.h > 0.25) throw ConfigError("h: at most 1/4");
    }
    if (j.contains("target")) c.target = text(j["target"], "target");
    if (j.contains("boundary")) c.boundary = text(j["boundary"], "boundary");
    if (!j.contains("ladder")) throw ConfigError("ladder: missing");
    if (!j["ladder"].is_array() || j["ladder"].empty()) throw ConfigError("ladder: expected a nonempty array");
    for (const auto& v : j["ladder"]) {
        double p = number(v, "ladder");
        if (!(p > 1.0 && p < 2.0)) throw ConfigError("ladder: exponents must lie in (1,2)");
        if (!c.ladder.empty() && !(p > c.ladder.back())) throw ConfigError("ladder: exponents must increase strictly");
        c.ladder.push_back(p);
    }
    if (j.contains("solver")) c.solver = parse_solver(j["solver"]);
    try {
        c.solver.validate(c.h);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (j.contains("init")) {
        const Json& in = j["init"];
        check_keys(in, "init", {"split_radius", "noise"});
        if (in.contains("split_radius")) c.init.split_radius = positive(in["split_radius"], "init.split_radius");
        if (in.contains("noise")) {
            c.init.noise = number(in["noise"], "init.noise");
            if (c.init.noise < 0.0) throw ConfigError("init.noise: must be nonnegative");
        }
    }
    if (j.contains("delta")) c.delta = positive(j["delta"], "delta");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            throw ConfigError("seed: expected a nonnegative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.init.seed = c.seed;
    if (j.contains("out")) c.out = text(j["out"], "out");
    if (j.contains("scan")) {
        const Json& s = j["scan"];
        check_keys(s, "scan", {"rho", "h", "points"});
        ScanSpec spec;
        if (s.contains("rho")) spec.rho = positive(s["rho"], "scan.rho");
        if (s.contains("h")) spec.h = positive(s["h"], "scan.h");
        if (!s.contains("points") || !s["points"].is_array() || s["points"].empty())
            throw ConfigError("scan.points: expected a nonempty array");
        for (const auto& cfg : s["points"]) {
            std::vector<Vec2> pts;
            if (!cfg.is_array() || cfg.empty()) throw ConfigError("scan.points: expected arrays of [x, y]");
            for (const auto& pt : cfg) pts.push_back(point(pt, "scan.points"));
            spec.points.push_back(std::move(pts));
        }
        c.scan = std::move(spec);
    }
    // names are checked here so that a bad target or boundary is a configuration error
    try {
        TargetManifold t = TargetManifold::parse(c.target);
        (void)parse_boundary(c.boundary, t);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    c.raw = j;
    return c;
}

StudyConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return parse_config(j);
}

namespace {

void dump(const Json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [key, val] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += inner + Json(key).dump() + ": ";
                dump(val, out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t k = 0; k < j.size(); ++k) {
                if (k) out += ",\n";
                out += inner;
                dump(j[k], out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case Json::value_t::number_float: {
            double v = j.get<double>();
            out += std::isfinite(v) ? fmt17(v) : "null";
            return;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string dump_json(const Json& j) {
    std::string out;
    dump(j, out, 0);
    out += "\n";
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

std::string p_label(double p) {
    // shortest %g that reads back exactly
    for (int digits = 1; digits <= 17; ++digits) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.*g", digits, p);
        if (std::strtod(buf, nullptr) == p) return buf;
    }
    return fmt17(p);
}

}  // namespace pharm
