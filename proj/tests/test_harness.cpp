#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pharm/harness.hpp"

using namespace pharm;
namespace fs = std::filesystem;

namespace {

Json small_config(const std::string& boundary, const std::string& out) {
    Json j = Json::parse(R"({"h": 0.03125, "target": "circle", "ladder": [1.6, 1.8], "delta": 0.4, "seed": 9})");
    j["boundary"] = boundary;
    j["out"] = out;
    return j;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::path(PHARM_TEST_TMP) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PHARM_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
    auto c = parse_config(small_config("degree:1", "x"));
    CHECK(c.ladder == std::vector<double>{1.6, 1.8});
    CHECK(c.seed == 9);
    CHECK(c.init.seed == 9);
    CHECK(c.h == 0.03125);
    CHECK(c.domain.kind == DomainKind::UnitDisk);

    auto rect = parse_config(Json::parse(
        R"({"domain": {"kind": "rectangle", "width": 2, "height": 1}, "ladder": [1.5], "solver": {"max_iters": 10}})"));
    CHECK(rect.domain.kind == DomainKind::Rectangle);
    CHECK(rect.solver.max_iters == 10);

    auto bad = [](const char* text) { return parse_config(Json::parse(text)); };
    CHECK_THROWS_AS(bad(R"({})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.7, 1.5]})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.5, 2.0]})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.5], "delta": 0})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.5], "colour": 1})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.5], "target": "sphere"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.5], "boundary": "winding:1,1"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.5], "domain": {"kind": "annulus", "r_in": 1, "r_out": 0.5}})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.5], "seed": -1})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.5], "solver": {"armijo_c": 0.9}})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"ladder": [1.5], "scan": {"points": []}})"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("shipped configs parse") {
    for (const char* name : {"disk_deg1", "disk_deg2", "constant", "torus", "annulus"})
        CHECK_NOTHROW(load_config(fs::path(PHARM_CONFIG_DIR) / (std::string(name) + ".json")));
}

TEST_CASE("json output format") {
    Json j;
    j["b"] = 0.1;
    j["a"] = 3;
    j["nan"] = std::nan("");
    j["list"] = Json::array({1.0 / 3.0, true, "s"});
    const std::string s = dump_json(j);
    CHECK(s == "{\n  \"b\": 0.10000000000000001,\n  \"a\": 3,\n  \"nan\": null,\n  \"list\": [\n    "
               "0.33333333333333331,\n    true,\n    \"s\"\n  ]\n}\n");
    CHECK(Json::parse(s)["list"][0].get<double>() == 1.0 / 3.0);
    CHECK(p_label(1.9) == "1.9");
    CHECK(p_label(1.95) == "1.95");
    CHECK(p_label(2.0) == "2");
}

TEST_CASE("richardson and seeds") {
    auto f = [](double x) { return 3.0 - 2.0 * (2.0 - x) + 0.5 * (2.0 - x) * (2.0 - x); };
    std::vector<double> xs{1.5, 1.7, 1.8, 1.9}, ys;
    for (double x : xs) ys.push_back(f(x));
    CHECK(richardson(xs, ys, 2.0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(richardson({1.0, 2.0}, {1.0, 3.0}, 3.0) == doctest::Approx(5.0));
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("verify suites") {
    CHECK_THROWS_AS(run_suite("bogus", 0), ConfigError);
    auto r = run_suite("energetics", 0);
    CHECK(r.pass);
    CHECK(r.summary["suite"] == "energetics");
    CHECK(r.summary["checks"].size() > 5);
}

TEST_CASE("constant boundary study") {
    auto dir = scratch("constant");
    auto cfg = parse_config(small_config("constant", dir.string()));
    auto res = run_study(cfg, false);
    const auto& rep = res.report["reports"][0];
    CHECK(rep["e_ren_skipped"] == "no charges");
    CHECK(rep["e_sg_p"].get<double>() == 0.0);
    CHECK(rep["e_sg_2"].get<double>() == 0.0);
    CHECK(rep["singularities"].empty());
    CHECK(rep["e_ren_limit"].is_null());
    CHECK(res.report["limit"]["richardson"].get<double>() == 0.0);
    CHECK(fs::exists(dir / "study.json"));
    CHECK(fs::exists(dir / "certificates.csv"));
}

TEST_CASE("degree-1 study is reproducible and records the seed") {
    auto a = scratch("deg1_a"), b = scratch("deg1_b");
    auto ca = parse_config(small_config("degree:1", a.string()));
    auto cb = parse_config(small_config("degree:1", b.string()));
    auto ra = run_study(ca, false);
    run_study(cb, false);
    for (const char* f : {"field_p1.6.csv", "iterlog_p1.8.csv", "report_p1.8.json", "growth_p1.6.json", "certificates.csv"})
        CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    // study.json differs only by the output directory it echoes
    auto ja = Json::parse(slurp(a / "study.json")), jb = Json::parse(slurp(b / "study.json"));
    ja["config"].erase("out");
    jb["config"].erase("out");
    CHECK(ja == jb);
    CHECK(ja["seed"] == 9);
    for (const auto& r : ja["reports"]) CHECK(r["seed"] == 9);
    CHECK(slurp(a / "certificates.csv").rfind("bound_name,lhs,rhs,slack,pass\n", 0) == 0);
    CHECK(slurp(a / "field_p1.6.csv").rfind("x,y,inside,v1,v2\n", 0) == 0);
    CHECK(slurp(a / "study.json").find('\r') == std::string::npos);
    // one unit vortex at every ladder point
    for (const auto& t : ra.report["trajectories"]) {
        REQUIRE(t["points"].size() == 1);
        CHECK(t["points"][0]["charge"] == Json::array({1}));
    }
    CHECK(ra.report["narrow_convergence"].size() == 6);
    CHECK(ra.report["strong_convergence"].size() == 1);
}

TEST_CASE("parallel study is deterministic") {
    auto a = scratch("par_a"), b = scratch("par_b");
    run_study(parse_config(small_config("degree:1", a.string())), true);
    run_study(parse_config(small_config("degree:1", b.string())), true);
    CHECK(slurp(a / "field_p1.8.csv") == slurp(b / "field_p1.8.csv"));
    CHECK(slurp(a / "certificates.csv") == slurp(b / "certificates.csv"));
}

TEST_CASE("command line") {
    auto dir = scratch("cli");
    const fs::path cfg = dir / "cfg.json";
    write_text(cfg, dump_json(small_config("degree:1", (dir / "out").string())));
    CHECK(run_cli("solve --config /nonexistent.json") == 3);
    CHECK(run_cli("verify bogus") == 3);
    CHECK(run_cli("frobnicate") == 3);
    CHECK(run_cli("solve --config " + cfg.string() + " --p 2.5") == 3);
    CHECK(run_cli("solve --config " + cfg.string() + " --p 1.9") == 0);
    CHECK(fs::exists(dir / "out" / "field_p1.9.csv"));
    CHECK(fs::exists(dir / "out" / "iterlog_p1.9.csv"));
    auto rep = Json::parse(slurp(dir / "out" / "report_p1.9.json"));
    REQUIRE(rep["singularities"].size() == 1);
    CHECK(rep["singularities"][0]["charge"] == Json::array({1}));
    // energy and growballs reuse the stored snapshot
    CHECK(run_cli("energy --config " + cfg.string() + " --p 1.9") == 0);
    CHECK(Json::parse(slurp(dir / "out" / "report_p1.9.json"))["total_energy"] == rep["total_energy"]);
    CHECK(run_cli("growballs --config " + cfg.string() + " --p 1.9") == 0);
    CHECK(fs::exists(dir / "out" / "growth_p1.9.json"));
    CHECK(run_cli("verify scalar --seed 3") == 0);
    CHECK(run_cli("study --config " + cfg.string() + " --out " + (dir / "study").string() + " --seed 4") == 0);
    CHECK(Json::parse(slurp(dir / "study" / "study.json"))["seed"] == 4);
}
