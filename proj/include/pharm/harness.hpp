#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pharm/ballgrowth.hpp"
#include "pharm/energetics.hpp"
#include "pharm/solver.hpp"

#include "json.hpp"

namespace pharm {

using Json = nlohmann::ordered_json;

// Thrown for malformed or inconsistent configuration (exit code 3).
class ConfigError : public Error {
public:
    using Error::Error;
};

struct ScanSpec {
    double rho = 0.1;
    double h = 0.0;  // 0: the study spacing
    // candidate configurations; points take the charges of a minimal resolution in order
    std::vector<std::vector<Vec2>> points;
};

struct StudyConfig {
    DomainShape domain = DomainShape::unit_disk();
    double h = 1.0 / 128.0;
    std::string target = "circle";
    std::string boundary = "degree:1";
    std::vector<double> ladder;
    SolverOptions solver;
    InitOptions init;
    double delta = 0.5;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::optional<ScanSpec> scan;
    Json raw;  // as parsed, echoed into study.json
};

StudyConfig parse_config(const Json& j);
StudyConfig load_config(const std::filesystem::path& path);

// Numbers as %.17g, non-finite as null, LF line endings.
std::string dump_json(const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string p_label(double p);  // shortest decimal, as used in file names

struct EnergyReport {
    std::uint64_t seed = 0;
    double p = 0.0;
    double total_energy = 0.0;  // Q1 energy of the discrete field
    double core_corrected_energy = 0.0;
    double e_sg_p = 0.0, e_sg_2 = 0.0;
    std::optional<double> e_ren_limit, e_ren_limit_raw, e_ren_integral, e_ren_p;
    std::string e_ren_skipped;  // reason when the renormalized energies are not defined
    double h_term = 0.0;
    double weak_lp_quasinorm = 0.0;  // sup_t t^2 vol{|Du| > t}
    SingularityConfiguration singularities;
    std::vector<Vec2> unresolved;
    std::vector<BoundRow> bounds;
    // solver summary
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;

    Json to_json() const;
};

EnergyReport energy_report(const DiscreteField& u, double p, const HomotopyCharge& boundary_charge,
                           std::uint64_t seed);
void attach_solve(EnergyReport& r, const SolveResult& s);

// quadratic through the last three points, evaluated at x
double richardson(const std::vector<double>& xs, const std::vector<double>& ys, double x);

struct Setup {
    GridPtr grid;
    TargetManifold target;
    BoundaryDatum datum;
};
Setup make_setup(const StudyConfig& cfg);
// charge the datum encloses: on an annulus the same datum sits on both circles, so zero
HomotopyCharge enclosed_charge(const Setup& s);

// per-point seeds for the parallel ladder
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct StudyResult {
    Json report;
    std::vector<BoundRow> certificates;
    bool all_pass = true;
};

StudyResult run_study(const StudyConfig& cfg, bool parallel, bool write_files = true);

// Invariant suites: geometry, scalar, energetics, all. Unknown names throw ConfigError.
struct SuiteResult {
    Json summary;
    bool pass = true;
};
SuiteResult run_suite(const std::string& name, std::uint64_t seed);

}  // namespace pharm
