#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pharm/field.hpp"
#include "pharm/manifold.hpp"
#include "pharm/solver.hpp"

namespace pharm {

struct Resolution {
    std::vector<HomotopyCharge> charges;  // sorted
};

struct ResolutionResult {
    Resolution resolution;
    double value = 0.0;
    int optimal_count = 0;  // distinct optimal multisets (ties within 1e-12 relative)
};

// cost of one charge: lambda^p / (p (2 pi)^{p-1})
double charge_cost(const HomotopyCharge& c, double p);

// Exhaustive search; p >= 1 (conjugate exponents above 2 are used by ball growth).
ResolutionResult minimal_resolution(const HomotopyCharge& total, double p);
std::vector<Resolution> all_minimal_resolutions(const HomotopyCharge& total, double p);
double singular_energy(const HomotopyCharge& total, double p);

double h_term(std::span<const double> lambdas);

enum class RenormRoute { Limit, Integral };

struct RenormOptions {
    double core_cells = 4.0;  // smallest radius of the ladder, in cells
    double sigma = 0.0;       // largest radius; 0 picks separation_radius/2
};

struct RenormEstimate {
    double value = 0.0;         // extrapolated intercept
    double raw_smallest = 0.0;  // value at the smallest radius
    double alpha = 0.0;         // fitted exponent (0 when the fit was rejected)
    bool extrapolated = false;
    std::vector<double> radii, values;
};

// Fit v(r) = v0 + c r^alpha through the three smallest radii of a halving ladder.
RenormEstimate extrapolate_ladder(std::vector<double> radii, std::vector<double> values);

RenormEstimate renormalized_energy(const DiscreteField& u, const SingularityConfiguration& sing, RenormRoute route,
                                   const RenormOptions& opts = {});
double renormalized_energy_value(const DiscreteField& u, const SingularityConfiguration& sing, RenormRoute route);

// energy outside the cores minus sum lambda^p (1 - r^{2-p}) / ((2pi)^{p-1} p (2-p)) on the radius ladder
RenormEstimate p_renormalized_energy(const DiscreteField& u, const SingularityConfiguration& sing, double p,
                                     const RenormOptions& opts = {});
// sum lambda_i^p / ((2 pi)^{p-1} p (2-p))
double singular_p_part(const SingularityConfiguration& sing, double p);
// p-energy with analytic vortex cores: the Q1 energy outside disks of radius core_cells*h
// plus lambda^p r^{2-p} / ((2 pi)^{p-1} p (2-p)) for each core
double core_corrected_energy(const DiscreteField& u, const SingularityConfiguration& sing, double p,
                             double core_cells = 4.0);
// same, restricted to a region; only cores whose centre lies in the region are added back
double core_corrected_region_energy(const DiscreteField& u, const SingularityConfiguration& sing, double p,
                                    const Region& region, double core_cells = 4.0);

struct ConfigEnergyOptions {
    SolverOptions solver{};
    InitOptions init{};
};

struct ConfigEnergyResult {
    double value = 0.0;
    double dirichlet = 0.0;
    SolveResult solve;
};

ConfigEnergyResult config_energy(GridPtr grid, const TargetManifold& target, const BoundaryDatum& g,
                                 const SingularityConfiguration& sing, double rho,
                                 const ConfigEnergyOptions& opts = {});

struct ContinuityRow {
    double p = 0.0;
    double f = 0.0;
    int charges = 0;
    int optimal_count = 0;
};

struct ContinuityReport {
    std::vector<ContinuityRow> rows;
    double lipschitz_bound = 0.0;
    double worst_ratio = 0.0;  // max |f(p)-f(q)| / (L |p-q|)
    bool pass = true;
};

ContinuityReport check_p_continuity(const HomotopyCharge& total, std::span<const double> p_grid, double systole);

// Scalar facts
bool hanner_predicate_violated(double p, double x);  // 2 >= (1+x)^p + |1-x|^p with x > 0
struct SandwichResult {
    double integral = 0.0, lower = 0.0, upper = 0.0;
    bool pass = false;
};
// integral over the unit disk of | 1/|x| - 1/|x-a| |^p with a = (|a|, 0)
SandwichResult sandwich_check(double a, double p);

}  // namespace pharm
