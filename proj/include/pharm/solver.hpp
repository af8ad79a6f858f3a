#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "pharm/field.hpp"

namespace pharm {

struct SolverOptions {
    int max_iters = 4000;
    double grad_tol = 1e-3;  // sup-norm of the projected gradient divided by h^2
    double initial_step = 1.0;
    double backtracking_factor = 0.5;
    double armijo_c = 1e-4;
    double epsilon = 1e-6;  // regularization (|Du|^2 + eps^2)^{p/2}/p
    bool conjugate = true;  // false: plain preconditioned projected gradient

    void validate(double h) const;
};

struct IterationRecord {
    int iter = 0;
    double energy = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
};

struct SolveResult {
    DiscreteField field;
    double p = 0.0;
    double energy = 0.0;  // regularized objective at the returned field
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool max_iters_reached = false;  // warning, not an error
    double epsilon = 0.0;
    std::vector<IterationRecord> log;
};

SolveResult minimize_p_harmonic(const DiscreteField& init, double p, const SolverOptions& opts);

void write_iteration_log(std::ostream& os, const std::vector<IterationRecord>& log);

// Boundary datum as a function of the polar angle about the domain centre.
struct BoundaryDatum {
    std::function<void(double theta, std::span<double>)> g;
    HomotopyCharge charge;
};

// "degree:<d>" | "winding:<w1>,<w2>" | "constant" | "bump:<amplitude>"
BoundaryDatum parse_boundary(const std::string& spec, const TargetManifold& target);

struct InitOptions {
    double split_radius = 0.5;  // ring radius for |winding| >= 2 seeds
    double noise = 0.0;         // tangential perturbation amplitude
    std::uint64_t seed = 0;
};

// Field carrying the boundary datum with an extension in the right homotopy sector:
// radial extension for unit windings, split unit vortices for larger windings,
// harmonic extension for zero winding and Euclidean components.
DiscreteField initial_field(GridPtr grid, const TargetManifold& target, const BoundaryDatum& datum,
                            const InitOptions& opts = {});

// Componentwise discrete harmonic extension of the boundary values (not projected).
std::vector<double> harmonic_extension(const DiscreteField& boundary_field, std::span<const int> components);

struct ContinuationLadder {
    std::vector<double> exponents;
    std::vector<SolverOptions> options;  // one entry shared, or one per exponent

    void validate() const;
    const SolverOptions& options_for(std::size_t k) const;
};

struct LadderStep {
    double p = 0.0;
    SolveResult result;
};

// Warm-started sequentially; on_step (if set) runs after each step in ladder order.
std::vector<LadderStep> run_ladder(const DiscreteField& init, const ContinuationLadder& ladder,
                                   const std::function<void(const LadderStep&)>& on_step = {});

}  // namespace pharm
