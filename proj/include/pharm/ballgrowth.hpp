#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pharm/field.hpp"

namespace pharm {

struct Detection {
    SingularityConfiguration config;
    std::vector<Vec2> unresolved;  // centres of plaquettes with an angular gap >= pi
};

// Plaquette windings per circle factor, clusters by 8-connectivity, winding-weighted centroids.
// Clusters touching unresolved plaquettes take their charge from the smallest resolvable circle.
Detection detect_singularities(const DiscreteField& u);

struct MergeStep {
    int first = 0, second = 0;  // indices in the list before the merge
    Disk result;
};

struct MergeResult {
    std::vector<Disk> disks;
    std::vector<MergeStep> steps;
    std::vector<int> owner;  // input disk -> output disk
};

// Replace the lexicographically first intersecting pair by the radius-weighted merge until disjoint.
MergeResult merge_disks(const std::vector<Disk>& disks);

struct GrowingDisk {
    Disk disk;
    HomotopyCharge charge;
};

enum class GrowthEventType { Seed, Grow, Merge, Stop };

struct GrowthEvent {
    GrowthEventType type = GrowthEventType::Seed;
    double s = 0.0;
    std::vector<GrowingDisk> disks;  // state after the event
};

// A stretch of history where a disk grows as r = s * E_sg^{1,p'}: circles S(center, r), r in [r_lo, r_hi).
struct GrowthSegment {
    Vec2 center;
    double r_lo = 0.0, r_hi = 0.0;
    double kappa = 0.0;  // ((2 pi)^{p'-1} p' E_sg^{1,p'})^{1/p'}
    HomotopyCharge charge;
};

struct DiskCollection {
    double p = 0.0;
    double delta = 0.0;
    std::vector<GrowingDisk> disks;  // final
    std::vector<GrowthEvent> history;
    std::vector<GrowthSegment> segments;
    bool reached_delta = false;  // false when every remaining charge is zero

    double radius_sum() const;
};

// Expansion of circles; stops when the diameters sum to delta.
DiskCollection grow_balls(const DiscreteField& u, double p, double delta);

void write_growth_trace(std::ostream& os, const DiskCollection& c);

// (rho^{2-p} - sigma^{2-p}) lambda^p / ((2pi)^{p-1} p (2-p)), or lambda^2/(4 pi) log(rho/sigma) at p = 2
double annulus_lower_bound(double lambda, double sigma, double rho, double p);

// a^p/p + a^{p-1}(b-a) + (1-1/p)(b-a)_+^p <= (3-p)/2 b^p, up to rounding
bool pointwise_convexity_holds(double a, double b, double p);

// slack is the absolute allowance actually granted
struct BoundRow {
    std::string name;
    double lhs = 0.0, rhs = 0.0, slack = 0.0;
    bool pass = false;
};

// lhs <= rhs + rel |rhs|
BoundRow upper_row(std::string name, double lhs, double rhs, double rel);
// lhs >= rhs - rel |rhs|
BoundRow lower_row(std::string name, double lhs, double rhs, double rel);
BoundRow upper_row_abs(std::string name, double lhs, double rhs, double allowance);
BoundRow lower_row_abs(std::string name, double lhs, double rhs, double allowance);

void write_certificates(std::ostream& os, const std::vector<BoundRow>& rows);

class UField {
public:
    UField(std::vector<GrowthSegment> segments, double p);

    double operator()(Vec2 x) const;
    // {U > t} as a disjoint union of disks
    std::vector<Disk> level_set(double t) const;
    double level_volume(double t) const;
    double level_perimeter(double t) const;
    double sup_weak(double q) const;       // sup_t t^q vol{U > t}
    double sup_perimeter(double q) const;  // sup_t t^q Per{U > t}
    double min_positive() const;           // smallest positive value taken by U
    std::vector<double> samples(const DomainGrid& g) const;

private:
    std::vector<double> breakpoints() const;
    std::vector<GrowthSegment> seg_;
    double p_;
};

struct MixedEstimateReport {
    double energy = 0.0;       // core-corrected p-energy on the domain
    double disk_energy = 0.0;  // core-corrected p-energy on the final disks
    double excess = 0.0;       // integral over the disks of (|Du| - U)_+^p
    std::vector<BoundRow> rows;
};

// U-field and its estimates; energies use analytic cores at the detected singularities.
MixedEstimateReport mixed_estimate(const DiscreteField& u, const DiskCollection& growth, const UField& U,
                                   const SingularityConfiguration& sing);

// Lower-bound certificates of a growth: annulus bounds on every segment, the circle inequality on
// traced circles, the union-of-disks lower bound and the systole certificate on the given annuli.
struct Annulus {
    Vec2 center;
    double r_in = 0.0, r_out = 0.0;
};
std::vector<BoundRow> annulus_rows(const DiscreteField& u, const DiskCollection& growth, double p, double slack);
std::vector<BoundRow> circle_rows(const DiscreteField& u, const DiskCollection& growth, double p, double slack);
BoundRow disk_union_row(const DiscreteField& u, const DiskCollection& growth, const SingularityConfiguration& sing,
                        double slack);
std::vector<BoundRow> systole_rows(const DiscreteField& u, const std::vector<Annulus>& annuli, double p);

}  // namespace pharm
