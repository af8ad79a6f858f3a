#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pharm/common.hpp"
#include "pharm/kernels.hpp"
#include "pharm/manifold.hpp"

namespace pharm {

enum class DomainKind { UnitDisk, Rectangle, Annulus };

struct DomainShape {
    DomainKind kind = DomainKind::UnitDisk;
    double width = 0.0, height = 0.0;  // Rectangle, centred at the origin
    double r_in = 0.0, r_out = 1.0;    // Annulus

    static DomainShape unit_disk() { return {}; }
    static DomainShape rectangle(double w, double h) { return {DomainKind::Rectangle, w, h, 0.0, 0.0}; }
    static DomainShape annulus(double r_in, double r_out) { return {DomainKind::Annulus, 0.0, 0.0, r_in, r_out}; }

    bool contains(Vec2 x) const;
    // distance to the continuum boundary, >= 0 inside
    double distance_to_boundary(Vec2 x) const;
    std::string name() const;
};

class DomainGrid {
public:
    DomainGrid(DomainShape shape, double h);

    // Holes are free (Neumann) boundaries; cut cells get their exact area fraction.
    DomainGrid perforated(const std::vector<Disk>& holes) const;

    const DomainShape& shape() const { return shape_; }
    double spacing() const { return h_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t node_count() const { return static_cast<std::size_t>(nx_) * ny_; }
    Vec2 origin() const { return origin_; }
    Vec2 node(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
    Vec2 node(std::size_t idx) const { return node(static_cast<int>(idx % nx_), static_cast<int>(idx / nx_)); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

    bool inside(std::size_t idx) const { return inside_[idx] != 0; }
    bool boundary(std::size_t idx) const { return boundary_[idx] != 0; }
    bool free(std::size_t idx) const { return free_[idx] != 0; }
    const std::vector<std::uint8_t>& inside_mask() const { return inside_; }
    const std::vector<std::size_t>& boundary_nodes() const { return boundary_list_; }
    const std::vector<double>& cell_weights() const { return weights_; }
    const std::vector<kernels::RowRange>& row_ranges() const { return rows_; }
    const std::vector<Disk>& holes() const { return holes_; }
    double cell_weight(int ci, int cj) const { return weights_[static_cast<std::size_t>(cj) * (nx_ - 1) + ci]; }
    Vec2 center() const { return {0.0, 0.0}; }

    struct CellPoint {
        int ci, cj;
        double xi, eta;
    };
    // cell containing x whose four corners are inside; nullopt otherwise
    std::optional<CellPoint> locate(Vec2 x) const;

private:
    void finalize();

    DomainShape shape_;
    double h_;
    int nx_, ny_;
    Vec2 origin_;
    std::vector<std::uint8_t> inside_, boundary_, free_;
    std::vector<std::size_t> boundary_list_;
    std::vector<double> weights_;
    std::vector<kernels::RowRange> rows_;
    std::vector<Disk> holes_;
};

using GridPtr = std::shared_ptr<const DomainGrid>;

class DiscreteField {
public:
    using Generator = std::function<void(Vec2, std::span<double>)>;

    // Samples f at inside nodes and projects; boundary values become the frozen data.
    static DiscreteField from_function(GridPtr grid, const TargetManifold& target, const Generator& f);

    const DomainGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const TargetManifold& target() const { return target_; }
    int ncomp() const { return target_.ambient_dim(); }

    const std::vector<double>& values() const { return values_; }
    std::span<const double> plane(int c) const {
        return {values_.data() + static_cast<std::size_t>(c) * grid_->node_count(), grid_->node_count()};
    }
    double value(int c, std::size_t node) const { return values_[static_cast<std::size_t>(c) * grid_->node_count() + node]; }
    void point(std::size_t node, std::span<double> out) const;
    const std::vector<double>& boundary_data() const { return boundary_data_; }

    // Same grid/target/boundary data; boundary nodes are overwritten by the frozen data.
    DiscreteField with_values(std::vector<double> planes) const;
    // Field on another grid of the same node layout (e.g. a perforation).
    DiscreteField on_grid(GridPtr grid) const;
    // Euclidean field u - v (same grid); used for gradient differences.
    DiscreteField difference(const DiscreteField& other) const;

    double constraint_violation() const;
    kernels::EnergyInput energy_input(double p, double eps) const;

private:
    DiscreteField(GridPtr grid, TargetManifold target) : grid_(std::move(grid)), target_(target) {}
    GridPtr grid_;
    TargetManifold target_;
    std::vector<double> values_;
    std::vector<double> boundary_data_;  // ncomp per boundary node, in boundary_nodes() order
};

struct Singularity {
    Vec2 location;
    HomotopyCharge charge;
};

struct SingularityConfiguration {
    std::vector<Singularity> points;
    double separation_radius = 0.0;

    bool empty() const { return points.empty(); }
};

// separation radius = min{dist(a_i, boundary), |a_i - a_j|}
SingularityConfiguration make_configuration(const DomainShape& shape, std::vector<Singularity> points);

// Q1 p-energy with 2x2 Gauss quadrature on the grid's cell weights.
double p_energy(const DiscreteField& u, double p);

// Sub-region of the domain: inside the union of `include` (whole domain if empty)
// and outside every `exclude` disk. Cut cells are refined down to squares of side h/subdivisions.
struct Region {
    std::vector<Disk> include;
    std::vector<Disk> exclude;
};

// integral over the region of f(x, |Du(x)|^2) for the bilinear interpolant
double integrate_region(const DiscreteField& u, const Region& region, const std::function<double(Vec2, double)>& f,
                        int subdivisions = 64);
double p_energy_region(const DiscreteField& u, double p, const Region& region);

// |Du|^2 of the bilinear interpolant at x; throws if x has no fully inside cell.
double gradient_norm2_at(const DiscreteField& u, Vec2 x);

Loop circle_trace(const DiscreteField& u, Vec2 center, double radius, int n_samples);
int default_circle_samples(const DomainGrid& grid, double radius);
// integral over the circle of f(|Du|^2)
double circle_integral(const DiscreteField& u, Vec2 center, double radius, const std::function<double(double)>& f,
                       int n_samples = 0);
// (1/q) * integral over the circle of |Du|^q
double circle_energy_density(const DiscreteField& u, Vec2 center, double radius, double q, int n_samples = 0);

// sup over 0 < t <= t_max of t^q |{|Du| > t}|, from Gauss-point samples
double weak_quasinorm(const DiscreteField& u, double q, double t_max);

void write_snapshot(std::ostream& os, const DiscreteField& u);
DiscreteField read_snapshot(std::istream& is, GridPtr grid, const TargetManifold& target);

}  // namespace pharm
