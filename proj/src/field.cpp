#include "pharm/field.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace pharm {

bool DomainShape::contains(Vec2 x) const {
    switch (kind) {
        case DomainKind::UnitDisk: return x.x * x.x + x.y * x.y <= 1.0;
        case DomainKind::Rectangle: return std::abs(x.x) <= 0.5 * width && std::abs(x.y) <= 0.5 * height;
        case DomainKind::Annulus: {
            double r = norm(x);
            return r >= r_in && r <= r_out;
        }
    }
    return false;
}

double DomainShape::distance_to_boundary(Vec2 x) const {
    switch (kind) {
        case DomainKind::UnitDisk: return 1.0 - norm(x);
        case DomainKind::Rectangle: return std::min(0.5 * width - std::abs(x.x), 0.5 * height - std::abs(x.y));
        case DomainKind::Annulus: {
            double r = norm(x);
            return std::min(r - r_in, r_out - r);
        }
    }
    return 0.0;
}

std::string DomainShape::name() const {
    switch (kind) {
        case DomainKind::UnitDisk: return "disk";
        case DomainKind::Rectangle: return "rectangle";
        case DomainKind::Annulus: return "annulus";
    }
    return "?";
}

namespace {

int even_count(double extent, double h) {
    int n = static_cast<int>(std::ceil(extent / h - 1e-9)) + 4;
    return n % 2 ? n + 1 : n;
}

// min / max distance from c to the square [x0,x0+h] x [y0,y0+h]
void rect_distances(Vec2 c, double x0, double y0, double h, double& dmin, double& dmax) {
    double dx = std::max({x0 - c.x, 0.0, c.x - x0 - h});
    double dy = std::max({y0 - c.y, 0.0, c.y - y0 - h});
    dmin = std::hypot(dx, dy);
    double fx = std::max(std::abs(x0 - c.x), std::abs(x0 + h - c.x));
    double fy = std::max(std::abs(y0 - c.y), std::abs(y0 + h - c.y));
    dmax = std::hypot(fx, fy);
}

bool outside_all(const std::vector<Disk>& disks, Vec2 x) {
    for (const auto& d : disks)
        if (dist(d.center, x) < d.radius) return false;
    return true;
}

}  // namespace

DomainGrid::DomainGrid(DomainShape shape, double h) : shape_(shape), h_(h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw Error("grid spacing must be positive");
    double ex = 2.0, ey = 2.0;
    if (shape.kind == DomainKind::Rectangle) {
        if (!(shape.width > 0.0 && shape.height > 0.0)) throw Error("rectangle sides must be positive");
        ex = shape.width;
        ey = shape.height;
    } else if (shape.kind == DomainKind::Annulus) {
        if (!(shape.r_in > 0.0 && shape.r_out > shape.r_in)) throw Error("annulus needs 0 < r_in < r_out");
        ex = ey = 2.0 * shape.r_out;
    }
    nx_ = even_count(ex, h);
    ny_ = even_count(ey, h);
    origin_ = {-0.5 * (nx_ - 1) * h, -0.5 * (ny_ - 1) * h};

    inside_.assign(node_count(), 0);
    boundary_.assign(node_count(), 0);
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) inside_[index(i, j)] = shape_.contains(node(i, j)) ? 1 : 0;
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) {
            std::size_t k = index(i, j);
            if (!inside_[k]) continue;
            bool edge = i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1 || !inside_[k - 1] || !inside_[k + 1] ||
                        !inside_[k - nx_] || !inside_[k + nx_];
            boundary_[k] = edge ? 1 : 0;
        }
    weights_.assign(static_cast<std::size_t>(nx_ - 1) * (ny_ - 1), 0.0);
    for (int cj = 0; cj + 1 < ny_; ++cj)
        for (int ci = 0; ci + 1 < nx_; ++ci) {
            std::size_t k = index(ci, cj);
            if (inside_[k] && inside_[k + 1] && inside_[k + nx_] && inside_[k + nx_ + 1])
                weights_[static_cast<std::size_t>(cj) * (nx_ - 1) + ci] = 1.0;
        }
    finalize();
}

void DomainGrid::finalize() {
    free_.assign(node_count(), 0);
    rows_.assign(static_cast<std::size_t>(ny_ - 1), {});
    for (int cj = 0; cj + 1 < ny_; ++cj) {
        int first = -1, last = -1;
        for (int ci = 0; ci + 1 < nx_; ++ci) {
            if (cell_weight(ci, cj) <= 0.0) continue;
            if (first < 0) first = ci;
            last = ci;
            for (std::size_t k : {index(ci, cj), index(ci + 1, cj), index(ci, cj + 1), index(ci + 1, cj + 1)})
                free_[k] = 1;
        }
        if (first >= 0) rows_[static_cast<std::size_t>(cj)] = {first, last + 1};
    }
    boundary_list_.clear();
    for (std::size_t k = 0; k < node_count(); ++k) {
        if (boundary_[k]) boundary_list_.push_back(k);
        if (!inside_[k] || boundary_[k]) free_[k] = 0;
    }
}

DomainGrid DomainGrid::perforated(const std::vector<Disk>& holes) const {
    DomainGrid g = *this;
    g.holes_.insert(g.holes_.end(), holes.begin(), holes.end());
    constexpr int m = 16;
    for (int cj = 0; cj + 1 < ny_; ++cj)
        for (int ci = 0; ci + 1 < nx_; ++ci) {
            double& w = g.weights_[static_cast<std::size_t>(cj) * (nx_ - 1) + ci];
            if (w <= 0.0) continue;
            Vec2 c0 = node(ci, cj);
            bool cut = false;
            for (const auto& d : holes) {
                double dmin, dmax;
                rect_distances(d.center, c0.x, c0.y, h_, dmin, dmax);
                if (dmax <= d.radius) {
                    w = 0.0;
                    break;
                }
                if (dmin < d.radius) cut = true;
            }
            if (w <= 0.0 || !cut) continue;
            int count = 0;
            for (int b = 0; b < m; ++b)
                for (int a = 0; a < m; ++a)
                    if (outside_all(g.holes_, {c0.x + (a + 0.5) * h_ / m, c0.y + (b + 0.5) * h_ / m})) ++count;
            w *= static_cast<double>(count) / (m * m);
        }
    g.finalize();
    return g;
}

std::optional<DomainGrid::CellPoint> DomainGrid::locate(Vec2 x) const {
    double fx = (x.x - origin_.x) / h_, fy = (x.y - origin_.y) / h_;
    if (!(fx >= 0.0 && fy >= 0.0)) return std::nullopt;
    int ci = static_cast<int>(fx), cj = static_cast<int>(fy);
    if (ci >= nx_ - 1 || cj >= ny_ - 1) return std::nullopt;
    std::size_t k = index(ci, cj);
    if (!(inside_[k] && inside_[k + 1] && inside_[k + nx_] && inside_[k + nx_ + 1])) return std::nullopt;
    return CellPoint{ci, cj, fx - ci, fy - cj};
}

DiscreteField DiscreteField::from_function(GridPtr grid, const TargetManifold& target, const Generator& f) {
    DiscreteField u(std::move(grid), target);
    const DomainGrid& g = *u.grid_;
    const std::size_t n = g.node_count();
    const int nc = target.ambient_dim();
    u.values_.assign(n * nc, 0.0);
    std::vector<double> buf(static_cast<std::size_t>(nc));
    for (std::size_t k = 0; k < n; ++k) {
        if (!g.inside(k)) continue;
        std::fill(buf.begin(), buf.end(), 0.0);
        f(g.node(k), buf);
        target.project_inplace(buf);
        for (int c = 0; c < nc; ++c) u.values_[c * n + k] = buf[c];
    }
    u.boundary_data_.reserve(g.boundary_nodes().size() * nc);
    for (std::size_t k : g.boundary_nodes())
        for (int c = 0; c < nc; ++c) u.boundary_data_.push_back(u.values_[c * n + k]);
    return u;
}

void DiscreteField::point(std::size_t node, std::span<double> out) const {
    for (int c = 0; c < ncomp(); ++c) out[c] = value(c, node);
}

DiscreteField DiscreteField::with_values(std::vector<double> planes) const {
    if (planes.size() != values_.size()) throw Error("field size mismatch");
    DiscreteField u(grid_, target_);
    u.values_ = std::move(planes);
    u.boundary_data_ = boundary_data_;
    const std::size_t n = grid_->node_count();
    const auto& bn = grid_->boundary_nodes();
    for (std::size_t b = 0; b < bn.size(); ++b)
        for (int c = 0; c < ncomp(); ++c) u.values_[c * n + bn[b]] = boundary_data_[b * ncomp() + c];
    return u;
}

DiscreteField DiscreteField::on_grid(GridPtr grid) const {
    if (grid->nx() != grid_->nx() || grid->ny() != grid_->ny() || grid->boundary_nodes() != grid_->boundary_nodes())
        throw Error("incompatible grid");
    DiscreteField u = *this;
    u.grid_ = std::move(grid);
    return u;
}

DiscreteField DiscreteField::difference(const DiscreteField& other) const {
    if (other.values_.size() != values_.size()) throw Error("field size mismatch");
    DiscreteField u(grid_, TargetManifold::euclidean(ncomp()));
    u.values_.resize(values_.size());
    for (std::size_t k = 0; k < values_.size(); ++k) u.values_[k] = values_[k] - other.values_[k];
    u.boundary_data_.resize(boundary_data_.size());
    for (std::size_t k = 0; k < boundary_data_.size(); ++k) u.boundary_data_[k] = boundary_data_[k] - other.boundary_data_[k];
    return u;
}

double DiscreteField::constraint_violation() const {
    double worst = 0.0;
    std::vector<double> buf(static_cast<std::size_t>(ncomp()));
    for (std::size_t k = 0; k < grid_->node_count(); ++k) {
        if (!grid_->inside(k)) continue;
        point(k, buf);
        worst = std::max(worst, target_.constraint_violation(buf));
    }
    return worst;
}

kernels::EnergyInput DiscreteField::energy_input(double p, double eps) const {
    kernels::EnergyInput in;
    in.nx = grid_->nx();
    in.ny = grid_->ny();
    in.ncomp = ncomp();
    in.h = grid_->spacing();
    in.p = p;
    in.eps = eps;
    in.values = values_.data();
    in.cell_weight = grid_->cell_weights().data();
    in.rows = grid_->row_ranges().data();
    return in;
}

SingularityConfiguration make_configuration(const DomainShape& shape, std::vector<Singularity> points) {
    SingularityConfiguration s;
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].charge.is_zero()) throw Error("singularity with zero charge");
        sep = std::min(sep, shape.distance_to_boundary(points[i].location));
        for (std::size_t j = i + 1; j < points.size(); ++j) sep = std::min(sep, dist(points[i].location, points[j].location));
    }
    s.points = std::move(points);
    s.separation_radius = s.points.empty() ? 0.0 : std::max(sep, 0.0);
    return s;
}

double p_energy(const DiscreteField& u, double p) {
    if (!(p >= 1.0 && p <= 2.0)) throw Error("p must lie in [1, 2]");
    return kernels::energy(u.energy_input(p, 0.0));
}

namespace {

// |Du|^2 at local coordinates of a cell
double local_grad2(const DiscreteField& u, int ci, int cj, double xi, double eta) {
    const DomainGrid& g = u.grid();
    const std::size_t n00 = g.index(ci, cj), n10 = n00 + 1, n01 = n00 + g.nx(), n11 = n01 + 1;
    double s = 0.0;
    for (int c = 0; c < u.ncomp(); ++c) {
        auto v = u.plane(c);
        double Gx = (1.0 - eta) * (v[n10] - v[n00]) + eta * (v[n11] - v[n01]);
        double Gy = (1.0 - xi) * (v[n01] - v[n00]) + xi * (v[n11] - v[n10]);
        s += Gx * Gx + Gy * Gy;
    }
    return s / (g.spacing() * g.spacing());
}

enum class Coverage { Empty, Full, Cut };

Coverage classify(const Region& region, const std::vector<Disk>& holes, Vec2 c0, double h) {
    bool cut = false;
    auto check_exclude = [&](const Disk& d) {
        double dmin, dmax;
        rect_distances(d.center, c0.x, c0.y, h, dmin, dmax);
        if (dmax <= d.radius) return false;
        if (dmin < d.radius) cut = true;
        return true;
    };
    for (const auto& d : region.exclude)
        if (!check_exclude(d)) return Coverage::Empty;
    for (const auto& d : holes)
        if (!check_exclude(d)) return Coverage::Empty;
    if (!region.include.empty()) {
        bool inside_one = false, touches = false;
        for (const auto& d : region.include) {
            double dmin, dmax;
            rect_distances(d.center, c0.x, c0.y, h, dmin, dmax);
            if (dmax <= d.radius) inside_one = true;
            if (dmin < d.radius) touches = true;
        }
        if (!touches) return Coverage::Empty;
        if (!inside_one) cut = true;
    }
    return cut ? Coverage::Cut : Coverage::Full;
}

// area fraction of a square of side L centred at x, treating each circle as its tangent line
double inside_fraction(const Region& region, const std::vector<Disk>& holes, Vec2 x, double L) {
    auto frac = [&](const Disk& d, double sign) {
        Vec2 v = x - d.center;
        double r = norm(v);
        double w = r > 0.0 ? L * (std::abs(v.x) + std::abs(v.y)) / r : L;
        return std::clamp(0.5 + sign * (r - d.radius) / w, 0.0, 1.0);
    };
    double f = 1.0;
    for (const auto& d : region.exclude) f *= frac(d, 1.0);
    for (const auto& d : holes) f *= frac(d, 1.0);
    if (!region.include.empty()) {
        double best = 0.0;
        for (const auto& d : region.include) best = std::max(best, frac(d, -1.0));
        f *= best;
    }
    return f;
}

}  // namespace

double integrate_region(const DiscreteField& u, const Region& region, const std::function<double(Vec2, double)>& f,
                        int subdivisions) {
    const DomainGrid& g = u.grid();
    const double h = g.spacing();
    const double gp[2] = {kernels::kGaussLo, kernels::kGaussHi};
    // quadtree down to squares of side h/subdivisions; uncut squares get 2x2 Gauss, cut leaves a straight-edge
    // area fraction at the midpoint
    const double leaf = 1.0 / std::max(1, subdivisions) * (1.0 + 1e-12);
    std::function<double(int, int, double, double, double)> cut = [&](int ci, int cj, double x0, double y0,
                                                                      double side) -> double {
        const Vec2 c0 = g.node(ci, cj);
        const Vec2 s0{c0.x + x0 * h, c0.y + y0 * h};
        Coverage cov = side >= 1.0 ? Coverage::Cut : classify(region, g.holes(), s0, side * h);
        if (cov == Coverage::Empty) return 0.0;
        if (cov == Coverage::Full) {
            double acc = 0.0;
            for (double a : gp)
                for (double b : gp) {
                    double xi = x0 + a * side, eta = y0 + b * side;
                    acc += f({c0.x + xi * h, c0.y + eta * h}, local_grad2(u, ci, cj, xi, eta));
                }
            return 0.25 * side * side * h * h * acc;
        }
        if (side <= leaf) {
            double xi = x0 + 0.5 * side, eta = y0 + 0.5 * side;
            Vec2 x{c0.x + xi * h, c0.y + eta * h};
            const double w = inside_fraction(region, g.holes(), x, side * h);
            return w > 0.0 ? w * side * side * h * h * f(x, local_grad2(u, ci, cj, xi, eta)) : 0.0;
        }
        const double hs = 0.5 * side;
        return cut(ci, cj, x0, y0, hs) + cut(ci, cj, x0 + hs, y0, hs) + cut(ci, cj, x0, y0 + hs, hs) +
               cut(ci, cj, x0 + hs, y0 + hs, hs);
    };
    double total = 0.0;
    for (int cj = 0; cj + 1 < g.ny(); ++cj) {
        const auto r = g.row_ranges()[static_cast<std::size_t>(cj)];
        double row = 0.0;
        for (int ci = r.begin; ci < r.end; ++ci) {
            if (g.cell_weight(ci, cj) <= 0.0) continue;
            const Vec2 c0 = g.node(ci, cj);
            switch (classify(region, g.holes(), c0, h)) {
                case Coverage::Empty: break;
                case Coverage::Full:
                    for (double xi : gp)
                        for (double eta : gp)
                            row += 0.25 * h * h * f({c0.x + xi * h, c0.y + eta * h}, local_grad2(u, ci, cj, xi, eta));
                    break;
                case Coverage::Cut: row += cut(ci, cj, 0.0, 0.0, 1.0); break;
            }
        }
        total += row;
    }
    return total;
}

double p_energy_region(const DiscreteField& u, double p, const Region& region) {
    if (p == 2.0) return integrate_region(u, region, [](Vec2, double s) { return 0.5 * s; });
    return integrate_region(u, region, [p](Vec2, double s) { return s > 0.0 ? std::pow(s, 0.5 * p) / p : 0.0; });
}

double gradient_norm2_at(const DiscreteField& u, Vec2 x) {
    auto cp = u.grid().locate(x);
    if (!cp) throw Error("trace outside domain");
    return local_grad2(u, cp->ci, cp->cj, cp->xi, cp->eta);
}

namespace {

// circle samples must sit one cell inside the continuum boundary
DomainGrid::CellPoint sample_cell(const DomainGrid& g, Vec2 x) {
    auto cp = g.locate(x);
    if (!cp || g.shape().distance_to_boundary(x) < g.spacing()) throw Error("trace outside domain");
    return *cp;
}

}  // namespace

Loop circle_trace(const DiscreteField& u, Vec2 center, double radius, int n_samples) {
    if (n_samples < 16) throw Error("circle trace needs at least 16 samples");
    const DomainGrid& g = u.grid();
    if (!(radius > 0.0)) throw Error("trace outside domain");
    const int nc = u.ncomp();
    Loop loop;
    loop.dim = nc;
    loop.coords.reserve(static_cast<std::size_t>(n_samples) * nc);
    std::vector<double> buf(static_cast<std::size_t>(nc));
    for (int k = 0; k < n_samples; ++k) {
        double th = kTwoPi * k / n_samples;
        const auto cp = sample_cell(g, {center.x + radius * std::cos(th), center.y + radius * std::sin(th)});
        const std::size_t n00 = g.index(cp.ci, cp.cj), n10 = n00 + 1, n01 = n00 + g.nx(), n11 = n01 + 1;
        for (int c = 0; c < nc; ++c) {
            auto v = u.plane(c);
            buf[c] = (1 - cp.xi) * (1 - cp.eta) * v[n00] + cp.xi * (1 - cp.eta) * v[n10] + (1 - cp.xi) * cp.eta * v[n01] +
                     cp.xi * cp.eta * v[n11];
        }
        u.target().project_inplace(buf);
        loop.push(buf);
    }
    return loop;
}

int default_circle_samples(const DomainGrid& g, double radius) {
    return std::max(64, static_cast<int>(std::ceil(16.0 * kTwoPi * radius / g.spacing())));
}

double circle_integral(const DiscreteField& u, Vec2 center, double radius, const std::function<double(double)>& f,
                       int n_samples) {
    const DomainGrid& g = u.grid();
    if (!(radius > 0.0)) throw Error("trace outside domain");
    // |Du|^2 jumps across cell edges, so the midpoint rule needs many samples per cell
    const int n = n_samples > 0 ? n_samples
                                : std::max(256, static_cast<int>(std::ceil(64.0 * kTwoPi * radius / g.spacing())));
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        double th = kTwoPi * (k + 0.5) / n;
        const auto cp = sample_cell(g, {center.x + radius * std::cos(th), center.y + radius * std::sin(th)});
        sum += f(local_grad2(u, cp.ci, cp.cj, cp.xi, cp.eta));
    }
    return sum * (kTwoPi * radius / n);
}

double circle_energy_density(const DiscreteField& u, Vec2 center, double radius, double q, int n_samples) {
    if (q == 2.0) return circle_integral(u, center, radius, [](double s) { return 0.5 * s; }, n_samples);
    return circle_integral(
        u, center, radius, [q](double s) { return s > 0.0 ? std::pow(s, 0.5 * q) / q : 0.0; }, n_samples);
}

double weak_quasinorm(const DiscreteField& u, double q, double t_max) {
    const DomainGrid& g = u.grid();
    const double h = g.spacing();
    const double gp[2] = {kernels::kGaussLo, kernels::kGaussHi};
    std::vector<std::pair<double, double>> samples;  // (|Du|, area)
    for (int cj = 0; cj + 1 < g.ny(); ++cj)
        for (int ci = 0; ci + 1 < g.nx(); ++ci) {
            double w = g.cell_weight(ci, cj);
            if (w <= 0.0) continue;
            for (double xi : gp)
                for (double eta : gp) samples.emplace_back(std::sqrt(local_grad2(u, ci, cj, xi, eta)), 0.25 * h * h * w);
        }
    std::sort(samples.begin(), samples.end(), [](auto& a, auto& b) { return a.first > b.first; });
    double area = 0.0, best = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        area += samples[k].second;
        double next = k + 1 < samples.size() ? samples[k + 1].first : 0.0;
        if (next >= t_max || samples[k].first <= 0.0) continue;
        best = std::max(best, std::pow(std::min(samples[k].first, t_max), q) * area);
    }
    return best;
}

void write_snapshot(std::ostream& os, const DiscreteField& u) {
    const DomainGrid& g = u.grid();
    os << "x,y,inside";
    for (int c = 0; c < u.ncomp(); ++c) os << ",v" << (c + 1);
    os << '\n';
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        Vec2 x = g.node(k);
        os << fmt17(x.x) << ',' << fmt17(x.y) << ',' << (g.inside(k) ? 1 : 0);
        for (int c = 0; c < u.ncomp(); ++c) os << ',' << fmt17(u.value(c, k));
        os << '\n';
    }
}

DiscreteField read_snapshot(std::istream& is, GridPtr grid, const TargetManifold& target) {
    const int nc = target.ambient_dim();
    std::string line;
    if (!std::getline(is, line) || !line.starts_with("x,y,inside")) throw Error("snapshot: missing header");
    std::vector<double> planes(grid->node_count() * nc, 0.0);
    std::size_t k = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (k >= grid->node_count()) throw Error("snapshot: too many rows");
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != static_cast<std::size_t>(3 + nc)) throw Error("snapshot: wrong column count");
        Vec2 x = grid->node(k);
        if (std::abs(row[0] - x.x) > 1e-9 || std::abs(row[1] - x.y) > 1e-9) throw Error("snapshot: grid mismatch");
        for (int c = 0; c < nc; ++c) planes[c * grid->node_count() + k] = row[3 + c];
        ++k;
    }
    if (k != grid->node_count()) throw Error("snapshot: too few rows");
    const std::size_t n = grid->node_count();
    const DomainGrid& g = *grid;
    return DiscreteField::from_function(grid, target, [&](Vec2 x, std::span<double> out) {
        int i = static_cast<int>(std::lround((x.x - g.origin().x) / g.spacing()));
        int j = static_cast<int>(std::lround((x.y - g.origin().y) / g.spacing()));
        for (int c = 0; c < nc; ++c) out[c] = planes[c * n + g.index(i, j)];
    });
}

}  // namespace pharm
