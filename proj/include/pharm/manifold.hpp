#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pharm/common.hpp"

namespace pharm {

enum class ManifoldKind { Circle, FlatTorus, Euclidean };

// Circle and FlatTorus are unit circles embedded blockwise in R^2 / R^4.
class TargetManifold {
public:
    static TargetManifold circle();
    static TargetManifold torus();
    static TargetManifold euclidean(int dim);
    // "circle" | "torus" | "euclidean:<dim>"
    static TargetManifold parse(std::string_view name);

    ManifoldKind kind() const { return kind_; }
    int ambient_dim() const { return dim_; }
    int circle_factors() const;
    double systole() const;
    std::string name() const;

    void project_inplace(std::span<double> x) const;
    std::vector<double> project(std::span<const double> x) const;
    // max over circle blocks of | |x_k| - 1 |
    double constraint_violation(std::span<const double> x) const;

    bool operator==(const TargetManifold&) const = default;

private:
    TargetManifold(ManifoldKind k, int dim) : kind_(k), dim_(dim) {}
    ManifoldKind kind_;
    int dim_;
};

struct HomotopyCharge {
    std::vector<int> windings;

    bool is_zero() const;
    int l1() const;
    HomotopyCharge operator-() const;
    auto operator<=>(const HomotopyCharge&) const = default;
};

HomotopyCharge operator+(const HomotopyCharge& a, const HomotopyCharge& b);
HomotopyCharge zero_charge(const TargetManifold& m);
std::string to_string(const HomotopyCharge& c);

double lambda_of(const HomotopyCharge& c);

// Flat list of ambient points; the closing point may be repeated or omitted.
struct Loop {
    int dim = 0;
    std::vector<double> coords;

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / static_cast<std::size_t>(dim); }
    std::span<const double> point(std::size_t k) const {
        return {coords.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    void push(std::span<const double> x) { coords.insert(coords.end(), x.begin(), x.end()); }
};

HomotopyCharge loop_charge(const TargetManifold& m, const Loop& loop);

// principal-branch angle increment in (-pi, pi]
double angle_increment(double x0, double y0, double x1, double y1);

}  // namespace pharm
