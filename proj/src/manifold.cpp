#include "pharm/manifold.hpp"

#include <algorithm>
#include <charconv>

namespace pharm {

TargetManifold TargetManifold::circle() { return {ManifoldKind::Circle, 2}; }
TargetManifold TargetManifold::torus() { return {ManifoldKind::FlatTorus, 4}; }

TargetManifold TargetManifold::euclidean(int dim) {
    if (dim <= 0) throw Error("euclidean dimension must be positive");
    return {ManifoldKind::Euclidean, dim};
}

TargetManifold TargetManifold::parse(std::string_view name) {
    if (name == "circle") return circle();
    if (name == "torus") return torus();
    constexpr std::string_view prefix = "euclidean:";
    if (name.starts_with(prefix)) {
        auto digits = name.substr(prefix.size());
        int dim = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dim);
        if (ec == std::errc() && ptr == digits.data() + digits.size()) return euclidean(dim);
    }
    throw Error("unknown target manifold '" + std::string(name) + "'");
}

int TargetManifold::circle_factors() const {
    switch (kind_) {
        case ManifoldKind::Circle: return 1;
        case ManifoldKind::FlatTorus: return 2;
        default: return 0;
    }
}

double TargetManifold::systole() const {
    if (kind_ == ManifoldKind::Euclidean) return std::numeric_limits<double>::infinity();
    return kTwoPi;
}

std::string TargetManifold::name() const {
    switch (kind_) {
        case ManifoldKind::Circle: return "circle";
        case ManifoldKind::FlatTorus: return "torus";
        default: return "euclidean:" + std::to_string(dim_);
    }
}

void TargetManifold::project_inplace(std::span<double> x) const {
    for (int k = 0; k < circle_factors(); ++k) {
        double& a = x[2 * k];
        double& b = x[2 * k + 1];
        double n = std::hypot(a, b);
        if (!(n >= 1e-14)) throw Error("ambiguous projection");
        a /= n;
        b /= n;
    }
}

std::vector<double> TargetManifold::project(std::span<const double> x) const {
    std::vector<double> y(x.begin(), x.end());
    project_inplace(y);
    return y;
}

double TargetManifold::constraint_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (int k = 0; k < circle_factors(); ++k)
        worst = std::max(worst, std::abs(std::hypot(x[2 * k], x[2 * k + 1]) - 1.0));
    return worst;
}

bool HomotopyCharge::is_zero() const {
    return std::all_of(windings.begin(), windings.end(), [](int w) { return w == 0; });
}

int HomotopyCharge::l1() const {
    int s = 0;
    for (int w : windings) s += std::abs(w);
    return s;
}

HomotopyCharge HomotopyCharge::operator-() const {
    HomotopyCharge c = *this;
    for (int& w : c.windings) w = -w;
    return c;
}

HomotopyCharge operator+(const HomotopyCharge& a, const HomotopyCharge& b) {
    if (a.windings.size() != b.windings.size()) throw Error("charge dimension mismatch");
    HomotopyCharge c = a;
    for (std::size_t k = 0; k < c.windings.size(); ++k) c.windings[k] += b.windings[k];
    return c;
}

HomotopyCharge zero_charge(const TargetManifold& m) {
    return {std::vector<int>(static_cast<std::size_t>(m.circle_factors()), 0)};
}

std::string to_string(const HomotopyCharge& c) {
    std::string s = "(";
    for (std::size_t k = 0; k < c.windings.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(c.windings[k]);
    }
    return s + ")";
}

double lambda_of(const HomotopyCharge& c) {
    double s = 0.0;
    for (int w : c.windings) s += static_cast<double>(w) * w;
    return kTwoPi * std::sqrt(s);
}

double angle_increment(double x0, double y0, double x1, double y1) {
    // angle of z1 * conj(z0), exact branch handling via atan2
    return std::atan2(x0 * y1 - y0 * x1, x0 * x1 + y0 * y1);
}

HomotopyCharge loop_charge(const TargetManifold& m, const Loop& loop) {
    if (loop.dim != m.ambient_dim()) throw Error("loop dimension mismatch");
    HomotopyCharge c = zero_charge(m);
    std::size_t n = loop.size();
    if (n >= 2) {
        auto first = loop.point(0), last = loop.point(n - 1);
        if (std::equal(first.begin(), first.end(), last.begin())) --n;
    }
    if (n == 0) return c;
    for (int k = 0; k < m.circle_factors(); ++k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto a = loop.point(i), b = loop.point((i + 1) % n);
            double d = angle_increment(a[2 * k], a[2 * k + 1], b[2 * k], b[2 * k + 1]);
            if (std::abs(d) >= kPi - 1e-9) throw Error("under-resolved loop");
            total += d;
        }
        double turns = total / kTwoPi;
        double r = std::round(turns);
        if (std::abs(turns - r) >= 0.25) throw Error("ambiguous winding");
        c.windings[static_cast<std::size_t>(k)] = static_cast<int>(r);
    }
    return c;
}

}  // namespace pharm
