#include "pharm/solver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>

namespace pharm {

void SolverOptions::validate(double h) const {
    if (max_iters < 0) throw Error("solver: max_iters must be nonnegative");
    if (!(grad_tol > 0.0)) throw Error("solver: grad_tol must be positive");
    if (!(initial_step > 0.0)) throw Error("solver: initial_step must be positive");
    if (!(backtracking_factor > 0.0 && backtracking_factor < 1.0))
        throw Error("solver: backtracking_factor must lie in (0,1)");
    if (!(armijo_c > 0.0 && armijo_c < 0.5)) throw Error("solver: armijo_c must lie in (0,0.5)");
    if (!(epsilon > 0.0) || epsilon > 1e-8 / (h * h)) throw Error("solver: epsilon must lie in (0, 1e-8/h^2]");
}

namespace {

struct Workspace {
    std::vector<double> grad, diag;
    void reset(std::size_t n, std::size_t nodes) {
        grad.assign(n, 0.0);
        diag.assign(nodes, 0.0);
    }
};

double evaluate(const DiscreteField& shape, const std::vector<double>& x, double p, double eps, Workspace& ws) {
    kernels::EnergyInput in = shape.energy_input(p, eps);
    in.values = x.data();
    ws.reset(x.size(), shape.grid().node_count());
    return kernels::energy(in, ws.grad.data(), ws.diag.data());
}

}  // namespace

SolveResult minimize_p_harmonic(const DiscreteField& init, double p, const SolverOptions& o) {
    if (!(p > 1.0 && p <= 2.0)) throw Error("p must lie in (1, 2]");
    const DomainGrid& g = init.grid();
    const double h = g.spacing();
    o.validate(h);
    const std::size_t N = g.node_count();
    const int nc = init.ncomp();
    const int nf = init.target().circle_factors();
    std::vector<std::size_t> free_nodes;
    for (std::size_t k = 0; k < N; ++k)
        if (g.free(k)) free_nodes.push_back(k);

    std::vector<double> x = init.values();
    std::vector<double> gT(x.size(), 0.0), z(x.size(), 0.0), d(x.size(), 0.0), gprev, zprev, xt(x.size());
    Workspace ws, trial;
    double E = evaluate(init, x, p, o.epsilon, ws);
    if (!std::isfinite(E)) throw Error("divergence");

    SolveResult res{init, p, 0.0, 0.0, 0, false, false, 0.0, {}};
    res.epsilon = o.epsilon;
    double t_last = o.initial_step, last_step = 0.0;
    bool have_prev = false;

    auto tangent = [&](const std::vector<double>& at, const std::vector<double>& v, std::vector<double>& out) {
        for (std::size_t k : free_nodes) {
            for (int c = 0; c < nc; ++c) out[c * N + k] = v[c * N + k];
            for (int f = 0; f < nf; ++f) {
                const std::size_t a = (2 * f) * N + k, b = (2 * f + 1) * N + k;
                double dot = out[a] * at[a] + out[b] * at[b];
                out[a] -= dot * at[a];
                out[b] -= dot * at[b];
            }
        }
    };

    int it = 0;
    for (;; ++it) {
        std::fill(gT.begin(), gT.end(), 0.0);
        tangent(x, ws.grad, gT);
        double gmax = 0.0;
        for (std::size_t k : free_nodes) {
            double s = 0.0;
            for (int c = 0; c < nc; ++c) s += gT[c * N + k] * gT[c * N + k];
            gmax = std::max(gmax, s);
        }
        const double gnorm = std::sqrt(gmax) / (h * h);
        res.log.push_back({it, E, gnorm, last_step});
        res.grad_norm = gnorm;
        if (gnorm <= o.grad_tol) {
            res.converged = true;
            break;
        }
        if (it >= o.max_iters) {
            res.max_iters_reached = true;
            break;
        }

        for (std::size_t k : free_nodes) {
            const double m = ws.diag[k] > 0.0 ? 1.0 / ws.diag[k] : 1.0;
            for (int c = 0; c < nc; ++c) z[c * N + k] = m * gT[c * N + k];
        }
        double beta = 0.0;
        if (o.conjugate && have_prev) {
            double num = 0.0, den = 0.0;
            for (std::size_t k : free_nodes)
                for (int c = 0; c < nc; ++c) {
                    const std::size_t i = c * N + k;
                    num += z[i] * (gT[i] - gprev[i]);
                    den += zprev[i] * gprev[i];
                }
            beta = den > 0.0 ? std::max(0.0, num / den) : 0.0;
        }
        // transport the previous direction by tangent projection
        std::vector<double> dT(x.size(), 0.0);
        if (beta > 0.0) tangent(x, d, dT);
        double slope = 0.0;
        for (std::size_t k : free_nodes)
            for (int c = 0; c < nc; ++c) {
                const std::size_t i = c * N + k;
                d[i] = -z[i] + beta * dT[i];
                slope += gT[i] * d[i];
            }
        if (!(slope < 0.0)) {
            slope = 0.0;
            for (std::size_t k : free_nodes)
                for (int c = 0; c < nc; ++c) {
                    const std::size_t i = c * N + k;
                    d[i] = -z[i];
                    slope += gT[i] * d[i];
                }
        }

        double t = std::min(o.initial_step, 2.0 * t_last);
        bool accepted = false;
        double Et = 0.0;
        for (int bt = 0; bt < 80 && !accepted; ++bt, t *= o.backtracking_factor) {
            xt = x;
            bool ok = true;
            for (std::size_t k : free_nodes) {
                for (int c = 0; c < nc; ++c) xt[c * N + k] += t * d[c * N + k];
                for (int f = 0; f < nf; ++f) {
                    double& a = xt[(2 * f) * N + k];
                    double& b = xt[(2 * f + 1) * N + k];
                    double n = std::hypot(a, b);
                    if (n < 1e-14) {
                        ok = false;
                        break;
                    }
                    a /= n;
                    b /= n;
                }
                if (!ok) break;
            }
            if (!ok) continue;
            Et = evaluate(init, xt, p, o.epsilon, trial);
            if (std::isfinite(Et) && Et <= E + o.armijo_c * t * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (have_prev) {
                // restart from steepest descent once before giving up
                have_prev = false;
                t_last = o.initial_step;
                continue;
            }
            break;
        }
        if (Et > E) throw Error("energy increased on an accepted step");
        std::swap(x, xt);
        std::swap(ws, trial);
        E = Et;
        t_last = t;
        last_step = t;
        gprev = gT;
        zprev = z;
        have_prev = true;
    }
    res.iterations = it;
    res.energy = E;
    res.field = init.with_values(std::move(x));
    return res;
}

void write_iteration_log(std::ostream& os, const std::vector<IterationRecord>& log) {
    os << "iter,energy,grad_norm,step\n";
    for (const auto& r : log)
        os << r.iter << ',' << fmt17(r.energy) << ',' << fmt17(r.grad_norm) << ',' << fmt17(r.step) << '\n';
}

namespace {

int parse_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("bad integer '" + std::string(s) + "'");
    return v;
}

}  // namespace

BoundaryDatum parse_boundary(const std::string& spec, const TargetManifold& target) {
    BoundaryDatum b;
    b.charge = zero_charge(target);
    const int nc = target.ambient_dim();
    if (spec == "constant") {
        b.g = [nc](double, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            out[0] = 1.0;
            if (nc >= 4) out[2] = 1.0;
        };
        return b;
    }
    if (spec.starts_with("degree:")) {
        int d = parse_int(std::string_view(spec).substr(7));
        if (target.kind() == ManifoldKind::FlatTorus) throw Error("degree:<d> needs a circle or euclidean target");
        if (target.kind() == ManifoldKind::Circle) b.charge.windings = {d};
        b.g = [d](double th, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            out[0] = std::cos(d * th);
            if (out.size() > 1) out[1] = std::sin(d * th);
        };
        return b;
    }
    if (spec.starts_with("winding:")) {
        if (target.kind() != ManifoldKind::FlatTorus) throw Error("winding:<w1>,<w2> needs the torus target");
        auto rest = std::string_view(spec).substr(8);
        auto comma = rest.find(',');
        if (comma == std::string_view::npos) throw Error("winding:<w1>,<w2> needs two integers");
        int w1 = parse_int(rest.substr(0, comma)), w2 = parse_int(rest.substr(comma + 1));
        b.charge.windings = {w1, w2};
        b.g = [w1, w2](double th, std::span<double> out) {
            out[0] = std::cos(w1 * th);
            out[1] = std::sin(w1 * th);
            out[2] = std::cos(w2 * th);
            out[3] = std::sin(w2 * th);
        };
        return b;
    }
    if (spec.starts_with("bump:")) {
        const std::string_view digits = std::string_view(spec).substr(5);
        double a = 0.0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), a);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || !std::isfinite(a))
            throw Error("bump:<amplitude> needs a number");
        b.g = [a, nc](double th, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            out[0] = std::cos(a * std::sin(th));
            if (nc > 1) out[1] = std::sin(a * std::sin(th));
            if (nc >= 4) {
                out[2] = std::cos(a * std::cos(th));
                out[3] = std::sin(a * std::cos(th));
            }
        };
        return b;
    }
    throw Error("unknown boundary generator '" + spec + "'");
}

std::vector<double> harmonic_extension(const DiscreteField& bf, std::span<const int> components) {
    const DomainGrid& g = bf.grid();
    const std::size_t N = g.node_count();
    std::vector<double> v = bf.values();
    const double omega = 2.0 / (1.0 + std::sin(kPi * g.spacing() / 2.0));
    std::vector<std::size_t> interior;
    for (std::size_t k = 0; k < N; ++k)
        if (g.inside(k) && !g.boundary(k)) interior.push_back(k);
    const std::size_t nx = static_cast<std::size_t>(g.nx());
    for (int c : components) {
        double* u = v.data() + c * N;
        for (int sweep = 0; sweep < 20000; ++sweep) {
            double change = 0.0;
            for (std::size_t k : interior) {
                double target = 0.25 * (u[k - 1] + u[k + 1] + u[k - nx] + u[k + nx]);
                double delta = omega * (target - u[k]);
                u[k] += delta;
                change = std::max(change, std::abs(delta));
            }
            if (change < 1e-12) break;
        }
    }
    return v;
}

DiscreteField initial_field(GridPtr grid, const TargetManifold& target, const BoundaryDatum& datum,
                            const InitOptions& opts) {
    const int nc = target.ambient_dim();
    auto boundary_field = DiscreteField::from_function(grid, target, [&](Vec2 x, std::span<double> out) {
        datum.g(std::atan2(x.y, x.x), out);
    });
    const DomainGrid& g = *grid;
    const std::size_t N = g.node_count();
    std::vector<double> v = boundary_field.values();

    // Euclidean components and zero-winding circle factors: harmonic extension
    std::vector<int> harmonic;
    if (target.kind() == ManifoldKind::Euclidean)
        for (int c = 0; c < nc; ++c) harmonic.push_back(c);
    for (int f = 0; f < target.circle_factors(); ++f)
        if (datum.charge.windings[f] == 0) {
            harmonic.push_back(2 * f);
            harmonic.push_back(2 * f + 1);
        }
    if (!harmonic.empty()) {
        auto hv = harmonic_extension(boundary_field, harmonic);
        for (int c : harmonic)
            std::copy(hv.begin() + c * N, hv.begin() + (c + 1) * N, v.begin() + c * N);
    }

    std::vector<double> buf(static_cast<std::size_t>(nc));
    const double R = std::max(std::abs(g.origin().x), std::abs(g.origin().y));
    for (int f = 0; f < target.circle_factors(); ++f) {
        const int w = datum.charge.windings[f];
        if (w == 0) continue;
        const int n = std::abs(w), s = w > 0 ? 1 : -1;
        // phase of the product of n unit vortices on a ring
        auto vortex_phase = [&](Vec2 x) {
            if (n == 1) return s * std::atan2(x.y, x.x);
            double ph = 0.0;
            for (int j = 0; j < n; ++j) {
                double a = kTwoPi * j / n;
                ph += s * std::atan2(x.y - opts.split_radius * std::sin(a), x.x - opts.split_radius * std::cos(a));
            }
            return ph;
        };
        for (std::size_t k = 0; k < N; ++k) {
            if (!g.inside(k)) continue;
            Vec2 x = g.node(k);
            double th = std::atan2(x.y, x.x);
            datum.g(th, buf);
            const double gphase = std::atan2(buf[2 * f + 1], buf[2 * f]);
            double phase;
            if (n == 1) {
                phase = gphase;
            } else {
                // degree-0 mismatch on the outer circle, faded in radially
                Vec2 xb{R * std::cos(th), R * std::sin(th)};
                double mismatch = std::remainder(gphase - vortex_phase(xb), kTwoPi);
                phase = vortex_phase(x) + mismatch * std::min(1.0, norm(x) / R);
            }
            v[(2 * f) * N + k] = std::cos(phase);
            v[(2 * f + 1) * N + k] = std::sin(phase);
        }
    }

    if (opts.noise > 0.0) {
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> gauss(0.0, opts.noise);
        for (std::size_t k = 0; k < N; ++k) {
            if (!g.free(k)) continue;
            for (int c = 0; c < nc; ++c) v[c * N + k] += gauss(rng);
        }
    }
    for (std::size_t k = 0; k < N; ++k) {
        if (!g.inside(k)) continue;
        for (int c = 0; c < nc; ++c) buf[c] = v[c * N + k];
        target.project_inplace(buf);
        for (int c = 0; c < nc; ++c) v[c * N + k] = buf[c];
    }
    return boundary_field.with_values(std::move(v));
}

void ContinuationLadder::validate() const {
    if (exponents.empty()) throw Error("ladder: no exponents");
    for (std::size_t k = 0; k < exponents.size(); ++k) {
        if (!(exponents[k] > 1.0 && exponents[k] < 2.0)) throw Error("ladder: exponents must lie in (1,2)");
        if (k && !(exponents[k] > exponents[k - 1])) throw Error("ladder: exponents must increase strictly");
    }
    if (options.size() != 1 && options.size() != exponents.size())
        throw Error("ladder: need one shared SolverOptions or one per exponent");
}

const SolverOptions& ContinuationLadder::options_for(std::size_t k) const {
    return options.size() == 1 ? options[0] : options[k];
}

std::vector<LadderStep> run_ladder(const DiscreteField& init, const ContinuationLadder& ladder,
                                   const std::function<void(const LadderStep&)>& on_step) {
    ladder.validate();
    std::vector<LadderStep> steps;
    steps.reserve(ladder.exponents.size());
    const DiscreteField* start = &init;
    for (std::size_t k = 0; k < ladder.exponents.size(); ++k) {
        steps.push_back({ladder.exponents[k], minimize_p_harmonic(*start, ladder.exponents[k], ladder.options_for(k))});
        if (on_step) on_step(steps.back());
        start = &steps.back().result.field;
    }
    return steps;
}

}  // namespace pharm
