#pragma once
// Rate functional, Euler-Lagrange fixed points and the beta-ensemble bridge.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/sinh_sinh.hpp>

#include "toda/errors.hpp"
#include "toda/measures.hpp"
#include "toda/potential.hpp"

namespace toda {

struct FixedPointSettings {
    int max_iter = 20000;
    double alpha = 0.3;
    double tol = 1e-10;
};

struct RateParams {
    double ell = 1.0;
    Potential V = Potential::quadratic();
    GridSpec grid;
    FixedPointSettings fixed_point;

    void validate() const {
        if (!(ell > 0)) throw DomainError("RateParams: ell must be positive");
        if (!(fixed_point.tol > 0)) throw DomainError("RateParams: tol must be positive");
        if (!(fixed_point.alpha > 0 && fixed_point.alpha <= 1)) throw DomainError("RateParams: alpha must lie in (0, 1]");
        if (grid.n < 8 || !(grid.h > 0)) throw DomainError("RateParams: grid too small");
    }
};

// [-R, R] with V(R) - slope ln(1+R) >= 28, so e^{-V} tails are below ~1e-12
inline GridSpec default_grid(const Potential& V, double slope, std::size_t n = 2048) {
    return GridSpec::symmetric(growth_radius(V, slope, 28.0), n);
}

inline RateParams make_rate_params(double ell, const Potential& V, std::size_t n = 2048) {
    RateParams p;
    p.ell = ell;
    p.V = V;
    p.grid = default_grid(V, 4.0 / ell + 2.0, n);
    p.validate();
    return p;
}

struct Constraint {
    bool ok = false;
    double margin = 0.0;  // min of 1 + (2/ell) U over cells carrying mass
};

inline Constraint in_constraint_set(const GriddedMeasure& mu, double ell) {
    auto U = potential_on_grid(mu);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mu.n(); ++i)
        if (mu.density[i] > 0) m = std::min(m, 1.0 + 2.0 / ell * U[i]);
    return {m >= 0.0, m};
}

// I[mu] = int V dmu - int ln max{0, 1 + (2/ell) U} dmu - Ent[mu]; +inf off the constraint set
inline double rate_I(const GriddedMeasure& mu, const RateParams& p) {
    const double c = 2.0 / p.ell;
    auto U = potential_on_grid(mu);
    double v = 0.0, inter = 0.0, ent = 0.0, bad = 0.0;
    for (std::size_t i = 0; i < mu.n(); ++i) {
        double r = mu.density[i];
        if (r <= 0) continue;
        double Vx = p.V(mu.center(i));
        if (!std::isfinite(Vx)) return std::numeric_limits<double>::infinity();
        v += Vx * r;
        double g = 1.0 + c * U[i];
        if (g <= 1e-14) { bad += r * mu.h; continue; }
        inter += r * std::log(g);
        ent += r * std::log(r);
    }
    if (bad > 1e-10) return std::numeric_limits<double>::infinity();
    return (v - inter + ent) * mu.h;
}

// I >= (1/4) int V dmu - C with C = sup[(4/ell) ln(1+|x|) - V/2] + ln int e^{-V/4}
inline double rate_lower_bound_constant(const Potential& V, double ell) {
    double sup = -std::numeric_limits<double>::infinity();
    double R = growth_radius(V, 8.0 / ell, 0.0);
    for (int k = -20000; k <= 20000; ++k) {
        double x = R * k / 20000.0;
        sup = std::max(sup, 4.0 / ell * std::log1p(std::fabs(x)) - 0.5 * V(x));
    }
    // V is polynomial so the sup is attained inside [-R, R]; pad for the grid search
    sup += 1e-6;
    boost::math::quadrature::sinh_sinh<double> ss;
    double z = ss.integrate([&](double x) {
        double e = -0.25 * V(x);
        return e < -745 ? 0.0 : std::exp(e);
    });
    return sup + std::log(z);
}

struct TracePoint {
    int iteration = 0;
    double residual = 0.0;
    double rate = 0.0;
};

struct FixedPointResult {
    GriddedMeasure mu;
    int iterations = 0;
    double residual = 0.0;
    double margin = 0.0;
    double alpha = 0.0;
    std::vector<TracePoint> trace;
};

enum class InitialGuess { gaussian, uniform };

namespace detail {

inline std::vector<double> normalized_log(std::vector<double> psi, double h) {
    double m = *std::max_element(psi.begin(), psi.end());
    double s = 0.0;
    for (double x : psi) s += std::exp(x - m);
    double lz = m + std::log(s * h);
    for (double& x : psi) x -= lz;
    return psi;
}

inline std::vector<double> exp_vec(const std::vector<double>& psi) {
    std::vector<double> r(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) r[i] = std::exp(psi[i]);
    return r;
}

// x-dependence of psi - target on cells with density > 1e-8
inline double bulk_residual(const std::vector<double>& psi, const std::vector<double>& target, double h) {
    double avg = 0.0, w = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        double r = std::exp(psi[i]);
        if (r > 1e-8) { avg += r * (psi[i] - target[i]); w += r; }
    }
    avg /= w;
    double res = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i)
        if (std::exp(psi[i]) > 1e-8) res = std::max(res, std::fabs(psi[i] - target[i] - avg));
    (void)h;
    return res;
}

// Damped log-space iteration psi <- (1-alpha) psi + alpha * map(psi); map returns false when the
// proposed iterate leaves the admissible set.
inline FixedPointResult fixed_point(const GridSpec& g, std::vector<double> psi, const FixedPointSettings& fp,
                                    const std::function<bool(const std::vector<double>&, std::vector<double>&)>& map,
                                    const std::function<double(const GriddedMeasure&)>& rate_of,
                                    const char* who) {
    FixedPointResult out;
    double alpha = fp.alpha;
    std::vector<double> target(psi.size()), trial(psi.size());
    psi = normalized_log(psi, g.h);
    if (!map(psi, target)) throw NumericError(std::string(who) + ": initial guess outside the admissible set");
    int it = 0, rising = 0;
    double res = bulk_residual(psi, normalized_log(target, g.h), g.h);
    for (; it < fp.max_iter; ++it) {
        if (it % 50 == 0 || res <= fp.tol) {
            GriddedMeasure m(g, exp_vec(psi));
            out.trace.push_back({it, res, rate_of ? rate_of(m) : 0.0});
        }
        if (res <= fp.tol) break;
        auto tn = normalized_log(target, g.h);
        for (std::size_t i = 0; i < psi.size(); ++i) trial[i] = (1 - alpha) * psi[i] + alpha * tn[i];
        trial = normalized_log(trial, g.h);
        std::vector<double> next_target(psi.size());
        if (!map(trial, next_target)) {
            alpha *= 0.5;
            if (alpha < 1e-6) throw NumericError(std::string(who) + ": damping collapsed at the constraint boundary");
            --it;
            continue;
        }
        psi.swap(trial);
        target.swap(next_target);
        double prev = res;
        res = bulk_residual(psi, normalized_log(target, g.h), g.h);
        if (!std::isfinite(res)) throw NumericError(std::string(who) + ": non-finite residual");
        // an oscillating mode outruns the damping: back off
        rising = res > prev ? rising + 1 : 0;
        if (rising >= 4 && alpha > 1e-3) {
            alpha *= 0.5;
            rising = 0;
        }
    }
    if (res > fp.tol) {
        std::vector<double> r;
        for (auto& t : out.trace) r.push_back(t.residual);
        r.push_back(res);
        throw ConvergenceError(std::string(who) + ": no convergence within max_iter", r);
    }
    out.mu = GriddedMeasure(g, exp_vec(psi));
    out.mu.normalize();
    out.iterations = it;
    out.residual = res;
    out.alpha = alpha;
    return out;
}

inline std::vector<double> initial_log_density(const GridSpec& g, InitialGuess init, double spread) {
    std::vector<double> psi(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        double x = g.center(i) / spread;
        psi[i] = init == InitialGuess::gaussian ? -x * x : (std::fabs(x) <= 1.0 ? 0.0 : -50.0 * (std::fabs(x) - 1.0));
    }
    return psi;
}

}  // namespace detail

// Minimiser of I over probability measures (even V), by the damped Euler-Lagrange iteration.
inline FixedPointResult minimize_nu(const RateParams& p, InitialGuess init = InitialGuess::gaussian) {
    p.validate();
    const GridSpec& g = p.grid;
    const double c = 2.0 / p.ell;
    const auto K = log_kernel(g.n, g.h);
    std::vector<double> Vx(g.n);
    for (std::size_t i = 0; i < g.n; ++i) Vx[i] = p.V(g.center(i));

    auto map = [&](const std::vector<double>& psi, std::vector<double>& target) {
        auto rho = detail::exp_vec(psi);
        auto U = toeplitz_apply(K, rho);
        std::vector<double> q(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            double gi = 1.0 + c * U[i];
            if (!(gi > 0)) return false;
            q[i] = rho[i] / gi;
            target[i] = -Vx[i] + std::log(gi);
        }
        auto W = toeplitz_apply(K, q);
        for (std::size_t i = 0; i < g.n; ++i) target[i] += c * W[i];
        return true;
    };

    // widen the start until 1 + (2/ell) U stays positive across the grid
    double spread = 0.5;
    std::vector<double> psi, tmp(g.n);
    for (int k = 0;; ++k) {
        psi = detail::normalized_log(detail::initial_log_density(g, init, spread), g.h);
        auto U = potential_on_grid(GriddedMeasure(g, detail::exp_vec(psi)));
        double m = INFINITY;
        for (double u : U) m = std::min(m, 1.0 + c * u);
        if (m > 0.1) break;
        spread *= 1.25;
        if (spread > 0.45 * (g.right() - g.x0)) throw DomainError("minimize_nu: grid too narrow for an admissible start");
    }
    auto rate_of = [&](const GriddedMeasure& m) { return rate_I(m, p); };
    auto r = detail::fixed_point(g, psi, p.fixed_point, map, rate_of, "minimize_nu");
    r.margin = in_constraint_set(r.mu, p.ell).margin;
    return r;
}

// rho proportional to exp(-V + 2 P U[rho])
inline FixedPointResult beta_equilibrium(double P, const RateParams& p) {
    if (!(P > 0)) throw DomainError("beta_equilibrium: P must be positive");
    p.validate();
    const GridSpec& g = p.grid;
    const auto K = log_kernel(g.n, g.h);
    std::vector<double> Vx(g.n);
    for (std::size_t i = 0; i < g.n; ++i) Vx[i] = p.V(g.center(i));
    auto map = [&](const std::vector<double>& psi, std::vector<double>& target) {
        auto U = toeplitz_apply(K, detail::exp_vec(psi));
        for (std::size_t i = 0; i < g.n; ++i) target[i] = -Vx[i] + 2.0 * P * U[i];
        return true;
    };
    std::vector<double> psi(g.n);
    for (std::size_t i = 0; i < g.n; ++i) psi[i] = -Vx[i];
    return detail::fixed_point(g, psi, p.fixed_point, map, nullptr, "beta_equilibrium");
}

struct TestFunction {
    std::string name;
    std::function<double(double)> f;
};

// bounded-Lipschitz battery, each with ||f||_inf + Lip(f) <= 1
inline std::vector<TestFunction> bl_battery() {
    std::vector<TestFunction> out;
    for (double w : {0.5, 1.0, 2.0, 3.0}) {
        char nc[32], ns[32];
        std::snprintf(nc, sizeof nc, "cos(%gx)", w);
        std::snprintf(ns, sizeof ns, "sin(%gx)", w);
        out.push_back({nc, [w](double x) { return std::cos(w * x) / (1 + w); }});
        out.push_back({ns, [w](double x) { return std::sin(w * x) / (1 + w); }});
    }
    out.push_back({"lorentz", [](double x) { return 1.0 / (1 + x * x) / 1.65; }});
    out.push_back({"tanh", [](double x) { return std::tanh(x) / 2; }});
    out.push_back({"hat", [](double x) { return std::max(0.0, 1 - std::fabs(x)) / 2; }});
    out.push_back({"gauss", [](double x) { return std::exp(-x * x / 2) / (1 + std::exp(-0.5)); }});
    return out;
}

// d/dP (P mu_P) at P by central differences, as a signed density on the grid of p
inline std::vector<double> chi_density(double P, double step, const RateParams& p) {
    if (!(step > 0) || P - step <= 0 || step < 1e-12 * P) throw NumericError("chi_density: finite-difference step underflow");
    auto lo = beta_equilibrium(P - step, p), hi = beta_equilibrium(P + step, p);
    std::vector<double> d(p.grid.n);
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = ((P + step) * hi.mu.density[i] - (P - step) * lo.mu.density[i]) / (2 * step);
    return d;
}

struct BridgeReport {
    double m = 0.0;       // int dnu / (1 + (2/ell) U[nu])
    double s_star = 0.0;  // m / ell
    double sup_error = 0.0;
    double control_sup_error = 0.0;  // same battery at 2 s*
    std::vector<std::string> names;
    std::vector<double> errors;
    GriddedMeasure nu;
};

inline double battery_sup(const GriddedMeasure& nu, const std::vector<double>& chi, const GridSpec& g,
                          std::vector<double>* each = nullptr) {
    double sup = 0.0;
    for (auto& t : bl_battery()) {
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < g.n; ++i) {
            double f = t.f(g.center(i));
            a += f * nu.density[i];
            b += f * chi[i];
        }
        double e = std::fabs(a - b) * g.h;
        if (each) each->push_back(e);
        sup = std::max(sup, e);
    }
    return sup;
}

inline BridgeReport rel_beta_bridge(const RateParams& p, double rel_step = 1e-3) {
    if (!p.V.is_even()) throw DomainError("rel_beta_bridge: even potential required");
    BridgeReport r;
    r.nu = minimize_nu(p).mu;
    auto U = potential_on_grid(r.nu);
    double m = 0.0;
    for (std::size_t i = 0; i < U.size(); ++i) m += r.nu.density[i] / (1.0 + 2.0 / p.ell * U[i]);
    r.m = m * p.grid.h;
    r.s_star = r.m / p.ell;
    for (auto& t : bl_battery()) r.names.push_back(t.name);
    r.sup_error = battery_sup(r.nu, chi_density(r.s_star, rel_step * r.s_star, p), p.grid, &r.errors);
    r.control_sup_error = battery_sup(r.nu, chi_density(2 * r.s_star, rel_step * r.s_star, p), p.grid);
    return r;
}

}  // namespace toda
