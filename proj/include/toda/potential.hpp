#pragma once
// Confining potentials V: polynomials or tabulated values.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "toda/errors.hpp"

namespace toda {

struct Potential {
    enum class Kind { polynomial, table };

    Kind kind = Kind::polynomial;
    std::vector<double> coeffs{0.0, 0.0, 1.0};  // V(x) = sum c_k x^k
    std::vector<double> tx, tv;                  // table nodes, linear in between, +inf outside

    static Potential polynomial(std::vector<double> c) {
        while (c.size() > 1 && c.back() == 0.0) c.pop_back();
        if (c.empty()) c.push_back(0.0);
        std::size_t d = c.size() - 1;
        if (d > 0 && (d % 2 != 0 || !(c.back() > 0)))
            throw DomainError("Potential: polynomial must have even degree and positive leading coefficient");
        for (double x : c)
            if (!std::isfinite(x)) throw DomainError("Potential: non-finite coefficient");
        Potential p;
        p.coeffs = std::move(c);
        return p;
    }

    static Potential quadratic(double c2 = 1.0) { return polynomial({0.0, 0.0, c2}); }

    static Potential table(std::vector<double> x, std::vector<double> v) {
        if (x.size() != v.size() || x.size() < 2) throw DomainError("Potential: table needs >= 2 matching nodes");
        for (std::size_t i = 1; i < x.size(); ++i)
            if (!(x[i] > x[i - 1])) throw DomainError("Potential: table nodes must increase");
        for (double y : v)
            if (!std::isfinite(y)) throw DomainError("Potential: non-finite table value");
        Potential p;
        p.kind = Kind::table;
        p.coeffs.clear();
        p.tx = std::move(x);
        p.tv = std::move(v);
        return p;
    }

    int degree() const { return kind == Kind::polynomial ? int(coeffs.size()) - 1 : -1; }
    bool is_quadratic() const { return kind == Kind::polynomial && degree() == 2; }

    bool is_even() const {
        if (kind == Kind::table) {
            for (std::size_t i = 0; i < tx.size(); ++i)
                if (std::fabs(tx[i] + tx[tx.size() - 1 - i]) > 1e-12 || tv[i] != tv[tv.size() - 1 - i]) return false;
            return true;
        }
        for (std::size_t k = 1; k < coeffs.size(); k += 2)
            if (coeffs[k] != 0.0) return false;
        return true;
    }

    // (V1): differentiable; (V2): algebraic growth at infinity
    bool differentiable() const { return kind == Kind::polynomial; }
    bool algebraic_growth() const { return kind == Kind::polynomial && degree() >= 2; }
    double growth_exponent() const { return kind == Kind::polynomial ? double(degree()) : 0.0; }

    double operator()(double x) const {
        if (kind == Kind::polynomial) {
            double v = 0.0;
            for (std::size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
            return v;
        }
        if (x < tx.front() || x > tx.back()) return std::numeric_limits<double>::infinity();
        auto it = std::upper_bound(tx.begin(), tx.end(), x);
        std::size_t i = std::min<std::size_t>(std::size_t(it - tx.begin()), tx.size() - 1);
        double t = (x - tx[i - 1]) / (tx[i] - tx[i - 1]);
        return tv[i - 1] + t * (tv[i] - tv[i - 1]);
    }

    double derivative(double x) const {
        if (kind == Kind::polynomial) {
            double v = 0.0;
            for (std::size_t k = coeffs.size(); k-- > 1;) v = v * x + double(k) * coeffs[k];
            return v;
        }
        if (x < tx.front() || x > tx.back()) return std::numeric_limits<double>::quiet_NaN();
        auto it = std::upper_bound(tx.begin(), tx.end(), x);
        std::size_t i = std::min<std::size_t>(std::size_t(it - tx.begin()), tx.size() - 1);
        return (tv[i] - tv[i - 1]) / (tx[i] - tx[i - 1]);
    }

    std::string describe() const {
        std::string s;
        if (kind == Kind::table) return "table(" + std::to_string(tx.size()) + ")";
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            if (coeffs[k] == 0.0) continue;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s%.17g*x^%zu", s.empty() ? "" : "+", coeffs[k], k);
            s += buf;
        }
        return s.empty() ? "0" : s;
    }
};

// Smallest R with V(x) - slope*ln(1+|x|) >= target for |x| >= R (bisection on a monotone envelope).
inline double growth_radius(const Potential& V, double slope, double target, double rmax = 1e3) {
    auto g = [&](double r) { return std::min(V(r), V(-r)) - slope * std::log1p(r); };
    double lo = 0.0, hi = 1.0;
    while (g(hi) < target) {
        hi *= 2.0;
        if (hi > rmax) throw DomainError("growth_radius: potential grows too slowly");
    }
    // every r beyond the returned point must also qualify; scan the last doubling interval coarsely
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        bool ok = true;
        for (int k = 0; k <= 16 && ok; ++k) ok = g(mid + (hi - mid) * k / 16.0) >= target;
        (ok ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace toda
