#pragma once
// Monic polynomials given by their real roots, evaluated in log-magnitude form.

#include <cmath>
#include <limits>
#include <vector>

#include "toda/errors.hpp"

namespace toda {

struct SignedLog {
    double log_abs = 0.0;
    int sign = 1;  // 0 for an exact zero

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

inline SignedLog product_eval(const std::vector<double>& roots, double x) {
    SignedLog out;
    for (double r : roots) {
        double d = x - r;
        if (d == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
        if (d < 0) out.sign = -out.sign;
        out.log_abs += std::log(std::fabs(d));
    }
    return out;
}

// P'/P at x.
inline double log_derivative(const std::vector<double>& roots, double x) {
    double s = 0.0;
    for (double r : roots) s += 1.0 / (x - r);
    return s;
}

// P'(r_a) for the a-th root, in log form.
inline SignedLog derivative_at_root(const std::vector<double>& roots, std::size_t a) {
    SignedLog out;
    for (std::size_t k = 0; k < roots.size(); ++k) {
        if (k == a) continue;
        double d = roots[a] - roots[k];
        if (d == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
        if (d < 0) out.sign = -out.sign;
        out.log_abs += std::log(std::fabs(d));
    }
    return out;
}

// Vandermonde prod_{i<j} (x_j - x_i).
inline SignedLog log_vandermonde(const std::vector<double>& x) {
    SignedLog out;
    for (std::size_t j = 0; j < x.size(); ++j)
        for (std::size_t i = 0; i < j; ++i) {
            double d = x[j] - x[i];
            if (d == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
            if (d < 0) out.sign = -out.sign;
            out.log_abs += std::log(std::fabs(d));
        }
    return out;
}

// Roots of P' for strictly increasing roots; one per gap.
inline std::vector<double> critical_points(const std::vector<double>& roots) {
    std::vector<double> out;
    if (roots.size() < 2) return out;
    out.reserve(roots.size() - 1);
    for (std::size_t k = 0; k + 1 < roots.size(); ++k) {
        double lo = roots[k], hi = roots[k + 1];
        if (!(hi > lo)) throw DegenerateError("critical_points: roots not strictly increasing");
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 300; ++it) {
            double g = 0.0, dg = 0.0;
            for (double r : roots) {
                double inv = 1.0 / (x - r);
                g += inv;
                dg -= inv * inv;
            }
            if (g > 0) lo = x; else if (g < 0) hi = x; else break;
            double xn = x - g / dg;
            if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
            if (xn == x || xn == lo || xn == hi) { x = xn; break; }
            if (std::fabs(xn - x) <= 2e-16 * std::fabs(x) + 1e-300) { x = xn; break; }
            x = xn;
        }
        out.push_back(x);
    }
    return out;
}

// Roots of prod(x - r_k) + c, one in each monotone piece cut out by crit.
// Throws NotInAN when some piece carries no real root.
inline std::vector<double> shifted_roots(const std::vector<double>& r, double c,
                                         const std::vector<double>& crit) {
    const std::size_t n = r.size();
    if (c == 0.0) return r;
    if (n >= 2 && crit.size() != n - 1) throw SizeError("shifted_roots: crit size mismatch");
    const double log_c = std::log(std::fabs(c));
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> out(n);
    for (std::size_t a = 0; a < n; ++a) {
        int slope = ((n - 1 - a) % 2 == 0) ? 1 : -1;
        int target = c > 0 ? -1 : 1;
        int dir = (target == slope) ? 1 : -1;
        double far = dir > 0 ? (a + 1 == n ? inf : crit[a]) : (a == 0 ? -inf : crit[a - 1]);
        if (std::isinf(far)) {
            double t = std::max(1.0, std::exp(log_c / double(n)));
            for (int it = 0; it < 2000; ++it) {
                far = r[a] + dir * t;
                if (product_eval(r, far).log_abs > log_c) break;
                t *= 2.0;
            }
        } else if (!(product_eval(r, far).log_abs > log_c)) {
            throw NotInAN("shifted polynomial has no real root in piece " + std::to_string(a));
        }
        double near = r[a];
        auto h = [&](double x) { return product_eval(r, x).log_abs - log_c; };
        double x = 0.5 * (near + far);
        for (int it = 0; it < 400; ++it) {
            double hx = h(x);
            if (hx < 0) near = x; else if (hx > 0) far = x; else { near = far = x; break; }
            double d = log_derivative(r, x) * dir;  // dh/d(distance)
            double xn = x - dir * hx / d;
            double lo = std::min(near, far), hi = std::max(near, far);
            if (!(xn > lo && xn < hi) || !std::isfinite(xn)) xn = 0.5 * (near + far);
            if (xn == near || xn == far || xn == x) break;
            x = xn;
        }
        double hn = near == r[a] ? -inf : h(near);
        double hf = h(far);
        out[a] = std::fabs(hn) < std::fabs(hf) ? near : far;
    }
    return out;
}

}  // namespace toda
