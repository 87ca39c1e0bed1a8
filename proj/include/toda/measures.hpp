#pragma once
// Piecewise-constant probability measures on uniform grids.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <tuple>
#include <vector>

#include "toda/errors.hpp"

namespace toda {

struct GridSpec {
    double x0 = -8.0;
    double h = 1.0 / 128;
    std::size_t n = 2048;

    static GridSpec symmetric(double R, std::size_t n) { return {-R, 2.0 * R / double(n), n}; }
    double center(std::size_t i) const { return x0 + (double(i) + 0.5) * h; }
    double right() const { return x0 + double(n) * h; }
};

struct GriddedMeasure {
    double x0 = 0.0;
    double h = 1.0;
    std::vector<double> density;  // per unit length

    GriddedMeasure() = default;
    GriddedMeasure(double x0_, double h_, std::vector<double> d) : x0(x0_), h(h_), density(std::move(d)) {
        if (!(h > 0)) throw DomainError("GriddedMeasure: h must be positive");
    }
    GriddedMeasure(const GridSpec& g, std::vector<double> d) : GriddedMeasure(g.x0, g.h, std::move(d)) {}

    std::size_t n() const { return density.size(); }
    GridSpec grid() const { return {x0, h, n()}; }
    double center(std::size_t i) const { return x0 + (double(i) + 0.5) * h; }
    double edge(std::size_t i) const { return x0 + double(i) * h; }
    double cell_mass(std::size_t i) const { return density[i] * h; }

    double mass() const {
        double m = 0.0;
        for (double d : density) m += d;
        return m * h;
    }

    GriddedMeasure& normalize() {
        double m = mass();
        if (!(m > 0) || !std::isfinite(m)) throw DomainError("GriddedMeasure: cannot normalize zero mass");
        for (double& d : density) d /= m;
        return *this;
    }

    // density sampled at cell centres, normalized
    static GriddedMeasure from_function(const GridSpec& g, const std::function<double(double)>& f) {
        std::vector<double> d(g.n);
        for (std::size_t i = 0; i < g.n; ++i) d[i] = f(g.center(i));
        GriddedMeasure m(g, std::move(d));
        m.normalize();
        return m;
    }

    static GriddedMeasure uniform(const GridSpec& g, double a, double b) {
        return rebin_interval(g, a, b);
    }

    // uniform on [a, b] projected exactly onto the cells of g
    static GriddedMeasure rebin_interval(const GridSpec& g, double a, double b) {
        std::vector<double> d(g.n, 0.0);
        for (std::size_t i = 0; i < g.n; ++i) {
            double lo = std::max(a, g.x0 + double(i) * g.h), hi = std::min(b, g.x0 + double(i + 1) * g.h);
            if (hi > lo) d[i] = (hi - lo) / ((b - a) * g.h);
        }
        GriddedMeasure m(g, std::move(d));
        m.normalize();
        return m;
    }
};

inline double integrate(const GriddedMeasure& mu, const std::function<double(double)>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.n(); ++i)
        if (mu.density[i] != 0.0) s += f(mu.center(i)) * mu.density[i];
    return s * mu.h;
}

// exact first and second moments of the piecewise-constant density
inline double mean(const GriddedMeasure& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.n(); ++i) s += mu.center(i) * mu.density[i];
    return s * mu.h;
}

inline double second_moment(const GriddedMeasure& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.n(); ++i) {
        double c = mu.center(i);
        s += (c * c + mu.h * mu.h / 12.0) * mu.density[i];
    }
    return s * mu.h;
}

namespace detail {

// antiderivative of ln|t|
inline double log_antideriv(double t) { return t == 0.0 ? 0.0 : t * std::log(std::fabs(t)) - t; }

}  // namespace detail

// kernel[m + n - 1] = int over the cell at offset m of ln|x_centre - y| dy
inline std::vector<double> log_kernel(std::size_t n, double h) {
    std::vector<double> k(2 * n - 1);
    for (std::size_t i = 0; i < 2 * n - 1; ++i) {
        double m = double(i) - double(n - 1);
        k[i] = detail::log_antideriv((m + 0.5) * h) - detail::log_antideriv((m - 0.5) * h);
    }
    return k;
}

// out_i = sum_j kernel[i - j + n - 1] v_j
inline std::vector<double> toeplitz_apply(const std::vector<double>& kernel, const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* k = kernel.data() + i + n - 1;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += k[-std::ptrdiff_t(j)] * v[j];
        out[i] = s;
    }
    return out;
}

// U[mu] at the cell centres
inline std::vector<double> potential_on_grid(const GriddedMeasure& mu) {
    return toeplitz_apply(log_kernel(mu.n(), mu.h), mu.density);
}

// U[mu](x) = int ln|x - y| dmu(y), cell-exact
inline double log_potential(const GriddedMeasure& mu, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.n(); ++i) {
        if (mu.density[i] == 0.0) continue;
        double a = mu.edge(i), b = a + mu.h;
        s += mu.density[i] * (detail::log_antideriv(x - a) - detail::log_antideriv(x - b));
    }
    return s;
}

inline double entropy(const GriddedMeasure& mu) {
    double s = 0.0;
    for (double d : mu.density)
        if (d > 0) s -= d * std::log(d);
    return s * mu.h;
}

// exact overlap projection onto another grid
inline GriddedMeasure rebin(const GriddedMeasure& mu, const GridSpec& g) {
    std::vector<double> d(g.n, 0.0);
    for (std::size_t i = 0; i < mu.n(); ++i) {
        if (mu.density[i] == 0.0) continue;
        double a = mu.edge(i), b = a + mu.h;
        long k0 = std::max(0L, long(std::floor((a - g.x0) / g.h)));
        long k1 = std::min(long(g.n) - 1, long(std::floor((b - g.x0) / g.h)));
        for (long k = k0; k <= k1; ++k) {
            double lo = std::max(a, g.x0 + double(k) * g.h), hi = std::min(b, g.x0 + double(k + 1) * g.h);
            if (hi > lo) d[std::size_t(k)] += mu.density[i] * (hi - lo) / g.h;
        }
    }
    return GriddedMeasure(g, std::move(d));
}

namespace detail {

// Common grid for two measures: the aligned union, or the finer spacing over the union.
inline GridSpec union_grid(const GriddedMeasure& a, const GriddedMeasure& b, bool* aligned) {
    double lo = std::min(a.x0, b.x0), hi = std::max(a.edge(a.n()), b.edge(b.n()));
    double off = (b.x0 - a.x0) / a.h;
    *aligned = std::fabs(a.h - b.h) <= 1e-12 * a.h && std::fabs(off - std::round(off)) <= 1e-9;
    double h = std::min(a.h, b.h);
    std::size_t n = std::size_t(std::llround(std::ceil((hi - lo) / h - 1e-9)));
    return {lo, h, n};
}

// max sum w_i f_i over |f_i| <= s, |f_{i+1} - f_i| <= d
inline double bl_inner(const std::vector<double>& w, double s, double d) {
    if (s <= 0.0 || w.empty()) return 0.0;
    struct Seg { double len, raw; };
    std::deque<Seg> left, right;  // slopes > 0, slopes <= 0
    double offset = 0.0;
    double left_value = -s * w[0];
    (w[0] > 0 ? left : right).push_back({2.0 * s, w[0]});
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (d > 0) {
            right.push_front({2.0 * d, -offset});
            double rem = d;
            while (rem > 0) {
                auto& dq = left.empty() ? right : left;
                if (dq.empty()) break;
                Seg& f = dq.front();
                double slope = f.raw + offset;
                if (f.len <= rem) { left_value += slope * f.len; rem -= f.len; dq.pop_front(); }
                else { left_value += slope * rem; f.len -= rem; rem = 0; }
            }
            rem = d;
            while (rem > 0) {
                auto& dq = right.empty() ? left : right;
                if (dq.empty()) break;
                Seg& b = dq.back();
                if (b.len <= rem) { rem -= b.len; dq.pop_back(); }
                else { b.len -= rem; rem = 0; }
            }
        }
        offset += w[i];
        left_value -= s * w[i];
        while (!left.empty() && left.back().raw + offset <= 0) { right.push_front(left.back()); left.pop_back(); }
        while (!right.empty() && right.front().raw + offset > 0) { left.push_back(right.front()); right.pop_front(); }
    }
    double v = left_value;
    for (const auto& sg : left) v += (sg.raw + offset) * sg.len;
    return v;
}

}  // namespace detail

// sup over ||f||_inf + Lip(f) <= 1 of |int f d(mu - nu)|, masses placed at cell centres.
inline double bl_distance(const GriddedMeasure& mu, const GriddedMeasure& nu) {
    bool aligned = false;
    GridSpec g = detail::union_grid(mu, nu, &aligned);
    std::vector<double> w(g.n, 0.0);
    if (aligned) {
        auto add = [&](const GriddedMeasure& m, double sg) {
            long off = std::lround((m.x0 - g.x0) / g.h);
            for (std::size_t i = 0; i < m.n(); ++i) w[std::size_t(off) + i] += sg * m.cell_mass(i);
        };
        add(mu, 1.0);
        add(nu, -1.0);
    } else {
        auto a = rebin(mu, g), b = rebin(nu, g);
        for (std::size_t i = 0; i < g.n; ++i) w[i] = (a.density[i] - b.density[i]) * g.h;
    }
    auto value = [&](double L) { return detail::bl_inner(w, 1.0 - L, L * g.h); };
    // concave in L on [0, 1]
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = 1.0;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 90 && hi - lo > 1e-13; ++it) {
        if (f1 < f2) { lo = x1; x1 = x2; f1 = f2; x2 = lo + phi * (hi - lo); f2 = value(x2); }
        else { hi = x2; x2 = x1; f2 = f1; x1 = hi - phi * (hi - lo); f1 = value(x1); }
    }
    return std::max({f1, f2, value(0.0), value(1.0), 0.0});
}

inline GriddedMeasure dilate(const GriddedMeasure& mu, double rho) {
    if (!(rho > 0)) throw DomainError("dilate: rho must be positive");
    std::vector<double> d(mu.density);
    for (double& x : d) x /= rho;
    return GriddedMeasure(rho * mu.x0, rho * mu.h, std::move(d));
}

struct Truncation {
    GriddedMeasure measure;  // restricted to [-K1, K2], renormalized, mean zero
    double K1 = 0.0;
    double K2 = 0.0;
    double tail_mass = 0.0;
};

// Cuts [-K1, K2] so that the retained part keeps mean zero and the tails carry
// at most eta of |x|-moment. Needs a centred measure.
inline Truncation truncate_mean_preserving(const GriddedMeasure& mu, double eta) {
    if (!(eta > 0)) throw DomainError("truncate_mean_preserving: eta must be positive");
    const std::size_t n = mu.n();
    // F(y) = int_0^y |x| dmu on the positive side, and the mirror on the negative side
    auto F = [&](double y, int side) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double a = mu.edge(i), b = a + mu.h;
            double lo, hi;
            if (side > 0) { lo = std::max(a, 0.0); hi = std::min(b, y); }
            else { lo = std::max(a, -y); hi = std::min(b, 0.0); }
            if (hi > lo) s += mu.density[i] * 0.5 * std::fabs(hi * hi - lo * lo);
        }
        return s;
    };
    const double R = std::max(std::fabs(mu.x0), std::fabs(mu.edge(n)));
    const double Mp = F(R, 1), Mm = F(R, -1);
    if (std::fabs(Mp - Mm) > 1e-9 * std::max(1.0, Mp)) throw DomainError("truncate_mean_preserving: measure not centred");
    const double M = 0.5 * (Mp + Mm);
    if (!(M > 0)) throw DomainError("truncate_mean_preserving: no spread");
    auto solve = [&](double target, int side) {
        double lo = 0.0, hi = R;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (F(mid, side) < target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    double kt1 = solve(0.5 * Mm, -1), kt2 = solve(0.5 * Mp, 1);
    double cut = 0.5 * eta * std::min({1.0, kt1, kt2});
    if (cut >= M) throw DomainError("truncate_mean_preserving: eta too large");
    Truncation t;
    t.K1 = solve(Mm - cut, -1);
    t.K2 = solve(Mp - cut, 1);

    std::vector<double> c(n, 0.0);
    std::size_t il = n, ir = n;
    for (std::size_t i = 0; i < n; ++i) {
        double a = mu.edge(i), b = a + mu.h;
        double lo = std::max(a, -t.K1), hi = std::min(b, t.K2);
        if (hi > lo) c[i] = (hi - lo) / mu.h;
        if (a < -t.K1 && b > -t.K1) il = i;
        if (a < t.K2 && b > t.K2) ir = i;
    }
    // restore a zero first moment on the grid through the right boundary cell
    auto moment = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += c[i] * mu.density[i] * mu.center(i);
        return s;
    };
    std::size_t fix = ir != n ? ir : il;
    if (fix != n && mu.density[fix] > 0 && mu.center(fix) != 0.0) {
        double m0 = moment();
        c[fix] = std::clamp(c[fix] - m0 / (mu.density[fix] * mu.center(fix)), 0.0, 1.0);
    }
    std::vector<double> d(n);
    double kept = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = c[i] * mu.density[i];
        kept += d[i] * mu.h;
    }
    t.tail_mass = mu.mass() - kept;
    if (t.tail_mass > eta * (1.0 + 1e-12) + 1e-12)
        throw DomainError("truncate_mean_preserving: tail mass exceeds eta");
    t.measure = GriddedMeasure(mu.x0, mu.h, std::move(d));
    t.measure.normalize();
    return t;
}

// convolution with the uniform density on [-tau, tau]; the grid grows by ceil(tau/h) cells per side
inline GriddedMeasure mollify(const GriddedMeasure& mu, double tau) {
    if (!(tau > 0)) throw DomainError("mollify: tau must be positive");
    const std::size_t n = mu.n();
    const std::size_t pad = std::size_t(std::ceil(tau / mu.h - 1e-12));
    std::vector<double> Fe(n + 1, 0.0), He(n + 1, 0.0);  // CDF and its antiderivative at edges
    for (std::size_t i = 0; i < n; ++i) {
        Fe[i + 1] = Fe[i] + mu.density[i] * mu.h;
        He[i + 1] = He[i] + Fe[i] * mu.h + 0.5 * mu.density[i] * mu.h * mu.h;
    }
    auto H = [&](double y) {
        double t = (y - mu.x0) / mu.h;
        if (t <= 0) return 0.0;
        if (t >= double(n)) return He[n] + Fe[n] * (y - mu.edge(n));
        std::size_t k = std::size_t(t);
        double u = y - mu.edge(k);
        return He[k] + Fe[k] * u + 0.5 * mu.density[k] * u * u;
    };
    auto G = [&](double x) { return (H(x + tau) - H(x - tau)) / (2.0 * tau); };
    GriddedMeasure out;
    out.x0 = mu.x0 - double(pad) * mu.h;
    out.h = mu.h;
    out.density.resize(n + 2 * pad);
    double prev = G(out.x0);
    for (std::size_t i = 0; i < out.n(); ++i) {
        double next = G(out.edge(i + 1));
        out.density[i] = std::max(0.0, next - prev) / mu.h;
        prev = next;
    }
    return out;
}

}  // namespace toda
