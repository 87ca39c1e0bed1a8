#pragma once
// Flaschka variables, Lax matrices and the periodic Toda flow.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "toda/errors.hpp"

namespace toda {

enum class Sign { plus = 1, minus = -1 };

struct FlaschkaState {
    std::vector<double> a;  // a_j > 0
    std::vector<double> b;

    std::size_t n() const { return a.size(); }

    void validate() const {
        if (a.size() != b.size()) throw SizeError("state: a and b lengths differ");
        if (a.size() < 2) throw SizeError("state: chain length must be >= 2");
        for (double x : a)
            if (!(x > 0) || !std::isfinite(x)) throw DomainError("state: a_j must be positive and finite");
        for (double x : b)
            if (!std::isfinite(x)) throw DomainError("state: b_j must be finite");
    }

    bool operator==(const FlaschkaState&) const = default;
};

struct ChainParams {
    int n = 2;
    double ell = 1.0;
    double eps = std::exp(-1.0);

    static ChainParams make(int n, double ell) {
        if (n < 2) throw SizeError("ChainParams: n must be >= 2");
        if (!(ell > 0)) throw DomainError("ChainParams: ell must be positive");
        return {n, ell, std::exp(-n * ell / 2.0)};
    }
};

inline double prod_a(const FlaschkaState& s) {
    double p = 1.0;
    for (double x : s.a) p *= x;
    return p;
}

// For N = 2 the corner adds onto the (1,2) entry: a_1 + sign*a_2.
inline Eigen::MatrixXd lax_matrix(const FlaschkaState& s, Sign sign) {
    s.validate();
    const int n = int(s.n());
    const double sg = sign == Sign::plus ? 1.0 : -1.0;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) L(j, j) = s.b[j];
    for (int j = 0; j + 1 < n; ++j) L(j, j + 1) = L(j + 1, j) = s.a[j];
    L(0, n - 1) += sg * s.a[n - 1];
    L(n - 1, 0) += sg * s.a[n - 1];
    return L;
}

inline double hamiltonian(const FlaschkaState& s) {
    double h = 0.0;
    for (std::size_t j = 0; j < s.n(); ++j) h += 0.5 * s.b[j] * s.b[j] + s.a[j] * s.a[j];
    return h;
}

// tr (L+)^j for j = 1..jmax.
inline std::vector<double> conserved_traces(const FlaschkaState& s, int jmax) {
    if (jmax < 1) throw DomainError("conserved_traces: jmax must be >= 1");
    Eigen::MatrixXd L = lax_matrix(s, Sign::plus);
    Eigen::MatrixXd P = L;
    std::vector<double> out;
    for (int j = 1; j <= jmax; ++j) {
        out.push_back(P.trace());
        if (j < jmax) P = P * L;
    }
    return out;
}

namespace detail {

inline void toda_rhs(const std::vector<double>& y, std::vector<double>& dy, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t jp = (j + 1) % n, jm = (j + n - 1) % n;
        double aj = y[j];
        dy[j] = 0.5 * aj * (y[n + jp] - y[n + j]);
        dy[n + j] = aj * aj - y[jm] * y[jm];
    }
}

}  // namespace detail

struct FlowStats {
    int accepted = 0;
    int rejected = 0;
};

// Dormand-Prince 5(4) on (a, b); tol is used as both absolute and relative tolerance.
inline FlaschkaState flow(const FlaschkaState& s, double t, double tol, FlowStats* stats = nullptr) {
    s.validate();
    if (!std::isfinite(t)) throw DomainError("flow: t must be finite");
    if (!(tol > 0)) throw DomainError("flow: tol must be positive");
    if (t == 0.0) return s;

    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const std::size_t n = s.n(), m = 2 * n;
    std::vector<double> y(m), k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), tmp(m), yn(m);
    std::copy(s.a.begin(), s.a.end(), y.begin());
    std::copy(s.b.begin(), s.b.end(), y.begin() + n);

    const double dir = t > 0 ? 1.0 : -1.0;
    const double T = std::fabs(t);
    double tc = 0.0;
    double h = std::min(T, 0.05);
    detail::toda_rhs(y, k1, n);

    auto stage = [&](std::vector<double>& out, auto&& combo) {
        for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + dir * h * combo(i);
        for (std::size_t j = 0; j < n; ++j)
            if (!(tmp[j] > 0)) return false;
        detail::toda_rhs(tmp, out, n);
        return true;
    };

    while (tc < T) {
        if (tc + h > T) h = T - tc;
        if (h < 1e-14 * std::max(1.0, tc))
            throw IntegrationError("flow: step size underflow", dir * tc);
        bool ok = stage(k2, [&](std::size_t i) { return a21 * k1[i]; }) &&
                  stage(k3, [&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; }) &&
                  stage(k4, [&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; }) &&
                  stage(k5, [&](std::size_t i) {
                      return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i];
                  }) &&
                  stage(k6, [&](std::size_t i) {
                      return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
                  });
        if (ok) {
            for (std::size_t i = 0; i < m; ++i)
                yn[i] = y[i] + dir * h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            for (std::size_t j = 0; j < n; ++j)
                if (!(yn[j] > 0)) ok = false;
        }
        if (!ok) {
            h *= 0.5;
            if (stats) ++stats->rejected;
            continue;
        }
        detail::toda_rhs(yn, k7, n);
        double err = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            double sc = tol * (1.0 + std::max(std::fabs(y[i]), std::fabs(yn[i])));
            err = std::max(err, std::fabs(ei) / sc);
        }
        if (!std::isfinite(err)) {
            h *= 0.5;
            if (stats) ++stats->rejected;
            continue;
        }
        if (err <= 1.0) {
            tc += h;
            y.swap(yn);
            k1.swap(k7);
            if (stats) ++stats->accepted;
        } else if (stats) {
            ++stats->rejected;
        }
        double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
        h *= std::clamp(fac, 0.2, 5.0);
    }
    FlaschkaState out;
    out.a.assign(y.begin(), y.begin() + n);
    out.b.assign(y.begin() + n, y.end());
    return out;
}

}  // namespace toda
