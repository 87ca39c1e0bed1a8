#pragma once
// The (N-1)-fold integral over the Dirichlet cells, its determinant lower bound and
// the small-N upper envelope.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "toda/linalg.hpp"
#include "toda/quadrature.hpp"
#include "toda/spectral.hpp"

namespace toda {

enum class IntegralMethod { determinant_quadrature, tensor_brute_force, lower_bound, upper_envelope };

struct IntegralResult {
    double log_abs = 0.0;
    int sign = 1;
    IntegralMethod method = IntegralMethod::determinant_quadrature;
    double est_error = 0.0;

    double value() const { return sign * std::exp(log_abs); }
};

namespace detail {

struct Nodes {
    std::vector<double> mu;
    std::vector<double> w;  // includes the 1/sqrt((mu-e)(mu-p)) factor
};

// Nodes for int g(mu) dmu / sqrt((mu-e)(mu-p)) from the endpoint e to m, p just outside e.
// mu = e +- delta sinh^2(phi) turns the measure into 2 dphi.
inline void half_nodes(double e, double p, double m, const GaussRule& rule, Nodes& out) {
    const double delta = std::fabs(e - p);
    const double len = std::fabs(m - e);
    if (!(delta > 0)) throw DegenerateError("half_nodes: zero band width");
    if (len == 0.0) return;
    const double dir = m > e ? 1.0 : -1.0;
    const double phi_max = std::asinh(std::sqrt(len / delta));
    const int panels = std::max(1, int(std::ceil(phi_max / 1.5)));
    const double width = phi_max / panels;
    for (int k = 0; k < panels; ++k) {
        double mid = (k + 0.5) * width, half = 0.5 * width;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            double phi = mid + half * rule.x[i];
            double sh = std::sinh(phi);
            out.mu.push_back(e + dir * delta * sh * sh);
            out.w.push_back(2.0 * half * rule.w[i]);
        }
    }
}

inline double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline void require_inside(const SpectralData& sd, const char* who) {
    if (sd.lambda_minus.size() != sd.n() || sd.eta.size() != sd.n())
        throw SizeError(std::string(who) + ": incomplete spectral data");
    if (!membership_AN(sd.lambda_plus, sd.eps).ok())
        throw DomainError(std::string(who) + ": spectrum not in A_N");
}

// log of the determinant of [int_{K_j} q_i w], q_i scaled monic Chebyshev.
inline SignedLog integral_log_det(const SpectralData& sd, int order) {
    const std::size_t n = sd.n();
    const std::size_t d = n - 1;
    const auto rule = gauss_legendre(order);
    double lo = std::min(sd.lambda_plus.front(), sd.lambda_minus.front());
    double hi = std::max(sd.lambda_plus.back(), sd.lambda_minus.back());
    const double c = 0.5 * (lo + hi);
    const double s = hi > lo ? 0.5 * (hi - lo) : 1.0;

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(Eigen::Index(d), Eigen::Index(d));
    double log_scale = 0.0;
    std::vector<double> logw, tcheb(d);
    for (std::size_t j = 0; j < d; ++j) {
        const int u = upsilon(n, j);
        const auto& same = sd.lambda(u);
        const auto& other = sd.lambda(-u);
        const double mid = 0.5 * (same[j] + same[j + 1]);
        Nodes nodes;
        std::vector<std::size_t> owner;
        half_nodes(same[j], other[j], mid, rule, nodes);
        owner.resize(nodes.mu.size(), j);
        half_nodes(same[j + 1], other[j + 1], mid, rule, nodes);
        owner.resize(nodes.mu.size(), j + 1);

        logw.assign(nodes.mu.size(), 0.0);
        for (std::size_t q = 0; q < nodes.mu.size(); ++q) {
            double x = nodes.mu[q], acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == owner[q]) continue;
                acc += std::log(std::fabs(x - sd.lambda_plus[k])) + std::log(std::fabs(x - sd.lambda_minus[k]));
            }
            logw[q] = std::log(nodes.w[q]) - 0.5 * acc;
        }
        double col = *std::max_element(logw.begin(), logw.end());
        log_scale += col;
        for (std::size_t q = 0; q < nodes.mu.size(); ++q) {
            double wq = std::exp(logw[q] - col);
            double t = (nodes.mu[q] - c) / s;
            tcheb[0] = 1.0;
            if (d > 1) tcheb[1] = t;
            for (std::size_t i = 2; i < d; ++i) tcheb[i] = 2.0 * t * tcheb[i - 1] - tcheb[i - 2];
            for (std::size_t i = 0; i < d; ++i) M(Eigen::Index(i), Eigen::Index(j)) += wq * tcheb[i];
        }
    }
    auto det = log_det(M);
    det.log_abs += log_scale;
    for (std::size_t k = 1; k < d; ++k) det.log_abs += double(k) * std::log(s) + (1.0 - double(k)) * std::log(2.0);
    return det;
}

}  // namespace detail

inline IntegralResult integral_I(const SpectralData& sd, int quad_order = 48) {
    if (quad_order < 8) throw DomainError("integral_I: quad_order must be >= 8");
    IntegralResult r;
    r.method = IntegralMethod::determinant_quadrature;
    if (sd.n() <= 1) return r;
    detail::require_inside(sd, "integral_I");
    auto coarse = detail::integral_log_det(sd, quad_order);
    auto fine = detail::integral_log_det(sd, 2 * quad_order);
    r.log_abs = fine.log_abs;
    r.sign = fine.sign;
    r.est_error = std::fabs(fine.log_abs - coarse.log_abs);
    if (fine.sign == 0 || !(r.est_error <= 1e-4 * std::max(1.0, std::fabs(r.log_abs))))
        throw AccuracyError("integral_I: quadrature did not converge");
    return r;
}

namespace detail {

// ln|lambda_a^u - eta_a| from d prod_{b != a}(eta_a - eta_b + d) = 2 u eps, Newton in log form.
// Used when the plain difference has lost its digits (large N, tiny eps).
inline double log_root_offset(const std::vector<double>& eta, std::size_t a, int u, double eps) {
    auto p = derivative_at_root(eta, a);
    if (p.sign == 0) throw DegenerateError("log_root_offset: repeated eta");
    const double target = std::log(2.0 * eps);
    double ld = target - p.log_abs;
    const double sgn = double(u * p.sign);
    for (int it = 0; it < 50; ++it) {
        const double d = sgn * std::exp(ld);
        double f = ld - target, df = 1.0;  // derivative with respect to ln|d|
        for (std::size_t b = 0; b < eta.size(); ++b) {
            if (b == a) continue;
            const double g = eta[a] - eta[b] + d;
            f += std::log(std::fabs(g));
            df += d / g;
        }
        const double step = f / df;
        ld -= step;
        if (std::fabs(step) < 1e-15) break;
    }
    return ld;
}

}  // namespace detail

// A_{ks} = ln|(lambda_{k+1}^{u_k} - eta_s)/(lambda_k^{u_k} - eta_s)|, (N-1) x N.
inline Eigen::MatrixXd log_ratio_matrix(const SpectralData& sd) {
    const std::size_t n = sd.n();
    Eigen::MatrixXd A(Eigen::Index(n - 1), Eigen::Index(n));
    auto gap = [&](std::size_t s) {
        double g = std::numeric_limits<double>::infinity();
        if (s > 0) g = std::min(g, sd.eta[s] - sd.eta[s - 1]);
        if (s + 1 < n) g = std::min(g, sd.eta[s + 1] - sd.eta[s]);
        return g;
    };
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const int u = upsilon(n, k);
        const auto& lam = sd.lambda(u);
        auto log_dist = [&](std::size_t i, std::size_t s) {
            double v = std::fabs(lam[i] - sd.eta[s]);
            if (i == s && v < 1e-4 * gap(s)) return detail::log_root_offset(sd.eta, s, u, sd.eps);
            if (v == 0.0) throw DegenerateError("log_ratio_matrix: zero spacing");
            return std::log(v);
        };
        for (std::size_t s = 0; s < n; ++s) A(Eigen::Index(k), Eigen::Index(s)) = log_dist(k + 1, s) - log_dist(k, s);
    }
    return A;
}

inline IntegralResult lower_bound_detA(const SpectralData& sd) {
    IntegralResult r;
    r.method = IntegralMethod::lower_bound;
    const std::size_t n = sd.n();
    if (n <= 1) return r;
    detail::require_inside(sd, "lower_bound_detA");
    Eigen::MatrixXd A = log_ratio_matrix(sd).leftCols(Eigen::Index(n - 1));
    auto det = log_det(A);
    r.log_abs = std::log(double(n)) + det.log_abs - log_vandermonde(sd.eta).log_abs;
    r.sign = det.sign;
    return r;
}

// ln Phi(Delta/(2 delta)) = 2 asinh(sqrt(Delta/(2 delta))).
inline double phi_diag_element(double delta, double Delta) {
    if (!(delta > 0)) throw DomainError("phi_diag_element: delta must be positive");
    if (Delta < 0) throw DomainError("phi_diag_element: Delta must be non-negative");
    return 2.0 * std::asinh(std::sqrt(Delta / (2.0 * delta)));
}

namespace detail {

// Column j of M for the half sigma; entries i = 0..n-1.
inline std::vector<double> envelope_column(const SpectralData& sd, int varsigma, std::size_t j, int sigma,
                                           const GaussRule& rule, bool closed_diag = true) {
    const std::size_t n = sd.n();
    const int u = upsilon(n, j);
    const auto& same = sd.lambda(u);
    const auto& other = sd.lambda(-u);
    const auto& lam = sd.lambda(varsigma);
    const std::size_t a = j + std::size_t(sigma);
    const double mid = 0.5 * (same[j] + same[j + 1]);
    Nodes nodes;
    half_nodes(same[a], other[a], mid, rule, nodes);
    std::vector<double> col(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == a && closed_diag) {
            col[i] = phi_diag_element(std::fabs(sd.lambda_plus[a] - sd.lambda_minus[a]), same[j + 1] - same[j]);
            continue;
        }
        double acc = 0.0;
        for (std::size_t q = 0; q < nodes.mu.size(); ++q)
            acc += nodes.w[q] * (nodes.mu[q] - lam[a]) / (nodes.mu[q] - lam[i]);
        col[i] = acc;
    }
    return col;
}

inline double envelope_log(const SpectralData& sd, int order) {
    const std::size_t n = sd.n();
    const auto rule = gauss_legendre(order);
    double total = 0.0;
    for (int vs : {1, -1}) {
        std::vector<std::vector<double>> cols[2];
        for (int sg = 0; sg < 2; ++sg)
            for (std::size_t j = 0; j + 1 < n; ++j) cols[sg].push_back(envelope_column(sd, vs, j, sg, rule));
        std::vector<double> terms;
        const std::size_t count = std::size_t(1) << (n - 1);
        Eigen::MatrixXd M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t mask = 0; mask < count; ++mask) {
            for (std::size_t j = 0; j + 1 < n; ++j) {
                const auto& c = cols[(mask >> j) & 1u][j];
                for (std::size_t i = 0; i < n; ++i) M(Eigen::Index(i), Eigen::Index(j)) = c[i];
            }
            M.col(Eigen::Index(n - 1)).setOnes();
            terms.push_back(log_det(M).log_abs);
        }
        total += 0.5 * (log_sum_exp(terms) - log_vandermonde(sd.lambda(vs)).log_abs);
    }
    return total;
}

}  // namespace detail

inline IntegralResult upper_envelope(const SpectralData& sd, int quad_order = 48) {
    IntegralResult r;
    r.method = IntegralMethod::upper_envelope;
    const std::size_t n = sd.n();
    if (n > 12) throw SizeError("upper_envelope: N must be <= 12");
    if (n <= 1) return r;
    detail::require_inside(sd, "upper_envelope");
    double coarse = detail::envelope_log(sd, quad_order);
    r.log_abs = detail::envelope_log(sd, 2 * quad_order);
    r.est_error = std::fabs(r.log_abs - coarse);
    return r;
}

// log of |ln eps|^N / Delta(lambda+) * prod_j (1 + (2/ell) (1/N) sum_{k != j} ln|lambda-_j - lambda+_k|).
// Returns -inf when a factor is not positive.
inline double heuristic_asymptotic(const SpectralData& sd, double ell) {
    detail::require_inside(sd, "heuristic_asymptotic");
    const std::size_t n = sd.n();
    double out = double(n) * std::log(std::fabs(std::log(sd.eps))) - log_vandermonde(sd.lambda_plus).log_abs;
    for (std::size_t j = 0; j < n; ++j) {
        double u = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (k != j) u += std::log(std::fabs(sd.lambda_minus[j] - sd.lambda_plus[k]));
        double f = 1.0 + (2.0 / ell) * u / double(n);
        if (!(f > 0)) return -std::numeric_limits<double>::infinity();
        out += std::log(f);
    }
    return out;
}

}  // namespace toda
