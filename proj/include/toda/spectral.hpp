#pragma once
// Periodic, antiperiodic and Dirichlet spectra and the root web lambda+, lambda-, eta, zeta.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "toda/core.hpp"
#include "toda/linalg.hpp"
#include "toda/poly.hpp"

namespace toda {

inline std::vector<double> eig_periodic(const FlaschkaState& s, Sign sign) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lax_matrix(s, sign), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("eig_periodic: eigensolver did not converge");
    const auto& ev = es.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

// Spectrum of L with its first row and column removed.
inline std::vector<double> dirichlet_spectrum(const FlaschkaState& s) {
    s.validate();
    const int n = int(s.n());
    if (n < 3) throw SizeError("dirichlet_spectrum: needs N >= 3");
    Eigen::VectorXd diag(n - 1), sub(n - 2);
    for (int j = 1; j < n; ++j) diag(j - 1) = s.b[j];
    for (int j = 1; j + 1 < n; ++j) sub(j - 1) = s.a[j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("dirichlet_spectrum: eigensolver did not converge");
    const auto& ev = es.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

struct SpectralData {
    std::vector<double> lambda_plus;
    std::vector<double> lambda_minus;
    std::vector<double> eta;
    std::vector<double> zeta;
    std::vector<double> mu;  // empty when absent
    double eps = 0.0;

    std::size_t n() const { return lambda_plus.size(); }
    // lambda^{+} or lambda^{-} by parity +1 / -1
    const std::vector<double>& lambda(int parity) const { return parity > 0 ? lambda_plus : lambda_minus; }
};

// upsilon_k = (-1)^{N-k} for the 0-based gap index k (1-based k+1).
inline int upsilon(std::size_t n, std::size_t k) { return ((n - (k + 1)) % 2 == 0) ? 1 : -1; }

inline bool strictly_increasing(const std::vector<double>& x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) return false;
    return true;
}

enum class MembershipStatus { inside, outside, boundary };

struct Membership {
    MembershipStatus status = MembershipStatus::inside;
    double margin = std::numeric_limits<double>::infinity();
    bool ok() const { return status == MembershipStatus::inside; }
};

// margin = min_j (-1)^{N-j} P(zeta_j) / (2 eps) - 1
inline Membership membership_AN(const std::vector<double>& lambda_plus, double eps) {
    if (!strictly_increasing(lambda_plus)) throw DomainError("membership_AN: lambda+ must be strictly increasing");
    if (!(eps > 0)) throw DomainError("membership_AN: eps must be positive");
    const std::size_t n = lambda_plus.size();
    Membership m;
    auto zeta = critical_points(lambda_plus);
    const double log2e = std::log(2.0 * eps);
    for (std::size_t j = 0; j < zeta.size(); ++j) {
        double r = std::exp(product_eval(lambda_plus, zeta[j]).log_abs - log2e);
        double v = r + upsilon(n, j) - 1.0;
        m.margin = std::min(m.margin, v);
    }
    if (std::fabs(m.margin) < 1e-12) m.status = MembershipStatus::boundary;
    else m.status = m.margin > 0 ? MembershipStatus::inside : MembershipStatus::outside;
    return m;
}

inline SpectralData roots_from_lambda_plus(const std::vector<double>& lambda_plus, double eps) {
    auto m = membership_AN(lambda_plus, eps);
    if (m.status == MembershipStatus::outside)
        throw NotInAN("roots_from_lambda_plus: lambda+ not in A_N (margin " + std::to_string(m.margin) + ")");
    SpectralData sd;
    sd.lambda_plus = lambda_plus;
    sd.eps = eps;
    sd.zeta = critical_points(lambda_plus);
    sd.eta = shifted_roots(lambda_plus, 2.0 * eps, sd.zeta);
    sd.lambda_minus = shifted_roots(lambda_plus, 4.0 * eps, sd.zeta);
    return sd;
}

inline SpectralData spectral_data_from_eta(const std::vector<double>& eta, double eps) {
    if (!strictly_increasing(eta)) throw DomainError("spectral_data_from_eta: eta must be strictly increasing");
    SpectralData sd;
    sd.eta = eta;
    sd.eps = eps;
    sd.zeta = critical_points(eta);
    sd.lambda_plus = shifted_roots(eta, -2.0 * eps, sd.zeta);
    sd.lambda_minus = shifted_roots(eta, 2.0 * eps, sd.zeta);
    return sd;
}

// Root web from lambda+ of the state, eps = prod a, plus the Dirichlet spectrum when N >= 3.
inline SpectralData spectral_data(const FlaschkaState& s) {
    auto sd = roots_from_lambda_plus(eig_periodic(s, Sign::plus), prod_a(s));
    if (s.n() >= 3) sd.mu = dirichlet_spectrum(s);
    return sd;
}

struct InterlacingReport {
    bool ok = true;
    double worst = 0.0;  // largest ordering violation
};

// lambda_k^{-u} <= lambda_k^{u} <= mu_k <= lambda_{k+1}^{u} <= lambda_{k+1}^{-u}, u = upsilon_k.
inline InterlacingReport check_interlacing(const std::vector<double>& lp, const std::vector<double>& lm,
                                           const std::vector<double>& mu, double tol = 1e-10) {
    const std::size_t n = lp.size();
    if (lm.size() != n || (!mu.empty() && mu.size() + 1 != n))
        throw SizeError("check_interlacing: size mismatch");
    InterlacingReport r;
    auto leq = [&](double x, double y) {
        double v = x - y;
        if (v > r.worst) r.worst = v;
        if (v > tol) r.ok = false;
    };
    for (std::size_t k = 0; k + 1 < n; ++k) {
        int u = upsilon(n, k);
        const auto& same = u > 0 ? lp : lm;
        const auto& other = u > 0 ? lm : lp;
        leq(other[k], same[k]);
        leq(same[k + 1], other[k + 1]);
        if (!mu.empty()) {
            leq(same[k], mu[k]);
            leq(mu[k], same[k + 1]);
        } else {
            leq(same[k], same[k + 1]);
        }
    }
    return r;
}

inline double kappeler_bound(std::size_t n, double ell) {
    return 2.0 * std::numbers::pi * std::exp(-ell / 2.0) / double(n);
}

inline double max_band_width(const std::vector<double>& lp, const std::vector<double>& lm) {
    double m = 0.0;
    for (std::size_t k = 0; k < lp.size(); ++k) m = std::max(m, std::fabs(lp[k] - lm[k]));
    return m;
}

struct LambdaPair {
    std::vector<double> plus;
    std::vector<double> minus;
};

// First-order lambda^{+-}_a ~ eta_a +- 2 eps / P'(eta_a).
inline LambdaPair lambda_expansion(const std::vector<double>& eta, double eps) {
    if (!strictly_increasing(eta)) throw DomainError("lambda_expansion: eta must be strictly increasing");
    LambdaPair out;
    for (std::size_t a = 0; a < eta.size(); ++a) {
        auto d = derivative_at_root(eta, a);
        if (d.sign == 0 || d.log_abs < std::log(std::numeric_limits<double>::min()))
            throw DegenerateError("lambda_expansion: |P'(eta_a)| below machine floor");
        double shift = 2.0 * eps * d.sign * std::exp(-d.log_abs);
        out.plus.push_back(eta[a] + shift);
        out.minus.push_back(eta[a] - shift);
    }
    return out;
}

enum class RootMap { minus_to_plus, eta_to_plus };

inline std::vector<double> root_map(const std::vector<double>& source, double eps, RootMap which) {
    if (!strictly_increasing(source)) throw DomainError("root_map: source must be strictly increasing");
    double c = which == RootMap::minus_to_plus ? -4.0 * eps : -2.0 * eps;
    try {
        return shifted_roots(source, c, critical_points(source));
    } catch (const NotInAN& e) {
        throw DomainError(std::string("root_map: image leaves the real domain: ") + e.what());
    }
}

// Delta(source)/Delta(image)
inline double jacobian_ratio(const std::vector<double>& source, double eps, RootMap which) {
    auto image = root_map(source, eps, which);
    return std::exp(log_vandermonde(source).log_abs - log_vandermonde(image).log_abs);
}

// |det| of the central-difference Jacobian of root_map.
inline double fd_jacobian_det(const std::vector<double>& source, double eps, RootMap which,
                              double rel_step = 1e-6) {
    const std::size_t n = source.size();
    double scale = 0.0;
    for (double x : source) scale = std::max(scale, std::fabs(x));
    if (n > 1) scale = std::max(scale, source.back() - source.front());
    if (scale == 0.0) scale = 1.0;
    const double h = rel_step * scale;
    Eigen::MatrixXd J(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        auto xp = source, xm = source;
        xp[k] += h;
        xm[k] -= h;
        auto ip = root_map(xp, eps, which), im = root_map(xm, eps, which);
        for (std::size_t i = 0; i < n; ++i) J(i, k) = (ip[i] - im[i]) / (2.0 * h);
    }
    return std::exp(log_det(J).log_abs);
}

struct AppendixReport {
    double product_residual = 0.0;  // relative
    double young_slack = 0.0;       // >= 0 when the min-inequality holds (log scale)
    double neighbour_slack = 0.0;   // min over k, >= 0 when it holds (log scale)
    bool product_ok = true;
    bool young_ok = true;
    bool neighbour_ok = true;
    bool ok() const { return product_ok && young_ok && neighbour_ok; }
};

inline AppendixReport appendix_identities(const std::vector<double>& eta, double product_tol = 1e-8) {
    const std::size_t n = eta.size();
    if (n < 2) throw SizeError("appendix_identities: needs N >= 2");
    if (!strictly_increasing(eta)) throw DomainError("appendix_identities: eta must be strictly increasing");
    auto zeta = critical_points(eta);
    std::vector<double> ldp(n), lpz(n - 1);
    for (std::size_t k = 0; k < n; ++k) ldp[k] = derivative_at_root(eta, k).log_abs;
    for (std::size_t j = 0; j + 1 < n; ++j) lpz[j] = product_eval(eta, zeta[j]).log_abs;

    AppendixReport r;
    double lhs = 0.0, rhs = double(n) * std::log(double(n));
    for (double v : ldp) lhs += v;
    for (double v : lpz) rhs += v;
    r.product_residual = std::fabs(std::expm1(lhs - rhs));
    r.product_ok = r.product_residual <= product_tol;

    const double slack_tol = 1e-12;
    double min_pz = *std::min_element(lpz.begin(), lpz.end());
    double min_dp = *std::min_element(ldp.begin(), ldp.end());
    r.young_slack = std::log(double(n)) + min_dp - double(n - 1) / double(n) * min_pz;
    r.young_ok = r.young_slack >= -slack_tol * (1.0 + std::fabs(min_dp));

    r.neighbour_slack = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double l = 0.5 * (ldp[k] + ldp[k + 1]);
        double rr = std::log(4.0) + lpz[k] - std::log(eta[k + 1] - eta[k]);
        r.neighbour_slack = std::min(r.neighbour_slack, rr - l);
        if (rr - l < -slack_tol * (1.0 + std::fabs(rr))) r.neighbour_ok = false;
    }
    return r;
}

inline void require_distinct(const std::vector<double>& x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (x[i] == x[j]) throw DomainError("duplicate entries");
}

// A(x)_{ij} = 1_{i<=j} prod_{m>=i, m!=j} 1/(x_j - x_m)
inline Eigen::MatrixXd appendix_d_matrix(const std::vector<double>& x) {
    require_distinct(x);
    const std::size_t n = x.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double p = 1.0;
            for (std::size_t m = i; m < n; ++m)
                if (m != j) p /= (x[j] - x[m]);
            A(i, j) = p;
        }
    return A;
}

// inverse: 1_{i<=j} prod_{k>j} (x_i - x_k)
inline Eigen::MatrixXd appendix_d_inverse_matrix(const std::vector<double>& x) {
    require_distinct(x);
    const std::size_t n = x.size();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double p = 1.0;
            for (std::size_t k = j + 1; k < n; ++k) p *= (x[i] - x[k]);
            B(i, j) = p;
        }
    return B;
}

inline double appendix_d_inverse(const std::vector<double>& x) {
    Eigen::MatrixXd R = appendix_d_matrix(x) * appendix_d_inverse_matrix(x) -
                        Eigen::MatrixXd::Identity(Eigen::Index(x.size()), Eigen::Index(x.size()));
    return x.empty() ? 0.0 : R.cwiseAbs().maxCoeff();
}

}  // namespace toda
