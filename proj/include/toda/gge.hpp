#pragma once
// Generalised Gibbs ensembles: theta-model and leaf-constrained samplers.

#include <Eigen/Dense>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "toda/core.hpp"
#include "toda/errors.hpp"
#include "toda/measures.hpp"
#include "toda/parallel.hpp"
#include "toda/potential.hpp"
#include "toda/poly.hpp"
#include "toda/rng.hpp"
#include "toda/spectral.hpp"

namespace toda {

// tr V(L+), with the one-site convention b^2 + 2a^2 for N = 1
inline double trace_potential(const Potential& V, const std::vector<double>& a, const std::vector<double>& b);

namespace detail {

// (V(L+))_{mm} from a walk of length <= degree around site m; needs N >= 2*degree + 1
inline double site_energy(const std::vector<double>& c, const std::vector<double>& a,
                          const std::vector<double>& b, std::size_t m) {
    const int d = int(c.size()) - 1;
    const long n = long(a.size());
    double v[2][32] = {};
    double* cur = v[0];
    double* nxt = v[1];
    const int w = 2 * d + 1;
    auto site = [&](int o) { return std::size_t(((long(m) + o) % n + n) % n); };
    cur[d] = 1.0;
    double e = c[0];
    for (int k = 1; k <= d; ++k) {
        for (int i = 0; i < w; ++i) {
            int o = i - d;
            if (std::abs(o) > k) { nxt[i] = 0.0; continue; }
            std::size_t sm = site(o);
            double x = b[sm] * cur[i];
            if (i + 1 < w) x += a[sm] * cur[i + 1];
            if (i > 0) x += a[site(o - 1)] * cur[i - 1];
            nxt[i] = x;
        }
        std::swap(cur, nxt);
        e += c[std::size_t(k)] * cur[d];
    }
    return e;
}

inline bool local_energy_ok(const Potential& V, std::size_t n) {
    int d = V.degree();
    return V.kind == Potential::Kind::polynomial && d <= 15 && n >= 3 && long(n) >= 2L * d + 1;
}

inline double dense_trace(const Potential& V, const std::vector<double>& a, const std::vector<double>& b) {
    FlaschkaState s{a, b};
    Eigen::MatrixXd L = lax_matrix(s, Sign::plus);
    if (V.kind == Potential::Kind::table) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L, Eigen::EigenvaluesOnly);
        double t = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) t += V(es.eigenvalues()[i]);
        return t;
    }
    const int n = int(a.size());
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
    double t = V.coeffs[0] * n;
    for (std::size_t k = 1; k < V.coeffs.size(); ++k) {
        P = P * L;
        t += V.coeffs[k] * P.trace();
    }
    return t;
}

}  // namespace detail

inline double trace_potential(const Potential& V, const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    if (n == 1) {
        if (!V.is_quadratic()) throw SizeError("trace_potential: N = 1 needs a quadratic potential");
        return V(b[0]) + 2.0 * V.coeffs[2] * a[0] * a[0];
    }
    if (detail::local_energy_ok(V, n)) {
        double t = 0.0;
        for (std::size_t m = 0; m < n; ++m) t += detail::site_energy(V.coeffs, a, b, m);
        return t;
    }
    return detail::dense_trace(V, a, b);
}

struct SamplerConfig {
    int n = 16;
    std::optional<double> theta;  // theta-model
    std::optional<double> ell;    // leaf model
    std::size_t n_samples = 1000;
    std::size_t burn_in = 500;  // sweeps
    std::size_t thin = 1;       // sweeps between emitted states
    double proposal_scale = 0.5;
    std::uint64_t seed = 1;
    int chains = 4;
    bool force_mcmc = false;

    void validate() const {
        if (n < 1) throw SizeError("SamplerConfig: n must be >= 1");
        if (theta.has_value() == ell.has_value()) throw DomainError("SamplerConfig: set exactly one of theta, ell");
        if (theta && !(*theta > 0)) throw DomainError("SamplerConfig: theta must be positive");
        if (ell && !(*ell > 0)) throw DomainError("SamplerConfig: ell must be positive");
        if (n_samples < 1) throw DomainError("SamplerConfig: n_samples must be >= 1");
        if (chains < 1) throw DomainError("SamplerConfig: chains must be >= 1");
        if (thin < 1) throw DomainError("SamplerConfig: thin must be >= 1");
        if (!(proposal_scale > 0)) throw DomainError("SamplerConfig: proposal_scale must be positive");
    }
};

struct SampleBatch {
    int n = 0;
    std::vector<FlaschkaState> states;
    std::string method;
    std::vector<double> acceptance;  // per chain, mean over move types
    bool tuning_ok = true;

    double mean_acceptance() const {
        if (acceptance.empty()) return 1.0;
        double s = 0.0;
        for (double x : acceptance) s += x;
        return s / double(acceptance.size());
    }
};

namespace detail {

inline std::vector<std::size_t> chain_shares(std::size_t total, int chains) {
    std::vector<std::size_t> out(std::size_t(chains), total / std::size_t(chains));
    for (std::size_t c = 0; c < total % std::size_t(chains); ++c) ++out[c];
    return out;
}

struct Tuner {
    double scale;
    std::size_t tries = 0, accepts = 0, total_tries = 0, total_accepts = 0;

    void record(bool ok) {
        ++tries;
        accepts += ok;
        ++total_tries;
        total_accepts += ok;
    }
    void adapt() {
        if (tries < 50) return;
        double r = double(accepts) / double(tries);
        scale *= std::exp(2.0 * (r - 0.35));
        scale = std::clamp(scale, 1e-4, 50.0);
        tries = accepts = 0;
    }
    void reset_totals() { total_tries = total_accepts = tries = accepts = 0; }
    double rate() const { return total_tries ? double(total_accepts) / double(total_tries) : 1.0; }
};

// Energy bookkeeping for moves touching up to two sites.
struct EnergyWindow {
    const Potential& V;
    std::size_t n;
    bool local;
    int d;
    std::vector<int> mark;
    std::vector<std::size_t> sites;

    EnergyWindow(const Potential& v, std::size_t n_)
        : V(v), n(n_), local(local_energy_ok(v, n_)), d(v.degree()), mark(n_, 0) {}

    void collect(std::size_t i, std::size_t j) {
        sites.clear();
        for (std::size_t c : {i, j})
            for (int o = -d; o <= d; ++o) {
                std::size_t m = std::size_t(((long(c) + o) % long(n) + long(n)) % long(n));
                if (!mark[m]) { mark[m] = 1; sites.push_back(m); }
            }
        for (std::size_t m : sites) mark[m] = 0;
    }

    // energy of the touched window, or the full trace when windows are unavailable
    double partial(const std::vector<double>& a, const std::vector<double>& b) const {
        if (!local) return trace_potential(V, a, b);
        double e = 0.0;
        for (std::size_t m : sites) e += site_energy(V.coeffs, a, b, m);
        return e;
    }
};

inline bool finite_state(const std::vector<double>& a) {
    for (double x : a)
        if (!(x > 0) || !std::isfinite(x)) return false;
    return true;
}

}  // namespace detail

// Samples from exp(-tr V(L+)) prod a^{2 theta - 1} da db.
inline SampleBatch sample_unconstrained(const SamplerConfig& cfg, const Potential& V) {
    cfg.validate();
    if (!cfg.theta) throw DomainError("sample_unconstrained: theta required");
    const double theta = *cfg.theta;
    const std::size_t n = std::size_t(cfg.n);
    auto shares = detail::chain_shares(cfg.n_samples, cfg.chains);
    std::vector<std::vector<FlaschkaState>> out(shares.size());
    std::vector<double> acc(shares.size(), 1.0);

    const bool direct = V.is_quadratic() && (n == 1 || n >= 3) && !cfg.force_mcmc;
    if (n == 1 && !direct) throw SizeError("sample_unconstrained: N = 1 needs a quadratic potential and direct sampling");

    parallel_for(shares.size(), [&](std::size_t c) {
        auto rng = make_stream(cfg.seed, c);
        auto& dst = out[c];
        dst.reserve(shares[c]);
        if (direct) {
            const double c1 = V.coeffs[1], c2 = V.coeffs[2];
            std::normal_distribution<double> gb(-c1 / (2 * c2), std::sqrt(1.0 / (2 * c2)));
            std::gamma_distribution<double> ga(theta, 1.0 / (2 * c2));
            for (std::size_t k = 0; k < shares[c]; ++k) {
                FlaschkaState s{std::vector<double>(n), std::vector<double>(n)};
                for (std::size_t j = 0; j < n; ++j) {
                    double u;
                    do u = ga(rng); while (!(u > 0));
                    s.a[j] = std::sqrt(u);
                }
                for (std::size_t j = 0; j < n; ++j) s.b[j] = gb(rng);
                dst.push_back(std::move(s));
            }
            return;
        }
        std::normal_distribution<double> z(0.0, 1.0);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::vector<double> s(n, 0.0), a(n, 1.0), b(n, 0.0);
        detail::EnergyWindow win(V, n);
        detail::Tuner ts{cfg.proposal_scale}, tb{cfg.proposal_scale};
        auto sweep = [&](bool tuning) {
            for (std::size_t i = 0; i < n; ++i) {
                win.collect(i, i);
                {
                    double e0 = win.partial(a, b);
                    double s_old = s[i], a_old = a[i];
                    double ds = ts.scale * z(rng);
                    s[i] += ds;
                    a[i] = std::exp(s[i]);
                    double e1 = detail::finite_state(a) ? win.partial(a, b) : INFINITY;
                    double logr = -(e1 - e0) + 2.0 * theta * ds;
                    bool ok = std::isfinite(e1) && std::log(u01(rng)) < logr;
                    if (!ok) { s[i] = s_old; a[i] = a_old; }
                    ts.record(ok);
                }
                {
                    double e0 = win.partial(a, b);
                    double b_old = b[i];
                    b[i] += tb.scale * z(rng);
                    double e1 = win.partial(a, b);
                    bool ok = std::isfinite(e1) && std::log(u01(rng)) < -(e1 - e0);
                    if (!ok) b[i] = b_old;
                    tb.record(ok);
                }
            }
            if (tuning) { ts.adapt(); tb.adapt(); }
        };
        for (std::size_t k = 0; k < cfg.burn_in; ++k) sweep(true);
        ts.reset_totals();
        tb.reset_totals();
        for (std::size_t k = 0; k < shares[c]; ++k) {
            for (std::size_t t = 0; t < cfg.thin; ++t) sweep(false);
            dst.push_back(FlaschkaState{a, b});
        }
        acc[c] = 0.5 * (ts.rate() + tb.rate());
    });

    SampleBatch batch;
    batch.n = cfg.n;
    batch.method = direct ? "direct" : "mcmc";
    for (auto& v : out)
        for (auto& s : v) batch.states.push_back(std::move(s));
    if (!direct) {
        batch.acceptance = acc;
        for (double r : acc) batch.tuning_ok = batch.tuning_ok && r >= 0.1 && r <= 0.7;
    }
    return batch;
}

// Samples the leaf {sum b = 0, prod a = exp(-N ell / 2)}: pair moves along e_i - e_j in s = ln a and in b.
// With quadratic V the b-part is Gaussian and is drawn exactly.
inline SampleBatch sample_constrained(const SamplerConfig& cfg, const Potential& V) {
    cfg.validate();
    if (!cfg.ell) throw DomainError("sample_constrained: ell required");
    if (cfg.n < 2) throw SizeError("sample_constrained: N must be >= 2");
    const std::size_t n = std::size_t(cfg.n);
    const double target = -double(n) * *cfg.ell / 2.0;
    const bool exact_b = V.is_quadratic() && !cfg.force_mcmc;
    auto shares = detail::chain_shares(cfg.n_samples, cfg.chains);
    std::vector<std::vector<FlaschkaState>> out(shares.size());
    std::vector<double> acc(shares.size(), 1.0);

    parallel_for(shares.size(), [&](std::size_t c) {
        auto rng = make_stream(cfg.seed, c);
        std::normal_distribution<double> z(0.0, 1.0);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<double> s(n, target / double(n)), a(n), b(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) a[j] = std::exp(s[j]);
        detail::EnergyWindow win(V, n);
        detail::Tuner ts{cfg.proposal_scale}, tb{cfg.proposal_scale};
        const double r2 = 1.0 / std::sqrt(2.0);

        auto draw_b = [&] {
            const double c1 = V.coeffs[1], c2 = V.coeffs[2];
            std::normal_distribution<double> g(-c1 / (2 * c2), std::sqrt(1.0 / (2 * c2)));
            double m = 0.0;
            for (std::size_t j = 0; j < n; ++j) { b[j] = g(rng); m += b[j]; }
            m /= double(n);
            for (double& x : b) x -= m;
        };
        auto project = [&] {
            double ds = 0.0, db = 0.0;
            for (std::size_t j = 0; j < n; ++j) { ds += s[j]; db += b[j]; }
            ds = (ds - target) / double(n);
            db /= double(n);
            for (std::size_t j = 0; j < n; ++j) {
                s[j] -= ds;
                a[j] = std::exp(s[j]);
                b[j] -= db;
            }
        };
        auto pair = [&](std::size_t& i, std::size_t& j) {
            i = pick(rng);
            do j = pick(rng); while (j == i);
        };
        auto sweep = [&](bool tuning) {
            for (std::size_t k = 0; k < n; ++k) {
                std::size_t i, j;
                pair(i, j);
                win.collect(i, j);
                double e0 = win.partial(a, b);
                double si = s[i], sj = s[j], ai = a[i], aj = a[j];
                double dz = ts.scale * r2 * z(rng);
                s[i] += dz;
                s[j] -= dz;
                a[i] = std::exp(s[i]);
                a[j] = std::exp(s[j]);
                double e1 = detail::finite_state(a) ? win.partial(a, b) : INFINITY;
                bool ok = std::isfinite(e1) && std::log(u01(rng)) < -(e1 - e0);
                if (!ok) { s[i] = si; s[j] = sj; a[i] = ai; a[j] = aj; }
                ts.record(ok);
            }
            if (!exact_b)
                for (std::size_t k = 0; k < n; ++k) {
                    std::size_t i, j;
                    pair(i, j);
                    win.collect(i, j);
                    double e0 = win.partial(a, b);
                    double bi = b[i], bj = b[j];
                    double dz = tb.scale * r2 * z(rng);
                    b[i] += dz;
                    b[j] -= dz;
                    double e1 = win.partial(a, b);
                    bool ok = std::isfinite(e1) && std::log(u01(rng)) < -(e1 - e0);
                    if (!ok) { b[i] = bi; b[j] = bj; }
                    tb.record(ok);
                }
            project();
            if (tuning) { ts.adapt(); tb.adapt(); }
        };

        if (exact_b) draw_b();
        project();
        for (std::size_t k = 0; k < cfg.burn_in; ++k) sweep(true);
        ts.reset_totals();
        tb.reset_totals();
        auto& dst = out[c];
        dst.reserve(shares[c]);
        for (std::size_t k = 0; k < shares[c]; ++k) {
            for (std::size_t t = 0; t < cfg.thin; ++t) sweep(false);
            if (exact_b) {
                draw_b();
                project();
            }
            dst.push_back(FlaschkaState{a, b});
        }
        acc[c] = exact_b ? ts.rate() : 0.5 * (ts.rate() + tb.rate());
    });

    SampleBatch batch;
    batch.n = cfg.n;
    batch.method = exact_b ? "mcmc-s+exact-b" : "mcmc";
    batch.acceptance = acc;
    for (double r : acc) batch.tuning_ok = batch.tuning_ok && r >= 0.1 && r <= 0.7;
    for (auto& v : out)
        for (auto& st : v) batch.states.push_back(std::move(st));
    return batch;
}

enum class RootFamily { lambda_plus, lambda_minus, eta };

inline std::vector<double> root_family(const FlaschkaState& s, RootFamily which) {
    switch (which) {
        case RootFamily::lambda_plus: return eig_periodic(s, Sign::plus);
        case RootFamily::lambda_minus: return eig_periodic(s, Sign::minus);
        case RootFamily::eta: return critical_points(eig_periodic(s, Sign::plus));
    }
    return {};
}

// Pooled histogram of the chosen roots, normalized.
inline GriddedMeasure empirical_spectral_measure(const std::vector<FlaschkaState>& samples, RootFamily which,
                                                 const GridSpec& grid) {
    if (samples.empty()) throw DomainError("empirical_spectral_measure: no samples");
    std::vector<std::vector<double>> roots(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) { roots[i] = root_family(samples[i], which); });
    std::vector<double> count(grid.n, 0.0);
    double lo = INFINITY, hi = -INFINITY, total = 0.0;
    for (const auto& r : roots)
        for (double x : r) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
            double t = (x - grid.x0) / grid.h;
            if (t < 0 || t >= double(grid.n)) continue;
            count[std::size_t(t)] += 1.0;
            total += 1.0;
        }
    if (lo < grid.x0 || hi >= grid.right()) {
        char buf[160];
        double R = std::max(std::fabs(lo), std::fabs(hi)) * 1.1 + grid.h;
        std::snprintf(buf, sizeof buf, "empirical_spectral_measure: roots in [%.6g, %.6g] leave the grid; widen to [%.6g, %.6g]",
                      lo, hi, -R, R);
        throw DomainError(buf);
    }
    for (double& x : count) x /= total * grid.h;
    return GriddedMeasure(grid, std::move(count));
}

// One-site factor int int exp(-V(b) - 2 c2 a^2) a^{2 theta - 1} da db, by quadrature.
inline double partition_scalar(double theta, const Potential& V = Potential::quadratic()) {
    if (!(theta > 0)) throw DomainError("partition_scalar: theta must be positive");
    if (!V.is_quadratic()) throw DomainError("partition_scalar: quadratic potential required");
    const double c2 = V.coeffs[2];
    boost::math::quadrature::sinh_sinh<double> ss;
    double zb = ss.integrate([&](double x) { return std::exp(-V(x)); });
    // a = e^t
    double za = ss.integrate([&](double t) {
        double e = -2.0 * c2 * std::exp(2.0 * t) + 2.0 * theta * t;
        return e < -745.0 ? 0.0 : std::exp(e);
    });
    return zb * za;
}

}  // namespace toda
