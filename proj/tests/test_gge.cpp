#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "oracles.hpp"
#include "toda/gge.hpp"

using namespace toda;

namespace {

double ks_two_sample(std::vector<double> x, std::vector<double> y) {
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::fabs(double(i) / x.size() - double(j) / y.size()));
    }
    return d;
}

template <class Cdf>
double ks_one_sample(std::vector<double> x, Cdf F) {
    std::sort(x.begin(), x.end());
    double d = 0.0, n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double f = F(x[i]);
        d = std::max({d, std::fabs(f - i / n), std::fabs(f - (i + 1) / n)});
    }
    return d;
}

std::vector<double> column(const SampleBatch& b, bool a_side, std::size_t j, bool log_a = false) {
    std::vector<double> out;
    for (const auto& s : b.states) out.push_back(a_side ? (log_a ? std::log(s.a[j]) : s.a[j]) : s.b[j]);
    return out;
}

SamplerConfig theta_cfg(int n, double theta, std::size_t m) {
    SamplerConfig c;
    c.n = n;
    c.theta = theta;
    c.n_samples = m;
    return c;
}

SamplerConfig leaf_cfg(int n, double ell, std::size_t m) {
    SamplerConfig c;
    c.n = n;
    c.ell = ell;
    c.n_samples = m;
    return c;
}

}  // namespace

TEST(TracePotential, LocalMatchesDense) {
    std::mt19937_64 g(5);
    auto V = Potential::polynomial({0.3, -0.2, 0.7, 0.1, 0.25});
    for (int n : {9, 10, 13}) {
        auto s = oracle::random_state(g, n, 1.0);
        EXPECT_NEAR(trace_potential(V, s.a, s.b), detail::dense_trace(V, s.a, s.b), 1e-10);
    }
    auto s = oracle::random_state(g, 4, 1.0);
    EXPECT_NEAR(trace_potential(V, s.a, s.b), detail::dense_trace(V, s.a, s.b), 1e-12);
}

TEST(TracePotential, QuadraticClosedForms) {
    auto V = Potential::quadratic();
    std::vector<double> a{0.5, 1.5, 0.7}, b{1.0, -2.0, 0.25};
    EXPECT_NEAR(trace_potential(V, a, b), 1 + 4 + 0.0625 + 2 * (0.25 + 2.25 + 0.49), 1e-13);
    // two sites: the corner adds onto the off-diagonal
    std::vector<double> a2{0.5, 1.5}, b2{1.0, -2.0};
    EXPECT_NEAR(trace_potential(V, a2, b2), 1 + 4 + 2 * 4.0, 1e-13);
    EXPECT_NEAR(trace_potential(V, {0.5}, {1.0}), 1 + 0.5, 1e-15);
}

TEST(Potential, Validation) {
    EXPECT_THROW(Potential::polynomial({0, 1, 0, 1}), DomainError);
    EXPECT_THROW(Potential::polynomial({0, 0, -1}), DomainError);
    auto V = Potential::polynomial({1, 0, 2, 0, 0});
    EXPECT_EQ(V.degree(), 2);
    EXPECT_TRUE(V.is_even());
    EXPECT_TRUE(V.is_quadratic());
    EXPECT_NEAR(V.derivative(1.5), 6.0, 1e-15);
    auto T = Potential::table({-1, 0, 1}, {1, 0, 1});
    EXPECT_TRUE(T.is_even());
    EXPECT_NEAR(T(0.25), 0.25, 1e-15);
    EXPECT_TRUE(std::isinf(T(2.0)));
}

TEST(Unconstrained, OneSiteMarginals) {
    auto b = sample_unconstrained(theta_cfg(1, 1.0, 40000), Potential::quadratic());
    EXPECT_EQ(b.method, "direct");
    double mb = 0, ma2 = 0;
    for (auto& s : b.states) { mb += s.b[0]; ma2 += s.a[0] * s.a[0]; }
    mb /= b.states.size();
    ma2 /= b.states.size();
    // b ~ exp(-b^2): sigma^2 = 1/2
    EXPECT_LE(std::fabs(mb), 3 * std::sqrt(0.5 / b.states.size()));
    boost::math::quadrature::exp_sinh<double> es;
    double num = es.integrate([](double a) { return a > 30 ? 0.0 : a * a * a * std::exp(-2 * a * a); });
    double den = es.integrate([](double a) { return a > 30 ? 0.0 : a * std::exp(-2 * a * a); });
    EXPECT_NEAR(ma2, num / den, 4 * (num / den) / std::sqrt(double(b.states.size())));
}

TEST(Unconstrained, McmcMatchesDirect) {
    const int n = 8;
    auto V = Potential::quadratic();
    auto d = sample_unconstrained(theta_cfg(n, 1.5, 100000), V);
    auto cfg = theta_cfg(n, 1.5, 100000);
    cfg.force_mcmc = true;
    cfg.thin = 2;
    cfg.seed = 9;
    auto m = sample_unconstrained(cfg, V);
    EXPECT_EQ(m.method, "mcmc");
    EXPECT_TRUE(m.tuning_ok);
    EXPECT_LT(ks_two_sample(column(d, true, 0), column(m, true, 0)), 0.02);
    EXPECT_LT(ks_two_sample(column(d, false, 3), column(m, false, 3)), 0.02);
    // pinned marginal against the analytic Gaussian
    auto F = [](double x) { return 0.5 * std::erfc(-x); };
    EXPECT_LT(ks_one_sample(column(m, false, 1), F), 0.02);
    for (auto& s : m.states)
        for (double x : s.a) ASSERT_GT(x, 0.0);
}

TEST(Unconstrained, McmcGeneralPotentialTwoSites) {
    // N = 2 with the corner sum goes through MCMC even for quadratic V
    auto b = sample_unconstrained(theta_cfg(2, 1.0, 20000), Potential::quadratic());
    EXPECT_EQ(b.method, "mcmc");
    EXPECT_TRUE(b.tuning_ok);
    // b_1 ~ exp(-b^2) still
    auto F = [](double x) { return 0.5 * std::erfc(-x); };
    EXPECT_LT(ks_one_sample(column(b, false, 0), F), 0.03);
}

TEST(Constrained, LeafInvariantsExact) {
    for (bool force : {false, true}) {
        auto cfg = leaf_cfg(16, 1.0, 300);
        cfg.force_mcmc = force;
        auto b = sample_constrained(cfg, Potential::quadratic());
        EXPECT_TRUE(b.tuning_ok);
        for (auto& s : b.states) {
            double ls = 0, sb = 0;
            for (double x : s.a) ls += std::log(x);
            for (double x : s.b) sb += x;
            ASSERT_LE(std::fabs(ls + 16 * 0.5), 1e-12);
            ASSERT_LE(std::fabs(sb), 1e-12);
        }
    }
}

TEST(Constrained, TwoSitesAgainstRejection) {
    // direct rejection: (a1, a2) ~ exp(-2 (a1 + a2)^2), kept on a thin shell around a1 a2 = eps
    const double ell = 2.0, eps = std::exp(-ell);
    std::mt19937_64 g(77);
    std::exponential_distribution<double> ex(2.0);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> ref;
    while (ref.size() < 20000) {
        double t = std::sqrt(ex(g)), a1 = t * u(g), a2 = t - a1;
        if (std::fabs(a1 * a2 - eps) < 1e-3 * eps) ref.push_back(std::log(a1));
    }
    auto cfg = leaf_cfg(2, ell, 40000);
    cfg.thin = 3;
    auto b = sample_constrained(cfg, Potential::quadratic());
    EXPECT_LT(ks_two_sample(ref, column(b, true, 0, true)), 0.025);
    // b_1 = (b_1 - b_2) / 2 with iid exp(-b^2) entries: variance 1/4
    auto F = [](double x) { return 0.5 * std::erfc(-x * 2.0 / std::sqrt(2.0)); };
    EXPECT_LT(ks_one_sample(column(b, false, 0), F), 0.02);
}

TEST(Constrained, ExactBMatchesMcmcB) {
    auto cfg = leaf_cfg(6, 1.0, 20000);
    cfg.thin = 2;
    auto e = sample_constrained(cfg, Potential::quadratic());
    cfg.force_mcmc = true;
    cfg.seed = 4;
    auto m = sample_constrained(cfg, Potential::quadratic());
    EXPECT_LT(ks_two_sample(column(e, false, 2), column(m, false, 2)), 0.03);
    EXPECT_LT(ks_two_sample(column(e, true, 2), column(m, true, 2)), 0.03);
}

TEST(Constrained, SpectralStructureOnSamples) {
    const double ell = 1.0;
    auto b = sample_constrained(leaf_cfg(16, ell, 400), Potential::quadratic());
    double kb = kappeler_bound(16, ell);
    for (auto& s : b.states) {
        auto lp = eig_periodic(s, Sign::plus), lm = eig_periodic(s, Sign::minus);
        auto mu = dirichlet_spectrum(s);
        ASSERT_TRUE(check_interlacing(lp, lm, mu, 1e-10).ok);
        ASSERT_EQ(membership_AN(lp, prod_a(s)).status, MembershipStatus::inside);
        ASSERT_LE(max_band_width(lp, lm), kb);
    }
}

TEST(Constrained, FlowInvariance) {
    auto b = sample_constrained(leaf_cfg(12, 1.0, 200), Potential::quadratic());
    std::vector<FlaschkaState> moved;
    for (auto& s : b.states) moved.push_back(flow(s, 1.0, 1e-11));
    GridSpec g = GridSpec::symmetric(6, 1200);
    auto m0 = empirical_spectral_measure(b.states, RootFamily::lambda_plus, g);
    auto m1 = empirical_spectral_measure(moved, RootFamily::lambda_plus, g);
    EXPECT_LT(bl_distance(m0, m1), 1e-3);
}

TEST(Empirical, AllOnesThreeSites) {
    FlaschkaState s{{1, 1, 1}, {0, 0, 0}};
    GridSpec g = GridSpec::symmetric(4, 80);
    auto m = empirical_spectral_measure({s}, RootFamily::lambda_plus, g);
    EXPECT_NEAR(m.mass(), 1.0, 1e-12);
    double near_m1 = 0, near_2 = 0;
    for (std::size_t i = 0; i < m.n(); ++i) {
        if (std::fabs(m.center(i) + 1) < 0.1) near_m1 += m.cell_mass(i);
        if (std::fabs(m.center(i) - 2) < 0.1) near_2 += m.cell_mass(i);
    }
    EXPECT_NEAR(near_m1, 2.0 / 3, 1e-12);
    EXPECT_NEAR(near_2, 1.0 / 3, 1e-12);
    EXPECT_THROW(empirical_spectral_measure({s}, RootFamily::lambda_plus, GridSpec::symmetric(1.5, 30)), DomainError);
    EXPECT_THROW(empirical_spectral_measure({}, RootFamily::lambda_plus, g), DomainError);
}

TEST(Empirical, BandsCloseOnTheLeaf) {
    const double ell = 1.0;
    auto b = sample_constrained(leaf_cfg(16, ell, 200), Potential::quadratic());
    GridSpec g = GridSpec::symmetric(6, 2400);
    auto p = empirical_spectral_measure(b.states, RootFamily::lambda_plus, g);
    auto m = empirical_spectral_measure(b.states, RootFamily::lambda_minus, g);
    auto e = empirical_spectral_measure(b.states, RootFamily::eta, g);
    EXPECT_NEAR(p.mass(), 1.0, 1e-12);
    EXPECT_NEAR(e.mass(), 1.0, 1e-12);
    EXPECT_LE(bl_distance(p, m), kappeler_bound(16, ell) + g.h);
}

TEST(PartitionScalar, ClosedForms) {
    EXPECT_NEAR(partition_scalar(1.0), std::sqrt(M_PI) / 4, 1e-13);
    EXPECT_NEAR(partition_scalar(0.5), M_PI / (2 * std::sqrt(2.0)), 1e-13);
    for (double th : {0.2, 0.7, 2.5, 6.0})
        EXPECT_NEAR(partition_scalar(th) / (std::sqrt(M_PI) * std::tgamma(th) / (2 * std::pow(2.0, th))), 1.0, 1e-12);
    EXPECT_THROW(partition_scalar(0.0), DomainError);
}

TEST(PartitionScalar, LogConvex) {
    std::vector<double> th{0.5, 1.0, 1.5, 2.0, 2.5}, lz;
    for (double t : th) lz.push_back(std::log(partition_scalar(t)));
    for (std::size_t i = 1; i + 1 < th.size(); ++i) EXPECT_GE(lz[i - 1] + lz[i + 1] - 2 * lz[i], 0.0);
}

TEST(Sampler, DeterministicAcrossThreadCounts) {
    auto cfg = leaf_cfg(10, 1.0, 50);
    cfg.chains = 3;
    setenv("TODA_GGE_THREADS", "1", 1);
    auto a = sample_constrained(cfg, Potential::quadratic());
    setenv("TODA_GGE_THREADS", "3", 1);
    auto b = sample_constrained(cfg, Potential::quadratic());
    unsetenv("TODA_GGE_THREADS");
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) EXPECT_TRUE(a.states[i] == b.states[i]);
    cfg.seed = 2;
    auto c = sample_constrained(cfg, Potential::quadratic());
    EXPECT_FALSE(a.states[0] == c.states[0]);
}

TEST(Sampler, ConfigValidation) {
    SamplerConfig c;
    EXPECT_THROW(sample_unconstrained(c, Potential::quadratic()), DomainError);
    c.theta = 1.0;
    c.ell = 1.0;
    EXPECT_THROW(sample_unconstrained(c, Potential::quadratic()), DomainError);
    auto d = leaf_cfg(1, 1.0, 10);
    EXPECT_THROW(sample_constrained(d, Potential::quadratic()), SizeError);
}
