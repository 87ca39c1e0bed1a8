#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "toda/measures.hpp"

using namespace toda;

namespace {

// brute force over f values on a lattice fine enough to contain the optimum
double lattice_inner(const std::vector<double>& w, int M, int m) {
    const int K = 2 * M + 1;
    std::vector<double> best(K), next(K);
    for (int k = 0; k < K; ++k) best[k] = w[0] * (k - M);
    for (std::size_t i = 1; i < w.size(); ++i) {
        for (int k = 0; k < K; ++k) {
            double b = -1e300;
            for (int j = std::max(0, k - m); j <= std::min(K - 1, k + m); ++j) b = std::max(b, best[j]);
            next[k] = b + w[i] * (k - M);
        }
        best.swap(next);
    }
    double v = -1e300;
    for (double b : best) v = std::max(v, b);
    return v;
}

GriddedMeasure point_masses(double x0, double h, std::size_t n, std::vector<std::pair<std::size_t, double>> at) {
    std::vector<double> d(n, 0.0);
    for (auto [i, m] : at) d[i] = m / h;
    return GriddedMeasure(x0, h, d);
}

GriddedMeasure gaussian(const GridSpec& g, double var) {
    return GriddedMeasure::from_function(g, [var](double x) { return std::exp(-x * x / (2 * var)); });
}

}  // namespace

TEST(BoundedLipschitz, InnerMatchesLattice) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 2 + trial % 7;
        std::vector<double> w(n);
        for (double& x : w) x = U(g);
        int M = 1 + int(trial % 5), m = 1 + int(trial % 3);
        double unit = 0.1;
        double lat = lattice_inner(w, M, m) * unit;
        EXPECT_NEAR(detail::bl_inner(w, M * unit, m * unit), lat, 1e-12) << trial;
    }
}

TEST(BoundedLipschitz, TwoDiracs) {
    for (double t : {0.25, 0.5, 1.0, 2.0, 5.0}) {
        double h = 0.25;
        std::size_t k = std::size_t(std::lround(t / h));
        auto a = point_masses(-0.5 * h, h, k + 1, {{0, 1.0}});
        auto b = point_masses(-0.5 * h, h, k + 1, {{k, 1.0}});
        EXPECT_NEAR(bl_distance(a, b), 2 * t / (2 + t), 1e-10) << t;
    }
}

TEST(BoundedLipschitz, MetricProperties) {
    GridSpec g = GridSpec::symmetric(6, 600);
    auto a = gaussian(g, 1.0), b = gaussian(g, 0.5);
    auto c = GriddedMeasure::uniform(g, -1.5, 2.0);
    EXPECT_NEAR(bl_distance(a, a), 0.0, 1e-14);
    double ab = bl_distance(a, b), ba = bl_distance(b, a);
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_GT(ab, 0.0);
    EXPECT_LE(bl_distance(a, c), ab + bl_distance(b, c) + 1e-12);
    EXPECT_LE(ab, 1.0 * 2.0);
}

TEST(BoundedLipschitz, LowerBoundedByTestFunctions) {
    GridSpec g = GridSpec::symmetric(6, 480);
    auto a = gaussian(g, 1.0), b = GriddedMeasure::uniform(g, -1.0, 1.5);
    double d = bl_distance(a, b);
    // ||f||_inf + Lip(f) <= 1 for each of these
    std::vector<std::function<double(double)>> fs = {
        [](double x) { return std::cos(x) / 2; },
        [](double x) { return std::tanh(x) / 2; },
        [](double x) { return std::sin(2 * x) / 3; },
        [](double x) { return std::max(0.0, 0.5 - std::fabs(x - 1.0) / 2); },
    };
    for (auto& f : fs) EXPECT_LE(std::fabs(integrate(a, f) - integrate(b, f)), d + 1e-12);
}

TEST(BoundedLipschitz, MisalignedGridsAndTranslation) {
    auto a = GriddedMeasure::uniform(GridSpec{-2, 0.01, 400}, -1, 1);
    auto b = GriddedMeasure::uniform(GridSpec{-1.9, 0.0125, 400}, -1, 1);
    EXPECT_LT(bl_distance(a, b), 0.02);
    // translate by s: the optimum is a ramp of slope 1/2 across the support, value s/2
    GriddedMeasure s = a;
    s.x0 += 0.05;
    EXPECT_NEAR(bl_distance(a, s), 0.025, 2 * a.h);
}

TEST(LogPotential, Uniform) {
    // U of uniform on [-1, 1] at x in the support
    auto u = GriddedMeasure::uniform(GridSpec::symmetric(1, 200), -1, 1);
    for (double x : {0.0, 0.3, -0.77, 1.5, 4.0}) {
        double exact = 0.5 * (detail::log_antideriv(x + 1) - detail::log_antideriv(x - 1));
        EXPECT_NEAR(log_potential(u, x), exact, 1e-12) << x;
    }
}

TEST(LogPotential, GridMatchesPointwise) {
    GridSpec g = GridSpec::symmetric(5, 300);
    auto a = gaussian(g, 0.7);
    auto U = potential_on_grid(a);
    for (std::size_t i : {0ul, 17ul, 150ul, 299ul}) EXPECT_NEAR(U[i], log_potential(a, g.center(i)), 1e-11);
}

TEST(LogPotential, GaussianAgainstQuadrature) {
    GridSpec g = GridSpec::symmetric(9, 3600);
    auto a = gaussian(g, 1.0);
    boost::math::quadrature::tanh_sinh<double> ts;
    for (double x : {0.0, 0.5, 2.0}) {
        auto left = [x](double t) { return std::log(t) * std::exp(-(x - t) * (x - t) / 2) / std::sqrt(2 * M_PI); };
        auto right = [x](double t) { return std::log(t) * std::exp(-(x + t) * (x + t) / 2) / std::sqrt(2 * M_PI); };
        double q = ts.integrate(left, 0.0, 14.0) + ts.integrate(right, 0.0, 14.0);
        EXPECT_NEAR(log_potential(a, x), q, 2e-4) << x;
    }
}

TEST(LogPotential, Dilation) {
    GridSpec g = GridSpec::symmetric(4, 160);
    auto a = gaussian(g, 0.5);
    for (double r : {1.5, 3.0}) {
        auto d = dilate(a, r);
        EXPECT_NEAR(d.mass(), 1.0, 1e-12);
        for (double x : {0.0, 0.4, 2.5})
            EXPECT_NEAR(log_potential(d, r * x), log_potential(a, x) + std::log(r), 1e-11);
        EXPECT_NEAR(entropy(d), entropy(a) + std::log(r), 1e-11);
    }
}

TEST(Entropy, UniformAndGaussian) {
    auto u = GriddedMeasure::uniform(GridSpec::symmetric(2, 100), -2, 2);
    EXPECT_NEAR(entropy(u), std::log(4.0), 1e-12);
    auto a = gaussian(GridSpec::symmetric(10, 2000), 1.0);
    EXPECT_NEAR(entropy(a), 0.5 * std::log(2 * M_PI * M_E), 1e-4);
}

TEST(Truncation, MeanPreservedAndTails) {
    GridSpec g = GridSpec::symmetric(8, 1600);
    auto a = GriddedMeasure::from_function(g, [](double x) { return std::exp(-std::fabs(x)) * (1 + 0.3 * std::sin(x)); });
    // centre it
    double m = mean(a);
    a = rebin(GriddedMeasure(a.x0 - m, a.h, a.density), g);
    a.normalize();
    m = mean(a);
    a.x0 -= m;
    for (double eta : {0.2, 0.05, 0.01}) {
        auto t = truncate_mean_preserving(a, eta);
        EXPECT_LE(std::fabs(mean(t.measure)), 1e-10);
        EXPECT_LE(t.tail_mass, eta);
        EXPECT_GT(t.K1, 0);
        EXPECT_GT(t.K2, 0);
    }
}

TEST(Truncation, SymmetricGivesEqualCuts) {
    auto a = gaussian(GridSpec::symmetric(6, 1200), 1.0);
    auto t = truncate_mean_preserving(a, 0.02);
    EXPECT_NEAR(t.K1, t.K2, 1e-9);
    EXPECT_LE(std::fabs(mean(t.measure)), 1e-10);
    EXPECT_THROW(truncate_mean_preserving(a, 10.0), DomainError);
    GriddedMeasure off = a;
    off.x0 += 0.3;
    EXPECT_THROW(truncate_mean_preserving(off, 0.02), DomainError);
}

TEST(Mollify, PreservesMassAndMeanRaisesEntropy) {
    GridSpec g = GridSpec::symmetric(5, 500);
    auto a = GriddedMeasure::uniform(g, -1.0, 2.0);
    for (double tau : {0.02, 0.1, 0.5}) {
        auto b = mollify(a, tau);
        EXPECT_NEAR(b.mass(), 1.0, 1e-11);
        EXPECT_NEAR(mean(b), mean(a), 1e-10);
        EXPECT_GE(entropy(b), entropy(a) - 1e-12);
        EXPECT_LE(bl_distance(a, b), tau + a.h);
        EXPECT_NEAR(second_moment(b), second_moment(a) + tau * tau / 3, a.h * a.h);
    }
}

TEST(LogPotential, UnitIntervalExamples) {
    auto u = GriddedMeasure::uniform(GridSpec::symmetric(0.5, 100), -0.5, 0.5);
    EXPECT_NEAR(log_potential(u, 0.0), std::log(0.5) - 1, 1e-13);
    // far field: ln x - 1/(24 x^2) - ...
    EXPECT_NEAR(log_potential(u, 10.0), std::log(10.0), 1.0 / 200);
    for (double x : {0.1, 0.37, 3.0}) EXPECT_NEAR(log_potential(u, x), log_potential(u, -x), 1e-13);
}

TEST(Entropy, UnitInterval) {
    EXPECT_NEAR(entropy(GriddedMeasure::uniform(GridSpec{0, 0.01, 100}, 0, 1)), 0.0, 1e-13);
    EXPECT_NEAR(entropy(GriddedMeasure::uniform(GridSpec{0, 0.01, 200}, 0, 2)), std::log(2.0), 1e-13);
}

TEST(Regularisation, Examples) {
    auto u = GriddedMeasure::uniform(GridSpec::symmetric(1, 100), -1, 1);
    auto d = dilate(u, 2.0);
    auto ref = GriddedMeasure::uniform(GridSpec::symmetric(2, 100), -2, 2);
    EXPECT_NEAR(d.x0, ref.x0, 1e-15);
    EXPECT_NEAR(d.h, ref.h, 1e-15);
    for (std::size_t i = 0; i < d.n(); ++i) EXPECT_NEAR(d.density[i], ref.density[i], 1e-13);

    const double h = 0.01, tau = 0.2;
    auto spike = point_masses(-0.5 * h, h, 1, {{0, 1.0}});
    auto m = mollify(spike, tau);
    auto box = GriddedMeasure::uniform(m.grid(), -tau, tau);
    EXPECT_LE(bl_distance(m, box), 2 * h);
    EXPECT_NEAR(m.mass(), 1.0, 1e-12);
}

TEST(Mollify, RandomDensitiesGainEntropy) {
    std::mt19937_64 g(17);
    std::uniform_real_distribution<double> U(0, 1);
    for (int k = 0; k < 20; ++k) {
        std::vector<double> d(200);
        for (double& x : d) x = U(g) * U(g);
        GriddedMeasure m(GridSpec::symmetric(2, 200), d);
        m.normalize();
        auto s = mollify(m, 0.05 + 0.3 * U(g));
        EXPECT_GE(entropy(s), entropy(m) - 1e-12);
    }
}
