#pragma once
// Random inputs shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "toda/spectral.hpp"

namespace fixture {

inline std::vector<double> random_increasing(std::mt19937_64& g, std::size_t n, double min_gap, double max_gap) {
    std::uniform_real_distribution<double> u(min_gap, max_gap);
    std::vector<double> x{std::uniform_real_distribution<double>(-2, 2)(g)};
    while (x.size() < n) x.push_back(x.back() + u(g));
    return x;
}

// eps equal to frac times the largest admissible value for eta
inline double admissible_eps(const std::vector<double>& eta, double frac) {
    double m = 1e300;
    for (double z : toda::critical_points(eta)) m = std::min(m, std::fabs(toda::product_eval(eta, z).value()));
    return frac * m / 2.0;
}

inline toda::SpectralData random_admissible(std::mt19937_64& g, std::size_t n) {
    auto eta = random_increasing(g, n, 0.3, 1.5);
    double frac = std::exp(std::uniform_real_distribution<double>(std::log(1e-3), std::log(0.5))(g));
    double eps = n == 1 ? 0.1 : admissible_eps(eta, frac);
    auto sd = toda::spectral_data_from_eta(eta, eps);
    return toda::roots_from_lambda_plus(sd.lambda_plus, eps);
}

inline toda::FlaschkaState leaf_state(std::mt19937_64& g, std::size_t n, double ell) {
    auto s = oracle::random_state(g, n, 0.7);
    double shift = 0.0;
    for (double a : s.a) shift += std::log(a);
    shift = (shift + n * ell / 2.0) / n;
    double mb = 0.0;
    for (double b : s.b) mb += b / n;
    for (std::size_t j = 0; j < n; ++j) {
        s.a[j] = std::exp(std::log(s.a[j]) - shift);
        s.b[j] -= mb;
    }
    return s;
}

}  // namespace fixture
