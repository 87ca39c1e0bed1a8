#pragma once
// Direct quadrature of the Dirichlet-cell integral without the determinant structure.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <vector>

#include "toda/spectral.hpp"

namespace oracle {

// 1/sqrt|P+ P-| on [alpha, beta] after mu = m + r cos(theta); the two endpoint
// factors cancel against the Jacobian.
struct CellWeight {
    const toda::SpectralData* sd;
    std::size_t j;
    double alpha, beta, m, r;
    std::size_t ia, ib;  // indices of the endpoint roots
    int ua;              // family of the endpoints

    CellWeight(const toda::SpectralData& s, std::size_t cell) : sd(&s), j(cell) {
        ua = toda::upsilon(s.n(), cell);
        const auto& lam = s.lambda(ua);
        alpha = lam[cell];
        beta = lam[cell + 1];
        m = 0.5 * (alpha + beta);
        r = 0.5 * (beta - alpha);
        ia = cell;
        ib = cell + 1;
    }

    double mu(double theta) const { return m - r * std::cos(theta); }

    // weight in theta including dmu
    double density(double theta) const {
        double x = mu(theta);
        double prod = 1.0;
        for (std::size_t k = 0; k < sd->n(); ++k) {
            for (int fam : {1, -1}) {
                if (fam == ua && (k == ia || k == ib)) continue;
                prod *= std::fabs(x - sd->lambda(fam)[k]);
            }
        }
        return 1.0 / std::sqrt(prod);
    }
};

inline double brute_force_I(const toda::SpectralData& sd, double tol = 1e-12) {
    boost::math::quadrature::tanh_sinh<double> ts(15);
    const double pi = 3.14159265358979323846;
    if (sd.n() == 1) return 1.0;
    if (sd.n() == 2) {
        CellWeight c(sd, 0);
        return ts.integrate([&](double t) { return c.density(t); }, 0.0, pi, tol);
    }
    if (sd.n() == 3) {
        CellWeight c1(sd, 0), c2(sd, 1);
        auto outer = [&](double t1) {
            double m1 = c1.mu(t1), w1 = c1.density(t1);
            auto inner = [&](double t2) { return (c2.mu(t2) - m1) * c2.density(t2); };
            return w1 * ts.integrate(inner, 0.0, pi, tol);
        };
        return ts.integrate(outer, 0.0, pi, tol);
    }
    throw toda::SizeError("brute_force_I: N <= 3 only");
}

}  // namespace oracle
