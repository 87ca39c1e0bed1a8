#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>

#include "toda/poly.hpp"

namespace toda {

// log|det| and sign by LU with full pivoting.
inline SignedLog log_det(Eigen::MatrixXd m) {
    const Eigen::Index n = m.rows();
    SignedLog out;
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index pi = k, pj = k;
        double best = 0.0;
        for (Eigen::Index j = k; j < n; ++j)
            for (Eigen::Index i = k; i < n; ++i)
                if (std::fabs(m(i, j)) > best) { best = std::fabs(m(i, j)); pi = i; pj = j; }
        if (best == 0.0 || !std::isfinite(best))
            return {-std::numeric_limits<double>::infinity(), 0};
        if (pi != k) { m.row(pi).swap(m.row(k)); out.sign = -out.sign; }
        if (pj != k) { m.col(pj).swap(m.col(k)); out.sign = -out.sign; }
        double p = m(k, k);
        if (p < 0) out.sign = -out.sign;
        out.log_abs += std::log(std::fabs(p));
        for (Eigen::Index i = k + 1; i < n; ++i) {
            double f = m(i, k) / p;
            if (f != 0.0) m.row(i).tail(n - k - 1) -= f * m.row(k).tail(n - k - 1);
        }
    }
    return out;
}

}  // namespace toda
