#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "roughfrac/errors.hpp"

namespace roughfrac {

/// Exponent bundle shared by the operator and norm machinery. s = infinity is
/// first-class and forces the conjugate s' = 1; all other fields obey
///   0 < alpha < n,  1 <= s' < p < n/alpha,  1/q = 1/p - alpha/n,
///   0 < kappa < p/q,  p1 = p/s',  q1 = q/s'.
struct OperatorParams {
    int n = 2;
    double alpha = 0.0;
    double s = 0.0;        // in (1, inf]; infinity() means s = infinity
    double s_conj = 0.0;   // s' = s/(s-1), or 1 when s = infinity
    double p = 0.0;
    double q = 0.0;
    double kappa = 0.0;
    double p1 = 0.0;
    double q1 = 0.0;

    static constexpr double infinity() { return std::numeric_limits<double>::infinity(); }
};

/// Populate and validate an OperatorParams bundle, solving q from
/// 1/q = 1/p - alpha/n. Throws ConstraintViolation naming the violated
/// inequality.
inline OperatorParams derive_params(int n, double alpha, double s, double p, double kappa) {
    if (n != 2 && n != 3)
        throw ConstraintViolation("derive_params: n must be 2 or 3");
    if (!std::isfinite(alpha) || !std::isfinite(p) || !std::isfinite(kappa))
        throw ConstraintViolation("derive_params: non-finite input");
    if (!(alpha > 0.0) || !(alpha < n))
        throw ConstraintViolation("derive_params: requires 0 < alpha < n");

    double s_conj;
    if (s == OperatorParams::infinity()) {
        s_conj = 1.0;
    } else if (std::isfinite(s) && s > 1.0) {
        s_conj = s / (s - 1.0);
    } else {
        throw ConstraintViolation("derive_params: requires s > 1 or s = infinity");
    }

    if (!(s_conj < p))
        throw ConstraintViolation("derive_params: requires s' < p strictly");
    if (!(p < n / alpha))
        throw ConstraintViolation("derive_params: requires p < n/alpha");

    double inv_q = 1.0 / p - alpha / n;
    // p < n/alpha guarantees inv_q > 0
    double q = 1.0 / inv_q;

    if (!(kappa > 0.0))
        throw ConstraintViolation("derive_params: requires kappa > 0");
    if (!(kappa < p / q))
        throw ConstraintViolation("derive_params: requires kappa < p/q");

    OperatorParams out;
    out.n = n;
    out.alpha = alpha;
    out.s = s;
    out.s_conj = s_conj;
    out.p = p;
    out.q = q;
    out.kappa = kappa;
    out.p1 = p / s_conj;
    out.q1 = q / s_conj;
    return out;
}

} // namespace roughfrac
