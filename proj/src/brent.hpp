#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace synq::detail {

struct BrentOutcome {
    double root;
    double f_root;
    double lo;
    double hi;
    int iterations;
};

/// Brent's zeroin on [a, b] with f(a), f(b) of opposite sign (or one of them
/// zero). Stops when the enclosing interval is within xtol + 4 eps |root| or
/// an exact zero is hit.
template <class F>
BrentOutcome brent_zero(F&& f, double a, double b, double fa, double fb, double xtol,
                        int max_iter) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (fa == 0.0) return {a, fa, a, a, 0};
    if (fb == 0.0) return {b, fb, b, b, 0};

    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;
    int it = 0;
    for (; it < max_iter; ++it) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * xtol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) break;

        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            // interpolation step: secant or inverse quadratic
            double p;
            double q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
            const double min2 = std::abs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
    }
    return {b, fb, std::min(b, c), std::max(b, c), it};
}

}  // namespace synq::detail
