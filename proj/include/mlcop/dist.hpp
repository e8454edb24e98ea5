#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mlcop {

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779;
inline constexpr double sqrt_2 = 1.4142135623730950488;

inline double normal_pdf(double x) {
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / sqrt_2);
}

/// Upper tail 1 - Phi(x), accurate for large x.
inline double normal_sf(double x) {
    return 0.5 * std::erfc(x / sqrt_2);
}

/// Inverse of the standard normal cdf (Wichura's AS 241, PPND16).
/// Absolute error below 1e-15 over (1e-300, 1 - 1e-16).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie in (0,1)");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

namespace detail {

// Regularized lower incomplete gamma P(a,x) by series expansion (x < a+1).
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw std::runtime_error("gamma_p_series: no convergence");
}

// Regularized upper incomplete gamma Q(a,x) by continued fraction (x >= a+1),
// modified Lentz algorithm.
inline double gamma_q_contfrac(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw std::runtime_error("gamma_q_contfrac: no convergence");
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a).
inline double regularized_gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) {
        throw std::domain_error("regularized_gamma_q: need a > 0 and x >= 0");
    }
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_contfrac(a, x);
}

/// Chi-square upper tail P(X > x) with df degrees of freedom.
inline double chi2_sf(double x, int df) {
    if (df < 1) throw std::domain_error("chi2_sf: df must be >= 1");
    if (x < 0.0) throw std::domain_error("chi2_sf: x must be >= 0");
    return regularized_gamma_q(0.5 * df, 0.5 * x);
}

struct quadrature_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1,1] (QUADPACK dqk15).
inline constexpr double gk_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double gk_weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double gauss_weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
inline void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fk[15];
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double x = h * gk_nodes[i];
        fk[i] = f(c - x);
        fk[14 - i] = f(c + x);
        resk += gk_weights[i] * (fk[i] + fk[14 - i]);
    }
    const double fc = f(c);
    resk += gk_weights[7] * fc;
    resg = gauss_weights[3] * fc;
    for (int i = 1; i < 7; i += 2) {
        resg += gauss_weights[i / 2] * (fk[i] + fk[14 - i]);
    }
    kronrod = resk * h;
    err = std::fabs((resk - resg) * h);
}

struct quad_segment {
    double a, b, value, error;
    bool operator<(const quad_segment& other) const { return error < other.error; }
};

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a,b] to absolute
/// tolerance: the segment with the largest error estimate is bisected until
/// the total estimated error is below abs_tol.
template <class F>
inline double integrate_adaptive(const F& f, double a, double b,
                                 double abs_tol = 1e-9) {
    if (!(a <= b)) throw std::invalid_argument("integrate_adaptive: a > b");
    if (a == b) return 0.0;

    std::priority_queue<detail::quad_segment> queue;
    auto push = [&](double lo, double hi) {
        detail::quad_segment seg{lo, hi, 0.0, 0.0};
        detail::gk15(f, lo, hi, seg.value, seg.error);
        queue.push(seg);
        return seg;
    };
    detail::quad_segment first = push(a, b);
    double total = first.value;
    double total_err = first.error;

    for (int iter = 0; iter < 4000 && total_err > abs_tol; ++iter) {
        const detail::quad_segment worst = queue.top();
        queue.pop();
        total -= worst.value;
        total_err -= worst.error;
        if (worst.b - worst.a < 1e-15) {
            // Cannot be refined further: accept roundoff-level error, treat
            // anything larger as a genuine singularity.
            if (worst.error > 1e-13 * std::max(1.0, std::fabs(total)) &&
                worst.error > abs_tol) {
                std::ostringstream msg;
                msg << "adaptive quadrature stalled on [" << worst.a << ", "
                    << worst.b << "]: local error " << worst.error
                    << " on a segment at refinement limit";
                throw quadrature_error(msg.str());
            }
            total += worst.value;
            continue;
        }
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = push(worst.a, mid);
        const auto right = push(mid, worst.b);
        total += left.value + right.value;
        total_err += left.error + right.error;
    }
    if (total_err > abs_tol) {
        std::ostringstream msg;
        msg << "adaptive quadrature failed to converge on [" << a << ", " << b
            << "]: error estimate " << total_err << " > tolerance " << abs_tol;
        throw quadrature_error(msg.str());
    }
    return total;
}

}  // namespace mlcop
