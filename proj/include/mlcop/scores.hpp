#pragma once

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "mlcop/dist.hpp"

namespace mlcop {

/// Score distributions used to transform ranks. Each family is a cdf K with
/// quantile K^{-1}, integrated quantile L(u) = int_0^u K^{-1}(v) dv, mean mu
/// and variance sigma^2:
///
///   spearman  K^{-1}(u) = u                L(u) = u^2/2        mu = 1/2
///   vdw       K^{-1}(u) = Phi^{-1}(u)      L(u) = -phi(Phi^{-1}(u))   mu = 0
///   savage    K^{-1}(u) = -log u           L(u) = u - u log u  mu = 1
///   blest     K^{-1}(u) = u^2              L(u) = u^3/3        mu = 1/3
///
/// Savage follows the integrated-quantile form u - u log u, whose derivative
/// is -log u; the resulting scores are a decreasing rearrangement of the
/// exponential quantile, which leaves all squared statistics unchanged.
enum class score_family { spearman, vdw, savage, blest };

inline constexpr score_family all_score_families[4] = {
    score_family::spearman, score_family::vdw, score_family::savage,
    score_family::blest};

inline constexpr double score_mean(score_family f) {
    switch (f) {
        case score_family::spearman: return 0.5;
        case score_family::vdw: return 0.0;
        case score_family::savage: return 1.0;
        case score_family::blest: return 1.0 / 3.0;
    }
    return 0.0;
}

inline constexpr double score_variance(score_family f) {
    switch (f) {
        case score_family::spearman: return 1.0 / 12.0;
        case score_family::vdw: return 1.0;
        case score_family::savage: return 1.0;
        case score_family::blest: return 4.0 / 45.0;
    }
    return 0.0;
}

/// K^{-1}(u). Unbounded families (vdw, savage) require u strictly inside
/// (0,1); spearman and blest accept the closed interval.
inline double quantile(score_family f, double u) {
    switch (f) {
        case score_family::spearman:
            if (!(u >= 0.0 && u <= 1.0))
                throw std::domain_error("quantile: u outside [0,1]");
            return u;
        case score_family::blest:
            if (!(u >= 0.0 && u <= 1.0))
                throw std::domain_error("quantile: u outside [0,1]");
            return u * u;
        case score_family::vdw:
            return normal_quantile(u);  // throws outside (0,1)
        case score_family::savage:
            if (!(u > 0.0 && u < 1.0))
                throw std::domain_error("quantile: u outside (0,1)");
            return -std::log(u);
    }
    throw std::logic_error("quantile: unknown family");
}

/// Integrated quantile L(u) = int_0^u K^{-1}(v) dv on [0,1].
inline double lintegral(score_family f, double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::domain_error("lintegral: u outside [0,1]");
    switch (f) {
        case score_family::spearman:
            return 0.5 * u * u;
        case score_family::blest:
            return u * u * u / 3.0;
        case score_family::vdw:
            if (u == 0.0 || u == 1.0) return 0.0;
            return -normal_pdf(normal_quantile(u));
        case score_family::savage:
            if (u == 0.0) return 0.0;
            return u - u * std::log(u);
    }
    throw std::logic_error("lintegral: unknown family");
}

/// Tie-aware score: the average of K^{-1} over the probability interval
/// (a, b] = (G(x-), G(x)]. At continuity points (a == b) this reduces to
/// K^{-1}(a). The ratio form is used only when b - a exceeds 1e-14 to avoid
/// cancellation on near-degenerate jumps.
inline double score_at(score_family f, double a, double b) {
    if (!(a >= 0.0 && b <= 1.0))
        throw std::domain_error("score_at: bounds outside [0,1]");
    if (a > b) throw std::invalid_argument("score_at: a > b");
    if (b - a > 1e-14) {
        return (lintegral(f, b) - lintegral(f, a)) / (b - a);
    }
    return quantile(f, 0.5 * (a + b));
}

inline std::string_view to_token(score_family f) {
    switch (f) {
        case score_family::spearman: return "spearman";
        case score_family::vdw: return "vdw";
        case score_family::savage: return "savage";
        case score_family::blest: return "blest";
    }
    return "?";
}

inline score_family parse_score_family(std::string_view token) {
    std::string lower(token);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "spearman") return score_family::spearman;
    if (lower == "vdw") return score_family::vdw;
    if (lower == "savage") return score_family::savage;
    if (lower == "blest") return score_family::blest;
    throw std::invalid_argument("unknown score family '" + std::string(token) +
                                "' (expected spearman|vdw|savage|blest)");
}

/// True when K^{-1} is increasing. Savage's -log u is the one decreasing case.
inline constexpr bool quantile_increasing(score_family f) {
    return f != score_family::savage;
}

/// Inverse of the quantile map, u such that K^{-1}(u) = x.
inline double quantile_inverse(score_family f, double x) {
    switch (f) {
        case score_family::spearman: return x;
        case score_family::blest: return std::sqrt(x);
        case score_family::vdw: return normal_cdf(x);
        case score_family::savage: return std::exp(-x);
    }
    throw std::logic_error("quantile_inverse: unknown family");
}

/// Range of the score variable x = K^{-1}(u), truncated so that the omitted
/// u-tail mass is at most tail_eps on each side.
inline std::pair<double, double> quantile_support(score_family f, double tail_eps) {
    switch (f) {
        case score_family::spearman: return {0.0, 1.0};
        case score_family::blest: return {0.0, 1.0};
        case score_family::vdw:
            return {normal_quantile(tail_eps), normal_quantile(1.0 - tail_eps)};
        case score_family::savage:
            return {-std::log1p(-tail_eps), -std::log(tail_eps)};
    }
    throw std::logic_error("quantile_support: unknown family");
}

}  // namespace mlcop
