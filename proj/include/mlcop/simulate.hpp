#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mlcop/dist.hpp"
#include "mlcop/rng.hpp"
#include "mlcop/theory.hpp"

namespace mlcop {

enum class copula_kind { independence, tent_map, fgm, clayton, frank, gaussian };

inline std::string_view to_token(copula_kind k) {
    switch (k) {
        case copula_kind::independence: return "indep";
        case copula_kind::tent_map: return "tent";
        case copula_kind::fgm: return "fgm";
        case copula_kind::clayton: return "clayton";
        case copula_kind::frank: return "frank";
        case copula_kind::gaussian: return "gaussian";
    }
    return "?";
}

/// Debye function D_1(x) = (1/x) int_0^x t/(e^t - 1) dt, x > 0.
inline double debye1(double x) {
    if (!(x > 0.0)) throw std::domain_error("debye1: x must be > 0");
    const double v = integrate_adaptive(
        [](double t) { return t / std::expm1(t); }, 0.0, x, 1e-12);
    return v / x;
}

/// Kendall's tau of the Frank copula as a function of theta (odd in theta).
inline double frank_tau(double theta) {
    if (theta == 0.0) return 0.0;
    const double a = std::fabs(theta);
    const double tau = 1.0 - (4.0 / a) * (1.0 - debye1(a));
    return theta > 0.0 ? tau : -tau;
}

/// Map a Kendall's tau to the family parameter: Gaussian rho = sin(pi tau/2),
/// Clayton theta = 2 tau/(1-tau), Frank theta by bracketed root-finding on the
/// Debye-1 formula (residual below 1e-10).
inline double tau_to_param(copula_kind kind, double tau) {
    switch (kind) {
        case copula_kind::gaussian:
            if (!(tau > -1.0 && tau < 1.0))
                throw std::invalid_argument("tau_to_param: gaussian needs |tau| < 1");
            return std::sin(0.5 * 3.14159265358979323846 * tau);
        case copula_kind::clayton:
            if (!(tau > 0.0 && tau < 1.0))
                throw std::invalid_argument("tau_to_param: clayton needs tau in (0,1)");
            return 2.0 * tau / (1.0 - tau);
        case copula_kind::frank: {
            if (!(tau > -1.0 && tau < 1.0) || tau == 0.0)
                throw std::invalid_argument(
                    "tau_to_param: frank needs tau in (-1,1), tau != 0");
            const double target = std::fabs(tau);
            double lo = 1e-9, hi = 1.0;
            while (frank_tau(hi) < target) {
                hi *= 2.0;
                if (hi > 1e4)
                    throw std::invalid_argument("tau_to_param: frank tau out of range");
            }
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (frank_tau(mid) < target) lo = mid; else hi = mid;
                if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
            }
            const double theta = 0.5 * (lo + hi);
            return tau > 0.0 ? theta : -theta;
        }
        default:
            throw std::invalid_argument(
                "tau_to_param: no tau parameterization for this family");
    }
}

/// Data-generating copula for the serial study. All families are Markov of
/// order 1 except the trivariate FGM, which is 2-Markov; its bivariate margins
/// are independence copulas, so all of its dependence is three-way.
struct copula_model {
    copula_kind kind = copula_kind::independence;
    double param = 0.0;  // theta or rho; unused for indep/tent

    int order() const { return kind == copula_kind::fgm ? 2 : 1; }

    void validate() const {
        switch (kind) {
            case copula_kind::clayton:
                if (!(param > 0.0))
                    throw std::invalid_argument("clayton: theta must be > 0");
                break;
            case copula_kind::frank:
                if (param == 0.0)
                    throw std::invalid_argument("frank: theta must be nonzero");
                break;
            case copula_kind::gaussian:
                if (!(std::fabs(param) < 1.0))
                    throw std::invalid_argument("gaussian: need |rho| < 1");
                break;
            case copula_kind::fgm:
                if (!(std::fabs(param) <= 1.0))
                    throw std::invalid_argument("fgm: need |theta| <= 1");
                break;
            default:
                break;
        }
    }

    /// Parse "indep", "tent", "fgm:theta=1", "clayton:tau=0.1",
    /// "gaussian:rho=0.2", "frank:theta=0.9", ... Families with a dependence
    /// parameter default to tau=0.1 (fgm to theta=1) when none is given.
    static copula_model from_token(std::string_view token);
};

inline copula_model copula_model::from_token(std::string_view token) {
    std::string s(token);
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::string name = s;
    std::string param_part;
    if (const auto pos = s.find(':'); pos != std::string::npos) {
        name = s.substr(0, pos);
        param_part = s.substr(pos + 1);
    }
    copula_model m;
    if (name == "indep" || name == "independence") m.kind = copula_kind::independence;
    else if (name == "tent") m.kind = copula_kind::tent_map;
    else if (name == "fgm") m.kind = copula_kind::fgm;
    else if (name == "clayton") m.kind = copula_kind::clayton;
    else if (name == "frank") m.kind = copula_kind::frank;
    else if (name == "gaussian") m.kind = copula_kind::gaussian;
    else throw std::invalid_argument("unknown copula family '" + std::string(token) + "'");

    const bool parameterized = m.kind == copula_kind::fgm ||
                               m.kind == copula_kind::clayton ||
                               m.kind == copula_kind::frank ||
                               m.kind == copula_kind::gaussian;
    if (!parameterized) {
        if (!param_part.empty())
            throw std::invalid_argument("copula '" + name + "' takes no parameter");
        return m;
    }
    if (param_part.empty()) {
        m.param = (m.kind == copula_kind::fgm) ? 1.0 : tau_to_param(m.kind, 0.1);
    } else {
        const auto eq = param_part.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("copula parameter must look like tau=0.1");
        const std::string key = param_part.substr(0, eq);
        const double value = std::stod(param_part.substr(eq + 1));
        if (key == "tau") m.param = tau_to_param(m.kind, value);
        else if (key == "theta" || key == "rho") m.param = value;
        else throw std::invalid_argument("unknown copula parameter '" + key + "'");
    }
    m.validate();
    return m;
}

/// Inverse conditional cdf (h-inverse) of the transition: returns u with
/// P(U_t <= u | history) = w. history is most-recent-first and must have
/// length equal to the model order. The tent map is a deterministic fold
/// u = 2 min(v, 1-v); a uniform jitter of magnitude 1e-10 keeps the orbit off
/// the dyadic collapse in floating point.
inline double conditional_inverse(const copula_model& model,
                                  std::span<const double> history, double w) {
    if (history.size() != static_cast<std::size_t>(model.order()))
        throw std::invalid_argument("conditional_inverse: history length != model order");
    if (!(w > 0.0 && w < 1.0))
        throw std::domain_error("conditional_inverse: w outside (0,1)");
    switch (model.kind) {
        case copula_kind::independence:
            return w;
        case copula_kind::tent_map: {
            const double v = history[0];
            const double folded = 2.0 * std::min(v, 1.0 - v) + 1e-10 * (2.0 * w - 1.0);
            return std::clamp(folded, 1e-12, 1.0 - 1e-12);
        }
        case copula_kind::gaussian: {
            const double rho = model.param;
            const double z = rho * normal_quantile(history[0]) +
                             std::sqrt(1.0 - rho * rho) * normal_quantile(w);
            return normal_cdf(z);
        }
        case copula_kind::clayton: {
            const double th = model.param;
            const double v = history[0];
            const double t = (std::pow(w, -th / (1.0 + th)) - 1.0) * std::pow(v, -th);
            return std::pow(t + 1.0, -1.0 / th);
        }
        case copula_kind::frank: {
            const double th = model.param;
            const double c0 = std::expm1(-th);  // e^{-theta} - 1
            const double b = std::exp(-th * history[0]);
            return -std::log1p(w * c0 / (w + b * (1.0 - w))) / th;
        }
        case copula_kind::fgm: {
            // Trivariate density 1 + theta prod (1-2u_j); conditional cdf
            // u + theta c u(1-u) with c = (1-2v1)(1-2v2), inverted by the
            // stable quadratic root.
            const double t = model.param * (1.0 - 2.0 * history[0]) *
                             (1.0 - 2.0 * history[1]);
            if (std::fabs(t) < 1e-12) return w;
            const double disc = (1.0 + t) * (1.0 + t) - 4.0 * t * w;
            return 2.0 * w / ((1.0 + t) + std::sqrt(disc));
        }
    }
    throw std::logic_error("conditional_inverse: unknown copula kind");
}

/// Margins F1..F7 of the power study.
enum class margin_kind { f1, f2, f3, f4, f5, f6, f7 };

class margin_spec {
  public:
    explicit margin_spec(margin_kind kind) : kind_(kind) { build_table(); }

    static margin_spec from_token(std::string_view token) {
        std::string s(token);
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (s.size() == 2 && s[0] == 'f' && s[1] >= '1' && s[1] <= '7') {
            return margin_spec(static_cast<margin_kind>(s[1] - '1'));
        }
        throw std::invalid_argument("unknown margin '" + std::string(token) +
                                    "' (expected f1..f7)");
    }

    margin_kind kind() const { return kind_; }
    std::string_view token() const {
        static constexpr std::string_view names[7] = {"f1", "f2", "f3", "f4",
                                                      "f5", "f6", "f7"};
        return names[static_cast<int>(kind_)];
    }

    const std::vector<double>& cum_table() const { return cum_; }

  private:
    void build_table();

    margin_kind kind_;
    std::vector<double> cum_;  // F(k) for k = 0,1,... (discrete kinds only)
};

inline void margin_spec::build_table() {
    switch (kind_) {
        case margin_kind::f2: {  // Poisson(6)
            double p = std::exp(-6.0);
            double cum = p;
            cum_.push_back(cum);
            for (int k = 1; cum < 1.0 - 1e-15 && k < 300; ++k) {
                p *= 6.0 / k;
                cum += p;
                cum_.push_back(cum);
            }
            break;
        }
        case margin_kind::f3: {  // NB(r=1.5, p=0.2): P(k) = C(k+r-1,k) p^r (1-p)^k
            const double r = 1.5, p = 0.2;
            double pk = std::pow(p, r);
            double cum = pk;
            cum_.push_back(cum);
            for (int k = 1; cum < 1.0 - 1e-15 && k < 2000; ++k) {
                pk *= (k + r - 1.0) / k * (1.0 - p);
                cum += pk;
                cum_.push_back(cum);
            }
            break;
        }
        case margin_kind::f4: {  // 0 w.p. 0.1, else Poisson(10)
            double p = std::exp(-10.0);
            double pois_cum = p;
            cum_.push_back(0.1 + 0.9 * pois_cum);
            for (int k = 1; cum_.back() < 1.0 - 1e-15 && k < 400; ++k) {
                p *= 10.0 / k;
                pois_cum += p;
                cum_.push_back(0.1 + 0.9 * pois_cum);
            }
            break;
        }
        default:
            break;  // closed-form quantiles
    }
}

/// Generalized inverse F^{-1}(u) = inf{x : F(x) >= u}, u in (0,1).
inline double margin_quantile(const margin_spec& m, double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::domain_error("margin_quantile: u outside (0,1)");
    switch (m.kind()) {
        case margin_kind::f1:  // Bernoulli(0.8): F(0) = 0.2
            return u <= 0.2 ? 0.0 : 1.0;
        case margin_kind::f2:
        case margin_kind::f3:
        case margin_kind::f4: {
            const auto& cum = m.cum_table();
            const auto it = std::lower_bound(cum.begin(), cum.end(), u);
            if (it == cum.end()) return static_cast<double>(cum.size() - 1);
            return static_cast<double>(it - cum.begin());
        }
        case margin_kind::f5: {  // 0 w.p. 0.1, else N(0,1)
            if (u < 0.45) return normal_quantile(u / 0.9);
            if (u <= 0.55) return 0.0;
            return normal_quantile((u - 0.1) / 0.9);
        }
        case margin_kind::f6:  // floor(200 Phi^{-1}(U))
            return std::floor(200.0 * normal_quantile(u));
        case margin_kind::f7: {  // discrete Pareto F(k) = 1 - 1/(k+1)
            double k = std::max(0.0, std::floor(u / (1.0 - u)));
            while (1.0 - 1.0 / (k + 1.0) < u) k += 1.0;
            return k;
        }
    }
    throw std::logic_error("margin_quantile: unknown margin");
}

/// Population form of a margin for the local-power calculators. Discrete
/// tails are truncated at negligible mass (F7, whose tail decays like 1/k, is
/// capped at k = 10^6) and the remainder folded into the last atom.
inline theoretical_margin to_theoretical(const margin_spec& m) {
    switch (m.kind()) {
        case margin_kind::f1:
            return theoretical_margin::discrete({{0.0, 0.0, 0.2}, {1.0, 0.2, 1.0}});
        case margin_kind::f2:
        case margin_kind::f3:
        case margin_kind::f4: {
            const auto& cum = m.cum_table();
            std::vector<margin_atom> atoms;
            double lower = 0.0;
            for (std::size_t k = 0; k < cum.size(); ++k) {
                const double upper = (k + 1 == cum.size()) ? 1.0 : cum[k];
                if (upper > lower) atoms.push_back({static_cast<double>(k), lower, upper});
                lower = upper;
            }
            return theoretical_margin::discrete(std::move(atoms));
        }
        case margin_kind::f5:
            return theoretical_margin::mixed(
                {{0.0, 0.45, 0.55}},
                [](double u) {
                    return u < 0.45 ? normal_quantile(u / 0.9)
                                    : normal_quantile((u - 0.1) / 0.9);
                });
        case margin_kind::f6: {
            std::vector<margin_atom> atoms;
            const int kmax = 1407;  // Phi(7.035) within 1e-12 of 1
            double lower = 0.0;
            for (int k = -kmax; k <= kmax; ++k) {
                const double upper = (k == kmax) ? 1.0 : normal_cdf((k + 1.0) / 200.0);
                if (upper > lower) atoms.push_back({static_cast<double>(k), lower, upper});
                lower = upper;
            }
            return theoretical_margin::discrete(std::move(atoms));
        }
        case margin_kind::f7: {
            std::vector<margin_atom> atoms;
            const int kmax = 1000000;
            double lower = 0.0;
            for (int k = 1; k <= kmax; ++k) {
                const double upper = (k == kmax) ? 1.0 : 1.0 - 1.0 / (k + 1.0);
                atoms.push_back({static_cast<double>(k), lower, upper});
                lower = upper;
            }
            return theoretical_margin::discrete(std::move(atoms));
        }
    }
    throw std::logic_error("to_theoretical: unknown margin");
}

/// Stationary uniform chain of the model: U_1 (and U_2 for order 2) are
/// uniform, each further step applies the h-inverse to a fresh uniform.
inline std::vector<double> sample_uniform_series(const copula_model& model,
                                                 std::size_t n, rng_stream& rng) {
    model.validate();
    const std::size_t order = static_cast<std::size_t>(model.order());
    std::vector<double> u(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (t < order) {
            u[t] = rng.next_uniform();
            continue;
        }
        double hist[2] = {u[t - 1], order == 2 ? u[t - 2] : 0.0};
        u[t] = conditional_inverse(model, std::span<const double>(hist, order),
                                   rng.next_uniform());
    }
    return u;
}

inline std::vector<double> sample_series(const copula_model& model,
                                         const margin_spec& margin, std::size_t n,
                                         rng_stream& rng) {
    if (n < 10) throw std::invalid_argument("sample_series: need n >= 10");
    std::vector<double> y = sample_uniform_series(model, n, rng);
    for (double& v : y) v = margin_quantile(margin, v);
    return y;
}

inline std::vector<double> sample_series(const copula_model& model,
                                         const margin_spec& margin, std::size_t n,
                                         std::uint64_t seed) {
    rng_stream rng(seed);
    return sample_series(model, margin, n, rng);
}

/// Locally most powerful family for each alternative: van der Waerden for the
/// Gaussian copula, Savage for Clayton (and empirically for the tent map),
/// Spearman for Frank and FGM.
inline score_family recommend_score(copula_kind kind) {
    switch (kind) {
        case copula_kind::gaussian: return score_family::vdw;
        case copula_kind::clayton: return score_family::savage;
        case copula_kind::tent_map: return score_family::savage;
        case copula_kind::frank: return score_family::spearman;
        case copula_kind::fgm: return score_family::spearman;
        case copula_kind::independence: return score_family::spearman;
    }
    return score_family::spearman;
}

}  // namespace mlcop
