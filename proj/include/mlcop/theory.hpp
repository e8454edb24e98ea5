#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mlcop/dist.hpp"
#include "mlcop/empirical.hpp"
#include "mlcop/rng.hpp"
#include "mlcop/scores.hpp"
#include "mlcop/stats.hpp"

namespace mlcop {

/// One atom of a distribution: value x with probability interval
/// (lower, upper] = (F(x-), F(x)].
struct margin_atom {
    double value;
    double lower;
    double upper;
};

/// A population margin given as a list of atoms plus, on the complement of the
/// atom intervals in (0,1), a quantile function for the continuous part.
/// Mixtures such as "0 with probability 0.1, else N(0,1)" are exactly of this
/// form.
class theoretical_margin {
  public:
    using quantile_fn = std::function<double(double)>;

    static theoretical_margin continuous(quantile_fn q) {
        theoretical_margin m;
        m.quantile_ = std::move(q);
        return m;
    }

    static theoretical_margin discrete(std::vector<margin_atom> atoms) {
        theoretical_margin m;
        m.atoms_ = std::move(atoms);
        m.validate_atoms();
        return m;
    }

    static theoretical_margin mixed(std::vector<margin_atom> atoms, quantile_fn q) {
        theoretical_margin m;
        m.atoms_ = std::move(atoms);
        m.quantile_ = std::move(q);
        m.validate_atoms();
        return m;
    }

    const std::vector<margin_atom>& atoms() const { return atoms_; }
    bool has_continuous_part() const { return static_cast<bool>(quantile_); }

    /// Quantile of the continuous part; only valid outside atom intervals.
    double continuous_quantile(double u) const {
        if (!quantile_) throw std::logic_error("margin has no continuous part");
        return quantile_(u);
    }

    /// Intervals of (0,1) not covered by atoms, in ascending order.
    std::vector<std::pair<double, double>> continuous_gaps() const {
        std::vector<std::pair<double, double>> gaps;
        double pos = 0.0;
        for (const auto& a : atoms_) {
            if (a.lower > pos) gaps.emplace_back(pos, a.lower);
            pos = a.upper;
        }
        if (pos < 1.0) gaps.emplace_back(pos, 1.0);
        return gaps;
    }

  private:
    void validate_atoms() {
        std::sort(atoms_.begin(), atoms_.end(),
                  [](const margin_atom& a, const margin_atom& b) {
                      return a.lower < b.lower;
                  });
        double pos = 0.0;
        double mass = 0.0;
        for (const auto& a : atoms_) {
            if (a.lower < pos - 1e-12 || a.upper <= a.lower)
                throw std::invalid_argument("theoretical_margin: overlapping or empty atoms");
            pos = a.upper;
            mass += a.upper - a.lower;
        }
        if (pos > 1.0 + 1e-12)
            throw std::invalid_argument("theoretical_margin: atom mass exceeds 1");
        if (!quantile_ && std::fabs(mass - 1.0) > 1e-9)
            throw std::invalid_argument(
                "theoretical_margin: discrete margin must have total mass 1");
    }

    std::vector<margin_atom> atoms_;
    quantile_fn quantile_;
};

/// Covariance kernel Gamma_G(s,t) = min(s,t) - st minus the atom correction:
/// when one atom's probability interval [a,b] contains both s and t the term
/// (min - a)(b - max)/(b - a) is subtracted. Nonnegative; vanishes whenever
/// min(s,t) = 0 or max(s,t) = 1.
inline double gamma_kernel(const theoretical_margin& m, double s, double t) {
    if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0))
        throw std::domain_error("gamma_kernel: s,t outside [0,1]");
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    double value = lo - s * t;
    // At most one atom interval can contain [lo, hi]; atoms are sorted.
    const auto& atoms = m.atoms();
    auto it = std::upper_bound(atoms.begin(), atoms.end(), lo,
                               [](double v, const margin_atom& a) { return v < a.lower; });
    if (it != atoms.begin()) {
        const margin_atom& a = *(it - 1);
        if (a.lower <= lo && hi <= a.upper) {
            value -= (lo - a.lower) * (a.upper - hi) / (a.upper - a.lower);
        }
    }
    return value;
}

/// Tie-aware score of an atom.
inline double scored_atom(score_family f, const margin_atom& a) {
    return score_at(f, a.lower, a.upper);
}

/// cov{K_script_K(X), K_script_G(X)} for X ~ margin: atom sum plus adaptive
/// quadrature of the raw quantile product over the non-atom part of (0,1).
/// This is the local-power mean factor; with K == G it is the population
/// variance varsigma^2 that Lemma-1 s2 estimates.
inline double local_power_mean(score_family K, const theoretical_margin& m,
                               score_family G) {
    const double mu_k = score_mean(K);
    const double mu_g = score_mean(G);
    double total = 0.0;
    for (const auto& a : m.atoms()) {
        total += (a.upper - a.lower) * (scored_atom(K, a) - mu_k) *
                 (scored_atom(G, a) - mu_g);
    }
    constexpr double eps = 1e-12;  // unbounded quantile tails contribute < 1e-10
    for (const auto& [lo, hi] : m.continuous_gaps()) {
        const double a = std::max(lo, eps);
        const double b = std::min(hi, 1.0 - eps);
        if (b <= a) continue;
        total += integrate_adaptive(
            [&](double u) {
                return (quantile(K, u) - mu_k) * (quantile(G, u) - mu_g);
            },
            a, b, 1e-9);
    }
    return total;
}

/// Asymptotic relative efficiency between the tests built from families K and
/// G against an alternative whose score is G, for a subset of the given
/// cardinality: cor^2{K_script_K(X), K_script_G(X)}^card.
inline double are(score_family K, score_family G, const theoretical_margin& m,
                  int card) {
    if (card < 2) throw std::invalid_argument("are: cardinality must be >= 2");
    const double vk = local_power_mean(K, m, K);
    const double vg = local_power_mean(G, m, G);
    if (!(vk > 0.0) || !(vg > 0.0))
        throw degenerate_data_error("are: margin gives zero score variance");
    const double c = local_power_mean(K, m, G);
    const double rho2 = std::min(1.0, (c * c) / (vk * vg));
    return std::pow(rho2, card);
}

/// Finite joint distribution on R^d given by support points and probabilities.
class discrete_joint {
  public:
    discrete_joint(std::vector<std::vector<double>> points, std::vector<double> probs)
        : points_(std::move(points)), probs_(std::move(probs)) {
        if (points_.empty() || points_.size() != probs_.size())
            throw std::invalid_argument("discrete_joint: points/probs mismatch");
        dim_ = points_.front().size();
        double total = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i].size() != dim_)
                throw std::invalid_argument("discrete_joint: ragged support points");
            if (!(probs_[i] > 0.0))
                throw std::invalid_argument("discrete_joint: probabilities must be positive");
            total += probs_[i];
        }
        if (std::fabs(total - 1.0) > 1e-12)
            throw std::invalid_argument("discrete_joint: probabilities must sum to 1");
    }

    std::size_t dim() const { return dim_; }
    std::size_t support_size() const { return points_.size(); }
    const std::vector<std::vector<double>>& points() const { return points_; }
    const std::vector<double>& probs() const { return probs_; }

    /// Implied marginal distribution of coordinate j as a finite margin.
    theoretical_margin margin(std::size_t j) const {
        std::vector<std::pair<double, double>> mass;  // (value, prob)
        for (std::size_t i = 0; i < points_.size(); ++i) {
            mass.emplace_back(points_[i][j], probs_[i]);
        }
        std::sort(mass.begin(), mass.end());
        std::vector<margin_atom> atoms;
        double pos = 0.0;
        std::size_t i = 0;
        while (i < mass.size()) {
            double p = 0.0;
            const double v = mass[i].first;
            while (i < mass.size() && mass[i].first == v) p += mass[i++].second;
            atoms.push_back({v, pos, std::min(1.0, pos + p)});
            pos += p;
        }
        atoms.back().upper = 1.0;
        return theoretical_margin::discrete(std::move(atoms));
    }

    /// Draw one support index.
    std::size_t sample_index(rng_stream& rng) const {
        const double u = rng.next_uniform();
        double cum = 0.0;
        for (std::size_t i = 0; i + 1 < probs_.size(); ++i) {
            cum += probs_[i];
            if (u <= cum) return i;
        }
        return probs_.size() - 1;
    }

  private:
    std::vector<std::vector<double>> points_;
    std::vector<double> probs_;
    std::size_t dim_;
};

/// Population gamma_{K,A} = E[prod_{j in A} {K_script_j(X_j) - mu_j}] by exact
/// enumeration over the support.
inline double population_gamma(const discrete_joint& joint,
                               std::span<const score_family> families,
                               std::uint32_t mask) {
    if (families.size() != joint.dim())
        throw std::invalid_argument("population_gamma: one family per coordinate");

    // Per coordinate, the centered score of each support value.
    std::vector<std::vector<double>> centered(joint.dim());
    std::vector<std::vector<double>> values(joint.dim());
    for (std::size_t j = 0; j < joint.dim(); ++j) {
        if (!(mask & (1u << j))) continue;
        const theoretical_margin mj = joint.margin(j);
        for (const auto& a : mj.atoms()) {
            values[j].push_back(a.value);
            centered[j].push_back(scored_atom(families[j], a) - score_mean(families[j]));
        }
    }
    auto centered_of = [&](std::size_t j, double x) {
        const auto& vs = values[j];
        const auto it = std::lower_bound(vs.begin(), vs.end(), x);
        return centered[j][static_cast<std::size_t>(it - vs.begin())];
    };

    double total = 0.0;
    for (std::size_t i = 0; i < joint.support_size(); ++i) {
        double prod = joint.probs()[i];
        for (std::size_t j = 0; j < joint.dim(); ++j) {
            if (!(mask & (1u << j))) continue;
            prod *= centered_of(j, joint.points()[i][j]);
        }
        total += prod;
    }
    return total;
}

/// Corollary-4 consistency probe: samples n iid rows from the joint, computes
/// the empirical gamma_stat and returns it next to the enumerated population
/// value.
inline std::pair<double, double> consistency_check(const discrete_joint& joint,
                                                   std::span<const score_family> families,
                                                   std::uint32_t mask, std::size_t n,
                                                   std::uint64_t seed) {
    if (n < 1000) throw std::invalid_argument("consistency_check: need n >= 1000");
    rng_stream rng(seed);
    std::vector<std::vector<double>> columns(joint.dim(), std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = joint.sample_index(rng);
        for (std::size_t j = 0; j < joint.dim(); ++j) {
            columns[j][i] = joint.points()[idx][j];
        }
    }
    std::vector<scored_column> scored(joint.dim());
    for (std::size_t j = 0; j < joint.dim(); ++j) {
        scored[j] = score_column(build_margin(columns[j]), families[j]);
    }
    return {gamma_stat(scored, mask), population_gamma(joint, families, mask)};
}

}  // namespace mlcop
