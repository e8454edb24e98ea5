#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlcop/dist.hpp"
#include "mlcop/empirical.hpp"
#include "mlcop/rng.hpp"
#include "mlcop/scores.hpp"

namespace mlcop {

/// Index sets A over {1..d} encoded as bitmasks (bit j-1 is component j).
/// Non-serial: all A with 2 <= |A| <= pmax. Serial: additionally A must
/// contain component 1 (lag 0). Masks are enumerated in ascending value.
struct subset_family {
    int d;
    bool serial;
    int pmax;
    std::vector<std::uint32_t> masks;
};

inline subset_family make_subsets(int d, bool serial, int pmax) {
    if (d < 2 || d > 24) throw std::invalid_argument("make_subsets: need 2 <= d <= 24");
    if (pmax < 2 || pmax > d)
        throw std::invalid_argument("make_subsets: need 2 <= pmax <= d");
    subset_family fam{d, serial, pmax, {}};
    const std::uint32_t full = (1u << d) - 1u;
    for (std::uint32_t m = 3u; m <= full; ++m) {
        const int card = std::popcount(m);
        if (card < 2 || card > pmax) continue;
        if (serial && !(m & 1u)) continue;
        fam.masks.push_back(m);
    }
    return fam;
}

/// gamma_{K,A}: mean over rows of the product of centered scores over A.
inline double gamma_stat(const std::vector<scored_column>& columns,
                         std::uint32_t mask) {
    if (std::popcount(mask) < 2)
        throw std::invalid_argument("gamma_stat: |A| must be >= 2");
    std::vector<const std::vector<double>*> sel;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (mask & (1u << j)) sel.push_back(&columns[j].centered);
    }
    if (std::popcount(mask) != static_cast<int>(sel.size()))
        throw std::invalid_argument("gamma_stat: mask selects missing columns");
    const std::size_t n = sel.front()->size();
    for (const auto* c : sel) {
        if (c->size() != n) throw std::invalid_argument("gamma_stat: misaligned columns");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (const auto* c : sel) prod *= (*c)[i];
        sum += prod;
    }
    return sum / static_cast<double>(n);
}

/// r_{A,n} = gamma / prod_{j in A} sqrt(s2_j).
inline double standardized(double gamma, std::span<const double> s2_per_column,
                           std::uint32_t mask) {
    double denom = 1.0;
    for (std::size_t j = 0; j < s2_per_column.size(); ++j) {
        if (!(mask & (1u << j))) continue;
        const double s2 = s2_per_column[j];
        if (!(s2 > 0.0)) {
            throw degenerate_data_error("standardized: column " + std::to_string(j + 1) +
                                        " has zero score variance");
        }
        denom *= std::sqrt(s2);
    }
    return gamma / denom;
}

struct wald_result {
    double stat;
    std::size_t df;
};

inline wald_result wald_statistic(std::span<const double> rs, std::size_t n) {
    if (rs.empty()) throw std::invalid_argument("wald_statistic: no subsets");
    double sum = 0.0;
    for (double r : rs) sum += r * r;
    return {static_cast<double>(n) * sum, rs.size()};
}

struct fisher_result {
    double stat;
    std::size_t df;
    double pvalue;
    bool clamped;  // some per-subset p-value underflowed and was clamped
};

/// Fisher-type combination -2 sum_A log{2 - 2 Phi(sqrt(n)|r_A|)}, referred to
/// a chi-square with 2m degrees of freedom.
inline fisher_result fisher_combination(std::span<const double> rs, std::size_t n) {
    if (rs.empty()) throw std::invalid_argument("fisher_combination: no subsets");
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    double stat = 0.0;
    bool clamped = false;
    for (double r : rs) {
        double p = 2.0 * normal_sf(sqrt_n * std::fabs(r));
        if (p < 1e-300) {
            p = 1e-300;
            clamped = true;
        }
        stat += -2.0 * std::log(p);
    }
    const std::size_t df = 2 * rs.size();
    return {stat, df, chi2_sf(stat, static_cast<int>(df)), clamped};
}

struct test_report {
    bool serial;
    std::size_t n;
    int d;
    int pmax;
    std::vector<score_family> families;  // per column; a single entry when serial
    subset_family subsets;
    std::vector<double> gamma;
    std::vector<double> r;
    std::vector<double> sqrt_n_r;
    std::vector<double> s2_per_column;  // a single entry when serial
    double wald_stat;
    std::size_t wald_df;
    double pvalue_chi2;
    double fisher_stat;
    std::size_t fisher_df;
    double fisher_pvalue;
    bool fisher_clamped;
};

namespace detail {

inline test_report assemble_report(bool serial, std::size_t n, int d, int pmax,
                                   std::vector<score_family> families,
                                   std::vector<double> s2_report,
                                   const std::vector<scored_column>& columns) {
    test_report rep;
    rep.serial = serial;
    rep.n = n;
    rep.d = d;
    rep.pmax = pmax;
    rep.families = std::move(families);
    rep.s2_per_column = std::move(s2_report);
    rep.subsets = make_subsets(d, serial, pmax);

    std::vector<double> s2(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) s2[j] = columns[j].s2;

    const double sqrt_n = std::sqrt(static_cast<double>(n));
    for (std::uint32_t mask : rep.subsets.masks) {
        const double g = gamma_stat(columns, mask);
        const double rv = standardized(g, s2, mask);
        rep.gamma.push_back(g);
        rep.r.push_back(rv);
        rep.sqrt_n_r.push_back(sqrt_n * rv);
    }

    const wald_result w = wald_statistic(rep.r, n);
    rep.wald_stat = w.stat;
    rep.wald_df = w.df;
    rep.pvalue_chi2 = chi2_sf(w.stat, static_cast<int>(w.df));

    const fisher_result fi = fisher_combination(rep.r, n);
    rep.fisher_stat = fi.stat;
    rep.fisher_df = fi.df;
    rep.fisher_pvalue = fi.pvalue;
    rep.fisher_clamped = fi.clamped;
    return rep;
}

inline void check_not_degenerate(const empirical_margin& m, std::size_t column_1based) {
    if (m.distinct_count() < 2) {
        throw degenerate_data_error("column " + std::to_string(column_1based) +
                                    " is constant (zero score variance)");
    }
}

}  // namespace detail

/// Test of independence for iid rows; data given as d columns of length n.
inline test_report test_independence(const std::vector<std::vector<double>>& columns,
                                     std::span<const score_family> families,
                                     int pmax) {
    const int d = static_cast<int>(columns.size());
    if (d < 2) throw std::invalid_argument("test_independence: need d >= 2 columns");
    if (families.size() != columns.size())
        throw std::invalid_argument("test_independence: one score family per column required");
    const std::size_t n = columns.front().size();
    if (n < 2) throw std::invalid_argument("test_independence: need n >= 2 rows");
    for (const auto& c : columns) {
        if (c.size() != n) throw std::invalid_argument("test_independence: ragged columns");
    }

    std::vector<scored_column> scored(columns.size());
    std::vector<double> s2(columns.size());
    std::vector<score_family> fams(families.begin(), families.end());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const empirical_margin m = build_margin(columns[j]);
        detail::check_not_degenerate(m, j + 1);
        scored[j] = score_column(m, families[j]);
        s2[j] = scored[j].s2;
    }
    return detail::assemble_report(false, n, d, pmax, std::move(fams), std::move(s2),
                                   scored);
}

/// Test of randomness for a stationary series using d circular lag columns
/// scored against the single shared empirical margin.
inline test_report test_randomness(std::span<const double> series, int d,
                                   score_family family, int pmax) {
    const std::size_t n = series.size();
    if (d < 2 || static_cast<std::size_t>(d) > n)
        throw std::invalid_argument("test_randomness: need n >= d >= 2");
    const empirical_margin m = build_margin(series);
    detail::check_not_degenerate(m, 1);
    const scored_column base = score_column(m, family);
    const serial_frame frame = build_serial_frame(n, static_cast<std::size_t>(d));
    const std::vector<scored_column> cols = lag_columns(base, frame);
    return detail::assemble_report(true, n, d, pmax, {family}, {base.s2}, cols);
}

struct dependogram_entry {
    std::uint32_t mask;
    double sqrt_n_r;
    double critical;
    bool exceeds;
};

/// Per-subset values sqrt(n) r_{A,n} against a two-sided critical line at
/// family-wise level alpha: Bonferroni by default, exact Sidak on request.
inline std::vector<dependogram_entry> dependogram(const test_report& rep, double alpha,
                                                  bool sidak = false) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("dependogram: alpha outside (0,1)");
    const double m = static_cast<double>(rep.subsets.masks.size());
    const double per_test =
        sidak ? 1.0 - std::pow(1.0 - alpha, 1.0 / m) : alpha / m;
    const double crit = normal_quantile(1.0 - 0.5 * per_test);
    std::vector<dependogram_entry> out;
    out.reserve(rep.subsets.masks.size());
    for (std::size_t k = 0; k < rep.subsets.masks.size(); ++k) {
        const double v = rep.sqrt_n_r[k];
        out.push_back({rep.subsets.masks[k], v, crit, std::fabs(v) > crit});
    }
    return out;
}

/// n^{-1/2} G_{A,n}(u): mean over rows of prod_{j in A} [J_j(X_ij, u_j) - u_j].
/// Oracle-only entry point; margins must be row-aligned.
inline double mobius_process_eval(const std::vector<empirical_margin>& margins,
                                  std::uint32_t mask, std::span<const double> u) {
    if (u.size() != margins.size())
        throw std::invalid_argument("mobius_process_eval: one coordinate per margin");
    const std::size_t n = margins.front().n();
    for (const auto& m : margins) {
        if (m.n() != n)
            throw std::invalid_argument("mobius_process_eval: misaligned margins");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (std::size_t j = 0; j < margins.size(); ++j) {
            if (!(mask & (1u << j))) continue;
            prod *= jump_kernel(margins[j], i, u[j]) - u[j];
        }
        sum += prod;
    }
    return sum / static_cast<double>(n);
}

/// Quadrature oracle for gamma_{K,A}: evaluates
///   (-1)^{|A|} n^{-1} sum_i prod_{j in A} int [J_j{X_ij, K_j(x)} - K_j(x)] dx
/// on a grid of quantile-spaced abscissae (uniform in x, so the Stieltjes
/// weights are exact), with the u-tails of unbounded score supports truncated
/// at mass 1e-6. Independent of lintegral/score_at; converges to gamma_stat.
inline double gamma_via_integral(const std::vector<empirical_margin>& margins,
                                 std::span<const score_family> families,
                                 std::uint32_t mask, int grid_size = 2000) {
    if (grid_size < 100)
        throw std::invalid_argument("gamma_via_integral: grid_size must be >= 100");
    if (families.size() != margins.size())
        throw std::invalid_argument("gamma_via_integral: one family per margin");
    const std::size_t n = margins.front().n();

    // Per column, the factor integral for each distinct value.
    std::vector<std::vector<double>> factor(margins.size());
    for (std::size_t j = 0; j < margins.size(); ++j) {
        if (!(mask & (1u << j))) continue;
        if (margins[j].n() != n)
            throw std::invalid_argument("gamma_via_integral: misaligned margins");
        const score_family f = families[j];
        const auto [xlo, xhi] = quantile_support(f, 1e-6);
        const double h = (xhi - xlo) / grid_size;
        const double sign = quantile_increasing(f) ? 1.0 : -1.0;
        const empirical_margin& m = margins[j];
        std::vector<double> acc(m.distinct_count(), 0.0);
        for (int g = 0; g < grid_size; ++g) {
            const double x = xlo + (g + 0.5) * h;
            const double u = quantile_inverse(f, x);
            for (std::size_t k = 0; k < m.distinct_count(); ++k) {
                const double a = m.lower(k);
                const double b = m.upper(k);
                double jk;
                if (u <= a) jk = 0.0;
                else if (u >= b) jk = 1.0;
                else jk = (u - a) / (b - a);
                acc[k] += jk - u;
            }
        }
        for (double& v : acc) v *= sign * h;
        factor[j] = std::move(acc);
    }

    const double parity = (std::popcount(mask) % 2 == 0) ? 1.0 : -1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (std::size_t j = 0; j < margins.size(); ++j) {
            if (!(mask & (1u << j))) continue;
            prod *= factor[j][margins[j].distinct_index(i)];
        }
        sum += prod;
    }
    return parity * sum / static_cast<double>(n);
}

namespace detail {

inline double wald_from_columns(const std::vector<scored_column>& cols, int d,
                                bool serial, int pmax, std::size_t n) {
    const subset_family fam = make_subsets(d, serial, pmax);
    std::vector<double> s2(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) s2[j] = cols[j].s2;
    std::vector<double> rs;
    rs.reserve(fam.masks.size());
    for (std::uint32_t mask : fam.masks) {
        rs.push_back(standardized(gamma_stat(cols, mask), s2, mask));
    }
    return wald_statistic(rs, n).stat;
}

}  // namespace detail

/// Monte Carlo permutation p-value (1 + #{permuted Wald >= observed})/(B+1)
/// for the non-serial test; each column is permuted independently.
inline double permutation_pvalue(const std::vector<std::vector<double>>& columns,
                                 std::span<const score_family> families, int pmax,
                                 int B, std::uint64_t seed) {
    if (B < 99) throw std::invalid_argument("permutation_pvalue: need B >= 99");
    const int d = static_cast<int>(columns.size());
    const std::size_t n = columns.front().size();

    std::vector<scored_column> scored(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const empirical_margin m = build_margin(columns[j]);
        detail::check_not_degenerate(m, j + 1);
        scored[j] = score_column(m, families[j]);
    }
    const double observed = detail::wald_from_columns(scored, d, false, pmax, n);

    rng_stream rng = derive_stream(seed, 0x7065726dULL);  // dedicated substream
    std::size_t exceed = 0;
    for (int b = 0; b < B; ++b) {
        // Permuting the rows of a column permutes its scores but leaves the
        // margin (and s2) unchanged.
        for (std::size_t j = 0; j < scored.size(); ++j) {
            shuffle_in_place(scored[j].centered, rng);
        }
        if (detail::wald_from_columns(scored, d, false, pmax, n) >= observed) ++exceed;
    }
    return static_cast<double>(1 + exceed) / static_cast<double>(B + 1);
}

/// Serial variant: the whole series is permuted, which permutes the shared
/// scored column before the circular lag columns are rebuilt.
inline double permutation_pvalue_serial(std::span<const double> series, int d,
                                        score_family family, int pmax, int B,
                                        std::uint64_t seed) {
    if (B < 99) throw std::invalid_argument("permutation_pvalue_serial: need B >= 99");
    const std::size_t n = series.size();
    const empirical_margin m = build_margin(series);
    detail::check_not_degenerate(m, 1);
    scored_column base = score_column(m, family);
    const serial_frame frame = build_serial_frame(n, static_cast<std::size_t>(d));

    const double observed = detail::wald_from_columns(lag_columns(base, frame), d,
                                                      true, pmax, n);
    rng_stream rng = derive_stream(seed, 0x7065726dULL);
    std::size_t exceed = 0;
    for (int b = 0; b < B; ++b) {
        shuffle_in_place(base.centered, rng);
        const double w = detail::wald_from_columns(lag_columns(base, frame), d, true,
                                                   pmax, n);
        if (w >= observed) ++exceed;
    }
    return static_cast<double>(1 + exceed) / static_cast<double>(B + 1);
}

}  // namespace mlcop
