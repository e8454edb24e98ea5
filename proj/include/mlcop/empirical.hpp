#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlcop/scores.hpp"

namespace mlcop {

struct degenerate_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct obs_bounds {
    double lower;  // F_n(x-)
    double upper;  // F_n(x)
};

/// Empirical cdf of one sample with left limits and jumps. Ties are defined by
/// exact value equality (with -0 canonicalized to +0), so the margin and every
/// statistic built on it are invariant under strictly increasing transforms.
class empirical_margin {
  public:
    empirical_margin(std::vector<double> distinct, std::vector<double> cum,
                     std::vector<std::uint32_t> obs_index)
        : distinct_(std::move(distinct)),
          cum_(std::move(cum)),
          obs_index_(std::move(obs_index)) {}

    std::size_t n() const { return obs_index_.size(); }
    std::size_t distinct_count() const { return distinct_.size(); }
    const std::vector<double>& distinct_values() const { return distinct_; }
    const std::vector<double>& cum_probs() const { return cum_; }

    double lower(std::size_t k) const { return k == 0 ? 0.0 : cum_[k - 1]; }
    double upper(std::size_t k) const { return cum_[k]; }

    std::uint32_t distinct_index(std::size_t i) const { return obs_index_[i]; }

    obs_bounds bounds(std::size_t i) const {
        const std::uint32_t k = obs_index_[i];
        return {lower(k), upper(k)};
    }

  private:
    std::vector<double> distinct_;            // ascending distinct values
    std::vector<double> cum_;                 // F_n at each distinct value, last == 1
    std::vector<std::uint32_t> obs_index_;    // distinct index per observation
};

inline empirical_margin build_margin(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n == 0) throw std::invalid_argument("build_margin: empty sample");

    std::vector<double> values(sample.begin(), sample.end());
    for (double& v : values) {
        if (std::isnan(v)) throw std::invalid_argument("build_margin: sample contains NaN");
        if (v == 0.0) v = 0.0;  // canonicalize -0
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> distinct;
    std::vector<double> cum;
    std::vector<std::uint32_t> obs_index(n);
    std::size_t i = 0;
    std::size_t count = 0;
    while (i < n) {
        std::size_t j = i;
        const double v = values[order[i]];
        while (j < n && values[order[j]] == v) ++j;
        count += j - i;
        const std::uint32_t k = static_cast<std::uint32_t>(distinct.size());
        distinct.push_back(v);
        cum.push_back(static_cast<double>(count) / static_cast<double>(n));
        for (std::size_t t = i; t < j; ++t) obs_index[order[t]] = k;
        i = j;
    }
    cum.back() = 1.0;
    return empirical_margin(std::move(distinct), std::move(cum), std::move(obs_index));
}

/// Multilinear jump kernel J_{F_n}(X_i, u): 0 below the observation's
/// probability interval, 1 above it, linear in between.
inline double jump_kernel(const empirical_margin& m, std::size_t i, double u) {
    const obs_bounds b = m.bounds(i);
    if (u <= b.lower) return 0.0;
    if (u >= b.upper) return 1.0;
    return (u - b.lower) / (b.upper - b.lower);
}

/// Per-observation tie-aware scores of one margin, their centered values and
/// the plug-in variance estimate s2 = mean(centered^2).
struct scored_column {
    score_family family;
    std::vector<double> values;
    std::vector<double> centered;
    double s2;
};

inline scored_column score_column(const empirical_margin& m, score_family f) {
    const std::size_t n = m.n();
    if (n < 2) throw std::invalid_argument("score_column: need at least 2 observations");
    const double mu = score_mean(f);

    std::vector<double> by_distinct(m.distinct_count());
    for (std::size_t k = 0; k < m.distinct_count(); ++k) {
        by_distinct[k] = score_at(f, m.lower(k), m.upper(k));
    }

    scored_column col;
    col.family = f;
    col.values.resize(n);
    col.centered.resize(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = by_distinct[m.distinct_index(i)];
        col.values[i] = v;
        col.centered[i] = v - mu;
        ss += col.centered[i] * col.centered[i];
    }
    col.s2 = ss / static_cast<double>(n);
    return col;
}

/// Row/lag index map for the circular serial construction Y_{t+n} = Y_t:
/// row t, lag j holds original index (t - j) mod n.
class serial_frame {
  public:
    serial_frame(std::size_t n, std::size_t d) : n_(n), d_(d) {}

    std::size_t n() const { return n_; }
    std::size_t d() const { return d_; }

    std::size_t index(std::size_t row, std::size_t lag) const {
        return (row + n_ - lag) % n_;
    }

  private:
    std::size_t n_;
    std::size_t d_;
};

inline serial_frame build_serial_frame(std::size_t n, std::size_t d) {
    if (d < 2 || d > n)
        throw std::invalid_argument("build_serial_frame: need n >= d >= 2");
    return serial_frame(n, d);
}

/// Materialize the d lag columns of a scored series; lag 0 is the column
/// itself, every other lag is a circular shift sharing the same margin and s2.
inline std::vector<scored_column> lag_columns(const scored_column& base,
                                              const serial_frame& frame) {
    const std::size_t n = frame.n();
    if (base.values.size() != n)
        throw std::invalid_argument("lag_columns: column length != frame length");
    std::vector<scored_column> cols(frame.d());
    for (std::size_t lag = 0; lag < frame.d(); ++lag) {
        scored_column& c = cols[lag];
        c.family = base.family;
        c.s2 = base.s2;
        c.values.resize(n);
        c.centered.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t s = frame.index(t, lag);
            c.values[t] = base.values[s];
            c.centered[t] = base.centered[s];
        }
    }
    return cols;
}

}  // namespace mlcop
