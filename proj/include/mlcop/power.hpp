#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mlcop/simulate.hpp"
#include "mlcop/stats.hpp"

namespace mlcop {

struct power_study_config {
    std::vector<copula_model> models;
    std::vector<margin_spec> margins;
    std::vector<std::size_t> n_values;
    std::size_t replications = 500;
    double alpha = 0.05;
    int d = 5;
    std::vector<score_family> families;
    std::vector<int> pmax_values;
    std::uint64_t master_seed = 20260811;
    int threads = 0;  // 0: hardware concurrency, capped by MLCOP_THREADS

    void validate() const {
        if (models.empty() || margins.empty() || n_values.empty() || families.empty() ||
            pmax_values.empty())
            throw std::invalid_argument("power study config: empty grid axis");
        if (replications < 1)
            throw std::invalid_argument("power study config: need N >= 1");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("power study config: alpha outside (0,1)");
    }
};

struct power_row {
    std::string model;
    std::string margin;
    std::size_t n;
    score_family family;
    int pmax;
    double reject_rate;  // fraction in [0,1]
    double se_rate;
    std::size_t replications;
};

struct power_table {
    std::vector<power_row> rows;
};

inline int resolve_thread_count(int requested) {
    int t = requested > 0 ? requested
                          : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    if (const char* env = std::getenv("MLCOP_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < t) t = cap;
    }
    return t;
}

namespace detail {

template <class Work>
inline void parallel_for(std::size_t count, int threads, const Work& work) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto runner = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int spawn = std::min<std::size_t>(threads, count);
    pool.reserve(spawn);
    for (int t = 0; t < spawn; ++t) pool.emplace_back(runner);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Run the serial power study. One series is simulated per replication of a
/// (model, margin, n) cell and shared by every (family, pmax) test; rejection
/// is decided on the chi-square p-value. Replication k of cell c draws from
/// the stream derived from (master_seed, c, k), so the table is reproducible
/// independent of the thread count.
inline power_table run_power_study(const power_study_config& cfg) {
    cfg.validate();
    const int threads = resolve_thread_count(cfg.threads);
    const std::size_t tests_per_series = cfg.families.size() * cfg.pmax_values.size();

    power_table table;
    std::size_t cell_index = 0;
    for (const copula_model& model : cfg.models) {
        for (const margin_spec& margin : cfg.margins) {
            for (const std::size_t n : cfg.n_values) {
                std::vector<std::uint8_t> reject(cfg.replications * tests_per_series, 0);
                detail::parallel_for(
                    cfg.replications, threads, [&](std::size_t k) {
                        rng_stream rng = derive_stream(cfg.master_seed, cell_index, k);
                        const std::vector<double> series =
                            sample_series(model, margin, n, rng);
                        std::size_t slot = k * tests_per_series;
                        for (const score_family f : cfg.families) {
                            for (const int pmax : cfg.pmax_values) {
                                try {
                                    const test_report rep =
                                        test_randomness(series, cfg.d, f, pmax);
                                    reject[slot++] = rep.pvalue_chi2 < cfg.alpha;
                                } catch (const std::exception& e) {
                                    throw std::runtime_error(
                                        "power study cell (" +
                                        std::string(to_token(model.kind)) + ", " +
                                        std::string(margin.token()) + ", n=" +
                                        std::to_string(n) + ", rep " +
                                        std::to_string(k) + "): " + e.what());
                                }
                            }
                        }
                    });
                std::size_t offset = 0;
                for (const score_family f : cfg.families) {
                    for (const int pmax : cfg.pmax_values) {
                        std::size_t hits = 0;
                        for (std::size_t k = 0; k < cfg.replications; ++k) {
                            hits += reject[k * tests_per_series + offset];
                        }
                        const double rate =
                            static_cast<double>(hits) / static_cast<double>(cfg.replications);
                        const double se = std::sqrt(rate * (1.0 - rate) /
                                                    static_cast<double>(cfg.replications));
                        table.rows.push_back({std::string(to_token(model.kind)),
                                              std::string(margin.token()), n, f, pmax,
                                              rate, se, cfg.replications});
                        ++offset;
                    }
                }
                ++cell_index;
            }
        }
    }
    return table;
}

namespace detail {

inline std::string format_fixed1(double pct) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), pct,
                                   std::chars_format::fixed, 1);
    return std::string(buf, res.ptr);
}

inline std::string format_full(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// CSV with 1-decimal percent columns mirroring the study tables plus
/// full-precision rates. Locale-independent ('.' decimal separator).
inline void write_power_csv(std::ostream& os, const power_table& table) {
    os << "model,margin,n,family,pmax,reject_pct,se_pct,reject_rate,se_rate\n";
    for (const power_row& row : table.rows) {
        os << row.model << ',' << row.margin << ',' << row.n << ','
           << to_token(row.family) << ',' << row.pmax << ','
           << detail::format_fixed1(100.0 * row.reject_rate) << ','
           << detail::format_fixed1(100.0 * row.se_rate) << ','
           << detail::format_full(row.reject_rate) << ','
           << detail::format_full(row.se_rate) << '\n';
    }
}

}  // namespace mlcop
