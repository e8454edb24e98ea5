#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "mlcop/empirical.hpp"
#include "mlcop/rng.hpp"

using namespace mlcop;
using Catch::Matchers::WithinAbs;

namespace {

// Random sample with a controllable amount of ties.
std::vector<double> tied_sample(rng_stream& rng, std::size_t n, int support) {
    std::vector<double> out(n);
    for (auto& v : out) {
        if (support > 0) {
            v = static_cast<double>(rng.next_below(static_cast<std::size_t>(support)));
        } else {
            v = rng.next_uniform();
        }
    }
    return out;
}

}  // namespace

TEST_CASE("build_margin groups ties and assigns bounds") {
    const std::vector<double> sample{1, 2, 2, 5};
    const empirical_margin m = build_margin(sample);
    REQUIRE(m.distinct_values() == std::vector<double>{1, 2, 5});
    REQUIRE(m.cum_probs() == std::vector<double>{0.25, 0.75, 1.0});
    REQUIRE(m.bounds(1).lower == 0.25);
    REQUIRE(m.bounds(1).upper == 0.75);
    REQUIRE(m.bounds(2).lower == 0.25);
    REQUIRE(m.bounds(0).upper == 0.25);
    REQUIRE(m.bounds(3).lower == 0.75);

    const empirical_margin single = build_margin(std::vector<double>{7});
    REQUIRE(single.distinct_count() == 1);
    REQUIRE(single.bounds(0).lower == 0.0);
    REQUIRE(single.bounds(0).upper == 1.0);

    const empirical_margin distinct = build_margin(std::vector<double>{3, 1, 2});
    REQUIRE(distinct.bounds(1).lower == 0.0);  // value 1 is rank 1
    REQUIRE(distinct.bounds(1).upper == Catch::Approx(1.0 / 3.0));
    REQUIRE(distinct.bounds(0).lower == Catch::Approx(2.0 / 3.0));
    REQUIRE(distinct.bounds(0).upper == 1.0);
}

TEST_CASE("build_margin rejects bad input") {
    REQUIRE_THROWS_AS(build_margin(std::vector<double>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(
        build_margin(std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}),
        std::invalid_argument);
}

TEST_CASE("negative zero ties with positive zero") {
    const empirical_margin m = build_margin(std::vector<double>{-0.0, 0.0, 1.0});
    REQUIRE(m.distinct_count() == 2);
    REQUIRE(m.bounds(0).upper == m.bounds(1).upper);
}

TEST_CASE("jump_kernel") {
    const empirical_margin m = build_margin(std::vector<double>{1, 2, 2, 5});
    // Observation 1 is a "2" with bounds (0.25, 0.75).
    REQUIRE_THAT(jump_kernel(m, 1, 0.5), WithinAbs(0.5, 1e-15));
    REQUIRE(jump_kernel(m, 1, 1.0) == 1.0);
    REQUIRE(jump_kernel(m, 1, 0.1) == 0.0);
    REQUIRE(jump_kernel(m, 1, 0.25) == 0.0);
    REQUIRE(jump_kernel(m, 1, 0.75) == 1.0);
}

TEST_CASE("score_column examples") {
    const empirical_margin no_ties = build_margin(std::vector<double>{0.4, 1.7, 0.1, 2.2});
    const scored_column sp = score_column(no_ties, score_family::spearman);
    REQUIRE_THAT(sp.s2, WithinAbs(0.078125, 1e-15));  // (n^2-1)/(12 n^2)

    const std::vector<double> binary{0, 1, 0, 1};
    const scored_column spb = score_column(build_margin(binary), score_family::spearman);
    REQUIRE_THAT(spb.centered[0], WithinAbs(-0.25, 1e-15));
    REQUIRE_THAT(spb.centered[1], WithinAbs(0.25, 1e-15));
    REQUIRE_THAT(spb.s2, WithinAbs(0.0625, 1e-15));

    const scored_column vdwb = score_column(build_margin(binary), score_family::vdw);
    REQUIRE_THAT(vdwb.centered[0], WithinAbs(-0.7978845608028654, 1e-12));
    REQUIRE_THAT(vdwb.centered[1], WithinAbs(0.7978845608028654, 1e-12));
    REQUIRE_THAT(vdwb.s2, WithinAbs(0.6366197723675814, 1e-12));
}

TEST_CASE("mean of every score column equals mu") {
    rng_stream rng(123);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 2 + rng.next_below(60);
        const int support = (rep % 3 == 0) ? 0 : 2 + static_cast<int>(rng.next_below(6));
        const std::vector<double> sample = tied_sample(rng, n, support);
        const empirical_margin m = build_margin(sample);

        // Margin invariants: strictly increasing cum probs ending exactly at 1,
        // and every jump at least 1/n with total mass 1.
        REQUIRE(m.cum_probs().back() == 1.0);
        double total_jump = 0.0;
        for (std::size_t k = 0; k < m.distinct_count(); ++k) {
            REQUIRE(m.upper(k) > m.lower(k));
            REQUIRE(m.upper(k) - m.lower(k) >=
                    1.0 / static_cast<double>(n) - 1e-12);
            total_jump += m.upper(k) - m.lower(k);
        }
        REQUIRE_THAT(total_jump, WithinAbs(1.0, 1e-12));
        for (score_family f : all_score_families) {
            const scored_column col = score_column(m, f);
            double mean = 0.0;
            for (double v : col.values) mean += v;
            mean /= static_cast<double>(n);
            REQUIRE_THAT(mean, WithinAbs(score_mean(f), 1e-10));
            REQUIRE(col.s2 >= 0.0);
            if (m.distinct_count() > 1) REQUIRE(col.s2 > 0.0);
        }
    }
}

TEST_CASE("serial frame indices") {
    const serial_frame f42 = build_serial_frame(4, 2);
    // 1-based rows (1,4),(2,1),(3,2),(4,3).
    REQUIRE(f42.index(0, 0) == 0);
    REQUIRE(f42.index(0, 1) == 3);
    REQUIRE(f42.index(1, 1) == 0);
    REQUIRE(f42.index(2, 1) == 1);
    REQUIRE(f42.index(3, 1) == 2);

    const serial_frame f33 = build_serial_frame(3, 3);
    REQUIRE(f33.index(0, 0) == 0);
    REQUIRE(f33.index(0, 1) == 2);
    REQUIRE(f33.index(0, 2) == 1);

    for (std::size_t t = 1; t < 6; ++t) {
        REQUIRE(build_serial_frame(6, 2).index(t, 1) == t - 1);
    }

    REQUIRE_THROWS_AS(build_serial_frame(4, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(build_serial_frame(4, 5), std::invalid_argument);
}

TEST_CASE("each lag column is a permutation") {
    const serial_frame f = build_serial_frame(7, 4);
    for (std::size_t lag = 0; lag < 4; ++lag) {
        std::vector<bool> seen(7, false);
        for (std::size_t t = 0; t < 7; ++t) {
            const std::size_t idx = f.index(t, lag);
            REQUIRE(idx < 7);
            REQUIRE(!seen[idx]);
            seen[idx] = true;
        }
    }
}

TEST_CASE("monotone transforms leave bounds and scores bit-identical") {
    rng_stream rng(9);
    const std::vector<double> sample = tied_sample(rng, 50, 5);
    std::vector<double> transformed = sample;
    for (double& v : transformed) v = std::exp(2.0 * v - 3.0);

    const empirical_margin a = build_margin(sample);
    const empirical_margin b = build_margin(transformed);
    REQUIRE(a.cum_probs() == b.cum_probs());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        REQUIRE(a.bounds(i).lower == b.bounds(i).lower);
        REQUIRE(a.bounds(i).upper == b.bounds(i).upper);
    }
    for (score_family f : all_score_families) {
        REQUIRE(score_column(a, f).values == score_column(b, f).values);
    }
}
