#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlcop/rng.hpp"
#include "mlcop/simulate.hpp"
#include "mlcop/stats.hpp"

using namespace mlcop;
using Catch::Matchers::WithinAbs;

namespace {

double chi2_quantile(double p, int df) {
    double lo = 0.0, hi = 1000.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (1.0 - chi2_sf(mid, df) < p) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Unbiased estimate of Kendall's tau from disjoint comparisons of iid pairs
// (V, U) drawn from the transition copula.
double tau_from_pairs(const copula_model& model, std::size_t comparisons,
                      std::uint64_t seed) {
    rng_stream rng(seed);
    double concord = 0.0;
    for (std::size_t i = 0; i < comparisons; ++i) {
        const double v1 = rng.next_uniform();
        const double u1 = conditional_inverse(model, std::vector<double>{v1},
                                              rng.next_uniform());
        const double v2 = rng.next_uniform();
        const double u2 = conditional_inverse(model, std::vector<double>{v2},
                                              rng.next_uniform());
        concord += ((v1 - v2) * (u1 - u2) > 0.0) ? 1.0 : -1.0;
    }
    return concord / static_cast<double>(comparisons);
}

}  // namespace

TEST_CASE("tau to parameter") {
    REQUIRE_THAT(tau_to_param(copula_kind::gaussian, 0.1),
                 WithinAbs(0.15643446504023087, 1e-9));
    REQUIRE_THAT(tau_to_param(copula_kind::clayton, 0.1),
                 WithinAbs(2.0 / 9.0, 1e-12));
    const double frank_theta = tau_to_param(copula_kind::frank, 0.1);
    REQUIRE_THAT(frank_theta, WithinAbs(0.9073675457764787, 1e-6));
    REQUIRE_THAT(frank_tau(frank_theta), WithinAbs(0.1, 1e-10));
    REQUIRE_THAT(tau_to_param(copula_kind::frank, -0.1),
                 WithinAbs(-frank_theta, 1e-9));

    REQUIRE_THROWS_AS(tau_to_param(copula_kind::clayton, -0.2),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(tau_to_param(copula_kind::gaussian, 1.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(tau_to_param(copula_kind::tent_map, 0.1),
                      std::invalid_argument);
}

TEST_CASE("conditional inverse closed forms") {
    const copula_model indep{copula_kind::independence, 0.0};
    const copula_model gauss0{copula_kind::gaussian, 0.0};
    const copula_model clayton2{copula_kind::clayton, 2.0};
    const copula_model frank{copula_kind::frank, 0.9073675457764787};
    const copula_model fgm{copula_kind::fgm, 1.0};
    const copula_model tent{copula_kind::tent_map, 0.0};

    const std::vector<double> h1{0.37};
    for (double w : {0.1, 0.5, 0.9}) {
        REQUIRE(conditional_inverse(indep, h1, w) == w);
        REQUIRE_THAT(conditional_inverse(gauss0, h1, w), WithinAbs(w, 1e-12));
    }

    REQUIRE_THAT(conditional_inverse(clayton2, std::vector<double>{0.5}, 0.5),
                 WithinAbs(0.5463906428428872, 1e-10));
    REQUIRE_THAT(conditional_inverse(frank, std::vector<double>{0.5}, 0.5),
                 WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(conditional_inverse(fgm, std::vector<double>{0.5, 0.23}, 0.77),
                 WithinAbs(0.77, 1e-12));

    // Tent map, jitter-free at w = 1/2: 0.3 -> 0.6 -> 0.8 -> 0.4.
    double v = 0.3;
    for (double expect : {0.6, 0.8, 0.4}) {
        v = conditional_inverse(tent, std::vector<double>{v}, 0.5);
        REQUIRE_THAT(v, WithinAbs(expect, 1e-9));
    }

    REQUIRE_THROWS_AS(conditional_inverse(fgm, h1, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(conditional_inverse(clayton2, std::vector<double>{0.1, 0.2}, 0.5),
                      std::invalid_argument);
}

TEST_CASE("conditional inverse is increasing in w") {
    const copula_model models[] = {{copula_kind::gaussian, 0.156434},
                                   {copula_kind::clayton, 2.0 / 9.0},
                                   {copula_kind::frank, 0.907368}};
    for (const auto& model : models) {
        for (double v : {0.1, 0.5, 0.9}) {
            double prev = 0.0;
            for (int k = 1; k <= 40; ++k) {
                const double u = conditional_inverse(model, std::vector<double>{v},
                                                     k / 41.0);
                REQUIRE(u > prev);
                REQUIRE(u < 1.0);
                prev = u;
            }
        }
    }
}

TEST_CASE("h-inverse inverts the conditional cdf (fgm quadratic)") {
    const copula_model fgm{copula_kind::fgm, 0.8};
    for (double v1 : {0.2, 0.7}) {
        for (double v2 : {0.1, 0.9}) {
            const double c = (1.0 - 2.0 * v1) * (1.0 - 2.0 * v2);
            for (double w : {0.05, 0.4, 0.95}) {
                const double u =
                    conditional_inverse(fgm, std::vector<double>{v1, v2}, w);
                const double back = u + 0.8 * c * u * (1.0 - u);
                REQUIRE_THAT(back, WithinAbs(w, 1e-12));
            }
        }
    }
}

TEST_CASE("margin quantiles") {
    const margin_spec f1(margin_kind::f1);
    REQUIRE(margin_quantile(f1, 0.1) == 0.0);
    REQUIRE(margin_quantile(f1, 0.2) == 0.0);
    REQUIRE(margin_quantile(f1, 0.5) == 1.0);

    const margin_spec f6(margin_kind::f6);
    REQUIRE(margin_quantile(f6, 0.5) == 0.0);
    REQUIRE(margin_quantile(f6, 0.6) == std::floor(200 * normal_quantile(0.6)));

    const margin_spec f7(margin_kind::f7);
    REQUIRE(margin_quantile(f7, 0.5) == 1.0);
    REQUIRE(margin_quantile(f7, 0.4) == 1.0);
    REQUIRE(margin_quantile(f7, 0.6) == 2.0);
    REQUIRE(margin_quantile(f7, 0.95) == 19.0);

    const margin_spec f5(margin_kind::f5);
    REQUIRE(margin_quantile(f5, 0.5) == 0.0);
    REQUIRE(margin_quantile(f5, 0.45) == 0.0);
    REQUIRE(margin_quantile(f5, 0.449) < 0.0);
    REQUIRE(margin_quantile(f5, 0.551) > 0.0);

    REQUIRE_THROWS_AS(margin_quantile(f1, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(margin_quantile(f1, 1.0), std::domain_error);
}

TEST_CASE("margin moments") {
    const copula_model indep{copula_kind::independence, 0.0};
    const std::vector<double> f2 =
        sample_series(indep, margin_spec(margin_kind::f2), 100000, 1u);
    double mean = 0.0;
    for (double v : f2) mean += v;
    mean /= f2.size();
    REQUIRE_THAT(mean, WithinAbs(6.0, 0.05));

    const std::vector<double> f3 =
        sample_series(indep, margin_spec(margin_kind::f3), 100000, 2u);
    mean = 0.0;
    for (double v : f3) mean += v;
    mean /= f3.size();
    REQUIRE_THAT(mean, WithinAbs(6.0, 0.12));  // NB(1.5, 0.2) has mean 6, var 30
}

TEST_CASE("sampling is deterministic given the seed") {
    const copula_model clayton{copula_kind::clayton, 2.0 / 9.0};
    const margin_spec f4(margin_kind::f4);
    const auto a = sample_series(clayton, f4, 500, 77u);
    const auto b = sample_series(clayton, f4, 500, 77u);
    REQUIRE(a == b);
    const auto c = sample_series(clayton, f4, 500, 78u);
    REQUIRE(a != c);
}

TEST_CASE("stationary uniforms pass a coarse uniformity check") {
    const copula_model models[] = {{copula_kind::independence, 0.0},
                                   {copula_kind::tent_map, 0.0},
                                   {copula_kind::fgm, 1.0},
                                   {copula_kind::clayton, 2.0 / 9.0},
                                   {copula_kind::frank, 0.907368},
                                   {copula_kind::gaussian, 0.156434}};
    const double crit = chi2_quantile(0.999, 19);  // 0.1% level, 20 bins
    std::uint64_t seed = 4000;
    for (const auto& model : models) {
        rng_stream rng(seed++);
        const std::vector<double> u = sample_uniform_series(model, 100000, rng);
        std::vector<std::size_t> bins(20, 0);
        for (double v : u) {
            const int b = std::clamp(static_cast<int>(v * 20.0), 0, 19);
            ++bins[b];
        }
        double stat = 0.0;
        const double expect = u.size() / 20.0;
        for (std::size_t b : bins) stat += (b - expect) * (b - expect) / expect;
        INFO("model " << to_token(model.kind) << " chi2 " << stat);
        REQUIRE(stat < crit);
    }
}

TEST_CASE("kendall tau round trip at tau = 0.1") {
    const copula_model models[] = {
        {copula_kind::gaussian, tau_to_param(copula_kind::gaussian, 0.1)},
        {copula_kind::clayton, tau_to_param(copula_kind::clayton, 0.1)},
        {copula_kind::frank, tau_to_param(copula_kind::frank, 0.1)}};
    std::uint64_t seed = 808;
    for (const auto& model : models) {
        const double tau_hat = tau_from_pairs(model, 100000, seed++);
        INFO("family " << to_token(model.kind));
        REQUIRE_THAT(tau_hat, WithinAbs(0.1, 0.01));
    }
}

TEST_CASE("tent map detected by savage scores but not by linear autocorrelation") {
    const copula_model tent{copula_kind::tent_map, 0.0};
    rng_stream rng(99);
    const std::vector<double> u = sample_uniform_series(tent, 10000, rng);

    double mean = 0.0;
    for (double v : u) mean += v;
    mean /= u.size();
    double c0 = 0.0, c1 = 0.0;
    for (std::size_t t = 0; t < u.size(); ++t) {
        c0 += (u[t] - mean) * (u[t] - mean);
        if (t + 1 < u.size()) c1 += (u[t] - mean) * (u[t + 1] - mean);
    }
    REQUIRE(std::fabs(c1 / c0) < 0.05);

    // On a (nearly) continuous margin the Spearman pair statistic is blind to
    // the tent map, while the Savage pair statistic rejects decisively.
    const test_report savage = test_randomness(u, 2, score_family::savage, 2);
    REQUIRE(savage.pvalue_chi2 < 1e-6);
    const test_report spearman = test_randomness(u, 2, score_family::spearman, 2);
    REQUIRE(std::fabs(spearman.r[0]) < 0.05);
}

TEST_CASE("copula model tokens") {
    const copula_model clayton = copula_model::from_token("clayton:tau=0.1");
    REQUIRE(clayton.kind == copula_kind::clayton);
    REQUIRE_THAT(clayton.param, WithinAbs(2.0 / 9.0, 1e-12));

    const copula_model gauss = copula_model::from_token("gaussian:rho=0.25");
    REQUIRE_THAT(gauss.param, WithinAbs(0.25, 0.0));

    const copula_model fgm = copula_model::from_token("FGM");
    REQUIRE(fgm.kind == copula_kind::fgm);
    REQUIRE(fgm.param == 1.0);

    const copula_model frank = copula_model::from_token("frank");
    REQUIRE_THAT(frank_tau(frank.param), WithinAbs(0.1, 1e-9));

    REQUIRE(copula_model::from_token("indep").kind == copula_kind::independence);
    REQUIRE_THROWS_AS(copula_model::from_token("gumbel"), std::invalid_argument);
    REQUIRE_THROWS_AS(copula_model::from_token("tent:theta=1"), std::invalid_argument);
    REQUIRE_THROWS_AS(copula_model::from_token("clayton:theta=-1"),
                      std::invalid_argument);

    REQUIRE(margin_spec::from_token("F3").kind() == margin_kind::f3);
    REQUIRE_THROWS_AS(margin_spec::from_token("f9"), std::invalid_argument);
}

TEST_CASE("recommended scores follow the local power analysis") {
    REQUIRE(recommend_score(copula_kind::gaussian) == score_family::vdw);
    REQUIRE(recommend_score(copula_kind::clayton) == score_family::savage);
    REQUIRE(recommend_score(copula_kind::frank) == score_family::spearman);
    REQUIRE(recommend_score(copula_kind::fgm) == score_family::spearman);
}
