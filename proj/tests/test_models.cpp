#include <catch_amalgamated.hpp>

#include <cmath>

#include "primestat/models.hpp"

using namespace primestat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("asymptotic mean and variance at N = 1e9 .. 1e14", "[models]")
{
    const double means[] = {120.637, 108.574, 98.703, 90.478, 83.518, 77.553};
    const double vars[] = {75.091, 71.681, 68.213, 64.858, 61.688, 58.730};
    for (int i = 0; i < 6; ++i) {
        const double n = std::pow(10.0, 9 + i);
        CHECK_THAT(asymptotic_mean(n, 2500), WithinRel(means[i], 5e-5));
        CHECK_THAT(asymptotic_variance(n, 2500), WithinRel(vars[i], 5e-5));
    }
    CHECK(asymptotic_mean(1e9, 0) == 0.0);
    CHECK(asymptotic_variance(1e9, 1e9) == 0.0);
}

TEST_CASE("w models", "[models]")
{
    CHECK(w_linear(1e9, 0) == 1.0);
    CHECK(w_linear(1e12, 0) == 1.0);
    CHECK_THAT(w_linear(1e9, 8.288), WithinAbs(0.600, 5e-4));
    CHECK_THAT(w_linear(1e9, std::log(1e9)), WithinAbs(0.0, 1e-15));

    CHECK(w_alpha(1e9, 1, 1, 7.5) == w_linear(1e9, 1));
    CHECK(w_alpha(1e9, 2500, 0, 0) == 1.0);
    const double a = alpha_eval({AlphaKind::I, 0.414, 0}, 2500);
    CHECK_THAT(w_alpha(1e9, 2500, 1, a), WithinAbs(0.55422, 5e-5));
}

TEST_CASE("alpha parametrizations", "[models]")
{
    CHECK_THAT(alpha_eval({AlphaKind::I, 0.414, 0}, 1000), WithinAbs(1.05993, 1e-5));
    for (double h : {2.0, 10.0, 1e3, 1e6}) CHECK_THAT(alpha_eval({AlphaKind::III, 0.7, 0.7}, h), WithinRel(1.0, 1e-15));

    for (const auto kind : {AlphaKind::I, AlphaKind::II, AlphaKind::III}) {
        const double a1 = 0.41;
        const double a2 = -0.39;
        const double v = alpha_eval({kind, a1, a2}, 1e12);
        CHECK(std::abs(v - 1) < std::abs(std::max({std::abs(a1), std::abs(a2), 1.0})) / std::log(1e12) * 1.1);
    }
    CHECK_THROWS_AS(alpha_eval({AlphaKind::I, 0.4, 0}, 1), InputError);
    CHECK_THROWS_AS(alpha_eval({AlphaKind::II, 0, 0.4}, 1), InputError);
    CHECK_THROWS_AS(alpha_eval({AlphaKind::III, 0, -std::log(100.0)}, 100), InputError);
    CHECK(parse_alpha_kind("II") == AlphaKind::II);
    CHECK_THROWS_AS(parse_alpha_kind("IV"), InputError);
    CHECK(parameter_count(AlphaKind::III) == 2);
}

TEST_CASE("alpha tends to 1 as h grows", "[models][property]")
{
    // |alpha - 1| ~ |a|/log h; at h = 1e12 log h is 27.6, so use the first-order bound
    for (const auto kind : {AlphaKind::I, AlphaKind::II, AlphaKind::III}) {
        double prev = 1e300;
        for (double h : {1e3, 1e6, 1e12, 1e100, 1e300}) {
            const double d = std::abs(alpha_eval({kind, 0.5, -0.3}, h) - 1);
            CHECK(d < prev);
            prev = d;
        }
        CHECK(prev < 1e-2);
    }
}

TEST_CASE("kind III degenerates to kinds I and II", "[models][property]")
{
    for (double h : {2.0, 200.0, 5e4, 1e9}) {
        for (double a : {-0.6, 0.0, 0.414, 1.3}) {
            CHECK(alpha_eval({AlphaKind::III, a, 0}, h) == alpha_eval({AlphaKind::I, a, 0}, h));
            CHECK(alpha_eval({AlphaKind::III, 0, a}, h) == alpha_eval({AlphaKind::II, 0, a}, h));
        }
    }
}

TEST_CASE("kind III first-order Taylor agreement", "[models][property]")
{
    const double a1 = 0.9;
    const double a2 = 0.5;
    for (double h = 200; h < 1e8; h *= 3) {
        const double l = std::log(h);
        const double taylor = 1 + (a1 - a2) / l;
        // remainder is -(a1 - a2) a2 / (l (l + a2)) <= |a1 - a2| |a2| / l^2
        CHECK(std::abs(alpha_eval({AlphaKind::III, a1, a2}, h) - taylor) <= std::abs(a1 - a2) * std::abs(a2) / (l * l));
    }
}

TEST_CASE("extract_B", "[models]")
{
    CHECK_THAT(extract_B({AlphaKind::I, 0.414, 0}), WithinAbs(1.414, 1e-15));
    CHECK(extract_B({AlphaKind::III, 0.3, 0.3}) == 1.0);
    CHECK_THAT(extract_B({AlphaKind::II, 0, -0.392}), WithinAbs(1.392, 1e-15));
    CHECK_THAT(extract_B({AlphaKind::III, 0.5, -0.2}), WithinAbs(1.7, 1e-15));
}

TEST_CASE("corrected variance", "[models]")
{
    CHECK(corrected_variance(1e9, 2500, 0) == asymptotic_variance(1e9, 2500));
    CHECK_THAT(corrected_variance(1e9, 2500, 1.414), WithinRel(66.8595, 1e-5));
    CHECK(corrected_variance(1e9, 2500, 1.414, SignConvention::plus) > asymptotic_variance(1e9, 2500));

    double prev = 0;
    for (double n : {1e9, 1e20, 1e50, 1e200}) {
        const double ratio = corrected_variance(n, 2500, 1.414) / asymptotic_variance(n, 2500);
        CHECK(ratio > prev);
        CHECK(ratio < 1);
        prev = ratio;
    }
    CHECK(prev > 0.99);
}

TEST_CASE("corrected_w times the mean equals the corrected variance", "[models][property]")
{
    for (const auto sign : {SignConvention::minus, SignConvention::plus}) {
        for (double n : {1e9, 1e11, 1e14}) {
            for (double h : {250.0, 2500.0, 5e4}) {
                for (double b : {0.0, 1.0, 1.4151}) {
                    CHECK_THAT(corrected_w(n, h, b, sign) * asymptotic_mean(n, h),
                               WithinRel(corrected_variance(n, h, b, sign), 1e-12));
                }
            }
        }
    }
}

TEST_CASE("ms_constant", "[models]")
{
    CHECK_THAT(ms_constant(), WithinAbs(1.41509273131088, 1e-13));
}

TEST_CASE("poisson_pmf", "[models]")
{
    CHECK_THAT(poisson_pmf(1, 0), WithinRel(std::exp(-1.0), 1e-15));
    CHECK_THAT(poisson_pmf(2, 2), WithinRel(2 * std::exp(-2.0), 1e-14));
    CHECK(poisson_pmf(0, 0) == 1.0);
    CHECK(poisson_pmf(0, 3) == 0.0);
    CHECK_THROWS_AS(poisson_pmf(-1, 0), InputError);

    double total = 0;
    for (unsigned k = 0; k <= 200; ++k) total += poisson_pmf(5, k);
    CHECK_THAT(total, WithinAbs(1.0, 1e-12));
}

TEST_CASE("poisson_pmf recurrence", "[models][property]")
{
    for (double lambda : {0.1, 1.0, 5.0, 37.5}) {
        for (unsigned k = 0; k < 60; ++k) {
            CHECK_THAT(poisson_pmf(lambda, k + 1) * (k + 1), WithinRel(lambda * poisson_pmf(lambda, k), 1e-12));
        }
    }
}

TEST_CASE("classify_scale", "[models]")
{
    CHECK(classify_scale(1e9, 1).scale == Scale::microscopic);
    const auto meso = classify_scale(1e9, 2500);
    CHECK(meso.scale == Scale::mesoscopic);
    CHECK_THAT(meso.ratio, WithinAbs(120.6, 0.05));
    CHECK(classify_scale(10, 1e6).scale == Scale::macroscopic);
    CHECK(classify_scale(1e9, 2500, {200, 1}).scale == Scale::microscopic);
    CHECK_THROWS_AS(classify_scale(1, 5), InputError);
}
