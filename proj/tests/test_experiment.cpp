#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "primestat/experiment.hpp"

using namespace primestat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CountVector make_counts(std::vector<std::uint32_t> counts, std::uint64_t n = 1'000'000, std::uint64_t h = 10)
{
    const std::uint64_t m = counts.size();
    return {{n, h, m}, std::move(counts)};
}

}  // namespace

TEST_CASE("moments of hand-computed samples", "[experiment]")
{
    const auto flat = moments(make_counts({1, 1, 1, 1}));
    CHECK(flat.mean == 1.0);
    CHECK(flat.variance == 0.0);
    CHECK(flat.w == 0.0);
    CHECK(flat.w_err == 0.0);

    const auto two = moments(make_counts({0, 1}));
    CHECK(two.mean == 0.5);
    CHECK(two.variance == 0.5);
    CHECK(two.w == 1.0);

    const auto pop = moments(make_counts({2, 4, 6}), VarianceDivisor::population);
    CHECK_THAT(pop.variance, WithinRel(8.0 / 3, 1e-15));
    CHECK_THAT(pop.w, WithinRel(2.0 / 3, 1e-15));
    CHECK_THAT(pop.mean_square, WithinRel(56.0 / 3, 1e-15));
}

TEST_CASE("moments rejects undefined statistics", "[experiment]")
{
    CHECK_THROWS_AS(moments(make_counts({0, 0, 0})), UndefinedStatistic);
    CHECK_THROWS_AS(moments(make_counts({3})), InputError);
    CountVector wrong = make_counts({1, 2, 3});
    wrong.spec.m = 4;
    CHECK_THROWS_AS(moments(wrong), InputError);
}

TEST_CASE("moments is permutation invariant", "[experiment][property]")
{
    std::mt19937_64 rng(5);
    std::poisson_distribution<std::uint32_t> dist(40.0);
    std::vector<std::uint32_t> counts(5000);
    for (auto& c : counts) c = dist(rng);
    const auto ref = moments(make_counts(counts, 1'000'000'000, 1000));
    for (int i = 0; i < 5; ++i) {
        std::shuffle(counts.begin(), counts.end(), rng);
        const auto s = moments(make_counts(counts, 1'000'000'000, 1000));
        CHECK(s.mean == ref.mean);
        CHECK(s.variance == ref.variance);
        CHECK(s.w == ref.w);
        CHECK(s.w_err == ref.w_err);
    }
}

TEST_CASE("h = 1 gives <p^2> = <p> and w = 1 - <p> bit-exactly", "[experiment][property]")
{
    const IntervalSpec spec{1'000'000'000ULL, 1, 20'000};
    const auto counts = subinterval_counts(spec);
    const auto pop = moments(counts, VarianceDivisor::population);
    CHECK(pop.mean_square == pop.mean);
    CHECK(pop.w == 1 - pop.mean);

    const auto sample = moments(counts, VarianceDivisor::sample);
    const double m = static_cast<double>(spec.m);
    CHECK_THAT(sample.w, WithinRel((1 - sample.mean) * m / (m - 1), 1e-15));
}

TEST_CASE("sample and population divisors differ by m/(m-1)", "[experiment]")
{
    const auto c = make_counts({3, 7, 1, 9, 4, 4, 6});
    const auto s = moments(c, VarianceDivisor::sample);
    const auto p = moments(c, VarianceDivisor::population);
    CHECK_THAT(s.variance, WithinRel(p.variance * 7 / 6, 1e-14));
    CHECK_THAT(s.w, WithinRel(s.variance / s.mean, 1e-14));
}

TEST_CASE("systematic error formulas", "[experiment]")
{
    const IntervalSpec spec{10'000'000'000ULL, 1'000, 100'000};
    // independent evaluations of both closed forms
    CHECK_THAT(systematic_error_mean_first_order(spec), WithinRel(0.0188612, 1e-5));
    CHECK_THAT(systematic_error_mean_exact(spec), WithinRel(0.0188613, 1e-5));
    CHECK_THAT(systematic_error_mean_exact(spec), WithinRel(systematic_error_mean_first_order(spec), 0.01));
    CHECK_THAT(relative_systematic_error(spec), WithinRel(4.3429e-4, 1e-4));
    CHECK_THAT(relative_statistical_error(spec), WithinRel(0.126957, 1e-5));
    CHECK_THAT(systematic_error_variance(spec), WithinRel(0.00754447, 1e-5));
    CHECK_THAT(systematic_error_variance_exact(spec), WithinRel(0.00754453, 1e-5));
}

TEST_CASE("systematic errors vanish in degenerate limits", "[experiment]")
{
    const IntervalSpec zero_m{10'000'000'000ULL, 1'000, 0};
    CHECK(systematic_error_mean_first_order(zero_m) == 0.0);
    CHECK(systematic_error_mean_exact(zero_m) == 0.0);
    CHECK(relative_systematic_error(zero_m) == 0.0);
    CHECK(systematic_error_variance(zero_m) == 0.0);
    CHECK(systematic_error_variance_exact(zero_m) == 0.0);
    CHECK_THROWS_AS(systematic_error_mean_exact(IntervalSpec(2, 1, 1)), InputError);
}

TEST_CASE("error formulas are positive for valid specs", "[experiment][property]")
{
    for (std::uint64_t n : {100'000'000ULL, 1'000'000'000ULL, 100'000'000'000ULL}) {
        for (std::uint64_t h : {10ULL, 1'000ULL, 50'000ULL}) {
            const IntervalSpec spec{n, h, 1'000};
            CHECK(systematic_error_mean_exact(spec) > 0);
            CHECK(systematic_error_mean_first_order(spec) > 0);
            CHECK(relative_systematic_error(spec) > 0);
            CHECK(relative_statistical_error(spec) > 0);
            // signed: the asymptotic variance decreases in N only while h < sqrt(N)
            CHECK(systematic_error_variance_exact(spec) != 0);
            CHECK((systematic_error_variance_exact(spec) > 0) == (systematic_error_variance(spec) > 0));
        }
    }
}

TEST_CASE("exact and first-order systematic errors converge as N grows", "[experiment][property]")
{
    double previous = 1e300;
    for (std::uint64_t n : {100'000'000ULL, 10'000'000'000ULL, 1'000'000'000'000ULL}) {
        const IntervalSpec spec{n, 1'000, 10'000};
        const double exact = systematic_error_mean_exact(spec);
        const double first = systematic_error_mean_first_order(spec);
        const double rel = std::abs(exact - first) / exact;
        CHECK(rel < previous);
        previous = rel;
    }
}

TEST_CASE("delta-method w error", "[experiment]")
{
    MomentSummary s;
    s.mean = 120.655;
    s.variance = 67.380;
    s.w = s.variance / s.mean;
    const IntervalSpec spec{1'000'000'000ULL, 2'500, 100'000};
    CHECK_THAT(w_standard_error(s, spec), WithinRel(0.0025004, 1e-3));
    s.mean = 0;
    CHECK_THROWS_AS(w_standard_error(s, spec), UndefinedStatistic);
}

TEST_CASE("bootstrap cross-checks the delta method on Gaussian-like counts", "[experiment]")
{
    const auto counts = subinterval_counts({1'000'000'000ULL, 500, 4'000});
    const auto s = moments(counts);
    const double boot = w_bootstrap_error(counts, 400, 1);
    CHECK_THAT(boot, WithinRel(s.w_err, 0.2));
    CHECK(w_bootstrap_error(counts, 400, 1) == boot);
}

TEST_CASE("run_point composes the stages", "[experiment]")
{
    const IntervalSpec spec{100'000'000ULL, 250, 2'000};
    const auto r = run_point(spec);
    CHECK(r.point.N == spec.N);
    CHECK(r.point.x == 1 / std::log(1e8));
    CHECK(r.point.w == r.summary.w);
    CHECK(r.point.w_err == r.summary.w_err);
    CHECK_THAT(r.summary.mean, WithinRel(250 / std::log(1e8), 0.02));
}

TEST_CASE("sweep preserves order and flags undefined points", "[experiment]")
{
    const std::vector<std::uint64_t> grid{1'000'000, 10'000'000, 100'000'000};
    std::size_t calls = 0;
    auto source = [&](const IntervalSpec& spec) {
        ++calls;
        if (spec.N == 10'000'000) return CountVector{spec, std::vector<std::uint32_t>(spec.m, 0)};
        return subinterval_counts(spec);
    };
    const auto entries = sweep(100, 50, grid, {}, source);
    REQUIRE(entries.size() == 3);
    CHECK(calls == 3);
    CHECK(entries[0].N == grid[0]);
    CHECK(entries[1].N == grid[1]);
    CHECK(entries[2].N == grid[2]);
    CHECK(entries[0].result.has_value());
    CHECK_FALSE(entries[1].result.has_value());
    CHECK_FALSE(entries[1].excluded_reason.empty());
    const auto pts = fit_points(entries);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].N == grid[2]);

    CHECK_THROWS_AS(sweep(100, 50, {10, 1'000'000}), InputError);
}
