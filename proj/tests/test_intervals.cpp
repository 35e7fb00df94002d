#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "exactci/diagnostics.hpp"
#include "exactci/grid.hpp"
#include "exactci/intervals.hpp"
#include "exactci/oracle.hpp"
#include "oracles.hpp"

using namespace exactci;
using Catch::Approx;

namespace {
const TestKind strict_kinds[] = {TestKind::sterne, TestKind::blaker,
                                 TestKind::likelihood_ratio, TestKind::score};
}

TEST_CASE("fiducial interval closed forms and residuals") {
    const Family bin20 = Family::binomial(20);
    SECTION("x = 0 lower bound pinned, closed-form upper") {
        const ExactInterval iv = fiducial_interval(bin20, 0, 0.05);
        CHECK(iv.lower == 0.0);
        CHECK(iv.upper == Approx(1.0 - std::pow(0.025, 1.0 / 20)).margin(1e-10));
        REQUIRE(iv.tail_split.has_value());
        CHECK(iv.tail_split->first == 0.025);
    }
    SECTION("x = n upper bound pinned, closed-form lower") {
        const ExactInterval iv = fiducial_interval(bin20, 20, 0.1);
        CHECK(iv.upper == 1.0);
        CHECK(iv.lower == Approx(std::pow(0.05, 1.0 / 20)).margin(1e-10));
    }
    SECTION("Poisson tail-equation residuals") {
        const Family poi = Family::poisson();
        const ExactInterval iv = fiducial_interval(poi, 2, 0.05);
        CHECK(std::fabs(poi.sf(iv.lower, 2) - 0.025) < 1e-10);
        CHECK(std::fabs(poi.cdf(iv.upper, 2) - 0.025) < 1e-10);
        CHECK(iv.lower < iv.upper);
    }
    SECTION("negative binomial boundary cases") {
        const Family nb5 = Family::neg_binomial(5);
        const ExactInterval iv = fiducial_interval(nb5, 5, 0.1);
        CHECK(iv.upper == 1.0);
        CHECK(iv.lower == Approx(std::pow(0.05, 0.2)).margin(1e-10));
        const ExactInterval iv9 = fiducial_interval(nb5, 9, 0.1);
        CHECK(std::fabs(nb5.cdf(iv9.lower, 9) - 0.05) < 1e-10);
        CHECK(std::fabs(nb5.sf(iv9.upper, 9) - 0.05) < 1e-10);
    }
    SECTION("MLE containment") {
        for (long long x = 1; x <= 19; ++x) {
            const ExactInterval iv = fiducial_interval(bin20, x, 0.05);
            CHECK(iv.contains(bin20.mle(x)));
        }
    }
    CHECK_THROWS_AS(fiducial_interval(bin20, 3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fiducial_interval(bin20, 3, 1.0), std::invalid_argument);
}

TEST_CASE("inverted intervals reproduce the negative binomial example") {
    const Family nb19 = Family::neg_binomial(19);
    const ExactInterval a = inverted_interval(TestKind::blaker, nb19, 38, 0.10);
    CHECK(a.lower == Approx(0.35992).margin(1e-4));
    CHECK(a.upper == Approx(0.62279).margin(1e-4));

    const Family nb20 = Family::neg_binomial(20);
    const ExactInterval b = inverted_interval(TestKind::blaker, nb20, 40, 0.10);
    CHECK(b.lower == Approx(0.36202).margin(1e-4));
    CHECK(b.upper == Approx(0.62689).margin(1e-4));

    CHECK(a.width() == Approx(0.263).margin(1e-3));
    CHECK(b.width() == Approx(0.265).margin(1e-3));
    CHECK(b.width() > a.width());  // more data, wider interval
}

TEST_CASE("interval membership matches the p-value super-level set") {
    const Family bin12 = Family::binomial(12);
    for (TestKind kind : strict_kinds) {
        for (long long x : {0LL, 3LL, 7LL, 12LL}) {
            const ExactInterval iv = inverted_interval(kind, bin12, x, 0.1);
            CHECK(iv.lower <= iv.upper);
            if (bin12.contains_theta(bin12.mle(x))) CHECK(iv.contains(bin12.mle(x)));
            // outside the hull the p-value stays at or below alpha
            for (double theta : oracles::tie_free_grid(0.01, 0.99, 60)) {
                const double p = pvalue(kind, bin12, theta, x);
                if (p > 0.1 + 1e-12) {
                    CHECK(theta >= iv.lower - 1e-9);
                    CHECK(theta <= iv.upper + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("interval shrinks to the plateau as alpha approaches 1") {
    const Family bin20 = Family::binomial(20);
    for (TestKind kind : strict_kinds) {
        const ExactInterval iv = inverted_interval(kind, bin20, 10, 0.995);
        CHECK(iv.contains(0.5));
        CHECK(iv.width() < 0.35);
    }
}

TEST_CASE("bounds curve") {
    const Family bin20 = Family::binomial(20);
    std::vector<double> alphas;
    for (int i = 0; i < 60; ++i) alphas.push_back(0.01 + (0.6 - 0.01) * i / 59.0);

    SECTION("fiducial bounds strictly monotone in alpha") {
        for (long long x : {0LL, 4LL, 10LL, 20LL}) {
            const auto curve = bounds_curve(TestKind::fiducial, bin20, x, alphas);
            for (std::size_t i = 1; i < curve.size(); ++i) {
                if (x > 0) CHECK(curve[i].lower > curve[i - 1].lower);
                if (x < 20) CHECK(curve[i].upper < curve[i - 1].upper);
            }
        }
    }

    SECTION("Blaker has a flat segment; Sterne Poisson x=9 a flat-both window") {
        std::vector<double> fine;
        for (int i = 0; i < 400; ++i) fine.push_back(0.005 + (0.5 - 0.005) * i / 399.0);
        const auto curve = bounds_curve(TestKind::blaker, bin20, 4, fine);
        bool any_flat = false;
        for (const auto& p : curve) any_flat = any_flat || p.flat_lower || p.flat_upper;
        CHECK(any_flat);

        const auto sp = bounds_curve(TestKind::sterne, Family::poisson(), 9, fine);
        bool both_flat = false;
        for (const auto& p : sp) both_flat = both_flat || (p.flat_lower && p.flat_upper);
        CHECK(both_flat);
    }

    SECTION("nestedness is never violated (non-strict)") {
        for (TestKind kind : strict_kinds) {
            const auto curve = bounds_curve(kind, bin20, 6, alphas);
            for (std::size_t i = 1; i < curve.size(); ++i) {
                CHECK(curve[i].lower >= curve[i - 1].lower - 1e-11);
                CHECK(curve[i].upper <= curve[i - 1].upper + 1e-11);
            }
        }
    }

    CHECK_THROWS_AS(bounds_curve(TestKind::blaker, bin20, 4, std::vector<double>{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(bounds_curve(TestKind::blaker, bin20, 4, std::vector<double>{0.2, 0.1}),
                    std::invalid_argument);
}

TEST_CASE("Blaker interval contained in the fiducial interval") {
    for (long long n : {5LL, 20LL}) {
        const Family bin = Family::binomial(n);
        for (double alpha : {0.01, 0.05, 0.1}) {
            for (long long x = 0; x <= n; ++x) {
                const ExactInterval blaker = inverted_interval(TestKind::blaker, bin, x, alpha);
                const ExactInterval cp = fiducial_interval(bin, x, alpha);
                CHECK(blaker.lower >= cp.lower - 1e-9);
                CHECK(blaker.upper <= cp.upper + 1e-9);
            }
        }
    }
}

TEST_CASE("bounds agree with a dense p-value scan") {
    // brute-force oracle: first/last theta of {p > alpha} on a fine grid
    const auto scan_bounds = [](TestKind kind, const Family& f, long long x, double alpha,
                                double lo, double hi, int n) {
        double first = std::numeric_limits<double>::quiet_NaN(), last = first;
        for (int i = 0; i <= n; ++i) {
            const double t = lo + (hi - lo) * i / static_cast<double>(n);
            const detail::SupportTable table(kind, f, t, x);
            if (table.tails(table.cut(x)) > alpha) {
                if (std::isnan(first)) first = t;
                last = t;
            }
        }
        return std::pair<double, double>{first, last};
    };

    const Family bin10 = Family::binomial(10);
    for (TestKind kind : strict_kinds) {
        for (double alpha : {0.05, 0.2}) {
            for (long long x : {1LL, 4LL, 9LL}) {
                const ExactInterval iv = inverted_interval(kind, bin10, x, alpha);
                const auto [lo, hi] = scan_bounds(kind, bin10, x, alpha, 1e-4, 1 - 1e-4, 20000);
                const double step = 1.0 / 20000;
                CHECK(iv.lower == Approx(lo).margin(1.5 * step));
                CHECK(iv.upper == Approx(hi).margin(1.5 * step));
            }
        }
    }
    const Family poi = Family::poisson();
    const ExactInterval iv = inverted_interval(TestKind::sterne, poi, 4, 0.1);
    const auto [lo, hi] = scan_bounds(TestKind::sterne, poi, 4, 0.1, 0.05, 25.0, 20000);
    const double step = 25.0 / 20000;
    CHECK(iv.lower == Approx(lo).margin(1.5 * step));
    CHECK(iv.upper == Approx(hi).margin(1.5 * step));
}

TEST_CASE("bounds curve matches per-alpha interval inversion") {
    const Family bin9 = Family::binomial(9);
    const std::vector<double> alphas{0.02, 0.05, 0.11, 0.23, 0.4};
    for (TestKind kind : strict_kinds) {
        const auto curve = bounds_curve(kind, bin9, 3, alphas);
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            const ExactInterval iv = inverted_interval(kind, bin9, 3, alphas[i]);
            CHECK(curve[i].lower == Approx(iv.lower).margin(1e-10));
            CHECK(curve[i].upper == Approx(iv.upper).margin(1e-10));
        }
    }
}

TEST_CASE("kind dispatch guards") {
    const Family bin = Family::binomial(6);
    CHECK_THROWS_AS(inverted_interval(TestKind::fiducial, bin, 3, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(acceptance_cut(TestKind::fiducial, bin, 0.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(nestedness_thresholds(TestKind::fiducial, bin), std::invalid_argument);
}

TEST_CASE("grid spec parsing") {
    const exactci::GridSpec g = exactci::GridSpec::parse("0.1:0.9:5");
    CHECK(g.count == 5);
    const auto pts = g.points();
    CHECK(pts.front() == 0.1);
    CHECK(pts.back() == 0.9);
    CHECK(pts[2] == Catch::Approx(0.5));
    CHECK_THROWS_AS(exactci::GridSpec::parse("0.1:0.9"), std::invalid_argument);
    CHECK_THROWS_AS(exactci::GridSpec::parse("a:b:5"), std::invalid_argument);
    CHECK_THROWS_AS(exactci::GridSpec::parse("0.9:0.1:5"), std::invalid_argument);
    // boundary endpoints get pulled inside the parameter space
    const auto tp = exactci::GridSpec::parse("0:1:11").theta_points(Family::binomial(4));
    CHECK(tp.front() > 0.0);
    CHECK(tp.back() < 1.0);
}

TEST_CASE("large n stays exact and fast") {
    // tables truncate to the slice carrying mass, so n = 10^4 is routine
    const Family big = Family::binomial(10000);
    const double p = pvalue(TestKind::blaker, big, 0.004, 37);
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    CHECK(p == Approx(enumeration_pvalue(TestKind::blaker, big, 0.004, 37)).margin(1e-12));

    const ExactInterval cp = fiducial_interval(big, 37, 0.05);
    CHECK(std::fabs(big.sf(cp.lower, 37) - 0.025) < 1e-9);
    CHECK(std::fabs(big.cdf(cp.upper, 37) - 0.025) < 1e-9);

    const ExactInterval bl = inverted_interval(TestKind::blaker, big, 37, 0.05);
    CHECK(bl.lower >= cp.lower - 1e-9);
    CHECK(bl.upper <= cp.upper + 1e-9);
    CHECK(bl.contains(big.mle(37)));
}

TEST_CASE("exact coverage on a reduced grid") {
    const Family bin5 = Family::binomial(5);
    std::vector<double> grid;
    for (int i = 1; i <= 401; ++i) grid.push_back(i / 402.0);
    for (TestKind kind : {TestKind::fiducial, TestKind::sterne, TestKind::blaker,
                          TestKind::likelihood_ratio, TestKind::score}) {
        const CoverageProfile prof = exact_coverage(kind, bin5, 0.05, grid);
        CHECK(prof.min_coverage >= 0.95);
    }
}
