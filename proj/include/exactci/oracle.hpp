#ifndef EXACTCI_ORACLE_HPP
#define EXACTCI_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "exactci/acceptance.hpp"
#include "exactci/family.hpp"
#include "exactci/intervals.hpp"
#include "exactci/parallel.hpp"
#include "exactci/statistics.hpp"

namespace exactci {

/// Exact coverage probability C(theta) = sum over x with p(theta, x) >
/// alpha of pmf(theta, x), evaluated on a theta grid. Membership is the
/// p-value super-level test itself, never the interval endpoints.
struct CoverageProfile {
    Family family;
    TestKind kind = TestKind::fiducial;
    double alpha = 0.0;
    std::vector<double> theta_grid;
    std::vector<double> coverage;
    double min_coverage = 1.0;
    double argmin_theta = 0.0;
};

namespace detail {

constexpr double coverage_tail_eps = 1e-13;

/// Coverage at one theta: every x with tail mass above the truncation
/// threshold is tested for membership via the tie-inclusive acceptance-set
/// mass P_theta(T >= T(x)) > alpha. The lim-inf p-value convention is a
/// reporting rule for the p-value function at its own discontinuities and
/// is deliberately not applied here: the raw acceptance-set value is the
/// super-uniform one, and it is what the enumeration oracle computes.
inline double coverage_at(TestKind kind, const Family& family, double alpha, double theta) {
    const long long lo = family.support_min();
    const long long hi = family.has_finite_support()
                             ? family.support_max()
                             : family.upper_trunc(theta, coverage_tail_eps);
    if (kind == TestKind::fiducial) {
        const SupportTable t(TestKind::sterne, family, theta, hi);
        double cov = 0.0;
        for (long long x = lo; x <= hi; ++x) {
            const double p = std::min({2.0 * t.cdf(x), 2.0 * t.sf(x), 1.0});
            if (p > alpha) cov += t.pmf(x);
        }
        return cov;
    }
    const SupportTable table(kind, family, theta, hi);
    double cov = 0.0;
    for (long long x = lo; x <= hi; ++x)
        if (table.tails(table.cut(x)) > alpha) cov += table.pmf(x);
    return cov;
}

}  // namespace detail

inline CoverageProfile exact_coverage(TestKind kind, const Family& family, double alpha,
                                      const std::vector<double>& theta_grid, int threads = 1) {
    detail::require_alpha(alpha);
    if (theta_grid.empty()) throw std::invalid_argument("exact_coverage: empty theta grid");
    for (double t : theta_grid) family.require_theta(t);

    CoverageProfile profile{family, kind, alpha, theta_grid, {}, 1.0, theta_grid.front()};
    profile.coverage.resize(theta_grid.size());
    detail::parallel_for(static_cast<long long>(theta_grid.size()), threads, [&](long long i) {
        profile.coverage[static_cast<std::size_t>(i)] =
            detail::coverage_at(kind, family, alpha, theta_grid[static_cast<std::size_t>(i)]);
    });
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        if (profile.coverage[i] < profile.min_coverage) {
            profile.min_coverage = profile.coverage[i];
            profile.argmin_theta = theta_grid[i];
        }
    }
    return profile;
}

/// Brute-force p-value by direct enumeration of the acceptance set: sums
/// pmf over every support point whose literal statistic() is at least the
/// observed one. Shares nothing with the cut-based evaluation path beyond
/// the family itself; intended as an independent check at small supports.
inline double enumeration_pvalue(TestKind kind, const Family& family, double theta0,
                                 long long x) {
    family.require_theta(theta0);
    family.require_x(x);
    if (kind == TestKind::fiducial) {
        double lower = 0.0, upper = 0.0;
        const long long hi = family.has_finite_support()
                                 ? family.support_max()
                                 : std::max(family.upper_trunc(theta0, 1e-16), x);
        for (long long k = family.support_min(); k <= hi; ++k) {
            const double p = family.pmf(theta0, k);
            if (k <= x) lower += p;
            if (k >= x) upper += p;
        }
        return std::min({2.0 * lower, 2.0 * upper, 1.0});
    }
    const long long hi = family.has_finite_support()
                             ? family.support_max()
                             : std::max(family.upper_trunc(theta0, 1e-16), x);
    const double tx = statistic(kind, family, theta0, x);
    double acc = 0.0;
    for (long long k = family.support_min(); k <= hi; ++k)
        if (statistic(kind, family, theta0, k) >= tx) acc += family.pmf(theta0, k);
    return std::min(acc, 1.0);
}

/// Largest |pvalue - enumeration_pvalue| over a theta grid and every x of
/// a finite (or truncated) support.
inline double enumeration_max_error(TestKind kind, const Family& family,
                                    const std::vector<double>& theta_grid,
                                    long long x_max = -1) {
    long long hi;
    if (family.has_finite_support())
        hi = family.support_max();
    else if (x_max >= family.support_min())
        hi = x_max;
    else
        throw std::invalid_argument("enumeration_max_error: x_max required for unbounded support");
    double worst = 0.0;
    for (double theta : theta_grid) {
        for (long long x = family.support_min(); x <= hi; ++x) {
            const double a = pvalue(kind, family, theta, x);
            const double b = enumeration_pvalue(kind, family, theta, x);
            worst = std::max(worst, std::fabs(a - b));
        }
    }
    return worst;
}

/// Maximal alpha windows over which neither interval bound moved by more
/// than the flatness tolerance between consecutive grid points: the
/// empirically flat-both-bounds stretches that witness the lack of strict
/// nestedness.
struct FlatWindow {
    double alpha_lo = 0.0;
    double alpha_hi = 0.0;
};

inline std::vector<FlatWindow> nestedness_scan(TestKind kind, const Family& family,
                                               long long x,
                                               const std::vector<double>& alpha_grid) {
    if (alpha_grid.size() < 2)
        throw std::invalid_argument("nestedness_scan: need at least 2 alpha grid points");
    const std::vector<BoundsCurvePoint> curve = bounds_curve(kind, family, x, alpha_grid);
    std::vector<FlatWindow> out;
    std::size_t run_start = 0;
    bool in_run = false;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const bool flat = curve[i].flat_lower && curve[i].flat_upper;
        if (flat && !in_run) {
            in_run = true;
            run_start = i - 1;
        } else if (!flat && in_run) {
            in_run = false;
            out.push_back({curve[run_start].alpha, curve[i - 1].alpha});
        }
    }
    if (in_run) out.push_back({curve[run_start].alpha, curve.back().alpha});
    return out;
}

/// One perturbation verdict of the Bolshev minimality probe.
struct MinimalityVerdict {
    long long x = 0;
    char side = 'L';                      // which fiducial bound was perturbed
    bool inward_breaks_coverage = false;  // shrinking the bound must break one-sided coverage
    bool outward_keeps_coverage = false;  // enlarging it must not
    double worst_coverage = 1.0;          // one-sided coverage minimum after the inward move
    double worst_theta = 0.0;
};

struct MinimalityReport {
    Family family;
    double alpha = 0.0;
    double delta = 0.0;
    bool bounds_monotone = false;  // fiducial bounds monotone in x
    std::vector<MinimalityVerdict> verdicts;

    bool all_pass() const {
        if (!bounds_monotone) return false;
        for (const auto& v : verdicts)
            if (!v.inward_breaks_coverage || !v.outward_keeps_coverage) return false;
        return true;
    }
};

namespace detail {

// Worst one-sided coverage of a family of bounds over a theta grid:
// inf_theta P_theta(bound(X) <= theta) for lower bounds, mirrored for
// upper. x outside xs falls back to its unperturbed fiducial bound.
inline std::pair<double, double> one_sided_coverage_min(
    const Family& family, double alpha, const std::vector<long long>& xs,
    const std::vector<double>& bounds, bool lower_side,
    const std::vector<double>& theta_grid) {
    double worst = 2.0, worst_theta = theta_grid.front();
    for (double theta : theta_grid) {
        const long long hi = family.has_finite_support()
                                 ? family.support_max()
                                 : family.upper_trunc(theta, coverage_tail_eps);
        double cov = 0.0;
        for (long long x = family.support_min(); x <= hi; ++x) {
            double b;
            const auto it = std::lower_bound(xs.begin(), xs.end(), x);
            if (it != xs.end() && *it == x) {
                b = bounds[static_cast<std::size_t>(it - xs.begin())];
            } else {
                const ExactInterval iv = fiducial_interval(family, x, alpha);
                b = lower_side ? iv.lower : iv.upper;
            }
            if (lower_side ? b <= theta : b >= theta) cov += family.pmf(theta, x);
        }
        if (cov < worst) {
            worst = cov;
            worst_theta = theta;
        }
    }
    return {worst, worst_theta};
}

}  // namespace detail

/// Empirical Bolshev probe: shrinking any single fiducial bound inward by
/// delta must push the one-sided coverage below 1 - alpha/2 somewhere on
/// the grid, while enlarging it outward must not; the fiducial bounds must
/// also be monotone in x.
inline MinimalityReport minimality_probe(const Family& family, double alpha,
                                         const std::vector<long long>& x_set, double delta,
                                         const std::vector<double>& theta_grid,
                                         int threads = 1) {
    detail::require_alpha(alpha);
    if (!(delta > 0.0)) throw std::invalid_argument("minimality_probe: delta must be > 0");
    if (x_set.empty() || theta_grid.empty())
        throw std::invalid_argument("minimality_probe: empty x set or theta grid");
    std::vector<long long> xs = x_set;
    std::sort(xs.begin(), xs.end());
    for (double t : theta_grid) family.require_theta(t);

    std::vector<double> lower(xs.size()), upper(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const ExactInterval iv = fiducial_interval(family, xs[i], alpha);
        lower[i] = iv.lower;
        upper[i] = iv.upper;
    }

    MinimalityReport report{family, alpha, delta, true, {}};
    const int dir = family.orientation();
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (dir > 0 && (lower[i] < lower[i - 1] || upper[i] < upper[i - 1]))
            report.bounds_monotone = false;
        if (dir < 0 && (lower[i] > lower[i - 1] || upper[i] > upper[i - 1]))
            report.bounds_monotone = false;
    }

    const double target = 1.0 - 0.5 * alpha;
    const double slack = 1e-9;

    report.verdicts.resize(2 * xs.size());
    detail::parallel_for(static_cast<long long>(2 * xs.size()), threads, [&](long long j) {
        const std::size_t i = static_cast<std::size_t>(j / 2);
        const bool lower_side = (j % 2) == 0;
        MinimalityVerdict v;
        v.x = xs[i];
        v.side = lower_side ? 'L' : 'U';

        const auto eval = [&](double perturbed) {
            std::vector<double> b = lower_side ? lower : upper;
            b[i] = perturbed;
            return detail::one_sided_coverage_min(family, alpha, xs, b, lower_side,
                                                  theta_grid);
        };
        const double inward = lower_side ? lower[i] + delta : upper[i] - delta;
        const auto [cov_in, theta_in] = eval(inward);
        v.worst_coverage = cov_in;
        v.worst_theta = theta_in;
        v.inward_breaks_coverage = cov_in < target - slack;
        const double outward = lower_side ? lower[i] - delta : upper[i] + delta;
        const auto [cov_out, theta_out] = eval(outward);
        (void)theta_out;
        v.outward_keeps_coverage = cov_out >= target - slack;
        report.verdicts[static_cast<std::size_t>(j)] = v;
    });
    return report;
}

}  // namespace exactci

#endif  // EXACTCI_ORACLE_HPP
