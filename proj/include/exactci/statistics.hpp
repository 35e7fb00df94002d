#ifndef EXACTCI_STATISTICS_HPP
#define EXACTCI_STATISTICS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "exactci/family.hpp"

namespace exactci {

enum class TestKind { fiducial, sterne, blaker, likelihood_ratio, score };

inline const char* to_string(TestKind kind) {
    switch (kind) {
        case TestKind::fiducial: return "fiducial";
        case TestKind::sterne: return "sterne";
        case TestKind::blaker: return "blaker";
        case TestKind::likelihood_ratio: return "lr";
        case TestKind::score: return "score";
    }
    return "?";
}

inline TestKind parse_test_kind(const std::string& s) {
    if (s == "fiducial") return TestKind::fiducial;
    if (s == "sterne") return TestKind::sterne;
    if (s == "blaker") return TestKind::blaker;
    if (s == "lr" || s == "likelihood-ratio" || s == "likelihood_ratio")
        return TestKind::likelihood_ratio;
    if (s == "score") return TestKind::score;
    throw std::invalid_argument("unknown test kind: " + s);
}

/// p-value of the two-sided test obtained by inverting the fiducial
/// (Clopper-Pearson / Garwood) interval: twice the smaller tail, capped at 1.
/// Continuous in theta0.
inline double fiducial_pvalue(const Family& family, double theta0, long long x) {
    family.require_theta(theta0);
    family.require_x(x);
    const double lower = family.cdf(theta0, x);
    const double upper = family.sf(theta0, x);
    return std::min({2.0 * lower, 2.0 * upper, 1.0});
}

namespace detail {

/// Score function U(theta, x) = d/dtheta log L in the family's common
/// parameterization.
inline double score_u(const Family& family, double theta, long long x) {
    const double xd = static_cast<double>(x);
    switch (family.kind()) {
        case FamilyKind::binomial:
            return xd / theta -
                   (static_cast<double>(family.trials()) - xd) / (1.0 - theta);
        case FamilyKind::poisson: return (xd - theta) / theta;
        default:
            return static_cast<double>(family.successes()) / theta -
                   (xd - static_cast<double>(family.successes())) / (1.0 - theta);
    }
}

inline double fisher_info(const Family& family, double theta) {
    switch (family.kind()) {
        case FamilyKind::binomial:
            return static_cast<double>(family.trials()) / (theta * (1.0 - theta));
        case FamilyKind::poisson: return 1.0 / theta;
        default:
            return static_cast<double>(family.successes()) / (theta * theta * (1.0 - theta));
    }
}

inline double score_statistic(const Family& family, double theta, long long x) {
    const double u = score_u(family, theta, x);
    return u * u / fisher_info(family, theta);
}

/// The smaller of the two tails at x; the Blaker statistic is its
/// reciprocal. Computed with S(x) = x.
inline double blaker_min_tail(const Family& family, double theta, long long x) {
    return std::min(family.cdf(theta, x), family.sf(theta, x));
}

/// Monotone stand-in for the test statistic, used for all acceptance-set
/// comparisons: log scale for Sterne/Blaker/LR so that deep-tail values
/// stay ordered instead of overflowing. Larger means more extreme.
inline double statistic_score(TestKind kind, const Family& family, double theta,
                              long long x) {
    switch (kind) {
        case TestKind::sterne: return -family.log_pmf_unchecked(theta, x);
        case TestKind::blaker: return -std::log(blaker_min_tail(family, theta, x));
        case TestKind::likelihood_ratio:
            return family.max_log_lik(x) - family.log_pmf_unchecked(theta, x);
        case TestKind::score: return score_statistic(family, theta, x);
        default:
            throw std::invalid_argument("statistic_score: fiducial test has no statistic");
    }
}

}  // namespace detail

/// The literal test statistic T(theta0, x) of a strictly two-sided test:
/// Sterne 1/pmf, Blaker 1/min-tail, likelihood ratio sup L / L(theta0),
/// score U^2/I. Always >= 0; the likelihood ratio handles boundary MLEs
/// through the limiting likelihood value of 1.
inline double statistic(TestKind kind, const Family& family, double theta0, long long x) {
    family.require_theta(theta0);
    family.require_x(x);
    switch (kind) {
        case TestKind::sterne: return 1.0 / family.pmf(theta0, x);
        case TestKind::blaker:
            return 1.0 / detail::blaker_min_tail(family, theta0, x);
        case TestKind::likelihood_ratio:
            return std::exp(family.max_log_lik(x) - family.log_pmf_unchecked(theta0, x));
        case TestKind::score: return detail::score_statistic(family, theta0, x);
        default:
            throw std::invalid_argument("statistic: the fiducial test has no statistic");
    }
}

}  // namespace exactci

#endif  // EXACTCI_STATISTICS_HPP
