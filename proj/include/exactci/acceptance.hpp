#ifndef EXACTCI_ACCEPTANCE_HPP
#define EXACTCI_ACCEPTANCE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "exactci/family.hpp"
#include "exactci/statistics.hpp"

namespace exactci {

/// Two-tail cut of the acceptance set A = {k >= k1} union {k <= k2}.
/// x_theta is the support point minimizing the statistic. Whole-support
/// acceptance (p-value 1) is normalized to k1 = x_theta, k2 = x_theta - 1.
/// k1 == no_upper means the upper accepted tail lies beyond the truncated
/// support (its mass is below the truncation threshold); a k2 below the
/// support minimum means the lower accepted tail is empty.
struct AcceptanceCut {
    static constexpr long long no_upper = std::numeric_limits<long long>::max();

    long long k1 = no_upper;
    long long k2 = 0;
    long long x_theta = 0;

    bool whole_support() const { return k1 != no_upper && k2 >= k1 - 1; }

    friend bool operator==(const AcceptanceCut& a, const AcceptanceCut& b) {
        return a.k1 == b.k1 && a.k2 == b.k2;
    }
    friend bool operator!=(const AcceptanceCut& a, const AcceptanceCut& b) {
        return !(a == b);
    }
};

namespace detail {

constexpr double table_tail_eps = 1e-15;
constexpr long long table_size_cap = 50'000'000;

/// Dense evaluation of one family at one theta over the (truncated)
/// support: pmf, ascending prefix sums, descending suffix sums, and O(1)
/// statistic scores on top of them. This is the engine behind every
/// acceptance-set computation, so that cut searches are binary searches
/// over precomputed arrays rather than repeated tail summations.
class SupportTable {
  public:
    SupportTable(TestKind kind, const Family& family, double theta, long long ensure_x)
        : kind_(kind), family_(family), theta_(theta), lo_(family.support_min()) {
        hi_ = std::max(family.upper_trunc(theta, table_tail_eps), ensure_x);
        if (hi_ - lo_ + 1 > table_size_cap)
            throw std::invalid_argument(family.name() +
                                        ": support too large for exact evaluation at theta=" +
                                        std::to_string(theta));
        const std::size_t n = static_cast<std::size_t>(hi_ - lo_ + 1);
        logp_.resize(n);
        pmf_.resize(n);
        cdf_.resize(n);
        sf_.resize(n);
        // Evaluated through the same log_pmf as the family API, so that
        // exact statistic ties (symmetric binomial points, for instance)
        // break identically in the cut machinery and in statistic().
        for (std::size_t i = 0; i < n; ++i) {
            logp_[i] = family.log_pmf_unchecked(theta, lo_ + static_cast<long long>(i));
            pmf_[i] = std::exp(logp_[i]);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) cdf_[i] = (acc += pmf_[i]);
        acc = 0.0;
        for (std::size_t i = n; i-- > 0;) sf_[i] = (acc += pmf_[i]);
        if (kind == TestKind::likelihood_ratio) {
            mll_.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                mll_[i] = family.max_log_lik(lo_ + static_cast<long long>(i));
        }
    }

    double theta() const { return theta_; }
    long long lo() const { return lo_; }
    long long hi() const { return hi_; }

    double pmf(long long k) const { return pmf_[idx(k)]; }
    double cdf(long long k) const {
        if (k < lo_) return 0.0;
        return k >= hi_ ? 1.0 : cdf_[idx(k)];
    }
    double sf(long long k) const {
        if (k <= lo_) return 1.0;
        return k > hi_ ? 0.0 : sf_[idx(k)];
    }

    /// Comparison score of the statistic at support point k (larger = more
    /// extreme); consistent with detail::statistic_score up to rounding.
    double score(long long k) const {
        const std::size_t i = idx(k);
        switch (kind_) {
            case TestKind::sterne: return -logp_[i];
            case TestKind::blaker: return -std::log(std::min(cdf_[i], sf_[i]));
            case TestKind::likelihood_ratio: return mll_[i] - logp_[i];
            default: return score_statistic(family_, theta_, k);
        }
    }

    /// Support point whose MLE is closest to theta; starting point for the
    /// unimodal walk to x_theta.
    long long anchor() const {
        double a;
        switch (family_.kind()) {
            case FamilyKind::binomial:
                a = static_cast<double>(family_.trials()) * theta_;
                break;
            case FamilyKind::poisson: a = theta_; break;
            default: a = static_cast<double>(family_.successes()) / theta_; break;
        }
        const long long k = static_cast<long long>(std::llround(std::min(
            a, static_cast<double>(hi_))));
        return std::clamp(k, lo_, hi_);
    }

    long long find_x_theta() const {
        long long k = anchor();
        while (k > lo_ && score(k - 1) < score(k)) --k;
        while (k < hi_ && score(k + 1) < score(k)) ++k;
        return k;
    }

    /// Acceptance cut for observed x: outward binary searches from x_theta,
    /// with ties (equal statistic values) included per the >= comparison.
    AcceptanceCut cut(long long x) const {
        const long long xt = find_x_theta();
        const double sx = score(x);
        AcceptanceCut cut;
        cut.x_theta = xt;
        if (score(xt) >= sx) {  // x is itself a minimizer: everything accepted
            cut.k1 = xt;
            cut.k2 = xt - 1;
            return cut;
        }
        // first k in [xt, hi] with score >= sx (score is non-decreasing there)
        if (score(hi_) >= sx) {
            long long a = xt, b = hi_;
            while (a < b) {
                const long long mid = a + (b - a) / 2;
                if (score(mid) >= sx)
                    b = mid;
                else
                    a = mid + 1;
            }
            cut.k1 = a;
        } else {
            cut.k1 = AcceptanceCut::no_upper;
        }
        // last k in [lo, xt] with score >= sx (score is non-increasing there)
        if (score(lo_) >= sx) {
            long long a = lo_, b = xt;
            while (a < b) {
                const long long mid = a + (b - a + 1) / 2;
                if (score(mid) >= sx)
                    a = mid;
                else
                    b = mid - 1;
            }
            cut.k2 = a;
        } else {
            cut.k2 = lo_ - 1;
        }
        return cut;
    }

    /// P(X in A) for a given cut, from the table's tail sums.
    double tails(const AcceptanceCut& cut) const {
        if (cut.whole_support()) return 1.0;
        const double up = cut.k1 == AcceptanceCut::no_upper ? 0.0 : sf(cut.k1);
        const double down = cdf(cut.k2);
        return std::min(up + down, 1.0);
    }

  private:
    std::size_t idx(long long k) const { return static_cast<std::size_t>(k - lo_); }

    TestKind kind_;
    Family family_;
    double theta_;
    long long lo_, hi_;
    std::vector<double> logp_, pmf_, cdf_, sf_, mll_;
};

/// P(X in A) for a cut, evaluated at an arbitrary theta with full-precision
/// family tails. Used when a frozen cut is carried across theta (one-sided
/// jump limits, per-segment p-value branches).
inline double cut_tails_at(const Family& family, double theta, const AcceptanceCut& cut) {
    if (cut.whole_support()) return 1.0;
    const double up = cut.k1 == AcceptanceCut::no_upper ? 0.0 : family.sf(theta, cut.k1);
    const double down = cut.k2 >= family.support_min() ? family.cdf(theta, cut.k2) : 0.0;
    return std::min(up + down, 1.0);
}

/// Relative half-width used to probe both sides of theta0 for the lim-inf
/// jump convention. Narrow enough that a null value 1e-10 away from a
/// breakpoint keeps its own branch value, wide enough (a few thousand ulp)
/// to straddle a breakpoint sitting at theta0 itself.
inline double jump_probe_eps(double theta0) {
    return 1e-12 * std::max(1.0, std::fabs(theta0));
}

}  // namespace detail

/// Acceptance-set cut (k1, k2, x_theta) of a strictly two-sided test at
/// (theta0, x).
inline AcceptanceCut acceptance_cut(TestKind kind, const Family& family, double theta0,
                                    long long x) {
    if (kind == TestKind::fiducial)
        throw std::invalid_argument("acceptance_cut: the fiducial test has no acceptance cut");
    family.require_theta(theta0);
    family.require_x(x);
    return detail::SupportTable(kind, family, theta0, x).cut(x);
}

/// p-value of a test at (theta0, x). The fiducial kind delegates to
/// fiducial_pvalue; all other kinds sum the two accepted tails of the cut.
/// At a breakpoint of the cut the lim-inf convention applies: the cut is
/// probed just left and right of theta0 and the smallest of the candidate
/// tail sums (all evaluated at theta0) is returned.
inline double pvalue(TestKind kind, const Family& family, double theta0, long long x) {
    if (kind == TestKind::fiducial) return fiducial_pvalue(family, theta0, x);
    family.require_theta(theta0);
    family.require_x(x);

    const detail::SupportTable table(kind, family, theta0, x);
    const AcceptanceCut mid = table.cut(x);
    double p = table.tails(mid);

    const double eps = detail::jump_probe_eps(theta0);
    for (const double side : {theta0 - eps, theta0 + eps}) {
        if (!family.contains_theta(side)) continue;
        const AcceptanceCut c = detail::SupportTable(kind, family, side, x).cut(x);
        if (c != mid) p = std::min(p, detail::cut_tails_at(family, theta0, c));
    }
    return std::min(p, 1.0);
}

}  // namespace exactci

#endif  // EXACTCI_ACCEPTANCE_HPP
