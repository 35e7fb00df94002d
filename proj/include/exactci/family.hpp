#ifndef EXACTCI_FAMILY_HPP
#define EXACTCI_FAMILY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace exactci {

enum class FamilyKind { binomial, poisson, neg_binomial };

/// A discrete distribution family on consecutive integers, stochastically
/// monotone in its real parameter theta.
///
/// Supported families:
///   binomial(n)      theta in (0,1), support {0..n}
///   poisson()        theta in (0,inf), support {0,1,2,...}
///   neg_binomial(k)  theta in (0,1), support {k, k+1, ...}; X counts the
///                    number of trials needed to reach the k-th success
///
/// orientation() is +1 when P_theta(X <= x) is strictly decreasing in theta
/// (binomial, Poisson) and -1 when it is strictly increasing (negative
/// binomial in the trials parameterization).
///
/// All probability evaluations run in log space so that n and x well past
/// 1e4 neither overflow nor underflow prematurely. Tail probabilities are
/// produced by summing the smaller tail directly and taking the complement
/// for the larger one, which keeps cdf(x) + sf(x+1) = 1 to within one
/// rounding of 1.0. Raw upper sums over infinite supports stop once a
/// geometric-ratio bound certifies the omitted mass is negligible.
class Family {
  public:
    static constexpr long long unbounded = std::numeric_limits<long long>::max();

    static Family binomial(long long n) {
        if (n < 1) throw std::invalid_argument("binomial: n must be >= 1");
        return Family(FamilyKind::binomial, n);
    }

    static Family poisson() { return Family(FamilyKind::poisson, 0); }

    static Family neg_binomial(long long k) {
        if (k < 1) throw std::invalid_argument("neg_binomial: k must be >= 1");
        return Family(FamilyKind::neg_binomial, k);
    }

    FamilyKind kind() const { return kind_; }

    /// Number of trials (binomial only).
    long long trials() const { return param_; }
    /// Required number of successes (negative binomial only).
    long long successes() const { return param_; }

    double theta_min() const { return 0.0; }
    double theta_max() const {
        return kind_ == FamilyKind::poisson ? std::numeric_limits<double>::infinity() : 1.0;
    }

    int orientation() const { return kind_ == FamilyKind::neg_binomial ? -1 : +1; }

    long long support_min() const { return kind_ == FamilyKind::neg_binomial ? param_ : 0; }
    long long support_max() const { return kind_ == FamilyKind::binomial ? param_ : unbounded; }
    bool has_finite_support() const { return kind_ == FamilyKind::binomial; }

    bool contains_theta(double theta) const {
        return std::isfinite(theta) && theta > theta_min() && theta < theta_max();
    }
    bool contains_x(long long x) const {
        return x >= support_min() && (!has_finite_support() || x <= support_max());
    }

    void require_theta(double theta) const {
        if (!contains_theta(theta))
            throw std::domain_error(name() + ": theta=" + std::to_string(theta) +
                                    " is not strictly inside the parameter space");
    }
    void require_x(long long x) const {
        if (!contains_x(x))
            throw std::domain_error(name() + ": x=" + std::to_string(x) +
                                    " is outside the support");
    }

    double mean(double theta) const {
        switch (kind_) {
            case FamilyKind::binomial: return static_cast<double>(param_) * theta;
            case FamilyKind::poisson: return theta;
            default: return static_cast<double>(param_) / theta;
        }
    }

    double log_pmf(double theta, long long x) const {
        require_theta(theta);
        require_x(x);
        return log_pmf_unchecked(theta, x);
    }

    double pmf(double theta, long long x) const { return std::exp(log_pmf(theta, x)); }

    /// d/dtheta P_theta(X = x), via the closed-form score * pmf identity.
    double pmf_dtheta(double theta, long long x) const {
        require_theta(theta);
        require_x(x);
        const double p = std::exp(log_pmf_unchecked(theta, x));
        const double xd = static_cast<double>(x);
        switch (kind_) {
            case FamilyKind::binomial:
                return p * (xd / theta - (static_cast<double>(param_) - xd) / (1.0 - theta));
            case FamilyKind::poisson:
                return p * (xd / theta - 1.0);
            default:
                return p * (static_cast<double>(param_) / theta -
                            (xd - static_cast<double>(param_)) / (1.0 - theta));
        }
    }

    /// P(X <= x). x may be any integer; values outside the support clamp
    /// to 0 and 1.
    double cdf(double theta, long long x) const {
        require_theta(theta);
        if (x < support_min()) return 0.0;
        if (has_finite_support() && x >= support_max()) return 1.0;
        if (static_cast<double>(x) < mean(theta)) return lower_sum(theta, x);
        return 1.0 - upper_sum(theta, x + 1);
    }

    /// P(X >= x), the survival function inclusive of x.
    double sf(double theta, long long x) const {
        require_theta(theta);
        if (x <= support_min()) return 1.0;
        if (has_finite_support() && x > support_max()) return 0.0;
        if (static_cast<double>(x - 1) < mean(theta)) return 1.0 - lower_sum(theta, x - 1);
        return upper_sum(theta, x);
    }

    /// Maximum likelihood estimator; may lie on the boundary of the
    /// parameter space (x = 0, x = n, or x = k), which callers must handle.
    double mle(long long x) const {
        require_x(x);
        switch (kind_) {
            case FamilyKind::binomial:
                return static_cast<double>(x) / static_cast<double>(param_);
            case FamilyKind::poisson: return static_cast<double>(x);
            default: return static_cast<double>(param_) / static_cast<double>(x);
        }
    }

    /// sup_theta log L(theta, x). Boundary MLEs (x = 0, x = n, x = k) give
    /// a limiting likelihood of 1, hence 0 here.
    double max_log_lik(long long x) const {
        require_x(x);
        switch (kind_) {
            case FamilyKind::binomial:
                if (x == 0 || x == param_) return 0.0;
                break;
            case FamilyKind::poisson:
                if (x == 0) return 0.0;
                break;
            default:
                if (x == param_) return 0.0;
                break;
        }
        return log_pmf_unchecked(mle(x), x);
    }

    /// pmf(theta, x+1) / pmf(theta, x); used for geometric tail bounds.
    double pmf_ratio(double theta, long long x) const {
        const double xd = static_cast<double>(x);
        switch (kind_) {
            case FamilyKind::binomial:
                return (static_cast<double>(param_) - xd) / (xd + 1.0) * theta / (1.0 - theta);
            case FamilyKind::poisson: return theta / (xd + 1.0);
            default:
                return xd / (xd - static_cast<double>(param_) + 1.0) * (1.0 - theta);
        }
    }

    /// Smallest K with P(X > K) < eps, by walking the upper tail with
    /// multiplicative pmf updates; capped at support_max() for finite
    /// supports.
    long long upper_trunc(double theta, double eps) const {
        require_theta(theta);
        const double m = mean(theta);
        long long k = std::max(
            support_min() + 1,
            static_cast<long long>(std::ceil(m + 10.0 * std::sqrt(m + 1.0) + 20.0)));
        if (has_finite_support() && k >= support_max()) return support_max();
        double t = std::exp(log_pmf_unchecked(theta, k));
        for (;;) {
            const double r = pmf_ratio(theta, k);
            if (r < 1.0 && t * r / (1.0 - r) < eps) return k;
            ++k;
            t *= r;
            if (has_finite_support() && k >= support_max()) return support_max();
            if (k > (1LL << 40))
                throw std::runtime_error(name() + ": tail truncation failed to converge");
        }
    }

    std::string name() const {
        switch (kind_) {
            case FamilyKind::binomial: return "binomial(n=" + std::to_string(param_) + ")";
            case FamilyKind::poisson: return "poisson";
            default: return "negbinomial(k=" + std::to_string(param_) + ")";
        }
    }

    friend bool operator==(const Family& a, const Family& b) {
        return a.kind_ == b.kind_ && a.param_ == b.param_;
    }

    double log_pmf_unchecked(double theta, long long x) const {
        const double xd = static_cast<double>(x);
        const double nd = static_cast<double>(param_);
        switch (kind_) {
            case FamilyKind::binomial: {
                double lp = lchoose(nd, xd);
                if (x > 0) lp += xd * std::log(theta);
                if (x < param_) lp += (nd - xd) * std::log1p(-theta);
                return lp;
            }
            case FamilyKind::poisson: {
                double lp = -theta - std::lgamma(xd + 1.0);
                if (x > 0) lp += xd * std::log(theta);
                return lp;
            }
            default: {
                double lp = lchoose(xd - 1.0, nd - 1.0) + nd * std::log(theta);
                if (x > param_) lp += (xd - nd) * std::log1p(-theta);
                return lp;
            }
        }
    }

  private:
    Family(FamilyKind kind, long long param) : kind_(kind), param_(param) {}

    static double lchoose(double n, double k) {
        return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    }

    // Sum of pmf over support_min()..x, ascending.
    double lower_sum(double theta, long long x) const {
        double acc = 0.0;
        for (long long k = support_min(); k <= x; ++k)
            acc += std::exp(log_pmf_unchecked(theta, k));
        return acc < 1.0 ? acc : 1.0;
    }

    // Sum of pmf over x..sup, walking up from x until the support ends or a
    // geometric-ratio bound certifies the rest is negligible. Only called
    // with x at or above the mean, where the terms decrease.
    double upper_sum(double theta, long long x) const {
        double acc = 0.0;
        long long k = x;
        double t = std::exp(log_pmf_unchecked(theta, k));
        for (;;) {
            acc += t;
            if (has_finite_support() && k == support_max()) return acc < 1.0 ? acc : 1.0;
            const double r = pmf_ratio(theta, k);
            if (r < 1.0 && t * r / (1.0 - r) < acc * 1e-16 + 1e-300)
                return acc < 1.0 ? acc : 1.0;
            ++k;
            t *= r;
            if (k > (1LL << 40))
                throw std::runtime_error(name() + ": upper tail sum failed to converge");
        }
    }

    FamilyKind kind_;
    long long param_;  // n for binomial, k for negative binomial, unused for Poisson
};

}  // namespace exactci

#endif  // EXACTCI_FAMILY_HPP
