#ifndef EXACTCI_INTERVALS_HPP
#define EXACTCI_INTERVALS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "exactci/acceptance.hpp"
#include "exactci/family.hpp"
#include "exactci/roots.hpp"
#include "exactci/segments.hpp"
#include "exactci/statistics.hpp"

namespace exactci {

/// A two-sided confidence interval with bounds in the closure of the
/// parameter space (0, 1, or +inf are legal endpoint values). tail_split is
/// set for fiducial intervals only and records the (alpha/2, alpha/2)
/// allocation.
struct ExactInterval {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.0;
    long long x = 0;
    TestKind kind = TestKind::fiducial;
    Family family;
    std::optional<std::pair<double, double>> tail_split;

    double width() const { return upper - lower; }
    bool contains(double theta) const { return theta > lower && theta < upper; }
};

namespace detail {

inline void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1)");
}

constexpr RootTol interval_tol{1e-12, 1e-12};

/// True when the p-value plateau of x reaches the lower (resp. upper) end
/// of the parameter space, pinning that interval bound to the boundary.
inline bool lower_bound_void(const Family& family, long long x) {
    return family.orientation() > 0
               ? x == family.support_min()
               : family.has_finite_support() && x == family.support_max();
}
inline bool upper_bound_void(const Family& family, long long x) {
    return family.orientation() > 0
               ? family.has_finite_support() && x == family.support_max()
               : x == family.support_min();
}

/// Step toward an end of the parameter space: halving for finite ends,
/// doubling for the infinite Poisson end.
inline double step_toward_min(const Family& family, double theta) {
    return family.theta_min() + 0.5 * (theta - family.theta_min());
}
inline double step_toward_max(const Family& family, double theta) {
    const double hi = family.theta_max();
    return std::isfinite(hi) ? hi - 0.5 * (hi - theta) : theta * 2.0;
}

/// A theta strictly inside the parameter space near the center of the
/// plateau of x, usable as an expansion seed even for boundary MLEs.
inline double interior_seed(const Family& family, long long x) {
    const double that = family.mle(x);
    if (family.contains_theta(that)) return that;
    switch (family.kind()) {
        case FamilyKind::binomial:
            return x == 0 ? 0.5 / (static_cast<double>(family.trials()) + 1.0)
                          : 1.0 - 0.5 / (static_cast<double>(family.trials()) + 1.0);
        case FamilyKind::poisson: return 0.5;  // x == 0
        default: return 1.0 - 1e-3;            // x == k
    }
}

inline double raw_pvalue(TestKind kind, const Family& family, double theta, long long x) {
    const SupportTable t(kind, family, theta, x);
    return t.tails(t.cut(x));
}

/// Inverts the p-value function of one (kind, family, x) for any alpha >=
/// alpha_min: L_alpha = inf{theta : p > alpha}, U_alpha = sup{theta : p >
/// alpha}. The window is grown until the p-value has decayed well below
/// alpha_min on both non-void sides, the piecewise cut structure is built
/// once, and each query walks the segments inward until the super-level
/// set starts. A p-value that jumps across alpha at a breakpoint yields
/// the breakpoint itself as the bound.
class BoundSolver {
  public:
    BoundSolver(TestKind kind, const Family& family, long long x, double alpha_min)
        : kind_(kind), family_(family), x_(x) {
        if (kind == TestKind::fiducial)
            throw std::invalid_argument("BoundSolver: use fiducial_interval instead");
        require_alpha(alpha_min);
        alpha_min_ = alpha_min;
        lower_void_ = lower_bound_void(family, x);
        upper_void_ = upper_bound_void(family, x);

        const double floor = alpha_min * 1e-2;
        const double seed = interior_seed(family, x);
        const auto hot = [&](double t) { return raw_pvalue(kind, family, t, x) >= floor; };

        // Window edges: step outward until the p-value has decayed below
        // the floor, then bisect the decay edge back in (the outward steps
        // can overshoot by orders of magnitude, and everything between the
        // edge and the overshoot would burden the decomposition with
        // irrelevant cut changes), and keep a 25% span margin.
        double wlo = step_toward_min(family, seed);
        if (!lower_void_) {
            int it = 0;
            while (hot(wlo) && ++it < 300) wlo = step_toward_min(family, wlo);
            const double edge =
                bisect_predicate(hot, wlo, seed, false, RootTol{0.0, 0.05}).first;
            wlo = std::max(wlo, edge - 0.25 * (seed - edge));
        }
        double whi;
        if (family.kind() == FamilyKind::poisson) {
            const double xd = static_cast<double>(x);
            whi = std::max(xd + 10.0 * std::sqrt(xd + 1.0) + 20.0, seed * 1.5);
        } else {
            whi = step_toward_max(family, seed);
        }
        if (!upper_void_) {
            int it = 0;
            while (hot(whi) && ++it < 300) whi = step_toward_max(family, whi);
            const double edge =
                bisect_predicate(hot, seed, whi, true, RootTol{0.0, 0.05}).second;
            whi = std::min(whi, edge + 0.25 * (edge - seed));
        }

        for (int round = 0;; ++round) {
            pieces_.emplace(kind, family, x_, wlo, whi);
            if (!pieces_->has_plateau())
                throw std::runtime_error("BoundSolver: p-value plateau not located in window");
            bool ok = true;
            // On a side without a pure terminal tail the window must have
            // outrun the super-level set; grow the span until the outermost
            // segments certify it.
            if (!lower_void_ && !pieces_->lower().empty() &&
                !pure_tail(pieces_->lower().front().cut)) {
                const Segment& s = pieces_->lower().front();
                if (std::max(s.p_lo, s.p_hi) > 0.5 * alpha_min_) {
                    wlo = std::max(step_toward_min(family, seed * 0.0) * 0.0 +
                                       (wlo - 0.5 * (seed - wlo)),
                                   family.theta_min() + 0.25 * (wlo - family.theta_min()));
                    ok = false;
                }
            }
            if (!upper_void_ && !pieces_->upper().empty() &&
                !pure_tail(pieces_->upper().back().cut)) {
                const Segment& s = pieces_->upper().back();
                if (std::max(s.p_lo, s.p_hi) > 0.5 * alpha_min_) {
                    whi = std::isfinite(family.theta_max())
                              ? std::min(whi + 0.5 * (whi - seed),
                                         family.theta_max() -
                                             0.25 * (family.theta_max() - whi))
                              : whi + (whi - seed);
                    ok = false;
                }
            }
            if (ok || round >= 8) break;
            pieces_.reset();
        }
    }

    const PValuePieces& pieces() const { return *pieces_; }

    double lower(double alpha) const {
        check_alpha(alpha);
        if (lower_void_) return family_.theta_min();
        const auto& segs = pieces_->lower();
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const Segment& s = segs[i];
            if (std::max(s.p_lo, s.p_hi) <= alpha) continue;
            if (s.p_lo > alpha) {
                // Entering the segment the p-value is already above alpha:
                // either the jump at s.lo crosses alpha, or (first segment
                // only) the branch continues below the window and the
                // crossing is found by extending the pure-tail bracket.
                if (i == 0) return solve_on_extended_tail(s, alpha, /*low_side=*/true);
                return s.lo;
            }
            const auto f = [&](double t) { return pieces_->branch_value(s, t) - alpha; };
            return bisect_root(f, s.lo, s.hi, s.p_lo - alpha, s.p_hi - alpha, interval_tol);
        }
        return pieces_->plateau_lo();
    }

    double upper(double alpha) const {
        check_alpha(alpha);
        if (upper_void_) return family_.theta_max();
        const auto& segs = pieces_->upper();
        for (std::size_t i = segs.size(); i-- > 0;) {
            const Segment& s = segs[i];
            if (std::max(s.p_lo, s.p_hi) <= alpha) continue;
            if (s.p_hi > alpha) {
                if (i + 1 == segs.size())
                    return solve_on_extended_tail(s, alpha, /*low_side=*/false);
                return s.hi;
            }
            const auto f = [&](double t) { return pieces_->branch_value(s, t) - alpha; };
            return bisect_root(f, s.lo, s.hi, s.p_lo - alpha, s.p_hi - alpha, interval_tol);
        }
        return pieces_->plateau_hi();
    }

  private:
    bool pure_tail(const AcceptanceCut& cut) const {
        const bool no_lower = cut.k2 < family_.support_min();
        const bool no_upper = cut.k1 == AcceptanceCut::no_upper ||
                              (family_.has_finite_support() && cut.k1 > family_.support_max());
        return no_lower != no_upper;
    }

    // The outermost segment's branch is a single monotone tail that keeps
    // falling beyond the window; extend the bracket outward until it drops
    // below alpha, then bisect on the frozen cut.
    double solve_on_extended_tail(const Segment& s, double alpha, bool low_side) const {
        const auto f = [&](double t) { return cut_tails_at(family_, t, s.cut) - alpha; };
        double inner = low_side ? s.hi : s.lo;
        const double finner = (low_side ? s.p_hi : s.p_lo) - alpha;
        double outer = low_side ? s.lo : s.hi;
        double fouter = (low_side ? s.p_lo : s.p_hi) - alpha;
        for (int it = 0; fouter >= 0.0 && it < 300; ++it) {
            outer = low_side ? step_toward_min(family_, outer)
                             : step_toward_max(family_, outer);
            fouter = f(outer);
        }
        if (fouter >= 0.0)
            throw std::runtime_error("BoundSolver: tail bracket extension failed");
        return low_side ? bisect_root(f, outer, inner, fouter, finner, interval_tol)
                        : bisect_root(f, inner, outer, finner, fouter, interval_tol);
    }

    void check_alpha(double alpha) const {
        require_alpha(alpha);
        if (alpha < alpha_min_)
            throw std::invalid_argument("BoundSolver: alpha below the alpha_min this solver was built for");
    }

    TestKind kind_;
    Family family_;
    long long x_;
    double alpha_min_ = 0.0;
    bool lower_void_ = false, upper_void_ = false;
    std::optional<PValuePieces> pieces_;
};

}  // namespace detail

/// Equal-tailed fiducial interval (Clopper-Pearson for the binomial,
/// Garwood for the Poisson): each bound solves its one-sided tail equation
/// at level alpha/2, with boundary cases x = inf/sup of the support pinned
/// to the ends of the parameter space.
inline ExactInterval fiducial_interval(const Family& family, long long x, double alpha) {
    detail::require_alpha(alpha);
    family.require_x(x);
    const double half = 0.5 * alpha;
    ExactInterval out{family.theta_min(), family.theta_max(), alpha, x,
                      TestKind::fiducial, family, std::make_pair(half, half)};

    // The tail used for each bound is the one that increases toward that
    // bound's end of the parameter space, so that lower <= upper for both
    // orientations.
    const bool plus = family.orientation() > 0;
    const auto lower_tail = [&](double t) {
        return plus ? family.sf(t, x) : family.cdf(t, x);
    };
    const auto upper_tail = [&](double t) {
        return plus ? family.cdf(t, x) : family.sf(t, x);
    };

    if (!detail::lower_bound_void(family, x)) {
        double lo = family.kind() == FamilyKind::poisson ? 1e-12 : 1e-15;
        double hi = std::isfinite(family.theta_max()) ? 1.0 - 1e-15
                                                      : static_cast<double>(x) +
                                                            10.0 * std::sqrt(static_cast<double>(x) + 1.0) +
                                                            20.0;
        while (lower_tail(hi) < half) hi = detail::step_toward_max(family, hi);
        out.lower = detail::bisect_root([&](double t) { return lower_tail(t) - half; }, lo,
                                        hi, detail::interval_tol);
    }
    if (!detail::upper_bound_void(family, x)) {
        double lo = family.kind() == FamilyKind::poisson ? 1e-12 : 1e-15;
        double hi = std::isfinite(family.theta_max()) ? 1.0 - 1e-15
                                                      : static_cast<double>(x) +
                                                            10.0 * std::sqrt(static_cast<double>(x) + 1.0) +
                                                            20.0;
        while (upper_tail(hi) > half) hi = detail::step_toward_max(family, hi);
        out.upper = detail::bisect_root([&](double t) { return upper_tail(t) - half; }, lo,
                                        hi, detail::interval_tol);
    }
    return out;
}

/// Confidence interval of a strictly two-sided test: the convex hull of
/// {theta : p(theta, x) > alpha}. Gaps inside the super-level set are
/// ignored here (see diagnostics for locating them); a p-value that jumps
/// across alpha places the bound at the breakpoint itself.
inline ExactInterval inverted_interval(TestKind kind, const Family& family, long long x,
                                       double alpha) {
    if (kind == TestKind::fiducial)
        throw std::invalid_argument("inverted_interval: use fiducial_interval for the fiducial kind");
    detail::require_alpha(alpha);
    family.require_x(x);
    detail::BoundSolver solver(kind, family, x, alpha);
    return ExactInterval{solver.lower(alpha), solver.upper(alpha), alpha, x, kind, family,
                         std::nullopt};
}

struct BoundsCurvePoint {
    double alpha = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool flat_lower = false;  // bound unchanged from the previous grid point
    bool flat_upper = false;
};

/// Interval bounds across an ascending alpha grid, with per-point flags
/// marking bounds that moved less than flat_tol (relative) since the
/// previous grid point.
inline std::vector<BoundsCurvePoint> bounds_curve(TestKind kind, const Family& family,
                                                  long long x,
                                                  const std::vector<double>& alpha_grid,
                                                  double flat_tol = 1e-9) {
    if (alpha_grid.empty()) throw std::invalid_argument("bounds_curve: empty alpha grid");
    if (!(flat_tol > 0.0)) throw std::invalid_argument("bounds_curve: flat_tol must be > 0");
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
        detail::require_alpha(alpha_grid[i]);
        if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1]))
            throw std::invalid_argument("bounds_curve: alpha grid must be strictly ascending");
    }
    family.require_x(x);

    std::vector<BoundsCurvePoint> out(alpha_grid.size());
    std::optional<detail::BoundSolver> solver;
    if (kind != TestKind::fiducial)
        solver.emplace(kind, family, x, alpha_grid.front());
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
        const double a = alpha_grid[i];
        if (kind == TestKind::fiducial) {
            const ExactInterval iv = fiducial_interval(family, x, a);
            out[i] = {a, iv.lower, iv.upper, false, false};
        } else {
            out[i] = {a, solver->lower(a), solver->upper(a), false, false};
        }
        if (i > 0) {
            const auto flat = [&](double cur, double prev) {
                return std::fabs(cur - prev) <= flat_tol * std::max(1.0, std::fabs(prev));
            };
            out[i].flat_lower = flat(out[i].lower, out[i - 1].lower);
            out[i].flat_upper = flat(out[i].upper, out[i - 1].upper);
        }
    }
    return out;
}

}  // namespace exactci

#endif  // EXACTCI_INTERVALS_HPP
