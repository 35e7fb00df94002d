#ifndef EXACTCI_SEGMENTS_HPP
#define EXACTCI_SEGMENTS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "exactci/acceptance.hpp"
#include "exactci/family.hpp"
#include "exactci/roots.hpp"
#include "exactci/statistics.hpp"

namespace exactci {
namespace detail {

/// Maximal theta interval on which the acceptance cut of (kind, x) is
/// constant. p_lo/p_hi are the one-sided limits of the p-value branch at
/// the interval ends (the branch function theta -> P_theta(A) with the cut
/// frozen, which is continuous on the closed interval).
struct Segment {
    double lo = 0.0, hi = 0.0;
    AcceptanceCut cut;
    double p_lo = 0.0, p_hi = 0.0;
};

struct SegmentMin {
    double p_min = 0.0;
    bool interior = false;   // true when the branch has an interior stationary point
    double theta_r = 0.0;    // location of that stationary point
};

inline double breakpoint_tol(double theta) { return 1e-12 * std::max(1.0, std::fabs(theta)); }

/// True when the rejected gap {k2 < k < k1} lies strictly inside the
/// support, so that its probability has an interior maximum (and the
/// p-value branch an interior minimum).
inline bool hole_is_interior(const Family& family, const AcceptanceCut& cut) {
    if (cut.k1 == AcceptanceCut::no_upper) return false;
    if (cut.k2 < family.support_min()) return false;
    if (family.has_finite_support() && cut.k1 > family.support_max()) return false;
    return cut.k1 >= cut.k2 + 2;
}

/// d/dtheta P_theta(k2 < X < k1), the derivative of the rejected-gap mass.
/// The p-value branch derivative is its negative.
inline double hole_mass_dtheta(const Family& family, double theta, const AcceptanceCut& cut) {
    double acc = 0.0;
    for (long long k = cut.k2 + 1; k < cut.k1; ++k) acc += family.pmf_dtheta(theta, k);
    return acc;
}

/// Root of sum_{k=k2+1}^{k1-1} d/dtheta P_theta(X=k) = 0 for an interior
/// gap: the unique interior stationary point of the p-value branch. The
/// bracket is grown outward from [seed_lo, seed_hi] until the derivative
/// changes sign (the gap mass vanishes at both ends of the parameter
/// space, so a bracket always exists).
inline double gap_stationary_point(const Family& family, const AcceptanceCut& cut,
                                   double seed_lo, double seed_hi) {
    if (!hole_is_interior(family, cut))
        throw std::invalid_argument("gap_stationary_point: gap touches the support edge");
    const auto g = [&](double t) { return hole_mass_dtheta(family, t, cut); };
    double lo = seed_lo, hi = seed_hi;
    double glo = g(lo), ghi = g(hi);
    for (int it = 0; glo <= 0.0 && it < 200; ++it) {
        lo = family.theta_min() + 0.5 * (lo - family.theta_min());
        glo = g(lo);
    }
    for (int it = 0; ghi >= 0.0 && it < 200; ++it) {
        hi = std::isfinite(family.theta_max()) ? family.theta_max() - 0.5 * (family.theta_max() - hi)
                                               : hi * 2.0;
        ghi = g(hi);
    }
    if (glo <= 0.0 || ghi >= 0.0)
        throw std::runtime_error("gap_stationary_point: failed to bracket the root");
    return bisect_root(g, lo, hi, glo, ghi, RootTol{0.0, 1e-14});
}

/// Piecewise description of the p-value function theta -> p(theta, x) of a
/// strictly two-sided test over a theta window: the plateau {p == 1}, and
/// the constant-cut segments on each side of it, separated by the
/// breakpoints where the acceptance set gains or loses a point.
class PValuePieces {
  public:
    PValuePieces(TestKind kind, const Family& family, long long x, double window_lo,
                 double window_hi)
        : kind_(kind), family_(family), x_(x), window_lo_(window_lo), window_hi_(window_hi) {
        if (kind == TestKind::fiducial)
            throw std::invalid_argument("PValuePieces: the fiducial p-value has no cut structure");
        family.require_theta(window_lo);
        family.require_theta(window_hi);
        family.require_x(x);
        if (!(window_lo < window_hi))
            throw std::invalid_argument("PValuePieces: window is empty");
        build();
    }

    TestKind kind() const { return kind_; }
    const Family& family() const { return family_; }
    long long x() const { return x_; }
    double window_lo() const { return window_lo_; }
    double window_hi() const { return window_hi_; }

    bool has_plateau() const { return has_plateau_; }
    double plateau_lo() const { return plateau_lo_; }
    double plateau_hi() const { return plateau_hi_; }
    bool plateau_at_window_lo() const { return plateau_at_window_lo_; }
    bool plateau_at_window_hi() const { return plateau_at_window_hi_; }

    /// Segments strictly below / above the plateau, ascending in theta.
    const std::vector<Segment>& lower() const { return lower_; }
    const std::vector<Segment>& upper() const { return upper_; }

    AcceptanceCut cut_at(double theta) const {
        return SupportTable(kind_, family_, theta, x_).cut(x_);
    }

    double branch_value(const Segment& s, double theta) const {
        return cut_tails_at(family_, theta, s.cut);
    }

    /// Minimum of the branch over its closed segment. U-shaped branches
    /// (interior gap with a sign change of the gap-mass derivative) get a
    /// bisected interior minimum; all other branches are monotone and take
    /// their minimum at an end.
    SegmentMin branch_min(const Segment& s) const {
        SegmentMin m;
        if (s.cut.whole_support()) {
            m.p_min = 1.0;
            return m;
        }
        if (hole_is_interior(family_, s.cut)) {
            const double glo = hole_mass_dtheta(family_, s.lo, s.cut);
            const double ghi = hole_mass_dtheta(family_, s.hi, s.cut);
            if (glo > 0.0 && ghi < 0.0) {
                const auto g = [&](double t) { return hole_mass_dtheta(family_, t, s.cut); };
                m.theta_r = bisect_root(g, s.lo, s.hi, glo, ghi, RootTol{0.0, 1e-14});
                m.interior = true;
                m.p_min = branch_value(s, m.theta_r);
                return m;
            }
        }
        m.p_min = std::min(s.p_lo, s.p_hi);
        return m;
    }

    /// Every cut-change location in the window, ascending: interior
    /// breakpoints of both sides plus the plateau edges that fall inside
    /// the window.
    std::vector<double> all_breakpoints() const {
        std::vector<double> out;
        for (std::size_t i = 1; i < lower_.size(); ++i) out.push_back(lower_[i].lo);
        if (has_plateau_) {
            if (!plateau_at_window_lo_ && !lower_.empty()) out.push_back(plateau_lo_);
            if (!plateau_at_window_hi_ && !upper_.empty()) out.push_back(plateau_hi_);
        }
        for (std::size_t i = 1; i < upper_.size(); ++i) out.push_back(upper_[i].lo);
        return out;
    }

    /// One-sided limits of the p-value at a breakpoint returned by
    /// all_breakpoints().
    std::pair<double, double> limits_at(double breakpoint) const {
        const double left = limit_from(breakpoint, true);
        const double right = limit_from(breakpoint, false);
        return {left, right};
    }

  private:
    double limit_from(double theta, bool from_left) const {
        if (has_plateau_ && theta >= plateau_lo_ && theta <= plateau_hi_) {
            if (from_left && theta == plateau_lo_ && !lower_.empty())
                return lower_.back().p_hi;
            if (!from_left && theta == plateau_hi_ && !upper_.empty())
                return upper_.front().p_lo;
            return 1.0;
        }
        const auto& side = (has_plateau_ && theta > plateau_hi_) ||
                                   (!has_plateau_ && !upper_.empty())
                               ? upper_
                               : lower_;
        for (std::size_t i = 0; i < side.size(); ++i) {
            const Segment& s = side[i];
            const bool inside = from_left ? (theta > s.lo && theta <= s.hi)
                                          : (theta >= s.lo && theta < s.hi);
            if (inside) return cut_tails_at(family_, theta, s.cut);
        }
        if (side.empty()) return 1.0;
        // window edge; fall back to the nearest segment
        const Segment& s = theta <= side.front().lo ? side.front() : side.back();
        return cut_tails_at(family_, theta, s.cut);
    }

    bool is_plateau(double theta) const { return cut_at(theta).whole_support(); }

    // Any theta in the window with p == 1, probing the MLE first and then
    // progressively denser scans (B1 guarantees such a theta exists in the
    // full parameter space; it may still fall outside a narrow window).
    std::optional<double> find_plateau_seed() const {
        const double that = family_.mle(x_);
        if (family_.contains_theta(that) && that > window_lo_ && that < window_hi_ &&
            is_plateau(that))
            return that;
        const auto scan = [&](double lo, double hi, int n) -> std::optional<double> {
            for (int i = 0; i <= n; ++i) {
                const double t = lo + (hi - lo) * static_cast<double>(i) / n;
                if (t > window_lo_ && t < window_hi_ && family_.contains_theta(t) &&
                    is_plateau(t))
                    return t;
            }
            return std::nullopt;
        };
        if (auto s = scan(window_lo_, window_hi_, 256)) return s;
        if (family_.contains_theta(that)) {
            const double w = (window_hi_ - window_lo_) / 64.0;
            if (auto s = scan(std::max(window_lo_, that - w), std::min(window_hi_, that + w),
                              128))
                return s;
        }
        return std::nullopt;
    }

    void build() {
        const auto seed = find_plateau_seed();
        if (seed) {
            has_plateau_ = true;
            if (is_plateau(window_lo_)) {
                plateau_lo_ = window_lo_;
                plateau_at_window_lo_ = true;
            } else {
                plateau_lo_ = bisect_predicate([&](double t) { return is_plateau(t); },
                                               window_lo_, *seed, false,
                                               RootTol{0.0, 1e-13})
                                  .second;
            }
            if (is_plateau(window_hi_)) {
                plateau_hi_ = window_hi_;
                plateau_at_window_hi_ = true;
            } else {
                plateau_hi_ = bisect_predicate([&](double t) { return is_plateau(t); },
                                               *seed, window_hi_, true,
                                               RootTol{0.0, 1e-13})
                                  .first;
            }
            if (!plateau_at_window_lo_) decompose_region(window_lo_, plateau_lo_, lower_);
            if (!plateau_at_window_hi_) decompose_region(plateau_hi_, window_hi_, upper_);
        } else {
            // Whole window on one side of the plateau. Below it the cut
            // keeps its upper tail anchored at x; above it the lower tail.
            const AcceptanceCut c = cut_at(window_hi_);
            const bool below = c.k1 != AcceptanceCut::no_upper && c.k1 == x_ && c.k2 < x_;
            decompose_region(window_lo_, window_hi_, below ? lower_ : upper_);
        }
    }

    // Locate every cut change in [a, b] by divide and conquer. Equal cuts
    // at both ends prune recursion only below the probe width, which
    // bounds the blind spot for a cut change that reverts within the gap.
    void collect_jumps(double a, const AcceptanceCut& ca, double b, const AcceptanceCut& cb,
                       double probe_width, std::vector<double>& jumps, int depth) const {
        const double width = b - a;
        if (ca == cb && (width <= probe_width || depth > 80)) return;
        if (ca != cb && width <= breakpoint_tol(a)) {
            jumps.push_back(0.5 * (a + b));
            return;
        }
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) {
            if (ca != cb) jumps.push_back(mid);
            return;
        }
        const AcceptanceCut cm = cut_at(mid);
        collect_jumps(a, ca, mid, cm, probe_width, jumps, depth + 1);
        collect_jumps(mid, cm, b, cb, probe_width, jumps, depth + 1);
    }

    void decompose_region(double a, double b, std::vector<Segment>& out) const {
        if (!(a < b)) return;
        std::vector<double> jumps;
        collect_jumps(a, cut_at(a), b, cut_at(b), (b - a) / 512.0, jumps, 0);
        std::sort(jumps.begin(), jumps.end());
        std::vector<double> edges;
        edges.push_back(a);
        for (double j : jumps)
            if (j > edges.back() + breakpoint_tol(j)) edges.push_back(j);
        if (b > edges.back()) edges.push_back(b);
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            Segment s;
            s.lo = edges[i];
            s.hi = edges[i + 1];
            s.cut = cut_at(0.5 * (s.lo + s.hi));
            s.p_lo = cut_tails_at(family_, s.lo, s.cut);
            s.p_hi = cut_tails_at(family_, s.hi, s.cut);
            out.push_back(s);
        }
    }

    TestKind kind_;
    Family family_;
    long long x_;
    double window_lo_, window_hi_;
    bool has_plateau_ = false;
    double plateau_lo_ = 0.0, plateau_hi_ = 0.0;
    bool plateau_at_window_lo_ = false, plateau_at_window_hi_ = false;
    std::vector<Segment> lower_, upper_;
};

/// Default diagnostic window: nearly all of Theta for the binomial; a
/// quantile-motivated slab around the observation for the families with
/// unbounded support.
inline std::pair<double, double> default_theta_window(const Family& family, long long x) {
    const double xd = static_cast<double>(x);
    switch (family.kind()) {
        case FamilyKind::binomial: return {1e-9, 1.0 - 1e-9};
        case FamilyKind::poisson:
            return {xd / 20.0 + 1e-6, xd + 15.0 * std::sqrt(xd + 1.0) + 30.0};
        default: {
            const double k = static_cast<double>(family.successes());
            const double lo = k / (3.0 * xd + 6.0 * std::sqrt(xd + 1.0) + 15.0);
            return {std::max(lo, 1e-12), 1.0 - 1e-9};
        }
    }
}

}  // namespace detail
}  // namespace exactci

#endif  // EXACTCI_SEGMENTS_HPP
