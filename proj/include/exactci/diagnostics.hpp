#ifndef EXACTCI_DIAGNOSTICS_HPP
#define EXACTCI_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "exactci/acceptance.hpp"
#include "exactci/family.hpp"
#include "exactci/intervals.hpp"
#include "exactci/parallel.hpp"
#include "exactci/roots.hpp"
#include "exactci/segments.hpp"
#include "exactci/statistics.hpp"

namespace exactci {

/// Crossing locations theta_{y,x} where the relative extremeness of x and
/// some other support point y flips, i.e. where sign(T(theta,x) -
/// T(theta,y)) changes. These are exactly the locations where the p-value
/// function of x jumps. All sign changes found in the window are returned,
/// ascending, deduplicated when several y cross at one theta.
inline std::vector<double> breakpoints(TestKind kind, const Family& family, long long x,
                                       std::pair<double, double> theta_window) {
    if (kind == TestKind::fiducial)
        throw std::invalid_argument("breakpoints: the fiducial p-value has no breakpoints");
    family.require_x(x);
    const double wlo = theta_window.first, whi = theta_window.second;
    family.require_theta(wlo);
    family.require_theta(whi);
    if (!(wlo < whi)) throw std::invalid_argument("breakpoints: empty theta window");

    const double wide_mean_end = family.orientation() > 0 ? whi : wlo;
    const long long y_max = family.has_finite_support()
                                ? family.support_max()
                                : std::max(family.upper_trunc(wide_mean_end, 1e-15), x);
    const long long y_min = family.support_min();

    // Coarse sign scan on a shared grid (one support table per grid point),
    // then per-bracket bisection on the direct statistic scores.
    const int n_scan = 512;
    std::vector<double> grid(n_scan + 1);
    for (int i = 0; i <= n_scan; ++i)
        grid[i] = wlo + (whi - wlo) * static_cast<double>(i) / n_scan;

    const std::size_t ny = static_cast<std::size_t>(y_max - y_min + 1);
    std::vector<int> prev_sign(ny, 0);
    std::vector<std::pair<double, double>> brackets;  // per sign change
    std::vector<long long> bracket_y;
    std::vector<double> found;

    double prev_theta = grid[0];
    for (int i = 0; i <= n_scan; ++i) {
        const double t = grid[i];
        const detail::SupportTable table(kind, family, t, std::max(x, y_max));
        const double sx = table.score(x);
        for (long long y = y_min; y <= y_max; ++y) {
            if (y == x) continue;
            const double g = sx - table.score(y);
            const int sign = g > 0.0 ? 1 : (g < 0.0 ? -1 : 0);
            const std::size_t j = static_cast<std::size_t>(y - y_min);
            if (sign == 0) {
                found.push_back(t);
            } else if (prev_sign[j] != 0 && sign != prev_sign[j]) {
                brackets.emplace_back(prev_theta, t);
                bracket_y.push_back(y);
            }
            if (sign != 0) prev_sign[j] = sign;
        }
        prev_theta = t;
    }

    for (std::size_t b = 0; b < brackets.size(); ++b) {
        const long long y = bracket_y[b];
        const auto g = [&](double t) {
            return detail::statistic_score(kind, family, t, x) -
                   detail::statistic_score(kind, family, t, y);
        };
        const double glo = g(brackets[b].first), ghi = g(brackets[b].second);
        if (glo == 0.0 || ghi == 0.0 || (glo > 0.0) != (ghi > 0.0)) {
            found.push_back(detail::bisect_root(g, brackets[b].first, brackets[b].second,
                                                glo, ghi, detail::RootTol{0.0, 1e-13}));
        }
    }

    std::sort(found.begin(), found.end());
    std::vector<double> out;
    for (double t : found)
        if (out.empty() || t - out.back() > 1e-8 * std::max(1.0, std::fabs(t)))
            out.push_back(t);
    return out;
}

struct PValueJump {
    double theta = 0.0;
    double left = 0.0;   // limit from below
    double right = 0.0;  // limit from above
};

/// The p-value function of one observation sampled over a theta grid, with
/// jump locations refined and both one-sided limits recorded, plus the
/// plateau {theta : p == 1} clipped to the grid range.
struct PValueCurve {
    TestKind kind = TestKind::fiducial;
    Family family;
    long long x = 0;
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<PValueJump> jumps;
    std::optional<std::pair<double, double>> plateau;
};

namespace detail {

// Generic discontinuity detector used for the fiducial curve: a grid delta
// that towers over its neighbours is refined; it is a jump only if the
// delta survives shrinking the bracket to floating-point scale.
inline std::vector<PValueJump> detect_jumps_by_refinement(const Family& family, long long x,
                                                          const std::vector<double>& grid,
                                                          const std::vector<double>& values) {
    std::vector<PValueJump> jumps;
    const std::size_t n = grid.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double d = std::fabs(values[i] - values[i - 1]);
        double neighbour = 1e-9;
        if (i >= 2) neighbour = std::max(neighbour, std::fabs(values[i - 1] - values[i - 2]));
        if (i + 1 < n) neighbour = std::max(neighbour, std::fabs(values[i + 1] - values[i]));
        if (d <= 4.0 * neighbour || d <= 1e-7) continue;
        double a = grid[i - 1], b = grid[i];
        double pa = values[i - 1], pb = values[i];
        for (int it = 0; it < 80 && b - a > 1e-13 * std::max(1.0, std::fabs(a)); ++it) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            const double pm = fiducial_pvalue(family, mid, x);
            if (std::fabs(pm - pa) >= std::fabs(pb - pm)) {
                b = mid;
                pb = pm;
            } else {
                a = mid;
                pa = pm;
            }
        }
        if (std::fabs(pb - pa) > 1e-7) jumps.push_back({0.5 * (a + b), pa, pb});
    }
    return jumps;
}

// {theta : fiducial p == 1} = {both tails >= 1/2}; each edge is a monotone
// half-tail equation.
inline std::pair<double, double> fiducial_plateau(const Family& family, long long x) {
    const bool plus = family.orientation() > 0;
    double lo = family.theta_min(), hi = family.theta_max();
    const auto solve_half = [&](bool survival_tail) {
        const auto f = [&](double t) {
            return (survival_tail ? family.sf(t, x) : family.cdf(t, x)) - 0.5;
        };
        double a = family.kind() == FamilyKind::poisson ? 1e-12 : 1e-15;
        double b = std::isfinite(family.theta_max())
                       ? 1.0 - 1e-15
                       : static_cast<double>(x) + 10.0 * std::sqrt(static_cast<double>(x) + 1.0) + 20.0;
        while (std::isinf(family.theta_max()) && f(b) * f(a) > 0.0 && b < 1e14) b *= 2.0;
        return bisect_root(f, a, b, RootTol{1e-13, 1e-13});
    };
    // The tail that increases toward the lower end of the plateau edge set.
    if (!lower_bound_void(family, x)) lo = solve_half(plus);
    if (!upper_bound_void(family, x)) hi = solve_half(!plus);
    return {lo, hi};
}

}  // namespace detail

/// Sample the p-value function over a theta grid. Strict kinds get their
/// jumps located exactly from the acceptance-cut structure; the fiducial
/// curve runs through a refinement-based discontinuity detector instead
/// (expected to report none).
inline PValueCurve pvalue_curve(TestKind kind, const Family& family, long long x,
                                const std::vector<double>& grid) {
    if (grid.size() < 2) throw std::invalid_argument("pvalue_curve: need at least 2 grid points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        family.require_theta(grid[i]);
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw std::invalid_argument("pvalue_curve: grid must be strictly ascending");
    }
    family.require_x(x);

    PValueCurve curve{kind, family, x, grid, {}, {}, std::nullopt};
    curve.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        curve.values[i] = pvalue(kind, family, grid[i], x);

    if (kind == TestKind::fiducial) {
        curve.jumps = detail::detect_jumps_by_refinement(family, x, grid, curve.values);
        const auto [plo, phi] = detail::fiducial_plateau(family, x);
        const double a = std::max(plo, grid.front()), b = std::min(phi, grid.back());
        if (a <= b) curve.plateau = std::make_pair(a, b);
        return curve;
    }

    const detail::PValuePieces pieces(kind, family, x, grid.front(), grid.back());
    for (double bp : pieces.all_breakpoints()) {
        const auto [left, right] = pieces.limits_at(bp);
        if (std::fabs(left - right) > 1e-12) curve.jumps.push_back({bp, left, right});
    }
    if (pieces.has_plateau())
        curve.plateau = std::make_pair(pieces.plateau_lo(), pieces.plateau_hi());
    return curve;
}

struct NestednessEntry {
    long long x = 0;
    std::optional<double> alpha_L;     // largest alpha with strictly monotone lower bound
    std::optional<double> alpha_U;     // same for the upper bound
    std::optional<double> alpha_nest;  // largest alpha with strictly nested intervals at x
    std::string note;                  // reason when a value is undefined or failed
};

struct NestednessReport {
    TestKind kind = TestKind::sterne;
    Family family;
    std::vector<NestednessEntry> entries;
    std::optional<double> alpha_L;  // minima over the per-x values that exist
    std::optional<double> alpha_U;
    std::optional<double> alpha_nest;
};

namespace detail {

inline bool pure_upper_tail(const Family& family, const AcceptanceCut& cut) {
    return cut.k2 < family.support_min() && cut.k1 != AcceptanceCut::no_upper &&
           (!family.has_finite_support() || cut.k1 <= family.support_max());
}
inline bool pure_lower_tail(const Family& family, const AcceptanceCut& cut) {
    return cut.k2 >= family.support_min() &&
           (cut.k1 == AcceptanceCut::no_upper ||
            (family.has_finite_support() && cut.k1 > family.support_max()));
}
inline bool pure_single_tail(const Family& family, const AcceptanceCut& cut) {
    return pure_upper_tail(family, cut) || pure_lower_tail(family, cut);
}

/// Union of closed value intervals; returns the lowest gap start above the
/// floor (the supremum of covered values below the first uncovered stretch).
inline std::optional<double> first_value_gap(std::vector<std::pair<double, double>> vals,
                                             double floor, double ceiling) {
    if (vals.empty()) return floor;
    std::sort(vals.begin(), vals.end());
    double covered = floor;
    for (const auto& [lo, hi] : vals) {
        if (lo > covered + 1e-12 && covered < ceiling) return covered;
        covered = std::max(covered, hi);
    }
    return covered < ceiling ? std::optional<double>(covered) : std::nullopt;
}

inline NestednessEntry nestedness_entry(TestKind kind, const Family& family, long long x) {
    NestednessEntry entry;
    entry.x = x;

    auto window = default_theta_window(family, x);
    std::optional<PValuePieces> pieces;
    for (int attempt = 0;; ++attempt) {
        pieces.emplace(kind, family, x, window.first, window.second);
        bool ok = true;
        if (!lower_bound_void(family, x) && family.orientation() > 0 &&
            (pieces->lower().empty() || !pure_single_tail(family, pieces->lower().front().cut)))
            ok = false;
        if (!upper_bound_void(family, x) && family.orientation() < 0 &&
            (pieces->upper().empty() || !pure_single_tail(family, pieces->upper().back().cut)))
            ok = false;
        if (ok || attempt >= 6) break;
        window.first = step_toward_min(family, window.first);
        if (std::isfinite(family.theta_max()))
            window.second = step_toward_max(family, window.second);
        pieces.reset();
    }

    const auto& lower = pieces->lower();
    const auto& upper = pieces->upper();

    if (lower_bound_void(family, x))
        entry.note += "lower bound pinned at the parameter-space edge; ";
    else if (!lower.empty() && pure_single_tail(family, lower.front().cut))
        entry.alpha_L = lower.front().p_hi;
    else
        entry.note += "alpha_L not defined (infinite support side); ";

    if (upper_bound_void(family, x))
        entry.note += "upper bound pinned at the parameter-space edge; ";
    else if (!upper.empty() && pure_single_tail(family, upper.back().cut))
        entry.alpha_U = upper.back().p_lo;
    else
        entry.note += "alpha_U not defined (infinite support); ";

    // Values attained by the p-value on each side of the plateau. The
    // window-edge segments extend below the window, where the p-value keeps
    // decaying; their value ranges are extended down to 0.
    std::vector<std::pair<double, double>> vals;
    const auto add_side = [&](const std::vector<Segment>& side) {
        for (std::size_t i = 0; i < side.size(); ++i) {
            const Segment& s = side[i];
            if (s.cut.whole_support()) continue;
            const SegmentMin m = pieces->branch_min(s);
            double lo = m.p_min;
            const double hi = std::max(s.p_lo, s.p_hi);
            const bool window_edge = (&side == &pieces->lower() && i == 0) ||
                                     (&side == &pieces->upper() && i + 1 == side.size());
            if (window_edge) lo = 0.0;
            vals.emplace_back(lo, hi);
        }
    };
    add_side(lower);
    add_side(upper);
    entry.alpha_nest = first_value_gap(std::move(vals), 1e-12, 1.0 - 1e-12);
    return entry;
}

}  // namespace detail

/// Per-x and family-wide nestedness thresholds. x_max bounds the x range
/// for families with unbounded support (required there, optional for the
/// binomial). Per-x failures are recorded in the entry note instead of
/// aborting the report.
inline NestednessReport nestedness_thresholds(TestKind kind, const Family& family,
                                              long long x_max = -1, int threads = 1) {
    if (kind == TestKind::fiducial)
        throw std::invalid_argument("nestedness_thresholds: fiducial intervals are strictly nested");
    long long x_lo = family.support_min();
    long long x_hi;
    if (family.has_finite_support())
        x_hi = x_max >= 0 ? std::min(x_max, family.support_max()) : family.support_max();
    else if (x_max >= x_lo)
        x_hi = x_max;
    else
        throw std::invalid_argument("nestedness_thresholds: x_max required for unbounded support");

    NestednessReport report{kind, family, {}, std::nullopt, std::nullopt, std::nullopt};
    report.entries.resize(static_cast<std::size_t>(x_hi - x_lo + 1));
    detail::parallel_for(x_hi - x_lo + 1, threads, [&](long long i) {
        const long long x = x_lo + i;
        try {
            report.entries[static_cast<std::size_t>(i)] = detail::nestedness_entry(kind, family, x);
        } catch (const std::exception& e) {
            report.entries[static_cast<std::size_t>(i)] = {x, std::nullopt, std::nullopt,
                                                           std::nullopt, std::string("failed: ") + e.what()};
        }
    });

    const auto fold_min = [](std::optional<double>& acc, const std::optional<double>& v) {
        if (v) acc = acc ? std::min(*acc, *v) : *v;
    };
    for (const auto& e : report.entries) {
        fold_min(report.alpha_L, e.alpha_L);
        fold_min(report.alpha_U, e.alpha_U);
        fold_min(report.alpha_nest, e.alpha_nest);
    }
    return report;
}

struct BimonotonicityViolation {
    double theta0 = 0.0;   // earliest theta in the segment where the branch slopes the wrong way
    double theta_r = 0.0;  // stationary point of the segment's branch (root of the gap-mass derivative)
    char side = 'l';       // 'l' below the plateau, 'u' above
    double segment_lo = 0.0, segment_hi = 0.0;
};

/// Locates every constant-cut segment whose p-value branch slopes the
/// wrong way somewhere: below the plateau the branch must rise, above it
/// fall; a branch with an interior stationary point theta_r violates this
/// on the segment part before (side l) or after (side u) theta_r.
inline std::vector<BimonotonicityViolation> bimonotonicity_check(
    TestKind kind, const Family& family, long long x, std::pair<double, double> theta_window) {
    if (kind == TestKind::fiducial)
        throw std::invalid_argument("bimonotonicity_check: fiducial p-values are bimonotone");
    family.require_x(x);
    const detail::PValuePieces pieces(kind, family, x, theta_window.first, theta_window.second);

    std::vector<BimonotonicityViolation> out;
    for (const detail::Segment& s : pieces.lower()) {
        if (!detail::hole_is_interior(family, s.cut)) continue;
        const double tr = detail::gap_stationary_point(family, s.cut, s.lo, s.hi);
        if (s.lo < tr)  // branch decreasing on [lo, min(hi, tr))
            out.push_back({s.lo, tr, 'l', s.lo, s.hi});
    }
    for (const detail::Segment& s : pieces.upper()) {
        if (!detail::hole_is_interior(family, s.cut)) continue;
        const double tr = detail::gap_stationary_point(family, s.cut, s.lo, s.hi);
        if (s.hi > tr)  // branch increasing on (max(lo, tr), hi]
            out.push_back({std::max(s.lo, tr), tr, 'u', s.lo, s.hi});
    }
    return out;
}

/// Maximal open gaps strictly inside (lower, upper) of the inverted
/// interval where the p-value drops to alpha or below: the holes that make
/// {theta : p > alpha} disconnected.
inline std::vector<std::pair<double, double>> holes(TestKind kind, const Family& family,
                                                    long long x, double alpha) {
    if (kind == TestKind::fiducial)
        throw std::invalid_argument("holes: fiducial super-level sets are connected");
    detail::require_alpha(alpha);
    family.require_x(x);

    const detail::BoundSolver solver(kind, family, x, alpha);
    const double L = solver.lower(alpha), U = solver.upper(alpha);
    if (!(L < U)) return {};
    const detail::PValuePieces& pieces = solver.pieces();

    std::vector<std::pair<double, double>> sub;  // {p <= alpha} pieces, ascending
    const auto add_segment = [&](const detail::Segment& s) {
        const detail::SegmentMin m = pieces.branch_min(s);
        if (m.p_min > alpha) return;
        const auto f = [&](double t) { return pieces.branch_value(s, t) - alpha; };
        const double pivot = m.interior ? m.theta_r : (s.p_lo <= s.p_hi ? s.lo : s.hi);
        double r1 = s.lo, r2 = s.hi;
        if (s.p_lo > alpha)
            r1 = detail::bisect_root(f, s.lo, pivot, s.p_lo - alpha, m.p_min - alpha,
                                     detail::interval_tol);
        if (s.p_hi > alpha)
            r2 = detail::bisect_root(f, pivot, s.hi, m.p_min - alpha, s.p_hi - alpha,
                                     detail::interval_tol);
        if (r1 < r2) sub.emplace_back(r1, r2);
    };
    for (const auto& s : pieces.lower()) add_segment(s);
    for (const auto& s : pieces.upper()) add_segment(s);

    std::vector<std::pair<double, double>> out;
    for (auto [lo, hi] : sub) {
        lo = std::max(lo, L);
        hi = std::min(hi, U);
        if (!(hi - lo > detail::breakpoint_tol(lo))) continue;
        if (!out.empty() && lo - out.back().second <= 2.0 * detail::breakpoint_tol(lo))
            out.back().second = hi;  // contiguous through a breakpoint
        else
            out.emplace_back(lo, hi);
    }
    // Gaps must lie strictly inside the interval.
    std::vector<std::pair<double, double>> inner;
    for (auto [lo, hi] : out) {
        lo = std::max(lo, L);
        hi = std::min(hi, U);
        if (lo <= L + detail::breakpoint_tol(L)) lo = std::min(hi, L + detail::breakpoint_tol(L));
        if (hi >= U - detail::breakpoint_tol(U)) hi = std::max(lo, U - detail::breakpoint_tol(U));
        if (hi - lo > detail::breakpoint_tol(lo)) inner.emplace_back(lo, hi);
    }
    return inner;
}

}  // namespace exactci

#endif  // EXACTCI_DIAGNOSTICS_HPP
