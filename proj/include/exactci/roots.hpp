#ifndef EXACTCI_ROOTS_HPP
#define EXACTCI_ROOTS_HPP

#include <cmath>
#include <stdexcept>
#include <utility>

namespace exactci {
namespace detail {

/// Stopping rule for interval-halving searches: the bracket is small enough
/// once |hi - lo| <= abs_tol + rel_tol * |midpoint|.
struct RootTol {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;

    bool converged(double lo, double hi) const {
        const double mid = 0.5 * (lo + hi);
        return hi - lo <= abs_tol + rel_tol * std::fabs(mid);
    }
};

/// Bracketed bisection for a root of f. f(lo) and f(hi) must have opposite
/// signs (either may be zero). Monotonicity is not required; with multiple
/// sign changes the returned root is one of them.
template <class F>
double bisect_root(F&& f, double lo, double hi, double flo, double fhi,
                   RootTol tol = {}) {
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::invalid_argument("bisect_root: endpoints do not bracket a sign change");
    for (int it = 0; it < 400 && !tol.converged(lo, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

template <class F>
double bisect_root(F&& f, double lo, double hi, RootTol tol = {}) {
    return bisect_root(f, lo, hi, f(lo), f(hi), tol);
}

/// Boundary of a monotone boolean predicate: pred(lo) != pred(hi) is
/// required; returns the pair (last theta with pred == pred(lo),
/// first theta with pred == pred(hi)) down to the given tolerance.
template <class Pred>
std::pair<double, double> bisect_predicate(Pred&& pred, double lo, double hi,
                                           bool at_lo, RootTol tol = {}) {
    for (int it = 0; it < 400 && !tol.converged(lo, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid) == at_lo)
            lo = mid;
        else
            hi = mid;
    }
    return {lo, hi};
}

}  // namespace detail
}  // namespace exactci

#endif  // EXACTCI_ROOTS_HPP
