#ifndef EXACTCI_GRID_HPP
#define EXACTCI_GRID_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "exactci/family.hpp"

namespace exactci {

/// Inclusive linear grid specification, parsed from "lo:hi:count".
struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    long long count = 0;

    static GridSpec parse(const std::string& s) {
        const auto c1 = s.find(':');
        const auto c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::invalid_argument("grid spec must be lo:hi:count, got '" + s + "'");
        GridSpec g;
        std::size_t used = 0;
        g.lo = std::stod(s.substr(0, c1), &used);
        if (used != c1) throw std::invalid_argument("bad grid lower bound in '" + s + "'");
        g.hi = std::stod(s.substr(c1 + 1, c2 - c1 - 1), &used);
        if (used != c2 - c1 - 1) throw std::invalid_argument("bad grid upper bound in '" + s + "'");
        g.count = std::stoll(s.substr(c2 + 1), &used);
        if (used != s.size() - c2 - 1) throw std::invalid_argument("bad grid count in '" + s + "'");
        if (g.count < 1 || !(g.lo <= g.hi))
            throw std::invalid_argument("grid spec requires lo <= hi and count >= 1");
        return g;
    }

    std::vector<double> points() const {
        std::vector<double> out(static_cast<std::size_t>(count));
        if (count == 1) {
            out[0] = lo;
            return out;
        }
        for (long long i = 0; i < count; ++i)
            out[static_cast<std::size_t>(i)] =
                lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        return out;
    }

    /// Grid points with endpoints touching the boundary of the parameter
    /// space pulled inside by a relative 1e-9.
    std::vector<double> theta_points(const Family& family) const {
        std::vector<double> pts = points();
        if (!pts.empty()) {
            const double lo_edge = family.theta_min(), hi_edge = family.theta_max();
            if (pts.front() <= lo_edge)
                pts.front() = lo_edge + 1e-9 * std::max(1.0, std::fabs(lo_edge));
            if (std::isfinite(hi_edge) && pts.back() >= hi_edge)
                pts.back() = hi_edge - 1e-9 * std::max(1.0, std::fabs(hi_edge));
        }
        for (double t : pts) family.require_theta(t);
        return pts;
    }
};

}  // namespace exactci

#endif  // EXACTCI_GRID_HPP
