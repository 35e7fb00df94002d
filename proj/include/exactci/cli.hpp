#ifndef EXACTCI_CLI_HPP
#define EXACTCI_CLI_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exactci/acceptance.hpp"
#include "exactci/diagnostics.hpp"
#include "exactci/family.hpp"
#include "exactci/grid.hpp"
#include "exactci/intervals.hpp"
#include "exactci/oracle.hpp"
#include "exactci/statistics.hpp"

namespace exactci {
namespace cli {

using nlohmann::json;

/// All numeric output is serialized to 12 significant digits with a '.'
/// decimal separator, independent of any locale.
inline std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline json json_num(double v) {
    if (!std::isfinite(v)) return json(fmt_num(v));
    return json(std::stod(fmt_num(v)));
}

inline int env_threads() {
    const char* s = std::getenv("EXACTINF_THREADS");
    if (!s || !*s) return 1;
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (!end || *end != '\0' || v < 1 || v > 256)
        throw std::invalid_argument("EXACTINF_THREADS must be an integer in [1, 256]");
    return static_cast<int>(v);
}

struct FamilyOpts {
    std::string name;
    long long n = -1;
    long long k = -1;

    Family make() const {
        if (name == "binomial") {
            if (n < 1) throw std::invalid_argument("--family binomial requires --n >= 1");
            return Family::binomial(n);
        }
        if (name == "poisson") return Family::poisson();
        if (name == "negbinomial" || name == "neg-binomial") {
            if (k < 1) throw std::invalid_argument("--family negbinomial requires --k >= 1");
            return Family::neg_binomial(k);
        }
        throw std::invalid_argument("unknown family '" + name +
                                    "' (expected binomial, poisson, or negbinomial)");
    }
};

inline void add_family_opts(CLI::App* cmd, FamilyOpts& f) {
    cmd->add_option("--family", f.name, "binomial | poisson | negbinomial")->required();
    cmd->add_option("--n", f.n, "number of trials (binomial)");
    cmd->add_option("--k", f.k, "required successes (negbinomial)");
}

struct Output {
    std::string path;  // empty = stdout

    void write(std::ostream& out, const std::string& text) const {
        if (path.empty()) {
            out << text;
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::invalid_argument("cannot open output file '" + path + "'");
        f << text;
    }
};

inline json family_json(const Family& family) {
    json j;
    switch (family.kind()) {
        case FamilyKind::binomial:
            j = {{"name", "binomial"}, {"n", family.trials()}};
            break;
        case FamilyKind::poisson: j = {{"name", "poisson"}}; break;
        default: j = {{"name", "negbinomial"}, {"k", family.successes()}}; break;
    }
    return j;
}

// ---------------------------------------------------------------- pvalue

struct PvalueArgs {
    FamilyOpts family;
    std::string test;
    long long x = 0;
    double theta0 = 0.0;
    std::string format = "text";
    Output output;
};

inline std::string run_pvalue(const PvalueArgs& a) {
    const Family family = a.family.make();
    const TestKind kind = parse_test_kind(a.test);
    const double p = pvalue(kind, family, a.theta0, a.x);

    std::optional<AcceptanceCut> cut;
    bool near_breakpoint = false;
    double left = p, right = p;
    if (kind != TestKind::fiducial) {
        cut = acceptance_cut(kind, family, a.theta0, a.x);
        const double eps = detail::jump_probe_eps(a.theta0);
        AcceptanceCut cl = *cut, cr = *cut;
        if (family.contains_theta(a.theta0 - eps))
            cl = acceptance_cut(kind, family, a.theta0 - eps, a.x);
        if (family.contains_theta(a.theta0 + eps))
            cr = acceptance_cut(kind, family, a.theta0 + eps, a.x);
        if (cl != cr) {
            near_breakpoint = true;
            left = detail::cut_tails_at(family, a.theta0, cl);
            right = detail::cut_tails_at(family, a.theta0, cr);
        }
    }

    if (a.format == "json") {
        json j = {{"schema", 1},
                  {"command", "pvalue"},
                  {"family", family_json(family)},
                  {"test", to_string(kind)},
                  {"x", a.x},
                  {"theta0", json_num(a.theta0)},
                  {"pvalue", json_num(p)}};
        if (cut) {
            j["k1"] = cut->k1 == AcceptanceCut::no_upper ? json(nullptr) : json(cut->k1);
            j["k2"] = json(cut->k2);
            j["x_theta"] = json(cut->x_theta);
        }
        j["near_breakpoint"] = near_breakpoint;
        if (near_breakpoint) {
            j["left_limit"] = json_num(left);
            j["right_limit"] = json_num(right);
        }
        return j.dump(2) + "\n";
    }

    std::ostringstream os;
    os << "pvalue = " << fmt_num(p) << "\n";
    if (cut) {
        os << "k1 = "
           << (cut->k1 == AcceptanceCut::no_upper ? std::string("inf") : std::to_string(cut->k1))
           << "\nk2 = " << cut->k2 << "\nx_theta = " << cut->x_theta << "\n";
    }
    if (near_breakpoint)
        os << "theta0 is at a breakpoint: left_limit = " << fmt_num(left)
           << ", right_limit = " << fmt_num(right) << "\n";
    return os.str();
}

// ----------------------------------------------------------------- curve

struct CurveArgs {
    FamilyOpts family;
    std::string test;
    long long x = 0;
    std::string theta_grid;
    std::string format = "csv";
    Output output;
};

inline std::string run_curve(const CurveArgs& a) {
    const Family family = a.family.make();
    const TestKind kind = parse_test_kind(a.test);
    const std::vector<double> grid = GridSpec::parse(a.theta_grid).theta_points(family);
    const PValueCurve curve = pvalue_curve(kind, family, a.x, grid);

    if (a.format == "json") {
        json pts = json::array();
        for (std::size_t i = 0; i < curve.grid.size(); ++i)
            pts.push_back({{"theta", json_num(curve.grid[i])},
                           {"pvalue", json_num(curve.values[i])}});
        json jumps = json::array();
        for (const auto& jmp : curve.jumps)
            jumps.push_back({{"theta", json_num(jmp.theta)},
                             {"left", json_num(jmp.left)},
                             {"right", json_num(jmp.right)}});
        json j = {{"schema", 1},
                  {"command", "curve"},
                  {"family", family_json(family)},
                  {"test", to_string(kind)},
                  {"x", a.x},
                  {"points", pts},
                  {"jumps", jumps}};
        j["plateau"] = curve.plateau
                           ? json({{"lo", json_num(curve.plateau->first)},
                                   {"hi", json_num(curve.plateau->second)}})
                           : json(nullptr);
        return j.dump(2) + "\n";
    }

    // CSV rows ordered by theta; every jump contributes two extra rows
    // carrying its one-sided limits.
    std::ostringstream os;
    os << "theta,pvalue,is_jump,left_limit,right_limit\n";
    std::size_t jp = 0;
    const auto emit_jump = [&](const PValueJump& jmp) {
        os << fmt_num(jmp.theta) << ',' << fmt_num(jmp.left) << ",1," << fmt_num(jmp.left)
           << ',' << fmt_num(jmp.right) << "\n";
        os << fmt_num(jmp.theta) << ',' << fmt_num(jmp.right) << ",1," << fmt_num(jmp.left)
           << ',' << fmt_num(jmp.right) << "\n";
    };
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        while (jp < curve.jumps.size() && curve.jumps[jp].theta < curve.grid[i]) {
            emit_jump(curve.jumps[jp]);
            ++jp;
        }
        const double p = curve.values[i];
        os << fmt_num(curve.grid[i]) << ',' << fmt_num(p) << ",0," << fmt_num(p) << ','
           << fmt_num(p) << "\n";
    }
    while (jp < curve.jumps.size()) emit_jump(curve.jumps[jp++]);
    return os.str();
}

// -------------------------------------------------------------- interval

struct IntervalArgs {
    FamilyOpts family;
    std::string test;
    long long x = 0;
    double alpha = 0.0;
    std::string format = "text";
    Output output;
};

inline std::string run_interval(const IntervalArgs& a) {
    const Family family = a.family.make();
    const TestKind kind = parse_test_kind(a.test);
    const ExactInterval iv = kind == TestKind::fiducial
                                 ? fiducial_interval(family, a.x, a.alpha)
                                 : inverted_interval(kind, family, a.x, a.alpha);

    if (a.format == "json") {
        json j = {{"schema", 1},
                  {"command", "interval"},
                  {"family", family_json(family)},
                  {"test", to_string(kind)},
                  {"x", a.x},
                  {"alpha", json_num(a.alpha)},
                  {"lower", json_num(iv.lower)},
                  {"upper", json_num(iv.upper)},
                  {"width", json_num(iv.width())}};
        if (iv.tail_split)
            j["tail_split"] = {json_num(iv.tail_split->first), json_num(iv.tail_split->second)};
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    os << "lower = " << fmt_num(iv.lower) << "\nupper = " << fmt_num(iv.upper)
       << "\nwidth = " << fmt_num(iv.width()) << "\n";
    if (iv.tail_split)
        os << "tail_split = (" << fmt_num(iv.tail_split->first) << ", "
           << fmt_num(iv.tail_split->second) << ")\n";
    return os.str();
}

// ---------------------------------------------------------- bounds_curve

struct BoundsCurveArgs {
    FamilyOpts family;
    std::string test;
    long long x = 0;
    std::string alpha_grid;
    double flat_tol = 1e-9;
    std::string format = "csv";
    Output output;
};

inline std::string run_bounds_curve(const BoundsCurveArgs& a) {
    const Family family = a.family.make();
    const TestKind kind = parse_test_kind(a.test);
    const std::vector<double> alphas = GridSpec::parse(a.alpha_grid).points();
    const auto curve = bounds_curve(kind, family, a.x, alphas, a.flat_tol);

    if (a.format == "json") {
        json pts = json::array();
        for (const auto& p : curve)
            pts.push_back({{"alpha", json_num(p.alpha)},
                           {"lower", json_num(p.lower)},
                           {"upper", json_num(p.upper)},
                           {"flat", p.flat_lower && p.flat_upper}});
        json j = {{"schema", 1},
                  {"command", "bounds_curve"},
                  {"family", family_json(family)},
                  {"test", to_string(kind)},
                  {"x", a.x},
                  {"points", pts}};
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    os << "alpha,lower,upper,flat\n";
    for (const auto& p : curve)
        os << fmt_num(p.alpha) << ',' << fmt_num(p.lower) << ',' << fmt_num(p.upper) << ','
           << (p.flat_lower && p.flat_upper ? 1 : 0) << "\n";
    return os.str();
}

// ------------------------------------------------------------ nestedness

struct NestednessArgs {
    FamilyOpts family;
    std::string test;
    long long x_max = -1;
    std::string n_range;  // "lo:hi" sweep of binomial n
    Output output;
};

inline std::string run_nestedness(const NestednessArgs& a) {
    const TestKind kind = parse_test_kind(a.test);
    const int threads = env_threads();

    if (!a.n_range.empty()) {
        if (a.family.name != "binomial")
            throw std::invalid_argument("--n-range is only meaningful for --family binomial");
        const auto colon = a.n_range.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("--n-range expects lo:hi");
        const long long lo = std::stoll(a.n_range.substr(0, colon));
        const long long hi = std::stoll(a.n_range.substr(colon + 1));
        if (lo < 1 || hi < lo) throw std::invalid_argument("--n-range expects 1 <= lo <= hi");
        json per_n = json::array();
        for (long long n = lo; n <= hi; ++n) {
            const NestednessReport r =
                nestedness_thresholds(kind, Family::binomial(n), -1, threads);
            per_n.push_back({{"n", n},
                             {"alpha_nest", r.alpha_nest ? json_num(*r.alpha_nest) : json(nullptr)}});
        }
        json j = {{"schema", 1},
                  {"command", "nestedness"},
                  {"family", "binomial"},
                  {"test", to_string(kind)},
                  {"per_n", per_n}};
        return j.dump(2) + "\n";
    }

    const Family family = a.family.make();
    const NestednessReport r = nestedness_thresholds(kind, family, a.x_max, threads);
    const auto opt = [](const std::optional<double>& v) {
        return v ? json_num(*v) : json(nullptr);
    };
    json entries = json::array();
    for (const auto& e : r.entries) {
        json je = {{"x", e.x},
                   {"alpha_L", opt(e.alpha_L)},
                   {"alpha_U", opt(e.alpha_U)},
                   {"alpha_nest", opt(e.alpha_nest)}};
        if (!e.note.empty()) je["note"] = e.note;
        entries.push_back(je);
    }
    json j = {{"schema", 1},
              {"command", "nestedness"},
              {"family", family_json(family)},
              {"test", to_string(kind)},
              {"entries", entries},
              {"alpha_L", opt(r.alpha_L)},
              {"alpha_U", opt(r.alpha_U)},
              {"alpha_nest", opt(r.alpha_nest)}};
    return j.dump(2) + "\n";
}

// -------------------------------------------------------------- coverage

struct CoverageArgs {
    FamilyOpts family;
    std::string test;
    double alpha = 0.0;
    std::string theta_grid;
    std::string format = "csv";
    Output output;
};

inline std::string run_coverage(const CoverageArgs& a) {
    const Family family = a.family.make();
    const TestKind kind = parse_test_kind(a.test);
    const std::vector<double> grid = GridSpec::parse(a.theta_grid).theta_points(family);
    const CoverageProfile prof = exact_coverage(kind, family, a.alpha, grid, env_threads());

    if (a.format == "json") {
        json pts = json::array();
        for (std::size_t i = 0; i < prof.theta_grid.size(); ++i)
            pts.push_back({{"theta", json_num(prof.theta_grid[i])},
                           {"coverage", json_num(prof.coverage[i])}});
        json j = {{"schema", 1},
                  {"command", "coverage"},
                  {"family", family_json(family)},
                  {"test", to_string(kind)},
                  {"alpha", json_num(a.alpha)},
                  {"min_coverage", json_num(prof.min_coverage)},
                  {"argmin_theta", json_num(prof.argmin_theta)},
                  {"points", pts}};
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    os << "theta,coverage\n";
    for (std::size_t i = 0; i < prof.theta_grid.size(); ++i)
        os << fmt_num(prof.theta_grid[i]) << ',' << fmt_num(prof.coverage[i]) << "\n";
    return os.str();
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    FamilyOpts family;
    std::string suite;
    double alpha = 0.05;
    double delta = 1e-3;
    long long x_max = -1;
    Output output;
};

inline std::vector<double> default_theta_grid(const Family& family, long long count) {
    GridSpec g;
    g.count = count;
    if (std::isfinite(family.theta_max())) {
        g.lo = family.theta_min();
        g.hi = family.theta_max();
    } else {
        g.lo = 0.05;
        g.hi = 30.0;
    }
    return g.theta_points(family);
}

inline std::pair<int, std::string> run_verify(const VerifyArgs& a) {
    const Family family = a.family.make();
    std::ostringstream os;
    bool pass = true;

    if (a.suite == "minimality") {
        std::vector<long long> xs;
        const long long hi = family.has_finite_support()
                                 ? family.support_max()
                                 : (a.x_max >= family.support_min() ? a.x_max
                                                                    : family.support_min() + 30);
        for (long long x = family.support_min(); x <= hi; ++x) xs.push_back(x);
        const MinimalityReport rep = minimality_probe(
            family, a.alpha, xs, a.delta, default_theta_grid(family, 2001), env_threads());
        os << "bounds monotone in x: " << (rep.bounds_monotone ? "ok" : "FAIL") << "\n";
        for (const auto& v : rep.verdicts) {
            const bool ok = v.inward_breaks_coverage && v.outward_keeps_coverage;
            if (!ok)
                os << "x=" << v.x << " side=" << v.side
                   << " inward_breaks=" << v.inward_breaks_coverage
                   << " outward_keeps=" << v.outward_keeps_coverage
                   << " worst_coverage=" << fmt_num(v.worst_coverage) << "\n";
        }
        pass = rep.all_pass();
        os << "suite minimality: " << (pass ? "PASS" : "FAIL") << "\n";
    } else if (a.suite == "enumeration") {
        if (family.has_finite_support() && family.support_max() > 64)
            throw std::invalid_argument("enumeration suite is meant for small supports (n <= 64)");
        std::vector<double> grid;
        const double lo = 0.0137;
        const double hi = std::isfinite(family.theta_max()) ? 0.9871 : 24.9871;
        for (int i = 0; i < 50; ++i) grid.push_back(lo + (hi - lo) * (2 * i + 1) / 100.0);
        const long long x_max =
            family.has_finite_support() ? -1 : (a.x_max >= 0 ? a.x_max : 40);
        double worst = 0.0;
        for (TestKind kind : {TestKind::fiducial, TestKind::sterne, TestKind::blaker,
                              TestKind::likelihood_ratio, TestKind::score}) {
            const double err = enumeration_max_error(kind, family, grid, x_max);
            os << "test " << to_string(kind) << ": max |cut - enumeration| = " << fmt_num(err)
               << "\n";
            worst = std::max(worst, err);
        }
        pass = worst <= 1e-12;
        os << "suite enumeration: " << (pass ? "PASS" : "FAIL") << "\n";
    } else if (a.suite == "coverage") {
        const auto grid = default_theta_grid(family, 2001);
        for (TestKind kind : {TestKind::fiducial, TestKind::sterne, TestKind::blaker,
                              TestKind::likelihood_ratio, TestKind::score}) {
            const CoverageProfile prof =
                exact_coverage(kind, family, a.alpha, grid, env_threads());
            const bool ok = prof.min_coverage >= 1.0 - a.alpha;
            pass = pass && ok;
            os << "test " << to_string(kind) << ": min coverage = " << fmt_num(prof.min_coverage)
               << " at theta = " << fmt_num(prof.argmin_theta) << (ok ? "" : " FAIL") << "\n";
        }
        os << "suite coverage: " << (pass ? "PASS" : "FAIL") << "\n";
    } else {
        throw std::invalid_argument("unknown suite '" + a.suite +
                                    "' (expected minimality, enumeration, or coverage)");
    }
    return {pass ? 0 : 1, os.str()};
}

// ------------------------------------------------------------ entry point

/// Parses and runs one command. Returns the process exit code: 0 success,
/// 1 verification failure, 2 usage or domain error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
    CLI::App app{"exact tests, confidence intervals and diagnostics for discrete families",
                 "exactci"};
    app.require_subcommand(1);

    PvalueArgs pv;
    CLI::App* c_pv = app.add_subcommand("pvalue", "p-value of a test at one null value");
    add_family_opts(c_pv, pv.family);
    c_pv->add_option("--test", pv.test, "fiducial | sterne | blaker | lr | score")->required();
    c_pv->add_option("--x", pv.x, "observed value")->required();
    c_pv->add_option("--theta0", pv.theta0, "null parameter value")->required();
    c_pv->add_option("--format", pv.format, "text | json");
    c_pv->add_option("--output", pv.output.path, "output file (default stdout)");

    CurveArgs cv;
    CLI::App* c_cv = app.add_subcommand("curve", "p-value function over a theta grid");
    add_family_opts(c_cv, cv.family);
    c_cv->add_option("--test", cv.test)->required();
    c_cv->add_option("--x", cv.x)->required();
    c_cv->add_option("--theta-grid", cv.theta_grid, "lo:hi:count")->required();
    c_cv->add_option("--format", cv.format, "csv | json");
    c_cv->add_option("--output", cv.output.path);

    IntervalArgs iv;
    CLI::App* c_iv = app.add_subcommand("interval", "confidence interval for one observation");
    add_family_opts(c_iv, iv.family);
    c_iv->add_option("--test", iv.test)->required();
    c_iv->add_option("--x", iv.x)->required();
    c_iv->add_option("--alpha", iv.alpha)->required();
    c_iv->add_option("--format", iv.format, "text | json");
    c_iv->add_option("--output", iv.output.path);

    BoundsCurveArgs bc;
    CLI::App* c_bc = app.add_subcommand("bounds_curve", "interval bounds over an alpha grid");
    add_family_opts(c_bc, bc.family);
    c_bc->add_option("--test", bc.test)->required();
    c_bc->add_option("--x", bc.x)->required();
    c_bc->add_option("--alpha-grid", bc.alpha_grid, "lo:hi:count")->required();
    c_bc->add_option("--flat-tol", bc.flat_tol,
                     "relative tolerance for the flat flag (default 1e-9)");
    c_bc->add_option("--format", bc.format, "csv | json");
    c_bc->add_option("--output", bc.output.path);

    NestednessArgs ns;
    CLI::App* c_ns = app.add_subcommand("nestedness", "nestedness thresholds per x (JSON)");
    add_family_opts(c_ns, ns.family);
    c_ns->add_option("--test", ns.test)->required();
    c_ns->add_option("--x-max", ns.x_max, "largest x (required for unbounded supports)");
    c_ns->add_option("--n-range", ns.n_range, "sweep binomial n over lo:hi, report alpha_nest(n)");
    c_ns->add_option("--output", ns.output.path);

    CoverageArgs cov;
    CLI::App* c_cov = app.add_subcommand("coverage", "exact coverage over a theta grid");
    add_family_opts(c_cov, cov.family);
    c_cov->add_option("--test", cov.test)->required();
    c_cov->add_option("--alpha", cov.alpha)->required();
    c_cov->add_option("--theta-grid", cov.theta_grid, "lo:hi:count")->required();
    c_cov->add_option("--format", cov.format, "csv | json");
    c_cov->add_option("--output", cov.output.path);

    VerifyArgs vf;
    CLI::App* c_vf = app.add_subcommand("verify", "run a built-in verification suite");
    add_family_opts(c_vf, vf.family);
    c_vf->add_option("--suite", vf.suite, "minimality | enumeration | coverage")->required();
    c_vf->add_option("--alpha", vf.alpha, "level for minimality/coverage (default 0.05)");
    c_vf->add_option("--delta", vf.delta, "perturbation size for minimality (default 1e-3)");
    c_vf->add_option("--x-max", vf.x_max, "x truncation for unbounded supports");
    c_vf->add_option("--output", vf.output.path);

    std::vector<const char*> argv;
    argv.push_back("exactci");
    for (const auto& s : args) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (c_pv->parsed()) {
            pv.output.write(out, run_pvalue(pv));
        } else if (c_cv->parsed()) {
            cv.output.write(out, run_curve(cv));
        } else if (c_iv->parsed()) {
            iv.output.write(out, run_interval(iv));
        } else if (c_bc->parsed()) {
            bc.output.write(out, run_bounds_curve(bc));
        } else if (c_ns->parsed()) {
            ns.output.write(out, run_nestedness(ns));
        } else if (c_cov->parsed()) {
            cov.output.write(out, run_coverage(cov));
        } else if (c_vf->parsed()) {
            const auto [code, text] = run_verify(vf);
            vf.output.write(out, text);
            return code;
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace cli
}  // namespace exactci

#endif  // EXACTCI_CLI_HPP
