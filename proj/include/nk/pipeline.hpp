#ifndef NK_PIPELINE_HPP
#define NK_PIPELINE_HPP

#include "nk/fourier.hpp"
#include "nk/hypothesis.hpp"
#include "nk/kernel.hpp"
#include "nk/newton.hpp"
#include "nk/operator.hpp"
#include "nk/poly.hpp"
#include "nk/report.hpp"
#include "nk/sublevel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace nk {

enum ExitCode : int {
    exit_pass = 0,
    exit_usage = 1,
    exit_hypothesis = 2,
    exit_budget = 3,
    exit_check_failed = 4,
};

inline const std::vector<std::string>& all_estimate_checks()
{
    static const std::vector<std::string> c
        = {"sublevel", "lemma41", "lemma42", "fourier", "multiplier", "symbols", "operator"};
    return c;
}

inline const std::map<std::string, double>& default_tolerances()
{
    static const std::map<std::string, double> t = {
        {"cancellation", 1e-10},       // absolute line-integral residual
        {"pairing", 1e-3},             // pairing vs truncated integral
        {"peeling", 1e-12},            // pairing under reversed peeling order
        {"sublevel_delta", 0.05},      // |delta_hat - delta0|
        {"sublevel_logpow", 0.3},      // |(m-1)_hat - (m-1)|
        {"lemma42_agreement", 0.05},   // relative gap between estimators
        {"fourier_small_spread", 2.0}, // max/min of C_small over pieces
        {"fourier_refine", 0.10},      // rho_fit change under refinement
        {"multiplier_uniformity", 0.10},
        {"multiplier_grid", 0.05},
        {"symbol_uniformity", 0.10},
        {"operator_uniformity", 0.10},
        {"operator_plancherel", 1e-6},
    };
    return t;
}

struct RunConfig {
    std::string poly;
    int nvars = 0; // 0: highest variable index in poly
    double radius = 0.5;
    std::vector<int> L = {8, 12, 16, 20};
    std::uint64_t seed = 1;
    std::string output_dir = "nk-out";

    int hypothesis_samples = 1000;
    long long hypothesis_max_evaluations = 0;

    int grid = 32;              // piece-bound grid density per factor of two
    std::vector<int> kernel_j;  // per-axis indices of checked pieces; empty: j_min, j_min+3, j_min+6
    int pairing_L = 0;          // truncation compared with the pairing; 0: 20 for n <= 2, else 10

    double sublevel_box = 1.0;
    double sublevel_eps_lo = 1e-5;
    double sublevel_eps_hi = 1e-2;
    int sublevel_points = 101;
    long long sublevel_samples = 1000000;

    int lemma_rects = 4;
    long long lemma41_samples = 100000;
    long long lemma42_budget = 200000;

    std::vector<int> fourier_j = {3, 6, 10};

    int multiplier_per_octave = 4;
    int multiplier_directions = 8;

    int symbol_max_order = 0; // 0: n
    std::vector<int> symbol_L = {8, 12, 16};

    std::vector<int> operator_L = {6, 8, 10};
    int operator_points = 4096;
    double operator_sigma = 0.05;
    double operator_radius = 0.25;

    std::vector<std::string> checks = all_estimate_checks();
    std::map<std::string, double> tolerances;

    double tolerance(const std::string& name) const
    {
        auto it = tolerances.find(name);
        return it != tolerances.end() ? it->second : default_tolerances().at(name);
    }
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline int infer_nvars(const std::string& text)
{
    static const std::regex var(R"(x(\d+))");
    int n = 0;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), var); it != std::sregex_iterator(); ++it)
        n = std::max(n, std::stoi((*it)[1].str()));
    return n;
}

inline Json to_json(const RunConfig& c)
{
    Json tol = Json::object();
    for (const auto& [k, v] : c.tolerances)
        tol[k] = v;
    return Json{{"poly", c.poly},
                {"nvars", c.nvars},
                {"radius", c.radius},
                {"L", c.L},
                {"seed", c.seed},
                {"output_dir", c.output_dir},
                {"hypothesis_samples", c.hypothesis_samples},
                {"hypothesis_max_evaluations", c.hypothesis_max_evaluations},
                {"grid", c.grid},
                {"kernel_j", c.kernel_j},
                {"pairing_L", c.pairing_L},
                {"sublevel_box", c.sublevel_box},
                {"sublevel_eps_lo", c.sublevel_eps_lo},
                {"sublevel_eps_hi", c.sublevel_eps_hi},
                {"sublevel_points", c.sublevel_points},
                {"sublevel_samples", c.sublevel_samples},
                {"lemma_rects", c.lemma_rects},
                {"lemma41_samples", c.lemma41_samples},
                {"lemma42_budget", c.lemma42_budget},
                {"fourier_j", c.fourier_j},
                {"multiplier_per_octave", c.multiplier_per_octave},
                {"multiplier_directions", c.multiplier_directions},
                {"symbol_max_order", c.symbol_max_order},
                {"symbol_L", c.symbol_L},
                {"operator_L", c.operator_L},
                {"operator_points", c.operator_points},
                {"operator_sigma", c.operator_sigma},
                {"operator_radius", c.operator_radius},
                {"checks", c.checks},
                {"tolerances", tol}};
}

/// Reads a config document; unknown keys are an error so typos do not pass silently.
inline RunConfig config_from_json(const Json& j, RunConfig c = {})
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    const Json known = to_json(c);
    for (const auto& [k, v] : j.items())
        if (!known.contains(k))
            throw ConfigError("unknown config key '" + k + "'");
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key))
                j.at(key).get_to(field);
        };
        get("poly", c.poly);
        get("nvars", c.nvars);
        get("radius", c.radius);
        get("L", c.L);
        get("seed", c.seed);
        get("output_dir", c.output_dir);
        get("hypothesis_samples", c.hypothesis_samples);
        get("hypothesis_max_evaluations", c.hypothesis_max_evaluations);
        get("grid", c.grid);
        get("kernel_j", c.kernel_j);
        get("pairing_L", c.pairing_L);
        get("sublevel_box", c.sublevel_box);
        get("sublevel_eps_lo", c.sublevel_eps_lo);
        get("sublevel_eps_hi", c.sublevel_eps_hi);
        get("sublevel_points", c.sublevel_points);
        get("sublevel_samples", c.sublevel_samples);
        get("lemma_rects", c.lemma_rects);
        get("lemma41_samples", c.lemma41_samples);
        get("lemma42_budget", c.lemma42_budget);
        get("fourier_j", c.fourier_j);
        get("multiplier_per_octave", c.multiplier_per_octave);
        get("multiplier_directions", c.multiplier_directions);
        get("symbol_max_order", c.symbol_max_order);
        get("symbol_L", c.symbol_L);
        get("operator_L", c.operator_L);
        get("operator_points", c.operator_points);
        get("operator_sigma", c.operator_sigma);
        get("operator_radius", c.operator_radius);
        get("checks", c.checks);
        if (j.contains("tolerances"))
            for (const auto& [k, v] : j.at("tolerances").items())
                c.tolerances[k] = v.get<double>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

/// Checks budgets and names; fills nvars from the polynomial when it is 0.
inline RunConfig validate(RunConfig c)
{
    if (c.poly.empty())
        throw ConfigError("no polynomial given");
    if (c.nvars == 0)
        c.nvars = infer_nvars(c.poly);
    if (c.nvars < 1 || c.nvars > max_newton_nvars)
        throw ConfigError("nvars must be between 1 and 6");
    try {
        if (parse_poly(c.poly, c.nvars).coefficient(Exponent(c.nvars, 0)) != 0)
            throw ConfigError("polynomial must vanish at the origin");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("polynomial: ") + e.what());
    }
    auto positive = [](bool ok, const char* what) {
        if (!ok)
            throw ConfigError(std::string(what) + " must be positive");
    };
    positive(c.radius > 0 && std::isfinite(c.radius), "radius");
    positive(!c.L.empty() && std::all_of(c.L.begin(), c.L.end(), [](int v) { return v > 0; }), "L");
    positive(c.hypothesis_samples > 0, "hypothesis_samples");
    positive(c.hypothesis_max_evaluations >= 0, "hypothesis_max_evaluations");
    if (c.grid < 32)
        throw ConfigError("grid must be at least 32");
    positive(c.pairing_L >= 0, "pairing_L");
    positive(c.sublevel_box > 0 && c.sublevel_eps_lo > 0 && c.sublevel_eps_hi > c.sublevel_eps_lo, "sublevel range");
    positive(c.sublevel_points >= 3, "sublevel_points");
    positive(c.sublevel_samples > 0, "sublevel_samples");
    positive(c.lemma_rects > 0 && c.lemma41_samples > 0 && c.lemma42_budget > 1, "lemma budgets");
    positive(!c.fourier_j.empty(), "fourier_j");
    positive(c.multiplier_per_octave > 0 && c.multiplier_directions > 0, "multiplier grid");
    positive(c.symbol_max_order >= 0 && !c.symbol_L.empty(), "symbol settings");
    positive(!c.operator_L.empty() && c.operator_points > 1 && c.operator_sigma > 0 && c.operator_radius > 0,
             "operator settings");
    for (const auto& ch : c.checks)
        if (std::find(all_estimate_checks().begin(), all_estimate_checks().end(), ch) == all_estimate_checks().end())
            throw ConfigError("unknown check '" + ch + "'");
    for (const auto& [k, v] : c.tolerances) {
        if (!default_tolerances().count(k))
            throw ConfigError("unknown tolerance '" + k + "'");
        positive(v > 0, "tolerance");
    }
    return c;
}

struct StageResult {
    StageResult() = default;
    explicit StageResult(std::string n, std::string st = "pass", std::string why = {})
        : name(std::move(n)), status(std::move(st)), reason(std::move(why))
    {
    }

    std::string name;
    std::string status = "pass"; // pass, fail, skipped, error
    std::string reason;
    Json report;
    std::vector<std::pair<std::string, CsvTable>> tables;
    int exit_code = exit_pass;
    double wall_seconds = 0;
};

namespace detail {

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline Json check_entry(const std::string& name, const std::string& estimator, Json budget, std::uint64_t seed)
{
    return Json{{"name", name}, {"estimator", estimator}, {"budget", std::move(budget)}, {"seed", seed}};
}

inline double relative_spread(const std::vector<double>& v)
{
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return *mn > 0 ? *mx / *mn - 1.0 : std::numeric_limits<double>::infinity();
}

inline std::vector<std::vector<int>> index_grid(int n, const std::vector<int>& values)
{
    std::vector<std::vector<int>> out;
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        std::vector<int> j(n);
        for (int l = 0; l < n; ++l)
            j[l] = values[idx[l]];
        out.push_back(j);
        int l = n - 1;
        while (l >= 0 && ++idx[l] >= values.size())
            idx[l--] = 0;
        if (l < 0)
            break;
    }
    return out;
}

inline TestFunction pairing_test_function(int n)
{
    static const double centre[] = {0.05, 0.03, 0.02, 0.015, 0.012, 0.01};
    return [n](std::span<const double> y) {
        double s = 0;
        for (int l = 0; l < n; ++l)
            s += (y[l] - centre[l]) * (y[l] - centre[l]);
        return std::exp(-s / (2 * 0.1 * 0.1));
    };
}

inline void finish(StageResult& r, const Json& checks)
{
    for (const auto& c : checks) {
        const std::string st = c.at("status");
        if (st == "fail" || st == "error") {
            r.status = "fail";
            r.exit_code = exit_check_failed;
        }
    }
}

} // namespace detail

inline MultiPoly config_poly(const RunConfig& c) { return parse_poly(c.poly, c.nvars); }

inline StageResult stage_analyze(const RunConfig& c)
{
    detail::Stopwatch sw;
    StageResult r{"analyze"};
    const MultiPoly p = config_poly(c);
    r.report = newton_report(p, newton_polyhedron(p));
    r.wall_seconds = sw.seconds();
    return r;
}

inline StageResult stage_hypotheses(const RunConfig& c)
{
    detail::Stopwatch sw;
    StageResult r{"hypotheses"};
    const MultiPoly p = config_poly(c);
    HypothesisOptions opt;
    opt.samples = c.hypothesis_samples;
    opt.seed = c.seed;
    opt.max_evaluations = c.hypothesis_max_evaluations;
    const HypothesisReport h = check_face_zero_orders(p, newton_polyhedron(p), opt);
    r.report = hypothesis_json(h, opt);
    if (!h.pass) {
        r.status = "fail";
        r.reason = "a face polynomial has a zero of order >= d(b)";
        r.exit_code = exit_hypothesis;
    } else if (h.budget_exhausted) {
        r.status = "fail";
        r.reason = "search budget exhausted before every face was screened";
        r.exit_code = exit_budget;
    }
    r.wall_seconds = sw.seconds();
    return r;
}

/// Piece bounds, cancellation residuals and the distribution pairing.
inline StageResult stage_verify_kernel(const RunConfig& c)
{
    detail::Stopwatch sw;
    StageResult r{"verify-kernel"};
    const Kernel K = example_kernel(config_poly(c), c.radius);
    const int n = K.nvars();
    std::vector<int> jv = c.kernel_j;
    if (jv.empty())
        jv = {K.j_min(), K.j_min() + 3, K.j_min() + 6};
    const double tol_c = c.tolerance("cancellation");

    Json pieces = Json::array();
    bool bounds_ok = true, cancel_ok = true;
    double worst_residual = 0;
    for (const auto& j : detail::index_grid(n, jv)) {
        const KernelPiece piece = dyadic_piece(K, j);
        if (piece.is_zero())
            continue;
        const PieceBounds b = verify_piece_bounds(piece, c.grid);
        Json e = piece_bounds_json(piece, b);
        std::vector<double> res;
        for (int axis = 1; axis <= n; ++axis) {
            res.push_back(verify_cancellation(piece, axis));
            worst_residual = std::max(worst_residual, res.back());
        }
        e["cancellation_residuals"] = res;
        bounds_ok = bounds_ok && std::isfinite(b.C_23) && std::isfinite(b.C_24) && std::isfinite(b.C_213);
        cancel_ok = cancel_ok && *std::max_element(res.begin(), res.end()) <= tol_c;
        pieces.push_back(std::move(e));
    }

    Json checks = Json::array();
    {
        Json e = detail::check_entry("piece-bounds", "geometric grid sup", Json{{"grid", c.grid}}, c.seed);
        e["measured"] = Json{{"pieces", pieces.size()}};
        e["status"] = bounds_ok ? "pass" : "fail";
        checks.push_back(e);
    }
    {
        Json e = detail::check_entry("cancellation", "mirrored Gauss-Legendre", Json{{"quad_order", 16}}, c.seed);
        e["measured"] = Json{{"max_residual", worst_residual}};
        e["tolerance"] = tol_c;
        e["status"] = cancel_ok ? "pass" : "fail";
        checks.push_back(e);
    }
    {
        detail::Stopwatch cw;
        const int PL = c.pairing_L ? c.pairing_L : (n <= 2 ? 20 : 10);
        Json e = detail::check_entry("pairing", "shell sum of piece * mixed difference",
                                     Json{{"quad_order", 16}, {"truncation_L", PL}}, c.seed);
        try {
            const TestFunction phi = detail::pairing_test_function(n);
            const PairingResult pr = pair_with_test_function(K, phi);
            PairingOptions rev;
            for (int l = n - 1; l >= 0; --l)
                rev.peeling_order.push_back(l);
            const double reversed = pair_with_test_function(K, phi, rev).value;
            const double direct = truncated_integral(TruncatedKernel(K, PL), phi);
            const double gap = std::abs(pr.value - direct), peel = std::abs(pr.value - reversed);
            e["measured"] = Json{{"pairing", pr.value},   {"abs_sum", pr.abs_sum}, {"pieces", pr.pieces},
                                 {"shells", pr.shell_values.size()}, {"truncated_integral", direct},
                                 {"gap", gap},            {"peeling_gap", peel}};
            e["tolerance"] = Json{{"pairing", c.tolerance("pairing")}, {"peeling", c.tolerance("peeling")}};
            const bool ok = pr.converged && gap <= c.tolerance("pairing")
                         && peel <= c.tolerance("peeling") * std::max(1.0, pr.abs_sum);
            e["status"] = ok ? "pass" : "fail";
        } catch (const PairingDivergence& d) {
            e["measured"] = Json{{"partial", d.partial().value}, {"shells", d.partial().shell_values.size()}};
            e["status"] = "fail";
            e["reason"] = d.what();
        }
        e["runtime_seconds"] = cw.seconds();
        checks.push_back(e);
    }
    r.report = Json{{"poly", format_poly(K.poly())},
                    {"radius", c.radius},
                    {"delta0", rational_json(K.delta0())},
                    {"j_min", K.j_min()},
                    {"pieces", pieces},
                    {"checks", checks}};
    detail::finish(r, checks);
    r.wall_seconds = sw.seconds();
    return r;
}

/**
 * The estimate checks selected in the config. Targets come from the analyze
 * report and gating from the hypotheses report.
 */
inline StageResult stage_verify_estimates(const RunConfig& c, const Json& newton, const Json& hypotheses)
{
    detail::Stopwatch sw;
    StageResult r{"verify-estimates"};
    const MultiPoly b = config_poly(c);
    const NewtonPolyhedron np = newton_polyhedron(b);
    const int n = b.nvars();
    const Rational delta0 = parse_rational(newton.at("delta0").get<std::string>());
    const int m = newton.at("multiplicity").get<int>();
    const bool nonvanishing = hypotheses.at("nonvanishing").get<bool>();
    const Kernel K = example_kernel(b, c.radius);
    auto selected = [&](const std::string& name) {
        return std::find(c.checks.begin(), c.checks.end(), name) != c.checks.end();
    };

    Rng rect_rng(c.seed, 5);
    std::vector<DyadicRect> rects;
    for (int k = 0; k < c.lemma_rects; ++k) {
        DyadicRect rect;
        for (int l = 0; l < n; ++l)
            rect.j.push_back(1 + static_cast<int>(rect_rng.next() % 15));
        rect.orthant = static_cast<unsigned>(rect_rng.next() % (1u << n));
        rects.push_back(rect);
    }

    Json checks = Json::array();
    auto run = [&](const std::string& name, auto&& body) {
        if (!selected(name))
            return;
        detail::Stopwatch cw;
        Json e;
        try {
            e = body();
        } catch (const std::exception& ex) {
            e = Json{{"name", name}, {"status", "error"}, {"reason", ex.what()}};
        }
        e["runtime_seconds"] = cw.seconds();
        checks.push_back(std::move(e));
    };

    run("sublevel", [&] {
        const auto eps = geometric_grid(c.sublevel_eps_lo, c.sublevel_eps_hi, c.sublevel_points);
        const SublevelFit f = fit_sublevel_asymptotics(b, c.sublevel_box, eps, c.sublevel_samples, c.seed);
        CsvTable t({"eps", "measure", "stderr"});
        for (std::size_t i = 0; i < f.epsilons.size(); ++i)
            t.add({f.epsilons[i], f.measures[i].value, f.measures[i].stderr_});
        r.tables.emplace_back("sublevel.csv", std::move(t));
        const double target_d = to_double(delta0), target_m = m - 1;
        Json e = detail::check_entry("sublevel", "monte-carlo + weighted least squares",
                                     Json{{"samples_per_eps", c.sublevel_samples}, {"points", c.sublevel_points}},
                                     c.seed);
        e["measured"] = Json{{"delta_hat", f.delta_hat}, {"delta_se", f.delta_se},     {"logpow_hat", f.logpow_hat},
                             {"logpow_se", f.logpow_se}, {"dropped", f.dropped.size()}};
        e["target"] = Json{{"delta0", rational_json(delta0)}, {"m_minus_1", m - 1}};
        e["tolerance"] = Json{{"delta", c.tolerance("sublevel_delta")}, {"logpow", c.tolerance("sublevel_logpow")}};
        const bool ok = std::abs(f.delta_hat - target_d) <= c.tolerance("sublevel_delta")
                     && std::abs(f.logpow_hat - target_m) <= c.tolerance("sublevel_logpow");
        e["status"] = ok ? "pass" : "fail";
        return e;
    });

    run("lemma41", [&] {
        Json rows = Json::array();
        for (const auto& rect : rects) {
            Json ratios = Json::array();
            for (double eps : {1e-1, 1e-2, 1e-3})
                ratios.push_back(lemma41_ratio(b, np, rect, eps, c.lemma41_samples, c.seed));
            rows.push_back(Json{{"j", rect.j}, {"orthant", rect.orthant}, {"ratios", ratios}});
        }
        Json e = detail::check_entry("lemma41", "monte-carlo", Json{{"samples", c.lemma41_samples}}, c.seed);
        e["measured"] = Json{{"eps", {1e-1, 1e-2, 1e-3}}, {"rectangles", rows}};
        e["status"] = "pass";
        e["reason"] = "reported only";
        return e;
    });

    run("lemma42", [&] {
        Json e = detail::check_entry("lemma42", "direct-mc vs distribution-formula",
                                     Json{{"budget", c.lemma42_budget}, {"rectangles", c.lemma_rects}}, c.seed);
        if (hypotheses.at("pass") != true) {
            e["status"] = "skipped";
            e["reason"] = "hypothesis screen failed";
            return e;
        }
        CsvTable t({"rect", "direct", "direct_stderr", "formula"});
        Json rows = Json::array();
        double worst = 0;
        bool flagged = false;
        for (std::size_t k = 0; k < rects.size(); ++k) {
            const auto d = lemma42_integral(b, to_double(delta0), rects[k], Lemma42Method::DirectMC, c.lemma42_budget,
                                            c.seed + k);
            const auto f = lemma42_integral(b, to_double(delta0), rects[k], Lemma42Method::DistributionFormula,
                                            c.lemma42_budget, c.seed + k);
            const double gap = std::abs(d.value - f.value) / std::max(std::abs(f.value), 1e-300);
            worst = std::max(worst, gap);
            flagged = flagged || d.variance_flag;
            rows.push_back(Json{{"j", rects[k].j},
                                {"orthant", rects[k].orthant},
                                {"direct", d.value},
                                {"direct_stderr", d.stderr_},
                                {"variance_flag", d.variance_flag},
                                {"formula", f.value},
                                {"relative_gap", gap}});
            t.add({static_cast<double>(k), d.value, d.stderr_, f.value});
        }
        r.tables.emplace_back("lemma42.csv", std::move(t));
        e["measured"] = Json{{"rectangles", rows}, {"max_relative_gap", worst}, {"variance_flag", flagged}};
        e["tolerance"] = c.tolerance("lemma42_agreement");
        e["status"] = worst <= c.tolerance("lemma42_agreement") ? "pass" : "fail";
        return e;
    });

    run("fourier", [&] {
        CsvTable t([&] {
            std::vector<std::string> h;
            for (int l = 1; l <= n; ++l)
                h.push_back("j" + std::to_string(l));
            h.insert(h.end(), {"axis", "u", "envelope"});
            return h;
        }());
        std::vector<double> cs, rho;
        Json rows = Json::array();
        for (const auto& j : detail::index_grid(n, c.fourier_j)) {
            const KernelPiece piece = dyadic_piece(K, j);
            if (piece.is_zero())
                continue;
            const FourierDecay d = verify_fourier_decay(piece);
            cs.push_back(d.C_small);
            rho.push_back(d.rho_fit);
            rows.push_back(Json{{"j", j}, {"C_small", d.C_small}, {"rho_fit", d.rho_fit}});
            for (int l = 0; l < n; ++l)
                for (std::size_t i = 0; i < d.axes[l].u.size(); ++i) {
                    std::vector<double> row(j.begin(), j.end());
                    row.insert(row.end(), {static_cast<double>(l + 1), d.axes[l].u[i], d.axes[l].envelope[i]});
                    t.add(row);
                }
        }
        if (cs.empty())
            throw std::runtime_error("no nonzero piece among the requested indices");
        r.tables.emplace_back("fourier.csv", std::move(t));
        // refinement on the middle piece
        const auto grid = detail::index_grid(n, c.fourier_j);
        const KernelPiece mid = dyadic_piece(K, grid[grid.size() / 2]);
        DecayOptions fine;
        fine.per_decade *= 2;
        const double r0 = verify_fourier_decay(mid).rho_fit, r1 = verify_fourier_decay(mid, fine).rho_fit;
        const double spread = *std::max_element(cs.begin(), cs.end()) / *std::min_element(cs.begin(), cs.end());
        const double refine = std::abs(r1 / r0 - 1.0);
        Json e = detail::check_entry("fourier", "tensor Gauss-Legendre transform",
                                     Json{{"per_decade", DecayOptions{}.per_decade}}, c.seed);
        e["measured"] = Json{{"pieces", rows},
                             {"C_small_spread", spread},
                             {"rho_min", *std::min_element(rho.begin(), rho.end())},
                             {"refine_piece", mid.j()},
                             {"rho_refined", r1},
                             {"rho_refine_change", refine}};
        e["tolerance"] = Json{{"C_small_spread", c.tolerance("fourier_small_spread")},
                              {"refine", c.tolerance("fourier_refine")}};
        const bool ok = spread <= c.tolerance("fourier_small_spread")
                     && *std::min_element(rho.begin(), rho.end()) > 0 && refine <= c.tolerance("fourier_refine");
        e["status"] = ok ? "pass" : "fail";
        return e;
    });

    MultiplierOptions mopt;
    mopt.per_octave = c.multiplier_per_octave;
    mopt.fixed_directions = mopt.random_directions = c.multiplier_directions;
    mopt.seed = c.seed;
    MultiplierSup msup;
    run("multiplier", [&] {
        msup = multiplier_sup_bound(K, c.L, mopt);
        MultiplierOptions fine = mopt;
        fine.per_octave *= 2;
        fine.fixed_directions *= 2;
        fine.random_directions *= 2;
        const MultiplierSup ref = multiplier_sup_bound(K, c.L, fine);
        CsvTable t({"L", "sup", "sup_refined", "abs_at_zero"});
        double grid_change = 0, zero = 0;
        for (std::size_t i = 0; i < msup.Ls.size(); ++i) {
            t.add({static_cast<double>(msup.Ls[i]), msup.sup[i], ref.sup[i], std::abs(msup.at_zero[i])});
            grid_change = std::max(grid_change, std::abs(ref.sup[i] / msup.sup[i] - 1.0));
            zero = std::max(zero, std::abs(msup.at_zero[i]));
        }
        r.tables.emplace_back("multiplier.csv", std::move(t));
        const double spread = detail::relative_spread(msup.sup);
        Json e = detail::check_entry("multiplier", "summed piece transforms on a log-polar grid",
                                     Json{{"per_octave", mopt.per_octave},
                                          {"directions", 2 * mopt.fixed_directions},
                                          {"grid_points", msup.grid_points}},
                                     c.seed);
        e["measured"] = Json{{"L", msup.Ls},
                             {"sup", msup.sup},
                             {"sup_refined", ref.sup},
                             {"relative_spread", spread},
                             {"grid_change", grid_change},
                             {"abs_at_zero", zero}};
        e["tolerance"] = Json{{"uniformity", c.tolerance("multiplier_uniformity")},
                              {"grid", c.tolerance("multiplier_grid")}};
        const bool ok = spread <= c.tolerance("multiplier_uniformity") && grid_change <= c.tolerance("multiplier_grid")
                     && zero == 0.0;
        e["status"] = ok ? "pass" : "fail";
        return e;
    });

    run("symbols", [&] {
        Json e = detail::check_entry("symbols", "moment transforms summed over pieces",
                                     Json{{"per_octave", mopt.per_octave}}, c.seed);
        if (!nonvanishing) {
            e["status"] = "skipped";
            e["reason"] = "a face polynomial vanishes off the axes";
            return e;
        }
        const int order = c.symbol_max_order ? c.symbol_max_order : n;
        const auto alphas = detail::multiindices_up_to(n, order);
        const int lmax = std::max(*std::max_element(c.L.begin(), c.L.end()),
                                  *std::max_element(c.symbol_L.begin(), c.symbol_L.end()));
        const auto grid = multiplier_grid(n, lmax + 2, mopt);
        const SymbolSups s = marcinkiewicz_check(K, c.symbol_L, alphas, grid, mopt);
        CsvTable t([&] {
            std::vector<std::string> h;
            for (int l = 1; l <= n; ++l)
                h.push_back("alpha" + std::to_string(l));
            h.insert(h.end(), {"L", "sup"});
            return h;
        }());
        Json rows = Json::array();
        double worst = 0;
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const double spread = detail::relative_spread(s.sup[a]);
            worst = std::max(worst, spread);
            rows.push_back(Json{{"alpha", alphas[a]}, {"sup", s.sup[a]}, {"relative_spread", spread}});
            for (std::size_t L = 0; L < s.Ls.size(); ++L) {
                std::vector<double> row(alphas[a].begin(), alphas[a].end());
                row.insert(row.end(), {static_cast<double>(s.Ls[L]), s.sup[a][L]});
                t.add(row);
            }
        }
        r.tables.emplace_back("symbols.csv", std::move(t));
        e["measured"] = Json{{"L", s.Ls}, {"alphas", rows}, {"max_relative_spread", worst}};
        e["tolerance"] = c.tolerance("symbol_uniformity");
        e["status"] = worst <= c.tolerance("symbol_uniformity") ? "pass" : "fail";
        return e;
    });

    run("operator", [&] {
        Json e = detail::check_entry("operator", "FFT convolution vs frequency-side Plancherel sum",
                                     Json{{"points", c.operator_points}, {"sigma", c.operator_sigma}}, c.seed);
        const double cells = std::pow(static_cast<double>(c.operator_points), n);
        if (cells > std::pow(2.0, 26)) {
            e["status"] = "skipped";
            e["reason"] = "grid of points^n exceeds the desk-scale limit of 2^26 cells";
            return e;
        }
        const Kernel KO = example_kernel(b, c.operator_radius);
        const PeriodicGrid g{n, c.operator_points, 1.0};
        const GridFunction f = gaussian(g, c.operator_sigma);
        const double fn = l2_norm(f);
        CsvTable t({"L", "space_norm", "frequency_norm", "ratio"});
        std::vector<double> ratios;
        double worst = 0;
        for (int L : c.operator_L) {
            const double space = l2_norm(apply_operator(KO, L, f));
            const double freq = gaussian_operator_norm(KO, L, c.operator_sigma);
            const double gap = freq > 0 ? std::abs(space / freq - 1.0) : std::abs(space);
            worst = std::max(worst, gap);
            ratios.push_back(space / fn);
            t.add({static_cast<double>(L), space, freq, space / fn});
        }
        r.tables.emplace_back("operator.csv", std::move(t));
        const double spread = detail::relative_spread(ratios);
        e["measured"] = Json{{"L", c.operator_L},
                             {"ratio", ratios},
                             {"relative_spread", spread},
                             {"plancherel_gap", worst},
                             {"kernel_radius", c.operator_radius}};
        e["tolerance"] = Json{{"uniformity", c.tolerance("operator_uniformity")},
                              {"plancherel", c.tolerance("operator_plancherel")}};
        const bool ok = spread <= c.tolerance("operator_uniformity") && worst <= c.tolerance("operator_plancherel");
        e["status"] = ok ? "pass" : "fail";
        return e;
    });

    r.report = Json{{"schema_version", report_schema_version},
                    {"poly", format_poly(b)},
                    {"radius", c.radius},
                    {"seed", c.seed},
                    {"checks", checks}};
    detail::finish(r, checks);
    r.wall_seconds = sw.seconds();
    return r;
}

struct RunManifest {
    Json document;
    int exit_code = exit_pass;
};

inline void write_stage(const std::filesystem::path& dir, const std::string& file, StageResult& s, Json& files)
{
    write_file(dir / file, s.report.dump(2) + "\n");
    files.push_back(file_entry(dir, file));
    for (auto& [name, table] : s.tables) {
        write_file(dir / name, table.str());
        files.push_back(file_entry(dir, name));
    }
}

/**
 * Runs analyze, hypotheses, verify-kernel and verify-estimates in order,
 * writes each report and CSV series into the output directory, and writes
 * manifest.json last. A failed hypothesis screen skips the kernel stages.
 */
inline RunManifest run_pipeline(RunConfig cfg)
{
    cfg = validate(std::move(cfg));
    const std::filesystem::path dir(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw std::runtime_error("output directory not writable: " + dir.string());

    const Json cjson = to_json(cfg);
    Json stages = Json::array(), files = Json::array();
    RunManifest out;

    auto guarded = [&](const std::string& name, auto&& body) {
        StageResult s;
        detail::Stopwatch sw;
        try {
            s = body();
        } catch (const std::exception& e) {
            s = StageResult{name, "error", e.what()};
            s.exit_code = exit_check_failed;
            s.report = Json{{"error", e.what()}};
        }
        s.wall_seconds = sw.seconds();
        return s;
    };
    auto record = [&](StageResult& s, const std::string& file) {
        Json st{{"name", s.name}, {"status", s.status}, {"wall_seconds", s.wall_seconds}};
        if (!s.reason.empty())
            st["reason"] = s.reason;
        if (!file.empty()) {
            write_stage(dir, file, s, files);
            st["report"] = file;
        }
        stages.push_back(st);
        if (s.exit_code != exit_pass && (out.exit_code == exit_pass || s.exit_code < out.exit_code))
            out.exit_code = s.exit_code;
    };

    StageResult an = guarded("analyze", [&] { return stage_analyze(cfg); });
    record(an, "newton.json");
    StageResult hy = guarded("hypotheses", [&] { return stage_hypotheses(cfg); });
    record(hy, "hypotheses.json");

    const bool gate = an.status == "pass" && hy.report.contains("pass") && hy.report.at("pass") == true;
    if (gate) {
        StageResult vk = guarded("verify-kernel", [&] { return stage_verify_kernel(cfg); });
        record(vk, "kernel.json");
        StageResult ve = guarded("verify-estimates", [&] { return stage_verify_estimates(cfg, an.report, hy.report); });
        record(ve, "estimates.json");
    } else {
        const std::string why = an.status != "pass" ? "analyze stage failed" : "hypothesis screen failed: " + hy.reason;
        for (const char* name : {"verify-kernel", "verify-estimates"}) {
            StageResult s{name, "skipped", why};
            record(s, "");
        }
    }

    out.document = Json{{"schema_version", report_schema_version},
                        {"artifact_version", artifact_version},
                        {"config_hash", sha256_hex(cjson.dump())},
                        {"config", cjson},
                        {"stages", stages},
                        {"files", files},
                        {"pass", out.exit_code == exit_pass},
                        {"exit_code", out.exit_code}};
    write_file(dir / "manifest.json", out.document.dump(2) + "\n");
    return out;
}

} // namespace nk

#endif
