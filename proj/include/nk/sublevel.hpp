#ifndef NK_SUBLEVEL_HPP
#define NK_SUBLEVEL_HPP

#include "nk/newton.hpp"
#include "nk/poly.hpp"
#include "nk/quadrature.hpp"
#include "nk/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nk {

struct Estimate {
    double value = 0;
    double stderr_ = 0;
};

/// {x : 2^-j_l < |x_l| < 2^(-j_l+1)} in one sign orthant (bit l of `orthant` set means x_l < 0).
struct DyadicRect {
    std::vector<int> j;
    unsigned orthant = 0;

    int nvars() const { return static_cast<int>(j.size()); }
    double volume() const
    {
        double v = 1;
        for (int k : j)
            v *= std::ldexp(1.0, -k);
        return v;
    }
    void sample(Rng& rng, std::vector<double>& x) const
    {
        x.resize(j.size());
        for (std::size_t l = 0; l < j.size(); ++l) {
            const double a = std::ldexp(1.0, -j[l]);
            x[l] = rng.uniform(a, 2 * a);
            if (orthant >> l & 1u)
                x[l] = -x[l];
        }
    }
};

/// Monte Carlo |{x in [-r, r]^n : |b(x)| < eps}| with binomial standard error.
inline Estimate sublevel_measure(const MultiPoly& b, double r, double eps, long long samples, std::uint64_t seed,
                                 std::uint64_t stream = 0)
{
    if (!(eps > 0.0))
        throw std::invalid_argument("eps must be positive");
    if (samples < 10000)
        throw std::invalid_argument("sublevel measure needs at least 1e4 samples");
    if (!(r > 0.0))
        throw std::invalid_argument("box radius must be positive");
    const int n = b.nvars();
    Rng rng(seed, stream);
    std::vector<double> x(n);
    long long hits = 0;
    for (long long s = 0; s < samples; ++s) {
        for (auto& v : x)
            v = rng.uniform(-r, r);
        if (std::abs(b(x)) < eps)
            ++hits;
    }
    const double vol = std::pow(2 * r, n);
    const double p = static_cast<double>(hits) / samples;
    return {vol * p, vol * std::sqrt(p * (1 - p) / samples)};
}

struct SublevelFit {
    std::vector<double> epsilons;
    std::vector<Estimate> measures;
    std::vector<double> dropped; // epsilons with no hits
    double log_c = 0;
    double delta_hat = 0;
    double logpow_hat = 0; // (m - 1) estimate
    double delta_se = 0;
    double logpow_se = 0;
    std::vector<double> residuals;
};

/// Geometric grid of `count` points from hi down to lo.
inline std::vector<double> geometric_grid(double lo, double hi, int count)
{
    if (!(lo > 0.0) || !(hi > lo) || count < 2)
        throw std::invalid_argument("bad geometric grid");
    std::vector<double> g;
    for (int i = 0; i < count; ++i)
        g.push_back(hi * std::pow(lo / hi, static_cast<double>(i) / (count - 1)));
    return g;
}

namespace detail {

// Solves the 3x3 symmetric system A x = y by Gaussian elimination; also returns A^-1.
inline std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> A, std::array<double, 3> y,
                                    std::array<std::array<double, 3>, 3>& inv)
{
    std::array<std::array<double, 6>, 3> M{};
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k)
            M[i][k] = A[i][k];
        M[i][3 + i] = 1.0;
    }
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(M[r][c]) > std::abs(M[piv][c]))
                piv = r;
        std::swap(M[c], M[piv]);
        std::swap(y[c], y[piv]);
        if (M[c][c] == 0.0)
            throw std::runtime_error("singular least-squares system");
        for (int r = 0; r < 3; ++r) {
            if (r == c)
                continue;
            const double f = M[r][c] / M[c][c];
            for (int k = 0; k < 6; ++k)
                M[r][k] -= f * M[c][k];
            y[r] -= f * y[c];
        }
    }
    std::array<double, 3> x{};
    for (int i = 0; i < 3; ++i) {
        x[i] = y[i] / M[i][i];
        for (int k = 0; k < 3; ++k)
            inv[i][k] = M[i][3 + k] / M[i][i];
    }
    return x;
}

} // namespace detail

/**
 * Weighted least squares of log V = log c + delta log eps + (m-1) log log(1/eps)
 * with weights (V / stderr)^2. Points with V <= 0 are dropped.
 */
inline SublevelFit fit_sublevel_model(const std::vector<double>& eps, const std::vector<Estimate>& measures)
{
    if (eps.size() != measures.size())
        throw std::invalid_argument("epsilons and measures differ in length");
    SublevelFit fit;
    std::array<std::array<double, 3>, 3> A{};
    std::array<double, 3> y{};
    std::vector<std::array<double, 4>> rows; // basis and target
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double e = eps[i];
        const Estimate& m = measures[i];
        if (!(e > 0.0 && e < 1.0))
            throw std::invalid_argument("epsilons must lie in (0, 1)");
        if (!(m.value > 0.0) || !(m.stderr_ > 0.0)) {
            fit.dropped.push_back(e);
            continue;
        }
        fit.epsilons.push_back(e);
        fit.measures.push_back(m);
        const double w = (m.value / m.stderr_) * (m.value / m.stderr_);
        const std::array<double, 3> phi = {1.0, std::log(e), std::log(std::log(1.0 / e))};
        const double t = std::log(m.value);
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 3; ++c)
                A[a][c] += w * phi[a] * phi[c];
            y[a] += w * phi[a] * t;
        }
        rows.push_back({phi[0], phi[1], phi[2], t});
    }
    if (rows.size() < 3)
        throw std::runtime_error("too few epsilons with nonzero measure");
    std::array<std::array<double, 3>, 3> inv{};
    auto beta = detail::solve3(A, y, inv);
    fit.log_c = beta[0];
    fit.delta_hat = beta[1];
    fit.logpow_hat = beta[2];
    fit.delta_se = std::sqrt(inv[1][1]);
    fit.logpow_se = std::sqrt(inv[2][2]);
    for (const auto& row : rows)
        fit.residuals.push_back(row[3] - (beta[0] * row[0] + beta[1] * row[1] + beta[2] * row[2]));
    return fit;
}

/// Sublevel measures on the box [-r, r]^n, one random stream per eps, fitted by fit_sublevel_model.
inline SublevelFit fit_sublevel_asymptotics(const MultiPoly& b, double r, const std::vector<double>& eps_grid,
                                            long long samples, std::uint64_t seed)
{
    if (eps_grid.size() < 3)
        throw std::invalid_argument("sublevel fit needs at least 3 epsilons");
    const auto [mn, mx] = std::minmax_element(eps_grid.begin(), eps_grid.end());
    if (*mx / *mn < 1e3 * (1 - 1e-9))
        throw std::invalid_argument("epsilon grid must span at least 3 decades");
    if (*mx >= 1.0)
        throw std::invalid_argument("epsilons must be below 1 for the log log term");
    std::vector<Estimate> m;
    for (std::size_t i = 0; i < eps_grid.size(); ++i)
        m.push_back(sublevel_measure(b, r, eps_grid[i], samples, seed, i + 1));
    return fit_sublevel_model(eps_grid, m);
}

/// MC fraction of the rectangle where |b / b*| < eps.
inline double lemma41_ratio(const MultiPoly& b, const NewtonPolyhedron& np, const DyadicRect& rect, double eps,
                            long long samples, std::uint64_t seed)
{
    if (rect.nvars() != b.nvars())
        throw std::invalid_argument("rectangle has wrong dimension");
    if (samples < 1)
        throw std::invalid_argument("samples must be positive");
    Rng rng(seed);
    std::vector<double> x;
    long long hits = 0;
    for (long long s = 0; s < samples; ++s) {
        rect.sample(rng, x);
        if (std::abs(b(x)) < eps * b_star(np, x))
            ++hits;
    }
    return static_cast<double>(hits) / samples;
}

enum class Lemma42Method { DirectMC, DistributionFormula };

inline std::string to_string(Lemma42Method m)
{
    return m == Lemma42Method::DirectMC ? "direct-mc" : "distribution-formula";
}

struct Lemma42Result {
    double value = 0;
    double stderr_ = 0;    // direct-mc only
    bool variance_flag = false; // stderr / value > 10%
};

/**
 * Integral of |b|^-delta0 over the rectangle. DirectMC averages the integrand;
 * DistributionFormula evaluates delta0 * int t^(delta0-1) mu(t) dt in log t by
 * composite Gauss-Legendre, with mu the empirical distribution of an
 * independent sample.
 */
inline Lemma42Result lemma42_integral(const MultiPoly& b, double delta0, const DyadicRect& rect, Lemma42Method method,
                                      long long budget, std::uint64_t seed)
{
    if (rect.nvars() != b.nvars())
        throw std::invalid_argument("rectangle has wrong dimension");
    if (budget < 2)
        throw std::invalid_argument("budget must be at least 2");
    const double vol = rect.volume();
    Lemma42Result out;
    if (method == Lemma42Method::DirectMC) {
        Rng rng(seed, 1);
        std::vector<double> x;
        double mean = 0, m2 = 0;
        for (long long s = 0; s < budget; ++s) {
            rect.sample(rng, x);
            const double v = std::pow(std::abs(b(x)), -delta0);
            const double d = v - mean;
            mean += d / (s + 1);
            m2 += d * (v - mean);
        }
        out.value = vol * mean;
        out.stderr_ = vol * std::sqrt(m2 / (budget - 1) / budget);
        out.variance_flag = !(out.stderr_ <= 0.1 * std::abs(out.value));
        return out;
    }

    Rng rng(seed, 2);
    std::vector<double> x, vals(budget);
    for (long long s = 0; s < budget; ++s) {
        rect.sample(rng, x);
        vals[s] = std::abs(b(x));
    }
    std::sort(vals.begin(), vals.end());
    if (!(vals.front() > 0.0))
        throw std::runtime_error("b vanishes at a sample point; integrand not finite");
    // mu(t) = |R| for t < 1/max, 0 for t > 1/min
    const double lo = std::log(1.0 / vals.back()), hi = std::log(1.0 / vals.front());
    double total = std::exp(delta0 * lo);
    if (hi > lo) {
        const QuadRule r = composite_rule({lo, hi}, 400, 8);
        for (std::size_t q = 0; q < r.size(); ++q) {
            const double s = r.nodes[q];
            const double thr = std::exp(-s); // |b| < 1/t
            const double frac = static_cast<double>(std::lower_bound(vals.begin(), vals.end(), thr) - vals.begin())
                / static_cast<double>(budget);
            total += r.weights[q] * delta0 * std::exp(delta0 * s) * frac;
        }
    }
    out.value = vol * total;
    return out;
}

struct AmGmCheck {
    double sup = 0;           // first sample set
    double sup_resampled = 0; // independent sample set
    double relative_change = 0;
};

/// Sampled sup of |x_1 ... x_n| b*(x)^-delta0 over [-1, 1]^n.
inline AmGmCheck amgm_check(const NewtonPolyhedron& np, double delta0, long long samples, std::uint64_t seed)
{
    const int n = np.nvars;
    AmGmCheck out;
    for (int pass = 0; pass < 2; ++pass) {
        Rng rng(seed, 10 + pass);
        std::vector<double> x(n);
        double sup = 0;
        for (long long s = 0; s < samples; ++s) {
            double prod = 1;
            for (auto& v : x) {
                v = rng.uniform(-1.0, 1.0);
                prod *= std::abs(v);
            }
            const double bs = b_star(np, x);
            if (bs > 0.0)
                sup = std::max(sup, prod * std::pow(bs, -delta0));
        }
        (pass == 0 ? out.sup : out.sup_resampled) = sup;
    }
    out.relative_change = std::abs(out.sup_resampled / out.sup - 1.0);
    return out;
}

} // namespace nk

#endif
