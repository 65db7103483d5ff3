#ifndef NK_HYPOTHESIS_HPP
#define NK_HYPOTHESIS_HPP

#include "nk/newton.hpp"
#include "nk/poly.hpp"
#include "nk/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace nk {

struct HypothesisOptions {
    int samples = 1000; // multi-starts per face and sign orthant
    std::uint64_t seed = 1;
    double zero_tol = 1e-10;
    double deriv_tol = 1e-6;
    double coordinate_floor = 1e-3;
    int max_iterations = 200;
    long long max_evaluations = 0; // 0 = unlimited
    int max_reported_zeros = 32;
};

struct FaceZeroRecord {
    std::size_t face_index = 0; // index into compact_faces(np)
    std::vector<Exponent> vertices;
    std::vector<std::vector<double>> zeros; // sorted, at most max_reported_zeros
    long long zero_count = 0;
    int max_order = 0;
    bool pass = true;
    std::vector<long long> orthant_zero_counts;
    std::vector<int> orthant_max_orders;
};

struct HypothesisReport {
    Rational distance;
    std::vector<FaceZeroRecord> faces;
    bool pass = true;         // every face zero has order < d(b)
    bool nonvanishing = true; // no face polynomial zero found off the axes
    bool budget_exhausted = false;
    std::vector<int> line_zero_bound; // per axis, 1-based axis at index axis-1
    long long evaluations = 0;
};

/// Degree of d b / d x_axis in x_axis: a bound on zeros of the derivative on axis-parallel lines.
inline int derivative_line_zero_bound(const MultiPoly& p, int axis)
{
    if (p.is_zero())
        throw std::invalid_argument("line zero bound of the zero polynomial");
    auto d = p.partial(axis);
    return d.is_zero() ? 0 : d.degree_in(axis);
}

namespace detail {

struct FaceSearch {
    MultiPoly poly;
    std::vector<MultiPoly> grad;
    std::vector<std::vector<MultiPoly>> by_order; // derivatives grouped by total order

    explicit FaceSearch(MultiPoly p) : poly(std::move(p))
    {
        const int n = poly.nvars();
        for (int i = 1; i <= n; ++i)
            grad.push_back(poly.partial(i));
        const int deg = poly.total_degree();
        by_order.resize(deg + 1, {});
        for_each_multiindex(n, deg, [&](const Exponent& g, int order) {
            by_order[order].push_back(poly.derivative(g));
        });
    }

    template <class F>
    static void for_each_multiindex(int n, int max_order, F&& f)
    {
        Exponent g(n, 0);
        std::function<void(int, int)> rec = [&](int i, int left) {
            if (i == n) {
                int order = 0;
                for (int v : g)
                    order += v;
                f(g, order);
                return;
            }
            for (int v = 0; v <= left; ++v) {
                g[i] = v;
                rec(i + 1, left - v);
            }
            g[i] = 0;
        };
        rec(0, max_order);
    }

    // Smallest total order with a derivative above tol; total degree + 1 if none.
    int zero_order(const std::vector<double>& z, double tol) const
    {
        for (std::size_t k = 0; k < by_order.size(); ++k)
            for (const auto& d : by_order[k])
                if (std::abs(d(z)) > tol)
                    return static_cast<int>(k);
        return static_cast<int>(by_order.size());
    }
};

// Minimal-norm Newton iteration for a single equation; returns the final |f|.
inline double newton_refine(const FaceSearch& fs, std::vector<double>& x, int max_iter, long long& evals)
{
    const int n = static_cast<int>(x.size());
    double f = fs.poly(x);
    ++evals;
    double best = std::abs(f);
    int stall = 0;
    for (int it = 0; it < max_iter && best > 0.0; ++it) {
        std::vector<double> g(n);
        double g2 = 0;
        for (int i = 0; i < n; ++i) {
            g[i] = fs.grad[i](x);
            g2 += g[i] * g[i];
        }
        evals += n;
        if (!(g2 > 0.0) || !std::isfinite(g2))
            break;
        double scale = f / g2;
        double step2 = scale * scale * g2;
        double xn2 = 0;
        for (double v : x)
            xn2 += v * v;
        if (step2 > 0.25 * std::max(xn2, 1e-6))
            scale *= 0.5 * std::sqrt(std::max(xn2, 1e-6) / step2);
        for (int i = 0; i < n; ++i)
            x[i] -= scale * g[i];
        f = fs.poly(x);
        ++evals;
        if (!std::isfinite(f))
            break;
        if (std::abs(f) < best * 0.999) {
            best = std::abs(f);
            stall = 0;
        } else if (++stall >= 4) {
            break;
        }
    }
    return std::abs(fs.poly(x));
}

} // namespace detail

/**
 * Multi-start zero search for every compact face polynomial b_F on the
 * shell max|x_i| in [1/2, 1], one sign orthant at a time. Start points are
 * drawn once in the positive orthant and reflected, so a b even in every
 * variable yields the same per-orthant statistics.
 */
inline HypothesisReport check_face_zero_orders(const MultiPoly& p, const NewtonPolyhedron& np,
                                               const HypothesisOptions& opt = {})
{
    if (opt.samples < 1)
        throw std::invalid_argument("samples must be positive");
    const int n = p.nvars();
    HypothesisReport rep;
    rep.distance = newton_distance(np);
    for (int axis = 1; axis <= n; ++axis)
        rep.line_zero_bound.push_back(derivative_line_zero_bound(p, axis));

    Rng rng(opt.seed);
    std::vector<std::vector<double>> starts;
    starts.reserve(opt.samples);
    while (static_cast<int>(starts.size()) < opt.samples) {
        std::vector<double> x(n);
        double mx = 0;
        for (auto& v : x) {
            v = rng.uniform(opt.coordinate_floor, 1.0);
            mx = std::max(mx, v);
        }
        if (mx >= 0.5)
            starts.push_back(std::move(x));
    }

    const auto faces = compact_faces(np);
    const int orthants = 1 << n;
    for (std::size_t fi = 0; fi < faces.size() && !rep.budget_exhausted; ++fi) {
        detail::FaceSearch fs(face_polynomial(p, np, faces[fi]));
        // b_F is quasi-homogeneous for this positive weight
        std::vector<double> weight(n, 0.0);
        for (auto a : faces[fi].active_facets)
            for (int i = 0; i < n; ++i)
                weight[i] += to_double(np.facets[a].normal[i]);
        FaceZeroRecord rec;
        rec.face_index = fi;
        for (auto v : faces[fi].member_vertices)
            rec.vertices.push_back(np.vertices[v]);
        rec.orthant_zero_counts.assign(orthants, 0);
        rec.orthant_max_orders.assign(orthants, 0);
        std::vector<std::vector<double>> zeros;

        for (int o = 0; o < orthants && !rep.budget_exhausted; ++o) {
            for (const auto& s : starts) {
                if (opt.max_evaluations > 0 && rep.evaluations >= opt.max_evaluations) {
                    rep.budget_exhausted = true;
                    break;
                }
                std::vector<double> x = s;
                for (int i = 0; i < n; ++i)
                    if (o & (1 << i))
                        x[i] = -x[i];
                double res = detail::newton_refine(fs, x, opt.max_iterations, rep.evaluations);
                if (!(res < opt.zero_tol))
                    continue;
                // pull the zero back onto the shell max|x_i| = 1 before judging it
                double lambda = std::numeric_limits<double>::infinity();
                for (int i = 0; i < n; ++i)
                    if (x[i] != 0.0)
                        lambda = std::min(lambda, std::pow(1.0 / std::abs(x[i]), 1.0 / weight[i]));
                if (!std::isfinite(lambda))
                    continue;
                for (int i = 0; i < n; ++i)
                    x[i] *= std::pow(lambda, weight[i]);
                res = detail::newton_refine(fs, x, opt.max_iterations, rep.evaluations);
                if (!(res < opt.zero_tol))
                    continue;
                bool off_axes = true;
                for (double v : x)
                    off_axes = off_axes && std::abs(v) > opt.coordinate_floor && std::abs(v) <= 4.0;
                if (!off_axes)
                    continue;
                int order = fs.zero_order(x, opt.deriv_tol);
                ++rec.orthant_zero_counts[o];
                rec.orthant_max_orders[o] = std::max(rec.orthant_max_orders[o], order);
                rec.max_order = std::max(rec.max_order, order);
                ++rec.zero_count;
                zeros.push_back(std::move(x));
            }
        }
        std::sort(zeros.begin(), zeros.end());
        if (static_cast<int>(zeros.size()) > opt.max_reported_zeros) {
            // keep an evenly spaced subset of the sorted list
            std::vector<std::vector<double>> kept;
            for (int k = 0; k < opt.max_reported_zeros; ++k)
                kept.push_back(zeros[k * zeros.size() / opt.max_reported_zeros]);
            zeros = std::move(kept);
        }
        rec.zeros = std::move(zeros);
        rec.pass = Rational(rec.max_order) < rep.distance;
        rep.pass = rep.pass && rec.pass;
        rep.nonvanishing = rep.nonvanishing && rec.zero_count == 0;
        rep.faces.push_back(std::move(rec));
    }
    return rep;
}

inline bool check_nonvanishing(const MultiPoly& p, const NewtonPolyhedron& np, const HypothesisOptions& opt = {})
{
    return check_face_zero_orders(p, np, opt).nonvanishing;
}

} // namespace nk

#endif
