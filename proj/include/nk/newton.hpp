#ifndef NK_NEWTON_HPP
#define NK_NEWTON_HPP

#include "nk/poly.hpp"
#include "nk/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nk {

/// Half-space normal . t >= offset, normal primitive integral and nonnegative.
struct Facet {
    std::vector<Rational> normal;
    Rational offset;

    Rational value(const Exponent& t) const
    {
        Rational s = 0;
        for (std::size_t i = 0; i < normal.size(); ++i)
            s += normal[i] * t[i];
        return s;
    }
    Rational normal_sum() const
    {
        return std::accumulate(normal.begin(), normal.end(), Rational(0));
    }
    bool contains(const Exponent& t) const { return value(t) == offset; }

    friend bool operator==(const Facet&, const Facet&) = default;
};

struct Face {
    std::vector<std::size_t> active_facets;
    std::vector<std::size_t> member_vertices; // indices into NewtonPolyhedron::vertices
    std::vector<int> recession_axes;          // 0-based coordinate directions e_i in the face
    int dim = 0;
    bool compact = true;

    friend bool operator==(const Face&, const Face&) = default;
};

struct NewtonPolyhedron {
    int nvars = 0;
    std::vector<Exponent> vertices; // ascending lexicographic
    std::vector<Facet> facets;
};

struct InvariantsSummary {
    Rational distance;
    Rational delta0;
    int multiplicity = 0;
    Face central_face;
};

inline constexpr int max_newton_nvars = 6;

namespace detail {

using RMatrix = std::vector<std::vector<Rational>>;

// Row echelon in place; returns rank and pivot columns.
inline int row_reduce(RMatrix& m, std::vector<int>* pivots = nullptr)
{
    const int rows = static_cast<int>(m.size());
    const int cols = rows ? static_cast<int>(m[0].size()) : 0;
    int r = 0;
    for (int c = 0; c < cols && r < rows; ++c) {
        int piv = -1;
        for (int i = r; i < rows; ++i)
            if (m[i][c] != 0) {
                piv = i;
                break;
            }
        if (piv < 0)
            continue;
        std::swap(m[r], m[piv]);
        Rational inv = 1 / m[r][c];
        for (int k = c; k < cols; ++k)
            m[r][k] *= inv;
        for (int i = 0; i < rows; ++i) {
            if (i == r || m[i][c] == 0)
                continue;
            Rational f = m[i][c];
            for (int k = c; k < cols; ++k)
                m[i][k] -= f * m[r][k];
        }
        if (pivots)
            pivots->push_back(c);
        ++r;
    }
    return r;
}

inline int rank(RMatrix m) { return row_reduce(m); }

// Nonzero vector orthogonal to all rows when the rows have rank cols-1.
inline std::optional<std::vector<Rational>> null_vector(RMatrix m)
{
    const int cols = m.empty() ? 0 : static_cast<int>(m[0].size());
    std::vector<int> piv;
    int r = row_reduce(m, &piv);
    if (r != cols - 1)
        return std::nullopt;
    int free_col = 0;
    for (int c = 0; c < cols; ++c)
        if (std::find(piv.begin(), piv.end(), c) == piv.end()) {
            free_col = c;
            break;
        }
    std::vector<Rational> v(cols, Rational(0));
    v[free_col] = 1;
    for (int i = 0; i < r; ++i)
        v[piv[i]] = -m[i][free_col];
    return v;
}

// Scales a rational vector to the primitive integer vector on the same ray.
inline std::vector<Rational> primitive(const std::vector<Rational>& v, Rational* scale_out = nullptr)
{
    BigInt l = 1;
    for (const auto& x : v)
        l = boost::multiprecision::lcm(l, denominator(x));
    BigInt g = 0;
    for (const auto& x : v)
        g = boost::multiprecision::gcd(g, BigInt(numerator(x) * (l / denominator(x))));
    if (g == 0)
        g = 1;
    Rational s = Rational(l, g);
    if (scale_out)
        *scale_out = s;
    std::vector<Rational> out;
    out.reserve(v.size());
    for (const auto& x : v)
        out.push_back(x * s);
    return out;
}

template <class F>
void for_each_combination(int n, int k, F&& f)
{
    if (k > n || k < 0)
        return;
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
        f(std::as_const(idx));
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i)
            --i;
        if (i < 0)
            return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

} // namespace detail

/// Points of the set not componentwise dominated by another point of the set.
inline std::vector<Exponent> pareto_minimal(std::span<const Exponent> points)
{
    if (points.empty())
        throw std::invalid_argument("pareto_minimal of an empty set");
    std::set<Exponent> uniq(points.begin(), points.end());
    std::vector<Exponent> pts(uniq.begin(), uniq.end());
    std::vector<Exponent> out;
    for (const auto& a : pts) {
        bool dominated = false;
        for (const auto& b : pts) {
            if (&a == &b)
                continue;
            bool le = true;
            for (std::size_t i = 0; i < a.size() && le; ++i)
                le = b[i] <= a[i];
            if (le) {
                dominated = true;
                break;
            }
        }
        if (!dominated)
            out.push_back(a);
    }
    return out;
}

/**
 * Newton polyhedron conv(union of alpha + R_{>=0}^n) of a nonzero polynomial.
 *
 * Facets are found by enumerating hyperplanes spanned by k Pareto points and
 * n-k coordinate directions, keeping those with a nonnegative normal that
 * support every point. Vertices are the Pareto points where the active
 * normals have full rank.
 */
inline NewtonPolyhedron newton_polyhedron(const MultiPoly& p)
{
    if (p.is_zero())
        throw std::invalid_argument("Newton polyhedron of the zero polynomial");
    const int n = p.nvars();
    if (n > max_newton_nvars)
        throw std::invalid_argument("Newton polyhedron supports at most 6 variables");

    auto supp = p.support();
    std::vector<Exponent> pts = pareto_minimal(supp);
    const int np = static_cast<int>(pts.size());

    std::set<std::pair<std::vector<Rational>, Rational>> seen;
    std::vector<Facet> facets;

    for (int k = 1; k <= std::min(n, np); ++k) {
        detail::for_each_combination(np, k, [&](const std::vector<int>& pidx) {
            detail::for_each_combination(n, n - k, [&](const std::vector<int>& dirs) {
                detail::RMatrix rows;
                const Exponent& p0 = pts[pidx[0]];
                for (int i = 1; i < k; ++i) {
                    std::vector<Rational> r(n);
                    for (int c = 0; c < n; ++c)
                        r[c] = pts[pidx[i]][c] - p0[c];
                    rows.push_back(std::move(r));
                }
                for (int d : dirs) {
                    std::vector<Rational> r(n, Rational(0));
                    r[d] = 1;
                    rows.push_back(std::move(r));
                }
                if (rows.empty())
                    rows.push_back(std::vector<Rational>(n, Rational(0)));
                auto w = detail::null_vector(rows);
                if (!w)
                    return;
                bool has_pos = false, has_neg = false;
                for (const auto& x : *w) {
                    has_pos |= x > 0;
                    has_neg |= x < 0;
                }
                if (has_pos && has_neg)
                    return;
                if (has_neg)
                    for (auto& x : *w)
                        x = -x;
                Facet f{detail::primitive(*w), 0};
                f.offset = f.value(p0);
                for (const auto& q : pts)
                    if (f.value(q) < f.offset)
                        return;
                if (seen.emplace(f.normal, f.offset).second)
                    facets.push_back(std::move(f));
            });
        });
    }
    std::sort(facets.begin(), facets.end(), [](const Facet& a, const Facet& b) {
        if (a.normal != b.normal)
            return a.normal > b.normal;
        return a.offset < b.offset;
    });

    NewtonPolyhedron out;
    out.nvars = n;
    for (const auto& q : pts) {
        detail::RMatrix act;
        for (const auto& f : facets)
            if (f.contains(q))
                act.push_back(f.normal);
        if (!act.empty() && detail::rank(act) == n)
            out.vertices.push_back(q);
    }
    out.facets = std::move(facets);
    return out;
}

/// Least t with (t,...,t) in N(b): max over facets of offset / sum(normal).
inline Rational newton_distance(const NewtonPolyhedron& np)
{
    Rational d = 0;
    for (const auto& f : np.facets)
        d = std::max(d, f.offset / f.normal_sum());
    return d;
}

inline Rational critical_exponent(const NewtonPolyhedron& np) { return 1 / newton_distance(np); }

namespace detail {

inline Face face_from_active(const NewtonPolyhedron& np, std::vector<std::size_t> active)
{
    const int n = np.nvars;
    Face f;
    std::sort(active.begin(), active.end());
    f.active_facets = std::move(active);
    for (std::size_t v = 0; v < np.vertices.size(); ++v) {
        bool on = true;
        for (auto a : f.active_facets)
            on = on && np.facets[a].contains(np.vertices[v]);
        if (on)
            f.member_vertices.push_back(v);
    }
    for (int i = 0; i < n; ++i) {
        bool zero = true;
        for (auto a : f.active_facets)
            zero = zero && np.facets[a].normal[i] == 0;
        if (zero)
            f.recession_axes.push_back(i);
    }
    f.compact = f.recession_axes.empty();
    RMatrix span;
    if (!f.member_vertices.empty()) {
        const auto& v0 = np.vertices[f.member_vertices[0]];
        for (std::size_t k = 1; k < f.member_vertices.size(); ++k) {
            std::vector<Rational> r(n);
            for (int c = 0; c < n; ++c)
                r[c] = np.vertices[f.member_vertices[k]][c] - v0[c];
            span.push_back(std::move(r));
        }
    }
    for (int i : f.recession_axes) {
        std::vector<Rational> r(n, Rational(0));
        r[i] = 1;
        span.push_back(std::move(r));
    }
    f.dim = span.empty() ? 0 : rank(span);
    return f;
}

// All facets containing the given vertices and recession axes.
inline std::vector<std::size_t> closure(const NewtonPolyhedron& np, const std::vector<std::size_t>& verts,
                                        const std::vector<int>& axes)
{
    std::vector<std::size_t> act;
    for (std::size_t a = 0; a < np.facets.size(); ++a) {
        const auto& fa = np.facets[a];
        bool ok = true;
        for (auto v : verts)
            ok = ok && fa.contains(np.vertices[v]);
        for (int i : axes)
            ok = ok && fa.normal[i] == 0;
        if (ok)
            act.push_back(a);
    }
    return act;
}

} // namespace detail

/// Every proper face, ordered by dimension then by member vertices.
inline std::vector<Face> all_faces(const NewtonPolyhedron& np)
{
    std::map<std::vector<std::size_t>, Face> found;
    std::vector<std::vector<std::size_t>> queue;
    for (std::size_t a = 0; a < np.facets.size(); ++a) {
        Face f = detail::face_from_active(np, {a});
        auto act = detail::closure(np, f.member_vertices, f.recession_axes);
        if (found.count(act))
            continue;
        found.emplace(act, detail::face_from_active(np, act));
        queue.push_back(act);
    }
    while (!queue.empty()) {
        auto act = std::move(queue.back());
        queue.pop_back();
        const Face cur = found.at(act);
        for (std::size_t a = 0; a < np.facets.size(); ++a) {
            if (std::binary_search(cur.active_facets.begin(), cur.active_facets.end(), a))
                continue;
            std::vector<std::size_t> verts;
            for (auto v : cur.member_vertices)
                if (np.facets[a].contains(np.vertices[v]))
                    verts.push_back(v);
            if (verts.empty())
                continue;
            std::vector<int> axes;
            for (int i : cur.recession_axes)
                if (np.facets[a].normal[i] == 0)
                    axes.push_back(i);
            auto next = detail::closure(np, verts, axes);
            if (found.count(next))
                continue;
            found.emplace(next, detail::face_from_active(np, next));
            queue.push_back(std::move(next));
        }
    }
    std::vector<Face> out;
    for (auto& [k, f] : found)
        out.push_back(std::move(f));
    std::sort(out.begin(), out.end(), [](const Face& a, const Face& b) {
        if (a.dim != b.dim)
            return a.dim < b.dim;
        if (a.member_vertices != b.member_vertices)
            return a.member_vertices < b.member_vertices;
        return a.recession_axes < b.recession_axes;
    });
    return out;
}

inline std::vector<Face> compact_faces(const NewtonPolyhedron& np)
{
    std::vector<Face> out;
    for (auto& f : all_faces(np))
        if (f.compact)
            out.push_back(std::move(f));
    return out;
}

/// Smallest face containing the diagonal point (d, ..., d).
inline Face central_face(const NewtonPolyhedron& np)
{
    const Rational d = newton_distance(np);
    std::vector<std::size_t> act;
    for (std::size_t a = 0; a < np.facets.size(); ++a)
        if (d * np.facets[a].normal_sum() == np.facets[a].offset)
            act.push_back(a);
    return detail::face_from_active(np, std::move(act));
}

inline int multiplicity(const NewtonPolyhedron& np) { return np.nvars - central_face(np).dim; }

inline InvariantsSummary invariants(const NewtonPolyhedron& np)
{
    InvariantsSummary s;
    s.distance = newton_distance(np);
    s.delta0 = 1 / s.distance;
    s.central_face = central_face(np);
    s.multiplicity = np.nvars - s.central_face.dim;
    return s;
}

/// True when f is a face of np as produced by all_faces / central_face.
inline bool is_face_of(const NewtonPolyhedron& np, const Face& f)
{
    for (auto a : f.active_facets)
        if (a >= np.facets.size())
            return false;
    return detail::face_from_active(np, f.active_facets) == f;
}

/// b_F: the terms of p whose exponents lie on every active facet of F.
inline MultiPoly face_polynomial(const MultiPoly& p, const NewtonPolyhedron& np, const Face& f)
{
    if (p.nvars() != np.nvars || !is_face_of(np, f))
        throw std::invalid_argument("face does not belong to this Newton polyhedron");
    return p.filter([&](const Exponent& e) {
        for (auto a : f.active_facets)
            if (!np.facets[a].contains(e))
                return false;
        return true;
    });
}

/// b*(x) = sum over vertices v of |x^v|.
inline double b_star(const NewtonPolyhedron& np, std::span<const double> x)
{
    if (static_cast<int>(x.size()) != np.nvars)
        throw std::invalid_argument("b* evaluation point has wrong dimension");
    double s = 0.0;
    for (const auto& v : np.vertices) {
        double m = 1.0;
        for (int i = 0; i < np.nvars; ++i)
            for (int k = 0; k < v[i]; ++k)
                m *= x[i];
        s += std::abs(m);
    }
    return s;
}

} // namespace nk

#endif
