#include "nk/newton.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using nk::Exponent;
using nk::Face;
using nk::MultiPoly;
using nk::NewtonPolyhedron;
using nk::Rational;
using nk::parse_poly;

namespace {

NewtonPolyhedron np_of(const char* text, int n) { return nk::newton_polyhedron(parse_poly(text, n)); }

std::vector<Exponent> face_vertices(const NewtonPolyhedron& np, const Face& f)
{
    std::vector<Exponent> out;
    for (auto v : f.member_vertices)
        out.push_back(np.vertices[v]);
    return out;
}

// Lower bound on d: max over simplex weights w (denominator q) of min_p w.p.
Rational distance_lower_oracle(const std::vector<Exponent>& pts, int n, int q)
{
    Rational best = 0;
    std::vector<int> k(n, 0);
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == n - 1) {
            k[i] = left;
            Rational m = -1;
            for (const auto& p : pts) {
                Rational s = 0;
                for (int c = 0; c < n; ++c)
                    s += Rational(k[c], q) * p[c];
                if (m < 0 || s < m)
                    m = s;
            }
            best = std::max(best, m);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            k[i] = v;
            rec(i + 1, left - v);
        }
    };
    rec(0, q);
    return best;
}

// Upper bound on d: min over convex combinations (grid q) of <= n points of max coordinate.
Rational distance_upper_oracle(const std::vector<Exponent>& pts, int n, int q)
{
    Rational best = -1;
    const int m = static_cast<int>(pts.size());
    std::vector<int> pick;
    std::function<void(int)> choose = [&](int start) {
        if (!pick.empty()) {
            const int k = static_cast<int>(pick.size());
            std::vector<int> lam(k, 0);
            std::function<void(int, int)> rec = [&](int i, int left) {
                if (i == k - 1) {
                    lam[i] = left;
                    Rational mx = 0;
                    for (int c = 0; c < n; ++c) {
                        Rational s = 0;
                        for (int j = 0; j < k; ++j)
                            s += Rational(lam[j], q) * pts[pick[j]][c];
                        mx = std::max(mx, s);
                    }
                    if (best < 0 || mx < best)
                        best = mx;
                    return;
                }
                for (int v = 0; v <= left; ++v) {
                    lam[i] = v;
                    rec(i + 1, left - v);
                }
            };
            rec(0, q);
        }
        if (static_cast<int>(pick.size()) == n)
            return;
        for (int i = start; i < m; ++i) {
            pick.push_back(i);
            choose(i + 1);
            pick.pop_back();
        }
    };
    choose(0);
    return best;
}

// A Pareto point is a vertex iff some strictly positive weight makes it the unique minimizer.
std::set<Exponent> vertex_oracle(const std::vector<Exponent>& pareto, int n, int q)
{
    std::set<Exponent> out;
    std::vector<int> w(n, 1);
    std::function<void(int)> rec = [&](int i) {
        if (i == n) {
            for (const auto& p : pareto) {
                long wp = 0;
                for (int c = 0; c < n; ++c)
                    wp += static_cast<long>(w[c]) * p[c];
                bool unique = true;
                for (const auto& r : pareto) {
                    if (r == p)
                        continue;
                    long wr = 0;
                    for (int c = 0; c < n; ++c)
                        wr += static_cast<long>(w[c]) * r[c];
                    if (wr <= wp) {
                        unique = false;
                        break;
                    }
                }
                if (unique)
                    out.insert(p);
            }
            return;
        }
        for (int v = 1; v <= q; ++v) {
            w[i] = v;
            rec(i + 1);
        }
    };
    rec(0);
    return out;
}

MultiPoly random_poly(std::mt19937_64& rng, int n, int nterms, int maxexp)
{
    std::uniform_int_distribution<int> ex(0, maxexp), coef(-5, 5);
    MultiPoly::TermMap m;
    while (m.empty()) {
        for (int t = 0; t < nterms; ++t) {
            Exponent e(n);
            int s = 0;
            for (auto& v : e)
                s += (v = ex(rng));
            int c = coef(rng);
            if (s > 0 && c != 0)
                m[e] = c;
        }
    }
    return MultiPoly(n, m);
}

} // namespace

TEST(Pareto, Examples)
{
    std::vector<Exponent> a{{2, 0}, {0, 2}, {1, 1}};
    EXPECT_EQ(nk::pareto_minimal(a), (std::vector<Exponent>{{0, 2}, {1, 1}, {2, 0}}));
    std::vector<Exponent> b{{2, 0}, {2, 1}};
    EXPECT_EQ(nk::pareto_minimal(b), (std::vector<Exponent>{{2, 0}}));
    std::vector<Exponent> c{{1, 1}};
    EXPECT_EQ(nk::pareto_minimal(c), c);
    EXPECT_THROW(nk::pareto_minimal(std::vector<Exponent>{}), std::invalid_argument);
}

TEST(NewtonPolyhedron, SumOfSquares)
{
    auto np = np_of("x1^2+x2^2", 2);
    EXPECT_EQ(np.vertices, (std::vector<Exponent>{{0, 2}, {2, 0}}));
    // t1 + t2 >= 2, t1 >= 0, t2 >= 0
    ASSERT_EQ(np.facets.size(), 3u);
    bool sloped = false;
    for (const auto& f : np.facets)
        if (f.normal == std::vector<Rational>{1, 1}) {
            sloped = true;
            EXPECT_EQ(f.offset, 2);
        } else {
            EXPECT_EQ(f.offset, 0);
        }
    EXPECT_TRUE(sloped);
}

TEST(NewtonPolyhedron, Monomial)
{
    auto np = np_of("x1^2*x2^3", 2);
    EXPECT_EQ(np.vertices, (std::vector<Exponent>{{2, 3}}));
    ASSERT_EQ(np.facets.size(), 2u);
    EXPECT_EQ(np.facets[0].normal, (std::vector<Rational>{1, 0}));
    EXPECT_EQ(np.facets[0].offset, 2);
    EXPECT_EQ(np.facets[1].normal, (std::vector<Rational>{0, 1}));
    EXPECT_EQ(np.facets[1].offset, 3);
}

TEST(NewtonPolyhedron, SlopedFacet)
{
    auto np = np_of("x1^2 + x2^4", 2);
    EXPECT_EQ(np.vertices, (std::vector<Exponent>{{0, 4}, {2, 0}}));
    bool found = false;
    for (const auto& f : np.facets)
        if (f.normal == std::vector<Rational>{2, 1}) {
            found = true;
            EXPECT_EQ(f.offset, 4);
        }
    EXPECT_TRUE(found);
    EXPECT_THROW(nk::newton_polyhedron(parse_poly("x1-x1", 1, true)), std::invalid_argument);
}

TEST(NewtonDistance, Examples)
{
    EXPECT_EQ(nk::newton_distance(np_of("x1^2+x2^2", 2)), 1);
    EXPECT_EQ(nk::newton_distance(np_of("x1^2*x2^3", 2)), 3);
    EXPECT_EQ(nk::newton_distance(np_of("x1^2+x2^4", 2)), Rational(4, 3));
    EXPECT_EQ(nk::critical_exponent(np_of("x1^2+x2^4", 2)), Rational(1, 2) + Rational(1, 4));
}

TEST(CriticalExponent, Examples)
{
    EXPECT_EQ(nk::critical_exponent(np_of("x1^2+x2^2", 2)), 1);
    EXPECT_EQ(nk::critical_exponent(np_of("x1^4+x2^4", 2)), Rational(1, 2));
    EXPECT_EQ(nk::critical_exponent(np_of("x1^2*x2^3", 2)), Rational(1, 3));
}

TEST(CentralFace, Examples)
{
    auto np = np_of("x1^2+x2^2", 2);
    auto cf = nk::central_face(np);
    EXPECT_EQ(cf.dim, 1);
    EXPECT_EQ(face_vertices(np, cf), (std::vector<Exponent>{{0, 2}, {2, 0}}));
    EXPECT_TRUE(cf.compact);

    auto np2 = np_of("x1*x2", 2);
    auto cf2 = nk::central_face(np2);
    EXPECT_EQ(cf2.dim, 0);
    EXPECT_EQ(face_vertices(np2, cf2), (std::vector<Exponent>{{1, 1}}));

    auto np3 = np_of("x1^2*x2^3", 2);
    auto cf3 = nk::central_face(np3);
    EXPECT_EQ(cf3.dim, 1);
    EXPECT_FALSE(cf3.compact);
    ASSERT_EQ(cf3.active_facets.size(), 1u);
    EXPECT_EQ(np3.facets[cf3.active_facets[0]].normal, (std::vector<Rational>{0, 1}));
    EXPECT_EQ(cf3.recession_axes, (std::vector<int>{0}));
}

TEST(Multiplicity, Examples)
{
    EXPECT_EQ(nk::multiplicity(np_of("x1^2+x2^2", 2)), 1);
    EXPECT_EQ(nk::multiplicity(np_of("x1*x2", 2)), 2);
    EXPECT_EQ(nk::multiplicity(np_of("x1^2*x2^3", 2)), 1);
    EXPECT_EQ(nk::multiplicity(np_of("x1^3*x2^3*x3", 3)), 2);
    EXPECT_EQ(nk::multiplicity(np_of("x1^2*x2^2*x3^2", 3)), 3);
}

TEST(CompactFaces, Examples)
{
    auto np = np_of("x1^2+x2^2", 2);
    auto faces = nk::compact_faces(np);
    ASSERT_EQ(faces.size(), 3u);
    EXPECT_EQ(face_vertices(np, faces[0]), (std::vector<Exponent>{{0, 2}}));
    EXPECT_EQ(face_vertices(np, faces[1]), (std::vector<Exponent>{{2, 0}}));
    EXPECT_EQ(face_vertices(np, faces[2]), (std::vector<Exponent>{{0, 2}, {2, 0}}));
    EXPECT_EQ(faces[2].dim, 1);

    auto np2 = np_of("x1^2*x2^3", 2);
    auto f2 = nk::compact_faces(np2);
    ASSERT_EQ(f2.size(), 1u);
    EXPECT_EQ(face_vertices(np2, f2[0]), (std::vector<Exponent>{{2, 3}}));

    auto f3 = nk::compact_faces(np_of("x1^2+x2^4", 2));
    EXPECT_EQ(f3.size(), 3u);
    EXPECT_EQ(std::count_if(f3.begin(), f3.end(), [](const Face& f) { return f.dim == 0; }), 2);
}

TEST(CompactFaces, CubeCornerIn3D)
{
    // x1^2 + x2^2 + x3^2: triangle, three edges, three vertices
    auto faces = nk::compact_faces(np_of("x1^2+x2^2+x3^2", 3));
    std::array<int, 3> by_dim{};
    for (const auto& f : faces)
        ++by_dim[f.dim];
    EXPECT_EQ(by_dim, (std::array<int, 3>{3, 3, 1}));
}

TEST(FacePolynomial, Examples)
{
    auto p = parse_poly("x1^2+x2^2", 2);
    auto np = nk::newton_polyhedron(p);
    auto edge = nk::central_face(np);
    EXPECT_EQ(nk::face_polynomial(p, np, edge), p);

    auto p2 = parse_poly("x1^2+x2^2+x1^2*x2^2", 2);
    auto np2 = nk::newton_polyhedron(p2);
    EXPECT_EQ(nk::face_polynomial(p2, np2, nk::central_face(np2)), p);

    auto p3 = parse_poly("x1^2+x2^4", 2);
    auto np3 = nk::newton_polyhedron(p3);
    for (const auto& f : nk::compact_faces(np3)) {
        if (f.dim == 0 && np3.vertices[f.member_vertices[0]] == Exponent{2, 0}) {
            EXPECT_EQ(nk::face_polynomial(p3, np3, f), parse_poly("x1^2", 2));
        }
    }

    Face bogus = edge;
    bogus.active_facets = {99};
    EXPECT_THROW(nk::face_polynomial(p, np, bogus), std::invalid_argument);
    Face wrong = edge;
    wrong.dim = 0;
    EXPECT_THROW(nk::face_polynomial(p, np, wrong), std::invalid_argument);
}

TEST(BStar, Examples)
{
    std::vector<double> a{1, 1}, b{0.5, 0.5}, c{0.1, 0.1};
    EXPECT_DOUBLE_EQ(nk::b_star(np_of("x1^2+x2^2", 2), a), 2.0);
    EXPECT_DOUBLE_EQ(nk::b_star(np_of("x1*x2", 2), b), 0.25);
    EXPECT_NEAR(nk::b_star(np_of("x1^2+x2^4", 2), c), 0.0101, 1e-15);
}

TEST(NewtonProperties, OracleEquivalenceOnRandomPolynomials)
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + trial % 3;
        auto p = random_poly(rng, n, 1 + trial % 6, 6);
        auto np = nk::newton_polyhedron(p);
        auto pareto = nk::pareto_minimal(p.support());
        Rational d = nk::newton_distance(np);

        const int q = n == 3 ? 24 : 60;
        Rational lo = distance_lower_oracle(pareto, n, q);
        Rational hi = distance_upper_oracle(pareto, n, q);
        EXPECT_LE(lo, d) << nk::format_poly(p);
        EXPECT_GE(hi, d) << nk::format_poly(p);
        EXPECT_LT(nk::to_double(hi - lo), 0.35) << nk::format_poly(p);

        auto oracle = vertex_oracle(pareto, n, n == 3 ? 48 : 60);
        std::set<Exponent> got(np.vertices.begin(), np.vertices.end());
        EXPECT_EQ(got, oracle) << nk::format_poly(p);

        // diagonal optimality, exact
        bool tight = false;
        for (const auto& f : np.facets) {
            EXPECT_GE(d * f.normal_sum(), f.offset);
            tight |= d * f.normal_sum() == f.offset;
            for (auto x : f.normal)
                EXPECT_GE(x, 0);
        }
        EXPECT_TRUE(tight);

        // every support point lies in N(b); every vertex is tight on n independent facets
        for (const auto& e : p.support())
            for (const auto& f : np.facets)
                EXPECT_GE(f.value(e), f.offset);

        // vertices form an antichain
        for (const auto& a : np.vertices)
            for (const auto& b : np.vertices)
                if (a != b) {
                    bool le = true;
                    for (int i = 0; i < n; ++i)
                        le = le && a[i] <= b[i];
                    EXPECT_FALSE(le);
                }

        auto cf = nk::central_face(np);
        int m = nk::multiplicity(np);
        EXPECT_GE(m, 1);
        EXPECT_LE(m, n);
        EXPECT_EQ(m, n - cf.dim);
    }
}

TEST(NewtonProperties, ScaleCovariance)
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + trial % 3;
        auto p = random_poly(rng, n, 5, 5);
        auto np = nk::newton_polyhedron(p);
        for (Rational c : {Rational(-3), Rational(2, 7)}) {
            auto np2 = nk::newton_polyhedron(p.scaled(c));
            EXPECT_EQ(np2.vertices, np.vertices);
            EXPECT_EQ(np2.facets, np.facets);
            EXPECT_EQ(nk::newton_distance(np2), nk::newton_distance(np));
            EXPECT_EQ(nk::multiplicity(np2), nk::multiplicity(np));
        }
    }
}

TEST(NewtonProperties, ComparabilityUpperBound)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const char* text : {"x1^2+x2^2", "x1*x2", "x1^2-2*x1*x2+x2^2", "x1^3 - x1*x2 + 5*x2^3", "x1^2*x2 + x2^4 - x1^5"}) {
        auto p = parse_poly(text, 2);
        auto np = nk::newton_polyhedron(p);
        double maxc = 0;
        for (const auto& [e, c] : p.terms())
            maxc = std::max(maxc, std::abs(nk::to_double(c)));
        const double C = static_cast<double>(p.size()) * maxc;
        for (int s = 0; s < 10000; ++s) {
            std::vector<double> x{u(rng), u(rng)};
            EXPECT_LE(std::abs(p(x)), C * nk::b_star(np, x) * (1 + 1e-12)) << text;
        }
    }
}

TEST(NewtonProperties, AmGmLowerBoundIsStable)
{
    // b*(x) >= C3 |x1...xn|^d: fitted C3 is positive and stable under resampling
    for (const char* text : {"x1^2+x2^2", "x1*x2", "x1^2+x2^4", "x1^2*x2^3"}) {
        auto np = np_of(text, 2);
        const double d = nk::to_double(nk::newton_distance(np));
        auto fit = [&](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            double c3 = 1e300;
            for (int s = 0; s < 20000; ++s) {
                std::vector<double> x{u(rng), u(rng)};
                double prod = std::abs(x[0] * x[1]);
                c3 = std::min(c3, nk::b_star(np, x) / std::pow(prod, d));
            }
            return c3;
        };
        double a = fit(1), b = fit(2);
        EXPECT_GT(a, 0.5) << text;
        EXPECT_NEAR(a, b, 0.1 * a) << text;
    }
}
