#ifndef NK_QUADRATURE_HPP
#define NK_QUADRATURE_HPP

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nk {

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_q; rules are cached.
inline const QuadRule& gauss_legendre(int q)
{
    if (q < 1)
        throw std::invalid_argument("quadrature order must be positive");
    static std::mutex mtx;
    static std::map<int, QuadRule> cache;
    std::lock_guard lock(mtx);
    auto it = cache.find(q);
    if (it != cache.end())
        return it->second;

    QuadRule r;
    r.nodes.resize(q);
    r.weights.resize(q);
    for (int i = 0; i < (q + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= q; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (q == 1)
                p0 = 1.0, p1 = x;
            dp = q * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= q; ++k) {
            double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        dp = q * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[q - 1 - i] = x;
        r.weights[i] = w;
        r.weights[q - 1 - i] = w;
    }
    if (q == 1) {
        r.nodes = {0.0};
        r.weights = {2.0};
    }
    return cache.emplace(q, std::move(r)).first->second;
}

/**
 * Composite rule on consecutive segments [b_k, b_{k+1}], each split into
 * `panels` equal panels carrying a q-point Gauss-Legendre rule.
 */
inline QuadRule composite_rule(const std::vector<double>& breaks, int panels, int q)
{
    if (breaks.size() < 2 || panels < 1)
        throw std::invalid_argument("composite rule needs at least one segment and panel");
    const QuadRule& g = gauss_legendre(q);
    QuadRule out;
    out.nodes.reserve((breaks.size() - 1) * panels * q);
    out.weights.reserve(out.nodes.capacity());
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        const double h = (breaks[s + 1] - breaks[s]) / panels;
        for (int p = 0; p < panels; ++p) {
            const double lo = breaks[s] + p * h;
            for (std::size_t k = 0; k < g.size(); ++k) {
                out.nodes.push_back(lo + 0.5 * h * (g.nodes[k] + 1.0));
                out.weights.push_back(0.5 * h * g.weights[k]);
            }
        }
    }
    return out;
}

} // namespace nk

#endif
