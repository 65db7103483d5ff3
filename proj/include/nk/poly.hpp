#ifndef NK_POLY_HPP
#define NK_POLY_HPP

#include "nk/rational.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nk {

using Exponent = std::vector<int>;

class ParseError : public std::invalid_argument {
public:
    ParseError(const std::string& what, std::size_t pos)
        : std::invalid_argument(what + " at position " + std::to_string(pos)), pos_(pos) {}
    std::size_t position() const noexcept { return pos_; }

private:
    std::size_t pos_;
};

/**
 * Sparse multivariate polynomial with exact rational coefficients.
 *
 * Terms are kept in a map keyed by exponent vector, so iteration is in
 * ascending lexicographic order. No stored coefficient is zero. A double
 * copy of the terms is cached for evaluation.
 */
class MultiPoly {
public:
    using TermMap = std::map<Exponent, Rational>;

    explicit MultiPoly(int nvars) : nvars_(nvars)
    {
        if (nvars < 1)
            throw std::invalid_argument("MultiPoly needs at least one variable");
    }

    MultiPoly(int nvars, TermMap terms) : MultiPoly(nvars)
    {
        for (auto& [e, c] : terms)
            add_term(e, c);
        rebuild_cache();
    }

    static MultiPoly monomial(int nvars, Exponent e, Rational c = 1)
    {
        TermMap t;
        t.emplace(std::move(e), std::move(c));
        return MultiPoly(nvars, std::move(t));
    }

    int nvars() const noexcept { return nvars_; }
    const TermMap& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }
    bool is_zero() const noexcept { return terms_.empty(); }

    Rational coefficient(const Exponent& e) const
    {
        auto it = terms_.find(e);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    /// Exponent vectors of the Taylor support.
    std::vector<Exponent> support() const
    {
        std::vector<Exponent> out;
        out.reserve(terms_.size());
        for (const auto& [e, c] : terms_)
            out.push_back(e);
        return out;
    }

    double operator()(std::span<const double> x) const
    {
        if (static_cast<int>(x.size()) != nvars_)
            throw std::invalid_argument("evaluation point has wrong dimension");
        double sum = 0.0;
        for (const auto& t : cache_) {
            double m = t.coef;
            for (int i = 0; i < nvars_; ++i)
                for (int k = 0; k < t.exp[i]; ++k)
                    m *= x[i];
            sum += m;
        }
        return sum;
    }

    double eval(std::span<const double> x) const { return (*this)(x); }

    /// Formal derivative in x_axis, axis counted from 1.
    MultiPoly partial(int axis) const
    {
        if (axis < 1 || axis > nvars_)
            throw std::out_of_range("derivative axis out of range");
        TermMap out;
        const int a = axis - 1;
        for (const auto& [e, c] : terms_) {
            if (e[a] == 0)
                continue;
            Exponent d = e;
            d[a] -= 1;
            out.emplace(std::move(d), c * e[a]);
        }
        return MultiPoly(nvars_, std::move(out));
    }

    /// Repeated partials: gamma[i] derivatives in variable i+1.
    MultiPoly derivative(const Exponent& gamma) const
    {
        MultiPoly p = *this;
        for (int i = 0; i < nvars_; ++i)
            for (int k = 0; k < gamma[i]; ++k)
                p = p.partial(i + 1);
        return p;
    }

    int degree_in(int axis) const
    {
        int d = 0;
        for (const auto& [e, c] : terms_)
            d = std::max(d, e[axis - 1]);
        return d;
    }

    int total_degree() const
    {
        int d = 0;
        for (const auto& [e, c] : terms_) {
            int s = 0;
            for (int v : e)
                s += v;
            d = std::max(d, s);
        }
        return d;
    }

    /// Keeps only the terms whose exponent satisfies pred.
    template <class Pred>
    MultiPoly filter(Pred pred) const
    {
        TermMap out;
        for (const auto& [e, c] : terms_)
            if (pred(e))
                out.emplace(e, c);
        return MultiPoly(nvars_, std::move(out));
    }

    MultiPoly scaled(const Rational& s) const
    {
        TermMap out;
        if (s != 0)
            for (const auto& [e, c] : terms_)
                out.emplace(e, c * s);
        return MultiPoly(nvars_, std::move(out));
    }

    friend MultiPoly operator+(const MultiPoly& p, const MultiPoly& q)
    {
        check_same(p, q);
        MultiPoly r = p;
        for (const auto& [e, c] : q.terms_)
            r.add_term(e, c);
        r.rebuild_cache();
        return r;
    }

    friend MultiPoly operator-(const MultiPoly& p, const MultiPoly& q) { return p + q.scaled(-1); }

    friend MultiPoly operator*(const MultiPoly& p, const MultiPoly& q)
    {
        check_same(p, q);
        MultiPoly r(p.nvars_);
        for (const auto& [e1, c1] : p.terms_)
            for (const auto& [e2, c2] : q.terms_) {
                Exponent e(e1.size());
                for (std::size_t i = 0; i < e.size(); ++i)
                    e[i] = e1[i] + e2[i];
                r.add_term(e, c1 * c2);
            }
        r.rebuild_cache();
        return r;
    }

    friend bool operator==(const MultiPoly& p, const MultiPoly& q)
    {
        return p.nvars_ == q.nvars_ && p.terms_ == q.terms_;
    }

private:
    struct CachedTerm {
        Exponent exp;
        double coef;
    };

    static void check_same(const MultiPoly& p, const MultiPoly& q)
    {
        if (p.nvars_ != q.nvars_)
            throw std::invalid_argument("polynomials have different variable counts");
    }

    void add_term(const Exponent& e, const Rational& c)
    {
        if (static_cast<int>(e.size()) != nvars_)
            throw std::invalid_argument("exponent vector length does not match nvars");
        for (int v : e)
            if (v < 0)
                throw std::invalid_argument("negative exponent");
        if (c == 0)
            return;
        auto [it, inserted] = terms_.emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0)
                terms_.erase(it);
        }
    }

    void rebuild_cache()
    {
        cache_.clear();
        for (const auto& [e, c] : terms_)
            cache_.push_back({e, to_double(c)});
    }

    int nvars_;
    TermMap terms_;
    std::vector<CachedTerm> cache_;
};

namespace detail {

class PolyParser {
public:
    PolyParser(std::string_view text, int nvars) : s_(text), nvars_(nvars) {}

    MultiPoly::TermMap parse()
    {
        MultiPoly::TermMap acc;
        skip_ws();
        if (at_end())
            throw ParseError("empty polynomial", pos_);
        int sign = 1;
        if (peek() == '+' || peek() == '-') {
            sign = peek() == '-' ? -1 : 1;
            ++pos_;
        }
        accumulate(acc, parse_term(), sign);
        for (;;) {
            skip_ws();
            if (at_end())
                break;
            char op = peek();
            if (op != '+' && op != '-')
                throw ParseError(std::string("expected '+' or '-', found '") + op + "'", pos_);
            ++pos_;
            accumulate(acc, parse_term(), op == '-' ? -1 : 1);
        }
        return acc;
    }

private:
    using Term = std::pair<Exponent, Rational>;

    static void accumulate(MultiPoly::TermMap& acc, Term t, int sign)
    {
        if (t.second == 0)
            return;
        auto [it, inserted] = acc.emplace(t.first, t.second * sign);
        if (!inserted) {
            it->second += t.second * sign;
            if (it->second == 0)
                acc.erase(it);
        }
    }

    Term parse_term()
    {
        skip_ws();
        Term t{Exponent(nvars_, 0), Rational(1)};
        if (at_end())
            throw ParseError("expected term", pos_);
        if (peek() != 'x') {
            t.second = parse_coef();
            skip_ws();
            if (at_end() || peek() != '*')
                return t; // bare constant
            ++pos_;
        }
        parse_factor(t.first);
        for (;;) {
            skip_ws();
            if (at_end() || peek() != '*')
                break;
            ++pos_;
            parse_factor(t.first);
        }
        return t;
    }

    Rational parse_coef()
    {
        std::size_t start = pos_;
        std::string lit;
        if (peek() == '-' || peek() == '+')
            lit += s_[pos_++];
        if (at_end() || !std::isdigit(static_cast<unsigned char>(peek())))
            throw ParseError("expected coefficient", pos_);
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek())))
            lit += s_[pos_++];
        if (!at_end() && peek() == '/') {
            lit += s_[pos_++];
            if (at_end() || !std::isdigit(static_cast<unsigned char>(peek())))
                throw ParseError("expected denominator", pos_);
            while (!at_end() && std::isdigit(static_cast<unsigned char>(peek())))
                lit += s_[pos_++];
        }
        try {
            return parse_rational(lit);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), start);
        }
    }

    void parse_factor(Exponent& e)
    {
        skip_ws();
        std::size_t start = pos_;
        if (at_end() || peek() != 'x')
            throw ParseError("expected variable", pos_);
        ++pos_;
        long idx = parse_posint();
        if (idx < 1 || idx > nvars_)
            throw ParseError("variable x" + std::to_string(idx) + " out of range 1.." + std::to_string(nvars_), start);
        long power = 1;
        skip_ws();
        if (!at_end() && peek() == '^') {
            ++pos_;
            skip_ws();
            power = parse_posint();
            if (power < 1)
                throw ParseError("exponent must be positive", pos_);
        }
        e[idx - 1] += static_cast<int>(power);
    }

    long parse_posint()
    {
        std::size_t start = pos_;
        long v = 0;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
            v = v * 10 + (peek() - '0');
            if (v > 1000000)
                throw ParseError("integer too large", start);
            ++pos_;
        }
        if (pos_ == start)
            throw ParseError("expected integer", pos_);
        return v;
    }

    void skip_ws()
    {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek())))
            ++pos_;
    }
    bool at_end() const { return pos_ >= s_.size(); }
    char peek() const { return s_[pos_]; }

    std::string_view s_;
    int nvars_;
    std::size_t pos_ = 0;
};

} // namespace detail

/**
 * Parses the polynomial grammar
 *
 *   poly   := term (('+'|'-') term)*
 *   term   := [coef '*'] factor ('*' factor)*
 *   factor := var ['^' posint]
 *   var    := 'x' posint
 *
 * with rational coefficient literals ("3", "-1", "2/3"). A leading sign on
 * the first term and bare constant terms are accepted. Like terms are merged.
 */
inline MultiPoly parse_poly(std::string_view text, int nvars, bool allow_zero = false)
{
    if (nvars < 1)
        throw std::invalid_argument("nvars must be positive");
    MultiPoly p(nvars, detail::PolyParser(text, nvars).parse());
    if (p.is_zero() && !allow_zero)
        throw std::invalid_argument("polynomial is identically zero");
    return p;
}

/// Canonical text form, descending lexicographic term order; parses back to p.
inline std::string format_poly(const MultiPoly& p)
{
    if (p.is_zero())
        return "0";
    std::string out;
    bool first = true;
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [e, c] = *it;
        Rational mag = c < 0 ? Rational(-c) : c;
        if (first)
            out += c < 0 ? "-" : "";
        else
            out += c < 0 ? " - " : " + ";
        first = false;
        std::string body;
        for (int i = 0; i < p.nvars(); ++i) {
            if (e[i] == 0)
                continue;
            if (!body.empty())
                body += "*";
            body += "x" + std::to_string(i + 1);
            if (e[i] > 1)
                body += "^" + std::to_string(e[i]);
        }
        if (mag != 1 || body.empty()) {
            std::string lit = numerator(mag).str();
            if (denominator(mag) != 1)
                lit += "/" + denominator(mag).str();
            out += lit;
            if (!body.empty())
                out += "*";
        }
        out += body;
    }
    return out;
}

} // namespace nk

#endif
