#ifndef NK_RATIONAL_HPP
#define NK_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace nk {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline BigInt numerator(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt denominator(const Rational& r) { return boost::multiprecision::denominator(r); }

/// "p/q" with q > 0, always including the denominator.
inline std::string to_fraction_string(const Rational& r)
{
    return numerator(r).str() + "/" + denominator(r).str();
}

/// Accepts "p", "-p" or "p/q".
inline Rational parse_rational(std::string_view text)
{
    auto slash = text.find('/');
    try {
        if (slash == std::string_view::npos)
            return Rational(BigInt(std::string(text)));
        BigInt num(std::string(text.substr(0, slash)));
        BigInt den(std::string(text.substr(slash + 1)));
        if (den == 0)
            throw std::invalid_argument("zero denominator in rational '" + std::string(text) + "'");
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
    }
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

} // namespace nk

#endif
