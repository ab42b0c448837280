#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <string>
#include <string_view>

namespace ebla {

/// Exact rational used wherever the inputs are rational (worked examples, tables).
using Rational = boost::multiprecision::cpp_rational;

/// Parses "p/q", "p", or a plain decimal literal ("0.05") into an exact rational.
/// Throws std::invalid_argument on malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

/// Always "p/q" in lowest terms, e.g. "1/16", "0/1", "3/1".
std::string to_fraction_string(const Rational& r);

/// 12-significant-digit decimal rendering of an exact rational.
std::string to_decimal_string(const Rational& r, int significant_digits = 12);

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double x) { return x; }

/// Exact conversion of a binary double into a rational.
Rational exact_rational(double x);

// Tolerance-aware comparisons: exact for rationals, absolute tolerance for doubles.
inline bool nearly_equal(const Rational& a, const Rational& b, double /*tol*/ = 0.0) { return a == b; }
inline bool nearly_equal(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

}  // namespace ebla
