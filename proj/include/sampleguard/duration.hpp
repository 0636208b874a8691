#pragma once

#include <boost/rational.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "sampleguard/error.hpp"

namespace sampleguard {

using Rational = boost::rational<std::int64_t>;

/// Floor of a rational; boost::rational only truncates toward zero.
inline std::int64_t floor_of(const Rational& r) {
  std::int64_t q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0) --q;
  return q;
}

inline std::int64_t ceil_of(const Rational& r) { return -floor_of(-r); }

/// Exact time span in minutes. Never converted to floating point except for
/// reporting.
class Duration {
 public:
  constexpr Duration() = default;
  explicit Duration(Rational minutes) : value_(minutes) {}
  explicit Duration(std::int64_t minutes) : value_(minutes) {}
  Duration(std::int64_t num, std::int64_t den) : value_(num, den) {}

  static Duration minutes(std::int64_t m) { return Duration(m); }

  const Rational& value() const { return value_; }
  double to_double() const { return boost::rational_cast<double>(value_); }
  bool is_zero() const { return value_.numerator() == 0; }
  bool is_positive() const { return value_.numerator() > 0; }

  /// True when this is an integer multiple of `unit` (unit must be positive).
  bool is_multiple_of(const Duration& unit) const {
    Rational q = value_ / unit.value_;
    return q.denominator() == 1;
  }

  /// Number of whole `unit`s that fit, i.e. floor(this / unit).
  std::int64_t floor_div(const Duration& unit) const { return floor_of(value_ / unit.value_); }

  Duration& operator+=(const Duration& o) {
    value_ += o.value_;
    return *this;
  }
  Duration& operator-=(const Duration& o) {
    value_ -= o.value_;
    return *this;
  }

  friend Duration operator+(Duration a, const Duration& b) { return a += b; }
  friend Duration operator-(Duration a, const Duration& b) { return a -= b; }
  friend Duration operator*(const Duration& a, std::int64_t k) { return Duration(a.value_ * k); }
  friend Duration operator*(std::int64_t k, const Duration& a) { return Duration(a.value_ * k); }
  friend Rational operator/(const Duration& a, const Duration& b) { return a.value_ / b.value_; }

  friend bool operator==(const Duration& a, const Duration& b) { return a.value_ == b.value_; }
  friend std::strong_ordering operator<=>(const Duration& a, const Duration& b) {
    if (a.value_ < b.value_) return std::strong_ordering::less;
    if (b.value_ < a.value_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  /// Canonical text: integer ("10") or reduced fraction ("7/2").
  std::string str() const {
    if (value_.denominator() == 1) return std::to_string(value_.numerator());
    return std::to_string(value_.numerator()) + "/" + std::to_string(value_.denominator());
  }

  friend std::ostream& operator<<(std::ostream& os, const Duration& d) { return os << d.str(); }

 private:
  Rational value_{0};
};

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  if (!all_digits(s) || s.size() > 17) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

}  // namespace detail

/// Parses "10", "2.5", "7/2", optionally followed by "min". Negative values are
/// rejected with ErrorCode::Duration; malformed text with ErrorCode::Syntax.
inline Duration parse_duration(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.size() >= 3 && s.substr(s.size() - 3) == "min") {
    s.remove_suffix(3);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  }
  if (!s.empty() && s.front() == '-') throw Error(ErrorCode::Duration, "negative duration '" + std::string(text) + "'");
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);

  auto bad = [&] { return Error(ErrorCode::Syntax, "malformed duration '" + std::string(text) + "'"); };

  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = detail::parse_int(s.substr(0, slash));
    auto den = detail::parse_int(s.substr(slash + 1));
    if (!num || !den) throw bad();
    if (*den == 0) throw Error(ErrorCode::Duration, "zero denominator in '" + std::string(text) + "'");
    return Duration(*num, *den);
  }
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = s.substr(dot + 1);
    if (whole.empty()) whole = "0";
    auto w = detail::parse_int(whole);
    auto f = frac.empty() ? std::optional<std::int64_t>(0) : detail::parse_int(frac);
    if (!w || !f || frac.size() > 12) throw bad();
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    return Duration(Rational(*w) + Rational(*f, scale));
  }
  auto v = detail::parse_int(s);
  if (!v) throw bad();
  return Duration(*v);
}

}  // namespace sampleguard
