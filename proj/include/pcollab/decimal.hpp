#pragma once

#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pcollab {

/// Exact base-10 number: `units * 10^-scale`.
///
/// The scale is kept as written ("3.90" has scale 2) so formatting can be
/// reproduced, while comparison and hashing are by value ("3.90" == "3.9").
/// Magnitudes are bounded by 128-bit units, which is far beyond anything a
/// financial document or a generated tool will carry.
class Decimal {
 public:
  using Units = __int128;
  static constexpr int kMaxScale = 30;

  constexpr Decimal() = default;
  constexpr Decimal(Units units, int scale) : units_(units), scale_(scale) {}

  static constexpr Decimal from_int(long long v) { return Decimal(v, 0); }

  /// Parses `[+-]digits[.digits]`. No separators, no exponent. Fraction digits
  /// beyond kMaxScale are truncated.
  static std::optional<Decimal> parse(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::size_t i = 0;
    bool neg = false;
    if (s[0] == '-' || s[0] == '+') {
      neg = s[0] == '-';
      ++i;
    }
    Units units = 0;
    int scale = 0;
    int digits = 0;
    bool seen_point = false;
    bool any = false;
    for (; i < s.size(); ++i) {
      const char c = s[i];
      if (c == '.') {
        if (seen_point) return std::nullopt;
        seen_point = true;
        continue;
      }
      if (c < '0' || c > '9') return std::nullopt;
      any = true;
      if (seen_point && scale >= kMaxScale) continue;
      if (digits > 0 || c != '0') ++digits;
      if (digits > 36) return std::nullopt;
      units = units * 10 + (c - '0');
      if (seen_point) ++scale;
    }
    if (!any) return std::nullopt;
    return Decimal(neg ? -units : units, scale);
  }

  static Decimal must_parse(std::string_view s) {
    auto d = parse(s);
    if (!d) throw std::invalid_argument("not a decimal: " + std::string(s));
    return *d;
  }

  constexpr Units units() const { return units_; }
  constexpr int scale() const { return scale_; }
  constexpr bool negative() const { return units_ < 0; }
  constexpr bool is_zero() const { return units_ == 0; }

  bool is_integer() const { return normalized().scale_ == 0; }

  /// Same value with trailing fractional zeros removed.
  Decimal normalized() const {
    Decimal d = *this;
    while (d.scale_ > 0 && d.units_ % 10 == 0) {
      d.units_ /= 10;
      --d.scale_;
    }
    return d;
  }

  /// Same value at a larger scale.
  Decimal widened(int scale) const {
    Decimal d = *this;
    while (d.scale_ < scale) {
      d.units_ *= 10;
      ++d.scale_;
    }
    return d;
  }

  /// Drops fractional digits beyond `scale` (toward zero).
  Decimal truncated(int scale) const {
    Decimal d = *this;
    while (d.scale_ > scale) {
      d.units_ /= 10;
      --d.scale_;
    }
    return d;
  }

  /// Rounds half away from zero to `scale` fractional digits; the result has
  /// exactly that scale.
  Decimal rounded(int scale) const {
    if (scale_ <= scale) return widened(scale);
    Decimal d = *this;
    const bool neg = d.units_ < 0;
    Units mag = neg ? -d.units_ : d.units_;
    int last = 0;
    while (d.scale_ > scale) {
      last = static_cast<int>(mag % 10);
      mag /= 10;
      --d.scale_;
    }
    if (last >= 5) ++mag;
    d.units_ = neg ? -mag : mag;
    return d;
  }

  Decimal abs() const { return Decimal(units_ < 0 ? -units_ : units_, scale_); }
  Decimal operator-() const { return Decimal(-units_, scale_); }

  friend Decimal operator+(const Decimal& a, const Decimal& b) {
    const int s = a.scale_ > b.scale_ ? a.scale_ : b.scale_;
    return Decimal(a.widened(s).units_ + b.widened(s).units_, s);
  }
  friend Decimal operator-(const Decimal& a, const Decimal& b) { return a + (-b); }
  friend Decimal operator*(const Decimal& a, const Decimal& b) {
    return Decimal(a.units_ * b.units_, a.scale_ + b.scale_).normalized();
  }

  /// Halves exactly (one extra fractional digit at most).
  Decimal half() const { return (*this * Decimal(5, 1)); }

  friend bool operator==(const Decimal& a, const Decimal& b) { return compare(a, b) == 0; }
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
    const int c = compare(a, b);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  double to_double() const { return std::strtod(to_string().c_str(), nullptr); }

  /// Renders with the stored scale, e.g. Decimal(3900, 3) -> "3.900".
  std::string to_string() const { return format(scale_, false); }

  /// Renders at exactly `places` fractional digits (value must be representable
  /// at that precision, otherwise digits are truncated), optionally with
  /// comma thousands separators and left zero padding of the integer part.
  std::string format(int places, bool thousands, int min_int_digits = 1) const {
    Decimal d = places >= scale_ ? widened(places) : truncated(places);
    const bool neg = d.units_ < 0;
    Units mag = neg ? -d.units_ : d.units_;
    std::string digits;
    do {
      digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(mag % 10)));
      mag /= 10;
    } while (mag > 0);
    while (static_cast<int>(digits.size()) < places + 1) digits.insert(digits.begin(), '0');
    std::string int_part = digits.substr(0, digits.size() - static_cast<std::size_t>(places));
    const std::string frac_part = digits.substr(int_part.size());
    while (static_cast<int>(int_part.size()) < min_int_digits) int_part.insert(int_part.begin(), '0');
    if (thousands) {
      std::string grouped;
      const auto n = int_part.size();
      for (std::size_t i = 0; i < n; ++i) {
        grouped.push_back(int_part[i]);
        const auto remaining = n - i - 1;
        if (remaining > 0 && remaining % 3 == 0) grouped.push_back(',');
      }
      int_part = std::move(grouped);
    }
    std::string out = neg && d.units_ != 0 ? "-" : "";
    out += int_part;
    if (places > 0) {
      out.push_back('.');
      out += frac_part;
    }
    return out;
  }

  std::size_t hash() const {
    const Decimal n = normalized();
    const auto lo = static_cast<std::uint64_t>(n.units_);
    const auto hi = static_cast<std::uint64_t>(n.units_ >> 64);
    std::size_t h = std::hash<std::uint64_t>{}(lo);
    h ^= std::hash<std::uint64_t>{}(hi) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::size_t>(n.scale_) * 0x100000001b3ULL;
    return h;
  }

 private:
  static Units pow10(int n) {
    Units p = 1;
    while (n-- > 0) p *= 10;
    return p;
  }

  // Splits into integer and fractional parts so that no intermediate product
  // can overflow for scales up to kMaxScale.
  static int compare(const Decimal& a, const Decimal& b) {
    const Units ia = a.units_ / pow10(a.scale_);
    const Units ib = b.units_ / pow10(b.scale_);
    if (ia != ib) return ia < ib ? -1 : 1;
    const int s = a.scale_ > b.scale_ ? a.scale_ : b.scale_;
    const Units fa = (a.units_ % pow10(a.scale_)) * pow10(s - a.scale_);
    const Units fb = (b.units_ % pow10(b.scale_)) * pow10(s - b.scale_);
    if (fa != fb) return fa < fb ? -1 : 1;
    return 0;
  }

  Units units_ = 0;
  int scale_ = 0;
};

struct DecimalHash {
  std::size_t operator()(const Decimal& d) const { return d.hash(); }
};

inline std::string to_string(const Decimal& d) { return d.to_string(); }

}  // namespace pcollab
