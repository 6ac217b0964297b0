#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "pcollab/decimal.hpp"
#include "pcollab/errors.hpp"

namespace pcollab {

// ---------------------------------------------------------------------------
// Number extraction
// ---------------------------------------------------------------------------

struct NumberFormat {
  bool thousands = false;        // comma grouping present in the surface
  int decimals = 0;              // fractional digits in the surface
  bool currency_or_percent = false;
  int min_int_digits = 1;        // > 1 only for zero-padded surfaces like "007"
};

struct NumberSpan {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
  Decimal value;
  NumberFormat fmt;
};

/// Text mode accepts signs and thousands separators and extracts digits even
/// when glued to letters ("FY2017"). Code mode follows literal syntax: no
/// separators, no sign, skips comments and string literals, and ignores
/// digits that belong to identifiers or to exotic literals (1e5, 0x1f, 1_000).
enum class ScanMode { Text, Code };

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_ident(char c) { return is_alpha(c) || is_digit(c) || c == '_'; }

inline std::size_t skip_python_string(std::string_view s, std::size_t i) {
  const char q = s[i];
  const bool triple = i + 2 < s.size() && s[i + 1] == q && s[i + 2] == q;
  std::size_t j = i + (triple ? 3 : 1);
  while (j < s.size()) {
    if (s[j] == '\\') {
      j += 2;
      continue;
    }
    if (triple) {
      if (j + 2 < s.size() && s[j] == q && s[j + 1] == q && s[j + 2] == q) return j + 3;
    } else if (s[j] == q) {
      return j + 1;
    } else if (s[j] == '\n') {
      return j;
    }
    ++j;
  }
  return s.size();
}

}  // namespace detail

/// Renders `value` using the formatting hints of a source span. Keeps the
/// span's decimal-place count when the value fits in it, else falls back to
/// the value's own minimal exact rendering.
inline std::string render_number(const Decimal& value, const NumberFormat& fmt) {
  const Decimal n = value.normalized();
  const int places = n.scale() <= fmt.decimals ? fmt.decimals : n.scale();
  return value.format(places, fmt.thousands, fmt.min_int_digits);
}

inline std::vector<NumberSpan> extract_numbers(std::string_view text,
                                               ScanMode mode = ScanMode::Text) {
  using detail::is_digit;
  using detail::is_ident;
  std::vector<NumberSpan> spans;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (mode == ScanMode::Code) {
      if (c == '#') {
        while (i < n && text[i] != '\n') ++i;
        continue;
      }
      if (c == '"' || c == '\'') {
        i = detail::skip_python_string(text, i);
        continue;
      }
      if (is_ident(c) && !is_digit(c)) {
        while (i < n && is_ident(text[i])) ++i;
        continue;
      }
      // A dot directly before a digit starts a bare fraction or attribute.
      if (c == '.' && i + 1 < n && is_digit(text[i + 1])) {
        ++i;
        while (i < n && is_ident(text[i])) ++i;
        continue;
      }
    }
    if (!is_digit(c)) {
      ++i;
      continue;
    }

    std::size_t start = i;
    std::size_t j = i;
    while (j < n && is_digit(text[j])) ++j;
    const std::size_t lead_len = j - i;
    bool thousands = false;
    if (mode == ScanMode::Text && lead_len <= 3) {
      while (j + 3 < n && text[j] == ',' && is_digit(text[j + 1]) && is_digit(text[j + 2]) &&
             is_digit(text[j + 3]) && (j + 4 >= n || !is_digit(text[j + 4]))) {
        thousands = true;
        j += 4;
      }
    }
    std::size_t int_end = j;
    int decimals = 0;
    if (j + 1 < n && text[j] == '.' && is_digit(text[j + 1])) {
      ++j;
      while (j < n && is_digit(text[j])) {
        ++j;
        ++decimals;
      }
    }

    if (mode == ScanMode::Code && j < n &&
        (is_ident(text[j]) || (text[j] == '.' && j + 1 < n && is_ident(text[j + 1])))) {
      // 1e5, 0x1F, 1_000, 5j, 1.2.3 ... not a plain literal
      while (j < n && (is_ident(text[j]) || text[j] == '.')) ++j;
      i = j;
      continue;
    }

    std::string digits;
    for (std::size_t k = start; k < j; ++k)
      if (text[k] != ',') digits.push_back(text[k]);
    auto value = Decimal::parse(digits);
    if (!value) {  // absurdly long digit run
      i = j;
      continue;
    }

    if (mode == ScanMode::Text && start > 0 && text[start - 1] == '-' && !value->is_zero()) {
      const bool glued = start >= 2 && (is_ident(text[start - 2]) || text[start - 2] == ')' ||
                                        text[start - 2] == '.' || text[start - 2] == '-');
      if (!glued) {
        --start;
        *value = -*value;
      }
    }

    NumberSpan span;
    span.start = start;
    span.end = j;
    span.surface = std::string(text.substr(start, j - start));
    span.value = *value;
    span.fmt.thousands = thousands;
    span.fmt.decimals = decimals;
    const std::size_t int_start = text[start] == '-' ? start + 1 : start;
    const std::size_t int_digits = int_end - int_start;
    if (!thousands && int_digits > 1 && text[int_start] == '0')
      span.fmt.min_int_digits = static_cast<int>(int_digits);
    span.fmt.currency_or_percent = (start > 0 && text[start - 1] == '$') || (j < n && text[j] == '%');
    spans.push_back(std::move(span));
    i = j;
  }
  return spans;
}

/// Values of all numbers in `text`, in order of appearance.
inline std::vector<Decimal> extract_values(std::string_view text, ScanMode mode = ScanMode::Text) {
  std::vector<Decimal> out;
  for (auto& s : extract_numbers(text, mode)) out.push_back(s.value);
  return out;
}

// ---------------------------------------------------------------------------
// Mapping
// ---------------------------------------------------------------------------

enum class NumberClass { Special, YearLike, General };

inline const char* to_string(NumberClass c) {
  switch (c) {
    case NumberClass::Special: return "Special";
    case NumberClass::YearLike: return "YearLike";
    case NumberClass::General: return "General";
  }
  return "General";
}

inline NumberClass number_class_from_string(std::string_view s) {
  if (s == "Special") return NumberClass::Special;
  if (s == "YearLike") return NumberClass::YearLike;
  if (s == "General") return NumberClass::General;
  throw std::invalid_argument("unknown number class: " + std::string(s));
}

struct SwitchPolicy {
  std::vector<Decimal> special_set{Decimal::from_int(1),  Decimal::from_int(12), Decimal::from_int(28),
                                   Decimal::from_int(29), Decimal::from_int(30), Decimal::from_int(31)};
  long long year_lo = 1990;
  long long year_hi = 2030;
  long long base_year_lo = 1980;
  long long base_year_hi = 2040;
  // General bucket target interval is [lowest * low_factor, highest * high_factor].
  Decimal low_factor{5, 1};
  Decimal high_factor{15, 1};
  std::vector<Decimal> structural_constants{Decimal::from_int(0),   Decimal::from_int(1),
                                            Decimal::from_int(2),   Decimal::from_int(10),
                                            Decimal::from_int(100), Decimal::from_int(1000)};
  std::uint64_t seed = 0;
  int max_resamples = 64;

  /// Value-based classification. Structural constants and zero are pinned like
  /// special numbers so that generated code constants survive substitution.
  NumberClass classify(const Decimal& v) const {
    if (v.is_zero()) return NumberClass::Special;
    for (auto& s : special_set)
      if (s == v) return NumberClass::Special;
    for (auto& s : structural_constants)
      if (s == v) return NumberClass::Special;
    if (v.is_integer() && v >= Decimal::from_int(year_lo) && v <= Decimal::from_int(year_hi))
      return NumberClass::YearLike;
    return NumberClass::General;
  }
};

struct MappingEntry {
  Decimal original;
  Decimal transformed;
  NumberClass cls = NumberClass::General;
};

enum class Direction { Forward, Inverse };

/// The switch `h` with its inverse. Immutable once built.
class NumberMapping {
 public:
  NumberMapping() = default;

  /// Throws std::invalid_argument unless originals and targets are each distinct.
  NumberMapping(std::vector<MappingEntry> entries, std::uint64_t seed)
      : entries_(std::move(entries)), seed_(seed) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!forward_.emplace(entries_[i].original, i).second)
        throw std::invalid_argument("duplicate original " + entries_[i].original.to_string());
      if (!inverse_.emplace(entries_[i].transformed, i).second)
        throw std::invalid_argument("mapping not injective at " + entries_[i].transformed.to_string());
    }
  }

  static NumberMapping identity(const std::vector<Decimal>& values) {
    std::vector<MappingEntry> e;
    std::unordered_set<Decimal, DecimalHash> seen;
    for (auto& v : values)
      if (seen.insert(v).second) e.push_back({v, v, NumberClass::Special});
    return NumberMapping(std::move(e), 0);
  }

  const std::vector<MappingEntry>& entries() const { return entries_; }
  std::uint64_t seed() const { return seed_; }
  bool empty() const { return entries_.empty(); }

  std::optional<Decimal> forward(const Decimal& v) const { return lookup(forward_, v, true); }
  std::optional<Decimal> inverse(const Decimal& v) const { return lookup(inverse_, v, false); }
  std::optional<Decimal> map(const Decimal& v, Direction d) const {
    return d == Direction::Forward ? forward(v) : inverse(v);
  }

  const MappingEntry* entry_for_original(const Decimal& v) const {
    auto it = forward_.find(v);
    return it == forward_.end() ? nullptr : &entries_[it->second];
  }
  const MappingEntry* entry_for_target(const Decimal& v) const {
    auto it = inverse_.find(v);
    return it == inverse_.end() ? nullptr : &entries_[it->second];
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["seed"] = seed_;
    j["entries"] = nlohmann::json::array();
    for (auto& e : entries_)
      j["entries"].push_back(
          {{"original", e.original.to_string()}, {"transformed", e.transformed.to_string()}, {"class", to_string(e.cls)}});
    return j;
  }

  static NumberMapping from_json(const nlohmann::json& j) {
    std::vector<MappingEntry> entries;
    for (auto& e : j.at("entries")) {
      entries.push_back({Decimal::must_parse(e.at("original").get<std::string>()),
                         Decimal::must_parse(e.at("transformed").get<std::string>()),
                         number_class_from_string(e.at("class").get<std::string>())});
    }
    return NumberMapping(std::move(entries), j.value("seed", std::uint64_t{0}));
  }

 private:
  using Index = std::unordered_map<Decimal, std::size_t, DecimalHash>;

  std::optional<Decimal> lookup(const Index& idx, const Decimal& v, bool fwd) const {
    auto it = idx.find(v);
    if (it == idx.end()) return std::nullopt;
    return fwd ? entries_[it->second].transformed : entries_[it->second].original;
  }

  std::vector<MappingEntry> entries_;
  std::uint64_t seed_ = 0;
  Index forward_;
  Index inverse_;
};

namespace detail {

using Units = Decimal::Units;

inline Units pow10_units(int n) {
  Units p = 1;
  while (n-- > 0) p *= 10;
  return p;
}

inline Units floor_div(Units a, Units b) {
  Units q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Grid units of `v` at `scale`, rounded toward -inf or +inf.
inline Units grid_floor(const Decimal& v, int scale) {
  if (v.scale() <= scale) return v.widened(scale).units();
  return floor_div(v.units(), pow10_units(v.scale() - scale));
}
inline Units grid_ceil(const Decimal& v, int scale) {
  if (v.scale() <= scale) return v.widened(scale).units();
  return -floor_div(-v.units(), pow10_units(v.scale() - scale));
}

// floor(log10 |v|) for v != 0.
inline int magnitude(const Decimal& v) {
  Units mag = v.units() < 0 ? -v.units() : v.units();
  int digits = 0;
  while (mag > 0) {
    mag /= 10;
    ++digits;
  }
  return digits - 1 - v.scale();
}

inline Units sample_below(std::mt19937_64& rng, Units n) {
  if (n <= static_cast<Units>(UINT64_MAX)) {
    std::uniform_int_distribution<std::uint64_t> dist(0, static_cast<std::uint64_t>(n - 1));
    return static_cast<Units>(dist(rng));
  }
  const Units r = (static_cast<Units>(rng()) << 64) | static_cast<Units>(rng());
  return (r < 0 ? -r : r) % n;
}

struct Bucket {
  std::vector<Decimal> values;  // ascending
  int grid_scale = 0;
  Decimal lo, hi;
  bool lo_exclusive = false;
  bool hi_exclusive = false;
};

inline Units first_point(const Bucket& b) {
  return b.lo_exclusive ? grid_floor(b.lo, b.grid_scale) + 1 : grid_ceil(b.lo, b.grid_scale);
}
inline Units last_point(const Bucket& b) {
  return b.hi_exclusive ? grid_ceil(b.hi, b.grid_scale) - 1 : grid_floor(b.hi, b.grid_scale);
}

inline Decimal pow10_decimal(int m) {
  return m >= 0 ? Decimal(pow10_units(m), 0) : Decimal(1, -m);
}

// Number of admissible grid points in the bucket interval, saturating at `cap`.
inline std::size_t admissible_points(const Bucket& b, const std::unordered_set<Decimal, DecimalHash>& forbidden,
                                     std::size_t cap) {
  const int g = b.grid_scale;
  const Units first = first_point(b);
  const Units last = last_point(b);
  if (last < first) return 0;
  if (last - first + 1 > static_cast<Units>(cap + forbidden.size())) return cap;
  std::size_t n = 0;
  for (Units u = first; u <= last && n < cap; ++u)
    if (!forbidden.count(Decimal(u, g))) ++n;
  return n;
}

// Draws `k` distinct allowed grid points in [lo, hi] at the bucket's scale,
// returned ascending. Empty optional when the interval is too small.
inline std::optional<std::vector<Decimal>> sample_bucket(
    const Bucket& b, std::mt19937_64& rng, const std::unordered_set<Decimal, DecimalHash>& forbidden) {
  const int g = b.grid_scale;
  const Units first = first_point(b);
  const Units last = last_point(b);
  const std::size_t k = b.values.size();
  if (last < first) return std::nullopt;
  const Units count = last - first + 1;
  std::vector<Units> picked;
  const Units small_limit = static_cast<Units>(4 * (k + forbidden.size()) + 4096);
  if (count <= small_limit) {
    std::vector<Units> allowed;
    for (Units u = first; u <= last; ++u)
      if (!forbidden.count(Decimal(u, g))) allowed.push_back(u);
    if (allowed.size() < k) return std::nullopt;
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(sample_below(rng, static_cast<Units>(allowed.size() - i)));
      std::swap(allowed[i], allowed[j]);
      picked.push_back(allowed[i]);
    }
  } else {
    while (picked.size() < k) {
      const Units u = first + sample_below(rng, count);
      if (forbidden.count(Decimal(u, g))) continue;
      if (std::find(picked.begin(), picked.end(), u) != picked.end()) continue;
      picked.push_back(u);
    }
  }
  std::sort(picked.begin(), picked.end());
  std::vector<Decimal> out;
  out.reserve(k);
  for (auto u : picked) out.emplace_back(u, g);
  return out;
}

}  // namespace detail

/// Builds the switch over `values`. Duplicate values collapse to one entry;
/// a value's grid precision is the smallest scale among its occurrences so the
/// target can be rendered at every occurrence's decimal count.
///
/// Targets never equal a structural constant, any input value, or any value in
/// `extra_forbidden` (e.g. numbers elsewhere in the source document).
inline NumberMapping build_mapping(const std::vector<Decimal>& values, const SwitchPolicy& policy,
                                   const std::vector<Decimal>& extra_forbidden = {}) {
  // Unique by value, keeping the smallest observed scale.
  std::vector<Decimal> uniq;
  {
    std::unordered_map<Decimal, std::size_t, DecimalHash> pos;
    for (auto& v : values) {
      auto [it, fresh] = pos.emplace(v, uniq.size());
      if (fresh) {
        uniq.push_back(v);
      } else if (v.scale() < uniq[it->second].scale()) {
        uniq[it->second] = v;
      }
    }
  }

  std::vector<Decimal> specials, years, generals;
  for (auto& v : uniq) {
    switch (policy.classify(v)) {
      case NumberClass::Special: specials.push_back(v); break;
      case NumberClass::YearLike: years.push_back(v.normalized()); break;
      case NumberClass::General: generals.push_back(v); break;
    }
  }
  std::sort(years.begin(), years.end());
  std::sort(generals.begin(), generals.end());

  std::unordered_set<Decimal, DecimalHash> forbidden(uniq.begin(), uniq.end());
  forbidden.insert(policy.structural_constants.begin(), policy.structural_constants.end());
  forbidden.insert(extra_forbidden.begin(), extra_forbidden.end());

  // Buckets by sign and decimal magnitude. Each target interval is the
  // scaled [lowest, highest] range clipped to the bucket's own decade, so
  // targets keep their digit count and buckets cannot overlap.
  std::vector<detail::Bucket> buckets;
  {
    std::map<std::pair<int, int>, std::vector<Decimal>> grouped;
    for (auto& v : generals) {
      const int sign = v.negative() ? -1 : 1;
      grouped[{sign, sign * detail::magnitude(v)}].push_back(v);
    }
    for (auto& [key, vals] : grouped) {
      detail::Bucket b;
      b.values = vals;
      b.grid_scale = vals.front().scale();
      for (auto& v : vals) b.grid_scale = std::min(b.grid_scale, v.scale());
      const Decimal& lowest = vals.front();
      const Decimal& highest = vals.back();
      const int mag = key.first * key.second;
      const Decimal decade_lo = detail::pow10_decimal(mag);
      const Decimal decade_hi = detail::pow10_decimal(mag + 1);
      if (key.first > 0) {
        b.lo = std::max(lowest * policy.low_factor, decade_lo);
        b.hi = highest * policy.high_factor;
        if (b.hi >= decade_hi) {
          b.hi = decade_hi;
          b.hi_exclusive = true;
        }
      } else {
        b.lo = lowest * policy.high_factor;
        if (b.lo <= -decade_hi) {
          b.lo = -decade_hi;
          b.lo_exclusive = true;
        }
        b.hi = std::min(highest * policy.low_factor, -decade_lo);
      }
      buckets.push_back(std::move(b));
    }
    // A cramped bucket (e.g. {3, 4, 5}) cannot hold k distinct admissible
    // integers; give it finer decimal targets instead.
    for (auto& b : buckets) {
      for (int refine = 0; refine < 6; ++refine) {
        if (detail::admissible_points(b, forbidden, 2 * b.values.size()) >= 2 * b.values.size()) break;
        ++b.grid_scale;
      }
    }
  }

  std::mt19937_64 rng(policy.seed);
  for (int attempt = 0; attempt < policy.max_resamples; ++attempt) {
    std::vector<MappingEntry> entries;
    for (auto& s : specials) entries.push_back({s, s, NumberClass::Special});

    bool ok = true;
    if (!years.empty()) {
      std::uniform_int_distribution<long long> base_dist(policy.base_year_lo, policy.base_year_hi);
      const Decimal base = Decimal::from_int(base_dist(rng));
      for (auto& y : years) {
        const Decimal t = base + (y - years.front());
        if (forbidden.count(t)) ok = false;
        entries.push_back({y, t, NumberClass::YearLike});
      }
    }
    for (auto& b : buckets) {
      if (!ok) break;
      auto targets = detail::sample_bucket(b, rng, forbidden);
      if (!targets) {
        ok = false;
        break;
      }
      for (std::size_t i = 0; i < b.values.size(); ++i)
        entries.push_back({b.values[i], (*targets)[i], NumberClass::General});
    }
    if (!ok) continue;

    std::unordered_set<Decimal, DecimalHash> seen_targets;
    for (auto& e : entries)
      if (!seen_targets.insert(e.transformed).second) ok = false;
    if (!ok) continue;

    return NumberMapping(std::move(entries), policy.seed);
  }
  throw PolicyExhausted("no injective switch found after " + std::to_string(policy.max_resamples) +
                        " resamples");
}

/// Decimal places to use when a span is rewritten through `e`. Targets drawn
/// on a finer grid than their original carry the extra digits forward and drop
/// them again on the way back, so inverse(forward(text)) restores surfaces.
inline NumberFormat shifted_format(NumberFormat fmt, const MappingEntry& e, Direction dir) {
  const int extra = std::max(0, e.transformed.scale() - e.original.scale());
  fmt.decimals = dir == Direction::Forward ? fmt.decimals + extra : std::max(0, fmt.decimals - extra);
  return fmt;
}

/// Replaces every number whose value is a key of the mapping (in the chosen
/// direction), re-rendered with the span's own formatting. Values without an
/// entry pass through untouched.
inline std::string apply_mapping(std::string_view text, const NumberMapping& mapping, Direction dir) {
  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  const bool fwd = dir == Direction::Forward;
  for (auto& span : extract_numbers(text, ScanMode::Text)) {
    const MappingEntry* e = fwd ? mapping.entry_for_original(span.value) : mapping.entry_for_target(span.value);
    if (!e) continue;
    out.append(text.substr(cursor, span.start - cursor));
    out += render_number(fwd ? e->transformed : e->original, shifted_format(span.fmt, *e, dir));
    cursor = span.end;
  }
  out.append(text.substr(cursor));
  return out;
}

inline std::vector<std::string> apply_mapping(const std::vector<std::string>& texts, const NumberMapping& mapping,
                                              Direction dir) {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (auto& t : texts) out.push_back(apply_mapping(t, mapping, dir));
  return out;
}

struct SwitchedQuery {
  std::vector<std::string> sentences;
  std::string question;
  std::shared_ptr<const NumberMapping> mapping;
};

}  // namespace pcollab
