#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pcollab/decimal.hpp"
#include "pcollab/errors.hpp"
#include "pcollab/numeric_switch.hpp"

namespace pcollab {

/// Answers are compared at this many fractional digits.
inline constexpr int kAnswerPlaces = 5;

inline Decimal normalize_answer(const Decimal& value) { return value.rounded(kAnswerPlaces); }

/// First numeric token of `raw` (currency symbols, separators and surrounding
/// words ignored), rounded half away from zero to five places. Throws
/// NotNumeric when there is none.
inline Decimal normalize_answer(std::string_view raw) {
  auto spans = extract_numbers(raw, ScanMode::Text);
  if (spans.empty()) throw NotNumeric("no numeric answer in \"" + std::string(raw) + "\"");
  return normalize_answer(spans.front().value);
}

inline std::optional<Decimal> try_normalize_answer(std::string_view raw) {
  try {
    return normalize_answer(raw);
  } catch (const NotNumeric&) {
    return std::nullopt;
  }
}

enum class MatchKind { None, Exact, PercentScaled };

/// Equal at five places, or equal once one side is read as a percentage of
/// the other (pred*100 or pred/100 matches gold).
inline MatchKind match_kind(const Decimal& pred, const Decimal& gold) {
  const Decimal p = normalize_answer(pred);
  const Decimal g = normalize_answer(gold);
  if (p == g) return MatchKind::Exact;
  if (normalize_answer(pred * Decimal::from_int(100)) == g) return MatchKind::PercentScaled;
  if (normalize_answer(pred * Decimal(1, 2)) == g) return MatchKind::PercentScaled;
  return MatchKind::None;
}

inline bool answers_match(const Decimal& pred, const Decimal& gold) { return match_kind(pred, gold) != MatchKind::None; }

}  // namespace pcollab
