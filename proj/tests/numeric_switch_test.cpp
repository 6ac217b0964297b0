#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "generators.hpp"
#include "pcollab/numeric_switch.hpp"

using namespace pcollab;

namespace {

Decimal D(const char* s) { return Decimal::must_parse(s); }

std::vector<Decimal> values_of(const std::vector<NumberSpan>& spans) {
  std::vector<Decimal> v;
  for (auto& s : spans) v.push_back(s.value);
  return v;
}

}  // namespace

TEST(ExtractNumbers, LeakageExampleSentence) {
  const std::string text = "Total of Notional amounts 2005 is $43,593 .";
  auto spans = extract_numbers(text);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].value, D("2005"));
  EXPECT_EQ(spans[0].surface, "2005");
  EXPECT_EQ(spans[0].start, 26u);
  EXPECT_EQ(spans[1].value, D("43593"));
  EXPECT_EQ(spans[1].surface, "43,593");
  EXPECT_TRUE(spans[1].fmt.thousands);
  EXPECT_TRUE(spans[1].fmt.currency_or_percent);
  EXPECT_EQ(text.substr(spans[1].start, spans[1].end - spans[1].start), "43,593");
}

TEST(ExtractNumbers, Empty) { EXPECT_TRUE(extract_numbers("").empty()); }

TEST(ExtractNumbers, DecimalsWithOffsets) {
  // "increased " is 10 chars; " billion, or " is 13 more after "3.9".
  auto spans = extract_numbers("increased 3.9 billion, or 9.5");
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].value, D("3.9"));
  EXPECT_EQ(spans[0].start, 10u);
  EXPECT_EQ(spans[0].end, 13u);
  EXPECT_EQ(spans[0].fmt.decimals, 1);
  EXPECT_EQ(spans[1].value, D("9.5"));
  EXPECT_EQ(spans[1].start, 26u);
  EXPECT_EQ(spans[1].end, 29u);
}

TEST(ExtractNumbers, MalformedSeparatorsSplit) {
  EXPECT_EQ(values_of(extract_numbers("43,5")), (std::vector<Decimal>{D("43"), D("5")}));
  EXPECT_EQ(values_of(extract_numbers("1,2345")), (std::vector<Decimal>{D("1"), D("2345")}));
  EXPECT_EQ(values_of(extract_numbers("1234,567")), (std::vector<Decimal>{D("1234"), D("567")}));
  EXPECT_EQ(values_of(extract_numbers("1,234,567.89")), (std::vector<Decimal>{D("1234567.89")}));
  EXPECT_EQ(values_of(extract_numbers("December 31, 2017")), (std::vector<Decimal>{D("31"), D("2017")}));
}

TEST(ExtractNumbers, SignsAndRanges) {
  EXPECT_EQ(values_of(extract_numbers("fell to -5.2 from (-3)")), (std::vector<Decimal>{D("-5.2"), D("-3")}));
  EXPECT_EQ(values_of(extract_numbers("2016-2017")), (std::vector<Decimal>{D("2016"), D("2017")}));
  EXPECT_EQ(values_of(extract_numbers("no exponent 1e5")), (std::vector<Decimal>{D("1"), D("5")}));
}

TEST(ExtractNumbers, CodeModeSkipsIdentifiersCommentsStrings) {
  const std::string code =
      "# evidence: [Sentence 7]\n"
      "usage_2013 = 35712.0  # 2013\n"
      "label = \"value 44\"\n"
      "x = 1e5 + 0x1F + 2 * usage_2013 / 116\n";
  auto spans = extract_numbers(code, ScanMode::Code);
  EXPECT_EQ(values_of(spans), (std::vector<Decimal>{D("35712"), D("2"), D("116")}));
  EXPECT_EQ(spans[0].surface, "35712.0");
}

TEST(ExtractNumbers, SurfaceReproducedByRendering) {
  for (const char* t : {"$43,593", "3.90", "007", "-1,234.5", "12%", "0.25"}) {
    for (auto& s : extract_numbers(t)) EXPECT_EQ(render_number(s.value, s.fmt), s.surface) << t;
  }
}

TEST(BuildMapping, YearsKeepOffsets) {
  const std::vector<Decimal> years{D("2003"), D("2004"), D("2008")};
  bool saw_2010_start = false;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    SwitchPolicy p;
    p.seed = seed;
    auto m = build_mapping(years, p);
    const auto t3 = *m.forward(D("2003"));
    EXPECT_EQ(*m.forward(D("2004")) - t3, D("1"));
    EXPECT_EQ(*m.forward(D("2008")) - t3, D("5"));
    for (auto& e : m.entries()) EXPECT_EQ(e.cls, NumberClass::YearLike);
    if (t3 == D("2010")) saw_2010_start = true;
  }
  EXPECT_TRUE(saw_2010_start);
}

TEST(BuildMapping, SpecialIsFixedPoint) {
  auto m = build_mapping({D("30")}, SwitchPolicy{});
  ASSERT_EQ(m.entries().size(), 1u);
  EXPECT_EQ(m.entries()[0].cls, NumberClass::Special);
  EXPECT_EQ(*m.forward(D("30")), D("30"));
}

TEST(BuildMapping, GeneralOrderAgainstSortOracle) {
  SwitchPolicy p;
  p.seed = 20240617;
  const std::vector<Decimal> vals{D("24"), D("17"), D("22")};
  auto m = build_mapping(vals, p);
  // Oracle: sort originals, sort targets independently, compare positionally.
  std::vector<Decimal> orig, tgt;
  for (auto& e : m.entries()) {
    EXPECT_EQ(e.cls, NumberClass::General);
    orig.push_back(e.original);
    tgt.push_back(e.transformed);
  }
  std::vector<std::pair<Decimal, Decimal>> pairs;
  for (auto& e : m.entries()) pairs.push_back({e.original, e.transformed});
  std::sort(pairs.begin(), pairs.end(), [](auto& a, auto& b) { return a.first < b.first; });
  std::sort(tgt.begin(), tgt.end());
  ASSERT_EQ(pairs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(pairs[i].second, tgt[i]);
  EXPECT_LT(tgt[0], tgt[1]);
  EXPECT_LT(tgt[1], tgt[2]);
  for (auto& t : tgt) {
    EXPECT_NE(t, D("17"));
    EXPECT_NE(t, D("22"));
    EXPECT_NE(t, D("24"));
  }
}

TEST(BuildMapping, DeterministicForSeed) {
  SwitchPolicy p;
  p.seed = 99;
  const std::vector<Decimal> vals{D("2015"), D("43593"), D("3.9"), D("0.25"), D("28")};
  EXPECT_EQ(build_mapping(vals, p).to_json().dump(), build_mapping(vals, p).to_json().dump());
}

TEST(BuildMapping, TargetsAvoidStructuralConstants) {
  SwitchPolicy p;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    p.seed = seed;
    auto m = build_mapping({D("7"), D("8"), D("75"), D("150"), D("800")}, p);
    for (auto& e : m.entries())
      for (auto& c : p.structural_constants) EXPECT_NE(e.transformed, c);
  }
}

TEST(BuildMapping, DegeneratePolicyExhausts) {
  SwitchPolicy p;
  p.low_factor = D("1");
  p.high_factor = D("1");
  EXPECT_THROW(build_mapping({D("17")}, p), PolicyExhausted);
}

TEST(BuildMapping, DecimalPrecisionFollowsSmallestScale) {
  SwitchPolicy p;
  p.seed = 5;
  auto m = build_mapping({D("3.90"), D("3.9"), D("0.25")}, p);
  EXPECT_EQ(m.entries().size(), 2u);
  EXPECT_LE(m.forward(D("3.9"))->normalized().scale(), 1);
}

TEST(ApplyMapping, LeakageExamplePair) {
  NumberMapping m({{D("2005"), D("2013"), NumberClass::YearLike}, {D("43593"), D("35712"), NumberClass::General}}, 0);
  EXPECT_EQ(apply_mapping("Total of Notional amounts 2005 is $43,593", m, Direction::Forward),
            "Total of Notional amounts 2013 is $35,712");
  EXPECT_EQ(apply_mapping("Total of Notional amounts 2013 is $35,712", m, Direction::Inverse),
            "Total of Notional amounts 2005 is $43,593");
}

TEST(ApplyMapping, IdentityLeavesTextUnchanged) {
  const std::string t = "Mortgage loans 2017 is 124 , up from 116.50 and $1,234 (3.9%).";
  auto m = NumberMapping::identity(extract_values(t));
  EXPECT_EQ(apply_mapping(t, m, Direction::Forward), t);
}

TEST(ApplyMapping, UnmappedValuesPassThrough) {
  NumberMapping m({{D("24"), D("26"), NumberClass::General}}, 0);
  EXPECT_EQ(apply_mapping("24 of 100 and 24.0", m, Direction::Forward), "26 of 100 and 26.0");
}

TEST(ApplyMapping, RoundTripProperty) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    auto values = fixtures::random_value_set(rng);
    const auto text = fixtures::random_text(rng, values);
    SwitchPolicy p;
    p.seed = rng();
    auto m = build_mapping(extract_values(text), p);
    const auto fwd = apply_mapping(text, m, Direction::Forward);
    EXPECT_EQ(apply_mapping(fwd, m, Direction::Inverse), text);
    for (auto& e : m.entries()) {
      if (e.cls == NumberClass::Special) continue;
      for (auto& v : extract_values(fwd)) EXPECT_NE(v, e.original) << fwd;
    }
  }
}

TEST(NumberMappingJson, RoundTrip) {
  SwitchPolicy p;
  p.seed = 11;
  auto m = build_mapping({D("2005"), D("43593"), D("3.90"), D("30")}, p);
  auto j = m.to_json();
  EXPECT_EQ(j["seed"], 11);
  EXPECT_EQ(NumberMapping::from_json(j).to_json(), j);
  for (auto& e : j["entries"]) EXPECT_TRUE(e["original"].is_string());
}

TEST(NumberMapping, RejectsNonInjective) {
  EXPECT_THROW(NumberMapping({{D("3"), D("5"), NumberClass::General}, {D("4"), D("5"), NumberClass::General}}, 0),
               std::invalid_argument);
}
