#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "e2e_fixture.hpp"
#include "pcollab/distillation_filter.hpp"

using namespace pcollab;

namespace {

Decimal D(const char* s) { return Decimal::must_parse(s); }

TEST(Conflicts, GlobalManufacturingPairConflicts) {
  const std::vector<std::string> s = {
      "Total output of Global Manufacturing Division, N.A. Basel III Standardized Transitional Dec 31, 2017 is 184375.",
      "Total output of Global Manufacturing Division, N.A. Basel III Standardized Transitional Dec 31, 2017 is 195839."};
  const auto c = detect_numeric_conflicts(s);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(Conflicts, DistinctSubjectsYearsAndExactDuplicatesAreFine) {
  EXPECT_TRUE(detect_numeric_conflicts({"Robot units of For the years ended December 31, 2017 is 24 units.",
                                        "Vehicle units of For the years ended December 31, 2017 is 124 units."})
                  .empty());
  EXPECT_TRUE(detect_numeric_conflicts({"Robot units of For the years ended December 31, 2017 is 24 units.",
                                        "Robot units of For the years ended December 31, 2016 is 22 units."})
                  .empty());
  EXPECT_TRUE(detect_numeric_conflicts({"Cost is 5,000 .", "cost   is 5000 ."}).empty());
}

TEST(Conflicts, MatchesBruteForceAllPairs) {
  std::mt19937_64 rng(12);
  const char* stems[] = {"Robot units in 2017 is ", "Vehicle units in 2017 is ", "robot  UNITS in 2017 is "};
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<std::string> s;
    const int n = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int i = 0; i < n; ++i)
      s.push_back(std::string(stems[rng() % 3]) + std::to_string(200 + rng() % 3) + " .");
    std::vector<std::pair<std::size_t, std::size_t>> want;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        auto key = [](std::string t) {
          t = t.substr(0, t.rfind(' ', t.size() - 3));
          std::string out;
          for (char c : t)
            if (c != ' ') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          return out;
        };
        const auto vi = extract_values(s[i]).back(), vj = extract_values(s[j]).back();
        if (key(s[i]) == key(s[j]) && vi != vj) want.emplace_back(i, j);
      }
    EXPECT_EQ(detect_numeric_conflicts(s), want);
  }
}

TrainingCandidate candidate() {
  TrainingCandidate c;
  c.id = "c";
  c.original.id = "c";
  c.original.sentences = {{0, "Mortgage loans in 2017 is 124 ."}, {1, "Mortgage loans in 2016 is 116 ."}};
  c.original.question = "Growth?";
  c.rewrite.sentences = {"Vehicle units in 2017 is 124 .", "Vehicle units in 2016 is 116 ."};
  c.rewrite.question = "Growth?";
  return c;
}

Solver fixed(const char* original, const char* rewrite) {
  return [=](const std::vector<std::string>& s, const std::string&) -> Decimal {
    const char* v = s[0].rfind("Mortgage", 0) == 0 ? original : rewrite;
    if (!v) throw SolverFailure("solver crashed");
    return D(v);
  };
}

TEST(AnswerConsistency, PassFailPending) {
  EXPECT_EQ(verify_answer_consistency(candidate(), fixed("0.06897", "0.06897")), Verdict::Pass);
  EXPECT_EQ(verify_answer_consistency(candidate(), fixed("0.06897", "0.07000")), Verdict::Fail);
  EXPECT_EQ(verify_answer_consistency(candidate(), fixed("0.06897", nullptr)), Verdict::Pending);
}

TEST(AnswerConsistency, PendingIsDropped) {
  ScriptedChatClient judge;
  judge.script(Role::Judge, {"No"});
  const auto [out, summary] = filter_training_set({candidate()}, judge, fixed("0.06897", nullptr));
  EXPECT_FALSE(out[0].kept());
  EXPECT_EQ(out[0].consistency, Verdict::Pending);
  EXPECT_EQ(summary.dropped.at("consistency"), 1u);
}

TEST(FilterTrainingSet, TenCandidatesKeepSix) {
  const auto [out, summary] = filter_training_set(e2e::ten_candidates(), *e2e::topic_judge(), e2e::growth_solver());
  EXPECT_EQ(summary.total, 10u);
  EXPECT_EQ(summary.kept, 6u);
  EXPECT_EQ(summary.dropped.at("leakage"), 2u);
  EXPECT_EQ(summary.dropped.at("conflict"), 1u);
  EXPECT_EQ(summary.dropped.at("consistency"), 1u);
  EXPECT_EQ(out[1].reason, "leakage");
  EXPECT_EQ(out[1].conflict, Verdict::Skipped);  // short-circuit
  EXPECT_EQ(out[6].reason, "conflict");
  EXPECT_EQ(out[6].consistency, Verdict::Skipped);
  EXPECT_EQ(out[8].reason, "consistency");
}

TEST(FilterTrainingSet, DeterministicAcrossWorkersAndEmptyInput) {
  const auto a = filter_training_set(e2e::ten_candidates(), *e2e::topic_judge(), e2e::growth_solver(), 1).first;
  const auto b = filter_training_set(e2e::ten_candidates(), *e2e::topic_judge(), e2e::growth_solver(), 4).first;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].to_json(), b[i].to_json());
  const auto [none, summary] = filter_training_set({}, *e2e::topic_judge(), e2e::growth_solver());
  EXPECT_TRUE(none.empty());
  EXPECT_EQ(summary.total, 0u);
}

TEST(FilterTrainingSet, CandidatesRoundTripThroughJsonLines) {
  std::stringstream io;
  for (auto& c : e2e::ten_candidates()) io << c.to_json().dump() << "\n\n";
  const auto back = read_candidates(io);
  ASSERT_EQ(back.size(), 10u);
  EXPECT_EQ(back[6].to_json(), e2e::ten_candidates()[6].to_json());
}

}  // namespace
