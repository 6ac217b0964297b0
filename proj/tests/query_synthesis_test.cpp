#include <gtest/gtest.h>

#include "generators.hpp"
#include "pcollab/prompts.hpp"
#include "pcollab/query_synthesis.hpp"

using namespace pcollab;

namespace {

ReasoningQuery demo_original() {
  return fixtures::query_from_prompt("demo", prompts::rewriter_demonstration().input);
}

SynthesizedQuery demo_rewrite() {
  auto parsed = parse_rewrite(prompts::rewriter_demonstration().output);
  return {parsed->sentences, parsed->question, 1, "shifter"};
}

}  // namespace

TEST(ParseRewrite, ReadsSentencesAndQuestionBetweenTags) {
  auto parsed = parse_rewrite(prompts::rewriter_demonstration().output);
  ASSERT_TRUE(parsed);
  ASSERT_EQ(parsed->sentences.size(), 5u);
  EXPECT_EQ(parsed->sentences[1], "Robot units of For the years ended December 31, 2017 is 24 units.");
  EXPECT_EQ(parsed->question, "What is the growth rate of Vehicle units in the year with the most Robot units?");
}

TEST(ParseRewrite, RequiresBothTagsAndAQuestion) {
  EXPECT_FALSE(parse_rewrite("Context:\nA is 1.\nQuestion: q"));
  EXPECT_FALSE(parse_rewrite("<rewritten>A is 1.\nQuestion: q"));
  EXPECT_FALSE(parse_rewrite("<rewritten>A is 1.</rewritten>"));
  EXPECT_TRUE(parse_rewrite("noise <rewritten>\nA is 1.\nQuestion: q\n</rewritten> trailing"));
}

TEST(ValidateRewrite, RobotVehicleExamplePasses) {
  const auto original = demo_original();
  ASSERT_EQ(original.sentences.size(), 5u);
  const auto v = validate_rewrite(original, demo_rewrite());
  EXPECT_TRUE(v.sentence_count_ok);
  EXPECT_TRUE(v.numbers_preserved);
  EXPECT_TRUE(v.passed());
  EXPECT_LT(v.noun_overlap_ratio, 1.0);
}

TEST(ValidateRewrite, IdentityRewriteWarnsButPasses) {
  const auto original = demo_original();
  SynthesizedQuery same{original.texts(), original.question, 1, "s"};
  const auto v = validate_rewrite(original, same);
  EXPECT_TRUE(v.passed());
  EXPECT_DOUBLE_EQ(v.noun_overlap_ratio, 1.0);
  EXPECT_FALSE(v.warnings.empty());
}

TEST(ValidateRewrite, DroppedSentenceFailsCount) {
  const auto original = demo_original();
  auto cand = demo_rewrite();
  cand.sentences.erase(cand.sentences.begin() + 2);  // the "[Sentence 9]" line
  const auto v = validate_rewrite(original, cand);
  EXPECT_FALSE(v.sentence_count_ok);
  EXPECT_FALSE(v.passed());
}

TEST(ValidateRewrite, AlteredNumberIsReported) {
  const auto original = demo_original();
  auto cand = demo_rewrite();
  cand.sentences[3] = "Vehicle units of For the years ended December 31, 2017 is 125 units.";
  const auto v = validate_rewrite(original, cand);
  EXPECT_FALSE(v.numbers_preserved);
  ASSERT_EQ(v.violations.size(), 1u);
  EXPECT_NE(v.violations[0].find("missing: 124"), std::string::npos);
  EXPECT_NE(v.violations[0].find("unexpected: 125"), std::string::npos);
}

TEST(ValidateRewrite, SeparatorsAndTrailingZerosCanonicalize) {
  ReasoningQuery q{"x", {{0, "Sales were $43,593 in 2005 ."}}, "What were sales?", std::nullopt};
  SynthesizedQuery c{{"Rainfall was 43593.0 mm in 2005 ."}, "What was rainfall?", 1, "s"};
  EXPECT_TRUE(validate_rewrite(q, c).numbers_preserved);
}

TEST(Synthesize, DemonstrationRewriteSucceedsFirstAttempt) {
  ScriptedChatClient shifter;
  shifter.script(Role::Shifter, {prompts::rewriter_demonstration().output});
  auto result = synthesize(demo_original(), shifter);
  ASSERT_TRUE(std::holds_alternative<SynthesizedQuery>(result));
  EXPECT_EQ(std::get<SynthesizedQuery>(result).attempts, 1);
}

TEST(Synthesize, MissingTagsThenValidRewriteTakesTwoAttempts) {
  auto mock = std::make_shared<ScriptedChatClient>();
  mock->script(Role::Shifter, {"Sure! Here is the rewrite without tags.", prompts::rewriter_demonstration().output});
  auto log = std::make_shared<CallLog>();
  RecordingClient shifter(mock, log);
  auto result = synthesize(demo_original(), shifter);
  ASSERT_TRUE(std::holds_alternative<SynthesizedQuery>(result));
  EXPECT_EQ(std::get<SynthesizedQuery>(result).attempts, 2);

  const auto calls = log->snapshot();
  ASSERT_EQ(calls.size(), 2u);
  const auto& second = calls[1].request.messages;
  EXPECT_EQ(second[second.size() - 2].content, "Sure! Here is the rewrite without tags.");
  EXPECT_NE(second.back().content.find("<rewritten>"), std::string::npos);
  EXPECT_EQ(log->count(Role::Remote), 0u);
}

TEST(Synthesize, AlwaysAlteredNumbersExhaustsToFallback) {
  ScriptedChatClient shifter;
  shifter.respond(Role::Shifter, [](const ChatRequest&) {
    return std::string("<rewritten>\nA is 1.5\nB is 7\nC is 8\nD is 9\nE is 10\nQuestion: q?\n</rewritten>");
  });
  auto result = synthesize(demo_original(), shifter, {.max_attempts = 3});
  ASSERT_TRUE(std::holds_alternative<FallbackSignal>(result));
  const auto& fb = std::get<FallbackSignal>(result);
  EXPECT_EQ(fb.attempts, 3);
  EXPECT_FALSE(fb.violations.empty());
}

TEST(Synthesize, TransportFailureFallsBack) {
  ScriptedChatClient shifter;  // nothing scripted: every call throws
  auto result = synthesize(demo_original(), shifter);
  ASSERT_TRUE(std::holds_alternative<FallbackSignal>(result));
}
