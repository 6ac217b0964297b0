#include <gtest/gtest.h>

#include <random>

#include "pcollab/local_reasoner.hpp"
#include "pcollab/reconstruction.hpp"
#include "pcollab/remote_toolsmith.hpp"

using namespace pcollab;

namespace {

Decimal D(const char* s) { return Decimal::must_parse(s); }

CandidateAnswer with_value(const char* v) {
  CandidateAnswer c;
  c.value = D(v);
  return c;
}

ReasoningQuery growth_query() {
  ReasoningQuery q;
  q.id = "growth";
  q.sentences = {{13, "Vehicle units of For the years ended December 31, 2017 is 124 units."},
                 {15, "Vehicle units of For the years ended December 31, 2016 is 116 units."}};
  q.question = "What is the growth rate of Vehicle units?";
  return q;
}

// --- local sampling and consistency ----------------------------------------

TEST(SampleSolutions, SevenTracesGiveSevenCandidates) {
  ScriptedChatClient local;
  std::vector<std::string> traces;
  for (int i = 0; i < 7; ++i) traces.push_back("```python\nans = " + std::to_string(i) + "\n```");
  local.script(Role::Local, traces);
  InProcessSandbox sb;
  const auto cands = sample_solutions(growth_query(), local, sb);
  ASSERT_EQ(cands.size(), 7u);
  for (int i = 0; i < 7; ++i) {
    EXPECT_EQ(cands[i].run_index, i);
    EXPECT_EQ(cands[i].value, Decimal::from_int(i));
  }
}

TEST(SampleSolutions, MissingCodeBlockIsAFailureNotAnAbort) {
  ScriptedChatClient local;
  local.script(Role::Local, {"I think it is about 7 percent.", "```python\ngrowth_rate = (124 - 116) / 116\n```"});
  InProcessSandbox sb;
  LocalSamplingOptions opts;
  opts.n = 2;
  const auto cands = sample_solutions(growth_query(), local, sb, opts);
  ASSERT_EQ(cands.size(), 2u);
  EXPECT_FALSE(cands[0].value);
  EXPECT_FALSE(cands[0].code);
  EXPECT_EQ(cands[0].failure, "no code block");
  ASSERT_TRUE(cands[1].value);
  EXPECT_EQ(normalize_answer(*cands[1].value), D("0.06897"));
}

TEST(SampleSolutions, PromptIsSystemThreeDemosThenQuery) {
  auto log = std::make_shared<CallLog>();
  auto mock = std::make_shared<ScriptedChatClient>();
  mock->script(Role::Local, {"```python\nans = 1\n```"});
  RecordingClient local(mock, log);
  InProcessSandbox sb;
  LocalSamplingOptions opts;
  opts.n = 1;
  sample_solutions(growth_query(), local, sb, opts);
  const auto calls = log->snapshot();
  ASSERT_EQ(calls.size(), 1u);
  const auto& m = calls[0].request.messages;
  ASSERT_EQ(m.size(), 8u);
  EXPECT_EQ(m[0].content, prompts::kLocalInference);
  EXPECT_EQ(m[7].content, render_prompt_query(growth_query()));
  EXPECT_FALSE(calls[0].request.sampling.greedy);
  EXPECT_DOUBLE_EQ(calls[0].request.sampling.top_p, 0.9);
}

TEST(SampleSolutions, ClientErrorsAndSandboxErrorsAreRecorded) {
  ScriptedChatClient local;
  local.script(Role::Local, {"```python\nx = 1 / 0\n```"});  // second call exhausts the script
  InProcessSandbox sb;
  LocalSamplingOptions opts;
  opts.n = 2;
  const auto cands = sample_solutions(growth_query(), local, sb, opts);
  EXPECT_NE(cands[0].failure.find("ZeroDivisionError"), std::string::npos);
  EXPECT_NE(cands[1].failure.find("local model unavailable"), std::string::npos);
}

TEST(Consistency, MajorityOfSevenWithFiveVotes) {
  std::vector<CandidateAnswer> c;
  for (auto v : {"5", "5", "5", "2", "5", "3", "5"}) c.push_back(with_value(v));
  const auto r = compute_consistency(c);
  EXPECT_EQ(r.majority, D("5"));
  EXPECT_EQ(r.max_count, 5);
  EXPECT_NEAR(r.score, 5.0 / 7.0, 1e-12);
  EXPECT_EQ(std::round(r.score * 1e5) / 1e5, 0.71429);
}

TEST(Consistency, UnanimousAndAllDistinct) {
  std::vector<CandidateAnswer> same(7, with_value("0.06897"));
  EXPECT_DOUBLE_EQ(compute_consistency(same).score, 1.0);
  std::vector<CandidateAnswer> distinct;
  for (int i = 0; i < 7; ++i) distinct.push_back(with_value(std::to_string(i).c_str()));
  EXPECT_DOUBLE_EQ(compute_consistency(distinct).score, 1.0 / 7.0);
}

TEST(Consistency, FailuresStayInTheDenominator) {
  std::vector<CandidateAnswer> c = {with_value("1"), with_value("1"), CandidateAnswer{}, CandidateAnswer{}};
  EXPECT_DOUBLE_EQ(compute_consistency(c).score, 0.5);
  std::vector<CandidateAnswer> none(3);
  const auto r = compute_consistency(none);
  EXPECT_FALSE(r.majority);
  EXPECT_EQ(r.score, 0.0);
}

TEST(Consistency, VotesCompareAtFivePlacesAndTiesGoFirst) {
  std::vector<CandidateAnswer> c = {with_value("0.0689655"), with_value("2"), with_value("0.068966"), with_value("2")};
  const auto r = compute_consistency(c);
  EXPECT_EQ(r.majority, D("0.06897"));  // seen first, tied 2-2
  EXPECT_EQ(r.histogram.size(), 2u);
}

TEST(Consistency, MatchesBruteForceCount) {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 500; ++iter) {
    const int n = std::uniform_int_distribution<int>(1, 9)(rng);
    std::vector<CandidateAnswer> c;
    for (int i = 0; i < n; ++i) {
      const int v = std::uniform_int_distribution<int>(-1, 3)(rng);
      c.push_back(v < 0 ? CandidateAnswer{} : with_value(std::to_string(v).c_str()));
    }
    const auto r = compute_consistency(c);
    int best = 0;
    std::optional<Decimal> first_best;
    for (int i = 0; i < n; ++i) {
      if (!c[i].value) continue;
      int count = 0;
      for (int j = 0; j < n; ++j) count += c[j].value && *c[j].value == *c[i].value;
      if (count > best) {
        best = count;
        first_best = c[i].value;
      }
    }
    EXPECT_EQ(r.max_count, best);
    EXPECT_EQ(r.majority, first_best);
    EXPECT_DOUBLE_EQ(r.score * n, static_cast<double>(best));
  }
}

// --- remote tool --------------------------------------------------------------

SwitchedQuery switched_growth() {
  auto mapping = std::make_shared<const NumberMapping>(NumberMapping(
      {{D("124"), D("131"), NumberClass::General}, {D("116"), D("109"), NumberClass::General}}, 1));
  return {{"Vehicle units in 2017 is 131 units.", "Vehicle units in 2016 is 109 units."}, "What is the growth rate?", mapping};
}

TEST(ElicitTool, GrowthRateBlockHasTwoLiterals) {
  ScriptedChatClient remote;
  remote.script(Role::Remote, {"Sure.\n```python\ngrowth_rate = (131 - 109) / 109\n```"});
  const auto tool = elicit_tool(switched_growth(), remote);
  EXPECT_EQ(tool.code, "growth_rate = (131 - 109) / 109\n");
  EXPECT_EQ(tool.dialect_tag, "python");
  ASSERT_EQ(tool.literals.size(), 3u);
  EXPECT_EQ(tool.literals[0].value, D("131"));
  EXPECT_EQ(tool.attempts, 1);
  EXPECT_TRUE(tool.warnings.empty());
}

TEST(ElicitTool, ProseOnlyRetriesOnceThenMissingCode) {
  auto log = std::make_shared<CallLog>();
  auto mock = std::make_shared<ScriptedChatClient>();
  mock->script(Role::Remote, {"Compute by hand.", "Still prose."});
  RecordingClient remote(mock, log);
  EXPECT_THROW(elicit_tool(switched_growth(), remote), MissingCode);
  const auto calls = log->snapshot();
  ASSERT_EQ(calls.size(), 2u);
  EXPECT_EQ(calls[1].request.messages.back().content, prompts::kCodeReminder);
  EXPECT_TRUE(calls[0].request.sampling.greedy);
}

TEST(ElicitTool, FirstOfTwoBlocksWinsAndTagMismatchWarns) {
  ScriptedChatClient remote;
  remote.script(Role::Remote, {"```py\nans = 1\n```\n```python\nans = 2\n```"});
  const auto tool = elicit_tool(switched_growth(), remote);
  EXPECT_EQ(tool.code, "ans = 1\n");
  EXPECT_EQ(tool.warnings.size(), 1u);
}

TEST(ElicitTool, RemoteSeesRelabelledSwitchedTextOnly) {
  auto log = std::make_shared<CallLog>();
  auto mock = std::make_shared<ScriptedChatClient>();
  mock->script(Role::Remote, {"```python\nans = 1\n```"});
  RecordingClient remote(mock, log);
  elicit_tool(switched_growth(), remote);
  const std::string user = log->snapshot()[0].request.messages.back().content;
  EXPECT_EQ(user,
            "Context:\n[Sentence 0]: Vehicle units in 2017 is 131 units.\n[Sentence 1]: Vehicle units in 2016 is 109 "
            "units.\n\nQuestion: What is the growth rate?");
  EXPECT_EQ(user.find("124"), std::string::npos);
  EXPECT_EQ(user.find("116"), std::string::npos);
}

TEST(AuditTool, MappedUnmappedAndOriginalTripwire) {
  const NumberMapping m({{D("43593"), D("35712"), NumberClass::General}, {D("2005"), D("2013"), NumberClass::YearLike}}, 1);
  ToolSolution t;
  t.literals = code_literals("usage = 35712\nyear = 2013\n");
  auto a = audit_tool(t, m);
  EXPECT_EQ(a.mapped.size(), 2u);
  EXPECT_TRUE(a.coverage_ok);

  t.literals = code_literals("pct = x * 100\n");
  a = audit_tool(t, m);
  EXPECT_EQ(a.unmapped.size(), 1u);
  EXPECT_TRUE(a.coverage_ok);

  t.literals = code_literals("usage = 43593\n");
  a = audit_tool(t, m);
  EXPECT_FALSE(a.coverage_ok);
  ASSERT_EQ(a.original_values_seen.size(), 1u);
  EXPECT_EQ(a.original_values_seen[0], D("43593"));
}

// --- reconstruction -----------------------------------------------------------

TEST(SubstituteLiterals, IdentifiersAreNeverRewritten) {
  const NumberMapping m({{D("43593"), D("35712"), NumberClass::General}, {D("2005"), D("2013"), NumberClass::YearLike}}, 1);
  EXPECT_EQ(substitute_literals("usage_2013 = 35712", m), "usage_2013 = 43593");
  EXPECT_EQ(substitute_literals("x = 35712.0 * 100  # 2013", m), "x = 43593.0 * 100  # 2013");
  EXPECT_EQ(substitute_literals("y = 2013", m), "y = 2005");
}

TEST(SubstituteLiterals, IdentityMappingLeavesCodeUnchanged) {
  const std::string code = "a = 124\nb = 116\nans = (a - b) / b * 100\n";
  EXPECT_EQ(substitute_literals(code, NumberMapping::identity({D("124"), D("116"), D("100")})), code);
}

TEST(SubstituteLiterals, SimultaneousReplacement) {
  // 5 -> 7 and 7 -> 5: a sequential rewrite would collapse both.
  const NumberMapping m({{D("5"), D("7"), NumberClass::General}, {D("7"), D("5"), NumberClass::General}}, 1);
  EXPECT_EQ(substitute_literals("ans = 7 - 5", m), "ans = 5 - 7");
}

TEST(SubstituteLiterals, NegativeValues) {
  const NumberMapping m({{D("-5"), D("-7"), NumberClass::General}, {D("3"), D("-4"), NumberClass::General}}, 1);
  EXPECT_EQ(substitute_literals("x = -7\ny = 2 - 7\n", m), "x = -5\ny = 2 - 7\n");
  EXPECT_EQ(substitute_literals("z = 10 * -4", m), "z = 10 * 3");
  EXPECT_EQ(substitute_literals("z = 10 - 3", m, Direction::Forward), "z = 10 - (-4)");
}

TEST(SubstituteLiterals, InvolutionUnderInversion) {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<Decimal> values;
    std::string code;
    for (int i = 0; i < 5; ++i) {
      const Decimal v(std::uniform_int_distribution<long long>(100, 99999)(rng), std::uniform_int_distribution<int>(0, 2)(rng));
      values.push_back(v);
      code += "v" + std::to_string(i) + "_2013 = " + v.to_string() + "\n";
    }
    code += "ans = (v0_2013 + v1_2013) / v2_2013 * 100\n";
    SwitchPolicy p;
    p.seed = static_cast<std::uint64_t>(iter);
    const auto m = build_mapping(values, p);
    const auto forward = substitute_literals(code, m, Direction::Forward);
    EXPECT_EQ(substitute_literals(forward, m, Direction::Inverse), code);
  }
}

TEST(ReconstructAnswer, IdentityGrowthRate) {
  InProcessSandbox sb;
  ToolSolution t;
  t.code = "growth_rate = (124 - 116) / 116\n";
  const auto r = reconstruct_answer(t, NumberMapping::identity({D("124"), D("116")}), sb);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r.answer, D("0.06897"));
}

TEST(ReconstructAnswer, SwitchedToolGivesOriginalAnswer) {
  InProcessSandbox sb;
  ToolSolution t;
  t.code = "vehicle_2017 = 131\nvehicle_2016 = 109\ngrowth_rate = (vehicle_2017 - vehicle_2016) / vehicle_2016\n";
  const auto r = reconstruct_answer(t, *switched_growth().mapping, sb);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r.answer, D("0.06897"));
  EXPECT_EQ(r.code, "vehicle_2017 = 124\nvehicle_2016 = 116\ngrowth_rate = (vehicle_2017 - vehicle_2016) / vehicle_2016\n");
}

TEST(ReconstructAnswer, ErrorsAndTimeoutsAreNotAnswers) {
  InProcessSandbox sb;
  const NumberMapping zero({{D("0"), D("9"), NumberClass::General}}, 1);
  ToolSolution t;
  t.code = "ans = 5 / 9\n";
  auto r = reconstruct_answer(t, zero, sb);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.exec.status, ExecStatus::Error);

  t.code = "while True:\n    pass\n";
  r = reconstruct_answer(t, zero, sb, "loop", 200);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.exec.status, ExecStatus::Timeout);
}

}  // namespace
