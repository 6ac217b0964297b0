#pragma once

// Quality filter for rewriter training pairs: judged leakage, conflicting
// evidence, then answer consistency. The first failing step drops a pair.

#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pcollab/evaluation.hpp"

namespace pcollab {

enum class Verdict { Pass, Fail, Pending, Skipped };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Pending:
      return "pending";
    case Verdict::Skipped:
      return "skipped";
  }
  return "pending";
}

struct TrainingCandidate {
  std::string id;
  ReasoningQuery original;
  SynthesizedQuery rewrite;

  static TrainingCandidate from_json(const nlohmann::json& j) {
    TrainingCandidate c;
    c.original = ReasoningQuery::from_json(j.at("original"));
    c.id = j.value("id", c.original.id);
    const auto& r = j.at("rewrite");
    c.rewrite.sentences = r.at("sentences").get<std::vector<std::string>>();
    c.rewrite.question = r.at("question").get<std::string>();
    return c;
  }
  nlohmann::json to_json() const {
    return {{"id", id},
            {"original", original.to_json()},
            {"rewrite", {{"sentences", rewrite.sentences}, {"question", rewrite.question}}}};
  }
};

struct FilterOutcome {
  std::string id;
  Verdict leakage = Verdict::Skipped;
  Verdict conflict = Verdict::Skipped;
  Verdict consistency = Verdict::Skipped;
  std::string reason;  // empty when kept
  std::vector<std::pair<std::size_t, std::size_t>> conflicts;

  bool kept() const { return leakage == Verdict::Pass && conflict == Verdict::Pass && consistency == Verdict::Pass; }

  nlohmann::json to_json() const {
    return {{"id", id},
            {"kept", kept()},
            {"reason", reason},
            {"leakage", to_string(leakage)},
            {"conflict", to_string(conflict)},
            {"consistency", to_string(consistency)},
            {"conflicts", conflicts}};
  }
};

struct FilterSummary {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> dropped;  // by reason

  nlohmann::json to_json() const {
    return {{"total", total},
            {"kept", kept},
            {"kept_ratio", total ? static_cast<double>(kept) / static_cast<double>(total) : 0.0},
            {"dropped", dropped}};
  }
};

namespace detail {

/// Sentence with General-class numbers masked, lowercased, whitespace
/// squashed; years and special constants stay part of the key.
inline std::pair<std::string, std::vector<Decimal>> masked_sentence(const std::string& s, const SwitchPolicy& classes) {
  std::string masked;
  std::vector<Decimal> payload;
  std::size_t cursor = 0;
  for (auto& span : extract_numbers(s)) {
    if (classes.classify(span.value) != NumberClass::General) continue;
    masked.append(s, cursor, span.start - cursor);
    masked += "#";
    payload.push_back(span.value);
    cursor = span.end;
  }
  masked.append(s, cursor, std::string::npos);
  std::transform(masked.begin(), masked.end(), masked.begin(), [](unsigned char c) { return std::tolower(c); });
  return {squash_spaces(masked), std::move(payload)};
}

}  // namespace detail

/// Index pairs (i < j) of sentences that read the same with numbers masked
/// but state different numbers.
inline std::vector<std::pair<std::size_t, std::size_t>> detect_numeric_conflicts(const std::vector<std::string>& sentences,
                                                                                  const SwitchPolicy& classes = {}) {
  std::vector<std::pair<std::string, std::vector<Decimal>>> keyed;
  for (auto& s : sentences) keyed.push_back(detail::masked_sentence(s, classes));
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < keyed.size(); ++i) groups[keyed[i].first].push_back(i);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto& [key, idx] : groups)
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        if (keyed[idx[a]].second != keyed[idx[b]].second) out.emplace_back(idx[a], idx[b]);
  std::sort(out.begin(), out.end());
  return out;
}

/// Answers a (sentences, question) problem or throws SolverFailure.
using Solver = std::function<Decimal(const std::vector<std::string>& sentences, const std::string& question)>;

/// Greedy code generation by `client`, executed in `sandbox`.
inline Solver model_solver(ChatClientPtr client, Sandbox& sandbox, Role role = Role::Local, int max_tokens = 1024) {
  return [client, &sandbox, role, max_tokens](const std::vector<std::string>& sentences, const std::string& question) {
    std::vector<int> labels(sentences.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
    std::string reply;
    try {
      reply = ask(*client, role, code_prompt_messages(render_prompt_query(labels, sentences, question)),
                  Sampling::greedy_decoding(), max_tokens)
                  .text;
    } catch (const Error& e) {
      throw SolverFailure(e.what());
    }
    const auto block = first_code_block(reply);
    if (!block) throw SolverFailure("solver reply has no code block");
    const auto res = sandbox.execute({"solver", block->code, 5000, 256});
    auto d = res.ok() ? res.decimal_answer() : std::nullopt;
    if (!d) throw SolverFailure("solver code failed: " + res.error);
    return *d;
  };
}

inline Verdict verify_answer_consistency(const TrainingCandidate& c, const Solver& solver) {
  try {
    const Decimal a = solver(c.original.texts(), c.original.question);
    const Decimal b = solver(c.rewrite.sentences, c.rewrite.question);
    return answers_match(normalize_answer(b), normalize_answer(a)) ? Verdict::Pass : Verdict::Fail;
  } catch (const SolverFailure&) {
    return Verdict::Pending;
  }
}

inline FilterOutcome filter_candidate(const TrainingCandidate& c, ChatClient& judge, const Solver& solver,
                                      const SwitchPolicy& classes = {}) {
  FilterOutcome o;
  o.id = c.id;
  try {
    std::string rewritten;
    for (auto& s : c.rewrite.sentences) rewritten += s + "\n";
    rewritten += c.rewrite.question;
    const auto v = judge_leakage(plain_context(c.original), rewritten, judge);
    o.leakage = v.leaked ? Verdict::Fail : Verdict::Pass;
  } catch (const Error&) {
    o.leakage = Verdict::Pending;
  }
  if (o.leakage != Verdict::Pass) {
    o.reason = "leakage";
    return o;
  }
  o.conflicts = detect_numeric_conflicts(c.rewrite.sentences, classes);
  o.conflict = o.conflicts.empty() ? Verdict::Pass : Verdict::Fail;
  if (o.conflict != Verdict::Pass) {
    o.reason = "conflict";
    return o;
  }
  o.consistency = verify_answer_consistency(c, solver);
  if (o.consistency != Verdict::Pass) o.reason = "consistency";
  return o;
}

/// Outcomes in input order plus per-reason counts.
inline std::pair<std::vector<FilterOutcome>, FilterSummary> filter_training_set(const std::vector<TrainingCandidate>& cands,
                                                                                ChatClient& judge, const Solver& solver,
                                                                                int workers = 1,
                                                                                const SwitchPolicy& classes = {}) {
  std::vector<FilterOutcome> out(cands.size());
  parallel_for(cands.size(), workers, [&](std::size_t i) { out[i] = filter_candidate(cands[i], judge, solver, classes); });
  FilterSummary s;
  s.total = cands.size();
  for (const char* r : {"leakage", "conflict", "consistency"}) s.dropped[r] = 0;
  for (auto& o : out) {
    if (o.kept()) ++s.kept;
    else ++s.dropped[o.reason];
  }
  return {std::move(out), s};
}

inline std::vector<TrainingCandidate> read_candidates(std::istream& in) {
  std::vector<TrainingCandidate> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(TrainingCandidate::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError("candidates line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pcollab
