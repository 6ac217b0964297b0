#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "pcollab/llm_clients.hpp"
#include "pcollab/numeric_switch.hpp"
#include "pcollab/prompts.hpp"
#include "pcollab/query.hpp"

namespace pcollab {

/// Topic-shifted rewrite of a query. Same sentence count and the same
/// numeric multiset as the original (enforced by validate_rewrite).
struct SynthesizedQuery {
  std::vector<std::string> sentences;
  std::string question;
  int attempts = 0;
  std::string shifter_id;
};

struct RewriteValidation {
  bool tag_parse_ok = true;
  bool sentence_count_ok = false;
  bool numbers_preserved = false;
  double noun_overlap_ratio = 0.0;
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool passed() const { return tag_parse_ok && sentence_count_ok && numbers_preserved; }
};

/// Synthesis gave up; the caller must answer locally.
struct FallbackSignal {
  int attempts = 0;
  std::vector<std::string> violations;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string strip_sentence_label(const std::string& line) {
  static const std::regex label(R"(^\s*\[Sentence\s*\d+\]\s*:?\s*)", std::regex::icase);
  return std::regex_replace(line, label, "", std::regex_constants::format_first_only);
}

inline const std::unordered_set<std::string>& stop_words() {
  static const std::unordered_set<std::string> words = {
      "a",    "an",    "the",   "of",   "for",  "in",    "on",    "at",    "to",   "from",  "by",   "with",
      "and",  "or",    "but",   "is",   "are",  "was",   "were",  "be",    "been", "being", "it",   "its",
      "this", "that",  "these", "those", "as",  "than",  "then",  "what",  "which", "who",  "whom", "how",
      "when", "where", "why",   "do",   "does", "did",   "has",   "have",  "had",  "not",   "no",   "if",
      "into", "over",  "under", "per",  "each", "all",   "any",   "there", "their", "they", "we",   "our",
      "you",  "your",  "he",    "she",  "his",  "her",   "them",  "so",    "such", "can",   "will", "would",
      "should", "may", "might", "also", "more", "most",  "less",  "other", "up",   "down",  "out",  "about"};
  return words;
}

inline std::set<std::string> content_tokens(const std::string& text) {
  std::set<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2 && !stop_words().count(cur)) out.insert(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

inline std::vector<Decimal> canonical_numbers(const std::vector<std::string>& sentences, const std::string& question) {
  std::vector<Decimal> out;
  for (auto& s : sentences)
    for (auto& v : extract_values(s)) out.push_back(v.normalized());
  for (auto& v : extract_values(question)) out.push_back(v.normalized());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string join_values(const std::vector<Decimal>& v) {
  std::string out;
  for (auto& d : v) {
    if (!out.empty()) out += ", ";
    out += d.to_string();
  }
  return out;
}

}  // namespace detail

struct ParsedRewrite {
  std::vector<std::string> sentences;
  std::string question;
};

/// Parses the text strictly between <rewritten> and </rewritten>. Each
/// non-empty line before "Question:" is one sentence ("[Sentence i]:" labels
/// are stripped); everything from "Question:" on is the question.
inline std::optional<ParsedRewrite> parse_rewrite(const std::string& reply) {
  static constexpr std::string_view open = "<rewritten>";
  static constexpr std::string_view close = "</rewritten>";
  const auto b = reply.find(open);
  if (b == std::string::npos) return std::nullopt;
  const auto e = reply.find(close, b + open.size());
  if (e == std::string::npos) return std::nullopt;
  std::istringstream body(reply.substr(b + open.size(), e - b - open.size()));

  ParsedRewrite out;
  bool in_question = false;
  bool has_question = false;
  std::string line;
  while (std::getline(body, line)) {
    std::string t = detail::trim(line);
    if (in_question) {
      if (!t.empty()) out.question += (out.question.empty() ? "" : " ") + t;
      continue;
    }
    if (t.empty()) continue;
    if (t.rfind("Question:", 0) == 0) {
      in_question = has_question = true;
      out.question = detail::trim(std::string_view(t).substr(9));
      continue;
    }
    if (t.rfind("Context:", 0) == 0) {
      t = detail::trim(std::string_view(t).substr(8));
      if (t.empty()) continue;
    }
    out.sentences.push_back(detail::trim(detail::strip_sentence_label(t)));
  }
  if (!has_question) return std::nullopt;
  return out;
}

/// Structural checks on a rewrite. Noun overlap is reported as a warning only.
inline RewriteValidation validate_rewrite(const ReasoningQuery& original, const SynthesizedQuery& candidate) {
  RewriteValidation v;
  v.sentence_count_ok = candidate.sentences.size() == original.sentences.size();
  if (!v.sentence_count_ok)
    v.violations.push_back("expected " + std::to_string(original.sentences.size()) + " sentences, got " +
                           std::to_string(candidate.sentences.size()));

  const auto want = detail::canonical_numbers(original.texts(), original.question);
  const auto got = detail::canonical_numbers(candidate.sentences, candidate.question);
  v.numbers_preserved = want == got;
  if (!v.numbers_preserved) {
    std::vector<Decimal> missing, extra;
    std::set_difference(want.begin(), want.end(), got.begin(), got.end(), std::back_inserter(missing));
    std::set_difference(got.begin(), got.end(), want.begin(), want.end(), std::back_inserter(extra));
    std::string msg = "numerical values must stay unchanged";
    if (!missing.empty()) msg += "; missing: " + detail::join_values(missing);
    if (!extra.empty()) msg += "; unexpected: " + detail::join_values(extra);
    v.violations.push_back(msg);
  }

  std::string orig_text = original.question, cand_text = candidate.question;
  for (auto& s : original.sentences) orig_text += " " + s.text;
  for (auto& s : candidate.sentences) cand_text += " " + s;
  const auto a = detail::content_tokens(orig_text);
  const auto b = detail::content_tokens(cand_text);
  if (a.empty()) {
    v.noun_overlap_ratio = b.empty() ? 1.0 : 0.0;
  } else {
    std::size_t shared = 0;
    for (auto& t : a) shared += b.count(t);
    v.noun_overlap_ratio = static_cast<double>(shared) / static_cast<double>(a.size());
  }
  if (v.noun_overlap_ratio > 0.5)
    v.warnings.push_back("rewrite shares " + std::to_string(static_cast<int>(v.noun_overlap_ratio * 100)) +
                         "% of the original content words");
  return v;
}

struct SynthesisOptions {
  int max_attempts = 3;
  Sampling sampling = Sampling::nucleus(0.9, 1.0);
  int max_tokens = 2048;
  std::string shifter_id = "shifter";
};

using SynthesisResult = std::variant<SynthesizedQuery, FallbackSignal>;

inline std::vector<ChatMessage> rewriter_messages(const ReasoningQuery& query) {
  const auto& demo = prompts::rewriter_demonstration();
  return {{"system", prompts::kTopicRewriter},
          {"user", demo.input},
          {"assistant", demo.output},
          {"user", render_prompt_query(query)}};
}

/// Asks the shifter for a topic-shifted rewrite and retries with the list of
/// violations as feedback. Never talks to the remote role.
inline SynthesisResult synthesize(const ReasoningQuery& query, ChatClient& shifter, const SynthesisOptions& opts = {}) {
  auto messages = rewriter_messages(query);
  FallbackSignal fallback;
  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    fallback.attempts = attempt;
    std::string reply;
    try {
      reply = ask(shifter, Role::Shifter, messages, opts.sampling, opts.max_tokens).text;
    } catch (const Error& e) {
      fallback.violations = {std::string("shifter unavailable: ") + e.what()};
      return fallback;
    }

    std::vector<std::string> violations;
    if (auto parsed = parse_rewrite(reply)) {
      SynthesizedQuery cand{std::move(parsed->sentences), std::move(parsed->question), attempt, opts.shifter_id};
      auto check = validate_rewrite(query, cand);
      if (check.passed()) return cand;
      violations = check.violations;
    } else {
      violations.push_back("output must contain the rewritten context and a \"Question:\" line within the tag "
                           "<rewritten> and </rewritten>");
    }
    fallback.violations = violations;

    std::string feedback = prompts::kRewriteFeedbackHeader;
    for (auto& v : violations) feedback += "\n- " + v;
    messages.push_back({"assistant", reply});
    messages.push_back({"user", feedback});
  }
  return fallback;
}

}  // namespace pcollab
