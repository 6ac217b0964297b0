#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pcollab/code_block.hpp"
#include "pcollab/errors.hpp"
#include "pcollab/numeric_switch.hpp"
#include "pcollab/query.hpp"

namespace pcollab {

/// One local reasoning run and the sentence ids it cited.
struct EvidenceTrace {
  int run_index = 0;
  std::string solution_text;
  std::set<int> cited_ids;
};

enum class EvidenceSource { Evidence, Lexical };

inline const char* to_string(EvidenceSource s) { return s == EvidenceSource::Evidence ? "evidence" : "lexical"; }

struct ShortenedContext {
  std::vector<Sentence> sentences;  // ascending original index, no duplicates
  std::vector<EvidenceSource> sources;
};

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

/// "[Sentence N]" citations in `trace`, restricted to `valid_ids`.
inline std::set<int> cited_sentence_ids(const std::string& trace, const std::set<int>& valid_ids) {
  static const std::regex cite(R"(\[\s*Sentence\s*(\d+)\s*\])", std::regex::icase);
  std::set<int> out;
  for (auto it = std::sregex_iterator(trace.begin(), trace.end(), cite); it != std::sregex_iterator(); ++it) {
    const auto& digits = (*it)[1].str();
    if (digits.size() > 9) continue;
    const int id = std::stoi(digits);
    if (valid_ids.count(id)) out.insert(id);
  }
  return out;
}

/// Cited ids plus, as a fallback for missing citations, every sentence whose
/// payload numbers all occur in the trace's code block. Payload numbers are
/// the General-class values; dates such as "December 31, 2017" only qualify
/// the row and rarely reach the code.
inline std::set<int> extract_evidence_ids(const std::string& trace, const ReasoningQuery& query,
                                          const SwitchPolicy& classes = {}) {
  std::set<int> valid;
  for (auto& s : query.sentences) valid.insert(s.index);
  auto ids = cited_sentence_ids(trace, valid);

  if (auto block = first_code_block(trace)) {
    std::unordered_set<Decimal, DecimalHash> code_values;
    for (auto& v : extract_values(block->code, ScanMode::Code)) code_values.insert(v);
    for (auto& s : query.sentences) {
      std::vector<Decimal> values;
      for (auto& v : extract_values(s.text))
        if (classes.classify(v) == NumberClass::General) values.push_back(v);
      if (values.empty()) continue;
      const bool all_present =
          std::all_of(values.begin(), values.end(), [&](const Decimal& v) { return code_values.count(v) > 0; });
      if (all_present) ids.insert(s.index);
    }
  }
  return ids;
}

namespace detail {

inline std::vector<std::string> bm25_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

/// BM25 scores for each sentence against `question` (Lucene idf, which stays
/// non-negative for terms present in most sentences).
inline std::vector<double> bm25_scores(const std::string& question, const std::vector<Sentence>& sentences,
                                       const Bm25Params& params = {}) {
  const std::size_t n = sentences.size();
  std::vector<std::unordered_map<std::string, int>> tf(n);
  std::vector<double> len(n);
  std::unordered_map<std::string, int> df;
  double total_len = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto toks = detail::bm25_tokens(sentences[i].text);
    len[i] = static_cast<double>(toks.size());
    total_len += len[i];
    for (auto& t : toks) ++tf[i][t];
    for (auto& [t, _] : tf[i]) ++df[t];
  }
  const double avgdl = n ? total_len / static_cast<double>(n) : 0.0;
  std::vector<double> scores(n, 0.0);
  for (auto& term : detail::bm25_tokens(question)) {
    auto it = df.find(term);
    if (it == df.end()) continue;
    const double idf = std::log(1.0 + (static_cast<double>(n) - it->second + 0.5) / (it->second + 0.5));
    for (std::size_t i = 0; i < n; ++i) {
      auto f = tf[i].find(term);
      if (f == tf[i].end()) continue;
      const double freq = f->second;
      const double norm = avgdl > 0 ? len[i] / avgdl : 0.0;
      scores[i] += idf * freq * (params.k1 + 1.0) / (freq + params.k1 * (1.0 - params.b + params.b * norm));
    }
  }
  return scores;
}

/// Sentence indices of the top-k BM25 matches, best first; ties go to the
/// lower sentence index.
inline std::vector<int> bm25_rank(const std::string& question, const std::vector<Sentence>& sentences, std::size_t k,
                                  const Bm25Params& params = {}) {
  const auto scores = bm25_scores(question, sentences, params);
  std::vector<std::size_t> order(sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return sentences[a].index < sentences[b].index;
  });
  std::vector<int> out;
  for (std::size_t i = 0; i < order.size() && i < k; ++i) out.push_back(sentences[order[i]].index);
  return out;
}

/// Union of cited evidence and the BM25 top-k, in document order.
inline ShortenedContext shorten_context(const ReasoningQuery& query, const std::vector<EvidenceTrace>& traces,
                                        std::size_t k, const Bm25Params& params = {}) {
  std::set<int> evidence;
  for (auto& t : traces) evidence.insert(t.cited_ids.begin(), t.cited_ids.end());
  std::set<int> lexical;
  for (int id : bm25_rank(query.question, query.sentences, k, params)) lexical.insert(id);

  ShortenedContext out;
  for (auto& s : query.sentences) {
    if (evidence.count(s.index)) {
      out.sentences.push_back(s);
      out.sources.push_back(EvidenceSource::Evidence);
    } else if (lexical.count(s.index)) {
      out.sentences.push_back(s);
      out.sources.push_back(EvidenceSource::Lexical);
    }
  }
  if (out.sentences.empty() && !query.sentences.empty())
    throw EmptyContext("no evidence and no lexical matches for query " + query.id);
  return out;
}

/// The first `budget` sentences, used when shortening yields nothing.
inline ShortenedContext truncated_context(const ReasoningQuery& query, std::size_t budget) {
  ShortenedContext out;
  for (std::size_t i = 0; i < query.sentences.size() && i < budget; ++i) {
    out.sentences.push_back(query.sentences[i]);
    out.sources.push_back(EvidenceSource::Lexical);
  }
  return out;
}

inline ReasoningQuery with_context(const ReasoningQuery& query, const ShortenedContext& ctx) {
  ReasoningQuery q = query;
  q.sentences = ctx.sentences;
  return q;
}

}  // namespace pcollab
