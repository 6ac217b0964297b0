#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcollab/answers.hpp"
#include "pcollab/code_block.hpp"
#include "pcollab/llm_clients.hpp"
#include "pcollab/prompts.hpp"
#include "pcollab/query.hpp"
#include "pcollab/retrieval.hpp"
#include "pcollab/sandbox.hpp"

namespace pcollab {

/// One sampled local solution. `value` is set only when the code ran and
/// produced a number; otherwise `failure` says why.
struct CandidateAnswer {
  int run_index = 0;
  std::string trace;
  std::optional<std::string> code;
  std::optional<Decimal> value;
  std::string failure;

  nlohmann::json to_json() const {
    return {{"run_index", run_index},
            {"trace", trace},
            {"code", code ? nlohmann::json(*code) : nlohmann::json(nullptr)},
            {"value", value ? nlohmann::json(value->to_string()) : nlohmann::json(nullptr)},
            {"failure", failure}};
  }
};

struct ConsistencyReport {
  std::optional<Decimal> majority;  // normalized to five places
  double score = 0.0;
  int max_count = 0;
  int n = 0;
  std::vector<std::pair<Decimal, int>> histogram;  // in order of first occurrence

  nlohmann::json to_json() const {
    nlohmann::json h = nlohmann::json::array();
    for (auto& [v, c] : histogram) h.push_back({{"value", v.to_string()}, {"count", c}});
    return {{"majority", majority ? nlohmann::json(majority->to_string()) : nlohmann::json(nullptr)},
            {"score", score},
            {"max_count", max_count},
            {"n", n},
            {"histogram", std::move(h)}};
  }
};

struct LocalSamplingOptions {
  int n = 7;
  Sampling sampling = Sampling::nucleus(0.9, 1.0);
  int max_tokens = 1024;
  int timeout_ms = 5000;
  int memory_cap_mb = 256;
};

/// System prompt, the three code demonstrations, then the query.
inline std::vector<ChatMessage> code_prompt_messages(const std::string& rendered_query) {
  std::vector<ChatMessage> m = {{"system", prompts::kLocalInference}};
  for (auto& d : prompts::code_demonstrations()) {
    m.push_back({"user", d.input});
    m.push_back({"assistant", d.output});
  }
  m.push_back({"user", rendered_query});
  return m;
}

/// Runs the first fenced block of `trace` and fills code/value/failure.
inline void execute_trace(CandidateAnswer& c, Sandbox& sandbox, const std::string& request_id,
                          const LocalSamplingOptions& opts) {
  auto block = first_code_block(c.trace);
  if (!block) {
    c.failure = "no code block";
    return;
  }
  c.code = block->code;
  auto res = sandbox.execute({request_id, block->code, opts.timeout_ms, opts.memory_cap_mb});
  if (!res.ok()) {
    c.failure = to_string(res.status) + ": " + res.error;
    return;
  }
  if (auto d = res.decimal_answer()) c.value = *d;
  else c.failure = "answer out of range: " + *res.answer;
}

/// Draws `opts.n` completions for a rendered prompt, in order, and executes
/// each. Per-run failures are recorded on the candidate and never abort.
inline std::vector<CandidateAnswer> sample_rendered(const std::string& rendered, const std::string& id_prefix,
                                                    ChatClient& local, Sandbox& sandbox,
                                                    const LocalSamplingOptions& opts = {}) {
  if (opts.n < 1) throw std::invalid_argument("sample count must be at least 1");
  const auto messages = code_prompt_messages(rendered);
  std::vector<CandidateAnswer> out;
  for (int i = 0; i < opts.n; ++i) {
    CandidateAnswer c;
    c.run_index = i;
    try {
      c.trace = ask(local, Role::Local, messages, opts.sampling, opts.max_tokens).text;
    } catch (const Error& e) {
      c.failure = std::string("local model unavailable: ") + e.what();
      out.push_back(std::move(c));
      continue;
    }
    execute_trace(c, sandbox, id_prefix + "#" + std::to_string(i), opts);
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<CandidateAnswer> sample_solutions(const ReasoningQuery& query, ChatClient& local, Sandbox& sandbox,
                                                     const LocalSamplingOptions& opts = {}) {
  return sample_rendered(render_prompt_query(query), query.id, local, sandbox, opts);
}

/// Majority vote over answers normalized to five places. Failed runs stay in
/// the denominator; ties go to the value seen first.
inline ConsistencyReport compute_consistency(const std::vector<CandidateAnswer>& candidates) {
  ConsistencyReport r;
  r.n = static_cast<int>(candidates.size());
  for (auto& c : candidates) {
    if (!c.value) continue;
    const Decimal v = normalize_answer(*c.value);
    auto it = std::find_if(r.histogram.begin(), r.histogram.end(), [&](auto& e) { return e.first == v; });
    if (it == r.histogram.end()) r.histogram.emplace_back(v, 1);
    else ++it->second;
  }
  for (auto& [v, count] : r.histogram) {
    if (count > r.max_count) {
      r.max_count = count;
      r.majority = v;
    }
  }
  r.score = r.n > 0 ? static_cast<double>(r.max_count) / r.n : 0.0;
  return r;
}

/// Evidence ids cited (or numerically implied) by each sampled trace.
inline std::vector<EvidenceTrace> evidence_traces(const ReasoningQuery& query, const std::vector<CandidateAnswer>& cands,
                                                  const SwitchPolicy& classes = {}) {
  std::vector<EvidenceTrace> out;
  for (auto& c : cands) out.push_back({c.run_index, c.trace, extract_evidence_ids(c.trace, query, classes)});
  return out;
}

}  // namespace pcollab
