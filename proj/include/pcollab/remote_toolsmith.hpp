#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "pcollab/code_block.hpp"
#include "pcollab/errors.hpp"
#include "pcollab/llm_clients.hpp"
#include "pcollab/local_reasoner.hpp"
#include "pcollab/numeric_switch.hpp"
#include "pcollab/query.hpp"

namespace pcollab {

struct CodeLiteral {
  Decimal value;
  std::size_t offset = 0;
  std::string surface;
};

/// Code returned by the remote model for the switched query.
struct ToolSolution {
  std::string code;
  std::string dialect_tag;
  std::vector<CodeLiteral> literals;
  std::string model_id;
  std::string raw_response;
  int attempts = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const {
    nlohmann::json lits = nlohmann::json::array();
    for (auto& l : literals) lits.push_back({{"value", l.value.to_string()}, {"offset", l.offset}});
    return {{"code", code},       {"dialect_tag", dialect_tag}, {"literals", std::move(lits)},
            {"model_id", model_id}, {"attempts", attempts},      {"warnings", warnings}};
  }
};

struct ToolAudit {
  std::vector<Decimal> mapped;
  std::vector<Decimal> unmapped;
  std::vector<Decimal> original_values_seen;  // literals equal to a pre-switch General/YearLike value
  bool coverage_ok = true;

  nlohmann::json to_json() const {
    auto arr = [](const std::vector<Decimal>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (auto& d : v) a.push_back(d.to_string());
      return a;
    };
    return {{"mapped", arr(mapped)},
            {"unmapped", arr(unmapped)},
            {"original_values_seen", arr(original_values_seen)},
            {"coverage_ok", coverage_ok}};
  }
};

struct ToolsmithOptions {
  std::string dialect = "python";
  std::string model_id = "remote";
  int max_tokens = 1024;
};

/// Numeric literals of `code` (comments, strings and identifiers skipped).
inline std::vector<CodeLiteral> code_literals(const std::string& code) {
  std::vector<CodeLiteral> out;
  for (auto& s : extract_numbers(code, ScanMode::Code)) out.push_back({s.value, s.start, s.surface});
  return out;
}

/// The query as the remote model sees it: sentences relabelled 0..m-1 so
/// original positions stay on the device.
inline std::string render_switched_query(const SwitchedQuery& q) {
  std::vector<int> labels(q.sentences.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
  return render_prompt_query(labels, q.sentences, q.question);
}

/// Asks the remote model (greedy) for a code tool answering `rendered`.
/// Retries once with a reminder when the reply has no fenced block.
inline ToolSolution elicit_code(const std::string& rendered, ChatClient& remote, const ToolsmithOptions& opts = {}) {
  auto messages = code_prompt_messages(rendered);
  ToolSolution tool;
  tool.model_id = opts.model_id;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    tool.attempts = attempt;
    tool.raw_response = ask(remote, Role::Remote, messages, Sampling::greedy_decoding(), opts.max_tokens).text;
    if (auto block = first_code_block(tool.raw_response)) {
      tool.code = block->code;
      tool.dialect_tag = block->info;
      if (tool.dialect_tag != opts.dialect)
        tool.warnings.push_back("code block tagged \"" + tool.dialect_tag + "\", expected \"" + opts.dialect + "\"");
      tool.literals = code_literals(tool.code);
      return tool;
    }
    messages.push_back({"assistant", tool.raw_response});
    messages.push_back({"user", prompts::kCodeReminder});
  }
  throw MissingCode("remote reply has no fenced code block after a reminder");
}

inline ToolSolution elicit_tool(const SwitchedQuery& switched, ChatClient& remote, const ToolsmithOptions& opts = {}) {
  return elicit_code(render_switched_query(switched), remote, opts);
}

/// Splits literals into switch targets and everything else. coverage_ok is a
/// tripwire: it fails when a literal equals an original General/YearLike
/// value, which the switch should have made impossible.
inline ToolAudit audit_tool(const ToolSolution& tool, const NumberMapping& mapping) {
  ToolAudit a;
  std::unordered_set<Decimal, DecimalHash> originals;
  for (auto& e : mapping.entries())
    if (e.cls != NumberClass::Special) originals.insert(e.original);
  for (auto& lit : tool.literals) {
    if (mapping.entry_for_target(lit.value)) a.mapped.push_back(lit.value);
    else a.unmapped.push_back(lit.value);
    if (originals.count(lit.value) && !mapping.entry_for_target(lit.value)) {
      a.original_values_seen.push_back(lit.value);
      a.coverage_ok = false;
    }
  }
  return a;
}

}  // namespace pcollab
