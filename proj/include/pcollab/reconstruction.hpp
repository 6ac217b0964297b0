#pragma once

#include <optional>
#include <set>
#include <string>

#include "json.hpp"
#include "pcollab/answers.hpp"
#include "pcollab/numeric_switch.hpp"
#include "pcollab/remote_toolsmith.hpp"
#include "pcollab/sandbox.hpp"

namespace pcollab {

namespace detail {

/// True when the '-' at `minus` is a unary operator (not subtraction).
inline bool unary_minus_at(const std::string& code, std::size_t minus) {
  std::size_t k = minus;
  while (k > 0 && (code[k - 1] == ' ' || code[k - 1] == '\t')) --k;
  if (k == 0) return true;
  const char p = code[k - 1];
  if (is_ident(p) || p == ')' || p == ']' || p == '}' || p == '.' || p == '"' || p == '\'') {
    // `return -5`, `in -3`, ...: a keyword before the minus still makes it unary.
    std::size_t w = k;
    while (w > 0 && is_ident(code[w - 1])) --w;
    static const std::set<std::string> keywords = {"return", "in", "and", "or", "not", "if", "else", "is", "yield"};
    return keywords.count(code.substr(w, k - w)) > 0;
  }
  return true;
}

}  // namespace detail

/// Rewrites numeric literals through the mapping (inverse by default: switched
/// target -> original). Identifiers, comments and strings are untouched and
/// replacement is simultaneous. A unary minus directly before a literal is
/// folded in, so `-7` can map back to an original `-5`.
inline std::string substitute_literals(const std::string& code, const NumberMapping& mapping,
                                       Direction dir = Direction::Inverse) {
  const bool inv = dir == Direction::Inverse;
  auto lookup = [&](const Decimal& v) { return inv ? mapping.entry_for_target(v) : mapping.entry_for_original(v); };
  std::string out;
  out.reserve(code.size());
  std::size_t cursor = 0;
  for (auto& span : extract_numbers(code, ScanMode::Code)) {
    std::size_t start = span.start;
    Decimal value = span.value;
    const MappingEntry* e = nullptr;
    if (start > 0 && code[start - 1] == '-' && detail::unary_minus_at(code, start - 1) && !value.is_zero()) {
      if ((e = lookup(-value))) {
        --start;
        value = -value;
      }
    }
    if (!e) e = lookup(value);
    if (!e) continue;
    NumberFormat fmt = span.fmt;
    fmt.thousands = false;
    fmt.min_int_digits = 1;
    std::string rendered = render_number(inv ? e->original : e->transformed, shifted_format(fmt, *e, dir));
    // A negative replacement after a plain literal position (e.g. `x = 7` with
    // 7 -> -5) needs parentheses to stay one operand.
    if (rendered[0] == '-' && start == span.start) rendered = "(" + rendered + ")";
    out.append(code, cursor, start - cursor);
    out += rendered;
    cursor = span.end;
  }
  out.append(code, cursor, std::string::npos);
  return out;
}

struct Reconstruction {
  std::string code;  // after substitution
  ExecResult exec;
  std::optional<Decimal> answer;  // five places; set iff execution succeeded with a representable number

  bool ok() const { return answer.has_value(); }

  nlohmann::json to_json() const {
    return {{"code", code},
            {"status", to_string(exec.status)},
            {"answer", answer ? nlohmann::json(answer->to_string()) : nlohmann::json(nullptr)},
            {"answer_repr", exec.answer_repr},
            {"error", exec.error}};
  }
};

/// Swaps original values back into the tool and runs it locally.
inline Reconstruction reconstruct_answer(const ToolSolution& tool, const NumberMapping& mapping, Sandbox& sandbox,
                                         const std::string& request_id = "reconstruct", int timeout_ms = 5000,
                                         int memory_cap_mb = 256) {
  Reconstruction r;
  r.code = substitute_literals(tool.code, mapping, Direction::Inverse);
  r.exec = sandbox.execute({request_id, r.code, timeout_ms, memory_cap_mb});
  if (r.exec.ok()) {
    if (auto d = r.exec.decimal_answer()) {
      r.answer = normalize_answer(*d);
    } else {
      r.exec.status = ExecStatus::Error;
      r.exec.error = "answer out of range: " + *r.exec.answer;
    }
  }
  return r;
}

}  // namespace pcollab
