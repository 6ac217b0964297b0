#pragma once

// Scoring (accuracy, normalized accuracy, judged leakage), the comparison
// methods, and threshold sweeps that reuse local samples across taus.

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <regex>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcollab/cascade_orchestrator.hpp"

namespace pcollab {

// ---------------------------------------------------------------------------
// Leakage judge
// ---------------------------------------------------------------------------

/// "yes..." -> leaked, "no..." -> clean, anything else -> leaked + unparseable.
inline LeakageVerdict parse_judge_reply(const std::string& reply, std::string judge_id = "judge") {
  std::string t = reply;
  t.erase(0, t.find_first_not_of(" \t\r\n\"'*`"));
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  LeakageVerdict v;
  v.raw_reply = reply;
  v.judge_id = std::move(judge_id);
  if (t.rfind("yes", 0) == 0) {
    v.leaked = true;
  } else if (t.rfind("no", 0) == 0) {
    v.leaked = false;
  } else {
    v.leaked = true;
    v.unparseable = true;
  }
  return v;
}

inline std::vector<ChatMessage> judge_messages(const std::string& original, const std::string& transmitted) {
  return {{"system", prompts::kLeakageJudge},
          {"user", "Context A:\n" + original + "\n\nContext B:\n" + transmitted}};
}

inline LeakageVerdict judge_leakage(const std::string& original, const std::string& transmitted, ChatClient& judge,
                                    const std::string& judge_id = "judge") {
  const auto reply = ask(judge, Role::Judge, judge_messages(original, transmitted), Sampling::greedy_decoding(), 16);
  return parse_judge_reply(reply.text, judge_id);
}

/// Judges every record that contacted the remote model; local-only records
/// are marked clean without a judge call. Judge transport errors leave the
/// verdict unset, which aggregation counts as leaked.
inline void judge_records(std::vector<AnswerRecord>& records, ChatClient& judge, int workers = 1,
                          const std::string& judge_id = "judge") {
  parallel_for(records.size(), workers, [&](std::size_t i) {
    auto& r = records[i];
    if (!r.remote_contacted()) {
      r.leakage = LeakageVerdict{false, false, "", ""};
      return;
    }
    try {
      r.leakage = judge_leakage(r.original_context, transmitted_text(r.transmitted), judge, judge_id);
    } catch (const Error& e) {
      r.leakage.reset();
      r.errors.push_back(std::string("judge unavailable: ") + e.what());
    }
  });
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct Report {
  std::size_t records = 0;
  std::size_t correct = 0;
  std::size_t leaked = 0;
  std::size_t unjudged = 0;  // remote-contacting records without a verdict, counted as leaked
  double accuracy = 0.0;
  std::optional<double> normalized_accuracy;
  double leakage_rate = 0.0;
  double protection_rate = 1.0;
  std::map<std::string, std::size_t> paths;
  bool empty = true;

  nlohmann::json to_json() const {
    return {{"records", records},
            {"correct", correct},
            {"leaked", leaked},
            {"unjudged", unjudged},
            {"accuracy", accuracy},
            {"normalized_accuracy", normalized_accuracy ? nlohmann::json(*normalized_accuracy) : nlohmann::json(nullptr)},
            {"leakage_rate", leakage_rate},
            {"protection_rate", protection_rate},
            {"paths", paths},
            {"empty", empty}};
  }
};

inline bool record_leaked(const AnswerRecord& r) {
  if (!r.remote_contacted()) return false;
  return !r.leakage || r.leakage->leaked;
}

/// Pure fold over records. Leakage is over all records; records that never
/// reached the remote model count as clean.
inline Report aggregate(const std::vector<AnswerRecord>& records, std::optional<double> remote_only_accuracy = std::nullopt) {
  Report rep;
  rep.records = records.size();
  rep.empty = records.empty();
  for (const char* p : {"local", "collab", "collab-failed-fallback", "synthesis-fallback"}) rep.paths[p] = 0;
  for (auto& r : records) {
    if (r.correct().value_or(false)) ++rep.correct;
    if (record_leaked(r)) ++rep.leaked;
    if (r.remote_contacted() && !r.leakage) ++rep.unjudged;
    ++rep.paths[to_string(r.path)];
  }
  if (!rep.empty) {
    rep.accuracy = static_cast<double>(rep.correct) / static_cast<double>(rep.records);
    rep.leakage_rate = static_cast<double>(rep.leaked) / static_cast<double>(rep.records);
  }
  rep.protection_rate = 1.0 - rep.leakage_rate;
  if (remote_only_accuracy) {
    if (!(*remote_only_accuracy > 0.0)) throw std::invalid_argument("remote-only accuracy must be positive to normalize");
    rep.normalized_accuracy = rep.accuracy / *remote_only_accuracy;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"pipeline", "single",  "self_consistency", "vanilla_cascade",
                                                 "hint",     "example", "remote_only"};
  return names;
}

inline bool is_cascade_method(const std::string& m) {
  return m == "pipeline" || m == "vanilla_cascade" || m == "hint" || m == "example";
}

namespace detail {

/// Shared front half of the baselines: shorten on the local traces.
inline ReasoningQuery shortened_query(const ReasoningQuery& q, const LocalStage& local, const CascadeConfig& cfg,
                                      nlohmann::json& stages) {
  const auto ctx = shorten_context(q, local.traces, cfg.retrieval_k, cfg.bm25);
  nlohmann::json c = nlohmann::json::array();
  for (std::size_t i = 0; i < ctx.sentences.size(); ++i)
    c.push_back({{"index", ctx.sentences[i].index}, {"source", to_string(ctx.sources[i])}});
  stages["context"] = std::move(c);
  return with_context(q, ctx);
}

/// Local re-inference over `rendered`; falls back to the first-round majority.
inline void reinfer(const ReasoningQuery& q, const std::string& rendered, const std::string& tag, const LocalStage& local,
                    const CascadeConfig& cfg, const Clients& clients, Sandbox& sandbox, CollabOutcome& out) {
  const auto cands = sample_rendered(rendered, q.id + "#" + tag, bound(clients.local, Role::Local), sandbox, cfg.local);
  const auto rep = compute_consistency(cands);
  out.stages["reinference"] = rep.to_json();
  if (rep.majority) {
    out.path = PathKind::Collab;
    out.answer = rep.majority;
  } else {
    out.path = PathKind::CollabFailedFallback;
    out.answer = local.report.majority;
    out.errors.push_back("local re-inference produced no answer");
  }
}

inline std::string rewritten_block(const std::string& reply) {
  static const std::regex tag(R"(<rewritten>([\s\S]*?)</rewritten>)");
  std::smatch m;
  if (std::regex_search(reply, m, tag)) return m[1].str();
  return reply;
}

inline std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r\n"));
  s.erase(s.find_last_not_of(" \t\r\n") + 1);
  return s;
}

}  // namespace detail

/// Vanilla cascade: the shortened original query goes to the remote model
/// unprotected and its code runs locally as-is.
inline CollabOutcome run_vanilla_collaboration(const ReasoningQuery& q, const LocalStage& local, const CascadeConfig& cfg,
                                               const Clients& clients, Sandbox& sandbox) {
  CollabOutcome out;
  auto log = std::make_shared<CallLog>();
  RecordingClient remote(clients.remote, log);
  try {
    const auto shortened = detail::shortened_query(q, local, cfg, out.stages);
    const auto tool = elicit_code(render_prompt_query(shortened), remote, cfg.toolsmith);
    out.stages["tool"] = tool.to_json();
    const auto exec = sandbox.execute({q.id + "#tool", tool.code, cfg.local.timeout_ms, cfg.local.memory_cap_mb});
    out.stages["execution"] = exec.to_json();
    if (auto d = exec.ok() ? exec.decimal_answer() : std::nullopt) {
      out.path = PathKind::Collab;
      out.answer = normalize_answer(*d);
    } else {
      out.path = PathKind::CollabFailedFallback;
      out.answer = local.report.majority;
      out.errors.push_back("remote tool failed: " + exec.error);
    }
  } catch (const Error& e) {
    out.path = PathKind::CollabFailedFallback;
    out.answer = local.report.majority;
    out.errors.push_back(e.what());
  }
  out.transmitted = remote_payloads(*log);
  return out;
}

/// Hint: local problem description -> remote high-level hint -> local
/// re-inference on the full query plus the hint.
inline CollabOutcome run_hint_collaboration(const ReasoningQuery& q, const LocalStage& local, const CascadeConfig& cfg,
                                            const Clients& clients, Sandbox& sandbox) {
  CollabOutcome out;
  auto log = std::make_shared<CallLog>();
  RecordingClient remote(clients.remote, log);
  try {
    const auto shortened = detail::shortened_query(q, local, cfg, out.stages);
    const auto description = detail::trim(ask(bound(clients.local, Role::Local), Role::Local,
                                              {{"system", prompts::kHintDescribe}, {"user", render_prompt_query(shortened)}},
                                              cfg.local.sampling, cfg.local.max_tokens)
                                              .text);
    const auto hint = detail::trim(ask(remote, Role::Remote, {{"system", prompts::kHintAdvise}, {"user", description}},
                                       Sampling::greedy_decoding(), cfg.toolsmith.max_tokens)
                                       .text);
    out.stages["description"] = description;
    out.stages["hint"] = hint;
    detail::reinfer(q, render_prompt_query(q) + "\n\nHint: " + hint, "hint", local, cfg, clients, sandbox, out);
  } catch (const Error& e) {
    out.path = PathKind::CollabFailedFallback;
    out.answer = local.report.majority;
    out.errors.push_back(e.what());
  }
  out.transmitted = remote_payloads(*log);
  return out;
}

/// Example: one-shot rephrase (topic and numbers, unvalidated) -> remote
/// solution of the example -> local re-inference with both.
inline CollabOutcome run_example_collaboration(const ReasoningQuery& q, const LocalStage& local, const CascadeConfig& cfg,
                                               const Clients& clients, Sandbox& sandbox) {
  CollabOutcome out;
  auto log = std::make_shared<CallLog>();
  RecordingClient remote(clients.remote, log);
  try {
    const auto shortened = detail::shortened_query(q, local, cfg, out.stages);
    const auto example = detail::trim(detail::rewritten_block(
        ask(bound(clients.shifter, Role::Shifter), Role::Shifter,
            {{"system", prompts::kExampleRephrase}, {"user", render_prompt_query(shortened)}}, cfg.synthesis.sampling,
            cfg.synthesis.max_tokens)
            .text));
    const auto solution = ask(remote, Role::Remote, code_prompt_messages(example), Sampling::greedy_decoding(),
                              cfg.toolsmith.max_tokens)
                              .text;
    out.stages["example"] = example;
    out.stages["example_solution"] = solution;
    detail::reinfer(q,
                    render_prompt_query(q) + "\n\nA solved analogous example:\n" + example + "\n\nIts solution:\n" + solution,
                    "example", local, cfg, clients, sandbox, out);
  } catch (const Error& e) {
    out.path = PathKind::CollabFailedFallback;
    out.answer = local.report.majority;
    out.errors.push_back(e.what());
  }
  out.transmitted = remote_payloads(*log);
  return out;
}

inline CollabFn collaboration_for(const std::string& method, const CascadeConfig& cfg, const Clients& clients,
                                  Sandbox& sandbox) {
  auto bind = [&](auto fn) -> CollabFn {
    return [fn, &cfg, &clients, &sandbox](const ReasoningQuery& q, const LocalStage& l) { return fn(q, l, cfg, clients, sandbox); };
  };
  if (method == "pipeline") return bind(run_collaboration);
  if (method == "vanilla_cascade") return bind(run_vanilla_collaboration);
  if (method == "hint") return bind(run_hint_collaboration);
  if (method == "example") return bind(run_example_collaboration);
  throw ConfigError("method is not a cascade: " + method);
}

/// The remote model answers the full original query; its code runs locally.
/// The reference point for normalized accuracy.
inline AnswerRecord run_remote_only(const ReasoningQuery& q, const CascadeConfig& cfg, const Clients& clients,
                                    Sandbox& sandbox) {
  LocalStage none;
  CollabOutcome out;
  auto log = std::make_shared<CallLog>();
  RecordingClient remote(clients.remote, log);
  try {
    const auto tool = elicit_code(render_prompt_query(q), remote, cfg.toolsmith);
    out.stages["tool"] = tool.to_json();
    const auto exec = sandbox.execute({q.id + "#tool", tool.code, cfg.local.timeout_ms, cfg.local.memory_cap_mb});
    out.stages["execution"] = exec.to_json();
    if (auto d = exec.ok() ? exec.decimal_answer() : std::nullopt) {
      out.path = PathKind::Collab;
      out.answer = normalize_answer(*d);
    } else {
      out.errors.push_back("remote tool failed: " + exec.error);
    }
  } catch (const Error& e) {
    out.errors.push_back(e.what());
  }
  out.transmitted = remote_payloads(*log);
  return assemble_record(q, "remote_only", cfg.tau, none, &out);
}

/// One record for `method`.
inline AnswerRecord run_method(const ReasoningQuery& q, const std::string& method, const CascadeConfig& cfg,
                               const Clients& clients, Sandbox& sandbox) {
  if (method == "remote_only") return run_remote_only(q, cfg, clients, sandbox);
  if (method == "single" || method == "self_consistency") {
    const std::optional<int> n = method == "single" ? std::optional<int>(1) : std::nullopt;
    CascadeConfig local_only = cfg;
    local_only.tau = 0.0;
    return run_cascade(q, method, local_only, clients, sandbox, nullptr, n);
  }
  return run_cascade(q, method, cfg, clients, sandbox, collaboration_for(method, cfg, clients, sandbox));
}

inline std::vector<AnswerRecord> run_baseline(const std::string& method, const std::vector<ReasoningQuery>& queries,
                                              const CascadeConfig& cfg, const Clients& clients, Sandbox& sandbox) {
  if (std::find(method_names().begin(), method_names().end(), method) == method_names().end())
    throw ConfigError("unknown method: " + method);
  std::vector<AnswerRecord> out(queries.size());
  parallel_for(queries.size(), cfg.parallelism,
               [&](std::size_t i) { out[i] = run_method(queries[i], method, cfg, clients, sandbox); });
  return out;
}

// ---------------------------------------------------------------------------
// Threshold sweep
// ---------------------------------------------------------------------------

struct SweepPoint {
  double tau = 0.0;
  Report report;
};

/// One point per tau. Local samples, the collaboration outcome and its judge
/// verdict are computed at most once per query and reused for every tau.
inline std::vector<SweepPoint> sweep(const std::vector<ReasoningQuery>& queries, const std::vector<double>& taus,
                                     const CascadeConfig& cfg, const Clients& clients, Sandbox& sandbox,
                                     const std::string& method = "pipeline",
                                     std::optional<double> remote_only_accuracy = std::nullopt) {
  for (double t : taus)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("tau outside [0, 1]: " + std::to_string(t));
  if (!is_cascade_method(method)) throw ConfigError("sweep needs a cascade method, got " + method);
  const auto collaborate = collaboration_for(method, cfg, clients, sandbox);

  // per_query[i][k] is the record of query i at taus[k].
  std::vector<std::vector<AnswerRecord>> per_query(queries.size());
  parallel_for(queries.size(), cfg.parallelism, [&](std::size_t i) {
    const auto& q = queries[i];
    LocalStage local;
    std::string local_error;
    try {
      local = run_local_stage(q, cfg, bound(clients.local, Role::Local), sandbox);
    } catch (const std::exception& e) {
      local_error = std::string("local stage failed: ") + e.what();
    }
    std::optional<CollabOutcome> collab;
    std::optional<LeakageVerdict> verdict;
    bool judged = false;
    for (double tau : taus) {
      AnswerRecord r;
      if (!local_error.empty() || route(local.report, tau) == Decision::AnswerLocally) {
        r = assemble_record(q, method, tau, local, nullptr);
        if (!local_error.empty()) r.errors.push_back(local_error);
        r.leakage = LeakageVerdict{false, false, "", ""};
      } else {
        if (!collab) {
          try {
            collab = collaborate(q, local);
          } catch (const std::exception& e) {
            collab = CollabOutcome{};
            collab->answer = local.report.majority;
            collab->errors.push_back(std::string("collaboration failed: ") + e.what());
          }
        }
        r = assemble_record(q, method, tau, local, &*collab);
        if (r.remote_contacted() && clients.judge && !judged) {
          judged = true;
          try {
            verdict = judge_leakage(r.original_context, transmitted_text(r.transmitted), *clients.judge);
          } catch (const Error&) {
          }
        }
        r.leakage = r.remote_contacted() ? verdict : LeakageVerdict{false, false, "", ""};
      }
      per_query[i].push_back(std::move(r));
    }
  });

  std::vector<SweepPoint> points;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    std::vector<AnswerRecord> at_tau;
    for (auto& recs : per_query) at_tau.push_back(recs[k]);
    points.push_back({taus[k], aggregate(at_tau, remote_only_accuracy)});
  }
  return points;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "tau,accuracy,leakage,protection\n";
  char buf[128];
  for (auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6f,%.6f,%.6f\n", p.tau, p.report.accuracy, p.report.leakage_rate,
                  p.report.protection_rate);
    out << buf;
  }
}

}  // namespace pcollab
