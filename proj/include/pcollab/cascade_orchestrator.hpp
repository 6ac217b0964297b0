#pragma once

// Per-query driver: local sampling and self-consistency, routing on the
// consistency score, and the privacy-preserving collaboration path
// (shorten -> topic shift -> numeric switch -> remote tool -> local
// reconstruction). Every query yields an AnswerRecord, whatever fails.

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "pcollab/answers.hpp"
#include "pcollab/llm_clients.hpp"
#include "pcollab/local_reasoner.hpp"
#include "pcollab/numeric_switch.hpp"
#include "pcollab/prompts.hpp"
#include "pcollab/query.hpp"
#include "pcollab/query_synthesis.hpp"
#include "pcollab/reconstruction.hpp"
#include "pcollab/remote_toolsmith.hpp"
#include "pcollab/retrieval.hpp"
#include "pcollab/sandbox.hpp"

namespace pcollab {

struct CascadeConfig {
  double tau = 1.0;
  LocalSamplingOptions local;
  std::size_t retrieval_k = 10;
  Bm25Params bm25;
  SwitchPolicy policy;  // seed is replaced per query
  SynthesisOptions synthesis;
  ToolsmithOptions toolsmith;
  std::uint64_t global_seed = 0;
  int parallelism = 1;
  bool record_timings = false;

  void validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must be in [0, 1]");
    if (local.n < 1) throw ConfigError("n_samples must be at least 1");
    if (synthesis.max_attempts < 1) throw ConfigError("max_rewrite_attempts must be at least 1");
    if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  }
};

enum class Decision { AnswerLocally, Collaborate };

/// Collaborate iff S < tau, saturated at the ends: tau <= 0 never
/// collaborates and tau >= 1 always does (even at S = 1).
inline Decision route(const ConsistencyReport& report, double tau) {
  if (tau <= 0.0) return Decision::AnswerLocally;
  if (tau >= 1.0) return Decision::Collaborate;
  return report.score < tau ? Decision::Collaborate : Decision::AnswerLocally;
}

enum class PathKind { Local, Collab, CollabFailedFallback, SynthesisFallback };

inline const char* to_string(PathKind p) {
  switch (p) {
    case PathKind::Local:
      return "local";
    case PathKind::Collab:
      return "collab";
    case PathKind::CollabFailedFallback:
      return "collab-failed-fallback";
    case PathKind::SynthesisFallback:
      return "synthesis-fallback";
  }
  return "local";
}

inline PathKind parse_path(const std::string& s) {
  if (s == "collab") return PathKind::Collab;
  if (s == "collab-failed-fallback") return PathKind::CollabFailedFallback;
  if (s == "synthesis-fallback") return PathKind::SynthesisFallback;
  if (s == "local") return PathKind::Local;
  throw std::invalid_argument("unknown path: " + s);
}

/// Query-derived messages of one call to a remote-role client. Static prompt
/// assets (instructions, demonstrations, reminders) are left out.
struct TransmittedPayload {
  Role role = Role::Remote;
  std::vector<ChatMessage> messages;

  std::string text() const {
    std::string out;
    for (auto& m : messages) {
      if (!out.empty()) out += "\n";
      out += m.content;
    }
    return out;
  }
};

inline std::string transmitted_text(const std::vector<TransmittedPayload>& payloads) {
  std::string out;
  for (auto& p : payloads) {
    if (!out.empty()) out += "\n\n";
    out += p.text();
  }
  return out;
}

/// Judge ruling on one record's remote-bound text. Unparseable replies count
/// as leaked.
struct LeakageVerdict {
  bool leaked = true;
  bool unparseable = false;
  std::string raw_reply;
  std::string judge_id;

  nlohmann::json to_json() const {
    return {{"leaked", leaked}, {"unparseable", unparseable}, {"raw_reply", raw_reply}, {"judge_id", judge_id}};
  }
  static LeakageVerdict from_json(const nlohmann::json& j) {
    return {j.at("leaked").get<bool>(), j.value("unparseable", false), j.value("raw_reply", ""), j.value("judge_id", "")};
  }
};

struct AnswerRecord {
  std::string id;
  std::string method = "pipeline";
  double tau = 0.0;
  std::optional<Decimal> answer;
  std::optional<Decimal> gold;
  PathKind path = PathKind::Local;
  ConsistencyReport consistency;
  std::vector<TransmittedPayload> transmitted;
  std::string original_context;
  nlohmann::json stages = nlohmann::json::object();  // per-stage artifacts
  std::vector<std::string> errors;
  nlohmann::json timings = nlohmann::json::object();
  std::optional<LeakageVerdict> leakage;  // filled in by the judge pass

  bool remote_contacted() const { return !transmitted.empty(); }
  std::optional<bool> correct() const {
    if (!gold) return std::nullopt;
    return answer && answers_match(*answer, *gold);
  }

  nlohmann::json to_json() const {
    nlohmann::json tx = nlohmann::json::array();
    for (auto& p : transmitted) {
      nlohmann::json msgs = nlohmann::json::array();
      for (auto& m : p.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
      tx.push_back({{"role", pcollab::to_string(p.role)}, {"messages", std::move(msgs)}});
    }
    auto opt = [](const std::optional<Decimal>& d) { return d ? nlohmann::json(d->to_string()) : nlohmann::json(nullptr); };
    const auto c = correct();
    nlohmann::json j = {{"id", id},
                        {"method", method},
                        {"tau", tau},
                        {"answer", opt(answer)},
                        {"gold", opt(gold)},
                        {"correct", c ? nlohmann::json(*c) : nlohmann::json(nullptr)},
                        {"path", pcollab::to_string(path)},
                        {"consistency", consistency.to_json()},
                        {"transmitted", std::move(tx)},
                        {"original_context", original_context},
                        {"stages", stages},
                        {"errors", errors},
                        {"prompt_version", prompts::kPromptVersion}};
    if (!timings.empty()) j["timings"] = timings;
    if (leakage) j["leakage"] = leakage->to_json();
    return j;
  }

  /// Reads the fields evaluation needs; stage artifacts are kept as-is.
  static AnswerRecord from_json(const nlohmann::json& j) {
    AnswerRecord r;
    r.id = j.at("id").get<std::string>();
    r.method = j.value("method", "pipeline");
    r.tau = j.value("tau", 0.0);
    auto dec = [&](const char* key) -> std::optional<Decimal> {
      if (!j.contains(key) || j[key].is_null()) return std::nullopt;
      return Decimal::must_parse(j[key].get<std::string>());
    };
    r.answer = dec("answer");
    r.gold = dec("gold");
    r.path = parse_path(j.at("path").get<std::string>());
    if (j.contains("consistency")) {
      const auto& c = j["consistency"];
      r.consistency.score = c.value("score", 0.0);
      r.consistency.n = c.value("n", 0);
      r.consistency.max_count = c.value("max_count", 0);
      if (c.contains("majority") && c["majority"].is_string())
        r.consistency.majority = Decimal::must_parse(c["majority"].get<std::string>());
      for (auto& h : c.value("histogram", nlohmann::json::array()))
        r.consistency.histogram.emplace_back(Decimal::must_parse(h.at("value").get<std::string>()), h.at("count").get<int>());
    }
    for (auto& p : j.value("transmitted", nlohmann::json::array())) {
      TransmittedPayload tp;
      const auto role = p.value("role", "Remote");
      tp.role = role == "Local" ? Role::Local : role == "Shifter" ? Role::Shifter : role == "Judge" ? Role::Judge : Role::Remote;
      for (auto& m : p.at("messages")) tp.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
      r.transmitted.push_back(std::move(tp));
    }
    r.original_context = j.value("original_context", "");
    r.stages = j.value("stages", nlohmann::json::object());
    r.errors = j.value("errors", std::vector<std::string>{});
    r.timings = j.value("timings", nlohmann::json::object());
    if (j.contains("leakage") && j["leakage"].is_object()) r.leakage = LeakageVerdict::from_json(j["leakage"]);
    return r;
  }
};

// ---------------------------------------------------------------------------
// Privacy gate
// ---------------------------------------------------------------------------

inline bool is_static_prompt_asset(const std::string& content) {
  static const std::unordered_set<std::string> assets = [] {
    std::unordered_set<std::string> s = {prompts::kLocalInference, prompts::kTopicRewriter, prompts::kLeakageJudge,
                                         prompts::kCodeReminder,   prompts::kHintDescribe,  prompts::kHintAdvise,
                                         prompts::kExampleRephrase};
    for (auto& d : prompts::code_demonstrations()) {
      s.insert(d.input);
      s.insert(d.output);
    }
    s.insert(prompts::rewriter_demonstration().input);
    s.insert(prompts::rewriter_demonstration().output);
    return s;
  }();
  return assets.count(content) > 0;
}

/// Remote-role calls from `log`, reduced to their query-derived messages.
inline std::vector<TransmittedPayload> remote_payloads(const CallLog& log) {
  std::vector<TransmittedPayload> out;
  for (auto& call : log.for_role(Role::Remote)) {
    TransmittedPayload p;
    p.role = call.role;
    for (auto& m : call.request.messages)
      if (!is_static_prompt_asset(m.content)) p.messages.push_back(m);
    out.push_back(std::move(p));
  }
  return out;
}

namespace detail {

inline std::string squash_spaces(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

}  // namespace detail

/// Sentences shorter than this (after whitespace squashing) are too generic
/// to count as a verbatim leak on their own.
inline constexpr std::size_t kMinLeakSentenceChars = 20;

/// Reasons `payload` would expose the original query: a verbatim original
/// sentence or question, or a General/YearLike original value.
inline std::vector<std::string> privacy_findings(const ReasoningQuery& original, const std::string& payload,
                                                 const SwitchPolicy& classes = {}) {
  std::vector<std::string> findings;
  const std::string flat = detail::squash_spaces(payload);
  auto check_text = [&](const std::string& s, const std::string& what) {
    const std::string t = detail::squash_spaces(s);
    if (t.size() >= kMinLeakSentenceChars && flat.find(t) != std::string::npos) findings.push_back(what + " sent verbatim");
  };
  for (auto& s : original.sentences) check_text(s.text, "sentence " + std::to_string(s.index));
  check_text(original.question, "question");

  std::unordered_set<Decimal, DecimalHash> protected_values;
  for (auto& s : original.sentences)
    for (auto& v : extract_values(s.text))
      if (classes.classify(v) != NumberClass::Special) protected_values.insert(v);
  for (auto& v : extract_values(original.question))
    if (classes.classify(v) != NumberClass::Special) protected_values.insert(v);

  static const std::regex label(R"(\[\s*Sentence\s*\d+\s*\])", std::regex::icase);
  const std::string unlabeled = std::regex_replace(payload, label, "[Sentence]");
  std::set<std::string> reported;
  for (auto& v : extract_values(unlabeled))
    if (protected_values.count(v) && reported.insert(v.to_string()).second)
      findings.push_back("original value " + v.to_string() + " sent");
  return findings;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// FNV-1a over the global seed bytes and the query id.
inline std::uint64_t query_seed(std::uint64_t global_seed, const std::string& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (global_seed >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class StageTimer {
 public:
  explicit StageTimer(bool enabled) : enabled_(enabled) {}
  template <class F>
  auto time(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Done {
      StageTimer* self;
      std::string stage;
      std::chrono::steady_clock::time_point t0;
      ~Done() {
        if (self->enabled_)
          self->ms_[stage] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      }
    } done{this, stage, t0};
    return f();
  }
  nlohmann::json json() const { return enabled_ ? ms_ : nlohmann::json::object(); }

 private:
  bool enabled_;
  nlohmann::json ms_ = nlohmann::json::object();
};

/// The client bound to `role`, or ConfigError when the role is unbound.
inline ChatClient& bound(const ChatClientPtr& client, Role role) {
  if (!client) throw ConfigError(std::string("no client bound for role ") + to_string(role));
  return *client;
}

struct LocalStage {
  std::vector<CandidateAnswer> candidates;
  ConsistencyReport report;
  std::vector<EvidenceTrace> traces;
  nlohmann::json timings = nlohmann::json::object();
};

struct CollabOutcome {
  PathKind path = PathKind::CollabFailedFallback;
  std::optional<Decimal> answer;
  std::vector<TransmittedPayload> transmitted;
  nlohmann::json stages = nlohmann::json::object();
  std::vector<std::string> errors;
  nlohmann::json timings = nlohmann::json::object();
};

inline LocalStage run_local_stage(const ReasoningQuery& query, const CascadeConfig& cfg, ChatClient& local,
                                  Sandbox& sandbox, std::optional<int> n = std::nullopt) {
  StageTimer timer(cfg.record_timings);
  LocalStage st;
  LocalSamplingOptions opts = cfg.local;
  if (n) opts.n = *n;
  st.candidates = timer.time("local_sampling", [&] { return sample_solutions(query, local, sandbox, opts); });
  st.report = compute_consistency(st.candidates);
  st.traces = evidence_traces(query, st.candidates, cfg.policy);
  st.timings = timer.json();
  return st;
}

namespace detail {

inline nlohmann::json candidates_json(const std::vector<CandidateAnswer>& cands, const std::vector<EvidenceTrace>& traces) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    auto& c = cands[i];
    nlohmann::json j = {{"run_index", c.run_index},
                        {"value", c.value ? nlohmann::json(c.value->to_string()) : nlohmann::json(nullptr)},
                        {"failure", c.failure}};
    if (i < traces.size()) j["evidence_ids"] = traces[i].cited_ids;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace detail

/// The privacy-preserving collaboration path. Nothing reaches the remote
/// binding unless the rendered proxy query passes the privacy gate.
inline CollabOutcome run_collaboration(const ReasoningQuery& query, const LocalStage& local, const CascadeConfig& cfg,
                                       const Clients& clients, Sandbox& sandbox) {
  StageTimer timer(cfg.record_timings);
  CollabOutcome out;
  auto& shifter = bound(clients.shifter, Role::Shifter);
  auto log = std::make_shared<CallLog>();
  RecordingClient remote(clients.remote, log);
  auto fallback = [&](PathKind path, const std::string& why) {
    out.path = path;
    out.answer = local.report.majority;
    out.errors.push_back(why);
  };
  auto finish = [&]() -> CollabOutcome {
    out.transmitted = remote_payloads(*log);
    out.timings = timer.json();
    return out;
  };

  // 1. Shorten the context to cited evidence plus lexical matches.
  ShortenedContext ctx;
  try {
    ctx = timer.time("shorten", [&] { return shorten_context(query, local.traces, cfg.retrieval_k, cfg.bm25); });
  } catch (const EmptyContext& e) {
    fallback(PathKind::SynthesisFallback, e.what());
    return finish();
  }
  {
    nlohmann::json c = nlohmann::json::array();
    for (std::size_t i = 0; i < ctx.sentences.size(); ++i)
      c.push_back({{"index", ctx.sentences[i].index}, {"source", to_string(ctx.sources[i])}});
    out.stages["context"] = std::move(c);
  }
  const ReasoningQuery shortened = with_context(query, ctx);

  // 2. Topic shift.
  auto synth = timer.time("synthesis", [&] { return synthesize(shortened, shifter, cfg.synthesis); });
  if (auto* fb = std::get_if<FallbackSignal>(&synth)) {
    out.stages["synthesis"] = {{"attempts", fb->attempts}, {"violations", fb->violations}};
    fallback(PathKind::SynthesisFallback, "topic shift failed after " + std::to_string(fb->attempts) + " attempts");
    return finish();
  }
  const auto& rewrite = std::get<SynthesizedQuery>(synth);
  out.stages["synthesis"] = {{"attempts", rewrite.attempts}, {"sentences", rewrite.sentences}, {"question", rewrite.question}};

  // 3. Numeric switch over the synthesized text; no target may equal any
  //    number of the original document.
  SwitchPolicy policy = cfg.policy;
  policy.seed = query_seed(cfg.global_seed, query.id);
  std::vector<Decimal> values;
  for (auto& s : rewrite.sentences)
    for (auto& v : extract_values(s)) values.push_back(v);
  for (auto& v : extract_values(rewrite.question)) values.push_back(v);
  std::vector<Decimal> original_values;
  for (auto& s : query.sentences)
    for (auto& v : extract_values(s.text)) original_values.push_back(v);
  for (auto& v : extract_values(query.question)) original_values.push_back(v);
  std::shared_ptr<const NumberMapping> mapping;
  try {
    mapping = std::make_shared<const NumberMapping>(
        timer.time("switch", [&] { return build_mapping(values, policy, original_values); }));
  } catch (const PolicyExhausted& e) {
    fallback(PathKind::SynthesisFallback, std::string("numeric switch failed: ") + e.what());
    return finish();
  }
  SwitchedQuery switched{apply_mapping(rewrite.sentences, *mapping, Direction::Forward),
                         apply_mapping(rewrite.question, *mapping, Direction::Forward), mapping};
  out.stages["mapping"] = mapping->to_json();
  out.stages["switched"] = {{"sentences", switched.sentences}, {"question", switched.question}};

  // 4. Privacy gate before anything leaves the device.
  auto findings = privacy_findings(query, render_switched_query(switched), cfg.policy);
  if (!findings.empty()) {
    out.stages["privacy_gate"] = findings;
    fallback(PathKind::SynthesisFallback, "proxy query failed the privacy gate");
    return finish();
  }

  // 5. Remote tool.
  ToolSolution tool;
  try {
    tool = timer.time("remote", [&] { return elicit_tool(switched, remote, cfg.toolsmith); });
  } catch (const Error& e) {
    fallback(PathKind::CollabFailedFallback, std::string("remote tool unavailable: ") + e.what());
    return finish();
  }
  const auto audit = audit_tool(tool, *mapping);
  out.stages["tool"] = tool.to_json();
  out.stages["audit"] = audit.to_json();
  if (!audit.coverage_ok) out.errors.push_back("tool literal equals an original value");

  // 6. Local reconstruction.
  auto rec = timer.time("reconstruction", [&] {
    return reconstruct_answer(tool, *mapping, sandbox, query.id + "#tool", cfg.local.timeout_ms, cfg.local.memory_cap_mb);
  });
  out.stages["reconstruction"] = rec.to_json();
  if (!rec.ok()) {
    fallback(PathKind::CollabFailedFallback, "reconstruction " + to_string(rec.exec.status) + ": " + rec.exec.error);
    return finish();
  }
  out.path = PathKind::Collab;
  out.answer = rec.answer;
  return finish();
}

using CollabFn = std::function<CollabOutcome(const ReasoningQuery&, const LocalStage&)>;

inline AnswerRecord assemble_record(const ReasoningQuery& query, const std::string& method, double tau,
                                    const LocalStage& local, const CollabOutcome* collab) {
  AnswerRecord r;
  r.id = query.id;
  r.method = method;
  r.tau = tau;
  r.gold = query.gold_answer;
  r.consistency = local.report;
  r.original_context = plain_context(query);
  r.stages["candidates"] = detail::candidates_json(local.candidates, local.traces);
  r.timings = local.timings;
  if (!collab) {
    r.path = PathKind::Local;
    r.answer = local.report.majority;
    return r;
  }
  r.path = collab->path;
  r.answer = collab->answer;
  r.transmitted = collab->transmitted;
  r.errors = collab->errors;
  for (auto& [k, v] : collab->stages.items()) r.stages[k] = v;
  for (auto& [k, v] : collab->timings.items()) r.timings[k] = v;
  return r;
}

/// Routes one query and runs `collaborate` when the score is below tau.
/// Never throws for per-query failures.
inline AnswerRecord run_cascade(const ReasoningQuery& query, const std::string& method, const CascadeConfig& cfg,
                                const Clients& clients, Sandbox& sandbox, const CollabFn& collaborate,
                                std::optional<int> n_samples = std::nullopt) {
  LocalStage local;
  try {
    local = run_local_stage(query, cfg, bound(clients.local, Role::Local), sandbox, n_samples);
  } catch (const std::exception& e) {
    AnswerRecord r = assemble_record(query, method, cfg.tau, local, nullptr);
    r.errors.push_back(std::string("local stage failed: ") + e.what());
    return r;
  }
  if (route(local.report, cfg.tau) == Decision::AnswerLocally) return assemble_record(query, method, cfg.tau, local, nullptr);
  CollabOutcome collab;
  try {
    collab = collaborate(query, local);
  } catch (const std::exception& e) {
    collab.path = PathKind::CollabFailedFallback;
    collab.answer = local.report.majority;
    collab.errors.push_back(std::string("collaboration failed: ") + e.what());
  }
  return assemble_record(query, method, cfg.tau, local, &collab);
}

inline AnswerRecord run_pipeline(const ReasoningQuery& query, const CascadeConfig& cfg, const Clients& clients,
                                 Sandbox& sandbox) {
  return run_cascade(query, "pipeline", cfg, clients, sandbox, [&](const ReasoningQuery& q, const LocalStage& l) {
    return run_collaboration(q, l, cfg, clients, sandbox);
  });
}

/// Calls f(i) for i in [0, n) on up to `workers` threads.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
  const int p = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (p <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < p; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  for (auto& th : pool) th.join();
}

/// Records in input order, computed with cfg.parallelism workers.
inline std::vector<AnswerRecord> run_batch(const std::vector<ReasoningQuery>& queries, const CascadeConfig& cfg,
                                           const Clients& clients, Sandbox& sandbox) {
  std::vector<AnswerRecord> out(queries.size());
  parallel_for(queries.size(), cfg.parallelism, [&](std::size_t i) { out[i] = run_pipeline(queries[i], cfg, clients, sandbox); });
  return out;
}

}  // namespace pcollab
