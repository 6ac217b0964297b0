#pragma once

// JSON run configuration. Every CascadeConfig default is a named key; absent
// keys keep the default. Model roles bind to HTTP endpoints or to offline
// rule-scripted clients, and the sandbox is in-process or a worker pool.

#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcollab/cascade_orchestrator.hpp"
#include "pcollab/errors.hpp"
#include "pcollab/llm_clients.hpp"
#include "pcollab/sandbox.hpp"

namespace pcollab {

struct RoleBinding {
  std::string kind = "http";  // "http" | "scripted"
  HttpEndpoint http;
  // scripted: first rule whose `contains` occurs in the last user message wins
  std::vector<std::pair<std::string, std::string>> rules;
  std::optional<std::string> fallback_reply;
};

struct SandboxConfig {
  std::string mode = "in_process";  // "in_process" | "subprocess"
  std::vector<std::string> worker;
  int pool_size = 4;
  int grace_ms = 500;
};

struct RunConfig {
  CascadeConfig cascade;
  SandboxConfig sandbox;
  std::map<std::string, RoleBinding> roles;  // local, shifter, remote, judge
};

namespace config_detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key " + where + "." + k);
}

inline std::vector<Decimal> decimals(const nlohmann::json& j) {
  std::vector<Decimal> out;
  for (auto& v : j) out.push_back(Decimal::must_parse(v.is_string() ? v.get<std::string>() : v.dump()));
  return out;
}

inline Decimal decimal(const nlohmann::json& v) {
  return Decimal::must_parse(v.is_string() ? v.get<std::string>() : v.dump());
}

inline Sampling sampling(const nlohmann::json& j, Sampling s) {
  if (j.value("greedy", s.greedy)) return Sampling::greedy_decoding();
  return Sampling::nucleus(j.value("top_p", s.top_p), j.value("temperature", s.temperature));
}

inline RoleBinding role_binding(const nlohmann::json& j, const std::string& name) {
  check_keys(j, {"kind", "base_url", "path", "model", "api_key", "api_key_env", "max_retries", "backoff_ms", "timeout_s",
                 "rules", "default"},
             "roles." + name);
  RoleBinding b;
  b.kind = j.value("kind", "http");
  if (b.kind == "http") {
    b.http.base_url = j.value("base_url", "");
    if (b.http.base_url.empty()) throw ConfigError("roles." + name + ".base_url is required");
    b.http.path = j.value("path", b.http.path);
    b.http.model = j.value("model", "");
    b.http.api_key = j.value("api_key", "");
    b.http.api_key_env = j.value("api_key_env", "");
    b.http.max_retries = j.value("max_retries", b.http.max_retries);
    b.http.backoff_ms = j.value("backoff_ms", b.http.backoff_ms);
    b.http.timeout_s = j.value("timeout_s", b.http.timeout_s);
  } else if (b.kind == "scripted") {
    for (auto& r : j.value("rules", nlohmann::json::array()))
      b.rules.emplace_back(r.at("contains").get<std::string>(), r.at("reply").get<std::string>());
    if (j.contains("default")) b.fallback_reply = j["default"].get<std::string>();
  } else {
    throw ConfigError("roles." + name + ".kind must be http or scripted");
  }
  return b;
}

}  // namespace config_detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using namespace config_detail;
  check_keys(j, {"tau", "n_samples", "local_sampling", "retrieval_k", "bm25", "switch", "synthesis", "toolsmith",
                 "global_seed", "parallelism", "record_timings", "sandbox", "roles"},
             "config");
  RunConfig rc;
  auto& c = rc.cascade;
  c.tau = j.value("tau", c.tau);
  c.local.n = j.value("n_samples", c.local.n);
  if (j.contains("local_sampling")) {
    const auto& s = j["local_sampling"];
    check_keys(s, {"greedy", "top_p", "temperature", "max_tokens", "timeout_ms", "memory_cap_mb"}, "local_sampling");
    c.local.sampling = sampling(s, c.local.sampling);
    c.local.max_tokens = s.value("max_tokens", c.local.max_tokens);
    c.local.timeout_ms = s.value("timeout_ms", c.local.timeout_ms);
    c.local.memory_cap_mb = s.value("memory_cap_mb", c.local.memory_cap_mb);
  }
  c.retrieval_k = j.value("retrieval_k", c.retrieval_k);
  if (j.contains("bm25")) {
    check_keys(j["bm25"], {"k1", "b"}, "bm25");
    c.bm25.k1 = j["bm25"].value("k1", c.bm25.k1);
    c.bm25.b = j["bm25"].value("b", c.bm25.b);
  }
  if (j.contains("switch")) {
    const auto& s = j["switch"];
    check_keys(s, {"special_set", "structural_constants", "year_lo", "year_hi", "base_year_lo", "base_year_hi",
                   "low_factor", "high_factor", "max_resamples"},
               "switch");
    auto& p = c.policy;
    if (s.contains("special_set")) p.special_set = decimals(s["special_set"]);
    if (s.contains("structural_constants")) p.structural_constants = decimals(s["structural_constants"]);
    p.year_lo = s.value("year_lo", p.year_lo);
    p.year_hi = s.value("year_hi", p.year_hi);
    p.base_year_lo = s.value("base_year_lo", p.base_year_lo);
    p.base_year_hi = s.value("base_year_hi", p.base_year_hi);
    if (s.contains("low_factor")) p.low_factor = decimal(s["low_factor"]);
    if (s.contains("high_factor")) p.high_factor = decimal(s["high_factor"]);
    p.max_resamples = s.value("max_resamples", p.max_resamples);
  }
  if (j.contains("synthesis")) {
    const auto& s = j["synthesis"];
    check_keys(s, {"max_attempts", "greedy", "top_p", "temperature", "max_tokens", "shifter_id"}, "synthesis");
    c.synthesis.max_attempts = s.value("max_attempts", c.synthesis.max_attempts);
    c.synthesis.sampling = sampling(s, c.synthesis.sampling);
    c.synthesis.max_tokens = s.value("max_tokens", c.synthesis.max_tokens);
    c.synthesis.shifter_id = s.value("shifter_id", c.synthesis.shifter_id);
  }
  if (j.contains("toolsmith")) {
    const auto& s = j["toolsmith"];
    check_keys(s, {"dialect", "model_id", "max_tokens"}, "toolsmith");
    c.toolsmith.dialect = s.value("dialect", c.toolsmith.dialect);
    c.toolsmith.model_id = s.value("model_id", c.toolsmith.model_id);
    c.toolsmith.max_tokens = s.value("max_tokens", c.toolsmith.max_tokens);
  }
  c.global_seed = j.value("global_seed", c.global_seed);
  c.parallelism = j.value("parallelism", c.parallelism);
  c.record_timings = j.value("record_timings", c.record_timings);
  if (j.contains("sandbox")) {
    const auto& s = j["sandbox"];
    check_keys(s, {"mode", "worker", "pool_size", "grace_ms"}, "sandbox");
    rc.sandbox.mode = s.value("mode", rc.sandbox.mode);
    rc.sandbox.worker = s.value("worker", rc.sandbox.worker);
    rc.sandbox.pool_size = s.value("pool_size", rc.sandbox.pool_size);
    rc.sandbox.grace_ms = s.value("grace_ms", rc.sandbox.grace_ms);
    if (rc.sandbox.mode != "in_process" && rc.sandbox.mode != "subprocess")
      throw ConfigError("sandbox.mode must be in_process or subprocess");
  }
  if (j.contains("roles")) {
    check_keys(j["roles"], {"local", "shifter", "remote", "judge"}, "roles");
    for (auto& [name, v] : j["roles"].items()) rc.roles[name] = role_binding(v, name);
  }
  c.validate();
  return rc;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return parse_config(nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

inline ChatClientPtr make_client(const RoleBinding& b, Role role) {
  if (b.kind == "http") return std::make_shared<HttpChatClient>(b.http);
  auto client = std::make_shared<ScriptedChatClient>();
  client->respond(role, [rules = b.rules, fallback = b.fallback_reply, role](const ChatRequest& req) {
    std::string last_user;
    for (auto& m : req.messages)
      if (m.role == "user") last_user = m.content;
    for (auto& [needle, reply] : rules)
      if (last_user.find(needle) != std::string::npos) return reply;
    if (fallback) return *fallback;
    throw MockExhausted(std::string("no scripted rule matched for role ") + to_string(role));
  });
  return client;
}

/// Clients for every configured role; unconfigured roles stay null.
inline Clients make_clients(const RunConfig& rc) {
  Clients c;
  auto bind = [&](const char* name, Role role) -> ChatClientPtr {
    auto it = rc.roles.find(name);
    return it == rc.roles.end() ? nullptr : make_client(it->second, role);
  };
  c.local = bind("local", Role::Local);
  c.shifter = bind("shifter", Role::Shifter);
  c.remote = bind("remote", Role::Remote);
  c.judge = bind("judge", Role::Judge);
  return c;
}

inline std::unique_ptr<Sandbox> make_sandbox(const SandboxConfig& s) {
  if (s.mode == "subprocess") return std::make_unique<SubprocessSandbox>(SubprocessSandbox::Options{s.worker, s.pool_size, s.grace_ms});
  return std::make_unique<InProcessSandbox>();
}

/// Line-delimited dataset; blank lines are skipped.
inline std::vector<ReasoningQuery> read_dataset(std::istream& in) {
  std::vector<ReasoningQuery> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto q = ReasoningQuery::from_json(nlohmann::json::parse(line));
      q.validate();
      out.push_back(std::move(q));
    } catch (const std::exception& e) {
      throw ConfigError("dataset line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<AnswerRecord> read_records(std::istream& in) {
  std::vector<AnswerRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(AnswerRecord::from_json(nlohmann::json::parse(line)));
  return out;
}

}  // namespace pcollab
