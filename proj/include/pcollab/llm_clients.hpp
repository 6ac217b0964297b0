#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "pcollab/errors.hpp"

namespace pcollab {

/// Which model a request is addressed to. Local and Shifter stay on the
/// device; Remote is the only role whose traffic leaves it. Judge is an
/// offline evaluator.
enum class Role { Local, Shifter, Remote, Judge };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::Local: return "Local";
    case Role::Shifter: return "Shifter";
    case Role::Remote: return "Remote";
    case Role::Judge: return "Judge";
  }
  return "Local";
}

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct Sampling {
  bool greedy = true;
  double top_p = 1.0;
  double temperature = 0.0;

  static Sampling greedy_decoding() { return {}; }
  static Sampling nucleus(double p, double temperature = 1.0) { return {false, p, temperature}; }

  // Values as sent on the wire; greedy decoding is temperature 0.
  double wire_temperature() const { return greedy ? 0.0 : temperature; }
  double wire_top_p() const { return greedy ? 1.0 : top_p; }
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  Sampling sampling;
  int max_tokens = 1024;
  Role role = Role::Local;

  void validate() const {
    if (messages.empty()) throw std::invalid_argument("chat request without messages");
    if (!sampling.greedy && (sampling.top_p <= 0.0 || sampling.top_p > 1.0))
      throw std::invalid_argument("top_p must be in (0, 1]");
  }

  /// OpenAI-compatible chat-completions body.
  nlohmann::json to_wire(const std::string& model) const {
    nlohmann::json msgs = nlohmann::json::array();
    for (auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", model},
            {"messages", std::move(msgs)},
            {"temperature", sampling.wire_temperature()},
            {"top_p", sampling.wire_top_p()},
            {"max_tokens", max_tokens}};
  }

  /// Stable 64-bit FNV-1a over role and messages, hex encoded.
  std::string fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
      }
      h ^= 0xff;
      h *= 0x100000001b3ULL;
    };
    mix(to_string(role));
    for (auto& m : messages) {
      mix(m.role);
      mix(m.content);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

struct ChatResponse {
  std::string text;
  std::string finish_reason = "stop";
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
};

using ChatClientPtr = std::shared_ptr<ChatClient>;

struct LoggedCall {
  Role role;
  ChatRequest request;
  std::optional<std::string> response;  // absent when the call failed
};

/// Append-only, thread-safe record of every request sent through a
/// RecordingClient. Privacy assertions are evaluated over this log.
class CallLog {
 public:
  void append(LoggedCall call) {
    std::lock_guard lock(mu_);
    calls_.push_back(std::move(call));
  }

  std::vector<LoggedCall> snapshot() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

  std::vector<LoggedCall> for_role(Role r) const {
    std::lock_guard lock(mu_);
    std::vector<LoggedCall> out;
    for (auto& c : calls_)
      if (c.role == r) out.push_back(c);
    return out;
  }

  std::size_t count(Role r) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (auto& c : calls_)
      if (c.role == r) ++n;
    return n;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return calls_.size();
  }

 private:
  mutable std::mutex mu_;
  std::vector<LoggedCall> calls_;
};

/// Decorator that logs each request (and its reply) before returning it.
class RecordingClient : public ChatClient {
 public:
  RecordingClient(ChatClientPtr inner, std::shared_ptr<CallLog> log) : inner_(std::move(inner)), log_(std::move(log)) {}

  ChatResponse chat(const ChatRequest& request) override {
    if (!inner_) throw ConfigError(std::string("no client bound for role ") + to_string(request.role));
    try {
      auto resp = inner_->chat(request);
      log_->append({request.role, request, resp.text});
      return resp;
    } catch (...) {
      log_->append({request.role, request, std::nullopt});
      throw;
    }
  }

 private:
  ChatClientPtr inner_;
  std::shared_ptr<CallLog> log_;
};

/// Deterministic test double. Per role it answers from, in priority order:
/// a fingerprint fixture, a responder function, or the next ordinal fixture.
class ScriptedChatClient : public ChatClient {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;

  ScriptedChatClient& script(Role role, std::vector<std::string> replies) {
    std::lock_guard lock(mu_);
    auto& q = ordinal_[role];
    for (auto& r : replies) q.push_back(std::move(r));
    return *this;
  }

  ScriptedChatClient& respond(Role role, Responder fn) {
    std::lock_guard lock(mu_);
    responders_[role] = std::move(fn);
    return *this;
  }

  ScriptedChatClient& on_fingerprint(const std::string& fp, std::string reply) {
    std::lock_guard lock(mu_);
    by_fingerprint_[fp] = std::move(reply);
    return *this;
  }

  ChatResponse chat(const ChatRequest& request) override {
    request.validate();
    Responder fn;
    {
      std::lock_guard lock(mu_);
      if (auto it = by_fingerprint_.find(request.fingerprint()); it != by_fingerprint_.end())
        return ChatResponse{it->second};
      if (auto it = responders_.find(request.role); it != responders_.end()) {
        fn = it->second;
      } else {
        auto& q = ordinal_[request.role];
        if (q.empty()) throw MockExhausted(std::string("no scripted reply left for role ") + to_string(request.role));
        ChatResponse r{q.front()};
        q.pop_front();
        return r;
      }
    }
    return ChatResponse{fn(request)};
  }

 private:
  std::mutex mu_;
  std::map<Role, std::deque<std::string>> ordinal_;
  std::map<Role, Responder> responders_;
  std::map<std::string, std::string> by_fingerprint_;
};

struct HttpEndpoint {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key;
  std::string api_key_env;  // overrides api_key when set in the environment
  int max_retries = 3;
  int backoff_ms = 500;
  int timeout_s = 120;
};

/// OpenAI-compatible chat-completions over HTTP(S). Retries transport
/// failures, 429 and 5xx with exponential backoff; other statuses fail fast.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpEndpoint ep) : ep_(std::move(ep)) {}

  ChatResponse chat(const ChatRequest& request) override {
    request.validate();
    const std::string body = request.to_wire(ep_.model).dump();
    std::string token = ep_.api_key;
    if (!ep_.api_key_env.empty())
      if (const char* env = std::getenv(ep_.api_key_env.c_str()); env && *env) token = env;

    std::string last_error;
    for (int attempt = 0; attempt <= ep_.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ep_.backoff_ms << (attempt - 1)));
      httplib::Client cli(ep_.base_url);
      cli.set_connection_timeout(ep_.timeout_s, 0);
      cli.set_read_timeout(ep_.timeout_s, 0);
      httplib::Headers headers;
      if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
      auto res = cli.Post(ep_.path, headers, body, "application/json");
      if (!res) {
        last_error = "transport: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
      return parse_response(res->body);
    }
    throw TransportError(last_error + " after " + std::to_string(ep_.max_retries) + " retries");
  }

  static ChatResponse parse_response(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed response body: ") + e.what());
    }
    if (!j.contains("choices") || j["choices"].empty())
      throw TransportError("response without choices");
    const auto& choice = j["choices"][0];
    ChatResponse r;
    const auto& content = choice.at("message").at("content");
    if (!content.is_string()) throw TransportError("response without text content");
    r.text = content.get<std::string>();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
      r.finish_reason = choice["finish_reason"].get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      r.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      r.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    return r;
  }

 private:
  HttpEndpoint ep_;
};

/// The four role bindings used by the pipeline.
struct Clients {
  ChatClientPtr local;
  ChatClientPtr shifter;
  ChatClientPtr remote;
  ChatClientPtr judge;

  /// Same bindings, each routed through a RecordingClient into `log`.
  Clients recorded(const std::shared_ptr<CallLog>& log) const {
    auto wrap = [&log](const ChatClientPtr& c) -> ChatClientPtr {
      return c ? std::make_shared<RecordingClient>(c, log) : nullptr;
    };
    return {wrap(local), wrap(shifter), wrap(remote), wrap(judge)};
  }

  static Clients all(const ChatClientPtr& c) { return {c, c, c, c}; }
};

/// Sends `request` after stamping the role, for call sites that build the
/// request once and address it to a binding.
inline ChatResponse ask(ChatClient& client, Role role, std::vector<ChatMessage> messages, Sampling sampling,
                        int max_tokens = 1024) {
  ChatRequest req;
  req.messages = std::move(messages);
  req.sampling = sampling;
  req.max_tokens = max_tokens;
  req.role = role;
  return client.chat(req);
}

}  // namespace pcollab
