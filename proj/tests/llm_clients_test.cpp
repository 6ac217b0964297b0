#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "httplib.h"
#include "pcollab/llm_clients.hpp"

using namespace pcollab;

namespace {

ChatRequest user_request(Role role, const std::string& text, Sampling s = Sampling::greedy_decoding()) {
  ChatRequest r;
  r.messages = {{"user", text}};
  r.sampling = s;
  r.role = role;
  return r;
}

}  // namespace

TEST(ScriptedClient, EchoesFixturesInOrderPerRole) {
  ScriptedChatClient mock;
  mock.script(Role::Shifter, {"<rewritten>a</rewritten>", "second"});
  mock.script(Role::Remote, {"remote"});
  EXPECT_EQ(mock.chat(user_request(Role::Shifter, "q")).text, "<rewritten>a</rewritten>");
  EXPECT_EQ(mock.chat(user_request(Role::Remote, "q")).text, "remote");
  EXPECT_EQ(mock.chat(user_request(Role::Shifter, "q")).text, "second");
  EXPECT_THROW(mock.chat(user_request(Role::Shifter, "q")), MockExhausted);
}

TEST(ScriptedClient, FingerprintTakesPriority) {
  ScriptedChatClient mock;
  mock.script(Role::Local, {"ordinal"});
  const auto req = user_request(Role::Local, "pinned");
  mock.on_fingerprint(req.fingerprint(), "by fingerprint");
  EXPECT_EQ(mock.chat(req).text, "by fingerprint");
  EXPECT_EQ(mock.chat(user_request(Role::Local, "other")).text, "ordinal");
}

TEST(ChatRequest, RejectsEmptyMessagesAndBadTopP) {
  ChatRequest r;
  EXPECT_THROW(r.validate(), std::invalid_argument);
  r = user_request(Role::Local, "x", Sampling::nucleus(0.0));
  EXPECT_THROW(r.validate(), std::invalid_argument);
  r = user_request(Role::Local, "x", Sampling::nucleus(1.0));
  EXPECT_NO_THROW(r.validate());
}

TEST(CallLog, GreedyRequestRecordsTemperatureZero) {
  auto mock = std::make_shared<ScriptedChatClient>();
  mock->script(Role::Remote, {"ok"});
  auto log = std::make_shared<CallLog>();
  RecordingClient rec(mock, log);
  rec.chat(user_request(Role::Remote, "solve"));
  ASSERT_EQ(log->count(Role::Remote), 1u);
  const auto call = log->for_role(Role::Remote).front();
  EXPECT_TRUE(call.request.sampling.greedy);
  const auto wire = call.request.to_wire("m");
  EXPECT_EQ(wire["temperature"].get<double>(), 0.0);
  EXPECT_EQ(call.request.messages.front().content, "solve");
  EXPECT_EQ(*call.response, "ok");
}

TEST(CallLog, FailedCallsAreLoggedWithoutResponse) {
  auto mock = std::make_shared<ScriptedChatClient>();
  auto log = std::make_shared<CallLog>();
  RecordingClient rec(mock, log);
  EXPECT_THROW(rec.chat(user_request(Role::Judge, "x")), MockExhausted);
  ASSERT_EQ(log->size(), 1u);
  EXPECT_FALSE(log->snapshot().front().response.has_value());
}

class StubServer : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  HttpEndpoint endpoint() const {
    HttpEndpoint ep;
    ep.base_url = "http://127.0.0.1:" + std::to_string(port_);
    ep.model = "stub-model";
    ep.api_key = "secret";
    ep.backoff_ms = 5;
    ep.timeout_s = 5;
    return ep;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(StubServer, RetriesTwoServerErrorsThenSucceeds) {
  std::atomic<int> hits{0};
  std::string seen_auth, seen_body;
  server_.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits <= 2) {
      res.status = 500;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(
        R"({"choices":[{"message":{"role":"assistant","content":"hello"},"finish_reason":"stop"}],)"
        R"("usage":{"prompt_tokens":3,"completion_tokens":1}})",
        "application/json");
  });
  HttpChatClient client(endpoint());
  const auto resp = client.chat(user_request(Role::Remote, "hi"));
  EXPECT_EQ(resp.text, "hello");
  EXPECT_EQ(resp.prompt_tokens, 3);
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(seen_auth, "Bearer secret");
  const auto body = nlohmann::json::parse(seen_body);
  EXPECT_EQ(body["model"], "stub-model");
  EXPECT_EQ(body["messages"][0]["content"], "hi");
  EXPECT_EQ(body["temperature"].get<double>(), 0.0);
}

TEST_F(StubServer, GivesUpAfterMaxRetries) {
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  HttpChatClient client(endpoint());
  EXPECT_THROW(client.chat(user_request(Role::Remote, "hi")), TransportError);
  EXPECT_EQ(hits.load(), 4);
}

TEST_F(StubServer, ClientErrorsFailFast) {
  std::atomic<int> hits{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  HttpChatClient client(endpoint());
  EXPECT_THROW(client.chat(user_request(Role::Remote, "hi")), TransportError);
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpClient, ParsesMalformedBodiesAsTransportErrors) {
  EXPECT_THROW(HttpChatClient::parse_response("not json"), TransportError);
  EXPECT_THROW(HttpChatClient::parse_response(R"({"choices":[]})"), TransportError);
}
