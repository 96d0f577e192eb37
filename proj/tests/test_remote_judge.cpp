#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "latentseek/reward.hpp"

using namespace latentseek;

namespace {

/// Minimal OpenAI-style chat endpoint stub bound to a random local port.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
  nlohmann::json last_request;
  std::string last_auth;
  int fail_first = 0;          // respond 500 to this many requests
  std::string body_override;   // when set, returned verbatim

  StubServer() {
    server.Post("/v1/chat/completions",
                [this](const httplib::Request& req, httplib::Response& res) {
                  int n = ++hits;
                  last_request = nlohmann::json::parse(req.body);
                  last_auth = req.get_header_value("Authorization");
                  if (n <= fail_first) {
                    res.status = 500;
                    return;
                  }
                  if (!body_override.empty()) {
                    res.set_content(body_override, "application/json");
                    return;
                  }
                  nlohmann::json out = {
                      {"choices",
                       {{{"message",
                          {{"role", "assistant"},
                           {"content", "FINAL VERDICT: True"}}}}}}};
                  res.set_content(out.dump(), "application/json");
                });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~StubServer() {
    server.stop();
    thread.join();
  }

  reward::JudgeEndpointConfig config() const {
    reward::JudgeEndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.model = "judge-model";
    cfg.retries = 2;
    cfg.backoff_ms = 1;
    return cfg;
  }
};

}  // namespace

TEST_CASE("request wire format and bearer auth") {
  setenv("LATENTSEEK_JUDGE_TOKEN", "sekrit", 1);
  StubServer stub;
  std::string out =
      reward::remote_judge_call(stub.config(), "sys prompt", "user prompt");
  CHECK(out == "FINAL VERDICT: True");
  CHECK(stub.hits == 1);
  CHECK(stub.last_auth == "Bearer sekrit");
  const auto& j = stub.last_request;
  CHECK(j.at("model") == "judge-model");
  CHECK(j.at("temperature") == 0);
  REQUIRE(j.at("messages").size() == 2);
  CHECK(j["messages"][0]["role"] == "system");
  CHECK(j["messages"][0]["content"] == "sys prompt");
  CHECK(j["messages"][1]["role"] == "user");
  CHECK(j["messages"][1]["content"] == "user prompt");
  unsetenv("LATENTSEEK_JUDGE_TOKEN");
}

TEST_CASE("no system message and no token header when absent") {
  unsetenv("LATENTSEEK_JUDGE_TOKEN");
  StubServer stub;
  reward::remote_judge_call(stub.config(), "", "just user");
  CHECK(stub.last_auth.empty());
  REQUIRE(stub.last_request.at("messages").size() == 1);
  CHECK(stub.last_request["messages"][0]["role"] == "user");
}

TEST_CASE("transient 500 is retried with backoff") {
  StubServer stub;
  stub.fail_first = 2;
  std::string out = reward::remote_judge_call(stub.config(), "", "u");
  CHECK(out == "FINAL VERDICT: True");
  CHECK(stub.hits == 3);  // two failures, one success
}

TEST_CASE("persistent failure raises JudgeError after all attempts") {
  StubServer stub;
  stub.fail_first = 1000;
  try {
    reward::remote_judge_call(stub.config(), "", "u");
    FAIL("expected JudgeError");
  } catch (const JudgeError& e) {
    CHECK(std::string(e.what()).find("500") != std::string::npos);
  }
  CHECK(stub.hits == 3);  // retries = 2 -> 3 attempts
}

TEST_CASE("malformed response body raises JudgeError") {
  StubServer stub;
  stub.body_override = R"({"unexpected": true})";
  CHECK_THROWS_AS(reward::remote_judge_call(stub.config(), "", "u"),
                  JudgeError);
  stub.body_override = "not json at all";
  CHECK_THROWS_AS(reward::remote_judge_call(stub.config(), "", "u"),
                  JudgeError);
}

TEST_CASE("unreachable endpoint raises JudgeError") {
  reward::JudgeEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";  // nothing listens here
  cfg.retries = 0;
  cfg.backoff_ms = 1;
  cfg.timeout_seconds = 1;
  CHECK_THROWS_AS(reward::remote_judge_call(cfg, "", "u"), JudgeError);
}

TEST_CASE("remote judge drives the self-reward pipeline end to end") {
  StubServer stub;
  auto judge = reward::make_remote_judge(stub.config());
  auto sig = reward::self_reward("\\boxed{3}", "what is 3", *judge,
                                 reward::SelfRewardOptions{});
  CHECK(sig.value == 0.0);  // stub always says True
  CHECK(stub.hits == 4);
}
