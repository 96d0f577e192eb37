#include "latentseek/reward.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#ifndef LATENTSEEK_ASSET_DIR
#define LATENTSEEK_ASSET_DIR "assets"
#endif

namespace latentseek::reward {

model::GenResult complete(const Backend& backend, const Tokens& prefix,
                          const Tokens& context, int max_new,
                          const std::set<TokenId>& stop_tokens) {
  if (!prefix.empty() && stop_tokens.count(prefix.back())) {
    return model::GenResult{prefix, false};
  }
  Tokens full = context;
  full.insert(full.end(), prefix.begin(), prefix.end());
  model::GenResult gen = backend.generate_greedy(full, max_new, stop_tokens);
  model::GenResult out;
  out.truncated = gen.truncated;
  out.tokens.assign(gen.tokens.begin() + static_cast<std::ptrdiff_t>(context.size()),
                    gen.tokens.end());
  return out;
}

RewardSignal psrm_reward(const std::optional<AnswerValue>& answer,
                         const AnswerValue& gold) {
  RewardSignal sig;
  sig.extracted_answer = answer;
  RewardComponent c;
  c.name = "exact_match";
  c.weight = 1.0;
  if (!answer) {
    c.passed = false;
    c.detail = "no answer found";
  } else {
    c.passed = answers_match(*answer, gold);
    c.detail = answer->text + " vs gold " + gold.text;
  }
  sig.value = c.passed ? 0.0 : -1.0;
  sig.components.push_back(std::move(c));
  return sig;
}

// ---------------------------------------------------------------------------
// assets
// ---------------------------------------------------------------------------

std::string asset_dir() {
  if (const char* env = std::getenv("LATENTSEEK_ASSETS")) return env;
  return LATENTSEEK_ASSET_DIR;
}

namespace {

std::string read_asset(const std::string& name) {
  std::string path = asset_dir() + "/judge_prompts/" + name;
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read judge prompt asset \"" + path + "\"");
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

std::string load_judge_prompt(const std::string& check_name,
                              const std::string& question,
                              const std::string& solution,
                              const std::string& marker) {
  std::string prefix = read_asset("math_prefix.txt");
  replace_all(prefix, "{problem}", question);
  replace_all(prefix, "{solution}", solution);
  std::string body = read_asset("check_" + check_name + ".txt");
  replace_all(body, "{VERA_ANSWER_SYMBOL}", marker);
  return prefix + body;
}

// ---------------------------------------------------------------------------
// verdict parsing
// ---------------------------------------------------------------------------

VerdictParse parse_verdict(const std::string& judge_text,
                           const std::string& marker) {
  VerdictParse v;
  size_t pos = judge_text.find(marker);
  if (pos == std::string::npos) return v;
  size_t at = pos + marker.size();
  while (at < judge_text.size() &&
         (judge_text[at] == ' ' || judge_text[at] == '\'' ||
          judge_text[at] == '"' || judge_text[at] == '*')) {
    ++at;
  }
  if (judge_text.compare(at, 4, "True") == 0) {
    v.parsed = true;
    v.pass = true;
  } else if (judge_text.compare(at, 5, "False") == 0) {
    v.parsed = true;
    v.pass = false;
  }
  return v;
}

// ---------------------------------------------------------------------------
// judges
// ---------------------------------------------------------------------------

std::string remote_judge_call(const JudgeEndpointConfig& cfg,
                              const std::string& system_prompt,
                              const std::string& user_prompt) {
  if (cfg.base_url.empty()) {
    throw ConfigError("remote judge: base_url is required");
  }
  nlohmann::json messages = nlohmann::json::array();
  if (!system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", user_prompt}});
  nlohmann::json body = {{"model", cfg.model},
                         {"temperature", 0},
                         {"messages", messages}};
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(cfg.backoff_ms << (attempt - 1)));
    }
    httplib::Client cli(cfg.base_url);
    cli.set_connection_timeout(cfg.timeout_seconds);
    cli.set_read_timeout(cfg.timeout_seconds);
    httplib::Headers headers;
    if (const char* token = std::getenv(cfg.auth_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    auto res = cli.Post(cfg.path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
        !j["choices"][0].contains("message") ||
        !j["choices"][0]["message"].contains("content")) {
      throw JudgeError("remote judge: malformed response body");
    }
    return j["choices"][0]["message"]["content"].get<std::string>();
  }
  throw JudgeError("remote judge: " + last_error + " after " +
                   std::to_string(cfg.retries + 1) + " attempts");
}

namespace {

class RemoteJudge final : public JudgeClient {
 public:
  explicit RemoteJudge(JudgeEndpointConfig cfg) : cfg_(std::move(cfg)) {}
  std::string ask(const std::string& system_prompt,
                  const std::string& user_prompt) override {
    return remote_judge_call(cfg_, system_prompt, user_prompt);
  }

 private:
  JudgeEndpointConfig cfg_;
};

class LocalSelfJudge final : public JudgeClient {
 public:
  LocalSelfJudge(const Backend& backend, int max_new)
      : backend_(backend),
        tokenizer_(backend.config().vocab_size),
        max_new_(max_new) {}

  std::string ask(const std::string& system_prompt,
                  const std::string& user_prompt) override {
    std::string text = system_prompt.empty()
                           ? user_prompt
                           : system_prompt + "\n" + user_prompt;
    Tokens prompt = tokenizer_.encode(text);
    int ctx = backend_.config().max_context;
    // keep the prompt tail if it does not fit, leaving room to generate
    int room = std::max(1, std::min(max_new_, ctx / 4));
    if (static_cast<int>(prompt.size()) > ctx - room) {
      prompt.erase(prompt.begin(),
                   prompt.end() - static_cast<std::ptrdiff_t>(ctx - room));
    }
    model::GenResult gen = backend_.generate_greedy(prompt, room, {});
    Tokens generated(gen.tokens.begin() + static_cast<std::ptrdiff_t>(prompt.size()),
                     gen.tokens.end());
    return tokenizer_.decode(generated);
  }

 private:
  const Backend& backend_;
  model::Tokenizer tokenizer_;
  int max_new_;
};

}  // namespace

std::unique_ptr<JudgeClient> make_remote_judge(const JudgeEndpointConfig& cfg) {
  return std::make_unique<RemoteJudge>(cfg);
}

std::unique_ptr<JudgeClient> make_local_self_judge(const Backend& backend,
                                                   int max_new) {
  return std::make_unique<LocalSelfJudge>(backend, max_new);
}

// ---------------------------------------------------------------------------
// self reward
// ---------------------------------------------------------------------------

RewardComponent format_reward(const std::string& completion_text,
                              PromptFormat format, double weight) {
  RewardComponent c;
  c.name = "format";
  c.weight = weight;
  c.passed = extract_answer(completion_text, format).has_value();
  c.detail = c.passed ? "answer structure present" : "answer structure missing";
  return c;
}

RewardSignal self_reward(const std::string& completion_text,
                         const std::string& question, JudgeClient& judge,
                         const SelfRewardOptions& opts) {
  // Fixed order, no short-circuit: all checks always run so the component
  // breakdown is complete for analysis.
  struct Check {
    const char* name;
    double weight;
  };
  const Check checks[] = {{"correctness", 1.0},
                          {"understanding", 1.0},
                          {"calculation", 2.0},
                          {"completeness", 2.0}};

  RewardSignal sig;
  sig.completion = completion_text;
  sig.extracted_answer = extract_answer(completion_text, opts.format);

  double total_weight = 0.0;
  double failed_weight = 0.0;
  for (const Check& check : checks) {
    RewardComponent c;
    c.name = check.name;
    c.weight = check.weight;
    try {
      std::string prompt = load_judge_prompt(check.name, question,
                                             completion_text,
                                             opts.answer_marker);
      std::string response = judge.ask("", prompt);
      VerdictParse v = parse_verdict(response, opts.answer_marker);
      c.passed = v.parsed && v.pass;
      c.parse_failure = !v.parsed;
      c.detail = response;
    } catch (const std::exception& e) {
      c.passed = false;
      c.parse_failure = true;
      c.detail = std::string("judge failure: ") + e.what();
    }
    total_weight += c.weight;
    if (!c.passed) failed_weight += c.weight;
    sig.components.push_back(std::move(c));
  }

  if (opts.format_weight) {
    RewardComponent c = format_reward(completion_text, opts.format,
                                      *opts.format_weight);
    total_weight += c.weight;
    if (!c.passed) failed_weight += c.weight;
    sig.components.push_back(std::move(c));
  }

  sig.value = total_weight > 0 ? -(failed_weight / total_weight) : -1.0;
  return sig;
}

}  // namespace latentseek::reward
