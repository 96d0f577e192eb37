#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "latentseek/answer.hpp"
#include "latentseek/latent.hpp"
#include "latentseek/model.hpp"
#include "latentseek/tokenizer.hpp"

namespace latentseek::reward {

using model::Backend;
using model::TokenId;
using model::Tokens;

struct RewardComponent {
  std::string name;
  double weight = 0.0;
  bool passed = false;
  bool parse_failure = false;  // judge did not produce a parseable verdict
  std::string detail;          // raw judge text / diagnostic
};

/// Scalar reward in [-1, 0] with its component breakdown.
struct RewardSignal {
  double value = -1.0;
  std::vector<RewardComponent> components;
  std::string completion;
  std::optional<AnswerValue> extracted_answer;
};

// Greedy continuation of (context ++ prefix); returns prefix ++
// continuation. A prefix already ending in a stop token is returned as-is.
model::GenResult complete(const Backend& backend, const Tokens& prefix,
                          const Tokens& context, int max_new,
                          const std::set<TokenId>& stop_tokens);

// Perfect Sparse Reward Model: 0 on normalized gold match, -1 otherwise
// (including a missing answer).
RewardSignal psrm_reward(const std::optional<AnswerValue>& answer,
                         const AnswerValue& gold);

// -------------------------------------------------------------------------
// Self-reward via an LLM judge
// -------------------------------------------------------------------------

/// Single-turn judge transport; safe for concurrent calls unless noted.
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual std::string ask(const std::string& system_prompt,
                          const std::string& user_prompt) = 0;
};

struct JudgeEndpointConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  std::string path = "/v1/chat/completions";
  std::string model = "self";
  std::string auth_env = "LATENTSEEK_JUDGE_TOKEN";
  int timeout_seconds = 30;
  int retries = 2;
  int backoff_ms = 100;  // doubled per retry
};

// HTTP JSON chat endpoint client (temperature 0, exponential backoff).
std::unique_ptr<JudgeClient> make_remote_judge(const JudgeEndpointConfig& cfg);

// One-shot request helper behind make_remote_judge; throws JudgeError on
// network failure after retries, non-2xx status or a malformed body.
std::string remote_judge_call(const JudgeEndpointConfig& cfg,
                              const std::string& system_prompt,
                              const std::string& user_prompt);

// Self-judge running the prompts through a local backend greedily.
std::unique_ptr<JudgeClient> make_local_self_judge(const Backend& backend,
                                                   int max_new = 96);

struct SelfRewardOptions {
  std::string answer_marker = "FINAL VERDICT: ";
  PromptFormat format = PromptFormat::kBoxed;
  // When set, a format check is appended with this weight and the weight
  // joins the normalization denominator.
  std::optional<double> format_weight;
};

// Parses a judge response: pass iff the first occurrence of the marker is
// followed by True; False or anything else fails (parse failures flagged).
struct VerdictParse {
  bool pass = false;
  bool parsed = false;
};
VerdictParse parse_verdict(const std::string& judge_text,
                           const std::string& marker);

// Four verification prompts (correctness, understanding, calculation,
// completeness; weights 1:1:2:2), judged on the completion; value is
// -(failed weight)/(total weight).
RewardSignal self_reward(const std::string& completion_text,
                         const std::string& question, JudgeClient& judge,
                         const SelfRewardOptions& opts);

// Structural format check: does answer extraction succeed for the format?
RewardComponent format_reward(const std::string& completion_text,
                              PromptFormat format, double weight);

// Judge prompt templates are shipped as text assets. Resolution order:
// LATENTSEEK_ASSETS env var, then the compiled-in source asset directory.
std::string asset_dir();
std::string load_judge_prompt(const std::string& check_name,
                              const std::string& question,
                              const std::string& solution,
                              const std::string& marker);

}  // namespace latentseek::reward
