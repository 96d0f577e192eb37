#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "latentseek/instance.hpp"
#include "latentseek/latent.hpp"
#include "latentseek/reward.hpp"

namespace latentseek::seek {

using latent::LatentSequence;
using latent::SeekConfig;
using model::Backend;
using model::TokenId;
using model::Tokens;

/// Reward evaluation behind the seek loop (PSRM or self-reward).
class RewardBackend {
 public:
  virtual ~RewardBackend() = default;
  virtual reward::RewardSignal evaluate(const std::string& completion_text,
                                        const ProblemInstance& instance) = 0;
};

class PsrmRewardBackend final : public RewardBackend {
 public:
  reward::RewardSignal evaluate(const std::string& completion_text,
                                const ProblemInstance& instance) override;
};

class SelfRewardBackend final : public RewardBackend {
 public:
  SelfRewardBackend(reward::JudgeClient& judge, reward::SelfRewardOptions opts)
      : judge_(judge), opts_(std::move(opts)) {}
  reward::RewardSignal evaluate(const std::string& completion_text,
                                const ProblemInstance& instance) override;

 private:
  reward::JudgeClient& judge_;
  reward::SelfRewardOptions opts_;
};

enum class StopReason { kThreshold, kBudget, kDivergence, kDegenerateCot };
std::string to_string(StopReason r);

struct IterationRecord {
  int k = 0;
  double reward = -1.0;
  Tokens prefix_tokens;        // decoded optimized prefix (k=0: full CoT)
  int completion_length = 0;
  std::string completion_text;  // in memory; serialized as length only
  std::string answer;           // normalized; empty when none found
  bool has_answer = false;
  double latent_norm_mean = 0.0;
  double latent_norm_max = 0.0;
  bool truncated = false;
};

struct SeekTrace {
  std::vector<IterationRecord> records;  // ordered by k starting at 0
  std::optional<int> divergence_at;      // iteration whose update diverged
  bool degenerate = false;

  std::string to_jsonl() const;
};

struct SeekResult {
  std::string completion;
  std::string answer;
  bool has_answer = false;
  double reward = -1.0;
  int update_iterations = 0;
  StopReason stop_reason = StopReason::kBudget;
  SeekTrace trace;
};

// Replays the stopping rule over a recorded trace at budget K: first
// record with reward > tau wins; divergence falls back to the best
// completed record; an exhausted budget returns the best-reward record.
SeekResult summarize_at_budget(const SeekTrace& trace, int budget, double tau);

// The full loop: CoT init, iteration-0 reward, fractional truncation, then
// up to K REINFORCE updates with decode + completion + reward per step.
SeekResult latent_seek(const Backend& backend, const ProblemInstance& instance,
                       const SeekConfig& cfg, RewardBackend& reward_backend,
                       const std::set<TokenId>& stop_tokens);

// One greedy generation plus reward; the CoT baseline.
SeekResult cot_baseline(const Backend& backend, const ProblemInstance& instance,
                        const SeekConfig& cfg, RewardBackend& reward_backend,
                        const std::set<TokenId>& stop_tokens);

// N seeded samples re-ranked by the same reward backend; ties go to the
// lowest sample index. Temperature 0 collapses every draw to greedy.
SeekResult best_of_n(const Backend& backend, const ProblemInstance& instance,
                     const SeekConfig& cfg, int n, double temperature,
                     std::uint64_t seed, RewardBackend& reward_backend,
                     const std::set<TokenId>& stop_tokens);

}  // namespace latentseek::seek
