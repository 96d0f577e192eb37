#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "latentseek/model.hpp"

namespace latentseek::latent {

using model::Backend;
using model::TokenId;
using model::Tokens;

/// The optimizable variables: one d-wide vector per kept token position.
struct LatentSequence {
  std::vector<std::vector<float>> vectors;
  std::size_t origin_length = 0;  // full CoT length before truncation

  std::size_t size() const { return vectors.size(); }
  bool empty() const { return vectors.empty(); }
};

enum class OptimizerKind { kSgd, kAdam };

struct SeekConfig {
  double eta = 0.03;            // learning rate (ascent)
  int max_iterations = 10;      // K
  double tau = -0.2;            // stop once reward > tau
  double rho = 0.2;             // fraction of the CoT latents to optimize
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int num_samples = 1;          // gradient samples per iteration
  int max_new_tokens = 256;     // completion budget
  std::uint64_t sample_seed = 0;

  void validate() const;
};

struct OptimizerState {
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;
  int step = 0;

  static OptimizerState for_sequence(const LatentSequence& z,
                                     OptimizerKind kind);
};

struct CotInit {
  Tokens cot_tokens;  // generated tokens only (context excluded)
  LatentSequence z0;  // one latent per generated token
  bool truncated = false;

  bool degenerate() const { return cot_tokens.empty(); }
};

// Greedy CoT generation with latent capture; decode of z0 reproduces
// cot_tokens exactly because each latent is the vector that produced its
// token.
CotInit init_from_cot(const Backend& backend, const Tokens& context,
                      int max_new, const std::set<TokenId>& stop_tokens);

// Keeps the first max(1, ceil(rho * T)) vectors.
LatentSequence truncate_fraction(const LatentSequence& z, double rho);

// Closed-form grad of log softmax(W z + b) at token x: W^T (onehot(x) - p).
std::vector<float> grad_log_prob(const Backend& backend,
                                 std::span<const float> z, TokenId x);
std::vector<float> grad_log_prob_head(std::span<const float> weight,
                                      std::span<const float> bias,
                                      int vocab_size, int hidden_dim,
                                      std::span<const float> z, TokenId x);

using RewardFn = std::function<double(const Tokens&)>;

// REINFORCE estimator over num_samples draws: sample 1 is the greedy
// decode, the rest are seeded per-position categorical draws.
std::vector<std::vector<float>> reinforce_gradient(const Backend& backend,
                                                   const LatentSequence& z,
                                                   const SeekConfig& cfg,
                                                   const RewardFn& reward_fn);

// In-place gradient ascent step (SGD or bias-corrected Adam).
void apply_update(LatentSequence& z,
                  const std::vector<std::vector<float>>& grad,
                  OptimizerState& state, const SeekConfig& cfg);

// Per-position greedy decode of a latent sequence (token-wise independent,
// no stop-token early exit).
Tokens decode_latents(const Backend& backend, const LatentSequence& z);

}  // namespace latentseek::latent
