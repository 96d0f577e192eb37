#pragma once

#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "latentseek/archive.hpp"
#include "latentseek/errors.hpp"
#include "latentseek/tokenizer.hpp"

namespace latentseek::model {

struct ModelConfig {
  int vocab_size = 0;
  int hidden_dim = 0;
  int num_layers = 0;
  int num_heads = 0;
  int max_context = 0;
  bool final_norm = false;

  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct GenResult {
  Tokens tokens;         // prefix ++ generated
  bool truncated = false;  // budget or context exhausted without a stop token
};

class Backend;

/**
 * Incremental decoding state: per-layer KV cache plus current position.
 *
 * Pushing tokens one at a time is the only forward path; full-prefix and
 * incremental computation therefore share every float operation, which is
 * what makes session/full-recompute equivalence exact.
 */
class Session {
 public:
  // Feeds one token, returns the latent z for the *next* position
  // (post final-norm when the config sets it; the LM-head input).
  std::vector<float> push(TokenId token);

  int position() const { return position_; }

 private:
  friend class Backend;
  explicit Session(const Backend* backend);

  const Backend* backend_;
  int position_ = 0;
  // kv_[layer][pos * hidden_dim + i], keys and values separately.
  std::vector<std::vector<float>> key_cache_;
  std::vector<std::vector<float>> value_cache_;
};

/**
 * Deterministic decoder-only transformer over float32.
 *
 * Pre-norm blocks: RMSNorm -> MHA -> residual, RMSNorm -> 4d SiLU FFN ->
 * residual; learned absolute position embeddings; optional final RMSNorm
 * ahead of the LM head. Immutable after load; shareable across threads.
 */
class Backend {
 public:
  Backend() = default;  // empty shell; assign from load()/from_archive()

  static Backend load(const std::string& archive_path);
  static Backend load(const std::string& archive_path, const ModelConfig& cfg);
  static Backend from_archive(const TensorArchive& archive,
                              const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  Session new_session() const { return Session(this); }

  // Latents ahead of the LM head, one row per prefix position. Row t is the
  // vector that predicts token t+1.
  std::vector<std::vector<float>> forward_hidden(const Tokens& prefix) const;

  // LM-head affine map, no normalization.
  std::vector<float> lm_logits(std::span<const float> z) const;

  GenResult generate_greedy(const Tokens& prefix, int max_new,
                            const std::set<TokenId>& stop_tokens,
                            std::vector<std::vector<float>>* latents_out =
                                nullptr) const;

  // Seeded categorical sampling; temperature 0 collapses to greedy.
  GenResult generate_sampled(const Tokens& prefix, int max_new,
                             const std::set<TokenId>& stop_tokens,
                             double temperature, std::uint64_t seed) const;

  // LM head parameters, exposed for the closed-form policy gradient.
  const std::vector<float>& lm_head_weight() const { return lm_head_w_; }
  const std::vector<float>& lm_head_bias() const { return lm_head_b_; }

  // Argmax with ties broken by lowest token id.
  static TokenId argmax(std::span<const float> logits);

 private:
  friend class Session;

  struct Layer {
    std::vector<float> attn_norm;
    std::vector<float> wq, wk, wv, wo;  // [d, d] row-major (out x in)
    std::vector<float> ffn_norm;
    std::vector<float> ffn_in;   // [4d, d]
    std::vector<float> ffn_out;  // [d, 4d]
  };

  ModelConfig cfg_;
  std::vector<float> tok_emb_;  // [V, d]
  std::vector<float> pos_emb_;  // [C, d]
  std::vector<Layer> layers_;
  std::vector<float> final_norm_w_;  // [d] when cfg_.final_norm
  std::vector<float> lm_head_w_;     // [V, d]
  std::vector<float> lm_head_b_;     // [V]
};

// Required tensor names for a config; documented in the README.
std::vector<std::pair<std::string, std::vector<std::int64_t>>>
required_tensors(const ModelConfig& cfg);

}  // namespace latentseek::model
