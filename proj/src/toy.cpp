#include "latentseek/toy.hpp"

#include <cmath>
#include <random>

#include "latentseek/tokenizer.hpp"

namespace latentseek::model {

namespace {

std::vector<float> uniform_tensor(std::mt19937_64& rng, std::int64_t n,
                                  float scale) {
  std::vector<float> out(static_cast<size_t>(n));
  for (auto& v : out) {
    // top 24 bits -> [0,1); portable across standard libraries
    float u = static_cast<float>(rng() >> 40) * 0x1.0p-24f;
    v = (2.0f * u - 1.0f) * scale;
  }
  return out;
}

}  // namespace

TensorArchive make_toy_model(std::uint64_t seed, const ModelConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const float d_scale = 0.6f / std::sqrt(static_cast<float>(cfg.hidden_dim));
  TensorArchive a;
  a.meta["config"] = cfg.to_json();
  for (const auto& [name, shape] : required_tensors(cfg)) {
    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    float scale;
    if (name.find("norm") != std::string::npos) {
      // norm gains near 1
      std::vector<float> w(static_cast<size_t>(n));
      for (auto& v : w) {
        float u = static_cast<float>(rng() >> 40) * 0x1.0p-24f;
        v = 1.0f + (2.0f * u - 1.0f) * 0.1f;
      }
      a.add(name, shape, std::move(w));
      continue;
    } else if (name == "tok_emb.weight" || name == "pos_emb.weight") {
      scale = 0.5f;
    } else if (name == "lm_head.bias") {
      scale = 0.1f;
    } else {
      scale = d_scale;
    }
    a.add(name, shape, uniform_tensor(rng, n, scale));
  }
  return a;
}

TensorArchive make_blank_archive(const ModelConfig& cfg) {
  cfg.validate();
  TensorArchive a;
  a.meta["config"] = cfg.to_json();
  for (const auto& [name, shape] : required_tensors(cfg)) {
    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    float fill = name.find("norm") != std::string::npos ? 1.0f : 0.0f;
    a.add(name, shape, std::vector<float>(static_cast<size_t>(n), fill));
  }
  return a;
}

ModelConfig echo_config(const EchoSpec& spec) {
  ModelConfig cfg;
  cfg.vocab_size = spec.vocab_size;
  cfg.hidden_dim = 2 * spec.vocab_size + 4;
  cfg.num_layers = 1;
  cfg.num_heads = 1;
  cfg.max_context = spec.max_context;
  cfg.final_norm = false;
  return cfg;
}

TensorArchive make_echo_model(const EchoSpec& spec) {
  const ModelConfig cfg = echo_config(spec);
  cfg.validate();
  Tokenizer tok(spec.vocab_size);

  const int V = spec.vocab_size;
  const int d = cfg.hidden_dim;
  const int C = spec.max_context;
  const float M = spec.script_gain;
  const float inv_sqrt2 = 1.0f / std::sqrt(2.0f);
  // Every position's pre-norm input has squared norm S2 by construction
  // (ballast dim absorbs the slack), so RMSNorm is a uniform rescale and
  // attention scores stay exactly linear in the designed key features.
  const float S2 = 4.0f + M * M;
  const float delta = 1.0f / static_cast<float>(C);

  // dim layout
  const int kFlag = 2 * V;       // echo-class indicator (token side)
  const int kBallast = 2 * V + 1;
  const int kPosVal = 2 * V + 2;  // (p+1)/C (position side)
  const int kConst = 2 * V + 3;

  // attention score geometry: gap of >= 25 between adjacent positions
  const float G = 25.0f * static_cast<float>(C);
  const float kappa = G * S2 / std::sqrt(static_cast<float>(d));
  const float a_flag = 2.0f * std::sqrt(2.0f);
  const float value_gain = std::sqrt(2.0f);
  const float class_bonus = 0.2f * std::sqrt(2.0f);

  std::vector<bool> echo_class(static_cast<size_t>(V), false);
  if (spec.scripted) {
    for (char c : spec.echo_chars) echo_class[static_cast<size_t>(tok.token_of(c))] = true;
  } else {
    for (int v = 0; v < V; ++v) echo_class[static_cast<size_t>(v)] = true;
    echo_class[static_cast<size_t>(tok.token_of(spec.sep_char))] = false;
  }

  // script(p): character the model must emit at absolute position p, or -1
  // for the echo slot / unscripted positions.
  const std::string box_open = "\\boxed{";
  auto script_at = [&](int p) -> int {
    if (!spec.scripted) return -1;
    if (p < spec.context_len) return -1;
    int s = p - spec.context_len;
    int f = static_cast<int>(spec.filler.size());
    if (s < f) return tok.token_of(spec.filler[static_cast<size_t>(s)]);
    s -= f;
    if (s < static_cast<int>(box_open.size())) {
      return tok.token_of(box_open[static_cast<size_t>(s)]);
    }
    s -= static_cast<int>(box_open.size());
    if (s == 0) return -1;  // echo slot
    if (s == 1) return tok.token_of('}');
    return tok.token_of(spec.stop_char);
  };

  TensorArchive arch;
  arch.meta["config"] = cfg.to_json();
  arch.meta["echo"] = {{"scripted", spec.scripted},
                       {"context_len", spec.context_len},
                       {"filler", spec.filler},
                       {"echo_chars", spec.echo_chars},
                       {"stop_char", std::string(1, spec.stop_char)}};

  // token embeddings: unit-norm rows, echo-class tokens split between the
  // identity slot and the class flag
  std::vector<float> tok_emb(static_cast<size_t>(V) * d, 0.0f);
  for (int v = 0; v < V; ++v) {
    float* row = tok_emb.data() + static_cast<size_t>(v) * d;
    if (echo_class[static_cast<size_t>(v)]) {
      row[V + v] = inv_sqrt2;
      row[kFlag] = inv_sqrt2;
    } else {
      row[V + v] = 1.0f;
    }
  }
  arch.add("tok_emb.weight", {V, d}, std::move(tok_emb));

  // position embeddings: constant dim, position value, optional script
  // overlay, and a ballast dim equalizing the total norm
  std::vector<float> pos_emb(static_cast<size_t>(C) * d, 0.0f);
  for (int p = 0; p < C; ++p) {
    float* row = pos_emb.data() + static_cast<size_t>(p) * d;
    row[kConst] = 1.0f;
    float pv = delta * static_cast<float>(p + 1);
    row[kPosVal] = pv;
    float used = 1.0f + 1.0f + pv * pv;  // token(1) + const + posval
    int sc = script_at(p + 1);
    if (sc >= 0) {
      row[sc] += M;
      used += M * M;
    }
    row[kBallast] = std::sqrt(std::max(0.0f, S2 - used));
  }
  arch.add("pos_emb.weight", {C, d}, std::move(pos_emb));

  arch.add("layers.0.attn_norm.weight", {d}, std::vector<float>(static_cast<size_t>(d), 1.0f));

  std::vector<float> wq(static_cast<size_t>(d) * d, 0.0f);
  wq[static_cast<size_t>(0) * d + kConst] = kappa;
  arch.add("layers.0.attn.wq.weight", {d, d}, std::move(wq));

  std::vector<float> wk(static_cast<size_t>(d) * d, 0.0f);
  wk[static_cast<size_t>(0) * d + kFlag] = a_flag;
  wk[static_cast<size_t>(0) * d + kPosVal] = 1.0f;
  arch.add("layers.0.attn.wk.weight", {d, d}, std::move(wk));

  std::vector<float> wv(static_cast<size_t>(d) * d, 0.0f);
  for (int v = 0; v < V; ++v) {
    if (!echo_class[static_cast<size_t>(v)]) continue;
    wv[static_cast<size_t>(v) * d + (V + v)] = value_gain;
    wv[static_cast<size_t>(v) * d + kFlag] = class_bonus;
  }
  arch.add("layers.0.attn.wv.weight", {d, d}, std::move(wv));

  std::vector<float> wo(static_cast<size_t>(d) * d, 0.0f);
  for (int i = 0; i < d; ++i) wo[static_cast<size_t>(i) * d + i] = 1.0f;
  arch.add("layers.0.attn.wo.weight", {d, d}, std::move(wo));

  arch.add("layers.0.ffn_norm.weight", {d}, std::vector<float>(static_cast<size_t>(d), 1.0f));
  arch.add("layers.0.ffn.w_in.weight", {4 * d, d},
           std::vector<float>(static_cast<size_t>(4) * d * d, 0.0f));
  arch.add("layers.0.ffn.w_out.weight", {d, 4 * d},
           std::vector<float>(static_cast<size_t>(4) * d * d, 0.0f));

  std::vector<float> lm_w(static_cast<size_t>(V) * d, 0.0f);
  for (int v = 0; v < V; ++v) lm_w[static_cast<size_t>(v) * d + v] = 1.0f;
  arch.add("lm_head.weight", {V, d}, std::move(lm_w));
  arch.add("lm_head.bias", {V}, std::vector<float>(static_cast<size_t>(V), 0.0f));

  return arch;
}

}  // namespace latentseek::model
