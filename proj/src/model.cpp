#include "latentseek/model.hpp"

#include <cmath>
#include <cstring>
#include <random>

namespace latentseek::model {

namespace {

constexpr float kNormEps = 1e-5f;

void rmsnorm(const float* x, const float* weight, float* out, int d) {
  double ss = 0.0;
  for (int i = 0; i < d; ++i) ss += static_cast<double>(x[i]) * x[i];
  float inv = 1.0f / std::sqrt(static_cast<float>(ss / d) + kNormEps);
  for (int i = 0; i < d; ++i) out[i] = x[i] * inv * weight[i];
}

// out[r] = sum_c w[r*cols + c] * x[c]
void matvec(const float* w, const float* x, float* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    const float* wr = w + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += static_cast<double>(wr[c]) * x[c];
    out[r] = static_cast<float>(acc);
  }
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("model config: vocab_size must be >= 2");
  if (hidden_dim <= 0) throw ConfigError("model config: hidden_dim must be positive");
  if (num_layers <= 0) throw ConfigError("model config: num_layers must be positive");
  if (num_heads <= 0 || hidden_dim % num_heads != 0) {
    throw ConfigError("model config: num_heads must be positive and divide hidden_dim");
  }
  if (max_context < 1) throw ConfigError("model config: max_context must be >= 1");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"vocab_size", vocab_size},   {"hidden_dim", hidden_dim},
          {"num_layers", num_layers},   {"num_heads", num_heads},
          {"max_context", max_context}, {"final_norm", final_norm}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.max_context = j.at("max_context").get<int>();
  c.final_norm = j.at("final_norm").get<bool>();
  return c;
}

std::vector<std::pair<std::string, std::vector<std::int64_t>>>
required_tensors(const ModelConfig& cfg) {
  const std::int64_t V = cfg.vocab_size;
  const std::int64_t d = cfg.hidden_dim;
  const std::int64_t C = cfg.max_context;
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> out;
  out.push_back({"tok_emb.weight", {V, d}});
  out.push_back({"pos_emb.weight", {C, d}});
  for (int l = 0; l < cfg.num_layers; ++l) {
    std::string p = "layers." + std::to_string(l) + ".";
    out.push_back({p + "attn_norm.weight", {d}});
    out.push_back({p + "attn.wq.weight", {d, d}});
    out.push_back({p + "attn.wk.weight", {d, d}});
    out.push_back({p + "attn.wv.weight", {d, d}});
    out.push_back({p + "attn.wo.weight", {d, d}});
    out.push_back({p + "ffn_norm.weight", {d}});
    out.push_back({p + "ffn.w_in.weight", {4 * d, d}});
    out.push_back({p + "ffn.w_out.weight", {d, 4 * d}});
  }
  if (cfg.final_norm) out.push_back({"final_norm.weight", {d}});
  out.push_back({"lm_head.weight", {V, d}});
  out.push_back({"lm_head.bias", {V}});
  return out;
}

Backend Backend::from_archive(const TensorArchive& archive,
                              const ModelConfig& cfg) {
  cfg.validate();
  for (const auto& [name, shape] : required_tensors(cfg)) {
    const Tensor& t = archive.get(name);  // throws with the tensor name
    if (t.shape != shape) {
      throw ArchiveError("archive: tensor \"" + name + "\" shape mismatch");
    }
  }
  Backend b;
  b.cfg_ = cfg;
  b.tok_emb_ = archive.get("tok_emb.weight").data;
  b.pos_emb_ = archive.get("pos_emb.weight").data;
  b.layers_.resize(static_cast<size_t>(cfg.num_layers));
  for (int l = 0; l < cfg.num_layers; ++l) {
    std::string p = "layers." + std::to_string(l) + ".";
    Layer& L = b.layers_[static_cast<size_t>(l)];
    L.attn_norm = archive.get(p + "attn_norm.weight").data;
    L.wq = archive.get(p + "attn.wq.weight").data;
    L.wk = archive.get(p + "attn.wk.weight").data;
    L.wv = archive.get(p + "attn.wv.weight").data;
    L.wo = archive.get(p + "attn.wo.weight").data;
    L.ffn_norm = archive.get(p + "ffn_norm.weight").data;
    L.ffn_in = archive.get(p + "ffn.w_in.weight").data;
    L.ffn_out = archive.get(p + "ffn.w_out.weight").data;
  }
  if (cfg.final_norm) b.final_norm_w_ = archive.get("final_norm.weight").data;
  b.lm_head_w_ = archive.get("lm_head.weight").data;
  b.lm_head_b_ = archive.get("lm_head.bias").data;
  return b;
}

Backend Backend::load(const std::string& archive_path) {
  TensorArchive a = TensorArchive::load(archive_path);
  if (!a.meta.contains("config")) {
    throw ArchiveError("archive: \"" + archive_path +
                       "\" carries no embedded model config");
  }
  return from_archive(a, ModelConfig::from_json(a.meta["config"]));
}

Backend Backend::load(const std::string& archive_path, const ModelConfig& cfg) {
  TensorArchive a = TensorArchive::load(archive_path);
  return from_archive(a, cfg);
}

Session::Session(const Backend* backend) : backend_(backend) {
  const auto& cfg = backend_->cfg_;
  key_cache_.resize(static_cast<size_t>(cfg.num_layers));
  value_cache_.resize(static_cast<size_t>(cfg.num_layers));
  for (int l = 0; l < cfg.num_layers; ++l) {
    key_cache_[static_cast<size_t>(l)].reserve(
        static_cast<size_t>(cfg.max_context) * cfg.hidden_dim);
    value_cache_[static_cast<size_t>(l)].reserve(
        static_cast<size_t>(cfg.max_context) * cfg.hidden_dim);
  }
}

std::vector<float> Session::push(TokenId token) {
  const Backend& b = *backend_;
  const ModelConfig& cfg = b.cfg_;
  const int d = cfg.hidden_dim;
  const int heads = cfg.num_heads;
  const int head_dim = d / heads;
  if (position_ >= cfg.max_context) {
    throw ContextOverflowError("session: context overflow at position " +
                               std::to_string(position_));
  }
  if (token < 0 || token >= cfg.vocab_size) {
    throw DimensionError("session: token id " + std::to_string(token) +
                         " out of vocabulary");
  }

  std::vector<float> x(static_cast<size_t>(d));
  const float* te = b.tok_emb_.data() + static_cast<size_t>(token) * d;
  const float* pe = b.pos_emb_.data() + static_cast<size_t>(position_) * d;
  for (int i = 0; i < d; ++i) x[static_cast<size_t>(i)] = te[i] + pe[i];

  std::vector<float> normed(static_cast<size_t>(d));
  std::vector<float> q(static_cast<size_t>(d)), k(static_cast<size_t>(d)),
      v(static_cast<size_t>(d)), ctx(static_cast<size_t>(d)),
      attn_out(static_cast<size_t>(d));
  std::vector<float> ff_hidden(static_cast<size_t>(4) * d),
      ff_out(static_cast<size_t>(d));

  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

  for (int l = 0; l < cfg.num_layers; ++l) {
    const Backend::Layer& L = b.layers_[static_cast<size_t>(l)];
    rmsnorm(x.data(), L.attn_norm.data(), normed.data(), d);
    matvec(L.wq.data(), normed.data(), q.data(), d, d);
    matvec(L.wk.data(), normed.data(), k.data(), d, d);
    matvec(L.wv.data(), normed.data(), v.data(), d, d);

    auto& kc = key_cache_[static_cast<size_t>(l)];
    auto& vc = value_cache_[static_cast<size_t>(l)];
    kc.insert(kc.end(), k.begin(), k.end());
    vc.insert(vc.end(), v.begin(), v.end());
    const int n_pos = position_ + 1;

    for (int h = 0; h < heads; ++h) {
      const int off = h * head_dim;
      // scores over all cached positions, numerically stable softmax
      std::vector<float> scores(static_cast<size_t>(n_pos));
      float max_s = -std::numeric_limits<float>::infinity();
      for (int p = 0; p < n_pos; ++p) {
        const float* kp = kc.data() + static_cast<size_t>(p) * d + off;
        double acc = 0.0;
        for (int i = 0; i < head_dim; ++i) {
          acc += static_cast<double>(q[static_cast<size_t>(off + i)]) * kp[i];
        }
        float s = static_cast<float>(acc) * scale;
        scores[static_cast<size_t>(p)] = s;
        if (s > max_s) max_s = s;
      }
      double denom = 0.0;
      for (int p = 0; p < n_pos; ++p) {
        float e = std::exp(scores[static_cast<size_t>(p)] - max_s);
        scores[static_cast<size_t>(p)] = e;
        denom += e;
      }
      for (int i = 0; i < head_dim; ++i) {
        double acc = 0.0;
        for (int p = 0; p < n_pos; ++p) {
          const float* vp = vc.data() + static_cast<size_t>(p) * d + off;
          acc += static_cast<double>(scores[static_cast<size_t>(p)]) * vp[i];
        }
        ctx[static_cast<size_t>(off + i)] =
            static_cast<float>(acc / denom);
      }
    }

    matvec(L.wo.data(), ctx.data(), attn_out.data(), d, d);
    for (int i = 0; i < d; ++i) x[static_cast<size_t>(i)] += attn_out[static_cast<size_t>(i)];

    rmsnorm(x.data(), L.ffn_norm.data(), normed.data(), d);
    matvec(L.ffn_in.data(), normed.data(), ff_hidden.data(), 4 * d, d);
    for (int i = 0; i < 4 * d; ++i) {
      ff_hidden[static_cast<size_t>(i)] = silu(ff_hidden[static_cast<size_t>(i)]);
    }
    matvec(L.ffn_out.data(), ff_hidden.data(), ff_out.data(), d, 4 * d);
    for (int i = 0; i < d; ++i) x[static_cast<size_t>(i)] += ff_out[static_cast<size_t>(i)];
  }

  ++position_;
  if (cfg.final_norm) {
    std::vector<float> z(static_cast<size_t>(d));
    rmsnorm(x.data(), b.final_norm_w_.data(), z.data(), d);
    return z;
  }
  return x;
}

std::vector<std::vector<float>> Backend::forward_hidden(
    const Tokens& prefix) const {
  if (prefix.empty()) throw DimensionError("forward_hidden: empty prefix");
  if (static_cast<int>(prefix.size()) > cfg_.max_context) {
    throw ContextOverflowError("forward_hidden: prefix length " +
                               std::to_string(prefix.size()) +
                               " exceeds max_context");
  }
  Session s = new_session();
  std::vector<std::vector<float>> out;
  out.reserve(prefix.size());
  for (TokenId t : prefix) out.push_back(s.push(t));
  return out;
}

std::vector<float> Backend::lm_logits(std::span<const float> z) const {
  const int d = cfg_.hidden_dim;
  const int V = cfg_.vocab_size;
  if (static_cast<int>(z.size()) != d) {
    throw DimensionError("lm_logits: latent width " + std::to_string(z.size()) +
                         " != hidden_dim " + std::to_string(d));
  }
  std::vector<float> logits(static_cast<size_t>(V));
  for (int v = 0; v < V; ++v) {
    const float* wr = lm_head_w_.data() + static_cast<size_t>(v) * d;
    double acc = static_cast<double>(lm_head_b_[static_cast<size_t>(v)]);
    for (int i = 0; i < d; ++i) acc += static_cast<double>(wr[i]) * z[static_cast<size_t>(i)];
    logits[static_cast<size_t>(v)] = static_cast<float>(acc);
  }
  return logits;
}

TokenId Backend::argmax(std::span<const float> logits) {
  TokenId best = 0;
  float best_v = logits[0];
  for (size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > best_v) {  // strict: ties keep the lowest id
      best_v = logits[i];
      best = static_cast<TokenId>(i);
    }
  }
  return best;
}

GenResult Backend::generate_greedy(
    const Tokens& prefix, int max_new, const std::set<TokenId>& stop_tokens,
    std::vector<std::vector<float>>* latents_out) const {
  if (prefix.empty()) throw DimensionError("generate_greedy: empty prefix");
  GenResult res;
  res.tokens = prefix;
  if (max_new == 0) return res;
  if (static_cast<int>(prefix.size()) >= cfg_.max_context) {
    throw ContextOverflowError(
        "generate_greedy: no room to generate after prefix of length " +
        std::to_string(prefix.size()));
  }
  Session s = new_session();
  std::vector<float> z;
  for (TokenId t : prefix) z = s.push(t);
  for (int n = 0; n < max_new; ++n) {
    std::vector<float> logits = lm_logits(z);
    TokenId next = argmax(logits);
    if (latents_out) latents_out->push_back(z);
    res.tokens.push_back(next);
    if (stop_tokens.count(next)) return res;
    if (s.position() >= cfg_.max_context) {
      res.truncated = true;  // context exhausted mid-generation
      return res;
    }
    z = s.push(next);
  }
  res.truncated = true;
  return res;
}

GenResult Backend::generate_sampled(const Tokens& prefix, int max_new,
                                    const std::set<TokenId>& stop_tokens,
                                    double temperature,
                                    std::uint64_t seed) const {
  if (temperature < 0) throw ConfigError("generate_sampled: temperature < 0");
  if (temperature == 0.0) return generate_greedy(prefix, max_new, stop_tokens);
  if (prefix.empty()) throw DimensionError("generate_sampled: empty prefix");
  GenResult res;
  res.tokens = prefix;
  if (max_new == 0) return res;
  if (static_cast<int>(prefix.size()) >= cfg_.max_context) {
    throw ContextOverflowError(
        "generate_sampled: no room to generate after prefix of length " +
        std::to_string(prefix.size()));
  }
  std::mt19937_64 rng(seed);
  Session s = new_session();
  std::vector<float> z;
  for (TokenId t : prefix) z = s.push(t);
  for (int n = 0; n < max_new; ++n) {
    std::vector<float> logits = lm_logits(z);
    // stable softmax at the requested temperature
    double max_l = -std::numeric_limits<double>::infinity();
    for (float l : logits) max_l = std::max(max_l, static_cast<double>(l));
    std::vector<double> probs(logits.size());
    double denom = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
      probs[i] = std::exp((static_cast<double>(logits[i]) - max_l) / temperature);
      denom += probs[i];
    }
    // hand-rolled CDF walk; std::discrete_distribution is not portable
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * denom;
    TokenId next = static_cast<TokenId>(logits.size() - 1);
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) {
        next = static_cast<TokenId>(i);
        break;
      }
    }
    res.tokens.push_back(next);
    if (stop_tokens.count(next)) return res;
    if (s.position() >= cfg_.max_context) {
      res.truncated = true;
      return res;
    }
    z = s.push(next);
  }
  res.truncated = true;
  return res;
}

}  // namespace latentseek::model
