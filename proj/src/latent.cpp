#include "latentseek/latent.hpp"

#include <cmath>
#include <random>

namespace latentseek::latent {

void SeekConfig::validate() const {
  if (eta <= 0) throw ConfigError("seek config: eta must be > 0");
  if (max_iterations < 0) throw ConfigError("seek config: K must be >= 0");
  if (tau < -1.0 || tau > 0.0) throw ConfigError("seek config: tau must be in [-1, 0]");
  if (rho <= 0.0 || rho > 1.0) throw ConfigError("seek config: rho must be in (0, 1]");
  if (num_samples < 1) throw ConfigError("seek config: num_samples must be >= 1");
  if (max_new_tokens < 1) throw ConfigError("seek config: max_new_tokens must be >= 1");
}

OptimizerState OptimizerState::for_sequence(const LatentSequence& z,
                                            OptimizerKind kind) {
  OptimizerState s;
  if (kind == OptimizerKind::kAdam) {
    s.first_moment.resize(z.size());
    s.second_moment.resize(z.size());
    for (size_t t = 0; t < z.size(); ++t) {
      s.first_moment[t].assign(z.vectors[t].size(), 0.0f);
      s.second_moment[t].assign(z.vectors[t].size(), 0.0f);
    }
  }
  return s;
}

CotInit init_from_cot(const Backend& backend, const Tokens& context,
                      int max_new, const std::set<TokenId>& stop_tokens) {
  if (context.empty()) throw DimensionError("init_from_cot: empty context");
  CotInit out;
  std::vector<std::vector<float>> latents;
  model::GenResult gen =
      backend.generate_greedy(context, max_new, stop_tokens, &latents);
  out.truncated = gen.truncated;
  out.cot_tokens.assign(gen.tokens.begin() + static_cast<std::ptrdiff_t>(context.size()),
                        gen.tokens.end());
  out.z0.vectors = std::move(latents);
  out.z0.origin_length = out.z0.vectors.size();
  return out;
}

LatentSequence truncate_fraction(const LatentSequence& z, double rho) {
  if (rho <= 0.0 || rho > 1.0) throw ConfigError("truncate_fraction: rho must be in (0, 1]");
  const size_t T = z.size();
  if (T == 0) return z;
  // ceil with a tolerance so rho * T lands on exact integers (0.2 * 100 = 20)
  size_t keep = static_cast<size_t>(
      std::ceil(rho * static_cast<double>(T) - 1e-9));
  keep = std::max<size_t>(1, std::min(keep, T));
  LatentSequence out;
  out.origin_length = z.origin_length;
  out.vectors.assign(z.vectors.begin(),
                     z.vectors.begin() + static_cast<std::ptrdiff_t>(keep));
  return out;
}

std::vector<float> grad_log_prob_head(std::span<const float> weight,
                                      std::span<const float> bias,
                                      int vocab_size, int hidden_dim,
                                      std::span<const float> z, TokenId x) {
  if (static_cast<int>(z.size()) != hidden_dim) {
    throw DimensionError("grad_log_prob: latent width mismatch");
  }
  if (x < 0 || x >= vocab_size) {
    throw DimensionError("grad_log_prob: token id out of vocabulary");
  }
  // softmax(W z + b) with double accumulation
  std::vector<double> logits(static_cast<size_t>(vocab_size));
  double max_l = -std::numeric_limits<double>::infinity();
  for (int v = 0; v < vocab_size; ++v) {
    const float* wr = weight.data() + static_cast<size_t>(v) * hidden_dim;
    double acc = static_cast<double>(bias[static_cast<size_t>(v)]);
    for (int i = 0; i < hidden_dim; ++i) acc += static_cast<double>(wr[i]) * z[static_cast<size_t>(i)];
    logits[static_cast<size_t>(v)] = acc;
    max_l = std::max(max_l, acc);
  }
  double denom = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - max_l);
    denom += l;
  }
  // g = W^T (onehot(x) - p)
  std::vector<double> g(static_cast<size_t>(hidden_dim), 0.0);
  for (int v = 0; v < vocab_size; ++v) {
    double coeff = (v == x ? 1.0 : 0.0) - logits[static_cast<size_t>(v)] / denom;
    const float* wr = weight.data() + static_cast<size_t>(v) * hidden_dim;
    for (int i = 0; i < hidden_dim; ++i) g[static_cast<size_t>(i)] += coeff * wr[i];
  }
  std::vector<float> out(static_cast<size_t>(hidden_dim));
  for (int i = 0; i < hidden_dim; ++i) out[static_cast<size_t>(i)] = static_cast<float>(g[static_cast<size_t>(i)]);
  return out;
}

std::vector<float> grad_log_prob(const Backend& backend,
                                 std::span<const float> z, TokenId x) {
  const auto& cfg = backend.config();
  return grad_log_prob_head(backend.lm_head_weight(), backend.lm_head_bias(),
                            cfg.vocab_size, cfg.hidden_dim, z, x);
}

Tokens decode_latents(const Backend& backend, const LatentSequence& z) {
  Tokens out;
  out.reserve(z.size());
  for (const auto& vec : z.vectors) {
    out.push_back(Backend::argmax(backend.lm_logits(vec)));
  }
  return out;
}

namespace {

// Per-position categorical draw from softmax(W z_t + b).
TokenId sample_position(const Backend& backend, std::span<const float> z,
                        std::mt19937_64& rng) {
  std::vector<float> logits = backend.lm_logits(z);
  double max_l = -std::numeric_limits<double>::infinity();
  for (float l : logits) max_l = std::max(max_l, static_cast<double>(l));
  std::vector<double> probs(logits.size());
  double denom = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(static_cast<double>(logits[i]) - max_l);
    denom += probs[i];
  }
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * denom;
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(probs.size() - 1);
}

}  // namespace

std::vector<std::vector<float>> reinforce_gradient(const Backend& backend,
                                                   const LatentSequence& z,
                                                   const SeekConfig& cfg,
                                                   const RewardFn& reward_fn) {
  cfg.validate();
  const size_t T = z.size();
  const size_t d = static_cast<size_t>(backend.config().hidden_dim);
  std::vector<std::vector<float>> acc(T, std::vector<float>(d, 0.0f));
  std::vector<std::vector<double>> acc_d(T, std::vector<double>(d, 0.0));

  std::mt19937_64 rng(cfg.sample_seed);
  for (int s = 0; s < cfg.num_samples; ++s) {
    Tokens sample;
    if (s == 0) {
      sample = decode_latents(backend, z);
    } else {
      sample.reserve(T);
      for (const auto& vec : z.vectors) sample.push_back(sample_position(backend, vec, rng));
    }
    double r;
    try {
      r = reward_fn(sample);
    } catch (const std::exception& e) {
      throw RewardError(std::string("reinforce_gradient: reward failed on sample ") +
                        std::to_string(s) + ": " + e.what());
    }
    if (r == 0.0) continue;  // zero reward contributes nothing
    for (size_t t = 0; t < T; ++t) {
      std::vector<float> g = grad_log_prob(backend, z.vectors[t], sample[t]);
      for (size_t i = 0; i < d; ++i) acc_d[t][i] += r * static_cast<double>(g[i]);
    }
  }
  const double inv_m = 1.0 / static_cast<double>(cfg.num_samples);
  for (size_t t = 0; t < T; ++t) {
    for (size_t i = 0; i < d; ++i) acc[t][i] = static_cast<float>(acc_d[t][i] * inv_m);
  }
  return acc;
}

void apply_update(LatentSequence& z,
                  const std::vector<std::vector<float>>& grad,
                  OptimizerState& state, const SeekConfig& cfg) {
  if (grad.size() != z.size()) {
    throw DimensionError("apply_update: gradient/latent length mismatch");
  }
  const double eta = cfg.eta;
  if (cfg.optimizer == OptimizerKind::kSgd) {
    for (size_t t = 0; t < z.size(); ++t) {
      auto& zt = z.vectors[t];
      const auto& gt = grad[t];
      if (gt.size() != zt.size()) throw DimensionError("apply_update: width mismatch");
      for (size_t i = 0; i < zt.size(); ++i) {
        zt[i] = static_cast<float>(zt[i] + eta * gt[i]);  // ascent
        if (!std::isfinite(zt[i])) {
          throw DivergenceError("apply_update: non-finite latent at position " +
                                std::to_string(t));
        }
      }
    }
    ++state.step;
    return;
  }
  if (state.first_moment.size() != z.size()) {
    throw DimensionError("apply_update: optimizer state shape mismatch");
  }
  ++state.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, state.step);
  const double bc2 = 1.0 - std::pow(b2, state.step);
  for (size_t t = 0; t < z.size(); ++t) {
    auto& zt = z.vectors[t];
    const auto& gt = grad[t];
    if (gt.size() != zt.size()) throw DimensionError("apply_update: width mismatch");
    auto& mt = state.first_moment[t];
    auto& vt = state.second_moment[t];
    for (size_t i = 0; i < zt.size(); ++i) {
      double g = gt[i];
      double m = b1 * mt[i] + (1.0 - b1) * g;
      double v = b2 * vt[i] + (1.0 - b2) * g * g;
      mt[i] = static_cast<float>(m);
      vt[i] = static_cast<float>(v);
      double update = eta * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
      zt[i] = static_cast<float>(zt[i] + update);
      if (!std::isfinite(zt[i])) {
        throw DivergenceError("apply_update: non-finite latent at position " +
                              std::to_string(t));
      }
    }
  }
}

}  // namespace latentseek::latent
