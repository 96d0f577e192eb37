#include "latentseek/seek.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace latentseek::seek {

namespace {

constexpr double kDivergenceFactor = 1e4;

double vec_norm(const std::vector<float>& v) {
  double ss = 0.0;
  for (float x : v) ss += static_cast<double>(x) * x;
  return std::sqrt(ss);
}

void norm_summary(const LatentSequence& z, IterationRecord& rec) {
  if (z.empty()) return;
  double sum = 0.0, mx = 0.0;
  for (const auto& v : z.vectors) {
    double n = vec_norm(v);
    sum += n;
    mx = std::max(mx, n);
  }
  rec.latent_norm_mean = sum / static_cast<double>(z.size());
  rec.latent_norm_max = mx;
}

IterationRecord make_record(int k, const reward::RewardSignal& sig,
                            Tokens prefix, const std::string& completion_text,
                            int completion_length, bool truncated) {
  IterationRecord rec;
  rec.k = k;
  rec.reward = sig.value;
  rec.prefix_tokens = std::move(prefix);
  rec.completion_text = completion_text;
  rec.completion_length = completion_length;
  rec.truncated = truncated;
  if (sig.extracted_answer) {
    rec.answer = sig.extracted_answer->text;
    rec.has_answer = true;
  }
  return rec;
}

}  // namespace

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::kThreshold: return "threshold";
    case StopReason::kBudget: return "budget";
    case StopReason::kDivergence: return "divergence";
    case StopReason::kDegenerateCot: return "degenerate-cot";
  }
  return "unknown";
}

reward::RewardSignal PsrmRewardBackend::evaluate(
    const std::string& completion_text, const ProblemInstance& instance) {
  if (!instance.has_gold()) {
    throw ConfigError("PSRM requires a gold answer (instance \"" +
                      instance.id + "\")");
  }
  auto answer = reward::extract_answer(completion_text,
                                       instance.prompt_template);
  reward::RewardSignal sig =
      reward::psrm_reward(answer, reward::normalize_answer(instance.gold_answer));
  sig.completion = completion_text;
  return sig;
}

reward::RewardSignal SelfRewardBackend::evaluate(
    const std::string& completion_text, const ProblemInstance& instance) {
  reward::SelfRewardOptions opts = opts_;
  opts.format = instance.prompt_template;
  return reward::self_reward(completion_text, instance.question, judge_, opts);
}

std::string SeekTrace::to_jsonl() const {
  std::ostringstream os;
  os << nlohmann::json({{"schema", 1}}).dump() << "\n";
  for (const auto& r : records) {
    nlohmann::json j = {{"k", r.k},
                        {"reward", r.reward},
                        {"prefix_tokens", r.prefix_tokens},
                        {"completion_length", r.completion_length},
                        {"answer", r.answer},
                        {"has_answer", r.has_answer},
                        {"latent_norm_mean", r.latent_norm_mean},
                        {"latent_norm_max", r.latent_norm_max},
                        {"truncated", r.truncated}};
    if (divergence_at && *divergence_at == r.k + 1) {
      j["divergence_next"] = true;
    }
    os << j.dump() << "\n";
  }
  return os.str();
}

SeekResult summarize_at_budget(const SeekTrace& trace, int budget, double tau) {
  SeekResult res;
  res.trace = trace;
  if (trace.degenerate) {
    res.stop_reason = StopReason::kDegenerateCot;
    if (!trace.records.empty()) {
      const auto& r = trace.records.front();
      res.completion = r.completion_text;
      res.answer = r.answer;
      res.has_answer = r.has_answer;
      res.reward = r.reward;
    }
    return res;
  }
  const int last = static_cast<int>(trace.records.size()) - 1;
  const int limit = std::min(budget, last);
  auto finish_with = [&](const IterationRecord& r, int updates,
                         StopReason reason) {
    res.completion = r.completion_text;
    res.answer = r.answer;
    res.has_answer = r.has_answer;
    res.reward = r.reward;
    res.update_iterations = updates;
    res.stop_reason = reason;
  };
  for (int k = 0; k <= limit; ++k) {
    const auto& r = trace.records[static_cast<size_t>(k)];
    if (r.reward > tau) {
      finish_with(r, k, StopReason::kThreshold);
      return res;
    }
  }
  // best-reward record among those within budget; ties go to the earliest
  int best = 0;
  for (int k = 1; k <= limit; ++k) {
    if (trace.records[static_cast<size_t>(k)].reward >
        trace.records[static_cast<size_t>(best)].reward) {
      best = k;
    }
  }
  bool diverged = trace.divergence_at && *trace.divergence_at <= budget;
  finish_with(trace.records[static_cast<size_t>(best)], limit,
              diverged ? StopReason::kDivergence : StopReason::kBudget);
  return res;
}

SeekResult latent_seek(const Backend& backend, const ProblemInstance& instance,
                       const SeekConfig& cfg, RewardBackend& reward_backend,
                       const std::set<TokenId>& stop_tokens) {
  cfg.validate();
  model::Tokenizer tokenizer(backend.config().vocab_size);
  Tokens context = harness::render_prompt(instance, tokenizer,
                                          backend.config().max_context);

  latent::CotInit cot = latent::init_from_cot(backend, context,
                                              cfg.max_new_tokens, stop_tokens);
  SeekTrace trace;
  if (cot.degenerate()) {
    trace.degenerate = true;
    reward::RewardSignal sig = reward_backend.evaluate("", instance);
    trace.records.push_back(make_record(0, sig, {}, "", 0, false));
    return summarize_at_budget(trace, cfg.max_iterations, cfg.tau);
  }

  const std::string cot_text = tokenizer.decode(cot.cot_tokens);
  reward::RewardSignal sig0 = reward_backend.evaluate(cot_text, instance);
  {
    IterationRecord rec0 = make_record(0, sig0, cot.cot_tokens, cot_text,
                                       static_cast<int>(cot.cot_tokens.size()),
                                       cot.truncated);
    norm_summary(cot.z0, rec0);
    trace.records.push_back(std::move(rec0));
  }
  if (sig0.value > cfg.tau || cfg.max_iterations == 0) {
    return summarize_at_budget(trace, cfg.max_iterations, cfg.tau);
  }

  LatentSequence z = latent::truncate_fraction(cot.z0, cfg.rho);
  latent::OptimizerState state =
      latent::OptimizerState::for_sequence(z, cfg.optimizer);
  std::vector<double> init_norms;
  init_norms.reserve(z.size());
  for (const auto& v : z.vectors) init_norms.push_back(vec_norm(v));

  Tokens prev_tokens = latent::decode_latents(backend, z);
  double prev_reward = sig0.value;

  for (int k = 1; k <= cfg.max_iterations; ++k) {
    latent::SeekConfig iter_cfg = cfg;
    iter_cfg.sample_seed = cfg.sample_seed + static_cast<std::uint64_t>(k);
    latent::RewardFn reward_fn = [&](const Tokens& sample) -> double {
      if (sample == prev_tokens) return prev_reward;
      model::GenResult comp = reward::complete(backend, sample, context,
                                               cfg.max_new_tokens, stop_tokens);
      return reward_backend.evaluate(tokenizer.decode(comp.tokens), instance)
          .value;
    };
    try {
      auto grad = latent::reinforce_gradient(backend, z, iter_cfg, reward_fn);
      latent::apply_update(z, grad, state, cfg);
    } catch (const DivergenceError&) {
      trace.divergence_at = k;
      break;
    }
    bool norm_blown = false;
    for (size_t t = 0; t < z.size(); ++t) {
      if (vec_norm(z.vectors[t]) >
          kDivergenceFactor * std::max(init_norms[t], 1e-6)) {
        norm_blown = true;
        break;
      }
    }
    if (norm_blown) {
      trace.divergence_at = k;
      break;
    }

    Tokens prefix = latent::decode_latents(backend, z);
    model::GenResult comp = reward::complete(backend, prefix, context,
                                             cfg.max_new_tokens, stop_tokens);
    const std::string text = tokenizer.decode(comp.tokens);
    reward::RewardSignal sig = reward_backend.evaluate(text, instance);

    IterationRecord rec = make_record(k, sig, prefix, text,
                                      static_cast<int>(comp.tokens.size()),
                                      comp.truncated);
    norm_summary(z, rec);
    trace.records.push_back(std::move(rec));

    prev_tokens = std::move(prefix);
    prev_reward = sig.value;
    if (sig.value > cfg.tau) break;
  }
  return summarize_at_budget(trace, cfg.max_iterations, cfg.tau);
}

SeekResult cot_baseline(const Backend& backend, const ProblemInstance& instance,
                        const SeekConfig& cfg, RewardBackend& reward_backend,
                        const std::set<TokenId>& stop_tokens) {
  SeekConfig k0 = cfg;
  k0.max_iterations = 0;
  return latent_seek(backend, instance, k0, reward_backend, stop_tokens);
}

SeekResult best_of_n(const Backend& backend, const ProblemInstance& instance,
                     const SeekConfig& cfg, int n, double temperature,
                     std::uint64_t seed, RewardBackend& reward_backend,
                     const std::set<TokenId>& stop_tokens) {
  if (n < 1) throw ConfigError("best_of_n: N must be >= 1");
  if (temperature < 0) throw ConfigError("best_of_n: temperature must be >= 0");
  model::Tokenizer tokenizer(backend.config().vocab_size);
  Tokens context = harness::render_prompt(instance, tokenizer,
                                          backend.config().max_context);

  SeekTrace trace;
  int best = -1;
  for (int i = 0; i < n; ++i) {
    model::GenResult gen = backend.generate_sampled(
        context, cfg.max_new_tokens, stop_tokens, temperature,
        seed + static_cast<std::uint64_t>(i));
    Tokens generated(gen.tokens.begin() + static_cast<std::ptrdiff_t>(context.size()),
                     gen.tokens.end());
    const std::string text = tokenizer.decode(generated);
    reward::RewardSignal sig = reward_backend.evaluate(text, instance);
    IterationRecord rec = make_record(i, sig, generated, text,
                                      static_cast<int>(generated.size()),
                                      gen.truncated);
    trace.records.push_back(std::move(rec));
    if (best < 0 || sig.value > trace.records[static_cast<size_t>(best)].reward) {
      best = i;
    }
  }
  const auto& winner = trace.records[static_cast<size_t>(best)];
  SeekResult res;
  res.completion = winner.completion_text;
  res.answer = winner.answer;
  res.has_answer = winner.has_answer;
  res.reward = winner.reward;
  res.update_iterations = 0;
  res.stop_reason = winner.completion_text.empty()
                        ? StopReason::kDegenerateCot
                        : (winner.reward > cfg.tau ? StopReason::kThreshold
                                                   : StopReason::kBudget);
  res.trace = std::move(trace);
  return res;
}

}  // namespace latentseek::seek
