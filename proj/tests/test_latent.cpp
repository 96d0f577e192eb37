#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "echo_suite.hpp"
#include "latentseek/latent.hpp"
#include "latentseek/toy.hpp"

using namespace latentseek;
using latent::LatentSequence;
using model::Backend;
using model::ModelConfig;
using model::Tokens;

namespace {

// deterministic uniform floats, same scheme as the toy generator
float uniform(std::mt19937_64& rng, float lo, float hi) {
  float u = static_cast<float>(rng() >> 40) * 0x1.0p-24f;
  return lo + (hi - lo) * u;
}

double log_prob(const std::vector<float>& w, const std::vector<float>& b,
                int V, int d, const std::vector<float>& z, int x) {
  std::vector<double> logits(static_cast<size_t>(V));
  for (int v = 0; v < V; ++v) {
    double acc = b[static_cast<size_t>(v)];
    for (int i = 0; i < d; ++i) {
      acc += static_cast<double>(w[static_cast<size_t>(v) * d + i]) *
             z[static_cast<size_t>(i)];
    }
    logits[static_cast<size_t>(v)] = acc;
  }
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double sum = 0;
  for (double l : logits) sum += std::exp(l - mx);
  return logits[static_cast<size_t>(x)] - mx - std::log(sum);
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.vocab_size = 11;
  cfg.hidden_dim = 12;
  cfg.num_layers = 1;
  cfg.num_heads = 1;
  cfg.max_context = 24;
  return cfg;
}

}  // namespace

TEST_CASE("closed-form gradient matches central finite differences") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    int V = 2 + static_cast<int>(rng() % 15);  // <= 16
    int d = 2 + static_cast<int>(rng() % 7);   // <= 8
    std::vector<float> w(static_cast<size_t>(V) * d), b(static_cast<size_t>(V));
    std::vector<float> z(static_cast<size_t>(d));
    for (auto& v : w) v = uniform(rng, -1.5f, 1.5f);
    for (auto& v : b) v = uniform(rng, -0.5f, 0.5f);
    for (auto& v : z) v = uniform(rng, -2.0f, 2.0f);
    int x = static_cast<int>(rng() % static_cast<std::uint64_t>(V));

    auto grad = latent::grad_log_prob_head(w, b, V, d, z, x);
    REQUIRE(static_cast<int>(grad.size()) == d);
    const double h = 1e-3;
    for (int i = 0; i < d; ++i) {
      auto zp = z, zm = z;
      zp[static_cast<size_t>(i)] += static_cast<float>(h);
      zm[static_cast<size_t>(i)] -= static_cast<float>(h);
      double fd = (log_prob(w, b, V, d, zp, x) - log_prob(w, b, V, d, zm, x)) /
                  (2 * h);
      double denom = std::max({1e-6, std::abs(fd),
                               std::abs(static_cast<double>(
                                   grad[static_cast<size_t>(i)]))});
      CHECK(std::abs(grad[static_cast<size_t>(i)] - fd) / denom <= 1e-3);
    }
  }
}

TEST_CASE("gradient example: two tokens, sigmoid probabilities") {
  // V=2, d=1, W=[[1],[0]], b=0: p(x=0) = sigmoid(z). At z=1 the gradient
  // for x=0 is 1 - sigmoid(1) = sigmoid(-1) = 0.26894...
  std::vector<float> w = {1.0f, 0.0f};
  std::vector<float> b = {0.0f, 0.0f};
  std::vector<float> z = {1.0f};
  auto g = latent::grad_log_prob_head(w, b, 2, 1, z, 0);
  CHECK(g[0] == doctest::Approx(0.2689414).epsilon(1e-5));
  // bias-shift invariance: adding a constant to every bias changes nothing
  std::vector<float> b2 = {7.5f, 7.5f};
  auto g2 = latent::grad_log_prob_head(w, b2, 2, 1, z, 0);
  CHECK(g2[0] == doctest::Approx(g[0]).epsilon(1e-7));
}

TEST_CASE("truncate_fraction keeps max(1, ceil(rho T)) vectors") {
  LatentSequence z;
  for (int i = 0; i < 100; ++i) z.vectors.push_back({static_cast<float>(i)});
  z.origin_length = 100;
  CHECK(latent::truncate_fraction(z, 0.2).size() == 20);  // not 21
  CHECK(latent::truncate_fraction(z, 0.201).size() == 21);
  CHECK(latent::truncate_fraction(z, 1.0).size() == 100);
  CHECK(latent::truncate_fraction(z, 0.001).size() == 1);
  LatentSequence three;
  three.vectors = {{0.f}, {1.f}, {2.f}};
  three.origin_length = 3;
  CHECK(latent::truncate_fraction(three, 0.5).size() == 2);
}

TEST_CASE("init_from_cot latents decode back to the CoT") {
  auto cfg = tiny_config();
  Backend backend = Backend::from_archive(model::make_toy_model(9, cfg), cfg);
  Tokens context = {1, 4, 2};
  auto cot = latent::init_from_cot(backend, context, 8, {});
  REQUIRE_FALSE(cot.degenerate());
  CHECK(cot.z0.size() == cot.cot_tokens.size());
  CHECK(latent::decode_latents(backend, cot.z0) == cot.cot_tokens);
}

TEST_CASE("REINFORCE estimator is unbiased on an enumerable problem") {
  // Single position, V=3: estimator samples x ~ softmax(z), reward R(x).
  // Analytic gradient of E[R] = sum_x p_x R(x) (1{x} - p) is enumerable.
  auto cfg = tiny_config();
  cfg.vocab_size = 3;
  cfg.hidden_dim = 3;
  model::TensorArchive arch = model::make_blank_archive(cfg);
  arch.tensors["lm_head.weight"].data = {1.f, 0.f, 0.f,  //
                                         0.f, 1.f, 0.f,  //
                                         0.f, 0.f, 1.f};
  Backend backend = Backend::from_archive(arch, cfg);
  // identity LM head, zero bias: logits == z exactly
  const std::vector<float> probe = {0.3f, -0.1f, 0.4f};
  REQUIRE(backend.lm_logits(probe) == probe);

  LatentSequence z;
  z.vectors = {{0.5f, -0.2f, 0.1f}};
  z.origin_length = 1;
  const double R[3] = {-1.0, -0.25, 0.0};

  // analytic p and gradient
  double mx = 0.5;
  double e[3], Z = 0;
  for (int v = 0; v < 3; ++v) {
    e[v] = std::exp(static_cast<double>(z.vectors[0][static_cast<size_t>(v)]) -
                    mx);
    Z += e[v];
  }
  double p[3], expected[3] = {0, 0, 0};
  for (int v = 0; v < 3; ++v) p[v] = e[v] / Z;
  for (int x = 0; x < 3; ++x) {
    for (int j = 0; j < 3; ++j) {
      expected[j] += p[x] * R[x] * ((j == x ? 1.0 : 0.0) - p[j]);
    }
  }

  latent::SeekConfig scfg;
  scfg.num_samples = 100000;
  scfg.sample_seed = 7;
  auto reward_fn = [&](const Tokens& sample) {
    return R[sample.at(0)];
  };
  auto grad = latent::reinforce_gradient(backend, z, scfg, reward_fn);
  REQUIRE(grad.size() == 1);
  double norm_e = 0, norm_g = 0;
  for (int j = 0; j < 3; ++j) {
    norm_e += expected[j] * expected[j];
    double diff = grad[0][static_cast<size_t>(j)] - expected[j];
    norm_g += diff * diff;
  }
  CHECK(std::sqrt(norm_g) / std::sqrt(norm_e) <= 0.01);
}

TEST_CASE("updates are per-position local") {
  auto cfg = tiny_config();
  Backend backend = Backend::from_archive(model::make_toy_model(4, cfg), cfg);
  LatentSequence z;
  z.vectors = {{1.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f},
               {0.f, 1.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f}};
  z.origin_length = 2;
  std::vector<std::vector<float>> grad = {std::vector<float>(12, 0.0f),
                                          std::vector<float>(12, 1.0f)};
  auto state = latent::OptimizerState::for_sequence(
      z, latent::OptimizerKind::kSgd);
  latent::SeekConfig scfg;
  scfg.optimizer = latent::OptimizerKind::kSgd;
  scfg.eta = 0.5;
  auto before = z.vectors[0];
  latent::apply_update(z, grad, state, scfg);
  CHECK(z.vectors[0] == before);            // zero gradient -> untouched
  CHECK(z.vectors[1][0] == doctest::Approx(0.5f));  // ascent step
}

TEST_CASE("adam bias correction gives a full first step") {
  LatentSequence z;
  z.vectors = {{0.0f}};
  z.origin_length = 1;
  auto state = latent::OptimizerState::for_sequence(
      z, latent::OptimizerKind::kAdam);
  latent::SeekConfig scfg;
  scfg.optimizer = latent::OptimizerKind::kAdam;
  scfg.eta = 0.1;
  latent::apply_update(z, {{1.0f}}, state, scfg);
  // first bias-corrected Adam step is eta * g/|g| (up to eps)
  CHECK(z.vectors[0][0] == doctest::Approx(0.1f).epsilon(1e-3));
}

TEST_CASE("non-finite update raises DivergenceError with the position") {
  LatentSequence z;
  z.vectors = {{0.0f}, {0.0f}};
  z.origin_length = 2;
  auto state = latent::OptimizerState::for_sequence(
      z, latent::OptimizerKind::kSgd);
  latent::SeekConfig scfg;
  scfg.optimizer = latent::OptimizerKind::kSgd;
  std::vector<std::vector<float>> grad = {
      {0.0f}, {std::numeric_limits<float>::infinity()}};
  try {
    latent::apply_update(z, grad, state, scfg);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("seek config validation") {
  latent::SeekConfig cfg;
  cfg.validate();
  cfg.rho = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.rho = 0.2;
  cfg.eta = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.eta = 0.03;
  cfg.max_iterations = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
