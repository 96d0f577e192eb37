#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "echo_suite.hpp"

using namespace latentseek;

namespace {

bool same_result(const seek::SeekResult& a, const seek::SeekResult& b) {
  return a.completion == b.completion && a.answer == b.answer &&
         a.has_answer == b.has_answer && a.reward == b.reward &&
         a.update_iterations == b.update_iterations &&
         a.stop_reason == b.stop_reason;
}

}  // namespace

TEST_CASE("K=0 latent_seek is byte-identical to cot_baseline") {
  echo_suite::Suite s = echo_suite::build(6, 3);
  auto cfg = echo_suite::seek_config();
  cfg.max_iterations = 0;
  seek::PsrmRewardBackend psrm;
  for (const auto& inst : s.instances) {
    auto a = seek::latent_seek(s.backend, inst, cfg, psrm, s.stop_tokens);
    auto b = seek::cot_baseline(s.backend, inst, cfg, psrm, s.stop_tokens);
    CHECK(same_result(a, b));
    CHECK(a.update_iterations == 0);
  }
}

TEST_CASE("initial reward above tau stops before any update") {
  echo_suite::Suite s = echo_suite::build(6, 6);  // all decoys correct
  auto cfg = echo_suite::seek_config();           // K=25 available
  seek::PsrmRewardBackend psrm;
  for (const auto& inst : s.instances) {
    auto a = seek::latent_seek(s.backend, inst, cfg, psrm, s.stop_tokens);
    auto b = seek::cot_baseline(s.backend, inst, cfg, psrm, s.stop_tokens);
    CHECK(a.update_iterations == 0);
    CHECK(a.stop_reason == seek::StopReason::kThreshold);
    CHECK(same_result(a, b));
    CHECK(a.reward == 0.0);
  }
}

TEST_CASE("degenerate CoT is reported, not optimized") {
  echo_suite::Suite s = echo_suite::build(1, 1);
  // a context already at the model's limit cannot generate anything
  model::Tokens full_ctx(static_cast<size_t>(s.config.max_context), 0);
  CHECK_THROWS_AS(
      latent::init_from_cot(s.backend, full_ctx, 16, s.stop_tokens),
      ContextOverflowError);

  // summarize treats a degenerate trace as its own terminal outcome
  seek::SeekTrace trace;
  trace.degenerate = true;
  seek::IterationRecord rec;
  rec.k = 0;
  rec.reward = -1.0;
  trace.records.push_back(rec);
  auto res = seek::summarize_at_budget(trace, 10, -0.5);
  CHECK(res.stop_reason == seek::StopReason::kDegenerateCot);
  CHECK(res.update_iterations == 0);
  CHECK(res.reward == -1.0);
  CHECK_FALSE(res.has_answer);
}

TEST_CASE("best_of_n with N=1 and temperature 0 equals cot_baseline") {
  echo_suite::Suite s = echo_suite::build(8, 4);
  auto cfg = echo_suite::seek_config();
  seek::PsrmRewardBackend psrm;
  for (const auto& inst : s.instances) {
    auto bon = seek::best_of_n(s.backend, inst, cfg, 1, 0.0, 123, psrm,
                               s.stop_tokens);
    auto cot = seek::cot_baseline(s.backend, inst, cfg, psrm, s.stop_tokens);
    CHECK(bon.completion == cot.completion);
    CHECK(bon.answer == cot.answer);
    CHECK(bon.reward == cot.reward);
    CHECK(bon.update_iterations == 0);
  }
}

TEST_CASE("best_of_n is seed deterministic and picks the max reward") {
  echo_suite::Suite s = echo_suite::build(4, 0);  // all decoys wrong
  auto cfg = echo_suite::seek_config();
  seek::PsrmRewardBackend psrm;
  const auto& inst = s.instances[0];
  auto a = seek::best_of_n(s.backend, inst, cfg, 4, 0.8, 5, psrm,
                           s.stop_tokens);
  auto b = seek::best_of_n(s.backend, inst, cfg, 4, 0.8, 5, psrm,
                           s.stop_tokens);
  CHECK(a.completion == b.completion);
  CHECK(a.reward == b.reward);
  REQUIRE(a.trace.records.size() == 4);
  for (const auto& r : a.trace.records) CHECK(r.reward <= a.reward);
}

TEST_CASE("seek solves wrong-decoy echo instances and stops at threshold") {
  echo_suite::Suite s = echo_suite::build(34, 30);
  auto cfg = echo_suite::seek_config();
  seek::PsrmRewardBackend psrm;
  for (int i = 30; i < 34; ++i) {
    const auto& inst = s.instances[static_cast<size_t>(i)];
    auto res = seek::latent_seek(s.backend, inst, cfg, psrm, s.stop_tokens);
    CHECK(res.stop_reason == seek::StopReason::kThreshold);
    CHECK(res.reward == 0.0);
    CHECK(res.answer == inst.gold_answer);
    CHECK(res.update_iterations >= 1);
    // trace rewards: -1 until the solving iteration, then 0
    for (const auto& r : res.trace.records) {
      CHECK((r.reward == -1.0 || r.reward == 0.0));
    }
    CHECK(res.trace.records.back().reward == 0.0);
  }
}

TEST_CASE("summarize_at_budget replays the stopping rule over one trace") {
  echo_suite::Suite s = echo_suite::build(34, 30);
  auto cfg = echo_suite::seek_config();  // K=25
  seek::PsrmRewardBackend psrm;
  const auto& inst = s.instances[31];
  auto full = seek::latent_seek(s.backend, inst, cfg, psrm, s.stop_tokens);
  REQUIRE(full.stop_reason == seek::StopReason::kThreshold);
  const int solve_k = full.update_iterations;
  REQUIRE(solve_k > 1);

  // a budget below the solve point: budget stop, best record, K updates
  auto below = seek::summarize_at_budget(full.trace, solve_k - 1, cfg.tau);
  CHECK(below.stop_reason == seek::StopReason::kBudget);
  CHECK(below.update_iterations == solve_k - 1);
  CHECK(below.reward == -1.0);

  // at or above the solve point: identical to the live run
  for (int budget : {solve_k, solve_k + 3, cfg.max_iterations}) {
    auto at = seek::summarize_at_budget(full.trace, budget, cfg.tau);
    CHECK(at.stop_reason == seek::StopReason::kThreshold);
    CHECK(at.update_iterations == solve_k);
    CHECK(at.completion == full.completion);
    CHECK(at.reward == 0.0);
  }

  // and the replay below budget matches an actual run at that budget
  auto cfg_small = cfg;
  cfg_small.max_iterations = solve_k - 1;
  auto live = seek::latent_seek(s.backend, inst, cfg_small, psrm,
                                s.stop_tokens);
  CHECK(same_result(live, below));
}

TEST_CASE("trace serializes to JSON lines with a schema header") {
  echo_suite::Suite s = echo_suite::build(2, 2);
  auto cfg = echo_suite::seek_config();
  seek::PsrmRewardBackend psrm;
  auto res = seek::cot_baseline(s.backend, s.instances[0], cfg, psrm,
                                s.stop_tokens);
  std::string jsonl = res.trace.to_jsonl();
  std::istringstream is(jsonl);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    auto j = nlohmann::json::parse(line);
    if (n == 0) {
      CHECK(j.at("schema") == 1);
    } else {
      CHECK(j.contains("k"));
      CHECK(j.contains("reward"));
    }
    ++n;
  }
  CHECK(n == 1 + static_cast<int>(res.trace.records.size()));
}
