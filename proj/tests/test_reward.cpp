#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "echo_suite.hpp"
#include "latentseek/reward.hpp"

using namespace latentseek;
using reward::RewardSignal;

namespace {

// Judge scripted per check name; infers the check from the prompt text.
class FakeJudge final : public reward::JudgeClient {
 public:
  std::map<std::string, bool> verdicts;
  std::string marker = "FINAL VERDICT: ";
  int calls = 0;

  std::string ask(const std::string&, const std::string& user) override {
    ++calls;
    for (const auto& [needle, key] :
         std::map<std::string, std::string>{
             {"PROBLEM INTERPRETATION", "understanding"},
             {"INDEPENDENT RECOMPUTATION", "calculation"},
             {"complete and final answer", "completeness"},
             {"Do NOT analyze the steps", "correctness"}}) {
      if (user.find(needle) != std::string::npos) {
        return "reasoning... " + marker +
               (verdicts.at(key) ? std::string("True") : std::string("False"));
      }
    }
    return "no idea";
  }
};

}  // namespace

TEST_CASE("self-reward grid over all 16 verdict combinations") {
  // weights correctness 1, understanding 1, calculation 2, completeness 2
  std::set<double> seen;
  for (int mask = 0; mask < 16; ++mask) {
    FakeJudge judge;
    judge.verdicts["correctness"] = mask & 1;
    judge.verdicts["understanding"] = mask & 2;
    judge.verdicts["calculation"] = mask & 4;
    judge.verdicts["completeness"] = mask & 8;
    RewardSignal sig = reward::self_reward("\\boxed{5}", "a question", judge,
                                           reward::SelfRewardOptions{});
    CHECK(judge.calls == 4);  // no short-circuit
    double failed = (mask & 1 ? 0 : 1) + (mask & 2 ? 0 : 1) +
                    (mask & 4 ? 0 : 2) + (mask & 8 ? 0 : 2);
    CHECK(sig.value == -failed / 6.0);  // exact sixths, no rounding
    seen.insert(sig.value);
    REQUIRE(sig.components.size() == 4);
  }
  CHECK(seen == std::set<double>{0.0, -1.0 / 6, -2.0 / 6, -3.0 / 6, -4.0 / 6,
                                 -5.0 / 6, -1.0});
}

TEST_CASE("unparseable judge output counts as a failed check") {
  FakeJudge judge;
  judge.verdicts = {{"correctness", true},
                    {"understanding", true},
                    {"calculation", true},
                    {"completeness", true}};
  judge.marker = "SOMETHING ELSE: ";  // marker never appears
  RewardSignal sig = reward::self_reward("\\boxed{5}", "q", judge,
                                         reward::SelfRewardOptions{});
  CHECK(sig.value == -1.0);
  for (const auto& c : sig.components) CHECK(c.parse_failure);
}

TEST_CASE("format check weight joins the denominator") {
  FakeJudge judge;
  judge.verdicts = {{"correctness", true},
                    {"understanding", true},
                    {"calculation", true},
                    {"completeness", true}};
  reward::SelfRewardOptions opts;
  opts.format_weight = 2.0;
  // all judge checks pass but there is no boxed answer: -2/8
  RewardSignal sig = reward::self_reward("no box here", "q", judge, opts);
  CHECK(sig.value == -2.0 / 8.0);
  REQUIRE(sig.components.size() == 5);
  CHECK(sig.components.back().name == "format");
  // with a box present everything passes
  RewardSignal ok = reward::self_reward("\\boxed{1}", "q", judge, opts);
  CHECK(ok.value == 0.0);
}

TEST_CASE("psrm yields only -1 and 0") {
  auto gold = reward::normalize_answer("42");
  auto hit = reward::normalize_answer("42.0");
  auto miss = reward::normalize_answer("41");
  CHECK(reward::psrm_reward(hit, gold).value == 0.0);
  CHECK(reward::psrm_reward(miss, gold).value == -1.0);
  CHECK(reward::psrm_reward(std::nullopt, gold).value == -1.0);
}

TEST_CASE("verdict parsing tolerates quotes, stars and spacing") {
  const std::string m = "FINAL VERDICT: ";
  CHECK(reward::parse_verdict("FINAL VERDICT: True", m).pass);
  CHECK(reward::parse_verdict("FINAL VERDICT: 'True'", m).pass);
  CHECK(reward::parse_verdict("FINAL VERDICT: **True**", m).pass);
  auto f = reward::parse_verdict("FINAL VERDICT: False", m);
  CHECK(f.parsed);
  CHECK_FALSE(f.pass);
  auto junk = reward::parse_verdict("FINAL VERDICT: maybe", m);
  CHECK_FALSE(junk.parsed);
  CHECK_FALSE(reward::parse_verdict("no marker at all", m).parsed);
  // first occurrence wins
  auto first = reward::parse_verdict("FINAL VERDICT: False ... FINAL VERDICT: True", m);
  CHECK(first.parsed);
  CHECK_FALSE(first.pass);
}

TEST_CASE("judge prompts load from assets with substitutions") {
  for (const std::string check :
       {"correctness", "understanding", "calculation", "completeness"}) {
    std::string p = reward::load_judge_prompt(check, "THE-QUESTION",
                                              "THE-SOLUTION", "MARK: ");
    CHECK(p.find("THE-QUESTION") != std::string::npos);
    CHECK(p.find("THE-SOLUTION") != std::string::npos);
    CHECK(p.find("MARK: ") != std::string::npos);
    CHECK(p.find("{VERA_ANSWER_SYMBOL}") == std::string::npos);
    CHECK(p.find("{problem}") == std::string::npos);
    CHECK(p.find("{solution}") == std::string::npos);
  }
  CHECK_THROWS_AS(reward::load_judge_prompt("nonsense", "q", "s", "m"),
                  ConfigError);
}

TEST_CASE("complete keeps a prefix that already ends in a stop token") {
  echo_suite::Suite s = echo_suite::build(1, 1);
  model::Tokenizer tok(s.config.vocab_size);
  model::Tokens ctx = harness::render_prompt(s.instances[0], tok,
                                             s.config.max_context);
  model::Tokens prefix = {tok.token_of('a'), tok.token_of('.')};
  auto done = reward::complete(s.backend, prefix, ctx, 50, s.stop_tokens);
  CHECK(done.tokens == prefix);
  CHECK_FALSE(done.truncated);
  // an open prefix is continued to the scripted stop
  model::Tokens open = tok.encode(s.spec.filler.substr(0, 5));
  auto cont = reward::complete(s.backend, open, ctx, 80, s.stop_tokens);
  CHECK(cont.tokens.size() > open.size());
  CHECK(cont.tokens.back() == tok.token_of('.'));
  std::string text = tok.decode(cont.tokens);
  CHECK(text.find("\\boxed{") != std::string::npos);
}

TEST_CASE("local self judge answers deterministically") {
  echo_suite::Suite s = echo_suite::build(1, 1);
  auto judge = reward::make_local_self_judge(s.backend, 16);
  std::string a = judge->ask("", "is the digit 3 the digit 3");
  std::string b = judge->ask("", "is the digit 3 the digit 3");
  CHECK(a == b);
  CHECK_FALSE(a.empty());
}
