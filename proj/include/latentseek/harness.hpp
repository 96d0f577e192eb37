#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "latentseek/seek.hpp"

namespace latentseek::harness {

using model::Backend;
using model::TokenId;
using model::Tokens;

enum class Method { kCot, kBon, kLatentSeek };
enum class RewardKind { kSelf, kPsrm };

std::string to_string(Method m);
std::string to_string(RewardKind r);
Method method_from_string(const std::string& s);
RewardKind reward_from_string(const std::string& s);

/// Everything one benchmark run needs besides the model and the dataset.
struct RunConfig {
  Method method = Method::kLatentSeek;
  RewardKind reward = RewardKind::kSelf;
  latent::SeekConfig seek;
  int bon_n = 8;
  double temperature = 0.7;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_path;  // empty: no persistence
  std::set<TokenId> stop_tokens;
  std::optional<reward::JudgeEndpointConfig> judge;  // absent: local self-judge
  int judge_max_new = 64;

  void validate(const std::vector<ProblemInstance>& dataset) const;
  nlohmann::json to_json() const;
};

/// One persisted benchmark result line.
struct RunRecord {
  std::string id;
  double reward = -1.0;
  std::string answer;
  bool has_answer = false;
  bool correct = false;
  int update_iterations = 0;
  std::string stop_reason;
  bool degenerate = false;
  int cot_length = 0;     // tokens in the iteration-0 chain of thought
  Tokens output_tokens;   // final returned output (prefix + completion)

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

struct RunFailure {
  std::string id;
  std::string error;
};

struct RunOutput {
  std::vector<RunRecord> records;   // dataset order, failures excluded
  std::vector<RunFailure> failures;
};

struct MetricsReport {
  double accuracy = 0.0;
  double avg_update_iterations = 0.0;
  double length_ratio = 0.0;   // mean |output| / |CoT| over non-degenerate
  int num_records = 0;
  int num_degenerate = 0;      // excluded from length_ratio, counted wrong

  nlohmann::json to_json() const;
};

struct CurveRow {
  double x = 0.0;  // K or rho
  double accuracy = 0.0;
  double avg_update_iterations = 0.0;
};

// JSON Lines with fields id, question, answer and optional "format"
// ("boxed" | "json"). Errors carry the 1-based line number; ids must be
// unique.
std::vector<ProblemInstance> load_dataset(const std::string& path);

// Runs the configured method over every instance with a bounded worker
// pool. Each record is appended to cfg.out_path as it completes (so a
// killed run resumes by id); on completion the file is rewritten in
// dataset order, making the final bytes independent of scheduling.
RunOutput run_benchmark(const Backend& backend,
                        const std::vector<ProblemInstance>& dataset,
                        const RunConfig& cfg);

// Reads a results file back: header, records, and failure lines.
RunOutput load_records(const std::string& path);

MetricsReport compute_metrics(const std::vector<RunRecord>& records);

// One K_max run per instance; every smaller K is replayed from the same
// trace, so curve points agree with run_benchmark at that K exactly.
std::vector<CurveRow> iteration_sweep(const Backend& backend,
                                      const std::vector<ProblemInstance>& dataset,
                                      const RunConfig& cfg,
                                      const std::vector<int>& k_grid);

// One full run per rho.
std::vector<CurveRow> rho_sweep(const Backend& backend,
                                const std::vector<ProblemInstance>& dataset,
                                const RunConfig& cfg,
                                const std::vector<double>& rho_grid);

// Per-position counts over the first n output tokens; only records with
// at least n tokens contribute, so each position's counts share one total.
std::vector<std::map<TokenId, int>> token_stats(
    const std::vector<RunRecord>& records, int n);

std::string curve_csv(const std::string& x_name,
                      const std::vector<CurveRow>& rows);
std::string token_stats_csv(const std::vector<std::map<TokenId, int>>& stats,
                            const model::Tokenizer& tokenizer);

}  // namespace latentseek::harness
