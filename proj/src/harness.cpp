#include "latentseek/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace latentseek::harness {

std::string to_string(Method m) {
  switch (m) {
    case Method::kCot: return "cot";
    case Method::kBon: return "bon";
    case Method::kLatentSeek: return "latentseek";
  }
  return "unknown";
}

std::string to_string(RewardKind r) {
  return r == RewardKind::kSelf ? "self" : "psrm";
}

Method method_from_string(const std::string& s) {
  if (s == "cot") return Method::kCot;
  if (s == "bon") return Method::kBon;
  if (s == "latentseek") return Method::kLatentSeek;
  throw ConfigError("unknown method \"" + s + "\" (cot | bon | latentseek)");
}

RewardKind reward_from_string(const std::string& s) {
  if (s == "self") return RewardKind::kSelf;
  if (s == "psrm") return RewardKind::kPsrm;
  throw ConfigError("unknown reward \"" + s + "\" (self | psrm)");
}

void RunConfig::validate(const std::vector<ProblemInstance>& dataset) const {
  seek.validate();
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (method == Method::kBon && bon_n < 1) {
    throw ConfigError("best-of-N requires N >= 1");
  }
  if (temperature < 0) throw ConfigError("temperature must be >= 0");
  if (reward == RewardKind::kPsrm) {
    for (const auto& inst : dataset) {
      if (!inst.has_gold()) {
        throw ConfigError("PSRM requires gold answers; instance \"" + inst.id +
                          "\" has none");
      }
    }
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {
      {"method", to_string(method)},
      {"reward", to_string(reward)},
      {"eta", seek.eta},
      {"k_max", seek.max_iterations},
      {"tau", seek.tau},
      {"rho", seek.rho},
      {"optimizer",
       seek.optimizer == latent::OptimizerKind::kAdam ? "adam" : "sgd"},
      {"num_samples", seek.num_samples},
      {"max_new_tokens", seek.max_new_tokens},
      {"sample_seed", seek.sample_seed},
      {"bon_n", bon_n},
      {"temperature", temperature},
      {"seed", seed},
      {"stop_tokens", std::vector<TokenId>(stop_tokens.begin(),
                                           stop_tokens.end())},
      {"judge", judge ? judge->base_url + judge->path : "local"},
  };
  return j;
}

nlohmann::json RunRecord::to_json() const {
  return nlohmann::json{{"id", id},
                        {"reward", reward},
                        {"answer", answer},
                        {"has_answer", has_answer},
                        {"correct", correct},
                        {"update_iterations", update_iterations},
                        {"stop_reason", stop_reason},
                        {"degenerate", degenerate},
                        {"cot_length", cot_length},
                        {"output_tokens", output_tokens}};
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  r.id = j.at("id").get<std::string>();
  r.reward = j.at("reward").get<double>();
  r.answer = j.at("answer").get<std::string>();
  r.has_answer = j.at("has_answer").get<bool>();
  r.correct = j.at("correct").get<bool>();
  r.update_iterations = j.at("update_iterations").get<int>();
  r.stop_reason = j.at("stop_reason").get<std::string>();
  r.degenerate = j.at("degenerate").get<bool>();
  r.cot_length = j.at("cot_length").get<int>();
  r.output_tokens = j.at("output_tokens").get<Tokens>();
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  return nlohmann::json{{"accuracy", accuracy},
                        {"avg_update_iterations", avg_update_iterations},
                        {"length_ratio", length_ratio},
                        {"num_records", num_records},
                        {"num_degenerate", num_degenerate}};
}

// ---------------------------------------------------------------------------
// dataset
// ---------------------------------------------------------------------------

std::vector<ProblemInstance> load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DatasetError("cannot open dataset \"" + path + "\"");
  std::vector<ProblemInstance> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw DatasetError("dataset \"" + path + "\" line " +
                         std::to_string(lineno) + ": malformed JSON");
    }
    ProblemInstance inst;
    try {
      inst.id = j.at("id").get<std::string>();
      inst.question = j.at("question").get<std::string>();
      if (j.contains("answer") && !j["answer"].is_null()) {
        inst.gold_answer = j["answer"].is_string()
                               ? j["answer"].get<std::string>()
                               : j["answer"].dump();
      }
      if (j.contains("format")) {
        inst.prompt_template =
            reward::prompt_format_from_string(j["format"].get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("dataset \"" + path + "\" line " +
                         std::to_string(lineno) + ": " + e.what());
    }
    if (inst.id.empty() || inst.question.empty()) {
      throw DatasetError("dataset \"" + path + "\" line " +
                         std::to_string(lineno) +
                         ": id and question are required");
    }
    if (!seen.insert(inst.id).second) {
      throw DatasetError("dataset \"" + path + "\" line " +
                         std::to_string(lineno) + ": duplicate id \"" +
                         inst.id + "\"");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

// ---------------------------------------------------------------------------
// benchmark runs
// ---------------------------------------------------------------------------

namespace {

bool matches_gold(const std::string& answer, const ProblemInstance& inst) {
  if (answer.empty() || !inst.has_gold()) return false;
  return reward::answers_match(reward::normalize_answer(answer),
                               reward::normalize_answer(inst.gold_answer));
}

RunRecord record_from_result(const ProblemInstance& inst,
                             const seek::SeekResult& res,
                             const model::Tokenizer& tokenizer) {
  RunRecord rec;
  rec.id = inst.id;
  rec.reward = res.reward;
  rec.answer = res.answer;
  rec.has_answer = res.has_answer;
  rec.correct = res.has_answer && matches_gold(res.answer, inst);
  rec.update_iterations = res.update_iterations;
  rec.stop_reason = seek::to_string(res.stop_reason);
  rec.degenerate = res.stop_reason == seek::StopReason::kDegenerateCot;
  rec.output_tokens = tokenizer.encode(res.completion);
  if (!res.trace.records.empty()) {
    rec.cot_length =
        static_cast<int>(res.trace.records.front().prefix_tokens.size());
  }
  if (res.stop_reason == seek::StopReason::kDegenerateCot) rec.cot_length = 0;
  return rec;
}

seek::SeekResult run_instance(const Backend& backend,
                              const ProblemInstance& inst,
                              const RunConfig& cfg,
                              seek::RewardBackend& reward_backend) {
  switch (cfg.method) {
    case Method::kCot:
      return seek::cot_baseline(backend, inst, cfg.seek, reward_backend,
                                cfg.stop_tokens);
    case Method::kBon:
      return seek::best_of_n(backend, inst, cfg.seek, cfg.bon_n,
                             cfg.temperature, cfg.seed, reward_backend,
                             cfg.stop_tokens);
    case Method::kLatentSeek:
      return seek::latent_seek(backend, inst, cfg.seek, reward_backend,
                               cfg.stop_tokens);
  }
  throw ConfigError("unreachable method");
}

std::unique_ptr<seek::RewardBackend> make_reward_backend(
    const Backend& backend, const RunConfig& cfg,
    std::unique_ptr<reward::JudgeClient>& judge_out) {
  if (cfg.reward == RewardKind::kPsrm) {
    return std::make_unique<seek::PsrmRewardBackend>();
  }
  judge_out = cfg.judge ? reward::make_remote_judge(*cfg.judge)
                        : reward::make_local_self_judge(backend,
                                                        cfg.judge_max_new);
  return std::make_unique<seek::SelfRewardBackend>(*judge_out,
                                                   reward::SelfRewardOptions{});
}

// Runs fn(i) for i in [0, n) on up to jobs threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  int workers = std::min(jobs, n);
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct ResumeState {
  std::map<std::string, RunRecord> records;
  std::map<std::string, std::string> failures;
};

ResumeState read_resume(const std::string& path, const nlohmann::json& header) {
  ResumeState st;
  std::ifstream is(path);
  if (!is) return st;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DatasetError("results file \"" + path + "\" line " +
                         std::to_string(lineno) + ": malformed JSON");
    }
    if (lineno == 1) {
      if (j != header) {
        throw ConfigError("results file \"" + path +
                          "\" was produced by a different configuration; "
                          "refusing to resume");
      }
      continue;
    }
    if (j.contains("error")) {
      st.failures[j.at("id").get<std::string>()] =
          j.at("error").get<std::string>();
    } else {
      RunRecord r = RunRecord::from_json(j);
      st.records[r.id] = std::move(r);
    }
  }
  return st;
}

}  // namespace

RunOutput run_benchmark(const Backend& backend,
                        const std::vector<ProblemInstance>& dataset,
                        const RunConfig& cfg) {
  cfg.validate(dataset);
  nlohmann::json header = {{"schema", 1}, {"config", cfg.to_json()}};

  ResumeState done;
  const bool persist = !cfg.out_path.empty();
  if (persist) done = read_resume(cfg.out_path, header);

  std::unique_ptr<reward::JudgeClient> judge;
  auto reward_backend = make_reward_backend(backend, cfg, judge);
  model::Tokenizer tokenizer(backend.config().vocab_size);

  const int n = static_cast<int>(dataset.size());
  std::vector<std::optional<RunRecord>> slots(static_cast<size_t>(n));
  std::vector<std::optional<std::string>> errors(static_cast<size_t>(n));

  std::mutex io_mutex;
  std::ofstream appender;
  if (persist) {
    bool fresh = done.records.empty() && done.failures.empty();
    appender.open(cfg.out_path, fresh ? std::ios::trunc : std::ios::app);
    if (!appender) {
      throw ConfigError("cannot open results file \"" + cfg.out_path + "\"");
    }
    if (fresh) appender << header.dump() << "\n" << std::flush;
  }

  parallel_for(n, cfg.jobs, [&](int i) {
    const ProblemInstance& inst = dataset[static_cast<size_t>(i)];
    if (auto it = done.records.find(inst.id); it != done.records.end()) {
      slots[static_cast<size_t>(i)] = it->second;
      return;
    }
    if (auto it = done.failures.find(inst.id); it != done.failures.end()) {
      errors[static_cast<size_t>(i)] = it->second;
      return;
    }
    try {
      seek::SeekResult res = run_instance(backend, inst, cfg, *reward_backend);
      RunRecord rec = record_from_result(inst, res, tokenizer);
      if (persist) {
        std::lock_guard<std::mutex> lock(io_mutex);
        appender << rec.to_json().dump() << "\n" << std::flush;
      }
      slots[static_cast<size_t>(i)] = std::move(rec);
    } catch (const std::exception& e) {
      if (persist) {
        std::lock_guard<std::mutex> lock(io_mutex);
        appender << nlohmann::json{{"id", inst.id}, {"error", e.what()}}.dump()
                 << "\n"
                 << std::flush;
      }
      errors[static_cast<size_t>(i)] = e.what();
    }
  });
  if (persist) appender.close();

  RunOutput out;
  for (int i = 0; i < n; ++i) {
    if (slots[static_cast<size_t>(i)]) {
      out.records.push_back(*slots[static_cast<size_t>(i)]);
    } else if (errors[static_cast<size_t>(i)]) {
      out.failures.push_back(
          {dataset[static_cast<size_t>(i)].id, *errors[static_cast<size_t>(i)]});
    }
  }

  if (persist) {
    // normalize to dataset order so the final bytes are schedule-independent
    std::ofstream os(cfg.out_path, std::ios::trunc);
    os << header.dump() << "\n";
    size_t ri = 0, fi = 0;
    for (const auto& inst : dataset) {
      if (ri < out.records.size() && out.records[ri].id == inst.id) {
        os << out.records[ri++].to_json().dump() << "\n";
      } else if (fi < out.failures.size() && out.failures[fi].id == inst.id) {
        os << nlohmann::json{{"id", out.failures[fi].id},
                             {"error", out.failures[fi].error}}
                  .dump()
           << "\n";
        ++fi;
      }
    }
  }
  return out;
}

RunOutput load_records(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DatasetError("cannot open results file \"" + path + "\"");
  RunOutput out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DatasetError("results file \"" + path + "\" line " +
                         std::to_string(lineno) + ": malformed JSON");
    }
    if (lineno == 1 && j.contains("schema")) continue;
    if (j.contains("error")) {
      out.failures.push_back({j.at("id").get<std::string>(),
                              j.at("error").get<std::string>()});
    } else {
      out.records.push_back(RunRecord::from_json(j));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// metrics and sweeps
// ---------------------------------------------------------------------------

MetricsReport compute_metrics(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ConfigError("compute_metrics: no records");
  MetricsReport m;
  m.num_records = static_cast<int>(records.size());
  double correct = 0.0, iters = 0.0, ratio = 0.0;
  int ratio_n = 0;
  for (const auto& r : records) {
    if (r.correct) correct += 1.0;
    iters += r.update_iterations;
    if (r.degenerate || r.cot_length <= 0) {
      ++m.num_degenerate;
      continue;
    }
    ratio += static_cast<double>(r.output_tokens.size()) /
             static_cast<double>(r.cot_length);
    ++ratio_n;
  }
  m.accuracy = correct / m.num_records;
  m.avg_update_iterations = iters / m.num_records;
  m.length_ratio = ratio_n > 0 ? ratio / ratio_n : 0.0;
  return m;
}

std::vector<CurveRow> iteration_sweep(const Backend& backend,
                                      const std::vector<ProblemInstance>& dataset,
                                      const RunConfig& cfg,
                                      const std::vector<int>& k_grid) {
  if (k_grid.empty()) throw ConfigError("iteration sweep: empty K grid");
  for (size_t i = 0; i < k_grid.size(); ++i) {
    if (k_grid[i] < 0 || (i > 0 && k_grid[i] <= k_grid[i - 1])) {
      throw ConfigError("iteration sweep: K grid must be strictly increasing "
                        "and non-negative");
    }
  }
  RunConfig full = cfg;
  full.method = Method::kLatentSeek;
  full.seek.max_iterations = k_grid.back();
  full.validate(dataset);

  std::unique_ptr<reward::JudgeClient> judge;
  auto reward_backend = make_reward_backend(backend, full, judge);

  const int n = static_cast<int>(dataset.size());
  std::vector<seek::SeekTrace> traces(static_cast<size_t>(n));
  parallel_for(n, full.jobs, [&](int i) {
    traces[static_cast<size_t>(i)] =
        seek::latent_seek(backend, dataset[static_cast<size_t>(i)], full.seek,
                          *reward_backend, full.stop_tokens)
            .trace;
  });

  std::vector<CurveRow> rows;
  for (int k : k_grid) {
    CurveRow row;
    row.x = k;
    double correct = 0.0, iters = 0.0;
    for (int i = 0; i < n; ++i) {
      seek::SeekResult s = seek::summarize_at_budget(
          traces[static_cast<size_t>(i)], k, full.seek.tau);
      if (s.has_answer &&
          matches_gold(s.answer, dataset[static_cast<size_t>(i)])) {
        correct += 1.0;
      }
      iters += s.update_iterations;
    }
    row.accuracy = correct / n;
    row.avg_update_iterations = iters / n;
    rows.push_back(row);
  }
  return rows;
}

std::vector<CurveRow> rho_sweep(const Backend& backend,
                                const std::vector<ProblemInstance>& dataset,
                                const RunConfig& cfg,
                                const std::vector<double>& rho_grid) {
  if (rho_grid.empty()) throw ConfigError("rho sweep: empty grid");
  std::vector<CurveRow> rows;
  for (double rho : rho_grid) {
    if (rho <= 0.0 || rho > 1.0) {
      throw ConfigError("rho sweep: each rho must lie in (0, 1]");
    }
    RunConfig one = cfg;
    one.method = Method::kLatentSeek;
    one.seek.rho = rho;
    one.out_path.clear();
    RunOutput out = run_benchmark(backend, dataset, one);
    MetricsReport m = compute_metrics(out.records);
    rows.push_back({rho, m.accuracy, m.avg_update_iterations});
  }
  return rows;
}

std::vector<std::map<TokenId, int>> token_stats(
    const std::vector<RunRecord>& records, int n) {
  if (n < 1) throw ConfigError("token stats: n must be >= 1");
  std::vector<std::map<TokenId, int>> stats(static_cast<size_t>(n));
  for (const auto& r : records) {
    if (static_cast<int>(r.output_tokens.size()) < n) continue;
    for (int p = 0; p < n; ++p) {
      ++stats[static_cast<size_t>(p)][r.output_tokens[static_cast<size_t>(p)]];
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string curve_csv(const std::string& x_name,
                      const std::vector<CurveRow>& rows) {
  std::ostringstream os;
  os << "# schema 1\n" << x_name << ",accuracy,avg_update_iterations\n";
  for (const auto& r : rows) {
    os << fmt_double(r.x) << ',' << fmt_double(r.accuracy) << ','
       << fmt_double(r.avg_update_iterations) << "\n";
  }
  return os.str();
}

std::string token_stats_csv(const std::vector<std::map<TokenId, int>>& stats,
                            const model::Tokenizer& tokenizer) {
  std::ostringstream os;
  os << "# schema 1\nposition,token_id,token,count\n";
  for (size_t p = 0; p < stats.size(); ++p) {
    // most frequent first; ties by token id
    std::vector<std::pair<TokenId, int>> sorted(stats[p].begin(),
                                                stats[p].end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) {
                       if (a.second != b.second) return a.second > b.second;
                       return a.first < b.first;
                     });
    for (const auto& [tok, count] : sorted) {
      os << p << ',' << tok << ',' << csv_quote(tokenizer.decode({tok}))
         << ',' << count << "\n";
    }
  }
  return os.str();
}

}  // namespace latentseek::harness
