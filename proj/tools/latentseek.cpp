/**
 * Command-line entry point: benchmark runs, sweeps, metrics, token
 * statistics, and toy-model construction.
 *
 * Exit codes: 0 success, 1 configuration/usage error, 2 run finished but
 * some instances failed.
 */

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "latentseek/harness.hpp"
#include "latentseek/toy.hpp"

namespace ls = latentseek;

namespace {

struct CommonOpts {
  std::string model_path;
  std::string dataset_path;
  std::string method = "latentseek";
  std::string reward = "psrm";
  double eta = 0.03;
  int k_max = 10;
  double tau = std::numeric_limits<double>::quiet_NaN();  // reward-dependent
  double rho = 0.2;
  int bon_n = 8;
  double temperature = 0.7;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_path;
  std::string stop_chars = ".";
  std::string judge_url;
  int max_new_tokens = 256;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--model", o.model_path, "weight archive path")->required();
  cmd->add_option("--dataset", o.dataset_path, "JSONL dataset path")
      ->required();
  cmd->add_option("--method", o.method, "cot | bon | latentseek");
  cmd->add_option("--reward", o.reward, "self | psrm");
  cmd->add_option("--eta", o.eta, "learning rate");
  cmd->add_option("--k-max", o.k_max, "update iteration budget K");
  cmd->add_option("--tau", o.tau,
                  "stop threshold (default -0.2 self, -0.5 psrm)");
  cmd->add_option("--rho", o.rho, "optimized latent fraction");
  cmd->add_option("--bon-n", o.bon_n, "best-of-N sample count");
  cmd->add_option("--temperature", o.temperature, "BoN sampling temperature");
  cmd->add_option("--seed", o.seed, "sampling seed");
  cmd->add_option("--jobs", o.jobs, "parallel instances");
  cmd->add_option("--out", o.out_path, "output file path");
  cmd->add_option("--stop-chars", o.stop_chars, "stop-token characters");
  cmd->add_option("--judge-url", o.judge_url,
                  "remote judge base URL (self reward; default local)");
  cmd->add_option("--max-new-tokens", o.max_new_tokens, "generation budget");
}

ls::harness::RunConfig build_config(const CommonOpts& o,
                                    const ls::model::Backend& backend) {
  ls::harness::RunConfig cfg;
  cfg.method = ls::harness::method_from_string(o.method);
  cfg.reward = ls::harness::reward_from_string(o.reward);
  cfg.seek.eta = o.eta;
  cfg.seek.max_iterations = o.k_max;
  cfg.seek.tau = std::isnan(o.tau)
                     ? (cfg.reward == ls::harness::RewardKind::kPsrm ? -0.5
                                                                     : -0.2)
                     : o.tau;
  cfg.seek.rho = o.rho;
  cfg.seek.max_new_tokens = o.max_new_tokens;
  cfg.seek.sample_seed = o.seed;
  cfg.bon_n = o.bon_n;
  cfg.temperature = o.temperature;
  cfg.seed = o.seed;
  cfg.jobs = o.jobs;
  cfg.out_path = o.out_path;
  ls::model::Tokenizer tokenizer(backend.config().vocab_size);
  for (char c : o.stop_chars) cfg.stop_tokens.insert(tokenizer.token_of(c));
  if (!o.judge_url.empty()) {
    ls::reward::JudgeEndpointConfig judge;
    judge.base_url = o.judge_url;
    cfg.judge = judge;
  }
  return cfg;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ls::ConfigError("cannot write output file \"" + path + "\"");
  os << text;
}

std::vector<int> parse_int_grid(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> parse_double_grid(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int cmd_run(const CommonOpts& o) {
  ls::model::Backend backend = ls::model::Backend::load(o.model_path);
  auto dataset = ls::harness::load_dataset(o.dataset_path);
  ls::harness::RunConfig cfg = build_config(o, backend);
  ls::harness::RunOutput out = ls::harness::run_benchmark(backend, dataset, cfg);
  if (!out.records.empty()) {
    ls::harness::MetricsReport m = ls::harness::compute_metrics(out.records);
    std::cout << m.to_json().dump(2) << "\n";
  }
  if (!out.failures.empty()) {
    std::cerr << out.failures.size() << " instance(s) failed:\n";
    for (const auto& f : out.failures) {
      std::cerr << "  " << f.id << ": " << f.error << "\n";
    }
    return 2;
  }
  return 0;
}

int cmd_sweep_k(const CommonOpts& o, const std::string& grid_csv) {
  ls::model::Backend backend = ls::model::Backend::load(o.model_path);
  auto dataset = ls::harness::load_dataset(o.dataset_path);
  ls::harness::RunConfig cfg = build_config(o, backend);
  cfg.out_path.clear();
  auto rows = ls::harness::iteration_sweep(backend, dataset, cfg,
                                           parse_int_grid(grid_csv));
  write_or_print(o.out_path, ls::harness::curve_csv("k", rows));
  return 0;
}

int cmd_sweep_rho(const CommonOpts& o, const std::string& grid_csv) {
  ls::model::Backend backend = ls::model::Backend::load(o.model_path);
  auto dataset = ls::harness::load_dataset(o.dataset_path);
  ls::harness::RunConfig cfg = build_config(o, backend);
  cfg.out_path.clear();
  auto rows = ls::harness::rho_sweep(backend, dataset, cfg,
                                     parse_double_grid(grid_csv));
  write_or_print(o.out_path, ls::harness::curve_csv("rho", rows));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time latent optimization engine and benchmark harness"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "run a benchmark");
  add_common(run, run_opts);

  CommonOpts sk_opts;
  std::string k_grid = "0,1,5,10,25";
  CLI::App* sweep_k =
      app.add_subcommand("sweep-k", "per-K accuracy curve (CSV)");
  add_common(sweep_k, sk_opts);
  sweep_k->add_option("--k-grid", k_grid, "comma-separated K values");

  CommonOpts sr_opts;
  std::string rho_grid = "0.1,0.2,0.4,0.8";
  CLI::App* sweep_rho =
      app.add_subcommand("sweep-rho", "per-rho accuracy table (CSV)");
  add_common(sweep_rho, sr_opts);
  sweep_rho->add_option("--rho-grid", rho_grid, "comma-separated rho values");

  std::string metrics_records;
  CLI::App* metrics =
      app.add_subcommand("metrics", "recompute metrics from a results file");
  metrics->add_option("--records", metrics_records, "results JSONL path")
      ->required();

  std::string ts_records, ts_out;
  int ts_n = 3, ts_vocab = 256;
  CLI::App* token_stats =
      app.add_subcommand("token-stats",
                         "first-n output token frequencies (CSV)");
  token_stats->add_option("--records", ts_records, "results JSONL path")
      ->required();
  token_stats->add_option("--n", ts_n, "token positions to count");
  token_stats->add_option("--vocab", ts_vocab, "tokenizer vocabulary size");
  token_stats->add_option("--out", ts_out, "output CSV path");

  std::string mk_out;
  std::uint64_t mk_seed = 0;
  int mk_vocab = 64, mk_dim = 32, mk_layers = 1, mk_heads = 1, mk_ctx = 256;
  bool mk_echo = false, mk_final_norm = false;
  CLI::App* make_toy =
      app.add_subcommand("make-toy-model", "write a toy weight archive");
  make_toy->add_option("--out", mk_out, "archive path")->required();
  make_toy->add_option("--seed", mk_seed, "weight seed");
  make_toy->add_option("--vocab", mk_vocab, "vocabulary size");
  make_toy->add_option("--dim", mk_dim, "hidden dimension");
  make_toy->add_option("--layers", mk_layers, "transformer layers");
  make_toy->add_option("--heads", mk_heads, "attention heads");
  make_toy->add_option("--context", mk_ctx, "context length");
  make_toy->add_flag("--final-norm", mk_final_norm, "apply a final RMSNorm");
  make_toy->add_flag("--echo", mk_echo,
                     "hand-constructed echo model (ignores --dim/--layers)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (sweep_k->parsed()) return cmd_sweep_k(sk_opts, k_grid);
    if (sweep_rho->parsed()) return cmd_sweep_rho(sr_opts, rho_grid);
    if (metrics->parsed()) {
      ls::harness::RunOutput out = ls::harness::load_records(metrics_records);
      std::cout << ls::harness::compute_metrics(out.records).to_json().dump(2)
                << "\n";
      return out.failures.empty() ? 0 : 2;
    }
    if (token_stats->parsed()) {
      ls::harness::RunOutput out = ls::harness::load_records(ts_records);
      auto stats = ls::harness::token_stats(out.records, ts_n);
      ls::model::Tokenizer tokenizer(ts_vocab);
      write_or_print(ts_out, ls::harness::token_stats_csv(stats, tokenizer));
      return 0;
    }
    if (make_toy->parsed()) {
      ls::model::TensorArchive archive;
      if (mk_echo) {
        ls::model::EchoSpec spec;
        spec.vocab_size = mk_vocab;
        spec.max_context = mk_ctx;
        archive = ls::model::make_echo_model(spec);
      } else {
        ls::model::ModelConfig cfg;
        cfg.vocab_size = mk_vocab;
        cfg.hidden_dim = mk_dim;
        cfg.num_layers = mk_layers;
        cfg.num_heads = mk_heads;
        cfg.max_context = mk_ctx;
        cfg.final_norm = mk_final_norm;
        archive = ls::model::make_toy_model(mk_seed, cfg);
      }
      archive.save(mk_out);
      std::cout << "wrote " << mk_out << "\n";
      return 0;
    }
  } catch (const ls::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
