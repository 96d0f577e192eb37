#pragma once

#include <set>
#include <string>
#include <vector>

#include "latentseek/harness.hpp"
#include "latentseek/toy.hpp"

namespace echo_suite {

/**
 * Fully enumerable benchmark: an echo model whose boxed answer is the most
 * recent digit in the sequence, over instances whose question plants one
 * decoy digit. Instances where decoy == gold are solved by plain CoT; the
 * rest require the latent optimizer to write a later digit into the
 * optimized prefix.
 */
struct Suite {
  latentseek::model::EchoSpec spec;
  latentseek::model::ModelConfig config;
  latentseek::model::Backend backend;
  std::vector<latentseek::ProblemInstance> instances;
  std::vector<std::string> decoys;  // per-instance CoT answer digit
  std::set<latentseek::model::TokenId> stop_tokens;
};

// num_correct instances have decoy == gold; the rest have decoy != gold.
Suite build(int num_instances = 50, int num_correct = 30);

// Optimizer settings tuned so the echo walk reaches any gold digit well
// inside 25 iterations.
latentseek::latent::SeekConfig seek_config();

}  // namespace echo_suite
