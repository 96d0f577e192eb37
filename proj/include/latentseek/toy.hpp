#pragma once

#include <cstdint>
#include <string>

#include "latentseek/archive.hpp"
#include "latentseek/model.hpp"

namespace latentseek::model {

// Seeded pseudorandom weights; identical seed+config give a byte-identical
// archive. The config is embedded in the archive meta.
TensorArchive make_toy_model(std::uint64_t seed, const ModelConfig& cfg);

// All-zero weights with unit norm gains; test scaffolding for hand-built
// heads and tie-break cases.
TensorArchive make_blank_archive(const ModelConfig& cfg);

/**
 * Hand-constructed single-layer "echo" transformer.
 *
 * One attention head copies the most recent echo-class token into the
 * logit slot; learned position rows optionally overlay a fixed completion
 * script. Two presets:
 *
 * - scripted=false: every position echoes. A prefix [t0, SEP] generates
 *   t0 forever; exhaustively checkable over the vocabulary.
 * - scripted=true: contexts are padded to exactly context_len tokens; the
 *   model then emits `filler` + "\boxed{" + <echoed digit> + "}" + stop.
 *   The echoed digit is the most recent digit in the sequence, so edits to
 *   the early latent positions can change the final boxed answer while the
 *   box structure survives. This is what makes seek outcomes enumerable.
 */
struct EchoSpec {
  int vocab_size = 64;
  int max_context = 256;
  bool scripted = true;
  int context_len = 160;  // scripted mode: required rendered-context length
  std::string filler = "the answer is the last digit seen so far ";
  std::string echo_chars = "0123456789";
  char sep_char = ' ';
  char stop_char = '.';
  float script_gain = 8.0f;  // logit magnitude of scripted characters
};

ModelConfig echo_config(const EchoSpec& spec);
TensorArchive make_echo_model(const EchoSpec& spec);

}  // namespace latentseek::model
