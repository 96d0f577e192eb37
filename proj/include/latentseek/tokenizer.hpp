#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latentseek/errors.hpp"

namespace latentseek::model {

using TokenId = std::int32_t;
using Tokens = std::vector<TokenId>;

/**
 * Byte-level tokenizer for toy vocabularies.
 *
 * - vocab_size >= 256: token id == byte value, any input round-trips.
 * - vocab_size  < 256: the first vocab_size entries of a fixed printable
 *   table form the alphabet; out-of-alphabet bytes are an error.
 *
 * The table ordering is part of the weight-archive contract: models built
 * for a small vocabulary depend on stable character ids.
 */
class Tokenizer {
 public:
  // Fixed printable table used when vocab_size < 256. Lowercase first so
  // small vocabularies still cover natural-language prompts.
  static const std::string& printable_table();

  explicit Tokenizer(int vocab_size);

  int vocab_size() const { return vocab_size_; }
  bool byte_mode() const { return byte_mode_; }

  Tokens encode(const std::string& text) const;
  std::string decode(const Tokens& tokens) const;

  // Single-character lookup; throws TokenizerError when out of alphabet.
  TokenId token_of(char c) const;
  bool has_char(char c) const;

 private:
  int vocab_size_;
  bool byte_mode_;
};

}  // namespace latentseek::model
