#include "latentseek/tokenizer.hpp"

#include <array>

namespace latentseek::model {

namespace {

// 95 printable characters in a fixed, documented order.
constexpr const char* kTable =
    "abcdefghijklmnopqrstuvwxyz"
    "0123456789"
    " .,\\{}"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    ":;!?'\"()+-*/=%$#&@[]<>_^|~"
    "\n";

std::array<int, 256> build_reverse(int vocab_size) {
  std::array<int, 256> rev{};
  rev.fill(-1);
  const std::string table = kTable;
  int limit = std::min<int>(vocab_size, static_cast<int>(table.size()));
  for (int i = 0; i < limit; ++i) {
    rev[static_cast<unsigned char>(table[i])] = i;
  }
  return rev;
}

}  // namespace

const std::string& Tokenizer::printable_table() {
  static const std::string table = kTable;
  return table;
}

Tokenizer::Tokenizer(int vocab_size)
    : vocab_size_(vocab_size), byte_mode_(vocab_size >= 256) {
  if (vocab_size < 2) {
    throw TokenizerError("tokenizer: vocab_size must be >= 2, got " +
                         std::to_string(vocab_size));
  }
}

Tokens Tokenizer::encode(const std::string& text) const {
  Tokens out;
  out.reserve(text.size());
  if (byte_mode_) {
    for (unsigned char c : text) out.push_back(static_cast<TokenId>(c));
    return out;
  }
  static thread_local std::array<int, 256> rev{};
  static thread_local int rev_vocab = -1;
  if (rev_vocab != vocab_size_) {
    rev = build_reverse(vocab_size_);
    rev_vocab = vocab_size_;
  }
  for (char c : text) {
    int id = rev[static_cast<unsigned char>(c)];
    if (id < 0) {
      throw TokenizerError(std::string("tokenizer: character '") + c +
                           "' not in alphabet of size " +
                           std::to_string(vocab_size_));
    }
    out.push_back(id);
  }
  return out;
}

std::string Tokenizer::decode(const Tokens& tokens) const {
  std::string out;
  out.reserve(tokens.size());
  const std::string& table = printable_table();
  for (TokenId t : tokens) {
    if (t < 0 || t >= vocab_size_) {
      throw TokenizerError("tokenizer: token id " + std::to_string(t) +
                           " out of range [0, " + std::to_string(vocab_size_) +
                           ")");
    }
    if (byte_mode_) {
      out.push_back(static_cast<char>(static_cast<unsigned char>(t)));
    } else if (t < static_cast<TokenId>(table.size())) {
      out.push_back(table[static_cast<size_t>(t)]);
    } else {
      throw TokenizerError("tokenizer: token id " + std::to_string(t) +
                           " has no printable mapping");
    }
  }
  return out;
}

TokenId Tokenizer::token_of(char c) const {
  Tokens t = encode(std::string(1, c));
  return t[0];
}

bool Tokenizer::has_char(char c) const {
  if (byte_mode_) return true;
  const std::string& table = printable_table();
  size_t pos = table.find(c);
  return pos != std::string::npos && pos < static_cast<size_t>(vocab_size_);
}

}  // namespace latentseek::model
