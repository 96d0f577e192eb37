#pragma once

#include <stdexcept>
#include <string>

namespace latentseek {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ArchiveError : Error {
  using Error::Error;
};

struct TokenizerError : Error {
  using Error::Error;
};

struct ContextOverflowError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DatasetError : Error {
  using Error::Error;
};

struct JudgeError : Error {
  using Error::Error;
};

struct RewardError : Error {
  using Error::Error;
};

}  // namespace latentseek
