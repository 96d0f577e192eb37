#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "latentseek/errors.hpp"

namespace latentseek::model {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;  // row-major

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
};

/**
 * On-disk weight container.
 *
 * File layout:
 *   magic "LSTA1\n"
 *   uint64 little-endian header length
 *   UTF-8 JSON header: {"meta": {...}, "tensors": {name: {"shape": [...],
 *                       "offset": bytes-from-payload-start}}}
 *   raw float32 little-endian payloads
 *
 * "meta" carries the ModelConfig so an archive is self-describing.
 */
struct TensorArchive {
  std::map<std::string, Tensor> tensors;
  nlohmann::json meta;

  bool has(const std::string& name) const { return tensors.count(name) > 0; }

  const Tensor& get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw ArchiveError("archive: missing tensor \"" + name + "\"");
    }
    return it->second;
  }

  void add(const std::string& name, std::vector<std::int64_t> shape,
           std::vector<float> data);

  void save(const std::string& path) const;
  static TensorArchive load(const std::string& path);
};

}  // namespace latentseek::model
