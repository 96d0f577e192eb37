#include "latentseek/archive.hpp"

#include <cstring>
#include <fstream>

namespace latentseek::model {

namespace {

constexpr char kMagic[] = "LSTA1\n";
constexpr size_t kMagicLen = 6;

void write_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64_le(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw ArchiveError("archive: truncated header length");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void TensorArchive::add(const std::string& name,
                        std::vector<std::int64_t> shape,
                        std::vector<float> data) {
  std::int64_t n = 1;
  for (auto s : shape) n *= s;
  if (n != static_cast<std::int64_t>(data.size())) {
    throw ArchiveError("archive: tensor \"" + name + "\" shape/payload mismatch");
  }
  tensors[name] = Tensor{std::move(shape), std::move(data)};
}

void TensorArchive::save(const std::string& path) const {
  nlohmann::json header;
  header["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
  nlohmann::json tens = nlohmann::json::object();
  std::uint64_t offset = 0;
  // std::map iteration order is sorted, so archives are byte-stable.
  for (const auto& [name, t] : tensors) {
    tens[name] = {{"shape", t.shape}, {"offset", offset}};
    offset += static_cast<std::uint64_t>(t.numel()) * 4;
  }
  header["tensors"] = tens;
  std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw ArchiveError("archive: cannot open \"" + path + "\" for write");
  os.write(kMagic, kMagicLen);
  write_u64_le(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, t] : tensors) {
    (void)name;
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * 4));
  }
  if (!os) throw ArchiveError("archive: write failed for \"" + path + "\"");
}

TensorArchive TensorArchive::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArchiveError("archive: cannot open \"" + path + "\"");
  char magic[kMagicLen];
  is.read(magic, kMagicLen);
  if (!is || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    throw ArchiveError("archive: bad magic in \"" + path + "\"");
  }
  std::uint64_t header_len = read_u64_le(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw ArchiveError("archive: truncated header");

  nlohmann::json header = nlohmann::json::parse(header_str, nullptr, false);
  if (header.is_discarded()) throw ArchiveError("archive: malformed JSON header");

  std::string payload((std::istreambuf_iterator<char>(is)),
                      std::istreambuf_iterator<char>());

  TensorArchive out;
  if (header.contains("meta")) out.meta = header["meta"];
  if (!header.contains("tensors") || !header["tensors"].is_object()) {
    throw ArchiveError("archive: header missing \"tensors\" object");
  }
  for (const auto& [name, entry] : header["tensors"].items()) {
    if (!entry.contains("shape") || !entry.contains("offset")) {
      throw ArchiveError("archive: tensor \"" + name + "\" entry incomplete");
    }
    std::vector<std::int64_t> shape =
        entry["shape"].get<std::vector<std::int64_t>>();
    std::uint64_t offset = entry["offset"].get<std::uint64_t>();
    std::int64_t n = 1;
    for (auto s : shape) {
      if (s <= 0) {
        throw ArchiveError("archive: tensor \"" + name + "\" has bad shape");
      }
      n *= s;
    }
    std::uint64_t bytes = static_cast<std::uint64_t>(n) * 4;
    if (offset + bytes > payload.size()) {
      throw ArchiveError("archive: tensor \"" + name +
                         "\" payload truncated (need " + std::to_string(bytes) +
                         " bytes at offset " + std::to_string(offset) + ")");
    }
    std::vector<float> data(static_cast<size_t>(n));
    std::memcpy(data.data(), payload.data() + offset, bytes);
    out.tensors[name] = Tensor{std::move(shape), std::move(data)};
  }
  return out;
}

}  // namespace latentseek::model
