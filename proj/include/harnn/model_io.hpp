// Model file format.
//
//   bytes 0..7    magic "HARNNMDL"
//   bytes 8..11   format version, little-endian u32 (currently 1)
//   bytes 12..19  header length N, little-endian u64
//   N bytes       UTF-8 JSON header: config, seed, free-form metadata,
//                 payload byte count, FNV-1a checksum of the payload, and
//                 a tensor manifest (name / rows / cols / byte offset)
//   payload       raw little-endian IEEE-754 binary64 arrays, manifest order
//
// Round trips are bit-exact: doubles are written and read through their
// exact bit patterns, and the JSON header is emitted with sorted keys.
#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "harnn/network.hpp"

namespace harnn {

inline constexpr char kModelMagic[8] = {'H', 'A', 'R', 'N', 'N', 'M', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void put_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

struct ModelFile {
  NetworkParams params;
  std::uint64_t seed = 0;
  nlohmann::json metadata;  // training provenance; never contains wall-clock data
};

inline void save_model(const std::filesystem::path& path, const NetworkParams& params,
                       std::uint64_t seed, const nlohmann::json& metadata = {}) {
  std::string payload;
  nlohmann::json manifest = nlohmann::json::array();
  for (const TensorRef& t : tensor_refs(params)) {
    manifest.push_back({{"name", t.name},
                        {"rows", t.rows},
                        {"cols", t.cols},
                        {"offset", payload.size()},
                        {"count", t.data.size()}});
    for (double x : t.data) detail::put_u64le(payload, std::bit_cast<std::uint64_t>(x));
  }
  const NetworkConfig cfg = params.config();
  nlohmann::json header = {
      {"config",
       {{"input_dim", cfg.input_dim},
        {"internal_layers", cfg.internal_layers},
        {"units", cfg.units},
        {"classes", cfg.classes}}},
      {"seed", seed},
      {"metadata", metadata.is_null() ? nlohmann::json::object() : metadata},
      {"tensors", manifest},
      {"payload_bytes", payload.size()},
      {"payload_fnv1a", detail::fnv1a(payload)},
  };
  const std::string header_text = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_model: cannot open " + path.string());
  f.write(kModelMagic, 8);
  std::string fixed;
  for (int i = 0; i < 4; ++i) fixed.push_back(static_cast<char>((kModelVersion >> (8 * i)) & 0xff));
  detail::put_u64le(fixed, header_text.size());
  f.write(fixed.data(), static_cast<std::streamsize>(fixed.size()));
  f.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!f) throw std::runtime_error("save_model: write failed for " + path.string());
}

inline ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_model: cannot open " + path.string());
  std::string all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(all.data());
  if (all.size() < 20 || std::string_view(all.data(), 8) != std::string_view(kModelMagic, 8))
    throw std::runtime_error("load_model: " + path.string() + " is not a model file (bad magic)");
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(bytes[8 + i]) << (8 * i);
  if (version != kModelVersion)
    throw std::runtime_error("load_model: unsupported format version " + std::to_string(version));
  const std::uint64_t header_len = detail::get_u64le(bytes + 12);
  if (all.size() < 20 + header_len)
    throw std::runtime_error("load_model: truncated header in " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(all.substr(20, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_model: corrupt JSON header: " + std::string(e.what()));
  }

  const std::string payload = all.substr(20 + header_len);
  if (payload.size() != header.at("payload_bytes").get<std::size_t>())
    throw std::runtime_error("load_model: truncated payload in " + path.string());
  if (detail::fnv1a(payload) != header.at("payload_fnv1a").get<std::uint64_t>())
    throw std::runtime_error("load_model: payload checksum mismatch in " + path.string());

  NetworkConfig cfg;
  const auto& jc = header.at("config");
  cfg.input_dim = jc.at("input_dim").get<std::size_t>();
  cfg.internal_layers = jc.at("internal_layers").get<std::size_t>();
  cfg.units = jc.at("units").get<std::size_t>();
  cfg.classes = jc.at("classes").get<std::size_t>();
  cfg.validate();

  ModelFile out;
  out.seed = header.at("seed").get<std::uint64_t>();
  out.metadata = header.at("metadata");
  Rng dummy(0);
  out.params = init_network(cfg, dummy);  // shapes only; overwritten below

  auto refs = tensor_refs(out.params);
  const auto& manifest = header.at("tensors");
  if (manifest.size() != refs.size())
    throw std::runtime_error("load_model: tensor manifest count mismatch");
  const auto* pb = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& m = manifest[i];
    if (m.at("name").get<std::string>() != refs[i].name ||
        m.at("rows").get<std::size_t>() != refs[i].rows ||
        m.at("cols").get<std::size_t>() != refs[i].cols ||
        m.at("count").get<std::size_t>() != refs[i].data.size())
      throw std::runtime_error("load_model: shape mismatch for tensor " + refs[i].name);
    std::size_t off = m.at("offset").get<std::size_t>();
    if (off + 8 * refs[i].data.size() > payload.size())
      throw std::runtime_error("load_model: tensor " + refs[i].name + " overruns payload");
    for (double& x : refs[i].data) {
      x = std::bit_cast<double>(detail::get_u64le(pb + off));
      off += 8;
    }
  }
  return out;
}

}  // namespace harnn
