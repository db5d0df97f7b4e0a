#include "gammacell/field_io.hpp"

#include "gammacell/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

namespace gammacell {

namespace {

std::filesystem::path sidecar(const std::filesystem::path& bin) {
  return std::filesystem::path(bin.string() + ".json");
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return __builtin_bswap64(v);
}

}  // namespace

void write_field(const std::filesystem::path& bin, const Field& f) {
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + bin.string());
  for (double v : f.values) {
    const std::uint64_t w = to_le(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&w), sizeof w);
  }
  if (!out) throw IoError("short write to " + bin.string());
  nlohmann::json meta = {{"n", f.n}, {"k", f.k}, {"res", f.res}, {"layout", "node-major"}};
  std::ofstream js(sidecar(bin), std::ios::trunc);
  if (!js) throw IoError("cannot write " + sidecar(bin).string());
  js << meta.dump(2) << '\n';
}

Field read_field(const std::filesystem::path& bin) {
  std::ifstream js(sidecar(bin));
  if (!js) throw IoError("missing field sidecar " + sidecar(bin).string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const std::exception& e) {
    throw IoError("bad field sidecar: " + std::string(e.what()));
  }
  if (meta.value("layout", "") != "node-major") throw IoError("unsupported field layout");
  Field f;
  f.n = meta.at("n").get<int>();
  f.k = meta.at("k").get<int>();
  f.res = meta.at("res").get<int>();
  std::size_t nodes = 1;
  for (int i = 0; i < f.n; ++i) nodes *= static_cast<std::size_t>(f.k * f.res + 1);
  f.values.resize(nodes * static_cast<std::size_t>(f.n));
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw IoError("cannot read " + bin.string());
  for (double& v : f.values) {
    std::uint64_t w = 0;
    in.read(reinterpret_cast<char*>(&w), sizeof w);
    v = std::bit_cast<double>(to_le(w));
  }
  if (!in) throw IoError("field file " + bin.string() + " is truncated");
  return f;
}

}  // namespace gammacell
