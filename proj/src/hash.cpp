#include "gvrnn/hash.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "gvrnn/error.hpp"
#include "gvrnn/graph.hpp"

namespace gvrnn {

void Fnv1a::update(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h_ ^= p[i];
    h_ *= 0x100000001b3ULL;
  }
}

std::string Fnv1a::hex() const {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h_));
  return buf.data();
}

std::uint64_t graph_fingerprint(const Graph& g) {
  Fnv1a h;
  h.update_value(static_cast<std::int32_t>(g.num_nodes()));
  for (const auto& [u, v] : g.edges()) {
    h.update_value(static_cast<std::int32_t>(u));
    h.update_value(static_cast<std::int32_t>(v));
  }
  return h.digest();
}

std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string() + " for hashing");
  Fnv1a h;
  std::array<char, 1 << 14> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

}  // namespace gvrnn
