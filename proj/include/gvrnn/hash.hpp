#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace gvrnn {

class Graph;

/// FNV-1a, 64-bit. Used for provenance fingerprints, not security.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size);
  void update(std::string_view s) { update(s.data(), s.size()); }
  template <class T>
  void update_value(const T& v) { update(&v, sizeof(T)); }
  std::uint64_t digest() const { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::uint64_t graph_fingerprint(const Graph& g);
std::string file_fingerprint(const std::filesystem::path& path);

}  // namespace gvrnn
