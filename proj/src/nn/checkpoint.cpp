#include "gvrnn/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "gvrnn/error.hpp"

namespace gvrnn::nn {

namespace {

constexpr char kMagic[8] = {'G', 'V', 'R', 'N', 'N', 'C', 'K', 'P'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_doubles(std::string& out, const Matrix& m) {
  out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  std::string get_string(std::size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }
  void get_doubles(Matrix& m) { take(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double)); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void take(void* dst, std::size_t n) {
    if (n > bytes_.size() - pos_) throw DataError("checkpoint: truncated at byte " + std::to_string(pos_));
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string meta = ckpt.meta.dump();
  put<std::uint64_t>(out, meta.size());
  out += meta;
  put<std::uint64_t>(out, ckpt.params.size());
  for (const auto& [name, p] : ckpt.params.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
    put<std::int64_t>(out, p.steps);
    put_doubles(out, p.value);
    put_doubles(out, p.first_moment);
    put_doubles(out, p.second_moment);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw DataError("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto meta_len = r.get<std::uint64_t>();
  try {
    ckpt.meta = nlohmann::json::parse(r.get_string(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed metadata: ") + e.what());
  }
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name = r.get_string(r.get<std::uint32_t>());
    const auto rows = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    const auto cols = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    if (rows < 0 || cols < 0 || rows * cols > (1LL << 32)) throw DataError("checkpoint: implausible shape for " + name);
    const auto steps = r.get<std::int64_t>();
    Matrix value(rows, cols);
    r.get_doubles(value);
    ckpt.params.add(name, std::move(value));
    auto& p = ckpt.params.at(name);
    p.steps = steps;
    r.get_doubles(p.first_moment);
    r.get_doubles(p.second_moment);
  }
  if (!r.done()) throw DataError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".partial");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp.string());
    const auto bytes = serialize_checkpoint(ckpt);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace gvrnn::nn
