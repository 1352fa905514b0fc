#include "gvrnn/graphset_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "gvrnn/error.hpp"

namespace gvrnn {

namespace {

constexpr std::string_view kMagic = "GVRNN-GRAPHSET";

void append_double(std::string& out, double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw DataError("graph-set: cannot format attribute value");
  out.append(buf.data(), end);
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  // Next non-blank, non-comment line; false at end of file.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  }

  std::string require(std::string_view what) {
    std::string line;
    if (!next(line)) fail("unexpected end of file, expected " + std::string(what));
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(path_ + ":" + std::to_string(lineno_) + ": " + msg);
  }

  int lineno() const { return lineno_; }

 private:
  std::istream& in_;
  std::string path_;
  int lineno_ = 0;
};

template <class T>
std::vector<T> parse_fields(const LineReader& r, std::string_view line, std::string_view tag) {
  if (line.substr(0, tag.size()) != tag || (line.size() > tag.size() && line[tag.size()] != ' ' && line[tag.size()] != '\t')) {
    r.fail("expected a '" + std::string(tag) + "' line");
  }
  std::vector<T> out;
  const char* p = line.data() + tag.size();
  const char* end = line.data() + line.size();
  while (true) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p == end) break;
    T v{};
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || (next < end && *next != ' ' && *next != '\t')) {
      r.fail("malformed number in '" + std::string(tag) + "' line");
    }
    out.push_back(v);
    p = next;
  }
  return out;
}

}  // namespace

void save_graph_set(const GraphSet& set, const std::filesystem::path& path) {
  std::string out;
  out.append(kMagic).append(" ").append(std::to_string(kGraphSetVersion)).append(" ");
  out.append(set.manifest.dump()).append("\n");
  for (const auto& g : set.graphs) {
    const auto edges = g.edges();
    out.append("graph ")
        .append(std::to_string(g.num_nodes()))
        .append(" ")
        .append(std::to_string(g.attr_dim()))
        .append(" ")
        .append(std::to_string(edges.size()))
        .append(g.has_labels() ? " 1\n" : " 0\n");
    out.append("e");
    for (const auto& [u, v] : edges) {
      out.append(" ").append(std::to_string(u)).append(" ").append(std::to_string(v));
    }
    out.append("\n");
    for (int v = 0; v < g.num_nodes() && g.has_attributes(); ++v) {
      out.append("x");
      for (double a : g.attributes(v)) {
        out.append(" ");
        append_double(out, a);
      }
      out.append("\n");
    }
    if (g.has_labels()) {
      out.append("c");
      for (int l : g.community_labels()) out.append(" ").append(std::to_string(l));
      out.append("\n");
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".partial");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp.string());
    f << out;
    if (!f) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

GraphSet load_graph_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph-set file " + path.string());
  LineReader r(in, path.string());

  GraphSet set;
  std::string line;
  if (!r.next(line)) r.fail("empty file");
  {
    std::istringstream hs(line);
    std::string magic;
    int version = 0;
    hs >> magic >> version;
    if (magic != kMagic) r.fail("missing GVRNN-GRAPHSET header");
    if (version != kGraphSetVersion) {
      r.fail("unsupported graph-set version " + std::to_string(version) + " (reader supports " +
             std::to_string(kGraphSetVersion) + ")");
    }
    std::string rest;
    std::getline(hs, rest);
    if (rest.find_first_not_of(" \t") != std::string::npos) {
      try {
        set.manifest = nlohmann::json::parse(rest);
      } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("malformed manifest: ") + e.what());
      }
    }
  }

  while (r.next(line)) {
    const auto head = parse_fields<long long>(r, line, "graph");
    if (head.size() != 4) r.fail("graph line needs: n k num_edges labeled");
    const auto n = head[0], k = head[1], ne = head[2], labeled = head[3];
    if (n < 0 || k < 0 || ne < 0 || (labeled != 0 && labeled != 1)) r.fail("invalid graph header values");

    Graph g(static_cast<int>(n));
    const auto ev = parse_fields<long long>(r, r.require("an 'e' line"), "e");
    if (ev.size() != static_cast<std::size_t>(2 * ne)) {
      r.fail("expected " + std::to_string(ne) + " edges, found " + std::to_string(ev.size() / 2) +
             (ev.size() % 2 ? " and a dangling endpoint" : ""));
    }
    try {
      for (std::size_t i = 0; i < ev.size(); i += 2) g.add_edge(static_cast<int>(ev[i]), static_cast<int>(ev[i + 1]));
    } catch (const DataError& e) {
      r.fail(e.what());
    }
    if (g.num_edges() != static_cast<std::size_t>(ne)) r.fail("duplicate edges in record");

    if (k > 0) {
      std::vector<double> x;
      x.reserve(static_cast<std::size_t>(n * k));
      for (long long v = 0; v < n; ++v) {
        const auto row = parse_fields<double>(r, r.require("an 'x' line"), "x");
        if (row.size() != static_cast<std::size_t>(k)) r.fail("attribute row has wrong width");
        x.insert(x.end(), row.begin(), row.end());
      }
      g.set_attributes(static_cast<int>(k), std::move(x));
    }
    if (labeled) {
      const auto labels = parse_fields<int>(r, r.require("a 'c' line"), "c");
      if (labels.size() != static_cast<std::size_t>(n)) r.fail("label line has wrong length");
      g.set_community_labels(labels);
    }
    set.graphs.push_back(std::move(g));
  }
  return set;
}

}  // namespace gvrnn
