#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deepmne/common.hpp"

namespace deepmne {

// Sorted, duplicate-free list of node identifiers shared by every network.
class NodeIndex {
 public:
  NodeIndex() = default;

  explicit NodeIndex(std::vector<std::string> names) : names_(std::move(names)) {
    std::sort(names_.begin(), names_.end());
    names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
    position_.reserve(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) position_.emplace(names_[i], i);
  }

  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = position_.find(std::string(id));
    if (it == position_.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const NodeIndex& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> position_;
};

struct Edge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double weight = 1.0;

  bool operator==(const Edge&) const = default;
};

// Undirected weighted graph. Edges are stored once with i < j, sorted by (i, j).
struct WeightedGraph {
  NodeIndex index;
  std::vector<Edge> edges;

  std::size_t node_count() const noexcept { return index.size(); }
  bool operator==(const WeightedGraph&) const = default;
};

struct LabelMatrix {
  NodeIndex index;
  std::vector<std::string> labels;
  BinaryMatrix assign;  // node_count x label_count
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

[[noreturn]] inline void fail_at(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + what);
}

struct RawEdge {
  std::string a;
  std::string b;
  double weight = 1.0;
  std::size_t line = 0;
};

// Reads the syntactic content of an edge-list file. Range checks happen in load_edge_list.
inline std::vector<RawEdge> read_raw_edges(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<RawEdge> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3)
      fail_at(path, lineno, "expected 'node_a<TAB>node_b[<TAB>weight]', got " + std::to_string(fields.size()) + " field(s)");
    if (fields[0].empty() || fields[1].empty()) fail_at(path, lineno, "empty node identifier");
    RawEdge e{std::string(fields[0]), std::string(fields[1]), 1.0, lineno};
    if (fields.size() == 3 && !parse_double(fields[2], e.weight))
      fail_at(path, lineno, "cannot parse weight '" + std::string(fields[2]) + "'");
    out.push_back(std::move(e));
  }
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return out;
}

}  // namespace detail

// Union of all node identifiers across the files, sorted lexicographically.
inline NodeIndex build_node_index(std::span<const std::filesystem::path> edge_list_paths) {
  std::vector<std::string> ids;
  for (const auto& path : edge_list_paths) {
    for (auto& e : detail::read_raw_edges(path)) {
      ids.push_back(std::move(e.a));
      ids.push_back(std::move(e.b));
    }
  }
  return NodeIndex(std::move(ids));
}

inline WeightedGraph load_edge_list(const std::filesystem::path& path, const NodeIndex& index) {
  WeightedGraph g{index, {}};
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& raw : detail::read_raw_edges(path)) {
    auto a = index.find(raw.a);
    auto b = index.find(raw.b);
    if (!a) detail::fail_at(path, raw.line, "unknown node identifier '" + raw.a + "'");
    if (!b) detail::fail_at(path, raw.line, "unknown node identifier '" + raw.b + "'");
    if (*a == *b) detail::fail_at(path, raw.line, "self-loop on '" + raw.a + "'");
    if (!(raw.weight > 0.0 && raw.weight <= 1.0))
      detail::fail_at(path, raw.line, "weight " + format_double(raw.weight) + " outside (0, 1]");
    auto [i, j] = std::minmax(*a, *b);
    if (!seen.emplace(i, j).second)
      detail::fail_at(path, raw.line, "duplicate edge '" + raw.a + "' - '" + raw.b + "'");
    g.edges.push_back({i, j, raw.weight});
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const Edge& x, const Edge& y) { return std::tie(x.i, x.j) < std::tie(y.i, y.j); });
  return g;
}

// Canonical edge list: sorted by (i, j), 17 significant digits.
inline void write_edge_list(std::ostream& os, const WeightedGraph& g) {
  auto edges = g.edges;
  std::sort(edges.begin(), edges.end(),
            [](const Edge& x, const Edge& y) { return std::tie(x.i, x.j) < std::tie(y.i, y.j); });
  for (const auto& e : edges)
    os << g.index.name(e.i) << '\t' << g.index.name(e.j) << '\t' << format_double(e.weight) << '\n';
}

inline void write_edge_list(const std::filesystem::path& path, const WeightedGraph& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_edge_list(out, g);
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

inline Matrix adjacency(const WeightedGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Matrix a = Matrix::Zero(n, n);
  for (const auto& e : g.edges) {
    a(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = e.weight;
    a(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.i)) = e.weight;
  }
  return a;
}

// Format: "node<TAB>label1,label2,...". Repeated nodes accumulate their labels.
inline LabelMatrix load_labels(const std::filesystem::path& path, const NodeIndex& index) {
  auto in = detail::open_input(path);
  std::vector<std::pair<std::size_t, std::string>> cells;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 2) detail::fail_at(path, lineno, "expected 'node<TAB>label,label,...'");
    auto node = index.find(fields[0]);
    if (!node) detail::fail_at(path, lineno, "unknown node identifier '" + std::string(fields[0]) + "'");
    for (auto token : detail::split(fields[1], ',')) {
      if (token.empty()) detail::fail_at(path, lineno, "empty label token");
      cells.emplace_back(*node, std::string(token));
    }
  }

  LabelMatrix out;
  out.index = index;
  for (const auto& [node, label] : cells) out.labels.push_back(label);
  std::sort(out.labels.begin(), out.labels.end());
  out.labels.erase(std::unique(out.labels.begin(), out.labels.end()), out.labels.end());
  out.assign = BinaryMatrix::Zero(static_cast<Eigen::Index>(index.size()),
                                  static_cast<Eigen::Index>(out.labels.size()));
  for (const auto& [node, label] : cells) {
    auto col = std::lower_bound(out.labels.begin(), out.labels.end(), label) - out.labels.begin();
    out.assign(static_cast<Eigen::Index>(node), col) = 1;
  }
  return out;
}

}  // namespace deepmne
