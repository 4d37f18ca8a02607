#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "deepmne/common.hpp"
#include "deepmne/graph_io.hpp"

namespace deepmne {

struct PlantedSpec {
  std::size_t networks = 3;
  std::size_t nodes = 60;
  std::size_t communities = 3;
  double p_in = 0.3;
  double p_out = 0.02;
  std::uint64_t seed = 0;
};

// Networks with planted communities drawn independently per network, plus
// one-hot community labels ("c0", "c1", ...). Node i belongs to community
// i * communities / nodes, so communities are contiguous and near-equal.
struct PlantedData {
  std::vector<WeightedGraph> graphs;
  LabelMatrix labels;
  std::vector<std::size_t> community;
};

inline std::string planted_node_name(std::size_t i) {
  std::string s = std::to_string(i);
  return "n" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

inline PlantedData make_planted(const PlantedSpec& spec) {
  if (spec.communities < 1 || spec.nodes < spec.communities) throw ValidationError("invalid planted spec");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < spec.nodes; ++i) names.push_back(planted_node_name(i));
  NodeIndex index(names);

  PlantedData out;
  for (std::size_t i = 0; i < spec.nodes; ++i) out.community.push_back(i * spec.communities / spec.nodes);

  for (std::size_t k = 0; k < spec.networks; ++k) {
    std::mt19937_64 rng(derive_seed(spec.seed, k));
    std::bernoulli_distribution in_edge(spec.p_in), out_edge(spec.p_out);
    WeightedGraph g{index, {}};
    for (std::size_t i = 0; i < spec.nodes; ++i) {
      for (std::size_t j = i + 1; j < spec.nodes; ++j) {
        bool same = out.community[i] == out.community[j];
        if (same ? in_edge(rng) : out_edge(rng)) g.edges.push_back({i, j, 1.0});
      }
    }
    out.graphs.push_back(std::move(g));
  }

  out.labels.index = index;
  for (std::size_t c = 0; c < spec.communities; ++c) out.labels.labels.push_back("c" + std::to_string(c));
  out.labels.assign = BinaryMatrix::Zero(static_cast<Eigen::Index>(spec.nodes), static_cast<Eigen::Index>(spec.communities));
  for (std::size_t i = 0; i < spec.nodes; ++i)
    out.labels.assign(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(out.community[i])) = 1;
  return out;
}

}  // namespace deepmne
