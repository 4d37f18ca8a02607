#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepmne/common.hpp"
#include "deepmne/constraints.hpp"
#include "deepmne/diffusion.hpp"
#include "deepmne/graph_io.hpp"
#include "deepmne/log.hpp"
#include "deepmne/neural.hpp"
#include "deepmne/parallel.hpp"

namespace deepmne {

enum class ConstraintStrategy { topk, threshold };

// descend: iteration t trains the semi-supervised layer at depth t + 1.
// repeat:  every depth >= 2 is retrained T times with refreshed constraints.
enum class LayerSchedule { descend, repeat };

struct PipelineConfig {
  std::vector<std::size_t> layer_dims;        // first entry is the node count
  std::optional<std::size_t> iterations_T;    // unset: schedule default
  double constraint_fraction_P = 0.001;
  double rwr_alpha = 0.5;
  double rwr_tol = 1e-8;
  int rwr_max_iter = 1000;
  bool skip_rwr = false;
  TrainConfig train;
  ConstraintStrategy strategy = ConstraintStrategy::topk;
  double f1 = 0.95;  // must-link PCC threshold
  double f2 = -0.5;  // cannot-link PCC threshold
  LayerSchedule schedule = LayerSchedule::descend;

  std::size_t layer_count() const { return layer_dims.empty() ? 0 : layer_dims.size() - 1; }

  std::size_t effective_iterations() const {
    if (iterations_T) return *iterations_T;
    return schedule == LayerSchedule::descend ? (layer_dims.size() >= 2 ? layer_dims.size() - 2 : 0) : 1;
  }

  void validate() const {
    if (layer_dims.size() < 2) throw ValidationError("layer_dims needs at least two entries");
    for (std::size_t i = 0; i < layer_dims.size(); ++i) {
      if (layer_dims[i] < 1) throw ValidationError("layer_dims entries must be positive");
      if (i > 0 && layer_dims[i] >= layer_dims[i - 1]) throw ValidationError("layer_dims must be strictly decreasing");
    }
    if (schedule == LayerSchedule::descend && effective_iterations() > layer_dims.size() - 2)
      throw ValidationError("iterations_T exceeds the number of semi-supervised layers (" +
                            std::to_string(layer_dims.size() - 2) + ")");
    if (!(constraint_fraction_P >= 0.0 && constraint_fraction_P < 1.0))
      throw ValidationError("constraint_fraction_P must lie in [0, 1)");
    if (!(rwr_alpha > 0.0 && rwr_alpha <= 1.0)) throw ValidationError("rwr_alpha must lie in (0, 1]");
    if (!(rwr_tol > 0.0)) throw ValidationError("rwr_tol must be positive");
    if (rwr_max_iter < 1) throw ValidationError("rwr_max_iter must be at least 1");
    if (strategy == ConstraintStrategy::threshold && !(f2 < f1)) throw ValidationError("f2 must be below f1");
    train.validate();
  }
};

// One autoencoder training for one network.
struct StageRecord {
  std::size_t depth = 0;  // 1-based layer depth
  std::size_t round = 0;  // 0 for plain layers, 1.. for semi-supervised rounds
  std::size_t network = 0;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  bool semi = false;
  std::vector<double> loss_trace;
  std::size_t must_in = 0;
  std::size_t cannot_in = 0;
  std::size_t conflicts = 0;
  std::size_t must_out = 0;
  std::size_t cannot_out = 0;
  std::optional<std::size_t> churn;  // |previous constraints xor new constraints|
  ConstraintList extracted;          // constraints read off this stage's hidden layer
  double seconds = 0.0;
};

struct RunRecord {
  PipelineConfig config;
  std::vector<int> rwr_iterations;
  double feature_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<StageRecord> stages;
};

struct EmbeddingSet {
  NodeIndex index;
  std::vector<Matrix> per_network;
  Matrix combined;
  RunRecord provenance;
};

// Horizontal concatenation in network order.
inline Matrix combine(std::span<const Matrix> blocks) {
  if (blocks.empty()) throw ValidationError("nothing to combine");
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != blocks.front().rows()) throw ValidationError("embedding row counts differ");
    cols += b.cols();
  }
  Matrix out(blocks.front().rows(), cols);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline ConstraintList extract(const Matrix& h, const PipelineConfig& cfg, std::size_t depth) {
  ExtractOptions opts;
  opts.seed = derive_seed(cfg.train.seed, 1000 + depth);
  if (cfg.strategy == ConstraintStrategy::threshold) return extract_threshold(h, cfg.f1, cfg.f2, opts);
  auto k = pairs_for_fraction(static_cast<std::size_t>(h.rows()), cfg.constraint_fraction_P);
  if (k == 0) return {};
  return extract_topk(h, k, opts);
}

}  // namespace detail

// Node features fed to the first autoencoder: RWR rows, or raw adjacency rows with skip_rwr.
inline std::vector<Matrix> network_features(std::span<const WeightedGraph> graphs, const PipelineConfig& config,
                                            std::vector<int>* rwr_iterations = nullptr) {
  std::vector<Matrix> out;
  for (const auto& g : graphs) {
    Matrix a = adjacency(g);
    if (config.skip_rwr) {
      out.push_back(std::move(a));
      if (rwr_iterations) rwr_iterations->push_back(0);
      continue;
    }
    auto d = rwr(transition_matrix(a).T, config.rwr_alpha, config.rwr_tol, config.rwr_max_iter);
    if (rwr_iterations) rwr_iterations->push_back(d.iterations_used);
    out.push_back(diffusion_features(d));
  }
  return out;
}

// Stacked autoencoders with cross-network constraint exchange on precomputed features.
inline EmbeddingSet embed_features(std::span<const Matrix> features, const PipelineConfig& config) {
  config.validate();
  const std::size_t K = features.size();
  if (K < 2) throw ValidationError("at least two networks are required");
  const auto n = static_cast<std::size_t>(features.front().rows());
  if (n < 2) throw ValidationError("every network needs at least 2 nodes");
  for (const auto& x : features) {
    if (static_cast<std::size_t>(x.rows()) != n) throw ValidationError("networks disagree on the node count");
    if (static_cast<std::size_t>(x.cols()) != config.layer_dims.front())
      throw ValidationError("layer_dims[0] = " + std::to_string(config.layer_dims.front()) +
                            " does not match the input dimension " + std::to_string(x.cols()));
  }

  const auto t_start = detail::Clock::now();
  EmbeddingSet out;
  out.provenance.config = config;
  const std::size_t T = config.effective_iterations();
  const std::size_t depth_count = config.layer_count();

  auto train_cfg_for = [&](std::size_t depth) {
    TrainConfig c = config.train;
    c.seed = derive_seed(config.train.seed, depth);
    return c;
  };

  std::vector<Matrix> hidden(features.begin(), features.end());
  std::vector<ConstraintList> constraints(K);

  auto train_plain = [&](std::size_t depth) {
    std::vector<StageRecord> records(K);
    std::vector<Matrix> next(K);
    parallel_for(K, [&](std::size_t k) {
      auto t0 = detail::Clock::now();
      auto res = train_autoencoder(hidden[k], config.layer_dims[depth], train_cfg_for(depth));
      auto& r = records[k];
      r.depth = depth;
      r.network = k;
      r.in_dim = config.layer_dims[depth - 1];
      r.out_dim = config.layer_dims[depth];
      r.loss_trace = std::move(res.loss_trace);
      r.seconds = detail::seconds_since(t0);
      next[k] = std::move(res.hidden);
    });
    hidden = std::move(next);
    return records;
  };

  auto extract_all = [&](std::size_t depth, std::vector<StageRecord>& records, bool record_churn) {
    std::vector<ConstraintList> fresh(K);
    parallel_for(K, [&](std::size_t k) { fresh[k] = detail::extract(hidden[k], config, depth); });
    for (std::size_t k = 0; k < K; ++k) {
      records[k].must_out = fresh[k].must.size();
      records[k].cannot_out = fresh[k].cannot.size();
      records[k].extracted = fresh[k];
      if (record_churn)
        records[k].churn = symmetric_difference_size(constraints[k].must, fresh[k].must) +
                           symmetric_difference_size(constraints[k].cannot, fresh[k].cannot);
    }
    constraints = std::move(fresh);
  };

  auto push = [&](std::vector<StageRecord>& records) {
    for (auto& r : records) out.provenance.stages.push_back(std::move(r));
  };

  // Depth 1: plain autoencoder per network, then initial constraints.
  {
    auto records = train_plain(1);
    if (depth_count >= 2 && T > 0) extract_all(1, records, false);
    push(records);
  }

  for (std::size_t depth = 2; depth <= depth_count; ++depth) {
    std::size_t rounds = config.schedule == LayerSchedule::descend ? (depth - 1 <= T ? 1 : 0) : T;
    if (rounds == 0) {
      auto records = train_plain(depth);
      push(records);
      continue;
    }
    const std::vector<Matrix> input = hidden;
    for (std::size_t round = 1; round <= rounds; ++round) {
      std::vector<StageRecord> records(K);
      std::vector<Matrix> next(K);
      parallel_for(K, [&](std::size_t k) {
        auto t0 = detail::Clock::now();
        std::vector<ConstraintList> foreign;
        for (std::size_t j = 0; j < K; ++j)
          if (j != k) foreign.push_back(constraints[j]);
        auto merged = merge_constraints(foreign);
        ConstraintMatrices cm(n, merged.merged);
        auto res = train_semi_ae(input[k], cm, config.layer_dims[depth], train_cfg_for(depth));
        auto& r = records[k];
        r.depth = depth;
        r.round = round;
        r.network = k;
        r.semi = true;
        r.in_dim = config.layer_dims[depth - 1];
        r.out_dim = config.layer_dims[depth];
        r.must_in = merged.merged.must.size();
        r.cannot_in = merged.merged.cannot.size();
        r.conflicts = merged.conflicts;
        r.loss_trace = std::move(res.loss_trace);
        r.seconds = detail::seconds_since(t0);
        next[k] = std::move(res.hidden);
      });
      hidden = std::move(next);
      extract_all(depth, records, true);
      push(records);
    }
  }

  out.per_network = std::move(hidden);
  out.combined = combine(out.per_network);
  out.provenance.total_seconds = detail::seconds_since(t_start);
  return out;
}

inline EmbeddingSet run_deepmne(std::span<const WeightedGraph> graphs, const PipelineConfig& config) {
  config.validate();
  if (graphs.size() < 2) throw ValidationError("at least two networks are required");
  for (const auto& g : graphs) {
    if (!(g.index == graphs.front().index)) throw ValidationError("all networks must share one node index");
    if (g.node_count() < 2) throw ValidationError("every network needs at least 2 nodes");
  }
  if (config.layer_dims.front() != graphs.front().node_count())
    throw ValidationError("layer_dims[0] = " + std::to_string(config.layer_dims.front()) +
                          " must equal the node count " + std::to_string(graphs.front().node_count()));
  auto t0 = detail::Clock::now();
  std::vector<int> iterations;
  auto features = network_features(graphs, config, &iterations);
  double feature_seconds = detail::seconds_since(t0);
  auto out = embed_features(features, config);
  out.index = graphs.front().index;
  out.provenance.rwr_iterations = std::move(iterations);
  out.provenance.feature_seconds = feature_seconds;
  out.provenance.total_seconds += feature_seconds;
  return out;
}

// "node_id<TAB>v1<TAB>v2 ...", 17 significant digits.
inline void write_embedding_tsv(std::ostream& os, const NodeIndex& index, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << index.name(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << '\t' << format_double(m(i, j));
    os << '\n';
  }
}

inline void write_embedding_tsv(const std::filesystem::path& path, const NodeIndex& index, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_embedding_tsv(out, index, m);
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

struct EmbeddingTable {
  std::vector<std::string> ids;
  Matrix values;
};

inline EmbeddingTable read_embedding_tsv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  EmbeddingTable t;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() < 2) detail::fail_at(path, lineno, "expected 'node_id<TAB>v1<TAB>...'");
    std::vector<double> row;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      if (!parse_double(fields[f], v)) detail::fail_at(path, lineno, "cannot parse value '" + std::string(fields[f]) + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) detail::fail_at(path, lineno, "inconsistent column count");
    t.ids.emplace_back(fields[0]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": no embedding rows");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

}  // namespace deepmne
