#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "deepmne/common.hpp"
#include "deepmne/constraint_set.hpp"
#include "deepmne/log.hpp"

namespace deepmne {

struct PairCorrelation {
  NodePair pair;
  double pcc = 0.0;
};

// Pearson correlations keyed by unordered pair, sorted by pair.
struct PairCorrelations {
  std::vector<PairCorrelation> values;
  std::vector<std::size_t> zero_variance_rows;  // rows whose pairs were skipped
  std::size_t skipped_pairs = 0;

  std::optional<double> at(std::size_t i, std::size_t j) const {
    NodePair key(i, j);
    auto it = std::lower_bound(values.begin(), values.end(), key,
                               [](const PairCorrelation& v, const NodePair& k) { return v.pair < k; });
    if (it == values.end() || it->pair != key) return std::nullopt;
    return it->pcc;
  }
};

namespace detail {

// Rows centered and scaled to unit norm, so a dot product is a correlation.
// Returns false for rows with zero variance.
inline std::vector<bool> standardize_rows(const Matrix& h, Matrix& z) {
  z = h.colwise() - h.rowwise().mean();
  std::vector<bool> ok(static_cast<std::size_t>(h.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double norm = z.row(i).norm();
    // Scale-aware zero test: rows that are constant up to rounding.
    double scale = h.row(i).cwiseAbs().maxCoeff();
    ok[static_cast<std::size_t>(i)] = norm > 1e-12 * std::max(1.0, scale) * std::sqrt(static_cast<double>(h.cols()));
    if (ok[static_cast<std::size_t>(i)]) z.row(i) /= norm;
  }
  return ok;
}

}  // namespace detail

// Pearson correlation between rows of H, for every pair or for the given subset.
inline PairCorrelations pairwise_pcc(const Matrix& h, std::optional<std::span<const NodePair>> pairs = std::nullopt) {
  if (h.cols() < 2) throw ValidationError("PCC needs at least 2 columns per row");
  const auto n = static_cast<std::size_t>(h.rows());
  Matrix z;
  auto ok = detail::standardize_rows(h, z);

  PairCorrelations out;
  for (std::size_t i = 0; i < n; ++i)
    if (!ok[i]) out.zero_variance_rows.push_back(i);

  auto corr = [&](std::size_t i, std::size_t j) {
    double r = z.row(static_cast<Eigen::Index>(i)).dot(z.row(static_cast<Eigen::Index>(j)));
    return std::clamp(r, -1.0, 1.0);
  };

  if (pairs) {
    std::vector<NodePair> sorted(pairs->begin(), pairs->end());
    normalize(sorted);
    for (const auto& p : sorted) {
      if (p.first == p.second || p.second >= n) throw ValidationError("PCC pair out of range");
      if (!ok[p.first] || !ok[p.second]) {
        ++out.skipped_pairs;
        continue;
      }
      out.values.push_back({p, corr(p.first, p.second)});
    }
  } else {
    const Matrix gram = z * z.transpose();
    out.values.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!ok[i] || !ok[j]) {
          ++out.skipped_pairs;
          continue;
        }
        double r = gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out.values.push_back({NodePair(i, j), std::clamp(r, -1.0, 1.0)});
      }
    }
  }
  if (out.skipped_pairs > 0)
    log::info("PCC skipped ", out.skipped_pairs, " pair(s) touching ", out.zero_variance_rows.size(),
              " zero-variance row(s)");
  return out;
}

// Number of pairs selected by a constraint fraction P of all n(n-1)/2 pairs.
inline std::size_t pairs_for_fraction(std::size_t n, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("constraint fraction must lie in [0, 1)");
  const double total = static_cast<double>(n) * static_cast<double>(n > 0 ? n - 1 : 0) / 2.0;
  return static_cast<std::size_t>(std::floor(fraction * total));
}

struct ExtractOptions {
  bool force_full_pairs = false;
  std::size_t sampling_threshold = 5000;  // above this many nodes, rank a sampled pool
  std::size_t pool_factor = 100;          // pool size = pool_factor * n
  std::uint64_t seed = 0;
};

namespace detail {

inline PairCorrelations candidate_correlations(const Matrix& h, const ExtractOptions& opts) {
  const auto n = static_cast<std::size_t>(h.rows());
  if (opts.force_full_pairs || n <= opts.sampling_threshold) return pairwise_pcc(h);
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<NodePair> pool;
  pool.reserve(opts.pool_factor * n);
  while (pool.size() < opts.pool_factor * n) {
    auto a = pick(rng);
    auto b = pick(rng);
    if (a != b) pool.emplace_back(a, b);
  }
  return pairwise_pcc(h, std::span<const NodePair>(pool));
}

}  // namespace detail

// Must-link: the k highest-PCC pairs. Cannot-link: the k lowest. One total
// order (PCC descending, then pair ascending) decides both ends, so the two
// sets are disjoint whenever 2k <= #pairs.
inline ConstraintList extract_topk(const Matrix& h, std::size_t k, const ExtractOptions& opts = {}) {
  auto pcc = detail::candidate_correlations(h, opts);
  auto& v = pcc.values;
  if (2 * k > v.size())
    throw ValidationError("k = " + std::to_string(k) + " too large for " + std::to_string(v.size()) + " candidate pairs");
  std::stable_sort(v.begin(), v.end(), [](const PairCorrelation& a, const PairCorrelation& b) {
    if (a.pcc != b.pcc) return a.pcc > b.pcc;
    return a.pair < b.pair;
  });
  ConstraintList out;
  for (std::size_t r = 0; r < k; ++r) {
    out.must.push_back(v[r].pair);
    out.cannot.push_back(v[v.size() - 1 - r].pair);
  }
  normalize(out.must);
  normalize(out.cannot);
  return out;
}

inline ConstraintList extract_threshold(const Matrix& h, double must_threshold, double cannot_threshold,
                                        const ExtractOptions& opts = {}) {
  if (!(cannot_threshold < must_threshold))
    throw ValidationError("cannot-link threshold must be below the must-link threshold");
  auto pcc = detail::candidate_correlations(h, opts);
  ConstraintList out;
  for (const auto& v : pcc.values) {
    if (v.pcc > must_threshold) out.must.push_back(v.pair);
    else if (v.pcc < cannot_threshold) out.cannot.push_back(v.pair);
  }
  return out;
}

struct MergeResult {
  ConstraintList merged;
  std::size_t conflicts = 0;  // pairs that survived in both sets and were dropped
};

// Intersects the must sets and the cannot sets of the incoming lists.
inline MergeResult merge_constraints(std::span<const ConstraintList> lists) {
  if (lists.empty()) throw ValidationError("merge_constraints needs at least one list");
  MergeResult out;
  auto must = lists.front().must;
  auto cannot = lists.front().cannot;
  normalize(must);
  normalize(cannot);
  for (const auto& l : lists.subspan(1)) {
    auto m = l.must;
    auto c = l.cannot;
    normalize(m);
    normalize(c);
    must = intersect(must, m);
    cannot = intersect(cannot, c);
  }
  auto both = intersect(must, cannot);
  out.conflicts = both.size();
  out.merged.must = subtract(must, both);
  out.merged.cannot = subtract(cannot, both);
  return out;
}

// Debug dump: "M<TAB>i<TAB>j" lines, then "C<TAB>i<TAB>j" lines, each sorted by pair.
inline void write_constraint_dump(std::ostream& os, const ConstraintList& c) {
  auto must = c.must;
  auto cannot = c.cannot;
  normalize(must);
  normalize(cannot);
  for (const auto& p : must) os << "M\t" << p.first << '\t' << p.second << '\n';
  for (const auto& p : cannot) os << "C\t" << p.first << '\t' << p.second << '\n';
}

inline void write_constraint_dump(const std::filesystem::path& path, const ConstraintList& c) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_constraint_dump(out, c);
}

}  // namespace deepmne
