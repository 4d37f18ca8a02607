#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SparseCore>

#include "deepmne/common.hpp"
#include "deepmne/log.hpp"
#include "deepmne/parallel.hpp"

namespace deepmne {

struct TransitionMatrix {
  Matrix T;                           // column-stochastic except isolated columns
  std::vector<std::size_t> isolated;  // zero-degree nodes, ascending
};

// Steady-state random walk with restart probabilities. Column j is the
// distribution of a walk that restarts at node j, so S(i, j) is the
// probability of sitting at node i.
struct DiffusionMatrix {
  Matrix S;
  double alpha = 0.5;
  int iterations_used = 0;
  double residual = 0.0;
  bool converged = true;
};

struct RwrOptions {
  double alpha = 0.5;
  double tol = 1e-8;
  int max_iter = 1000;
};

// Column-normalizes a symmetric nonnegative adjacency matrix.
inline TransitionMatrix transition_matrix(const Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ValidationError("adjacency matrix must be square");
  if ((adjacency.array() < 0.0).any()) throw ValidationError("adjacency matrix has a negative entry");
  TransitionMatrix out{adjacency, {}};
  for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
    double degree = adjacency.col(j).sum();
    if (degree > 0.0) {
      out.T.col(j) /= degree;
    } else {
      out.T.col(j).setZero();
      out.isolated.push_back(static_cast<std::size_t>(j));
    }
  }
  return out;
}

struct RwrColumn {
  Vector s;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> residual_trace;  // max-norm change per iteration, if requested
};

namespace detail {

inline void check_rwr_args(const Matrix& T, double alpha) {
  if (T.rows() != T.cols()) throw ValidationError("transition matrix must be square");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("restart probability alpha must lie in (0, 1]");
}

inline bool is_zero_column(const Eigen::SparseMatrix<double>& T, Eigen::Index j) {
  for (Eigen::SparseMatrix<double>::InnerIterator it(T, j); it; ++it)
    if (it.value() != 0.0) return false;
  return true;
}

}  // namespace detail

// Iterates s <- (1 - alpha) T s + alpha e_start from s = e_start until the
// max-norm change drops below tol or max_iter updates have been made.
inline RwrColumn rwr_column(const Eigen::SparseMatrix<double>& T, std::size_t start, double alpha, double tol,
                            int max_iter, bool keep_trace = false) {
  const Eigen::Index n = T.rows();
  const auto j = static_cast<Eigen::Index>(start);
  RwrColumn out;
  out.s = Vector::Unit(n, j);
  if (detail::is_zero_column(T, j)) {
    // Isolated start node: the walk never leaves, pure restart.
    out.converged = true;
    return out;
  }
  Vector next(n);
  out.residual = std::numeric_limits<double>::infinity();
  while (out.iterations < max_iter) {
    next.noalias() = (1.0 - alpha) * (T * out.s);
    next(j) += alpha;
    out.residual = (next - out.s).cwiseAbs().maxCoeff();
    out.s.swap(next);
    ++out.iterations;
    if (keep_trace) out.residual_trace.push_back(out.residual);
    if (out.residual < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

inline DiffusionMatrix rwr(const Matrix& T, double alpha, double tol = 1e-8, int max_iter = 1000) {
  detail::check_rwr_args(T, alpha);
  if (!(tol > 0.0)) throw ValidationError("rwr tolerance must be positive");
  if (max_iter < 1) throw ValidationError("rwr max_iter must be at least 1");

  const Eigen::Index n = T.rows();
  Eigen::SparseMatrix<double> sparse = T.sparseView();
  std::vector<RwrColumn> columns(static_cast<std::size_t>(n));
  parallel_for(columns.size(), [&](std::size_t j) { columns[j] = rwr_column(sparse, j, alpha, tol, max_iter); });

  DiffusionMatrix out;
  out.S.resize(n, n);
  out.alpha = alpha;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& c = columns[static_cast<std::size_t>(j)];
    out.S.col(j) = c.s;
    out.iterations_used = std::max(out.iterations_used, c.iterations);
    out.residual = std::max(out.residual, c.residual);
    out.converged = out.converged && c.converged;
  }
  if (!out.converged)
    log::warn("rwr did not converge within ", max_iter, " iterations (residual ", out.residual, ", tol ", tol, ")");
  return out;
}

inline DiffusionMatrix rwr(const Matrix& T, const RwrOptions& opts) { return rwr(T, opts.alpha, opts.tol, opts.max_iter); }

// Fixed point of the restart iteration by a dense LU solve:
// (I - (1 - alpha) T) S = alpha I, with isolated columns set to e_j.
inline DiffusionMatrix rwr_exact(const Matrix& T, double alpha) {
  detail::check_rwr_args(T, alpha);
  const Eigen::Index n = T.rows();
  if (n > 2000) throw ValidationError("rwr_exact is limited to n <= 2000");
  Matrix system = Matrix::Identity(n, n) - (1.0 - alpha) * T;
  Eigen::PartialPivLU<Matrix> lu(system);
  DiffusionMatrix out;
  out.alpha = alpha;
  out.S = lu.solve(alpha * Matrix::Identity(n, n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (T.col(j).cwiseAbs().sum() == 0.0) out.S.col(j) = Vector::Unit(n, j);
  }
  return out;
}

// Node i's feature vector is row i of S^T, i.e. column i of S.
inline Matrix diffusion_features(const DiffusionMatrix& d) { return d.S.transpose(); }

// Binary layout: "DMNE", u32 version = 1, u64 n, n*n f64 row-major, f64 alpha.
inline void save_diffusion(std::ostream& os, const DiffusionMatrix& d) {
  os.write("DMNE", 4);
  binary::write<std::uint32_t>(os, 1);
  binary::write<std::uint64_t>(os, static_cast<std::uint64_t>(d.S.rows()));
  for (Eigen::Index i = 0; i < d.S.rows(); ++i)
    for (Eigen::Index j = 0; j < d.S.cols(); ++j) binary::write(os, d.S(i, j));
  binary::write(os, d.alpha);
}

inline DiffusionMatrix load_diffusion(std::istream& is) {
  binary::expect_magic(is, "DMNE");
  auto version = binary::read<std::uint32_t>(is);
  if (version != 1) throw IoError("unsupported diffusion file version " + std::to_string(version));
  auto n = static_cast<Eigen::Index>(binary::read<std::uint64_t>(is));
  DiffusionMatrix d;
  d.S.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d.S(i, j) = binary::read_double(is);
  d.alpha = binary::read_double(is);
  return d;
}

inline void save_diffusion(const std::filesystem::path& path, const DiffusionMatrix& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  save_diffusion(out, d);
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

inline DiffusionMatrix load_diffusion(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return load_diffusion(in);
}

}  // namespace deepmne
