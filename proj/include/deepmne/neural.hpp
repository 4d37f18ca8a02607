#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "deepmne/common.hpp"
#include "deepmne/constraint_set.hpp"

namespace deepmne {

enum class Activation : std::uint8_t { sigmoid = 0, tanh = 1 };

inline const char* to_string(Activation a) { return a == Activation::sigmoid ? "sigmoid" : "tanh"; }

inline Activation parse_activation(std::string_view s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  throw ValidationError("unknown activation '" + std::string(s) + "' (expected sigmoid or tanh)");
}

inline Matrix activate(const Matrix& z, Activation a) {
  if (a == Activation::sigmoid) return (1.0 + (-z.array()).exp()).inverse().matrix();
  return z.array().tanh().matrix();
}

// f'(z) expressed through y = f(z).
inline Matrix activation_slope(const Matrix& y, Activation a) {
  if (a == Activation::sigmoid) return (y.array() * (1.0 - y.array())).matrix();
  return (1.0 - y.array().square()).matrix();
}

struct DenseLayer {
  Matrix W;  // out_dim x in_dim
  Vector b;  // out_dim
  Activation activation = Activation::sigmoid;

  Eigen::Index in_dim() const { return W.cols(); }
  Eigen::Index out_dim() const { return W.rows(); }

  // Rows of x are samples.
  Matrix forward(const Matrix& x) const {
    Matrix z = x * W.transpose();
    z.rowwise() += b.transpose();
    return activate(z, activation);
  }

  bool all_finite() const { return W.allFinite() && b.allFinite(); }
  bool operator==(const DenseLayer& o) const {
    return activation == o.activation && W.rows() == o.W.rows() && W.cols() == o.W.cols() && W == o.W && b == o.b;
  }
};

struct AutoencoderPair {
  DenseLayer encoder;
  DenseLayer decoder;

  Matrix encode(const Matrix& x) const { return encoder.forward(x); }
  Matrix reconstruct(const Matrix& x) const { return decoder.forward(encoder.forward(x)); }
  bool operator==(const AutoencoderPair&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t batch_size = 128;
  std::size_t epochs = 200;
  double lambda1 = 1.0;  // must-link penalty weight
  double lambda2 = 1.0;  // cannot-link reward weight
  double lambda = 0.1;   // weight of the whole constraint term
  std::uint64_t seed = 0;
  Activation activation = Activation::sigmoid;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be positive");
    if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda >= 0.0))
      throw ValidationError("lambda, lambda1 and lambda2 must be nonnegative");
  }
};

// Symmetric 0/1 must-link (M) and cannot-link (C) matrices over n rows,
// stored as their upper-triangle pair lists.
class ConstraintMatrices {
 public:
  ConstraintMatrices() = default;

  ConstraintMatrices(std::size_t n, PairSet must, PairSet cannot)
      : n_(n), must_(std::move(must)), cannot_(std::move(cannot)) {
    normalize(must_);
    normalize(cannot_);
    for (const auto* set : {&must_, &cannot_}) {
      for (const auto& p : *set) {
        if (p.first == p.second) throw ValidationError("constraint pair on the diagonal");
        if (p.second >= n_) throw ValidationError("constraint index " + std::to_string(p.second) + " out of range");
      }
    }
    if (!intersect(must_, cannot_).empty()) throw ValidationError("must-link and cannot-link sets overlap");
  }

  ConstraintMatrices(std::size_t n, const ConstraintList& list) : ConstraintMatrices(n, list.must, list.cannot) {}

  std::size_t size() const noexcept { return n_; }
  const PairSet& must() const noexcept { return must_; }
  const PairSet& cannot() const noexcept { return cannot_; }
  bool empty() const noexcept { return must_.empty() && cannot_.empty(); }

  Matrix laplacian_must() const { return laplacian(must_); }
  Matrix laplacian_cannot() const { return laplacian(cannot_); }

  // Pairs whose endpoints both appear in rows, re-indexed to positions in rows.
  ConstraintMatrices restrict_to(std::span<const std::size_t> rows) const {
    std::vector<std::ptrdiff_t> pos(n_, -1);
    for (std::size_t k = 0; k < rows.size(); ++k) pos.at(rows[k]) = static_cast<std::ptrdiff_t>(k);
    auto remap = [&](const PairSet& in) {
      PairSet out;
      for (const auto& p : in) {
        auto a = pos[p.first];
        auto b = pos[p.second];
        if (a >= 0 && b >= 0) out.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
      }
      return out;
    };
    ConstraintMatrices out;
    out.n_ = rows.size();
    out.must_ = remap(must_);
    out.cannot_ = remap(cannot_);
    normalize(out.must_);
    normalize(out.cannot_);
    return out;
  }

 private:
  Matrix laplacian(const PairSet& pairs) const {
    const auto n = static_cast<Eigen::Index>(n_);
    Matrix l = Matrix::Zero(n, n);
    for (const auto& p : pairs) {
      auto i = static_cast<Eigen::Index>(p.first);
      auto j = static_cast<Eigen::Index>(p.second);
      l(i, i) += 1.0;
      l(j, j) += 1.0;
      l(i, j) -= 1.0;
      l(j, i) -= 1.0;
    }
    return l;
  }

  std::size_t n_ = 0;
  PairSet must_;
  PairSet cannot_;
};

// Xavier-uniform weights, zero biases.
inline AutoencoderPair init_autoencoder(std::size_t in_dim, std::size_t hidden_dim, Activation activation,
                                        std::uint64_t seed) {
  if (in_dim < 1 || hidden_dim < 1) throw ValidationError("autoencoder dimensions must be at least 1");
  std::mt19937_64 rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + hidden_dim));
  std::uniform_real_distribution<double> dist(-limit, limit);
  auto layer = [&](std::size_t out, std::size_t in) {
    DenseLayer l;
    l.W.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = dist(rng);
    l.b = Vector::Zero(static_cast<Eigen::Index>(out));
    l.activation = activation;
    return l;
  };
  AutoencoderPair pair;
  pair.encoder = layer(hidden_dim, in_dim);
  pair.decoder = layer(in_dim, hidden_dim);
  return pair;
}

namespace detail {

inline void check_batch(const AutoencoderPair& pair, const Matrix& x) {
  if (x.cols() != pair.encoder.in_dim())
    throw ValidationError("input has " + std::to_string(x.cols()) + " columns, encoder expects " +
                          std::to_string(pair.encoder.in_dim()));
  if (pair.decoder.in_dim() != pair.encoder.out_dim() || pair.decoder.out_dim() != pair.encoder.in_dim())
    throw ValidationError("encoder/decoder shapes do not match");
}

inline void check_constraints(const Matrix& h, const ConstraintMatrices& cm) {
  if (cm.empty()) return;
  if (cm.size() != static_cast<std::size_t>(h.rows()))
    throw ValidationError("constraint matrices cover " + std::to_string(cm.size()) + " rows, hidden batch has " +
                          std::to_string(h.rows()));
}

}  // namespace detail

// Sum over samples of ||y_i - x_i||^2.
inline double reconstruction_loss(const AutoencoderPair& pair, const Matrix& x) {
  detail::check_batch(pair, x);
  return (pair.reconstruct(x) - x).squaredNorm();
}

// lambda1 * sum_M ||h_i - h_j||^2 - lambda2 * sum_C ||h_i - h_j||^2, each unordered pair once.
inline double constraint_loss(const Matrix& h, const ConstraintMatrices& cm, double lambda1, double lambda2) {
  detail::check_constraints(h, cm);
  auto sum = [&](const PairSet& pairs) {
    double s = 0.0;
    for (const auto& p : pairs)
      s += (h.row(static_cast<Eigen::Index>(p.first)) - h.row(static_cast<Eigen::Index>(p.second))).squaredNorm();
    return s;
  };
  return lambda1 * sum(cm.must()) - lambda2 * sum(cm.cannot());
}

// Same quantity through the Laplacians: lambda1 tr(H^T L_M H) - lambda2 tr(H^T L_C H).
// L = D - A of the symmetric 0/1 matrix, whose quadratic form counts each
// unordered pair once.
inline double constraint_loss_trace(const Matrix& h, const ConstraintMatrices& cm, double lambda1, double lambda2) {
  detail::check_constraints(h, cm);
  if (cm.empty()) return 0.0;
  const double must = (h.transpose() * cm.laplacian_must() * h).trace();
  const double cannot = (h.transpose() * cm.laplacian_cannot() * h).trace();
  return lambda1 * must - lambda2 * cannot;
}

inline double total_loss(const AutoencoderPair& pair, const Matrix& x, const ConstraintMatrices& cm,
                         const TrainConfig& config) {
  double loss = reconstruction_loss(pair, x);
  if (config.lambda != 0.0 && !cm.empty())
    loss += config.lambda * constraint_loss(pair.encode(x), cm, config.lambda1, config.lambda2);
  return loss;
}

struct AutoencoderGradients {
  Matrix encoder_W;
  Vector encoder_b;
  Matrix decoder_W;
  Vector decoder_b;
};

struct LossAndGradients {
  double loss = 0.0;
  AutoencoderGradients grads;
};

// Forward and backward pass for total_loss.
inline LossAndGradients loss_and_gradients(const AutoencoderPair& pair, const Matrix& x, const ConstraintMatrices& cm,
                                           const TrainConfig& config) {
  detail::check_batch(pair, x);
  const Matrix h = pair.encoder.forward(x);
  const Matrix y = pair.decoder.forward(h);
  const Matrix residual = y - x;

  LossAndGradients out;
  out.loss = residual.squaredNorm();

  const Matrix delta_out = (2.0 * residual).cwiseProduct(activation_slope(y, pair.decoder.activation));
  out.grads.decoder_W = delta_out.transpose() * h;
  out.grads.decoder_b = delta_out.colwise().sum().transpose();

  Matrix grad_h = delta_out * pair.decoder.W;
  if (config.lambda != 0.0 && !cm.empty()) {
    detail::check_constraints(h, cm);
    out.loss += config.lambda * constraint_loss(h, cm, config.lambda1, config.lambda2);
    // d/dH of lambda * L_mc = 2 lambda (lambda1 L_M - lambda2 L_C) H, accumulated pair by pair.
    auto accumulate = [&](const PairSet& pairs, double coeff) {
      for (const auto& p : pairs) {
        auto i = static_cast<Eigen::Index>(p.first);
        auto j = static_cast<Eigen::Index>(p.second);
        Eigen::RowVectorXd diff = coeff * (h.row(i) - h.row(j));
        grad_h.row(i) += diff;
        grad_h.row(j) -= diff;
      }
    };
    accumulate(cm.must(), 2.0 * config.lambda * config.lambda1);
    accumulate(cm.cannot(), -2.0 * config.lambda * config.lambda2);
  }

  const Matrix delta_hidden = grad_h.cwiseProduct(activation_slope(h, pair.encoder.activation));
  out.grads.encoder_W = delta_hidden.transpose() * x;
  out.grads.encoder_b = delta_hidden.colwise().sum().transpose();
  return out;
}

inline AutoencoderGradients gradients(const AutoencoderPair& pair, const Matrix& x, const ConstraintMatrices& cm,
                                      const TrainConfig& config) {
  return loss_and_gradients(pair, x, cm, config).grads;
}

inline AutoencoderPair sgd_step(const AutoencoderPair& pair, const AutoencoderGradients& g, double learning_rate) {
  if (g.encoder_W.rows() != pair.encoder.W.rows() || g.encoder_W.cols() != pair.encoder.W.cols() ||
      g.decoder_W.rows() != pair.decoder.W.rows() || g.decoder_W.cols() != pair.decoder.W.cols() ||
      g.encoder_b.size() != pair.encoder.b.size() || g.decoder_b.size() != pair.decoder.b.size())
    throw ValidationError("gradient shapes do not match parameters");
  AutoencoderPair out = pair;
  out.encoder.W -= learning_rate * g.encoder_W;
  out.encoder.b -= learning_rate * g.encoder_b;
  out.decoder.W -= learning_rate * g.decoder_W;
  out.decoder.b -= learning_rate * g.decoder_b;
  return out;
}

struct TrainResult {
  AutoencoderPair pair;
  Matrix hidden;                   // n x hidden_dim, encoder output for every input row
  std::vector<double> loss_trace;  // summed batch losses per epoch
};

namespace detail {

inline Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

inline TrainResult train(const Matrix& x, const ConstraintMatrices* cm, std::size_t hidden_dim,
                         const TrainConfig& config) {
  config.validate();
  if (x.rows() < 1) throw ValidationError("training input has no rows");
  if (!x.allFinite()) throw ValidationError("training input contains non-finite values");
  const auto n = static_cast<std::size_t>(x.rows());
  if (cm && !cm->empty() && cm->size() != n)
    throw ValidationError("constraint matrices cover " + std::to_string(cm->size()) + " nodes, input has " +
                          std::to_string(n));

  TrainResult out;
  out.pair = init_autoencoder(static_cast<std::size_t>(x.cols()), hidden_dim, config.activation,
                              derive_seed(config.seed, 0));
  std::mt19937_64 order_rng(derive_seed(config.seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const bool full_batch = config.batch_size >= n;
  const ConstraintMatrices no_constraints;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (!full_batch) std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      std::span<const std::size_t> rows(order.data() + start, std::min(config.batch_size, n - start));
      const Matrix batch = full_batch ? x : gather_rows(x, rows);
      const ConstraintMatrices local =
          (cm && !cm->empty()) ? (full_batch ? *cm : cm->restrict_to(rows)) : no_constraints;
      auto step = loss_and_gradients(out.pair, batch, local, config);
      if (!std::isfinite(step.loss))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                            "; the learning rate is probably too high");
      epoch_loss += step.loss;
      out.pair = sgd_step(out.pair, step.grads, config.learning_rate);
    }
    if (!out.pair.encoder.all_finite() || !out.pair.decoder.all_finite())
      throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch + 1) +
                          "; the learning rate is probably too high");
    out.loss_trace.push_back(epoch_loss);
  }
  out.hidden = out.pair.encode(x);
  return out;
}

}  // namespace detail

// Mini-batch SGD on reconstruction + lambda * constraint loss. A pair only
// contributes to a batch when both of its endpoints are in that batch.
inline TrainResult train_semi_ae(const Matrix& x, const ConstraintMatrices& cm, std::size_t hidden_dim,
                                 const TrainConfig& config) {
  return detail::train(x, &cm, hidden_dim, config);
}

inline TrainResult train_autoencoder(const Matrix& x, std::size_t hidden_dim, const TrainConfig& config) {
  return detail::train(x, nullptr, hidden_dim, config);
}

// "SAE1", u64 in_dim, u64 hidden_dim, u8 activation, then encoder.W (row-major),
// encoder.b, decoder.W (row-major), decoder.b as little-endian f64.
inline void save_checkpoint(std::ostream& os, const AutoencoderPair& pair) {
  os.write("SAE1", 4);
  binary::write<std::uint64_t>(os, static_cast<std::uint64_t>(pair.encoder.in_dim()));
  binary::write<std::uint64_t>(os, static_cast<std::uint64_t>(pair.encoder.out_dim()));
  binary::write<std::uint8_t>(os, static_cast<std::uint8_t>(pair.encoder.activation));
  auto put = [&](const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) binary::write(os, m(r, c));
  };
  auto put_vec = [&](const Vector& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) binary::write(os, v(k));
  };
  put(pair.encoder.W);
  put_vec(pair.encoder.b);
  put(pair.decoder.W);
  put_vec(pair.decoder.b);
}

inline AutoencoderPair load_checkpoint(std::istream& is) {
  binary::expect_magic(is, "SAE1");
  auto in_dim = static_cast<Eigen::Index>(binary::read<std::uint64_t>(is));
  auto hidden = static_cast<Eigen::Index>(binary::read<std::uint64_t>(is));
  auto tag = binary::read<std::uint8_t>(is);
  if (tag > 1) throw IoError("unknown activation tag " + std::to_string(tag));
  auto act = static_cast<Activation>(tag);
  auto get = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = binary::read_double(is);
    return m;
  };
  AutoencoderPair pair;
  pair.encoder.W = get(hidden, in_dim);
  pair.encoder.b = get(hidden, 1);
  pair.decoder.W = get(in_dim, hidden);
  pair.decoder.b = get(in_dim, 1);
  pair.encoder.activation = pair.decoder.activation = act;
  return pair;
}

inline void save_checkpoint(const std::filesystem::path& path, const AutoencoderPair& pair) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  save_checkpoint(out, pair);
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

inline AutoencoderPair load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return load_checkpoint(in);
}

}  // namespace deepmne
