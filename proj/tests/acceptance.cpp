// Acceptance checks, one PASS/FAIL line each. Exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "deepmne/deepmne.hpp"
#include "deepmne/synthetic.hpp"

using namespace deepmne;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Matrix uniform(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

// Random disjoint must and cannot pairs over n rows.
ConstraintMatrices random_constraints(std::size_t n, std::mt19937_64& rng) {
  PairSet must, cannot;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      auto r = rng() % 5;
      if (r == 0) must.emplace_back(i, j);
      if (r == 1) cannot.emplace_back(i, j);
    }
  return {n, must, cannot};
}

void gradient_oracle() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const auto n = static_cast<std::size_t>(3 + rng() % 8);
    const auto d = static_cast<std::size_t>(2 + rng() % 7);
    const auto h = static_cast<std::size_t>(1 + rng() % std::min<std::size_t>(d, 7));
    TrainConfig cfg;
    cfg.activation = inst % 2 ? Activation::tanh : Activation::sigmoid;
    cfg.lambda = (inst / 2) % 2 ? 0.7 : 0.0;
    cfg.lambda1 = 1.3;
    cfg.lambda2 = 0.6;
    Matrix x = uniform(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), rng, 0.0, 1.0);
    auto pair = init_autoencoder(d, h, cfg.activation, rng());
    auto cm = random_constraints(n, rng);
    auto g = gradients(pair, x, cm, cfg);

    auto check = [&](Matrix& param, const Matrix& analytic) {
      for (Eigen::Index i = 0; i < param.rows(); ++i)
        for (Eigen::Index j = 0; j < param.cols(); ++j) {
          const double keep = param(i, j), step = 1e-5;
          param(i, j) = keep + step;
          const double up = total_loss(pair, x, cm, cfg);
          param(i, j) = keep - step;
          const double down = total_loss(pair, x, cm, cfg);
          param(i, j) = keep;
          const double numeric = (up - down) / (2 * step);
          const double a = analytic(i, j);
          const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
          worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    };
    check(pair.encoder.W, g.encoder_W);
    check(pair.decoder.W, g.decoder_W);
    auto check_bias = [&](Vector& b, const Vector& analytic) {
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        const double keep = b(i), step = 1e-5;
        b(i) = keep + step;
        const double up = total_loss(pair, x, cm, cfg);
        b(i) = keep - step;
        const double down = total_loss(pair, x, cm, cfg);
        b(i) = keep;
        const double numeric = (up - down) / (2 * step);
        const double denom = std::max({std::abs(analytic(i)), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic(i) - numeric) / denom);
      }
    };
    check_bias(pair.encoder.b, g.encoder_b);
    check_bias(pair.decoder.b, g.decoder_b);
  }
  const double secs = since(t0);
  report(1, worst < 1e-5 && secs < 10.0,
         "finite-difference gradients, 20 instances, max rel error " + fmt(worst) + " in " + fmt(secs) + " s");
}

void rwr_oracle() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  double worst = 0.0, worst_sum = 0.0;
  for (int g = 0; g < 10; ++g) {
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng() % 181);
    const double p = std::uniform_real_distribution<double>(1.0, 8.0)(rng) / static_cast<double>(n);
    std::uniform_real_distribution<double> w(0.1, 1.0);
    std::bernoulli_distribution edge(p);
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (edge(rng)) a(i, j) = a(j, i) = w(rng);
    auto t = transition_matrix(a);
    for (double alpha : {0.1, 0.5, 0.9}) {
      auto it = rwr(t.T, alpha);
      auto ex = rwr_exact(t.T, alpha);
      worst = std::max(worst, (it.S - ex.S).cwiseAbs().maxCoeff());
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::binary_search(t.isolated.begin(), t.isolated.end(), static_cast<std::size_t>(j))) continue;
        worst_sum = std::max(worst_sum, std::abs(it.S.col(j).sum() - 1.0));
      }
    }
  }
  const double secs = since(t0);
  report(2, worst <= 1e-7 && worst_sum <= 1e-9 && secs < 10.0,
         "RWR vs dense solve, 10 graphs x 3 alphas, max diff " + fmt(worst) + ", column-sum error " + fmt(worst_sum) +
             " in " + fmt(secs) + " s");
}

void trace_identity() {
  std::mt19937_64 rng(303);
  double worst = 0.0, worst_rel = 0.0, largest = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const auto n = static_cast<std::size_t>(2 + rng() % 30);
    const auto d = static_cast<Eigen::Index>(1 + rng() % 10);
    Matrix h = uniform(static_cast<Eigen::Index>(n), d, rng, -2.0, 2.0);
    auto cm = random_constraints(n, rng);
    const double l1 = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const double l2 = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const double a = constraint_loss(h, cm, l1, l2), b = constraint_loss_trace(h, cm, l1, l2);
    worst = std::max(worst, std::abs(a - b));
    worst_rel = std::max(worst_rel, std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}));
    largest = std::max(largest, std::abs(a));
  }
  report(3, worst_rel <= 1e-12,
         "pair sum vs Laplacian trace, 100 instances, max diff " + fmt(worst) + " (relative " + fmt(worst_rel) +
             ", largest |loss| " + fmt(largest) + ")");
}

void constraint_efficacy() {
  std::mt19937_64 rng(404);
  const Eigen::Index n = 40;
  Matrix x = uniform(n, 20, rng, 0.0, 1.0);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 500;
  cfg.batch_size = 40;
  cfg.lambda = 1.0;
  cfg.lambda1 = 1.0;
  cfg.lambda2 = 1.0;
  cfg.seed = 7;
  const std::size_t hidden = 6;

  auto init = init_autoencoder(20, hidden, cfg.activation, derive_seed(cfg.seed, 0));
  Matrix h0 = init.encode(x);
  auto dist = [](const Matrix& h, Eigen::Index i, Eigen::Index j) { return (h.row(i) - h.row(j)).norm(); };

  // Must pair: farthest apart at initialisation. Cannot pair: closest.
  Eigen::Index mi = 0, mj = 1, ci = 0, cj = 1;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (dist(h0, i, j) > dist(h0, mi, mj)) mi = i, mj = j;
      if (dist(h0, i, j) < dist(h0, ci, cj)) ci = i, cj = j;
    }
  ConstraintMatrices cm(static_cast<std::size_t>(n), PairSet{{static_cast<std::size_t>(mi), static_cast<std::size_t>(mj)}},
                        PairSet{{static_cast<std::size_t>(ci), static_cast<std::size_t>(cj)}});
  Matrix h = train_semi_ae(x, cm, hidden, cfg).hidden;
  const double d_init_must = dist(h0, mi, mj), d_init_cannot = dist(h0, ci, cj);
  const double d_must = dist(h, mi, mj), d_cannot = dist(h, ci, cj);

  TrainConfig plain = cfg;
  plain.lambda = 0.0;
  Matrix p = train_semi_ae(x, cm, hidden, plain).hidden;

  std::printf("  init: d(must) %s, d(cannot) %s\n", fmt(d_init_must).c_str(), fmt(d_init_cannot).c_str());
  std::printf("  lambda=0 (recorded only): d(must) %s, d(cannot) %s\n", fmt(dist(p, mi, mj)).c_str(),
              fmt(dist(p, ci, cj)).c_str());
  report(4, d_must < d_init_must && d_cannot > d_must,
         "planted pairs after training: d(must) " + fmt(d_must) + " < init " + fmt(d_init_must) + ", d(cannot) " +
             fmt(d_cannot) + " > d(must)");
}

PipelineConfig planted_config(std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.layer_dims = {60, 30, 10};
  cfg.constraint_fraction_P = 0.01;
  cfg.train.activation = Activation::tanh;
  cfg.train.learning_rate = 0.005;
  cfg.train.epochs = 1500;
  cfg.train.lambda = 1.0;
  cfg.train.lambda1 = 1.0;
  cfg.train.lambda2 = 0.0;
  cfg.train.seed = seed;
  return cfg;
}

PlantedData planted_data(std::uint64_t seed) {
  PlantedSpec spec;
  spec.networks = 3;
  spec.nodes = 60;
  spec.communities = 3;
  spec.p_in = 0.3;
  spec.p_out = 0.02;
  spec.seed = seed;
  return make_planted(spec);
}

void planted_end_to_end() {
  auto t0 = Clock::now();
  std::vector<double> auroc, f1, f1_ablation;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto data = planted_data(seed);
    auto cfg = planted_config(seed);
    ClassifierConfig cc;
    auto full = kfold_cv(run_deepmne(data.graphs, cfg).combined, data.labels.assign, 5, seed, cc);
    cfg.iterations_T = 0;
    auto ablation = kfold_cv(run_deepmne(data.graphs, cfg).combined, data.labels.assign, 5, seed, cc);
    auroc.push_back(full.mean.micro_auroc);
    f1.push_back(full.mean.micro_f1);
    f1_ablation.push_back(ablation.mean.micro_f1);
    std::printf("  seed %llu: AUROC %s, F1 %s, F1 without exchange %s\n", static_cast<unsigned long long>(seed),
                fmt(auroc.back()).c_str(), fmt(f1.back()).c_str(), fmt(f1_ablation.back()).c_str());
  }
  const double secs = since(t0);
  const double m_auroc = median(auroc), m_f1 = median(f1), m_abl = median(f1_ablation);
  report(5, m_auroc >= 0.90 && m_f1 > m_abl && secs < 60.0,
         "planted communities, median AUROC " + fmt(m_auroc) + ", median F1 " + fmt(m_f1) + " vs " + fmt(m_abl) +
             " without exchange, " + fmt(secs) + " s");
}

void determinism() {
  auto run_once = [] {
    auto data = planted_data(11);
    auto cfg = planted_config(11);
    cfg.train.epochs = 200;
    auto emb = run_deepmne(data.graphs, cfg);
    std::ostringstream tsv;
    write_embedding_tsv(tsv, emb.index, emb.combined);
    auto metrics = kfold_cv(emb.combined, data.labels.assign, 5, 11);
    return std::make_pair(tsv.str(), to_json(metrics).dump(2));
  };
  auto a = run_once();
  auto b = run_once();
  report(6, a.first == b.first && a.second == b.second,
         "two end-to-end runs, embedding TSV and metrics JSON identical (" + std::to_string(a.first.size()) + " + " +
             std::to_string(a.second.size()) + " bytes)");
}

// Fraction of (positive, negative) cell pairs ranked correctly, ties counting half.
double exhaustive_auroc(const BinaryMatrix& y, const Matrix& s) {
  double good = 0, total = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!y(i)) continue;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      if (y(j)) continue;
      total += 1;
      good += s(i) > s(j) ? 1.0 : s(i) == s(j) ? 0.5 : 0.0;
    }
  }
  return good / total;
}

void metric_oracles() {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  int checked = 0;
  while (checked < 50) {
    const auto r = static_cast<Eigen::Index>(2 + rng() % 9);
    const auto c = static_cast<Eigen::Index>(1 + rng() % 4);
    BinaryMatrix y(r, c);
    Matrix s(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) {
        y(i, j) = static_cast<std::uint8_t>(rng() % 2);
        s(i, j) = static_cast<double>(rng() % 6) / 5.0;  // coarse grid forces ties
      }
    auto auc = micro_auroc(y, s);
    if (!auc) continue;
    worst = std::max(worst, std::abs(*auc - exhaustive_auroc(y, s)));
    ++checked;
  }

  BinaryMatrix truth(2, 3), pred(2, 3);
  truth << 1, 0, 1, 0, 1, 0;
  pred << 1, 1, 0, 0, 1, 0;  // TP 2, FP 1, FN 1
  const double f1 = micro_f1(truth, pred);
  BinaryMatrix yt(4, 1);
  yt << 1, 0, 1, 0;
  Matrix st(4, 1);
  st << 0.9, 0.8, 0.7, 0.1;
  const double auc = micro_auroc(yt, st).value_or(-1);
  const bool ok = worst <= 1e-12 && std::abs(f1 - 4.0 / 6.0) <= 1e-15 && auc == 0.75;
  report(7, ok, "AUROC vs pair counting on 50 instances, max diff " + fmt(worst) + "; hand examples F1 " + fmt(f1) +
                    ", AUROC " + fmt(auc));
}

// Planted graph with expected degree about 6 regardless of n.
std::vector<WeightedGraph> constant_degree(std::size_t n, std::uint64_t seed) {
  PlantedSpec spec;
  spec.networks = 3;
  spec.nodes = n;
  spec.communities = 3;
  const double in_pairs = static_cast<double>(n) / 3.0;
  spec.p_in = std::min(1.0, 5.0 / in_pairs);
  spec.p_out = 1.0 / static_cast<double>(n);
  spec.seed = seed;
  return make_planted(spec).graphs;
}

void complexity() {
  std::vector<double> t;
  for (std::size_t n : {50u, 100u, 200u}) {
    auto graphs = constant_degree(n, 606);
    PipelineConfig cfg;
    cfg.layer_dims = {n, 16, 8};
    cfg.constraint_fraction_P = 0.01;
    cfg.train.epochs = 100;
    cfg.train.batch_size = n;
    cfg.train.seed = 606;
    std::vector<double> reps;
    for (int r = 0; r < 3; ++r) {
      auto t0 = Clock::now();
      run_deepmne(graphs, cfg);
      reps.push_back(since(t0));
    }
    t.push_back(median(reps));
  }
  const double r100 = t[1] / t[0], r200 = t[2] / t[0];
  report(8, r100 <= 2 * 4.0 && r200 <= 2 * 16.0,
         "wall clock n=50/100/200: " + fmt(t[0]) + " / " + fmt(t[1]) + " / " + fmt(t[2]) + " s, ratios " + fmt(r100) +
             " (<= 8) and " + fmt(r200) + " (<= 32)");
}

}  // namespace

int main() {
  gradient_oracle();
  rwr_oracle();
  trace_identity();
  constraint_efficacy();
  planted_end_to_end();
  determinism();
  metric_oracles();
  complexity();
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
