// deepmne: command-line front end.
//
//   deepmne diffuse  --edges a.tsv b.tsv --alpha 0.5 --out runs/diffuse
//   deepmne embed    --config config.json --out runs/embed [--seed 7]
//   deepmne evaluate --embeddings runs/embed/combined.tsv --labels labels.tsv --folds 5 --seed 0
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deepmne/deepmne.hpp"

namespace fs = std::filesystem;
using namespace deepmne;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Creates the run directory. An existing directory is only reused with --force.
void prepare_run_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!force) throw ValidationError("run directory '" + dir.string() + "' already exists (use --force to overwrite)");
    if (!fs::is_directory(dir)) throw ValidationError("'" + dir.string() + "' exists and is not a directory");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void require_readable(const std::vector<fs::path>& paths) {
  for (const auto& p : paths)
    if (!fs::is_regular_file(p)) throw IoError("cannot read '" + p.string() + "': no such file");
}

// Output file names from input stems, made unique by a numeric suffix.
std::vector<std::string> unique_stems(const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  std::map<std::string, int> seen;
  for (const auto& p : paths) {
    std::string stem = p.stem().string();
    if (stem.empty()) stem = "network";
    int n = seen[stem]++;
    out.push_back(n == 0 ? stem : stem + "_" + std::to_string(n));
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (out[i] == out[j]) out[i] += "_" + std::to_string(i);
  return out;
}

std::vector<WeightedGraph> load_graphs(const std::vector<fs::path>& paths) {
  require_readable(paths);
  auto index = build_node_index(paths);
  std::vector<WeightedGraph> graphs;
  for (const auto& p : paths) graphs.push_back(load_edge_list(p, index));
  return graphs;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct DiffuseArgs {
  std::vector<std::string> edges;
  double alpha = 0.5;
  double tol = 1e-8;
  int max_iter = 1000;
  std::string out;
  bool force = false;
};

int cmd_diffuse(const DiffuseArgs& a) {
  if (!(a.alpha > 0.0 && a.alpha <= 1.0))
    throw ValidationError("--alpha " + format_double(a.alpha) + " is out of range; expected 0 < alpha <= 1");
  if (!(a.tol > 0.0)) throw ValidationError("--tol must be positive");
  if (a.max_iter < 1) throw ValidationError("--max-iter must be at least 1");
  std::vector<fs::path> paths(a.edges.begin(), a.edges.end());
  auto graphs = load_graphs(paths);
  prepare_run_dir(a.out, a.force);

  auto t0 = std::chrono::steady_clock::now();
  auto stems = unique_stems(paths);
  json networks = json::array();
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    auto tk = std::chrono::steady_clock::now();
    auto transition = transition_matrix(adjacency(graphs[k]));
    auto d = rwr(transition.T, a.alpha, a.tol, a.max_iter);
    auto file = fs::path(a.out) / (stems[k] + ".dmne");
    save_diffusion(file, d);
    networks.push_back({{"edges", fs::absolute(paths[k]).string()},
                        {"file", file.filename().string()},
                        {"edge_count", graphs[k].edges.size()},
                        {"isolated_nodes", transition.isolated.size()},
                        {"iterations", d.iterations_used},
                        {"residual", d.residual},
                        {"converged", d.converged},
                        {"seconds", seconds_since(tk)}});
  }
  json manifest = {{"command", "diffuse"},
                   {"nodes", graphs.front().node_count()},
                   {"node_ids", graphs.front().index.names()},
                   {"alpha", a.alpha},
                   {"tol", a.tol},
                   {"max_iter", a.max_iter},
                   {"networks", networks},
                   {"wall_clock", {{"total", seconds_since(t0)}}}};
  write_json_file(fs::path(a.out) / "manifest.json", manifest);
  return kExitOk;
}

struct EmbedArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  bool dump_constraints = false;
};

int cmd_embed(const EmbedArgs& a) {
  fs::path config_path = a.config;
  auto raw = read_json_file(config_path);
  auto job = parse_embed_job(raw, fs::absolute(config_path).parent_path());
  if (a.seed) job.config.train.seed = *a.seed;
  auto graphs = load_graphs(job.edges);
  prepare_run_dir(a.out, a.force);

  auto result = run_deepmne(graphs, job.config);
  auto stems = unique_stems(job.edges);
  fs::path out = a.out;
  for (std::size_t k = 0; k < result.per_network.size(); ++k)
    write_embedding_tsv(out / (stems[k] + ".tsv"), result.index, result.per_network[k]);
  write_embedding_tsv(out / "combined.tsv", result.index, result.combined);

  if (a.dump_constraints) {
    // Final constraints per network, from the last stage that extracted any.
    std::vector<const StageRecord*> last(result.per_network.size(), nullptr);
    for (const auto& s : result.provenance.stages)
      if (s.semi || s.must_out + s.cannot_out > 0) last[s.network] = &s;
    for (std::size_t k = 0; k < last.size(); ++k)
      write_constraint_dump(out / ("constraints_" + stems[k] + ".txt"), last[k] ? last[k]->extracted : ConstraintList{});
  }

  // Snapshot that reproduces this run when passed back to `deepmne embed --config`.
  json snapshot = to_json(job.config);
  snapshot["edges"] = json::array();
  for (const auto& p : job.edges) snapshot["edges"].push_back(fs::absolute(p).string());
  write_json_file(out / "config.json", snapshot);

  json manifest = to_json(result.provenance);
  manifest["command"] = "embed";
  manifest["config"] = snapshot;
  manifest["nodes"] = result.index.size();
  json outputs = json::array();
  for (const auto& s : stems) outputs.push_back(s + ".tsv");
  outputs.push_back("combined.tsv");
  manifest["outputs"] = outputs;
  write_json_file(out / "manifest.json", manifest);
  return kExitOk;
}

struct EvaluateArgs {
  std::string embeddings;
  std::string scores;
  std::string labels;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::size_t epochs = 500;
  double lr = 0.5;
  std::string out;
  std::string export_scores;
  bool force = false;
};

std::vector<std::string> label_file_nodes(const fs::path& path) {
  auto in = detail::open_input(path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    ids.push_back(line.substr(0, line.find('\t')));
  }
  return ids;
}

// Label rows aligned to the given node ids; exits with the first offenders when ids are unknown.
BinaryMatrix aligned_labels(const fs::path& labels_path, const std::vector<std::string>& ids,
                            std::vector<std::string>* label_names) {
  NodeIndex label_index(label_file_nodes(labels_path));
  std::vector<std::string> offenders;
  for (const auto& id : ids)
    if (!label_index.find(id)) offenders.push_back(id);
  if (!offenders.empty()) {
    std::string msg = std::to_string(offenders.size()) + " row id(s) missing from the label file, first ones:";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, offenders.size()); ++i) msg += " " + offenders[i];
    throw ValidationError(msg);
  }
  auto labels = load_labels(labels_path, label_index);
  BinaryMatrix y(static_cast<Eigen::Index>(ids.size()), labels.assign.cols());
  for (std::size_t i = 0; i < ids.size(); ++i)
    y.row(static_cast<Eigen::Index>(i)) = labels.assign.row(static_cast<Eigen::Index>(*label_index.find(ids[i])));
  if (label_names) *label_names = labels.labels;
  return y;
}

int cmd_evaluate(const EvaluateArgs& a) {
  if (a.folds < 2) throw ValidationError("--folds must be at least 2");
  if (a.embeddings.empty() == a.scores.empty())
    throw ValidationError("pass exactly one of --embeddings or --scores");
  if (!a.out.empty()) prepare_run_dir(a.out, a.force);

  json result;
  if (!a.scores.empty()) {
    auto table = read_scores_tsv(a.scores);
    std::vector<std::string> names;
    auto y = aligned_labels(a.labels, table.node_ids, &names);
    if (names != table.labels) throw ValidationError("score columns do not match the label set of the label file");
    auto m = evaluate_scores(y, table.scores);
    if (!m.defined) throw ValidationError("ranking metrics undefined: no positive or no negative cells");
    result = {{"accuracy", m.accuracy}, {"micro_f1", m.micro_f1}, {"micro_auprc", m.micro_auprc},
              {"micro_auroc", m.micro_auroc}, {"source", "scores"}};
  } else {
    auto table = read_embedding_tsv(a.embeddings);
    std::vector<std::string> names;
    auto y = aligned_labels(a.labels, table.ids, &names);
    ClassifierConfig cc;
    cc.epochs = a.epochs;
    cc.learning_rate = a.lr;
    auto report = kfold_cv(table.values, y, a.folds, a.seed, cc);
    result = to_json(report);
    if (!a.export_scores.empty()) {
      std::ofstream os(a.export_scores);
      if (!os) throw IoError("cannot open '" + a.export_scores + "' for writing");
      write_scores_tsv(os, table.ids, names, report.held_out_scores);
    }
  }
  std::cout << result.dump(2) << '\n';
  if (!a.out.empty()) write_json_file(fs::path(a.out) / "metrics.json", result);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-network node embedding with constraint-exchanging autoencoders"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores); results do not depend on it");

  DiffuseArgs diffuse;
  auto* sub_diffuse = app.add_subcommand("diffuse", "Random walk with restart matrix per network");
  sub_diffuse->add_option("--edges", diffuse.edges, "Edge-list files")->required()->expected(1, -1);
  sub_diffuse->add_option("--alpha", diffuse.alpha, "Restart probability in (0, 1]")->capture_default_str();
  sub_diffuse->add_option("--tol", diffuse.tol, "Max-norm convergence threshold")->capture_default_str();
  sub_diffuse->add_option("--max-iter", diffuse.max_iter, "Iteration cap per column")->capture_default_str();
  sub_diffuse->add_option("--out", diffuse.out, "Run directory")->required();
  sub_diffuse->add_flag("--force", diffuse.force, "Reuse an existing run directory");

  EmbedArgs embed;
  auto* sub_embed = app.add_subcommand("embed", "Learn node embeddings from several networks");
  sub_embed->add_option("--config", embed.config, "Pipeline config JSON")->required();
  sub_embed->add_option("--out", embed.out, "Run directory")->required();
  sub_embed->add_option("--seed", embed.seed, "Overrides train.seed from the config");
  sub_embed->add_flag("--force", embed.force, "Reuse an existing run directory");
  sub_embed->add_flag("--dump-constraints", embed.dump_constraints, "Write the final constraint sets");

  EvaluateArgs evaluate;
  auto* sub_eval = app.add_subcommand("evaluate", "Cross-validated multi-label classification metrics");
  sub_eval->add_option("--embeddings", evaluate.embeddings, "Embedding TSV (node_id, values...)");
  sub_eval->add_option("--scores", evaluate.scores, "Externally produced score TSV, evaluated without training");
  sub_eval->add_option("--labels", evaluate.labels, "Label file (node<TAB>label,label,...)")->required();
  sub_eval->add_option("--folds", evaluate.folds, "Cross-validation folds")->capture_default_str();
  sub_eval->add_option("--seed", evaluate.seed, "Fold assignment and classifier seed")->capture_default_str();
  sub_eval->add_option("--epochs", evaluate.epochs, "Classifier gradient steps")->capture_default_str();
  sub_eval->add_option("--lr", evaluate.lr, "Classifier learning rate")->capture_default_str();
  sub_eval->add_option("--out", evaluate.out, "Run directory for metrics.json");
  sub_eval->add_option("--export-scores", evaluate.export_scores, "Write held-out scores as TSV");
  sub_eval->add_flag("--force", evaluate.force, "Reuse an existing run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  set_thread_limit(threads);
  try {
    if (*sub_diffuse) return cmd_diffuse(diffuse);
    if (*sub_embed) return cmd_embed(embed);
    if (*sub_eval) return cmd_evaluate(evaluate);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
