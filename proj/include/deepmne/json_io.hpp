#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepmne/evaluation.hpp"
#include "deepmne/pipeline.hpp"

namespace deepmne {

using json = nlohmann::json;

// Input files plus pipeline configuration, as read from an embed config file.
struct EmbedJob {
  std::vector<std::filesystem::path> edges;
  PipelineConfig config;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& pointer, const std::string& what) {
  throw ValidationError(pointer + ": " + what);
}

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
    if (!j_.is_object()) config_error(pointer_.empty() ? "/" : pointer_, "expected an object");
  }

  std::string at(const std::string& key) const { return pointer_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& get(const std::string& key) const { return j_.at(key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) config_error(at(key), "expected a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      config_error(at(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) config_error(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) config_error(at(key), "expected a string");
    return v.get<std::string>();
  }

  void reject_unknown(std::initializer_list<const char*> known) const {
    for (const auto& [key, value] : j_.items()) {
      bool ok = false;
      for (const char* k : known) ok = ok || key == k;
      if (!ok) config_error(at(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string pointer_;
};

}  // namespace detail

inline TrainConfig parse_train_config(const json& j, const std::string& pointer = "/train") {
  detail::ObjectReader r(j, pointer);
  r.reject_unknown({"learning_rate", "batch_size", "epochs", "lambda1", "lambda2", "lambda", "seed", "activation"});
  TrainConfig c;
  c.learning_rate = r.number("learning_rate", c.learning_rate);
  if (!(c.learning_rate > 0.0)) detail::config_error(r.at("learning_rate"), "must be positive");
  c.batch_size = r.count("batch_size", c.batch_size);
  if (c.batch_size < 1) detail::config_error(r.at("batch_size"), "must be at least 1");
  c.epochs = r.count("epochs", c.epochs);
  if (c.epochs < 1) detail::config_error(r.at("epochs"), "must be at least 1");
  c.lambda1 = r.number("lambda1", c.lambda1);
  if (!(c.lambda1 >= 0.0)) detail::config_error(r.at("lambda1"), "must be nonnegative");
  c.lambda2 = r.number("lambda2", c.lambda2);
  if (!(c.lambda2 >= 0.0)) detail::config_error(r.at("lambda2"), "must be nonnegative");
  c.lambda = r.number("lambda", c.lambda);
  if (!(c.lambda >= 0.0)) detail::config_error(r.at("lambda"), "must be nonnegative");
  c.seed = r.count("seed", c.seed);
  auto act = r.text("activation", to_string(c.activation));
  if (act != "sigmoid" && act != "tanh") detail::config_error(r.at("activation"), "expected \"sigmoid\" or \"tanh\"");
  c.activation = parse_activation(act);
  return c;
}

inline PipelineConfig parse_pipeline_config(const json& j) {
  detail::ObjectReader r(j, "");
  r.reject_unknown({"edges", "layer_dims", "iterations_T", "constraint_fraction_P", "rwr_alpha", "rwr_tol",
                    "rwr_max_iter", "skip_rwr", "train", "strategy", "f1", "f2", "schedule"});
  PipelineConfig c;
  if (!r.has("layer_dims")) detail::config_error("/layer_dims", "required field missing");
  const auto& dims = r.get("layer_dims");
  if (!dims.is_array() || dims.size() < 2) detail::config_error("/layer_dims", "expected an array of at least 2 integers");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto ptr = "/layer_dims/" + std::to_string(i);
    if (!dims[i].is_number_integer() || dims[i].get<std::int64_t>() < 1)
      detail::config_error(ptr, "expected a positive integer");
    auto d = dims[i].get<std::size_t>();
    if (i > 0 && d >= c.layer_dims.back()) detail::config_error(ptr, "layer_dims must be strictly decreasing");
    c.layer_dims.push_back(d);
  }
  if (r.has("iterations_T")) c.iterations_T = r.count("iterations_T", 0);
  c.constraint_fraction_P = r.number("constraint_fraction_P", c.constraint_fraction_P);
  if (!(c.constraint_fraction_P >= 0.0 && c.constraint_fraction_P < 1.0))
    detail::config_error("/constraint_fraction_P", "must lie in [0, 1)");
  c.rwr_alpha = r.number("rwr_alpha", c.rwr_alpha);
  if (!(c.rwr_alpha > 0.0 && c.rwr_alpha <= 1.0)) detail::config_error("/rwr_alpha", "must lie in (0, 1]");
  c.rwr_tol = r.number("rwr_tol", c.rwr_tol);
  if (!(c.rwr_tol > 0.0)) detail::config_error("/rwr_tol", "must be positive");
  c.rwr_max_iter = static_cast<int>(r.count("rwr_max_iter", static_cast<std::uint64_t>(c.rwr_max_iter)));
  if (c.rwr_max_iter < 1) detail::config_error("/rwr_max_iter", "must be at least 1");
  c.skip_rwr = r.flag("skip_rwr", c.skip_rwr);
  if (r.has("train")) c.train = parse_train_config(r.get("train"));

  auto strategy = r.text("strategy", "topk");
  if (strategy == "topk") c.strategy = ConstraintStrategy::topk;
  else if (strategy == "threshold") c.strategy = ConstraintStrategy::threshold;
  else detail::config_error("/strategy", "expected \"topk\" or \"threshold\"");
  c.f1 = r.number("f1", c.f1);
  c.f2 = r.number("f2", c.f2);
  if (c.strategy == ConstraintStrategy::threshold && !(c.f2 < c.f1)) detail::config_error("/f2", "must be below f1");

  auto schedule = r.text("schedule", "descend");
  if (schedule == "descend") c.schedule = LayerSchedule::descend;
  else if (schedule == "repeat") c.schedule = LayerSchedule::repeat;
  else detail::config_error("/schedule", "expected \"descend\" or \"repeat\"");

  if (c.schedule == LayerSchedule::descend && c.effective_iterations() > c.layer_dims.size() - 2)
    detail::config_error("/iterations_T", "exceeds the number of semi-supervised layers (" +
                                              std::to_string(c.layer_dims.size() - 2) + ")");
  c.validate();
  return c;
}

// Edge paths are resolved relative to base_dir.
inline EmbedJob parse_embed_job(const json& j, const std::filesystem::path& base_dir) {
  EmbedJob job;
  job.config = parse_pipeline_config(j);
  if (!j.contains("edges")) detail::config_error("/edges", "required field missing");
  const auto& edges = j.at("edges");
  if (!edges.is_array() || edges.size() < 2) detail::config_error("/edges", "expected an array of at least 2 paths");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!edges[i].is_string()) detail::config_error("/edges/" + std::to_string(i), "expected a path string");
    std::filesystem::path p = edges[i].get<std::string>();
    job.edges.push_back(p.is_absolute() ? p : base_dir / p);
  }
  return job;
}

inline json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
          {"lambda1", c.lambda1},             {"lambda2", c.lambda2},       {"lambda", c.lambda},
          {"seed", c.seed},                   {"activation", to_string(c.activation)}};
}

inline json to_json(const PipelineConfig& c) {
  json j = {{"layer_dims", c.layer_dims},
            {"constraint_fraction_P", c.constraint_fraction_P},
            {"rwr_alpha", c.rwr_alpha},
            {"rwr_tol", c.rwr_tol},
            {"rwr_max_iter", c.rwr_max_iter},
            {"skip_rwr", c.skip_rwr},
            {"train", to_json(c.train)},
            {"strategy", c.strategy == ConstraintStrategy::topk ? "topk" : "threshold"},
            {"f1", c.f1},
            {"f2", c.f2},
            {"schedule", c.schedule == LayerSchedule::descend ? "descend" : "repeat"}};
  j["iterations_T"] = c.effective_iterations();
  return j;
}

inline json to_json(const RunRecord& r) {
  json stages = json::array();
  for (const auto& s : r.stages) {
    json js = {{"depth", s.depth},         {"round", s.round},         {"network", s.network},
               {"in_dim", s.in_dim},       {"out_dim", s.out_dim},     {"semi", s.semi},
               {"loss_trace", s.loss_trace},
               {"final_loss", s.loss_trace.empty() ? 0.0 : s.loss_trace.back()},
               {"must_in", s.must_in},     {"cannot_in", s.cannot_in}, {"conflicts", s.conflicts},
               {"must_out", s.must_out},   {"cannot_out", s.cannot_out},
               {"seconds", s.seconds}};
    js["churn"] = s.churn ? json(*s.churn) : json(nullptr);
    stages.push_back(std::move(js));
  }
  return {{"config", to_json(r.config)},
          {"rwr_iterations", r.rwr_iterations},
          {"stages", stages},
          {"wall_clock", {{"features", r.feature_seconds}, {"total", r.total_seconds}}}};
}

inline json to_json(const MetricsReport& m) {
  json per_fold = {{"accuracy", json::array()}, {"micro_f1", json::array()}, {"micro_auprc", json::array()},
                   {"micro_auroc", json::array()}, {"defined", json::array()}};
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& f : m.per_fold) {
    per_fold["accuracy"].push_back(num(f.accuracy));
    per_fold["micro_f1"].push_back(num(f.micro_f1));
    per_fold["micro_auprc"].push_back(num(f.micro_auprc));
    per_fold["micro_auroc"].push_back(num(f.micro_auroc));
    per_fold["defined"].push_back(f.defined);
  }
  return {{"accuracy", m.mean.accuracy},       {"micro_f1", m.mean.micro_f1},
          {"micro_auprc", m.mean.micro_auprc}, {"micro_auroc", m.mean.micro_auroc},
          {"folds", m.per_fold.size()},        {"fold_seed", m.fold_seed},
          {"per_fold", per_fold},              {"warnings", m.warnings}};
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

}  // namespace deepmne
