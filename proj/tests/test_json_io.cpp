#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace deepmne;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
  try {
    parse_pipeline_config(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ConfigJson, MinimalConfigUsesDefaults) {
  auto c = parse_pipeline_config(json{{"layer_dims", {100, 50, 10}}});
  EXPECT_EQ(c.layer_dims, (std::vector<std::size_t>{100, 50, 10}));
  EXPECT_EQ(c.effective_iterations(), 1u);
  EXPECT_EQ(c.constraint_fraction_P, 0.001);
  EXPECT_EQ(c.rwr_alpha, 0.5);
  EXPECT_EQ(c.train.batch_size, 128u);
  EXPECT_EQ(c.train.lambda, 0.1);
  EXPECT_EQ(c.train.activation, Activation::sigmoid);
  EXPECT_EQ(c.strategy, ConstraintStrategy::topk);
  EXPECT_EQ(c.schedule, LayerSchedule::descend);
}

TEST(ConfigJson, ErrorsCarryPointers) {
  EXPECT_EQ(error_of(json{{"layer_dims", {10, 8, 8}}}), "/layer_dims/2: layer_dims must be strictly decreasing");
  EXPECT_EQ(error_of(json::object()), "/layer_dims: required field missing");
  EXPECT_EQ(error_of(json{{"layer_dims", {10, 5}}, {"rwr_alpha", 1.5}}), "/rwr_alpha: must lie in (0, 1]");
  EXPECT_EQ(error_of(json{{"layer_dims", {10, 5}}, {"train", {{"epochs", 0}}}}), "/train/epochs: must be at least 1");
  EXPECT_EQ(error_of(json{{"layer_dims", {10, 5}}, {"train", {{"activation", "relu"}}}}),
            "/train/activation: expected \"sigmoid\" or \"tanh\"");
  EXPECT_EQ(error_of(json{{"layer_dims", {10, 5}}, {"bogus", 1}}), "/bogus: unknown field");
  EXPECT_EQ(error_of(json{{"layer_dims", {10, 5, 2}}, {"iterations_T", 2}}),
            "/iterations_T: exceeds the number of semi-supervised layers (1)");
  EXPECT_EQ(error_of(json{{"layer_dims", {10, 5}}, {"strategy", "threshold"}, {"f1", 0.1}, {"f2", 0.2}}),
            "/f2: must be below f1");
}

TEST(ConfigJson, RoundTripThroughSnapshot) {
  PipelineConfig c;
  c.layer_dims = {60, 30, 10};
  c.constraint_fraction_P = 0.01;
  c.train.activation = Activation::tanh;
  c.train.seed = 1234567890123ULL;
  c.schedule = LayerSchedule::repeat;
  c.iterations_T = 2;
  auto back = parse_pipeline_config(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(EmbedJob, EdgesResolveAgainstBaseDir) {
  json j{{"layer_dims", {4, 2}}, {"edges", {"a.tsv", "/abs/b.tsv"}}};
  auto job = parse_embed_job(j, "/data");
  EXPECT_EQ(job.edges[0], std::filesystem::path("/data/a.tsv"));
  EXPECT_EQ(job.edges[1], std::filesystem::path("/abs/b.tsv"));
  EXPECT_THROW(parse_embed_job(json{{"layer_dims", {4, 2}}, {"edges", {"a.tsv"}}}, "/"), ValidationError);
  EXPECT_THROW(parse_embed_job(json{{"layer_dims", {4, 2}}}, "/"), ValidationError);
}

TEST(MetricsJson, UndefinedValuesBecomeNull) {
  MetricsReport m;
  FoldMetrics f;
  f.defined = false;
  f.micro_auroc = std::nan("");
  m.per_fold.push_back(f);
  auto j = to_json(m);
  EXPECT_TRUE(j["per_fold"]["micro_auroc"][0].is_null());
  for (const char* key : {"accuracy", "micro_f1", "micro_auprc", "micro_auroc"}) EXPECT_TRUE(j.contains(key));
}

TEST(JsonFile, ParseErrorIsValidation) {
  testing_util::TempDir dir("json");
  auto p = testing_util::write_file(dir / "bad.json", "{ not json");
  EXPECT_THROW(read_json_file(p), ValidationError);
  EXPECT_THROW(read_json_file(dir / "missing.json"), IoError);
}
