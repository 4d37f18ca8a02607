// deepmne-planted: writes networks with planted communities plus a label file.
//
//   deepmne-planted --out data/planted --networks 3 --nodes 60 --seed 1
//
// Produces net0.tsv ... net<K-1>.tsv, labels.tsv and config.json (an embed job).

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "deepmne/deepmne.hpp"
#include "deepmne/synthetic.hpp"

namespace fs = std::filesystem;
using namespace deepmne;

int main(int argc, char** argv) {
  CLI::App app{"Generate planted-community networks"};
  PlantedSpec spec;
  fs::path out;
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--networks", spec.networks, "number of networks")->check(CLI::Range(2, 64));
  app.add_option("--nodes", spec.nodes, "nodes per network")->check(CLI::Range(6, 100000));
  app.add_option("--communities", spec.communities, "number of communities")->check(CLI::PositiveNumber);
  app.add_option("--p-in", spec.p_in, "edge probability inside a community")->check(CLI::Range(0.0, 1.0));
  app.add_option("--p-out", spec.p_out, "edge probability across communities")->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", spec.seed, "random seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    auto data = make_planted(spec);
    fs::create_directories(out);
    nlohmann::json job;
    job["edges"] = nlohmann::json::array();
    for (std::size_t k = 0; k < data.graphs.size(); ++k) {
      std::string name = "net" + std::to_string(k) + ".tsv";
      write_edge_list(out / name, data.graphs[k]);
      job["edges"].push_back(name);
    }
    std::ofstream labels(out / "labels.tsv");
    for (std::size_t i = 0; i < spec.nodes; ++i)
      labels << planted_node_name(i) << '\t' << data.labels.labels[data.community[i]] << '\n';
    if (!labels) throw IoError("cannot write labels.tsv");

    std::size_t hidden = std::max<std::size_t>(2, spec.nodes / 2);
    job["layer_dims"] = {spec.nodes, hidden, std::max<std::size_t>(1, hidden / 3)};
    job["constraint_fraction_P"] = 0.01;
    job["train"] = {{"activation", "tanh"}, {"learning_rate", 0.005}, {"epochs", 1500},
                    {"lambda", 1.0},        {"lambda2", 0.0},         {"seed", spec.seed}};
    write_json_file(out / "config.json", job);
    std::cout << "wrote " << data.graphs.size() << " networks to " << out.string() << "\n";
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
