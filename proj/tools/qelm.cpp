// Command-line front end: qelm <ingest|embed|train|sweep|bench|validate> [options]

#include <CLI11.hpp>

#include <iostream>

#include "qelm/commands.hpp"

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> method;
  std::optional<double> omega_2pi;
  std::optional<double> distance_um;
  std::vector<std::size_t> qubits;
};

/// Flags override the config file, which overrides the defaults.
void apply_flags(qelm::ExperimentConfig& cfg, const GlobalFlags& g, const std::string& command) {
  if (g.out) cfg.output_dir = *g.out;
  if (g.seed) {
    cfg.dataset.seed = *g.seed;
    cfg.model.train.seed = *g.seed;
  }
  if (g.workers) cfg.workers = *g.workers;
  if (g.method) cfg.evolution.method = qelm::parse_method(*g.method);
  if (g.omega_2pi) cfg.chain.omega_2pi = *g.omega_2pi;
  if (g.distance_um) cfg.chain.spacing_um = *g.distance_um;
  if (!g.qubits.empty()) {
    if (command == "bench") {
      cfg.bench.qubits = g.qubits;
    } else if (command == "validate") {
      cfg.validate.qubits = g.qubits.front();
    } else {
      cfg.encoding.k = g.qubits.front();
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rydberg-chain tensor-network feature embeddings for extreme learning machines"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "Seed for subsetting, folds and training");
  app.add_option("--workers", g.workers, "Worker threads (0 = all cores)");
  app.add_option("--method", g.method, "TDVP variant")->check(CLI::IsMember({"one-site", "two-site"}));
  app.add_option("--omega", g.omega_2pi, "Rabi frequency in units of 2*pi rad/us");
  app.add_option("--distance-um", g.distance_um, "Atom spacing in um");
  app.add_option("--qubits", g.qubits, "Chain length (bench: list of lengths)");

  auto* ingest = app.add_subcommand("ingest", "Load the dataset and print counts and checksums");
  auto* embed = app.add_subcommand("embed", "PCA, scale and embed train/test splits into the cache");
  auto* train = app.add_subcommand("train", "k-fold training on cached features");
  qelm::TrainRequest treq;
  std::optional<std::string> head;
  train->add_option("--features", treq.features, "embedding or pca")->check(CLI::IsMember({"embedding", "pca"}));
  train->add_option("--head", head, "linear or mlp-100-100")->check(CLI::IsMember({"linear", "mlp", "mlp-100-100"}));
  train->add_option("--t-max", treq.t_max, "Use snapshots up to this time only (us)");
  auto* sweep = app.add_subcommand("sweep", "Omega x distance grid of accuracy and disorder metrics");
  std::vector<double> omegas, distances;
  std::optional<std::size_t> sample;
  sweep->add_option("--omegas", omegas, "Rabi frequencies in units of 2*pi rad/us");
  sweep->add_option("--distances", distances, "Spacings in um");
  sweep->add_option("--sample", sample, "Records per cell");
  auto* bench = app.add_subcommand("bench", "Time single-record embedding for both TDVP variants");
  auto* validate = app.add_subcommand("validate", "Compare TDVP traces with the dense oracle");
  std::optional<double> tolerance;
  validate->add_option("--tolerance", tolerance, "Max |deviation| allowed for two-site TDVP");
  for (auto* sub : {ingest, embed, train, sweep, bench, validate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? qelm::kExitOk : qelm::kExitInput;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  qelm::ExperimentConfig cfg;
  try {
    if (!g.config_path.empty()) cfg = qelm::load_config(g.config_path);
    apply_flags(cfg, g, command);
    if (head) cfg.model.train.head = qelm::parse_head(*head);
    if (!omegas.empty()) cfg.sweep.omegas_2pi = omegas;
    if (!distances.empty()) cfg.sweep.distances_um = distances;
    if (sample) cfg.sweep.sample = *sample;
    if (tolerance) cfg.validate.tolerance = *tolerance;
    cfg.evolution.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qelm::kExitInput;
  }

  if (command == "ingest") return qelm::cmd_ingest(cfg, std::cout);
  if (command == "embed") return qelm::cmd_embed(cfg, std::cout);
  if (command == "train") return qelm::cmd_train(cfg, treq, std::cout);
  if (command == "sweep") return qelm::cmd_sweep(cfg, std::cout);
  if (command == "bench") return qelm::cmd_bench(cfg, std::cout);
  return qelm::cmd_validate(cfg, std::cout);
}
