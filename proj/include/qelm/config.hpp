#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qelm/embedding.hpp"
#include "qelm/json_io.hpp"
#include "qelm/ml.hpp"

namespace qelm {

/// Frequencies in the config file and on the command line are given in units
/// of 2*pi rad/us (i.e. MHz), as is customary; they are converted on load.
struct ExperimentConfig {
  struct Dataset {
    std::string train_images = "train-images-idx3-ubyte.gz";
    std::string train_labels = "train-labels-idx1-ubyte.gz";
    std::string csv;  // when set, replaces the IDX pair
    std::size_t n_train = 2000;
    std::size_t n_test = 500;
    std::uint64_t seed = 0;
  } dataset;

  struct Encoding {
    std::size_t k = 10;
    double scale_lo = -6.0;
    double scale_hi = 6.0;
  } encoding;

  struct Chain {
    double omega_2pi = 1.0;
    double spacing_um = 11.0;
    double phi = 0.0;
    double c6 = kRydbergC6;
    double v_threshold = 1e-4;
    bool all_pairs = false;
  } chain;

  EvolutionConfig evolution;

  struct Model {
    TrainConfig train;
    std::size_t k_folds = 5;
  } model;

  struct Sweep {
    std::vector<double> omegas_2pi{0.5, 1.0, 1.5, 2.0};
    std::vector<double> distances_um{9.0, 10.0, 11.0, 13.0};
    std::size_t sample = 500;
  } sweep;

  struct Bench {
    std::vector<std::size_t> qubits{4, 8, 12, 16, 20};
    int repeats = 1;
  } bench;

  struct Validate {
    std::size_t qubits = 8;
    double omega_2pi = 1.1;
    double detuning_2pi = 1.2;
    double tolerance = 0.02;
  } validate;

  std::string output_dir = "qelm-out";
  unsigned workers = 0;  // 0 = hardware concurrency

  /// Chain template for n sites with zero detunings.
  ChainSpec chain_spec(std::size_t n) const;
};

/// The published JSON schema (draft-07 subset) for config files.
const std::string& config_schema_text();
const json& config_schema();

/// Errors as "path: message"; empty when valid. Supports the keywords used by
/// the published schema: type, properties, required, additionalProperties,
/// items, enum, minimum, exclusiveMinimum, maximum, minItems.
std::vector<std::string> validate_against_schema(const json& doc, const json& schema);

/// Validates against the schema, then overlays the document on the defaults.
ExperimentConfig parse_config(const json& doc);
ExperimentConfig load_config(const std::string& path);
json config_to_json(const ExperimentConfig& cfg);

}  // namespace qelm
