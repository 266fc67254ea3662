#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "qelm/config.hpp"
#include "qelm/dataset.hpp"

namespace qelm {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitInput = 2 };

/// Missing or malformed user input; commands map it to kExitInput.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolves a dataset path: as given, else under $QELM_DATA_DIR (full
/// relative path, then basename). Throws InputError listing every candidate.
std::string resolve_data_path(const std::string& path);

ImageDataset load_configured_dataset(const ExperimentConfig& cfg);

/// PCA and min-max scaling fitted on the training split only.
struct PreparedFeatures {
  Eigen::MatrixXd train_x;
  Labels train_y;
  Eigen::MatrixXd test_x;
  Labels test_y;
  PcaModel pca;
  ScalerModel scaler;
};

PreparedFeatures prepare_features(const ImageDataset& ds, const ExperimentConfig& cfg);

std::string embedding_dir(const ExperimentConfig& cfg, const std::string& split);
std::string features_dir(const ExperimentConfig& cfg, const std::string& split);

struct TrainRequest {
  std::string features = "embedding";  // or "pca"
  std::optional<double> t_max;
};

int cmd_ingest(const ExperimentConfig& cfg, std::ostream& log);
int cmd_embed(const ExperimentConfig& cfg, std::ostream& log);
int cmd_train(const ExperimentConfig& cfg, const TrainRequest& req, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);
int cmd_bench(const ExperimentConfig& cfg, std::ostream& log);
int cmd_validate(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace qelm
