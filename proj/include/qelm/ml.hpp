#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qelm {

using Labels = std::vector<int>;

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // k x d, orthonormal rows
  Eigen::VectorXd explained_variance;
  /// Components whose eigenvalue is numerically zero (k beyond the data rank).
  std::vector<bool> degenerate;

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
};

PcaModel pca_fit(const Eigen::MatrixXd& train, std::size_t k);
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& data);

struct ScalerModel {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
  double lo = -6.0;
  double hi = 6.0;
};

ScalerModel scale_fit(const Eigen::MatrixXd& train, double lo = -6.0, double hi = 6.0);
/// Affine min-max map with clipping; constant features go to the range midpoint.
Eigen::MatrixXd scale_apply(const ScalerModel& model, const Eigen::MatrixXd& data);

enum class HeadType { Linear, Mlp };

std::string to_string(HeadType h);
HeadType parse_head(const std::string& s);

struct TrainConfig {
  HeadType head = HeadType::Linear;
  std::vector<std::size_t> hidden{100, 100};  // MLP only
  std::size_t classes = 10;
  double l1 = 1e-4;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int epochs = 50;
  std::size_t batch = 128;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Dense layer z = x W + b, with W stored as (in x out).
struct DenseLayer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

struct ClassifierModel {
  HeadType head = HeadType::Linear;
  std::vector<DenseLayer> layers;
  TrainConfig config;
  std::vector<double> loss_curve;

  std::size_t input_dim() const;
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
  Labels predict(const Eigen::MatrixXd& x) const;
  double accuracy(const Eigen::MatrixXd& x, const Labels& y) const;
};

/// Row-wise softmax, shifted by the row max.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// Glorot-uniform kernels, zero biases.
ClassifierModel init_classifier(std::size_t input_dim, const TrainConfig& cfg);

struct LossGrad {
  double loss = 0.0;
  std::vector<DenseLayer> grad;
};

/// Mean cross-entropy plus l1 * sum |W| over kernels (biases unpenalized).
/// The subgradient of |w| at 0 is taken as 0.
LossGrad loss_and_grad(const ClassifierModel& model, const Eigen::MatrixXd& x, const Labels& y);

ClassifierModel train_classifier(const Eigen::MatrixXd& x, const Labels& y, const TrainConfig& cfg);
ClassifierModel train_softmax(const Eigen::MatrixXd& x, const Labels& y, TrainConfig cfg);
ClassifierModel train_mlp(const Eigen::MatrixXd& x, const Labels& y, TrainConfig cfg);

using Trainer = std::function<ClassifierModel(const Eigen::MatrixXd&, const Labels&)>;

struct FoldReport {
  std::vector<double> accuracies;  // held-out fold
  std::vector<double> test_accuracies;  // fold model on the external test set, if given
  std::vector<std::string> warnings;
  double mean = 0.0;
  double stddev = 0.0;  // population, across folds
  double test_mean = 0.0;
  double test_stddev = 0.0;
};

/// fold[i] for each of n rows: a seeded permutation cut into k contiguous blocks.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

FoldReport kfold_evaluate(const Eigen::MatrixXd& x, const Labels& y, std::size_t k, const Trainer& trainer,
                          std::uint64_t seed, const Eigen::MatrixXd* test_x = nullptr,
                          const Labels* test_y = nullptr);

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows);

}  // namespace qelm
