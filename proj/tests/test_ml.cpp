#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "qelm/ml.hpp"
#include "qelm/random.hpp"

using namespace qelm;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, lo, hi);
  return m;
}

Labels random_labels(std::size_t n, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Labels y(n);
  for (int& v : y) v = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(classes)));
  return y;
}

// Two-class XOR of the quadrant signs, points away from the axes.
void xor_data(std::size_t n, std::uint64_t seed, Eigen::MatrixXd& x, Labels& y) {
  Rng rng(seed);
  x.resize(static_cast<Eigen::Index>(n), 2);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = uniform(rng, 0.2, 1.0) * (uniform01(rng) < 0.5 ? -1 : 1);
    const double b = uniform(rng, 0.2, 1.0) * (uniform01(rng) < 0.5 ? -1 : 1);
    x(static_cast<Eigen::Index>(i), 0) = a;
    x(static_cast<Eigen::Index>(i), 1) = b;
    y[i] = (a > 0) != (b > 0);
  }
}

double max_rel_grad_error(const ClassifierModel& base, const Eigen::MatrixXd& x, const Labels& y) {
  const LossGrad g = loss_and_grad(base, x, y);
  double worst = 0.0;
  const double h = 1e-6;
  auto check = [&](double analytic, auto&& perturb) {
    ClassifierModel p = base, m = base;
    perturb(p, h);
    perturb(m, -h);
    const double numeric = (loss_and_grad(p, x, y).loss - loss_and_grad(m, x, y).loss) / (2 * h);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3}));
  };
  for (std::size_t l = 0; l < base.layers.size(); ++l) {
    const auto& w = base.layers[l].w;
    for (Eigen::Index r = 0; r < w.rows(); r += std::max<Eigen::Index>(1, w.rows() / 4)) {
      for (Eigen::Index c = 0; c < w.cols(); c += std::max<Eigen::Index>(1, w.cols() / 4)) {
        check(g.grad[l].w(r, c), [&](ClassifierModel& mm, double d) { mm.layers[l].w(r, c) += d; });
      }
    }
    for (Eigen::Index k = 0; k < base.layers[l].b.size(); k += 3) {
      check(g.grad[l].b(k), [&](ClassifierModel& mm, double d) { mm.layers[l].b(k) += d; });
    }
  }
  return worst;
}

}  // namespace

TEST(Pca, LineInThePlane) {
  // Points t * (0.6, 0.8) + (1, 2): one component carries all the variance.
  Eigen::MatrixXd x(5, 2);
  const double t[] = {-2, -1, 0, 1, 2};
  for (int i = 0; i < 5; ++i) x.row(i) << 1 + 0.6 * t[i], 2 + 0.8 * t[i];
  const PcaModel m = pca_fit(x, 2);
  EXPECT_NEAR(m.components(0, 0), 0.6, 1e-12);
  EXPECT_NEAR(m.components(0, 1), 0.8, 1e-12);
  EXPECT_NEAR(m.explained_variance(0), 2.5, 1e-12);  // sum t^2 / (n - 1)
  EXPECT_NEAR(m.explained_variance(1), 0.0, 1e-12);
  EXPECT_FALSE(m.degenerate[0]);
  EXPECT_TRUE(m.degenerate[1]);
  EXPECT_NEAR(m.mean(0), 1.0, 1e-15);
  const Eigen::MatrixXd z = pca_transform(m, x);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(z(i, 0), t[i], 1e-12);
}

TEST(Pca, MatchesSvdOracle) {
  const Eigen::MatrixXd x = random_matrix(60, 20, 1) * random_matrix(20, 20, 2);
  const PcaModel m = pca_fit(x, 10);
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  for (Eigen::Index k = 0; k < 10; ++k) {
    EXPECT_NEAR(m.explained_variance(k), svd.singularValues()(k) * svd.singularValues()(k) / 59.0, 1e-9);
    const double overlap = std::abs(m.components.row(k).dot(svd.matrixV().col(k)));
    EXPECT_NEAR(overlap, 1.0, 1e-9);
    // Sign rule: largest-magnitude loading is positive.
    Eigen::Index arg;
    m.components.row(k).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(m.components(k, arg), 0.0);
  }
  EXPECT_LT((m.components * m.components.transpose() - Eigen::MatrixXd::Identity(10, 10)).norm(), 1e-10);
}

TEST(Pca, RejectsBadK) {
  const Eigen::MatrixXd x = random_matrix(5, 3, 3);
  EXPECT_THROW(pca_fit(x, 0), std::invalid_argument);
  EXPECT_THROW(pca_fit(x, 4), std::invalid_argument);
  EXPECT_THROW(pca_transform(pca_fit(x, 2), random_matrix(2, 4, 4)), std::invalid_argument);
}

TEST(Scaler, MinMaxWithClipAndConstant) {
  Eigen::MatrixXd train(3, 2);
  train << 0, 10, 2, 10, 4, 10;
  const ScalerModel s = scale_fit(train);
  const Eigen::MatrixXd a = scale_apply(s, train);
  EXPECT_DOUBLE_EQ(a(0, 0), -6.0);
  EXPECT_DOUBLE_EQ(a(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(a(2, 0), 6.0);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(a(i, 1), 0.0);
  Eigen::MatrixXd test(2, 2);
  test << 5, 11, -1, 0;
  const Eigen::MatrixXd b = scale_apply(s, test);
  EXPECT_DOUBLE_EQ(b(0, 0), 6.0);
  EXPECT_DOUBLE_EQ(b(1, 0), -6.0);
  EXPECT_DOUBLE_EQ(scale_apply(scale_fit(train, 0.0, 1.0), train)(1, 0), 0.5);
  EXPECT_THROW(scale_fit(train, 1.0, 1.0), std::invalid_argument);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  const Eigen::MatrixXd z = random_matrix(4, 10, 5, -50, 50);
  const Eigen::MatrixXd p = softmax_rows(z);
  for (Eigen::Index r = 0; r < 4; ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-14);
  EXPECT_LT((softmax_rows((z.array() + 700.0).matrix()) - p).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(softmax_rows(Eigen::MatrixXd::Constant(1, 3, 1000.0)).allFinite());
}

TEST(Heads, Names) {
  EXPECT_EQ(parse_head("linear"), HeadType::Linear);
  EXPECT_EQ(parse_head("mlp-100-100"), HeadType::Mlp);
  EXPECT_EQ(to_string(HeadType::Mlp), "mlp-100-100");
  EXPECT_THROW(parse_head("svm"), std::invalid_argument);
}

TEST(Classifier, InitShapes) {
  TrainConfig c;
  c.head = HeadType::Mlp;
  const ClassifierModel m = init_classifier(7, c);
  ASSERT_EQ(m.layers.size(), 3u);
  EXPECT_EQ(m.layers[0].w.rows(), 7);
  EXPECT_EQ(m.layers[1].w.rows(), 100);
  EXPECT_EQ(m.layers[2].w.cols(), 10);
  EXPECT_EQ(m.input_dim(), 7u);
  const double limit = std::sqrt(6.0 / (7 + 100));
  EXPECT_LE(m.layers[0].w.cwiseAbs().maxCoeff(), limit);
  EXPECT_EQ(m.layers[0].b.squaredNorm(), 0.0);
}

TEST(Classifier, LinearGradientMatchesFiniteDifference) {
  TrainConfig c;
  c.l1 = 1e-3;
  const ClassifierModel m = init_classifier(6, c);
  EXPECT_LT(max_rel_grad_error(m, random_matrix(30, 6, 6), random_labels(30, 10, 7)), 1e-5);
}

TEST(Classifier, MlpGradientMatchesFiniteDifference) {
  TrainConfig c;
  c.head = HeadType::Mlp;
  c.l1 = 1e-3;
  c.hidden = {12, 9};
  const ClassifierModel m = init_classifier(5, c);
  EXPECT_LT(max_rel_grad_error(m, random_matrix(25, 5, 8), random_labels(25, 10, 9)), 1e-4);
}

TEST(Classifier, LossIncludesL1Penalty) {
  TrainConfig c;
  c.l1 = 0.0;
  ClassifierModel m = init_classifier(4, c);
  const Eigen::MatrixXd x = random_matrix(10, 4, 10);
  const Labels y = random_labels(10, 10, 11);
  const double base = loss_and_grad(m, x, y).loss;
  m.config.l1 = 0.5;
  EXPECT_NEAR(loss_and_grad(m, x, y).loss, base + 0.5 * m.layers[0].w.cwiseAbs().sum(), 1e-12);
}

TEST(Training, SeparableBlobsReachFullAccuracy) {
  Rng rng(12);
  Eigen::MatrixXd x(200, 3);
  Labels y(200);
  for (int i = 0; i < 200; ++i) {
    y[i] = i % 4;
    for (int c = 0; c < 3; ++c) x(i, c) = uniform(rng, -0.3, 0.3) + (c == y[i] % 3 ? 3.0 : 0.0) * (y[i] < 3 ? 1 : -1);
  }
  TrainConfig c;
  c.classes = 4;
  c.epochs = 200;
  c.batch = 32;
  c.lr = 1e-2;
  EXPECT_EQ(train_softmax(x, y, c).accuracy(x, y), 1.0);
}

TEST(Training, HugeL1PredictsMajorityClass) {
  const Eigen::MatrixXd x = random_matrix(100, 4, 13);
  Labels y(100, 0);
  for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = 1;
  TrainConfig c;
  c.classes = 2;
  c.l1 = 100.0;
  c.lr = 1e-2;
  c.epochs = 300;
  c.batch = 100;
  const ClassifierModel m = train_softmax(x, y, c);
  const Labels p = m.predict(x);
  EXPECT_TRUE(std::all_of(p.begin(), p.end(), [](int v) { return v == 0; }));
  EXPECT_LT(m.layers[0].w.cwiseAbs().maxCoeff(), 0.05);
}

TEST(Training, XorNeedsHiddenLayers) {
  Eigen::MatrixXd x;
  Labels y;
  xor_data(400, 14, x, y);
  TrainConfig c;
  c.classes = 2;
  c.epochs = 150;
  c.batch = 32;
  c.lr = 3e-3;
  EXPECT_GT(train_mlp(x, y, c).accuracy(x, y), 0.95);
  EXPECT_LE(train_softmax(x, y, c).accuracy(x, y), 0.75);
}

TEST(Training, ZeroEpochsReturnsInitialization) {
  TrainConfig c;
  c.epochs = 0;
  const Eigen::MatrixXd x = random_matrix(10, 3, 15);
  const ClassifierModel m = train_classifier(x, random_labels(10, 10, 16), c);
  EXPECT_EQ(m.layers[0].w, init_classifier(3, c).layers[0].w);
  EXPECT_TRUE(m.loss_curve.empty());
}

TEST(Training, LossDecreases) {
  Eigen::MatrixXd x;
  Labels y;
  xor_data(200, 17, x, y);
  TrainConfig c;
  c.head = HeadType::Mlp;
  c.classes = 2;
  c.epochs = 30;
  const ClassifierModel m = train_classifier(x, y, c);
  ASSERT_EQ(m.loss_curve.size(), 30u);
  EXPECT_LT(m.loss_curve.back(), m.loss_curve.front());
}

TEST(Training, SeedDeterminism) {
  const Eigen::MatrixXd x = random_matrix(50, 4, 18);
  const Labels y = random_labels(50, 10, 19);
  TrainConfig c;
  c.epochs = 5;
  c.head = HeadType::Mlp;
  c.hidden = {8};
  const ClassifierModel a = train_classifier(x, y, c), b = train_classifier(x, y, c);
  EXPECT_EQ(a.layers[1].w, b.layers[1].w);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  c.seed = 1;
  EXPECT_NE(train_classifier(x, y, c).layers[1].w, a.layers[1].w);
}

TEST(Training, RejectsBadInput) {
  TrainConfig c;
  EXPECT_THROW(train_classifier(random_matrix(3, 2, 20), {0, 1}, c), std::invalid_argument);
  EXPECT_THROW(train_classifier(random_matrix(2, 2, 20), {0, 10}, c), std::invalid_argument);
  c.batch = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Folds, AssignmentIsBalancedPartition) {
  const auto f = fold_assignment(103, 5, 7);
  ASSERT_EQ(f.size(), 103u);
  std::map<std::size_t, int> counts;
  for (auto v : f) ++counts[v];
  ASSERT_EQ(counts.size(), 5u);
  for (const auto& [fold, n] : counts) {
    EXPECT_GE(n, 20);
    EXPECT_LE(n, 21);
  }
  EXPECT_EQ(f, fold_assignment(103, 5, 7));
  EXPECT_NE(f, fold_assignment(103, 5, 8));
  EXPECT_THROW(fold_assignment(3, 5, 0), std::invalid_argument);
}

TEST(Folds, LabelEncodedFeaturesGiveFullAccuracy) {
  // One-hot of the label: any reasonable head memorizes it on every fold.
  const Labels y = random_labels(100, 3, 21);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(100, 3);
  for (int i = 0; i < 100; ++i) x(i, y[static_cast<std::size_t>(i)]) = 1.0;
  TrainConfig c;
  c.classes = 3;
  c.lr = 5e-2;
  c.epochs = 50;
  c.batch = 16;
  const FoldReport r = kfold_evaluate(x, y, 5, [&](const Eigen::MatrixXd& a, const Labels& b) { return train_classifier(a, b, c); }, 0, &x, &y);
  ASSERT_EQ(r.accuracies.size(), 5u);
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_EQ(r.stddev, 0.0);
  EXPECT_EQ(r.test_mean, 1.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Folds, LeaveOneOut) {
  const Labels y{0, 1, 0, 1, 0, 1};
  Eigen::MatrixXd x(6, 1);
  x << -1, 1, -1.1, 1.1, -0.9, 0.9;
  TrainConfig c;
  c.classes = 2;
  c.lr = 5e-2;
  c.epochs = 100;
  c.batch = 8;
  std::vector<Eigen::Index> trained_rows;
  const FoldReport r = kfold_evaluate(x, y, 6, [&](const Eigen::MatrixXd& a, const Labels& b) {
    trained_rows.push_back(a.rows());
    return train_classifier(a, b, c);
  }, 0);
  EXPECT_EQ(trained_rows, std::vector<Eigen::Index>(6, 5));
  for (double a : r.accuracies) EXPECT_EQ(a, 1.0);
}

TEST(Folds, WarnsWhenClassMissingFromTrainingFold) {
  Labels y(10, 0);
  y[3] = 1;
  const Eigen::MatrixXd x = random_matrix(10, 2, 22);
  TrainConfig c;
  c.classes = 2;
  c.epochs = 1;
  const FoldReport r = kfold_evaluate(x, y, 5, [&](const Eigen::MatrixXd& a, const Labels& b) { return train_classifier(a, b, c); }, 0);
  EXPECT_EQ(r.warnings.size(), 1u);
}
