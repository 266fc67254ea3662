#include "qelm/ml.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qelm/random.hpp"

namespace qelm {

PcaModel pca_fit(const Eigen::MatrixXd& train, std::size_t k) {
  const Eigen::Index n = train.rows();
  const Eigen::Index d = train.cols();
  if (n < 2) throw std::invalid_argument("pca_fit: need at least two rows");
  if (k < 1 || k > static_cast<std::size_t>(std::min(n, d))) {
    throw std::invalid_argument("pca_fit: k=" + std::to_string(k) + " outside [1, min(rows, cols)]");
  }
  if (!train.allFinite()) throw std::invalid_argument("pca_fit: non-finite input");
  PcaModel m;
  m.mean = train.colwise().mean().transpose();
  const Eigen::MatrixXd centered = train.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("pca_fit: eigensolver failed");

  const auto kk = static_cast<Eigen::Index>(k);
  m.components.resize(kk, d);
  m.explained_variance.resize(kk);
  const double top = std::max(eig.eigenvalues()(d - 1), 0.0);
  for (Eigen::Index c = 0; c < kk; ++c) {
    // Eigen sorts ascending.
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    m.components.row(c) = v.transpose();
    const double lambda = std::max(eig.eigenvalues()(d - 1 - c), 0.0);
    m.explained_variance(c) = lambda;
    m.degenerate.push_back(lambda <= 1e-12 * std::max(top, 1e-300));
  }
  return m;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.mean.size()) throw std::invalid_argument("pca_transform: column count mismatch");
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

ScalerModel scale_fit(const Eigen::MatrixXd& train, double lo, double hi) {
  if (train.rows() < 1) throw std::invalid_argument("scale_fit: empty input");
  if (!(hi > lo)) throw std::invalid_argument("scale_fit: empty target range");
  ScalerModel s;
  s.min = train.colwise().minCoeff().transpose();
  s.max = train.colwise().maxCoeff().transpose();
  s.lo = lo;
  s.hi = hi;
  return s;
}

Eigen::MatrixXd scale_apply(const ScalerModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.min.size()) throw std::invalid_argument("scale_apply: column count mismatch");
  Eigen::MatrixXd out(data.rows(), data.cols());
  const double mid = 0.5 * (model.lo + model.hi);
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double span = model.max(c) - model.min(c);
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      if (span <= 0.0) {
        out(r, c) = mid;
        continue;
      }
      const double v = model.lo + (model.hi - model.lo) * (data(r, c) - model.min(c)) / span;
      out(r, c) = std::clamp(v, model.lo, model.hi);
    }
  }
  return out;
}

std::string to_string(HeadType h) { return h == HeadType::Linear ? "linear" : "mlp-100-100"; }

HeadType parse_head(const std::string& s) {
  if (s == "linear") return HeadType::Linear;
  if (s == "mlp" || s == "mlp-100-100") return HeadType::Mlp;
  throw std::invalid_argument("unknown head type '" + s + "' (expected linear or mlp-100-100)");
}

void TrainConfig::validate() const {
  if (classes < 2) throw std::invalid_argument("TrainConfig: need at least two classes");
  if (l1 < 0.0 || !std::isfinite(l1)) throw std::invalid_argument("TrainConfig: l1 must be finite and >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("TrainConfig: Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("TrainConfig: eps must be > 0");
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
  if (head == HeadType::Mlp) {
    if (hidden.empty()) throw std::invalid_argument("TrainConfig: mlp needs hidden layers");
    for (auto h : hidden) {
      if (h < 1) throw std::invalid_argument("TrainConfig: hidden width must be >= 1");
    }
  }
}

std::size_t ClassifierModel::input_dim() const {
  if (layers.empty()) throw std::logic_error("ClassifierModel: no layers");
  return static_cast<std::size_t>(layers.front().w.rows());
}

namespace {

/// Activations a[0] = x, a[l+1] = relu(a[l] W_l + b_l) for hidden layers; the
/// last entry holds the logits.
std::vector<Eigen::MatrixXd> forward(const ClassifierModel& m, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != m.input_dim()) {
    throw std::invalid_argument("classifier: input has " + std::to_string(x.cols()) + " columns, model expects " +
                                std::to_string(m.input_dim()));
  }
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(m.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    Eigen::MatrixXd z = acts.back() * m.layers[l].w;
    z.rowwise() += m.layers[l].b.transpose();
    if (l + 1 < m.layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

void check_labels(const Labels& y, Eigen::Index rows, std::size_t classes) {
  if (static_cast<Eigen::Index>(y.size()) != rows) throw std::invalid_argument("labels: count does not match rows");
  for (int v : y) {
    if (v < 0 || static_cast<std::size_t>(v) >= classes) {
      throw std::invalid_argument("labels: value " + std::to_string(v) + " outside [0, " + std::to_string(classes) +
                                  ")");
    }
  }
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

Eigen::MatrixXd ClassifierModel::logits(const Eigen::MatrixXd& x) const { return forward(*this, x).back(); }

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

Eigen::MatrixXd ClassifierModel::predict_proba(const Eigen::MatrixXd& x) const { return softmax_rows(logits(x)); }

Labels ClassifierModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd z = logits(x);
  Labels out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    Eigen::Index arg = 0;
    z.row(r).maxCoeff(&arg);
    out[static_cast<std::size_t>(r)] = static_cast<int>(arg);
  }
  return out;
}

double ClassifierModel::accuracy(const Eigen::MatrixXd& x, const Labels& y) const {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw std::invalid_argument("accuracy: label count mismatch");
  if (y.empty()) throw std::invalid_argument("accuracy: empty set");
  const Labels p = predict(x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += p[i] == y[i];
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

ClassifierModel init_classifier(std::size_t input_dim, const TrainConfig& cfg) {
  cfg.validate();
  if (input_dim < 1) throw std::invalid_argument("init_classifier: input_dim must be >= 1");
  ClassifierModel m;
  m.head = cfg.head;
  m.config = cfg;
  std::vector<std::size_t> widths{input_dim};
  if (cfg.head == HeadType::Mlp) widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(cfg.classes);
  Rng rng(cfg.seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths[l]);
    const auto out = static_cast<Eigen::Index>(widths[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer{Eigen::MatrixXd(in, out), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index i = 0; i < in; ++i) {
      for (Eigen::Index j = 0; j < out; ++j) layer.w(i, j) = uniform(rng, -limit, limit);
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

LossGrad loss_and_grad(const ClassifierModel& model, const Eigen::MatrixXd& x, const Labels& y) {
  check_labels(y, x.rows(), model.config.classes);
  if (x.rows() == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  const auto acts = forward(model, x);
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd p = softmax_rows(acts.back());

  LossGrad out;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto c = static_cast<Eigen::Index>(y[static_cast<std::size_t>(r)]);
    out.loss -= std::log(std::max(p(r, c), 1e-300));
    p(r, c) -= 1.0;
  }
  out.loss /= n;
  Eigen::MatrixXd delta = p / n;  // dL/dlogits

  out.grad.resize(model.layers.size());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const DenseLayer& layer = model.layers[l];
    out.grad[l].w = acts[l].transpose() * delta;
    out.grad[l].b = delta.colwise().sum().transpose();
    if (model.config.l1 > 0.0) {
      out.loss += model.config.l1 * layer.w.cwiseAbs().sum();
      out.grad[l].w += model.config.l1 * layer.w.unaryExpr([](double v) { return sign(v); });
    }
    if (l > 0) {
      delta = (delta * layer.w.transpose()).cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

ClassifierModel train_classifier(const Eigen::MatrixXd& x, const Labels& y, const TrainConfig& cfg) {
  cfg.validate();
  check_labels(y, x.rows(), cfg.classes);
  if (x.rows() == 0) throw std::invalid_argument("train: empty training set");
  if (!x.allFinite()) throw std::invalid_argument("train: non-finite input");
  ClassifierModel m = init_classifier(static_cast<std::size_t>(x.cols()), cfg);

  struct Moments {
    Eigen::MatrixXd mw, vw;
    Eigen::VectorXd mb, vb;
  };
  std::vector<Moments> mom;
  for (const auto& layer : m.layers) {
    mom.push_back({Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()), Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()),
                   Eigen::VectorXd::Zero(layer.b.size()), Eigen::VectorXd::Zero(layer.b.size())});
  }

  // Separate stream from the initializer so that changing epochs never
  // changes the initial weights.
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t stop = std::min(n, start + cfg.batch);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Eigen::MatrixXd xb = select_rows(x, idx);
      Labels yb;
      yb.reserve(idx.size());
      for (auto i : idx) yb.push_back(y[i]);
      const LossGrad lg = loss_and_grad(m, xb, yb);
      if (!std::isfinite(lg.loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting " +
                                 std::to_string(start) + " (lr=" + std::to_string(cfg.lr) +
                                 "; try a smaller learning rate)");
      }
      epoch_loss += lg.loss * static_cast<double>(stop - start);
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        Moments& mo = mom[l];
        const DenseLayer& g = lg.grad[l];
        mo.mw = cfg.beta1 * mo.mw + (1.0 - cfg.beta1) * g.w;
        mo.vw = cfg.beta2 * mo.vw + (1.0 - cfg.beta2) * g.w.cwiseAbs2();
        mo.mb = cfg.beta1 * mo.mb + (1.0 - cfg.beta1) * g.b;
        mo.vb = cfg.beta2 * mo.vb + (1.0 - cfg.beta2) * g.b.cwiseAbs2();
        m.layers[l].w.array() -= cfg.lr * (mo.mw.array() / c1) / ((mo.vw.array() / c2).sqrt() + cfg.eps);
        m.layers[l].b.array() -= cfg.lr * (mo.mb.array() / c1) / ((mo.vb.array() / c2).sqrt() + cfg.eps);
      }
    }
    m.loss_curve.push_back(epoch_loss / static_cast<double>(n));
  }
  return m;
}

ClassifierModel train_softmax(const Eigen::MatrixXd& x, const Labels& y, TrainConfig cfg) {
  cfg.head = HeadType::Linear;
  return train_classifier(x, y, cfg);
}

ClassifierModel train_mlp(const Eigen::MatrixXd& x, const Labels& y, TrainConfig cfg) {
  cfg.head = HeadType::Mlp;
  return train_classifier(x, y, cfg);
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= static_cast<std::size_t>(m.rows())) throw std::out_of_range("select_rows: row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
  if (n < k) throw std::invalid_argument("kfold: dataset smaller than k");
  Rng rng(seed);
  const auto perm = permutation(n, rng);
  std::vector<std::size_t> fold(n);
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t p = f * n / k; p < (f + 1) * n / k; ++p) fold[perm[p]] = f;
  }
  return fold;
}

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (v.empty()) return;
  for (double a : v) mean += a;
  mean /= static_cast<double>(v.size());
  for (double a : v) sd += (a - mean) * (a - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size()));
}

}  // namespace

FoldReport kfold_evaluate(const Eigen::MatrixXd& x, const Labels& y, std::size_t k, const Trainer& trainer,
                          std::uint64_t seed, const Eigen::MatrixXd* test_x, const Labels* test_y) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw std::invalid_argument("kfold: label count mismatch");
  if ((test_x == nullptr) != (test_y == nullptr)) throw std::invalid_argument("kfold: test features and labels go together");
  const auto n = static_cast<std::size_t>(x.rows());
  const auto fold = fold_assignment(n, k, seed);
  const int n_classes = y.empty() ? 0 : *std::max_element(y.begin(), y.end()) + 1;

  FoldReport rep;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(i);
    Labels ytr, yte;
    for (auto i : tr) ytr.push_back(y[i]);
    for (auto i : te) yte.push_back(y[i]);
    std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
    for (int c : ytr) seen[static_cast<std::size_t>(c)] = true;
    for (int c = 0; c < n_classes; ++c) {
      if (!seen[static_cast<std::size_t>(c)]) {
        rep.warnings.push_back("fold " + std::to_string(f) + ": class " + std::to_string(c) +
                               " absent from the training split");
      }
    }
    const ClassifierModel m = trainer(select_rows(x, tr), ytr);
    rep.accuracies.push_back(m.accuracy(select_rows(x, te), yte));
    if (test_x) rep.test_accuracies.push_back(m.accuracy(*test_x, *test_y));
  }
  mean_std(rep.accuracies, rep.mean, rep.stddev);
  mean_std(rep.test_accuracies, rep.test_mean, rep.test_stddev);
  return rep;
}

}  // namespace qelm
