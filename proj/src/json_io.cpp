#include "qelm/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace qelm {

void to_json(json& j, const ChainSpec& s) {
  j = json{{"n", s.n},
           {"omega", s.omega},
           {"phi", s.phi},
           {"spacing_um", s.spacing_um},
           {"detunings", s.detunings},
           {"c6", s.c6},
           {"v_threshold", s.v_threshold}};
}

void from_json(const json& j, ChainSpec& s) {
  s = ChainSpec{};
  s.n = j.at("n").get<std::size_t>();
  s.omega = j.value("omega", s.omega);
  s.phi = j.value("phi", s.phi);
  s.spacing_um = j.value("spacing_um", s.spacing_um);
  s.c6 = j.value("c6", s.c6);
  s.v_threshold = j.value("v_threshold", s.v_threshold);
  s.detunings = j.contains("detunings") ? j.at("detunings").get<std::vector<double>>() : std::vector<double>(s.n, 0.0);
  s.validate();
}

void to_json(json& j, const KrylovOptions& k) {
  j = json{{"krylov_dim", k.krylov_dim}, {"tol", k.tol}, {"max_substeps", k.max_substeps}};
}

void from_json(const json& j, KrylovOptions& k) {
  k = KrylovOptions{};
  k.krylov_dim = j.value("krylov_dim", k.krylov_dim);
  k.tol = j.value("tol", k.tol);
  k.max_substeps = j.value("max_substeps", k.max_substeps);
}

void to_json(json& j, const EvolutionConfig& c) {
  j = json{{"dt", c.dt},
           {"total_time", c.total_time},
           {"inner_substeps", c.inner_substeps},
           {"method", to_string(c.method)},
           {"chi_max", c.chi_max},
           {"svd_cutoff", c.svd_cutoff},
           {"krylov", c.krylov},
           {"discard_alarm", c.discard_alarm},
           {"include_initial", c.include_initial}};
}

void from_json(const json& j, EvolutionConfig& c) {
  c = EvolutionConfig{};
  c.dt = j.value("dt", c.dt);
  c.total_time = j.value("total_time", c.total_time);
  c.inner_substeps = j.value("inner_substeps", c.inner_substeps);
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  c.chi_max = j.value("chi_max", c.chi_max);
  c.svd_cutoff = j.value("svd_cutoff", c.svd_cutoff);
  if (j.contains("krylov")) c.krylov = j.at("krylov").get<KrylovOptions>();
  c.discard_alarm = j.value("discard_alarm", c.discard_alarm);
  c.include_initial = j.value("include_initial", c.include_initial);
  c.validate();
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"head", to_string(c.head)}, {"hidden", c.hidden}, {"classes", c.classes}, {"l1", c.l1},
           {"lr", c.lr},                {"beta1", c.beta1},   {"beta2", c.beta2},     {"eps", c.eps},
           {"epochs", c.epochs},        {"batch", c.batch},   {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("head")) c.head = parse_head(j.at("head").get<std::string>());
  c.hidden = j.value("hidden", c.hidden);
  c.classes = j.value("classes", c.classes);
  c.l1 = j.value("l1", c.l1);
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.seed = j.value("seed", c.seed);
  c.validate();
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> v(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", v}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto v = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw std::invalid_argument("matrix json: data length does not match rows x cols");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(json& j, const ClassifierModel& m) {
  json layers = json::array();
  for (const auto& l : m.layers) layers.push_back({{"kernel", matrix_to_json(l.w)}, {"bias", vector_to_json(l.b)}});
  j = json{{"architecture", to_string(m.head)}, {"config", m.config}, {"layers", layers}, {"loss_curve", m.loss_curve}};
}

void from_json(const json& j, ClassifierModel& m) {
  m = ClassifierModel{};
  m.head = parse_head(j.at("architecture").get<std::string>());
  m.config = j.at("config").get<TrainConfig>();
  for (const auto& l : j.at("layers")) {
    m.layers.push_back({matrix_from_json(l.at("kernel")), vector_from_json(l.at("bias"))});
  }
  if (m.layers.empty()) throw std::invalid_argument("classifier json: no layers");
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (m.layers[i].b.size() != m.layers[i].w.cols()) throw std::invalid_argument("classifier json: bias width mismatch");
    if (i > 0 && m.layers[i].w.rows() != m.layers[i - 1].w.cols()) {
      throw std::invalid_argument("classifier json: layer shapes do not chain");
    }
  }
  m.loss_curve = j.value("loss_curve", std::vector<double>{});
}

void to_json(json& j, const PcaModel& m) {
  j = json{{"mean", vector_to_json(m.mean)},
           {"components", matrix_to_json(m.components)},
           {"explained_variance", vector_to_json(m.explained_variance)},
           {"degenerate", m.degenerate}};
}

void from_json(const json& j, PcaModel& m) {
  m.mean = vector_from_json(j.at("mean"));
  m.components = matrix_from_json(j.at("components"));
  m.explained_variance = vector_from_json(j.at("explained_variance"));
  m.degenerate = j.at("degenerate").get<std::vector<bool>>();
  if (m.components.cols() != m.mean.size()) throw std::invalid_argument("pca json: component width mismatch");
}

void to_json(json& j, const ScalerModel& m) {
  j = json{{"min", vector_to_json(m.min)}, {"max", vector_to_json(m.max)}, {"lo", m.lo}, {"hi", m.hi}};
}

void from_json(const json& j, ScalerModel& m) {
  m.min = vector_from_json(j.at("min"));
  m.max = vector_from_json(j.at("max"));
  m.lo = j.at("lo").get<double>();
  m.hi = j.at("hi").get<double>();
  if (m.min.size() != m.max.size()) throw std::invalid_argument("scaler json: min/max length mismatch");
}

json mps_to_json(const MpsState& state) {
  json sites = json::array();
  for (const auto& t : state.sites()) {
    std::vector<double> re, im;
    for (const cplx& z : t.data()) {
      re.push_back(z.real());
      im.push_back(z.imag());
    }
    sites.push_back({{"shape", t.shape()}, {"re", re}, {"im", im}});
  }
  return json{{"n", state.size()}, {"sites", sites}};
}

MpsState mps_from_json(const json& j) {
  std::vector<DenseTensor> sites;
  for (const auto& s : j.at("sites")) {
    const auto shape = s.at("shape").get<DenseTensor::Shape>();
    const auto re = s.at("re").get<std::vector<double>>();
    const auto im = s.at("im").get<std::vector<double>>();
    if (re.size() != im.size() || re.size() != shape_product(shape)) {
      throw std::invalid_argument("mps json: data length does not match shape");
    }
    std::vector<cplx> data(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) data[i] = {re[i], im[i]};
    sites.emplace_back(shape, std::move(data));
  }
  return MpsState(std::move(sites));
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace qelm
