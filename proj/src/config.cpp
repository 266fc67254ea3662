#include "qelm/config.hpp"

#include <numbers>
#include <stdexcept>

#include "config_schema.hpp"

namespace qelm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "null") return v.is_null();
  throw std::logic_error("schema: unsupported type '" + type + "'");
}

void validate_node(const json& v, const json& s, const std::string& path, std::vector<std::string>& errors) {
  const std::string where = path.empty() ? "(root)" : path;
  if (s.contains("type") && !type_matches(v, s["type"].get<std::string>())) {
    errors.push_back(where + ": expected " + s["type"].get<std::string>() + ", got " + v.type_name());
    return;
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) errors.push_back(where + ": value " + v.dump() + " not in " + s["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>()) {
      errors.push_back(where + ": " + v.dump() + " is below the minimum " + s["minimum"].dump());
    }
    if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>()) {
      errors.push_back(where + ": " + v.dump() + " must be greater than " + s["exclusiveMinimum"].dump());
    }
    if (s.contains("maximum") && x > s["maximum"].get<double>()) {
      errors.push_back(where + ": " + v.dump() + " is above the maximum " + s["maximum"].dump());
    }
  }
  if (v.is_object()) {
    const json props = s.value("properties", json::object());
    for (const auto& r : s.value("required", json::array())) {
      if (!v.contains(r.get<std::string>())) errors.push_back(where + ": missing required key '" + r.get<std::string>() + "'");
    }
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string child = path.empty() ? it.key() : path + "." + it.key();
      if (props.contains(it.key())) {
        validate_node(it.value(), props[it.key()], child, errors);
      } else if (s.contains("additionalProperties") && s["additionalProperties"] == false) {
        errors.push_back(child + ": unknown key");
      }
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
      errors.push_back(where + ": needs at least " + s["minItems"].dump() + " items");
    }
    if (s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) validate_node(v[i], s["items"], path + "[" + std::to_string(i) + "]", errors);
    }
  }
}

template <typename T>
void take(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

}  // namespace

const std::string& config_schema_text() {
  static const std::string text = detail::kConfigSchema;
  return text;
}

const json& config_schema() {
  static const json schema = json::parse(config_schema_text());
  return schema;
}

std::vector<std::string> validate_against_schema(const json& doc, const json& schema) {
  std::vector<std::string> errors;
  validate_node(doc, schema, "", errors);
  return errors;
}

ChainSpec ExperimentConfig::chain_spec(std::size_t n) const {
  ChainSpec s = ChainSpec::uniform(n, chain.omega_2pi * kTwoPi, chain.spacing_um);
  s.phi = chain.phi;
  s.c6 = chain.c6;
  s.v_threshold = chain.v_threshold;
  s.validate();
  return s;
}

ExperimentConfig parse_config(const json& doc) {
  const auto errors = validate_against_schema(doc, config_schema());
  if (!errors.empty()) {
    std::string msg = "config does not match the schema:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  ExperimentConfig c;
  const json empty = json::object();
  const json& d = doc.contains("dataset") ? doc["dataset"] : empty;
  take(d, "train_images", c.dataset.train_images);
  take(d, "train_labels", c.dataset.train_labels);
  take(d, "csv", c.dataset.csv);
  take(d, "n_train", c.dataset.n_train);
  take(d, "n_test", c.dataset.n_test);
  take(d, "seed", c.dataset.seed);

  const json& e = doc.contains("encoding") ? doc["encoding"] : empty;
  take(e, "k", c.encoding.k);
  take(e, "scale_lo", c.encoding.scale_lo);
  take(e, "scale_hi", c.encoding.scale_hi);
  if (!(c.encoding.scale_hi > c.encoding.scale_lo)) throw std::invalid_argument("encoding: scale_hi must exceed scale_lo");

  const json& ch = doc.contains("chain") ? doc["chain"] : empty;
  take(ch, "omega_2pi", c.chain.omega_2pi);
  take(ch, "spacing_um", c.chain.spacing_um);
  take(ch, "phi", c.chain.phi);
  take(ch, "c6", c.chain.c6);
  take(ch, "v_threshold", c.chain.v_threshold);
  take(ch, "all_pairs", c.chain.all_pairs);

  const json& ev = doc.contains("evolution") ? doc["evolution"] : empty;
  if (ev.contains("method")) c.evolution.method = parse_method(ev["method"].get<std::string>());
  take(ev, "dt", c.evolution.dt);
  take(ev, "total_time", c.evolution.total_time);
  take(ev, "chi_max", c.evolution.chi_max);
  take(ev, "inner_substeps", c.evolution.inner_substeps);
  take(ev, "svd_cutoff", c.evolution.svd_cutoff);
  take(ev, "krylov_dim", c.evolution.krylov.krylov_dim);
  take(ev, "krylov_tol", c.evolution.krylov.tol);
  c.evolution.validate();

  const json& m = doc.contains("model") ? doc["model"] : empty;
  if (m.contains("head")) c.model.train.head = parse_head(m["head"].get<std::string>());
  take(m, "l1", c.model.train.l1);
  take(m, "lr", c.model.train.lr);
  take(m, "epochs", c.model.train.epochs);
  take(m, "batch", c.model.train.batch);
  take(m, "k_folds", c.model.k_folds);
  take(m, "seed", c.model.train.seed);
  c.model.train.validate();

  const json& sw = doc.contains("sweep") ? doc["sweep"] : empty;
  take(sw, "omegas_2pi", c.sweep.omegas_2pi);
  take(sw, "distances_um", c.sweep.distances_um);
  take(sw, "sample", c.sweep.sample);

  const json& b = doc.contains("bench") ? doc["bench"] : empty;
  take(b, "qubits", c.bench.qubits);
  take(b, "repeats", c.bench.repeats);

  const json& v = doc.contains("validate") ? doc["validate"] : empty;
  take(v, "qubits", c.validate.qubits);
  take(v, "omega_2pi", c.validate.omega_2pi);
  take(v, "detuning_2pi", c.validate.detuning_2pi);
  take(v, "tolerance", c.validate.tolerance);

  if (doc.contains("output")) take(doc["output"], "directory", c.output_dir);
  take(doc, "workers", c.workers);
  return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = {{"train_images", c.dataset.train_images}, {"train_labels", c.dataset.train_labels},
                  {"n_train", c.dataset.n_train},           {"n_test", c.dataset.n_test},
                  {"seed", c.dataset.seed}};
  if (!c.dataset.csv.empty()) j["dataset"]["csv"] = c.dataset.csv;
  j["encoding"] = {{"k", c.encoding.k}, {"scale_lo", c.encoding.scale_lo}, {"scale_hi", c.encoding.scale_hi}};
  j["chain"] = {{"omega_2pi", c.chain.omega_2pi}, {"spacing_um", c.chain.spacing_um},   {"phi", c.chain.phi},
                {"c6", c.chain.c6},               {"v_threshold", c.chain.v_threshold}, {"all_pairs", c.chain.all_pairs}};
  j["evolution"] = {{"method", to_string(c.evolution.method)},
                    {"dt", c.evolution.dt},
                    {"total_time", c.evolution.total_time},
                    {"chi_max", c.evolution.chi_max},
                    {"inner_substeps", c.evolution.inner_substeps},
                    {"svd_cutoff", c.evolution.svd_cutoff},
                    {"krylov_dim", c.evolution.krylov.krylov_dim},
                    {"krylov_tol", c.evolution.krylov.tol}};
  j["model"] = {{"head", to_string(c.model.train.head)}, {"l1", c.model.train.l1},
                {"lr", c.model.train.lr},                {"epochs", c.model.train.epochs},
                {"batch", c.model.train.batch},          {"k_folds", c.model.k_folds},
                {"seed", c.model.train.seed}};
  j["sweep"] = {{"omegas_2pi", c.sweep.omegas_2pi}, {"distances_um", c.sweep.distances_um}, {"sample", c.sweep.sample}};
  j["bench"] = {{"qubits", c.bench.qubits}, {"repeats", c.bench.repeats}};
  j["validate"] = {{"qubits", c.validate.qubits},
                   {"omega_2pi", c.validate.omega_2pi},
                   {"detuning_2pi", c.validate.detuning_2pi},
                   {"tolerance", c.validate.tolerance}};
  j["output"] = {{"directory", c.output_dir}};
  j["workers"] = c.workers;
  return j;
}

}  // namespace qelm
