#include "qelm/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>

#include "qelm/exact.hpp"
#include "qelm/random.hpp"

namespace qelm {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void echo_config(const ExperimentConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  write_json_file(dir + "/resolved_config.json", config_to_json(cfg));
}

/// Runs a command body, mapping exceptions to exit codes.
template <typename Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const FormatError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

std::vector<std::string> feature_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back("x_" + std::to_string(i + 1));
  return names;
}

EmbeddingOptions embedding_options(const ExperimentConfig& cfg) {
  EmbeddingOptions o;
  o.all_pairs = cfg.chain.all_pairs;
  o.workers = cfg.workers;
  return o;
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::string resolve_data_path(const std::string& path) {
  std::vector<std::string> tried{path};
  if (fs::exists(path)) return path;
  if (const char* env = std::getenv("QELM_DATA_DIR"); env && *env) {
    const fs::path base(env);
    for (const fs::path& cand : {base / path, base / fs::path(path).filename()}) {
      tried.push_back(cand.string());
      if (fs::exists(cand)) return cand.string();
    }
  }
  std::string msg = "dataset file not found: " + path + " (tried";
  for (const auto& t : tried) msg += " " + t;
  throw InputError(msg + "; set QELM_DATA_DIR or dataset paths in the config)");
}

ImageDataset load_configured_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset.csv.empty()) return load_csv_dataset(resolve_data_path(cfg.dataset.csv));
  return load_idx_dataset(resolve_data_path(cfg.dataset.train_images), resolve_data_path(cfg.dataset.train_labels));
}

PreparedFeatures prepare_features(const ImageDataset& ds, const ExperimentConfig& cfg) {
  const Split split = subset(ds, cfg.dataset.n_train, cfg.dataset.n_test, cfg.dataset.seed);
  PreparedFeatures p;
  p.pca = pca_fit(split.train.images, cfg.encoding.k);
  const Eigen::MatrixXd tr = pca_transform(p.pca, split.train.images);
  const Eigen::MatrixXd te = pca_transform(p.pca, split.test.images);
  p.scaler = scale_fit(tr, cfg.encoding.scale_lo, cfg.encoding.scale_hi);
  p.train_x = scale_apply(p.scaler, tr);
  p.test_x = scale_apply(p.scaler, te);
  p.train_y = split.train.labels;
  p.test_y = split.test.labels;
  return p;
}

std::string embedding_dir(const ExperimentConfig& cfg, const std::string& split) {
  return cfg.output_dir + "/embeddings/" + to_string(cfg.evolution.method) + "/" + split;
}

std::string features_dir(const ExperimentConfig& cfg, const std::string& split) {
  return cfg.output_dir + "/embeddings/features/" + split;
}

int cmd_ingest(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const ImageDataset ds = load_configured_dataset(cfg);
    const std::string dir = cfg.output_dir + "/ingest";
    echo_config(cfg, dir);
    json summary{{"records", ds.size()}, {"features", ds.images.cols()}, {"files", json::array()}};
    log << "records: " << ds.size() << "\nfeatures: " << ds.images.cols() << '\n';
    for (const auto& src : ds.sources) {
      const std::string h = sha256_file(src);
      summary["files"].push_back({{"path", src}, {"sha256", h}});
      log << "sha256 " << h << "  " << src << '\n';
    }
    std::vector<std::size_t> counts(10, 0);
    for (int l : ds.labels) {
      if (static_cast<std::size_t>(l) >= counts.size()) counts.resize(static_cast<std::size_t>(l) + 1, 0);
      ++counts[static_cast<std::size_t>(l)];
    }
    summary["label_counts"] = counts;
    write_json_file(dir + "/summary.json", summary);
    return kExitOk;
  });
}

namespace {

/// True when `dir` already holds an embedding of exactly these inputs.
bool cache_matches(const std::string& dir, const ChainSpec& spec, const EvolutionConfig& evo,
                   const EmbeddingOptions& opts, const std::string& sha) {
  const auto m = read_cache_manifest(dir);
  if (!m) return false;
  return m->dataset_sha256 == sha && json(m->spec) == json(spec) && json(m->evolution_config) == json(evo) &&
         m->columns == embedding_schema(spec, evo, opts).names;
}

}  // namespace

int cmd_embed(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const ImageDataset ds = load_configured_dataset(cfg);
    const PreparedFeatures p = prepare_features(ds, cfg);
    const ChainSpec spec = cfg.chain_spec(cfg.encoding.k);
    const EmbeddingOptions opts = embedding_options(cfg);
    echo_config(cfg, cfg.output_dir + "/embeddings");

    bool failed = false;
    for (const std::string split : {"train", "test"}) {
      const Eigen::MatrixXd& x = split == "train" ? p.train_x : p.test_x;
      const Labels& y = split == "train" ? p.train_y : p.test_y;
      const std::string sha = sha256_dataset(x, y);

      const std::string fdir = features_dir(cfg, split);
      fs::create_directories(fdir);
      write_csv(fdir + "/features.csv", feature_names(cfg.encoding.k), x);
      write_labels_csv(fdir + "/labels.csv", y);

      const std::string dir = embedding_dir(cfg, split);
      if (cache_matches(dir, spec, cfg.evolution, opts, sha)) {
        log << split << ": cache hit (" << dir << ")\n";
        continue;
      }
      const auto t0 = std::chrono::steady_clock::now();
      const DatasetEmbedding emb = embed_dataset(x, spec, cfg.evolution, opts);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      fs::create_directories(dir);
      if (!emb.complete()) {
        json errs = json::array();
        for (const auto& e : emb.errors) errs.push_back({{"record", e.record}, {"message", e.message}});
        write_json_file(dir + "/errors.json", errs);
        fs::remove(dir + "/manifest.json");
        log << split << ": " << emb.errors.size() << " record(s) failed, see " << dir << "/errors.json\n";
        failed = true;
        continue;
      }
      fs::remove(dir + "/errors.json");
      save_embedding_cache(dir, emb.matrix, y, sha);
      log << split << ": embedded " << x.rows() << " records x " << emb.matrix.schema.size() << " columns in " << secs
          << " s -> " << dir << '\n';
    }
    write_json_file(cfg.output_dir + "/embeddings/features/preprocess.json", {{"pca", p.pca}, {"scaler", p.scaler}});
    return failed ? kExitValidation : kExitOk;
  });
}

int cmd_train(const ExperimentConfig& cfg, const TrainRequest& req, std::ostream& log) {
  return guarded(log, [&] {
    Eigen::MatrixXd train_x, test_x;
    Labels train_y, test_y;
    if (req.features == "pca") {
      for (const std::string split : {"train", "test"}) {
        const std::string dir = features_dir(cfg, split);
        if (!fs::exists(dir + "/features.csv")) throw InputError("no feature cache in " + dir + "; run embed first");
        CsvTable t = read_csv(dir + "/features.csv");
        if (t.header != feature_names(cfg.encoding.k)) throw InputError(dir + ": feature count does not match encoding.k");
        (split == "train" ? train_x : test_x) = std::move(t.values);
        (split == "train" ? train_y : test_y) = read_labels_csv(dir + "/labels.csv");
      }
    } else if (req.features == "embedding") {
      const ChainSpec spec = cfg.chain_spec(cfg.encoding.k);
      const EmbeddingOptions opts = embedding_options(cfg);
      for (const std::string split : {"train", "test"}) {
        const std::string dir = embedding_dir(cfg, split);
        if (!read_cache_manifest(dir)) throw InputError("no embedding cache in " + dir + "; run embed first");
        const EmbeddingCache cache = load_embedding_cache(dir);
        if (json(cache.manifest.spec) != json(spec) || json(cache.manifest.evolution_config) != json(cfg.evolution)) {
          throw InputError(dir + ": cache was built with a different chain or evolution config");
        }
        EmbeddingMatrix m = cache_to_matrix(cache, opts);
        if (req.t_max) m = truncate_time(m, *req.t_max);
        (split == "train" ? train_x : test_x) = std::move(m.values);
        (split == "train" ? train_y : test_y) = cache.labels;
      }
    } else {
      throw InputError("unknown feature source '" + req.features + "' (expected embedding or pca)");
    }

    const TrainConfig tc = cfg.model.train;
    const Trainer trainer = [&](const Eigen::MatrixXd& x, const Labels& y) { return train_classifier(x, y, tc); };
    const FoldReport rep = kfold_evaluate(train_x, train_y, cfg.model.k_folds, trainer, tc.seed, &test_x, &test_y);

    std::string name = req.features + "-" + to_string(tc.head);
    if (req.t_max) name += "-t" + format_time(*req.t_max);
    const std::string dir = cfg.output_dir + "/train/" + name;
    echo_config(cfg, dir);
    {
      std::ofstream f(dir + "/folds.csv");
      f << "fold,accuracy,test_accuracy\n";
      f.precision(17);
      for (std::size_t i = 0; i < rep.accuracies.size(); ++i) {
        f << i << ',' << rep.accuracies[i] << ',' << rep.test_accuracies[i] << '\n';
      }
    }
    write_json_file(dir + "/summary.json", {{"features", req.features},
                                             {"head", to_string(tc.head)},
                                             {"columns", train_x.cols()},
                                             {"k_folds", cfg.model.k_folds},
                                             {"mean", rep.mean},
                                             {"stddev", rep.stddev},
                                             {"test_mean", rep.test_mean},
                                             {"test_stddev", rep.test_stddev},
                                             {"warnings", rep.warnings}});
    for (const auto& w : rep.warnings) log << "warning: " << w << '\n';
    log << name << ": cv accuracy " << rep.mean << " +- " << rep.stddev << ", test " << rep.test_mean << " +- "
        << rep.test_stddev << " -> " << dir << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const ImageDataset ds = load_configured_dataset(cfg);
    ExperimentConfig sample_cfg = cfg;
    sample_cfg.dataset.n_train = cfg.sweep.sample;
    sample_cfg.dataset.n_test = 0;
    const PreparedFeatures p = prepare_features(ds, sample_cfg);

    std::vector<double> omegas;
    for (double w : cfg.sweep.omegas_2pi) omegas.push_back(w * kTwoPi);
    const TrainConfig tc = cfg.model.train;
    const Labels& y = p.train_y;
    const CellScorer scorer = [&](const EmbeddingMatrix& emb) {
      const Trainer trainer = [&](const Eigen::MatrixXd& x, const Labels& yy) { return train_classifier(x, yy, tc); };
      const FoldReport r = kfold_evaluate(emb.values, y, cfg.model.k_folds, trainer, tc.seed);
      return CellScore{r.mean, r.stddev};
    };
    const SweepResult res = sweep_grid(omegas, cfg.sweep.distances_um, p.train_x, cfg.chain_spec(cfg.encoding.k),
                                       cfg.evolution, embedding_options(cfg), scorer);

    const std::string dir = cfg.output_dir + "/sweep";
    echo_config(cfg, dir);
    std::ofstream f(dir + "/heatmap.csv");
    f.precision(17);
    f << "omega,distance_um,accuracy,accuracy_std,variance,ea_q,status\n";
    bool partial = false;
    for (const auto& c : res.cells) {
      f << c.omega << ',' << c.distance_um << ',';
      if (c.accuracy) f << *c.accuracy;
      f << ',';
      if (c.accuracy_std) f << *c.accuracy_std;
      f << ',' << c.disorder.variance << ',' << c.disorder.ea_q << ',' << csv_safe(c.status) << '\n';
      partial = partial || c.status != "ok";
      log << "omega=" << c.omega / kTwoPi << "x2pi d=" << c.distance_um << " acc=" << c.accuracy.value_or(NAN)
          << " var=" << c.disorder.variance << " q=" << c.disorder.ea_q << " " << c.status << '\n';
    }
    return partial ? kExitValidation : kExitOk;
  });
}

int cmd_bench(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const std::string dir = cfg.output_dir + "/bench";
    echo_config(cfg, dir);
    std::ofstream f(dir + "/bench.csv");
    f << "n,method,seconds\n";
    Rng rng(cfg.dataset.seed);
    for (std::size_t n : cfg.bench.qubits) {
      std::vector<double> features(n);
      for (double& v : features) v = uniform(rng, cfg.encoding.scale_lo, cfg.encoding.scale_hi);
      const ChainSpec spec = cfg.chain_spec(n);
      for (TdvpMethod m : {TdvpMethod::OneSite, TdvpMethod::TwoSite}) {
        EvolutionConfig evo = cfg.evolution;
        evo.method = m;
        double best = INFINITY;
        for (int r = 0; r < cfg.bench.repeats; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          embed_record(features, spec, evo, embedding_options(cfg));
          best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        f << n << ',' << to_string(m) << ',' << best << '\n';
        log << "n=" << n << ' ' << to_string(m) << ' ' << best << " s\n";
      }
    }
    return kExitOk;
  });
}

int cmd_validate(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const std::size_t n = cfg.validate.qubits;
    if (n < 2 || n > kMaxDenseQubits) throw InputError("validate: qubits must be in 2.." + std::to_string(kMaxDenseQubits));
    ChainSpec spec = cfg.chain_spec(n);
    spec.omega = cfg.validate.omega_2pi * kTwoPi;
    spec.detunings.assign(n, cfg.validate.detuning_2pi * kTwoPi);
    const InteractionTable table = build_interactions(spec);
    const MpoOperator h = build_mpo(spec, table);

    // series[method] = (Z_1, Z_1Z_2) per snapshot
    struct Series {
      std::vector<double> t, z1, z12;
    };
    std::map<std::string, Series> series;
    const DensePropagator prop(dense_hamiltonian(spec, table));
    const DenseState psi0 = DenseState::all_up(n);
    const std::size_t steps = cfg.evolution.snapshot_count();
    for (std::size_t k = 1; k <= steps; ++k) {
      const double t = static_cast<double>(k) * cfg.evolution.dt;
      const DenseObservables o = dense_observables({n, prop.apply(psi0.amplitudes, t)});
      series["exact"].t.push_back(t);
      series["exact"].z1.push_back(o.z[0]);
      series["exact"].z12.push_back(o.zz[0][1]);
    }
    for (TdvpMethod m : {TdvpMethod::OneSite, TdvpMethod::TwoSite}) {
      EvolutionConfig evo = cfg.evolution;
      evo.method = m;
      evo.include_initial = false;
      Series& s = series[to_string(m)];
      const EvolutionTrace tr = evolve(all_up_state(n), h, evo, [&](const Snapshot& snap, const MpsState& st) {
        const ZCorrelators c = measure_z_correlators(st, {{0, 1}});
        s.t.push_back(snap.time);
        s.z1.push_back(c.z[0]);
        s.z12.push_back(c.zz[0]);
      });
      if (!tr.ok()) throw std::runtime_error(to_string(m) + " evolution failed: " + *tr.error);
    }

    const std::string dir = cfg.output_dir + "/validate";
    echo_config(cfg, dir);
    std::ofstream trace(dir + "/trace.csv");
    trace.precision(17);
    trace << "time_us,id,value\n";
    for (const auto& [name, s] : series) {
      for (std::size_t i = 0; i < s.t.size(); ++i) {
        trace << s.t[i] << ',' << name << ":Z_1," << s.z1[i] << '\n';
        trace << s.t[i] << ',' << name << ":Z_1Z_2," << s.z12[i] << '\n';
      }
    }
    std::ofstream diag(dir + "/diagnostics.csv");
    diag.precision(17);
    diag << "time_us,method,dev_Z_1,dev_Z_1Z_2\n";
    json report{{"tolerance", cfg.validate.tolerance}};
    const Series& ex = series["exact"];
    for (const std::string m : {"one-site", "two-site"}) {
      const Series& s = series[m];
      if (s.t.size() != ex.t.size()) throw std::runtime_error(m + ": snapshot count differs from the oracle");
      double worst = 0.0;
      for (std::size_t i = 0; i < s.t.size(); ++i) {
        const double d1 = std::abs(s.z1[i] - ex.z1[i]);
        const double d12 = std::abs(s.z12[i] - ex.z12[i]);
        diag << s.t[i] << ',' << m << ',' << d1 << ',' << d12 << '\n';
        worst = std::max({worst, d1, d12});
      }
      report[m] = {{"max_abs_deviation", worst}};
      log << m << ": max |deviation| = " << worst << '\n';
    }
    const bool pass = report["two-site"]["max_abs_deviation"].get<double>() <= cfg.validate.tolerance;
    report["pass"] = pass;
    write_json_file(dir + "/report.json", report);
    log << (pass ? "PASS" : "FAIL") << ": two-site vs exact within " << cfg.validate.tolerance << '\n';
    return pass ? kExitOk : kExitValidation;
  });
}

}  // namespace qelm
