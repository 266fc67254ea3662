#include "qelm/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace qelm {

std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

EmbeddingSchema embedding_schema(const ChainSpec& spec, const EvolutionConfig& cfg, const EmbeddingOptions& opts) {
  spec.validate();
  cfg.validate();
  EmbeddingSchema schema;
  if (opts.all_pairs) {
    for (std::size_t j = 0; j < spec.n; ++j) {
      for (std::size_t k = j + 1; k < spec.n; ++k) schema.pairs.emplace_back(j, k);
    }
  } else {
    schema.pairs = build_interactions(spec).index_pairs();
  }
  const std::size_t steps = static_cast<std::size_t>(std::llround(cfg.total_time / cfg.dt));
  for (std::size_t k = cfg.include_initial ? 0 : 1; k <= steps; ++k) schema.times.push_back(static_cast<double>(k) * cfg.dt);

  for (double t : schema.times) {
    const std::string prefix = "t=" + format_time(t) + ":";
    for (std::size_t i = 0; i < spec.n; ++i) {
      schema.names.push_back(prefix + "Z_" + std::to_string(i + 1));
      schema.info.push_back({t, i, std::nullopt});
    }
    for (auto [i, j] : schema.pairs) {
      schema.names.push_back(prefix + "Z_" + std::to_string(i + 1) + "Z_" + std::to_string(j + 1));
      schema.info.push_back({t, i, j});
    }
  }
  return schema;
}

RecordEmbedding embed_record_full(const std::vector<double>& features, const ChainSpec& spec,
                                  const EvolutionConfig& cfg, const EmbeddingOptions& opts) {
  const ChainSpec encoded = encode_detunings(spec, features);
  const EmbeddingSchema schema = embedding_schema(encoded, cfg, opts);
  const MpoOperator h = build_mpo(encoded, build_interactions(encoded));

  MpsState initial = product_state(encoded.n, opts.initial);
  if (cfg.method == TdvpMethod::OneSite && opts.one_site_pad_chi > 1) initial = pad_bonds(initial, opts.one_site_pad_chi);

  RecordEmbedding out;
  out.features.reserve(schema.size());
  auto measure = [&](const Snapshot&, const MpsState& st) {
    ZCorrelators c = measure_z_correlators(st, schema.pairs);
    out.features.insert(out.features.end(), c.z.begin(), c.z.end());
    out.features.insert(out.features.end(), c.zz.begin(), c.zz.end());
    out.z_trace.push_back(std::move(c.z));
  };
  out.trace = evolve(initial, h, cfg, measure);
  if (!out.trace.ok()) throw std::runtime_error("evolution failed: " + *out.trace.error);
  if (out.features.size() != schema.size()) throw std::logic_error("embed_record: feature count does not match schema");
  return out;
}

std::vector<double> embed_record(const std::vector<double>& features, const ChainSpec& spec,
                                 const EvolutionConfig& cfg, const EmbeddingOptions& opts) {
  return embed_record_full(features, spec, cfg, opts).features;
}

namespace {

unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on `workers` threads.
template <typename Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  workers = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

DatasetEmbedding embed_dataset(const Eigen::MatrixXd& records, const ChainSpec& spec_template,
                               const EvolutionConfig& cfg, const EmbeddingOptions& opts) {
  if (static_cast<std::size_t>(records.cols()) != spec_template.n) {
    throw std::invalid_argument("embed_dataset: records have " + std::to_string(records.cols()) +
                                " features but the chain has " + std::to_string(spec_template.n) + " sites");
  }
  DatasetEmbedding out;
  out.matrix.schema = embedding_schema(spec_template, cfg, opts);
  out.matrix.spec_template = spec_template;
  out.matrix.config = cfg;
  out.matrix.options = opts;
  const auto rows = static_cast<std::size_t>(records.rows());
  const auto cols = static_cast<Eigen::Index>(out.matrix.schema.size());
  out.matrix.values = Eigen::MatrixXd::Constant(records.rows(), cols, std::numeric_limits<double>::quiet_NaN());

  std::mutex error_mutex;
  parallel_for(rows, opts.workers, [&](std::size_t r) {
    const auto row = static_cast<Eigen::Index>(r);
    std::vector<double> features(records.cols());
    for (Eigen::Index c = 0; c < records.cols(); ++c) features[static_cast<std::size_t>(c)] = records(row, c);
    try {
      const std::vector<double> emb = embed_record(features, spec_template, cfg, opts);
      out.matrix.values.row(row) = Eigen::Map<const Eigen::RowVectorXd>(emb.data(), cols);
    } catch (const std::exception& e) {
      std::lock_guard lock(error_mutex);
      out.errors.push_back({r, e.what()});
    }
  });
  std::sort(out.errors.begin(), out.errors.end(), [](const auto& a, const auto& b) { return a.record < b.record; });
  return out;
}

double disorder_variance(const SiteTrace& trace) {
  double total = 0.0;
  for (const auto& snap : trace) {
    if (snap.empty()) continue;
    const double n = static_cast<double>(snap.size());
    double mean = 0.0;
    for (double z : snap) mean += z;
    mean /= n;
    double var = 0.0;
    for (double z : snap) var += (z - mean) * (z - mean);
    total += var / n;
  }
  return total;
}

double edwards_anderson(const SiteTrace& trace) {
  double total = 0.0;
  for (const auto& snap : trace) {
    if (snap.empty()) continue;
    double sq = 0.0;
    for (double z : snap) sq += z * z;
    total += sq / static_cast<double>(snap.size());
  }
  return total;
}

SiteTrace site_trace(const EmbeddingMatrix& emb, Eigen::Index row) {
  const auto& times = emb.schema.times;
  SiteTrace trace(times.size(), std::vector<double>(emb.spec_template.n, 0.0));
  std::size_t snap = 0;
  for (std::size_t c = 0; c < emb.schema.size(); ++c) {
    const ColumnInfo& info = emb.schema.info[c];
    if (info.j) continue;
    while (snap < times.size() && times[snap] != info.time) ++snap;
    if (snap == times.size()) throw std::logic_error("site_trace: column time not in schema");
    trace[snap][info.i] = emb.values(row, static_cast<Eigen::Index>(c));
  }
  return trace;
}

double concentration_metric(const EmbeddingMatrix& emb, bool single_site_only) {
  const Eigen::Index rows = emb.values.rows();
  if (rows < 2) throw std::invalid_argument("concentration_metric: at least two records are required");
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < emb.schema.size(); ++c) {
    if (single_site_only && emb.schema.info[c].j) continue;
    const auto col = emb.values.col(static_cast<Eigen::Index>(c));
    const double mean = col.mean();
    sum += (col.array() - mean).square().sum() / static_cast<double>(rows);
    ++used;
  }
  if (used == 0) throw std::invalid_argument("concentration_metric: no columns selected");
  return sum / static_cast<double>(used);
}

const SweepCell& SweepResult::at(std::size_t omega_idx, std::size_t distance_idx) const {
  return cells.at(omega_idx * distances.size() + distance_idx);
}

SweepResult sweep_grid(const std::vector<double>& omegas, const std::vector<double>& distances,
                       const Eigen::MatrixXd& sample, const ChainSpec& spec_template, const EvolutionConfig& cfg,
                       const EmbeddingOptions& opts, const CellScorer& scorer) {
  if (omegas.empty() || distances.empty()) throw std::invalid_argument("sweep_grid: grids must be nonempty");
  if (sample.rows() < 1) throw std::invalid_argument("sweep_grid: sample must contain at least one record");
  SweepResult res;
  res.omegas = omegas;
  res.distances = distances;
  for (double omega : omegas) {
    for (double d : distances) {
      SweepCell cell;
      cell.omega = omega;
      cell.distance_um = d;
      try {
        ChainSpec spec = spec_template;
        spec.omega = omega;
        spec.spacing_um = d;
        DatasetEmbedding emb = embed_dataset(sample, spec, cfg, opts);
        if (!emb.complete()) {
          throw std::runtime_error(std::to_string(emb.errors.size()) + " record(s) failed, first: " +
                                   emb.errors.front().message);
        }
        for (Eigen::Index r = 0; r < sample.rows(); ++r) {
          const SiteTrace tr = site_trace(emb.matrix, r);
          cell.disorder.variance += disorder_variance(tr);
          cell.disorder.ea_q += edwards_anderson(tr);
        }
        cell.disorder.variance /= static_cast<double>(sample.rows());
        cell.disorder.ea_q /= static_cast<double>(sample.rows());
        if (scorer) {
          const CellScore s = scorer(emb.matrix);
          cell.accuracy = s.mean;
          cell.accuracy_std = s.stddev;
        }
      } catch (const std::exception& e) {
        cell.status = std::string("error: ") + e.what();
      }
      res.cells.push_back(std::move(cell));
    }
  }
  return res;
}

EmbeddingMatrix truncate_time(const EmbeddingMatrix& emb, double t_max) {
  EmbeddingMatrix out;
  out.spec_template = emb.spec_template;
  out.config = emb.config;
  out.options = emb.options;
  out.config.total_time = t_max;
  out.schema.pairs = emb.schema.pairs;
  for (double t : emb.schema.times) {
    if (t <= t_max + 1e-12) out.schema.times.push_back(t);
  }
  std::vector<Eigen::Index> keep;
  for (std::size_t c = 0; c < emb.schema.size(); ++c) {
    if (emb.schema.info[c].time <= t_max + 1e-12) {
      keep.push_back(static_cast<Eigen::Index>(c));
      out.schema.names.push_back(emb.schema.names[c]);
      out.schema.info.push_back(emb.schema.info[c]);
    }
  }
  if (keep.empty()) throw std::invalid_argument("truncate_time: no snapshots at or before t_max");
  out.values.resize(emb.values.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.values.col(static_cast<Eigen::Index>(k)) = emb.values.col(keep[k]);
  return out;
}

}  // namespace qelm
