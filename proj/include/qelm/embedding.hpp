#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qelm/rydberg.hpp"
#include "qelm/tdvp.hpp"

namespace qelm {

struct EmbeddingOptions {
  /// Measure <Z_i Z_j> for every pair instead of only the interacting ones.
  bool all_pairs = false;
  /// Initial local state of every site (default: up, Z = +1).
  LocalState initial{cplx{1.0, 0.0}, cplx{0.0, 0.0}};
  /// One-site only: zero-pad bonds to this dimension before evolving (0 = off).
  std::size_t one_site_pad_chi = 0;
  /// Worker threads for dataset embedding; 0 = hardware concurrency.
  unsigned workers = 1;
};

struct ColumnInfo {
  double time = 0.0;
  std::size_t i = 0;
  std::optional<std::size_t> j;  // set for two-point columns
};

/// Column layout for a given chain and evolution: snapshots in time order,
/// within a snapshot all <Z_i> (i ascending) then the measured pairs in
/// interaction-table order. Names are "t=<us>:Z_<i>" / "t=<us>:Z_<i>Z_<j>" with
/// 1-based sites.
struct EmbeddingSchema {
  std::vector<std::string> names;
  std::vector<ColumnInfo> info;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> times;

  std::size_t size() const { return names.size(); }
};

EmbeddingSchema embedding_schema(const ChainSpec& spec, const EvolutionConfig& cfg, const EmbeddingOptions& opts = {});

std::string format_time(double t);

struct EmbeddingMatrix {
  EmbeddingSchema schema;
  Eigen::MatrixXd values;  // records x columns
  ChainSpec spec_template;
  EvolutionConfig config;
  EmbeddingOptions options;
};

/// Per-record measurement: z[snapshot][site] and the full feature row.
struct RecordEmbedding {
  std::vector<double> features;
  std::vector<std::vector<double>> z_trace;
  EvolutionTrace trace;
};

RecordEmbedding embed_record_full(const std::vector<double>& features, const ChainSpec& spec,
                                  const EvolutionConfig& cfg, const EmbeddingOptions& opts = {});

std::vector<double> embed_record(const std::vector<double>& features, const ChainSpec& spec,
                                 const EvolutionConfig& cfg, const EmbeddingOptions& opts = {});

struct RecordError {
  std::size_t record = 0;
  std::string message;
};

struct DatasetEmbedding {
  EmbeddingMatrix matrix;
  /// Rows listed here are left as NaN in `matrix.values`.
  std::vector<RecordError> errors;
  bool complete() const { return errors.empty(); }
};

/// Row-wise embedding; rows are independent and written by index, so the
/// result does not depend on the number of workers.
DatasetEmbedding embed_dataset(const Eigen::MatrixXd& records, const ChainSpec& spec_template,
                               const EvolutionConfig& cfg, const EmbeddingOptions& opts = {});

/// z_trace[t][i] = <Z_i(t)>.
using SiteTrace = std::vector<std::vector<double>>;

/// Sum over snapshots of the population variance of <Z_i(t)> across sites.
double disorder_variance(const SiteTrace& trace);
/// Sum over snapshots of the site mean of <Z_i(t)>^2.
double edwards_anderson(const SiteTrace& trace);

/// Single-site <Z_i> columns of one row, regrouped by snapshot.
SiteTrace site_trace(const EmbeddingMatrix& emb, Eigen::Index row);

/// Mean over the selected columns of the across-record population variance.
/// By default only the single-site <Z_i> columns are used.
double concentration_metric(const EmbeddingMatrix& emb, bool single_site_only = true);

struct DisorderReport {
  double variance = 0.0;
  double ea_q = 0.0;
};

struct SweepCell {
  double omega = 0.0;
  double distance_um = 0.0;
  DisorderReport disorder;
  std::optional<double> accuracy;
  std::optional<double> accuracy_std;
  std::string status = "ok";
};

struct SweepResult {
  std::vector<double> omegas;
  std::vector<double> distances;
  /// Row-major: cells[o * distances.size() + d].
  std::vector<SweepCell> cells;

  const SweepCell& at(std::size_t omega_idx, std::size_t distance_idx) const;
};

struct CellScore {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Scores one cell's embedding of the whole sample (e.g. k-fold accuracy).
using CellScorer = std::function<CellScore(const EmbeddingMatrix&)>;

/// For every (omega, distance) pair, embeds `sample` once and reports the
/// sample-mean disorder variance and EA parameter; with a scorer, also the
/// score of that same embedding.
SweepResult sweep_grid(const std::vector<double>& omegas, const std::vector<double>& distances,
                       const Eigen::MatrixXd& sample, const ChainSpec& spec_template, const EvolutionConfig& cfg,
                       const EmbeddingOptions& opts = {}, const CellScorer& scorer = {});

/// Columns of `emb` whose snapshot time is <= t_max.
EmbeddingMatrix truncate_time(const EmbeddingMatrix& emb, double t_max);

}  // namespace qelm
