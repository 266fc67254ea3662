#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qelm/embedding.hpp"
#include "qelm/ml.hpp"

namespace qelm {

/// Raised for malformed input files; carries the byte offset of the problem.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& path, std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct ImageDataset {
  Eigen::MatrixXd images;  // records x pixels, values in [0, 1]
  Labels labels;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::string> sources;

  std::size_t size() const { return labels.size(); }
};

/// Whole file, gunzipped when it carries a gzip header.
std::vector<std::uint8_t> read_file_bytes(const std::string& path);
/// Gzip-compressed when the path ends in ".gz".
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

struct IdxImages {
  Eigen::MatrixXd pixels;
  std::size_t height = 0;
  std::size_t width = 0;
};

IdxImages read_idx_images(const std::string& path);
Labels read_idx_labels(const std::string& path);
/// Pixels are rounded to bytes as round(255 v) after clamping to [0, 1].
void write_idx_images(const std::string& path, const Eigen::MatrixXd& pixels, std::size_t height, std::size_t width);
void write_idx_labels(const std::string& path, const Labels& labels);

ImageDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);

/// Header row required; the "label" column holds integer classes, every other
/// column is a feature taken as-is.
ImageDataset load_csv_dataset(const std::string& path);

struct Split {
  ImageDataset train;
  ImageDataset test;
};

/// Uniform sampling without replacement from one seeded permutation: the
/// first n_train entries are the training set, the next n_test the test set.
Split subset(const ImageDataset& ds, std::size_t n_train, std::size_t n_test, std::uint64_t seed);

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_file(const std::string& path);
/// Hash of the matrix (row-major little-endian doubles) followed by the labels (int32).
std::string sha256_dataset(const Eigen::MatrixXd& x, const Labels& y);

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Values written with %.17g.
void write_csv(const std::string& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values);
CsvTable read_csv(const std::string& path);

void write_labels_csv(const std::string& path, const Labels& labels);
Labels read_labels_csv(const std::string& path);

struct CacheManifest {
  ChainSpec spec;
  EvolutionConfig evolution_config;
  std::string method;
  std::vector<std::string> columns;
  std::string dataset_sha256;
  std::string created_utc;
};

struct EmbeddingCache {
  CacheManifest manifest;
  Eigen::MatrixXd values;
  Labels labels;
};

/// Writes manifest.json, embeddings.csv and labels.csv into `dir`.
void save_embedding_cache(const std::string& dir, const EmbeddingMatrix& emb, const Labels& labels,
                          const std::string& dataset_sha256);
EmbeddingCache load_embedding_cache(const std::string& dir);
std::optional<CacheManifest> read_cache_manifest(const std::string& dir);

/// Rebuilds an EmbeddingMatrix (schema recomputed from the manifest and
/// checked against the stored column names).
EmbeddingMatrix cache_to_matrix(const EmbeddingCache& cache, const EmbeddingOptions& opts = {});

std::string utc_timestamp();

}  // namespace qelm
