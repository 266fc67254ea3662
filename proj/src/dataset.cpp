#include "qelm/dataset.hpp"

#include <zlib.h>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qelm/json_io.hpp"
#include "qelm/random.hpp"

namespace qelm {

namespace fs = std::filesystem;

FormatError::FormatError(const std::string& path, std::size_t offset, const std::string& what)
    : std::runtime_error(path + ": byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("no such file: " + path);
  // gzread passes plain files through unchanged.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  for (;;) {
    const int got = gzread(f, buf, sizeof buf);
    if (got < 0) {
      int errnum = 0;
      const std::string msg = gzerror(f, &errnum);
      gzclose(f);
      throw FormatError(path, out.size(), "decompression failed: " + msg);
    }
    if (got == 0) break;
    out.insert(out.end(), buf, buf + got);
  }
  gzclose(f);
  return out;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  if (path.ends_with(".gz")) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write " + path);
    const int put = bytes.empty() ? 0 : gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    const int rc = gzclose(f);
    if (put != static_cast<int>(bytes.size()) || rc != Z_OK) throw std::runtime_error("write failed: " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::string& path,
                        const char* what) {
  if (off + 4 > b.size()) throw FormatError(path, off, std::string("truncated header: missing ") + what);
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::string& path) {
  if (got != want) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x (expected 0x%08x)", got, want);
    throw FormatError(path, 0, buf);
  }
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
  const auto b = read_file_bytes(path);
  if (b.size() < 4) throw FormatError(path, 0, "bad magic: file shorter than 4 bytes");
  check_magic(read_be32(b, 0, path, "magic"), kImageMagic, path);
  const std::size_t count = read_be32(b, 4, path, "image count");
  const std::size_t rows = read_be32(b, 8, path, "row count");
  const std::size_t cols = read_be32(b, 12, path, "column count");
  const std::size_t pixels = rows * cols;
  const std::size_t need = 16 + count * pixels;
  if (b.size() < need) {
    throw FormatError(path, b.size(),
                      "truncated payload: expected " + std::to_string(need) + " bytes for " + std::to_string(count) +
                          " images of " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (b.size() > need) throw FormatError(path, need, "trailing bytes after payload");
  IdxImages out{Eigen::MatrixXd(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels)), rows, cols};
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      out.pixels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = b[16 + i * pixels + p] / 255.0;
    }
  }
  return out;
}

Labels read_idx_labels(const std::string& path) {
  const auto b = read_file_bytes(path);
  if (b.size() < 4) throw FormatError(path, 0, "bad magic: file shorter than 4 bytes");
  check_magic(read_be32(b, 0, path, "magic"), kLabelMagic, path);
  const std::size_t count = read_be32(b, 4, path, "label count");
  if (b.size() < 8 + count) {
    throw FormatError(path, b.size(), "truncated payload: expected " + std::to_string(8 + count) + " bytes");
  }
  if (b.size() > 8 + count) throw FormatError(path, 8 + count, "trailing bytes after payload");
  Labels out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = b[8 + i];
  return out;
}

void write_idx_images(const std::string& path, const Eigen::MatrixXd& pixels, std::size_t height, std::size_t width) {
  if (static_cast<std::size_t>(pixels.cols()) != height * width) {
    throw std::invalid_argument("write_idx_images: pixel count does not match height x width");
  }
  std::vector<std::uint8_t> b;
  b.reserve(16 + static_cast<std::size_t>(pixels.size()));
  put_be32(b, kImageMagic);
  put_be32(b, static_cast<std::uint32_t>(pixels.rows()));
  put_be32(b, static_cast<std::uint32_t>(height));
  put_be32(b, static_cast<std::uint32_t>(width));
  for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
    for (Eigen::Index p = 0; p < pixels.cols(); ++p) {
      b.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(pixels(i, p), 0.0, 1.0) * 255.0)));
    }
  }
  write_file_bytes(path, b);
}

void write_idx_labels(const std::string& path, const Labels& labels) {
  std::vector<std::uint8_t> b;
  put_be32(b, kLabelMagic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 255) throw std::invalid_argument("write_idx_labels: label outside a byte");
    b.push_back(static_cast<std::uint8_t>(l));
  }
  write_file_bytes(path, b);
}

ImageDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
  IdxImages img = read_idx_images(images_path);
  Labels labels = read_idx_labels(labels_path);
  if (static_cast<Eigen::Index>(labels.size()) != img.pixels.rows()) {
    throw FormatError(labels_path, 4,
                      "label count " + std::to_string(labels.size()) + " does not match image count " +
                          std::to_string(img.pixels.rows()) + " in " + images_path);
  }
  return {std::move(img.pixels), std::move(labels), img.height, img.width, {images_path, labels_path}};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line, std::size_t col) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::runtime_error(path + ": line " + std::to_string(line) + ", column " + std::to_string(col + 1) +
                             ": not a number: '" + s + "'");
  }
  return v;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw std::invalid_argument("write_csv: header width does not match matrix");
  }
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path);
  for (std::size_t c = 0; c < header.size(); ++c) std::fprintf(f, c ? ",%s" : "%s", header[c].c_str());
  std::fputc('\n', f);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) std::fprintf(f, c ? ",%.17g" : "%.17g", values(r, c));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file (header row required)");
  t.header = split_csv_line(strip_cr(line));
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(path + ": line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                               " fields, header has " + std::to_string(t.header.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) row.push_back(parse_double(cells[c], path, lineno, c));
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return t;
}

ImageDataset load_csv_dataset(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto it = std::find(t.header.begin(), t.header.end(), "label");
  if (it == t.header.end()) throw std::runtime_error(path + ": no 'label' column");
  const auto lc = static_cast<Eigen::Index>(it - t.header.begin());
  ImageDataset ds;
  ds.images.resize(t.values.rows(), t.values.cols() - 1);
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    const double l = t.values(r, lc);
    if (l != std::floor(l) || l < 0) {
      throw std::runtime_error(path + ": row " + std::to_string(r + 1) + ": label is not a non-negative integer");
    }
    ds.labels.push_back(static_cast<int>(l));
    Eigen::Index out = 0;
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
      if (c != lc) ds.images(r, out++) = t.values(r, c);
    }
  }
  ds.height = 1;
  ds.width = static_cast<std::size_t>(ds.images.cols());
  ds.sources = {path};
  return ds;
}

void write_labels_csv(const std::string& path, const Labels& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "label\n";
  for (int l : labels) out << l << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Labels read_labels_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != 1 || t.header[0] != "label") throw std::runtime_error(path + ": expected a single 'label' column");
  Labels out;
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) out.push_back(static_cast<int>(t.values(r, 0)));
  return out;
}

Split subset(const ImageDataset& ds, std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  if (n_train + n_test > ds.size()) {
    throw std::invalid_argument("subset: requested " + std::to_string(n_train) + " + " + std::to_string(n_test) +
                                " records but only " + std::to_string(ds.size()) + " are available");
  }
  Rng rng(seed);
  const auto perm = permutation(ds.size(), rng);
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::size_t> idx(perm.begin() + static_cast<std::ptrdiff_t>(from),
                                 perm.begin() + static_cast<std::ptrdiff_t>(from + count));
    ImageDataset out;
    out.images = select_rows(ds.images, idx);
    for (auto i : idx) out.labels.push_back(ds.labels[i]);
    out.height = ds.height;
    out.width = ds.width;
    out.sources = ds.sources;
    return out;
  };
  return {take(0, n_train), take(n_train, n_test)};
}

std::string sha256_hex(const void* data, std::size_t len) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  if (EVP_Digest(data, len, md, &md_len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < md_len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes.data(), bytes.size());
}

std::string sha256_dataset(const Eigen::MatrixXd& x, const Labels& y) {
  std::vector<std::uint8_t> buf;
  auto put = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  };
  const std::int64_t dims[2] = {x.rows(), x.cols()};
  put(dims, sizeof dims);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double v = x(r, c);
      put(&v, sizeof v);
    }
  }
  for (int l : y) {
    const auto v = static_cast<std::int32_t>(l);
    put(&v, sizeof v);
  }
  return sha256_hex(buf.data(), buf.size());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void save_embedding_cache(const std::string& dir, const EmbeddingMatrix& emb, const Labels& labels,
                          const std::string& dataset_sha256) {
  if (static_cast<Eigen::Index>(labels.size()) != emb.values.rows()) {
    throw std::invalid_argument("save_embedding_cache: label count does not match rows");
  }
  fs::create_directories(dir);
  json m{{"spec", emb.spec_template},
         {"evolution_config", emb.config},
         {"method", to_string(emb.config.method)},
         {"columns", emb.schema.names},
         {"dataset_sha256", dataset_sha256},
         {"created_utc", utc_timestamp()}};
  write_csv(dir + "/embeddings.csv", emb.schema.names, emb.values);
  write_labels_csv(dir + "/labels.csv", labels);
  // Manifest last: its presence marks a complete cache.
  write_json_file(dir + "/manifest.json", m);
}

std::optional<CacheManifest> read_cache_manifest(const std::string& dir) {
  const std::string path = dir + "/manifest.json";
  if (!fs::exists(path)) return std::nullopt;
  const json j = read_json_file(path);
  try {
    CacheManifest m;
    m.spec = j.at("spec").get<ChainSpec>();
    m.evolution_config = j.at("evolution_config").get<EvolutionConfig>();
    m.method = j.at("method").get<std::string>();
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.dataset_sha256 = j.at("dataset_sha256").get<std::string>();
    m.created_utc = j.at("created_utc").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

EmbeddingCache load_embedding_cache(const std::string& dir) {
  auto m = read_cache_manifest(dir);
  if (!m) throw std::runtime_error("no embedding cache in " + dir + " (manifest.json missing)");
  EmbeddingCache c{*m, {}, {}};
  CsvTable t = read_csv(dir + "/embeddings.csv");
  if (t.header != m->columns) throw std::runtime_error(dir + "/embeddings.csv: header does not match manifest columns");
  c.values = std::move(t.values);
  c.labels = read_labels_csv(dir + "/labels.csv");
  if (static_cast<Eigen::Index>(c.labels.size()) != c.values.rows()) {
    throw std::runtime_error(dir + ": labels.csv and embeddings.csv row counts differ");
  }
  return c;
}

EmbeddingMatrix cache_to_matrix(const EmbeddingCache& cache, const EmbeddingOptions& opts) {
  EmbeddingMatrix m;
  m.spec_template = cache.manifest.spec;
  m.config = cache.manifest.evolution_config;
  m.options = opts;
  m.schema = embedding_schema(m.spec_template, m.config, opts);
  if (m.schema.names != cache.manifest.columns) {
    throw std::runtime_error("embedding cache: stored columns do not match the schema of its own spec and config");
  }
  m.values = cache.values;
  return m;
}

}  // namespace qelm
