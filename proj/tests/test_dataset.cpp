#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "qelm/dataset.hpp"

using namespace qelm;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("qelm-test-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write_raw(const std::string& name, const std::vector<std::uint8_t>& bytes) const {
    std::ofstream(path(name), std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                       static_cast<std::streamsize>(bytes.size()));
  }
  fs::path dir_;
};

// Two 2x2 images and their labels, byte for byte.
const std::vector<std::uint8_t> kImages{0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 51, 102, 255, 0, 0, 153};
const std::vector<std::uint8_t> kLabels{0, 0, 8, 1, 0, 0, 0, 2, 7, 3};

std::size_t format_offset(const std::function<void()>& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no FormatError thrown";
  return static_cast<std::size_t>(-1);
}

}  // namespace

using Dataset = TempDir;

TEST_F(Dataset, ReadsHandBuiltIdxFixture) {
  write_raw("img", kImages);
  write_raw("lab", kLabels);
  const ImageDataset ds = load_idx_dataset(path("img"), path("lab"));
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.height, 2u);
  EXPECT_EQ(ds.width, 2u);
  EXPECT_EQ(ds.labels, (Labels{7, 3}));
  EXPECT_DOUBLE_EQ(ds.images(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(ds.images(0, 2), 0.2);
  EXPECT_DOUBLE_EQ(ds.images(1, 3), 0.6);
  EXPECT_DOUBLE_EQ(ds.images(1, 1), 0.0);
}

TEST_F(Dataset, MalformedFilesReportOffsets) {
  write_raw("empty", {});
  EXPECT_EQ(format_offset([&] { read_idx_images(path("empty")); }), 0u);
  EXPECT_EQ(format_offset([&] { read_idx_labels(path("empty")); }), 0u);

  auto wrong_magic = kImages;
  wrong_magic[3] = 1;
  write_raw("magic", wrong_magic);
  EXPECT_EQ(format_offset([&] { read_idx_images(path("magic")); }), 0u);

  write_raw("short_header", std::vector<std::uint8_t>(kImages.begin(), kImages.begin() + 10));
  EXPECT_EQ(format_offset([&] { read_idx_images(path("short_header")); }), 8u);

  write_raw("truncated", std::vector<std::uint8_t>(kImages.begin(), kImages.end() - 1));
  EXPECT_EQ(format_offset([&] { read_idx_images(path("truncated")); }), kImages.size() - 1);

  auto extra = kLabels;
  extra.push_back(1);
  write_raw("extra", extra);
  EXPECT_EQ(format_offset([&] { read_idx_labels(path("extra")); }), kLabels.size());

  write_raw("img", kImages);
  write_raw("lab3", {0, 0, 8, 1, 0, 0, 0, 3, 1, 2, 3});
  EXPECT_THROW(load_idx_dataset(path("img"), path("lab3")), FormatError);
}

TEST_F(Dataset, FormatErrorMessageNamesFileAndOffset) {
  write_raw("empty", {});
  try {
    read_idx_images(path("empty"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte 0"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("empty"), std::string::npos);
  }
  EXPECT_THROW(read_file_bytes(path("missing")), std::runtime_error);
}

TEST_F(Dataset, IdxRoundTripPlainAndGzip) {
  Eigen::MatrixXd px(3, 6);
  for (Eigen::Index i = 0; i < px.size(); ++i) px.data()[i] = static_cast<double>((i * 37) % 256) / 255.0;
  const Labels y{4, 0, 9};
  for (const std::string ext : {"", ".gz"}) {
    write_idx_images(path("i" + ext), px, 2, 3);
    write_idx_labels(path("l" + ext), y);
    const ImageDataset ds = load_idx_dataset(path("i" + ext), path("l" + ext));
    EXPECT_EQ(ds.images, px);
    EXPECT_EQ(ds.labels, y);
    EXPECT_EQ(ds.width, 3u);
  }
  // The gzip file really is compressed, and reads back as the plain bytes.
  std::ifstream gz(path("i.gz"), std::ios::binary);
  EXPECT_EQ(gz.get(), 0x1f);
  EXPECT_EQ(read_file_bytes(path("i.gz")), read_file_bytes(path("i")));
}

TEST_F(Dataset, CsvDataset) {
  std::ofstream(path("d.csv")) << "a,label,b\n0.5,3,-1\n2,1,4.25\n";
  const ImageDataset ds = load_csv_dataset(path("d.csv"));
  EXPECT_EQ(ds.labels, (Labels{3, 1}));
  ASSERT_EQ(ds.images.cols(), 2);
  EXPECT_EQ(ds.images(0, 0), 0.5);
  EXPECT_EQ(ds.images(1, 1), 4.25);
  std::ofstream(path("nolabel.csv")) << "a,b\n1,2\n";
  EXPECT_ANY_THROW(load_csv_dataset(path("nolabel.csv")));
}

TEST_F(Dataset, CsvRoundTripIsExact) {
  Eigen::MatrixXd m(2, 3);
  m << 1.0 / 3.0, -2e-300, 7, 0.1, 1e300, -0.0;
  write_csv(path("m.csv"), {"x", "y", "z"}, m);
  const CsvTable t = read_csv(path("m.csv"));
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_EQ(t.values, m);
  write_labels_csv(path("l.csv"), {1, 2, 3});
  EXPECT_EQ(read_labels_csv(path("l.csv")), (Labels{1, 2, 3}));
}

TEST(Subset, DisjointDeterministicAndSized) {
  ImageDataset ds;
  ds.images.resize(100, 1);
  for (int i = 0; i < 100; ++i) {
    ds.images(i, 0) = i;
    ds.labels.push_back(i % 10);
  }
  const Split a = subset(ds, 30, 20, 5), b = subset(ds, 30, 20, 5);
  EXPECT_EQ(a.train.images, b.train.images);
  EXPECT_EQ(a.train.size(), 30u);
  EXPECT_EQ(a.test.size(), 20u);
  std::set<double> seen;
  for (Eigen::Index i = 0; i < 30; ++i) seen.insert(a.train.images(i, 0));
  for (Eigen::Index i = 0; i < 20; ++i) seen.insert(a.test.images(i, 0));
  EXPECT_EQ(seen.size(), 50u);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(a.train.labels[i], static_cast<int>(a.train.images(static_cast<Eigen::Index>(i), 0)) % 10);
  }
  EXPECT_NE(subset(ds, 30, 20, 6).train.images, a.train.images);
  // A larger train set extends the same permutation.
  const Split c = subset(ds, 50, 0, 5);
  EXPECT_EQ(c.train.images.topRows(30), a.train.images);
  EXPECT_ANY_THROW(subset(ds, 90, 20, 0));
}

TEST(Hashing, KnownDigests) {
  EXPECT_EQ(sha256_hex("abc", 3), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex("", 0), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 2);
  EXPECT_EQ(sha256_dataset(x, {0, 1}), sha256_dataset(x, {0, 1}));
  EXPECT_NE(sha256_dataset(x, {0, 1}), sha256_dataset(x, {1, 0}));
  EXPECT_NE(sha256_dataset(x, {0, 1}), sha256_dataset(Eigen::MatrixXd::Ones(1, 4), {0, 1}));
}

using Cache = TempDir;

TEST_F(Cache, RoundTrip) {
  const ChainSpec spec = ChainSpec::uniform(3, 2.0, 11.0);
  EvolutionConfig evo;
  EmbeddingMatrix emb;
  emb.schema = embedding_schema(spec, evo);
  emb.spec_template = spec;
  emb.config = evo;
  emb.values = Eigen::MatrixXd::Random(4, static_cast<Eigen::Index>(emb.schema.size()));
  save_embedding_cache(path("c"), emb, {1, 2, 3, 4}, "feed");
  const EmbeddingCache c = load_embedding_cache(path("c"));
  EXPECT_EQ(c.values, emb.values);
  EXPECT_EQ(c.labels, (Labels{1, 2, 3, 4}));
  EXPECT_EQ(c.manifest.dataset_sha256, "feed");
  EXPECT_EQ(c.manifest.method, "one-site");
  EXPECT_EQ(c.manifest.columns, emb.schema.names);
  const EmbeddingMatrix back = cache_to_matrix(c);
  EXPECT_EQ(back.schema.names, emb.schema.names);
  EXPECT_EQ(back.values, emb.values);
  EXPECT_TRUE(read_cache_manifest(path("c")).has_value());
  EXPECT_FALSE(read_cache_manifest(path("nothing")).has_value());
}

TEST_F(Cache, SchemaMismatchIsDetected) {
  const ChainSpec spec = ChainSpec::uniform(3, 2.0, 11.0);
  EmbeddingMatrix emb;
  emb.schema = embedding_schema(spec, EvolutionConfig{});
  emb.spec_template = spec;
  emb.values = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(emb.schema.size()));
  save_embedding_cache(path("c"), emb, {0}, "x");
  EmbeddingCache c = load_embedding_cache(path("c"));
  c.manifest.columns[0] = "t=0.5:Z_9";
  EXPECT_ANY_THROW(cache_to_matrix(c));
}
