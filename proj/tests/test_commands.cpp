#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qelm/commands.hpp"

using namespace qelm;
namespace fs = std::filesystem;

namespace {

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qelm-cmd-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    // 60 records of 8 features; the class is whichever of the first three is hot.
    std::ofstream f(dir_ / "data.csv");
    f << "f1,f2,f3,f4,f5,f6,f7,f8,label\n";
    for (int i = 0; i < 60; ++i) {
      const int label = i % 3;
      for (int c = 0; c < 8; ++c) f << (c == label ? 1.0 : 0.0) + 0.01 * ((i * 7 + c * 3) % 11) << ',';
      f << label << '\n';
    }
    cfg_.dataset.csv = (dir_ / "data.csv").string();
    cfg_.dataset.n_train = 40;
    cfg_.dataset.n_test = 10;
    cfg_.encoding.k = 4;
    cfg_.model.train.classes = 3;
    cfg_.model.train.epochs = 5;
    cfg_.output_dir = (dir_ / "out").string();
    cfg_.workers = 1;
  }
  void TearDown() override { fs::remove_all(dir_); }

  int cli(const std::string& args) const {
    const std::string cmd = std::string(QELM_CLI_PATH) + " " + args + " > " + (dir_ / "cli.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::size_t csv_rows(const fs::path& p) const {
    std::ifstream f(p);
    std::size_t n = 0;
    for (std::string line; std::getline(f, line);) n += !line.empty();
    return n - 1;
  }

  fs::path dir_;
  ExperimentConfig cfg_;
};

}  // namespace

TEST_F(Commands, IngestWritesSummary) {
  std::ostringstream log;
  EXPECT_EQ(cmd_ingest(cfg_, log), kExitOk);
  const json s = read_json_file(cfg_.output_dir + "/ingest/summary.json");
  EXPECT_EQ(s["records"], 60);
  EXPECT_EQ(s["label_counts"][1], 20);
  EXPECT_EQ(s["files"][0]["sha256"].get<std::string>().size(), 64u);
  EXPECT_TRUE(fs::exists(cfg_.output_dir + "/ingest/resolved_config.json"));
}

TEST_F(Commands, MissingDataIsAnInputError) {
  cfg_.dataset.csv = (dir_ / "nope.csv").string();
  std::ostringstream log;
  EXPECT_EQ(cmd_ingest(cfg_, log), kExitInput);
  EXPECT_NE(log.str().find("nope.csv"), std::string::npos);
}

TEST_F(Commands, EmbedCachesAndTrains) {
  std::ostringstream log;
  ASSERT_EQ(cmd_embed(cfg_, log), kExitOk) << log.str();
  const std::string train_dir = embedding_dir(cfg_, "train");
  const EmbeddingCache c = load_embedding_cache(train_dir);
  EXPECT_EQ(c.values.rows(), 40);
  EXPECT_EQ(c.values.cols(), 8 * (4 + 6));
  EXPECT_EQ(read_csv(features_dir(cfg_, "test") + "/features.csv").values.rows(), 10);

  std::ostringstream again;
  ASSERT_EQ(cmd_embed(cfg_, again), kExitOk);
  EXPECT_NE(again.str().find("train: cache hit"), std::string::npos);
  EXPECT_NE(again.str().find("test: cache hit"), std::string::npos);

  // A different chain invalidates the cache.
  ExperimentConfig other = cfg_;
  other.chain.spacing_um = 9.0;
  std::ostringstream third;
  ASSERT_EQ(cmd_embed(other, third), kExitOk);
  EXPECT_EQ(third.str().find("cache hit"), std::string::npos);

  std::ostringstream tlog;
  ASSERT_EQ(cmd_train(other, {"embedding", std::nullopt}, tlog), kExitOk) << tlog.str();
  EXPECT_EQ(csv_rows(fs::path(cfg_.output_dir) / "train/embedding-linear/folds.csv"), 5u);
  ASSERT_EQ(cmd_train(other, {"pca", std::nullopt}, tlog), kExitOk) << tlog.str();
  ASSERT_EQ(cmd_train(other, {"embedding", 2.0}, tlog), kExitOk) << tlog.str();
  const json s = read_json_file(cfg_.output_dir + "/train/embedding-linear-t2/summary.json");
  EXPECT_EQ(s["k_folds"], 5);
  EXPECT_EQ(s["columns"], 4 * (4 + 6));
  // Training against a cache built for another chain is refused.
  EXPECT_EQ(cmd_train(cfg_, {"embedding", std::nullopt}, tlog), kExitInput);
}

TEST_F(Commands, TrainWithoutCacheIsAnInputError) {
  std::ostringstream log;
  EXPECT_EQ(cmd_train(cfg_, {"embedding", std::nullopt}, log), kExitInput);
}

TEST_F(Commands, SingleCellSweep) {
  cfg_.sweep.omegas_2pi = {1.0};
  cfg_.sweep.distances_um = {11.0};
  cfg_.sweep.sample = 20;
  std::ostringstream log;
  ASSERT_EQ(cmd_sweep(cfg_, log), kExitOk) << log.str();
  const fs::path heat = fs::path(cfg_.output_dir) / "sweep/heatmap.csv";
  EXPECT_EQ(csv_rows(heat), 1u);
  std::ifstream f(heat);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "omega,distance_um,accuracy,accuracy_std,variance,ea_q,status");
}

TEST_F(Commands, BenchWritesOneRowPerSizeAndMethod) {
  cfg_.bench.qubits = {3, 4};
  std::ostringstream log;
  ASSERT_EQ(cmd_bench(cfg_, log), kExitOk);
  EXPECT_EQ(csv_rows(fs::path(cfg_.output_dir) / "bench/bench.csv"), 4u);
}

TEST_F(Commands, ValidatePassesAndFailsOnTolerance) {
  cfg_.validate.qubits = 6;
  std::ostringstream log;
  EXPECT_EQ(cmd_validate(cfg_, log), kExitOk) << log.str();
  const json r = read_json_file(cfg_.output_dir + "/validate/report.json");
  EXPECT_TRUE(r["pass"].get<bool>());
  cfg_.validate.tolerance = 1e-12;
  EXPECT_EQ(cmd_validate(cfg_, log), kExitValidation);
}

TEST_F(Commands, CliExitCodes) {
  const std::string out = " --out " + (dir_ / "cli").string();
  EXPECT_EQ(cli("validate --qubits 5" + out), 0);
  EXPECT_EQ(cli("validate --qubits 5 --tolerance 1e-12" + out), 1);
  EXPECT_EQ(cli("ingest" + out + " --config " + (dir_ / "missing.json").string()), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("validate --method three-site" + out), 2);
  std::ofstream(dir_ / "bad.json") << R"({"chain": {"omega_2pi": "fast"}})";
  EXPECT_EQ(cli("validate --config " + (dir_ / "bad.json").string() + out), 2);
  std::ofstream(dir_ / "data.json") << R"({"dataset": {"csv": ")" << (dir_ / "absent.csv").string() << R"("}})";
  EXPECT_EQ(cli("ingest --config " + (dir_ / "data.json").string() + out), 2);
  EXPECT_EQ(cli("--help"), 0);
}

TEST(DataPath, ResolvesThroughEnvironment) {
  const fs::path d = fs::temp_directory_path() / "qelm-datapath";
  fs::create_directories(d);
  std::ofstream(d / "x.idx") << "x";
  setenv("QELM_DATA_DIR", d.c_str(), 1);
  EXPECT_EQ(resolve_data_path("some/where/x.idx"), (d / "x.idx").string());
  EXPECT_THROW(resolve_data_path("y.idx"), InputError);
  unsetenv("QELM_DATA_DIR");
  fs::remove_all(d);
}
