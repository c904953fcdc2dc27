#include "mdreg/cli.hpp"
#include "mdreg/experiment.hpp"
#include "mdreg/serialize.hpp"

#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;
using mdreg::io::read_text_file;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("mdreg_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path config(const std::string& name, const std::string& body) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << body;
    return p;
  }

  int run(std::vector<std::string> args) {
    out_.str({});
    err_.str({});
    return mdreg::cli::run(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

// Small synthetic problem that trains in well under a second.
const char* kSmall = R"({
  "schema_version": 1,
  "data": {"synthetic": {"n_source": 300, "n_target": 200, "rotation_degrees": 30, "seed": 1}},
  "methods": ["knn", "gol_knn", "gol_mdr"],
  "train": {"steps": 60},
  "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
  "shots_sweep": [1, 5, 10, 20]
})";

TEST_F(Cli, TrainWritesCheckpointAndTrace) {
  const auto cfg = config("train.json", kSmall);
  ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", (dir_ / "out").string()}), mdreg::cli::kSuccess)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "out" / "checkpoint.json"));
  const auto trace = read_text_file(dir_ / "out" / "loss_trace.csv");
  EXPECT_GT(std::count(trace.begin(), trace.end(), '\n'), 10);
  EXPECT_NO_THROW(mdreg::io::read_checkpoint(dir_ / "out" / "checkpoint.json"));
}

TEST_F(Cli, MissingInputFileIsAValidationError) {
  const auto cfg = config("missing.json", R"({"schema_version":1,"data":{"source":"nowhere.csv"}})");
  EXPECT_EQ(run({"train", "--config", cfg.string(), "--out", dir_.string()}), mdreg::cli::kValidation);
  EXPECT_NE(err_.str().find("nowhere.csv"), std::string::npos) << err_.str();
  EXPECT_EQ(run({"train", "--config", (dir_ / "absent.json").string()}), mdreg::cli::kValidation);
  EXPECT_NE(err_.str().find("absent.json"), std::string::npos) << err_.str();
}

TEST_F(Cli, DivergentTrainingExitsWithStep) {
  const auto cfg = config("div.json", R"({"schema_version":1,"data":{"synthetic":{"n_source":300,"n_target":100}},
                                         "train":{"learning_rate":1000}})");
  EXPECT_EQ(run({"train", "--config", cfg.string(), "--out", dir_.string()}), mdreg::cli::kTraining);
  EXPECT_NE(err_.str().find("step"), std::string::npos) << err_.str();
}

TEST_F(Cli, UnknownMethodListsValidMethods) {
  const auto cfg = config("adapt.json", kSmall);
  EXPECT_EQ(run({"adapt", "--config", cfg.string(), "--method", "unknown", "--out", dir_.string()}),
            mdreg::cli::kValidation);
  for (const auto& name : mdreg::eval::method_names()) EXPECT_NE(err_.str().find(name), std::string::npos);
}

TEST_F(Cli, UnknownFlagsAndMissingConfigAreRejected) {
  EXPECT_EQ(run({"bench", "--config", "x.json", "--frobnicate"}), mdreg::cli::kValidation);
  EXPECT_EQ(run({"bench"}), mdreg::cli::kValidation);
  EXPECT_EQ(run({}), mdreg::cli::kValidation);
  EXPECT_EQ(run({"--help"}), mdreg::cli::kSuccess);
  EXPECT_NE(out_.str().find("adapt"), std::string::npos);
}

TEST_F(Cli, AdaptMatchesLibrarySingleRun) {
  const auto cfg = config("adapt.json", R"({
    "schema_version": 1,
    "data": {"synthetic": {"rotation_degrees": 30, "label_scale": 1.2, "label_shift": 3, "noise": 0.05, "seed": 42}},
    "methods": ["gol_mdr"],
    "train": {"steps": 100},
    "seed": 42
  })");
  ASSERT_EQ(run({"adapt", "--config", cfg.string(), "--out", dir_.string()}), mdreg::cli::kSuccess) << err_.str();
  const auto report = nlohmann::json::parse(read_text_file(dir_ / "adapt_report.json"));

  // The library path: the same config as a one-seed experiment.
  auto setup = mdreg::io::parse_experiment_config(read_text_file(cfg), dir_);
  setup.config.seeds = {42};
  const auto domains = mdreg::io::load_domains(setup.data);
  const auto lib = mdreg::eval::run_experiment(setup.config, domains);
  ASSERT_EQ(lib.methods[0].runs.size(), 1u);
  EXPECT_EQ(report["r2"].get<double>(), lib.methods[0].runs[0]);
  EXPECT_EQ(report["seed"].get<std::uint64_t>(), 42u);
  EXPECT_EQ(report["support_ids"].size(), 25u);
}

TEST_F(Cli, ShotsBeyondSmallestGroupWarnButSucceed) {
  const auto cfg = config("short.json", R"({
    "schema_version": 1,
    "data": {"synthetic": {"n_source": 300, "n_target": 150, "seed": 3}},
    "methods": ["knn"],
    "shots": 25,
    "seed": 1
  })");
  ASSERT_EQ(run({"adapt", "--config", cfg.string(), "--out", dir_.string()}), mdreg::cli::kSuccess) << err_.str();
  const auto report = nlohmann::json::parse(read_text_file(dir_ / "adapt_report.json"));
  EXPECT_FALSE(report["warnings"].empty());
  EXPECT_NE(err_.str().find("warning"), std::string::npos);
}

TEST_F(Cli, BenchWritesOneRowPerMethodAndRepeat) {
  const auto cfg = config("bench.json", kSmall);
  ASSERT_EQ(run({"bench", "--config", cfg.string(), "--out", dir_.string()}), mdreg::cli::kSuccess) << err_.str();
  const auto runs = read_text_file(dir_ / "runs.csv");
  EXPECT_EQ(std::count(runs.begin(), runs.end(), '\n'), 1 + 3 * 10);
  const auto report = nlohmann::json::parse(read_text_file(dir_ / "report.json"));
  EXPECT_EQ(report["shots_sweep"].size(), 4u);
}

TEST_F(Cli, BenchIsByteIdenticalAcrossInvocations) {
  const auto cfg = config("bench.json", kSmall);
  ASSERT_EQ(run({"bench", "--config", cfg.string(), "--out", (dir_ / "a").string()}), 0) << err_.str();
  ASSERT_EQ(run({"bench", "--config", cfg.string(), "--out", (dir_ / "b").string()}), 0) << err_.str();
  for (const char* name : {"report.json", "runs.csv", "sweep.csv"})
    EXPECT_EQ(read_text_file(dir_ / "a" / name), read_text_file(dir_ / "b" / name)) << name;
}

TEST_F(Cli, PipelineSubcommandsSucceed) {
  const auto cfg = config("pipe.json", kSmall);
  const auto out = (dir_ / "out").string();
  for (const char* sub : {"generate", "train", "embed", "diffuse", "project"})
    EXPECT_EQ(run({sub, "--config", cfg.string(), "--out", out}), 0) << sub << ": " << err_.str();
  for (const char* name : {"embeddings.csv", "checkpoint.json", "embedded.csv", "graph.csv", "graph.json",
                           "scores.csv", "predictions.csv", "projection.csv"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / name)) << name;
  EXPECT_EQ(read_text_file(dir_ / "out" / "predictions.csv").rfind("id,true,pred\r\n", 0), 0u);
}

TEST_F(Cli, SeedOverrideChangesSupport) {
  const auto cfg = config("seed.json", R"({"schema_version":1,"data":{"synthetic":{"n_source":300,"n_target":200}},
                                          "methods":["knn"],"seed":1})");
  ASSERT_EQ(run({"adapt", "--config", cfg.string(), "--out", (dir_ / "a").string()}), 0);
  ASSERT_EQ(run({"adapt", "--config", cfg.string(), "--seed", "2", "--out", (dir_ / "b").string()}), 0);
  const auto a = nlohmann::json::parse(read_text_file(dir_ / "a" / "adapt_report.json"));
  const auto b = nlohmann::json::parse(read_text_file(dir_ / "b" / "adapt_report.json"));
  EXPECT_NE(a["support_ids"], b["support_ids"]);
}

}  // namespace
