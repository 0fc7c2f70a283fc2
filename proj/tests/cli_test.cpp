#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "kenn/io.hpp"

namespace kenn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("kenn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        write_file_atomic(dir_ / "rules.kb", "# homophily\n_:nC0(x),nCite(x,y),C0(y)\n_:nC1(x),nCite(x,y),C1(y)\n"
                                              "_:nC0(x),nC1(x)\n");
        const json config = {
            {"knowledge", "rules.kb"},
            {"data", {{"source", "synthetic"}, {"synthetic", {{"nodes", 60}, {"classes", 2}, {"feat_dim", 16}, {"words_per_class", 8}}}}},
            {"split", {{"fractions", 0.5}}},
            {"layers", {0, 1}},
            {"training", {{"epochs", 5}, {"hidden", {6}}}},
            {"bench", {{"sizes", {{50, 100}}}, {"dense", {8}}, {"reps", 1}}},
            {"output", {{"dir", "out"}}},
        };
        write_file_atomic(dir_ / "config.json", config.dump());
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string config() const { return (dir_ / "config.json").string(); }

    fs::path dir_;
};

TEST_F(CliTest, ParseKnowledgePrintsCanonicalClauses) {
    const auto r = run_cli({"parse-knowledge", (dir_ / "rules.kb").string(), "--unary", "C0,C1", "--binary", "Cite"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "_:nC0(x),nCite(x,y),C0(y)\n_:nC1(x),nCite(x,y),C1(y)\n_:nC0(x),nC1(x)\nK_U=1 K_B=2\n");
    const auto via_config = run_cli({"parse-knowledge", (dir_ / "rules.kb").string(), "--config", config()});
    EXPECT_EQ(via_config.out, r.out);
}

TEST_F(CliTest, ParseKnowledgeReportsPosition) {
    write_file_atomic(dir_ / "bad.kb", "_:C0(x)\n_:C0(x),Dog(x)\n");
    const auto r = run_cli({"parse-knowledge", (dir_ / "bad.kb").string(), "--unary", "C0"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("bad.kb:2:9: "), std::string::npos) << r.err;
}

TEST_F(CliTest, GroundCheckCountsRows) {
    const auto r = run_cli({"ground-check", "--config", config()});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto edges_at = r.out.find("edges=") + 6;
    const std::size_t edges = std::stoul(r.out.substr(edges_at));
    EXPECT_NE(r.out.find("unary_rows=60 binary_rows=" + std::to_string(2 * edges) +
                         " expected_unary=60 expected_binary=" + std::to_string(2 * edges)),
              std::string::npos)
        << r.out;
    EXPECT_NE(r.out.find("2\tunary\t60\t_:nC0(x),nC1(x)"), std::string::npos);
}

TEST_F(CliTest, InvalidInputsExitWithOne) {
    EXPECT_EQ(run_cli({"train", "--config", config(), "--override", "training.epochs=0"}).code, 1);
    EXPECT_EQ(run_cli({"train", "--config", config(), "--override", "nope=1"}).code, 1);
    EXPECT_EQ(run_cli({"train", "--config", (dir_ / "absent.json").string()}).code, 1);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
    EXPECT_EQ(run_cli({}).code, 1);
    const auto r = run_cli({"experiment", "--config", config(), "--override", "knowledge=absent.kb"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("absent.kb"), std::string::npos);
}

TEST_F(CliTest, ExperimentWritesTables) {
    const auto r = run_cli({"experiment", "--config", config(), "--override", "seeds=0..1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string results = read_file(dir_ / "out" / "results.csv");
    EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 1 + 2 * 2);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "summary.csv"));
    const json meta = json::parse(read_file(dir_ / "out" / "run_meta.json"));
    EXPECT_EQ(meta["command"], "experiment");
    EXPECT_EQ(meta["config"]["seeds"], (json{0, 1}));
}

TEST_F(CliTest, TrainThenEval) {
    const auto t = run_cli({"train", "--config", config(), "--override", "layers=1"});
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_TRUE(fs::exists(dir_ / "out" / "model.ckpt"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "weights.json"));
    const auto e = run_cli({"eval", "--config", config()});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NE(e.out.find("test_nodes=30"), std::string::npos) << e.out;

    // The saved run_meta.json reproduces the same configuration.
    const auto again = run_cli({"eval", "--config", (dir_ / "out" / "run_meta.json").string()});
    EXPECT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(again.out, e.out);
}

TEST_F(CliTest, BenchPrintsCsv) {
    const auto r = run_cli({"bench", "--config", config()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "constants,edges,grounding_rows,seconds,seconds_per_row");
    EXPECT_NE(r.out.find("\n50,100,200,"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("\n8,64,128,"), std::string::npos) << r.out;
}

}  // namespace
}  // namespace kenn
