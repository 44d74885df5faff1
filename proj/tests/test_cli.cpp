#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "hashednets/budget.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
  std::vector<json> lines() const {
    std::vector<json> v;
    std::istringstream in(out);
    for (std::string line; std::getline(in, line);) v.push_back(json::parse(line));
    return v;
  }
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "hashednets");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = hashednets::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hashednets_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::vector<std::string> kBlobs{"--data", "blobs", "--train-size", "200", "--test-size", "100"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, ShrinkSingleHiddenLayer) {
  const Result r = run({"shrink", "--arch", "784,1000,10", "--c", "0.125"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = r.lines();
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0]["config"]["command"], "shrink");
  EXPECT_EQ(lines[1]["r"].get<double>(), 0.125);
  EXPECT_EQ(lines[1]["widths"], json::array({784, 125, 10}));
}

TEST(Cli, ShrinkRejectsNegativeFactor) {
  const Result r = run({"shrink", "--arch", "784,1000,10", "--c", "-1"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, GradcheckHashed) {
  const Result r = run({"gradcheck", "--arch", "20,13,7,5", "--kind", "hashed", "--K", "17"});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto lines = r.lines();
  EXPECT_LT(lines[1]["max_rel_error"].get<double>(), 1e-6);
  EXPECT_EQ(lines[1]["params_checked"], 17 * 3 + 5);
}

TEST(Cli, Equivtest) {
  const Result r = run({"equivtest", "--layers", "10"});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.lines()[1]["pass"].get<bool>());
}

TEST(Cli, TrainHashedHasBudgetedParameterCount) {
  const Result r = run(with({"train", "--arch", "16,40,10", "--kind", "hashed", "--compression", "0.125",
                             "--epochs", "1"},
                            kBlobs));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::size_t expected = hashednets::param_count_hashed({{16, 40, 10}, 0.125});
  EXPECT_EQ(r.lines()[1]["param_count"].get<std::size_t>(), expected);
}

TEST(Cli, TrainRejectsZeroCompression) {
  const Result r = run(with({"train", "--arch", "16,40,10", "--kind", "hashed", "--compression", "0"}, kBlobs));
  EXPECT_EQ(r.code, hashednets::cli::kRuntimeError);
  EXPECT_NE(r.err.find("--compression"), std::string::npos);
}

TEST(Cli, TrainRejectsCompressedStandardNet) {
  const Result r = run(with({"train", "--arch", "16,40,10", "--kind", "standard", "--compression", "0.5"}, kBlobs));
  EXPECT_EQ(r.code, hashednets::cli::kRuntimeError);
}

TEST(Cli, TrainAndEvalAgreeAndAreReproducible) {
  const auto log1 = scratch("log1.csv"), log2 = scratch("log2.csv");
  const auto ck1 = scratch("m1.bin"), ck2 = scratch("m2.bin");
  const auto args = with({"train", "--arch", "16,30,10", "--kind", "hashed", "--compression", "0.25", "--epochs",
                          "3", "--dropout", "0.2", "--seed", "7"},
                         kBlobs);
  const Result a = run(with(args, {"--log", log1.string(), "--checkpoint", ck1.string()}));
  const Result b = run(with(args, {"--log", log2.string(), "--checkpoint", ck2.string()}));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(log1), slurp(log2));
  EXPECT_EQ(slurp(ck1), slurp(ck2));
  EXPECT_EQ(slurp(log1).substr(0, 36), "epoch,train_loss,train_err,test_err\n");

  const Result e = run(with({"eval", "--checkpoint", ck1.string()}, kBlobs));
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(e.lines()[1]["test_error"], a.lines()[1]["final_test_error"]);
}

TEST(Cli, SweepIsReproducibleAndMarksInfeasible) {
  const auto out1 = scratch("sweep1.csv"), out2 = scratch("sweep2.csv");
  const auto args = with({"sweep", "--arch", "16,30,10", "--axis", "expansion", "--values", "0.5,1,2", "--methods",
                          "hashed,edge_removed,standard", "--seeds", "1,2", "--epochs", "1"},
                         kBlobs);
  const Result a = run(with(args, {"--out", out1.string()}));
  const Result b = run(with(args, {"--out", out2.string()}));
  ASSERT_EQ(a.code, 0) << a.err;
  std::string b_out = b.out;
  for (auto at = b_out.find(out2.string()); at != std::string::npos; at = b_out.find(out2.string(), at)) {
    b_out.replace(at, out2.string().size(), out1.string());
  }
  EXPECT_EQ(a.out.substr(a.out.find('\n')), b_out.substr(b_out.find('\n')));
  const std::string csv = slurp(out1);
  EXPECT_EQ(csv, slurp(out2));
  EXPECT_NE(csv.find("0.5,edge_removed,1,infeasible"), std::string::npos) << csv;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 3 * 2);
}

TEST(Cli, SweepNeedsValues) {
  EXPECT_NE(run(with({"sweep", "--arch", "16,30,10", "--out", scratch("x.csv").string()}, kBlobs)).code, 0);
  EXPECT_NE(run(with({"sweep", "--arch", "16,30,10", "--values", "--out", scratch("x.csv").string()}, kBlobs)).code,
            0);
}

TEST(Cli, ConfigFileIsOverriddenByFlags) {
  const auto cfg = scratch("run.toml");
  {
    std::ofstream f(cfg);
    f << "[train]\nepochs = 2\nlr = 0.5\nkind = \"edge_removed\"\n";
  }
  const Result r = run(with({"--config", cfg.string(), "train", "--arch", "16,30,10", "--lr", "0.01"}, kBlobs));
  ASSERT_EQ(r.code, 0) << r.err;
  const json config = r.lines()[0]["config"];
  EXPECT_EQ(config["train"]["epochs"], 2);
  EXPECT_EQ(config["train"]["learning_rate"].get<double>(), 0.01);
  EXPECT_EQ(config["kind"], "edge_removed");
}

TEST(Cli, MissingDataIsReported) {
  const Result r = run({"train", "--arch", "784,20,10", "--kind", "standard", "--data-dir", "/nonexistent"});
  EXPECT_EQ(r.code, hashednets::cli::kRuntimeError);
  EXPECT_NE(r.err.find("/nonexistent"), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_NE(run({"frobnicate"}).code, 0);
  EXPECT_NE(run({}).code, 0);
}
