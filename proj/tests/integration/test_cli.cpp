#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "app/pipeline.hpp"
#include "prosobench/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
namespace text = prosobench::text;

namespace {

const fs::path kFixture = PROSOBENCH_FIXTURE_DIR;
const std::string kConfig = (kFixture / "config.json").string();

struct Run {
  int code = 0;
  std::string out;
  std::string err;
  json manifest() const { return json::parse(out); }
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  std::vector<std::string> full{"prosobench"};
  full.insert(full.end(), args.begin(), args.end());
  const int code = prosobench::app::run_cli(full, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("prosobench-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string pred(const std::string& task, const std::string& model) {
  return model + "=" + (kFixture / "predictions" / (task + "." + model + ".tsv")).string();
}

/// Every regular file under `dir`, relative, sorted.
std::vector<std::string> files_under(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Cli, ReduceOnFixture) {
  const auto out = scratch("reduce");
  const auto r = run({"--config", kConfig, "--out", out.string(), "reduce"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "reduction.tsv"));
  EXPECT_TRUE(fs::exists(out / "reduction_hist.csv"));
  const auto m = r.manifest();
  EXPECT_EQ(m["command"], "reduce");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_FALSE(m["inputs"].empty());
  EXPECT_EQ(text::read_file((out / "reduction.tsv").string()).substr(0, 7), "speaker");
}

TEST(Cli, EveryWrittenFileIsInTheManifest) {
  const auto out = scratch("manifest");
  const auto r = run({"--config", kConfig, "--out", out.string(), "reduce"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<std::string> declared;
  const auto manifest = r.manifest();
  for (const auto& o : manifest["outputs"]) {
    declared.push_back(fs::relative(o["path"].get<std::string>(), out).string());
    const auto bytes = text::read_file(o["path"].get<std::string>());
    EXPECT_EQ(o["bytes"].get<std::size_t>(), bytes.size());
    EXPECT_EQ(o["fnv1a64"], text::hex64(text::fnv1a64(bytes)));
  }
  std::sort(declared.begin(), declared.end());
  EXPECT_EQ(declared, files_under(out));
}

TEST(Cli, MissingCorpusPathIsDataError) {
  const auto dir = scratch("missing");
  auto cfg = json::parse(text::read_file(kConfig));
  const std::string missing = (dir / "no-such-corpus.tsv").string();
  cfg["corpus"]["recordings"] = json::array({{{"id", "r"}, {"format", "tsv"}, {"path", missing}}});
  text::write_file((dir / "config.json").string(), cfg.dump());
  const auto r = run({"--config", (dir / "config.json").string(), "--out", (dir / "out").string(), "ingest"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"--config", kConfig, "score"}).code, 1);  // --task and --pred are required
  EXPECT_EQ(run({"reduce"}).code, 1);                      // no config
  EXPECT_EQ(run({"--jobs", "0", "--config", kConfig, "reduce"}).code, 1);
}

TEST(Cli, UnknownConfigKeyIsRejected) {
  const auto dir = scratch("badkey");
  auto cfg = json::parse(text::read_file(kConfig));
  cfg["reduction"]["treshold"] = 0.4;
  text::write_file((dir / "config.json").string(), cfg.dump());
  const auto r = run({"--config", (dir / "config.json").string(), "--out", dir.string(), "ingest"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("treshold"), std::string::npos) << r.err;
}

TEST(Cli, ConfigHashTracksSemanticFields) {
  const auto base = json::parse(text::read_file(kConfig));
  auto hash = [](json j) { return prosobench::app::config_hash(prosobench::app::parse_config(j, kFixture)); };
  auto moved = base;
  moved["output_dir"] = "elsewhere";
  EXPECT_EQ(hash(base), hash(moved));
  auto threshold = base;
  threshold["reduction"]["threshold"] = 0.45;
  EXPECT_NE(hash(base), hash(threshold));
  auto seed = base;
  seed["seed"] = 7;
  EXPECT_NE(hash(base), hash(seed));
  auto spelled_default = base;
  spelled_default["folds"]["k"] = 8;
  EXPECT_EQ(hash(base), hash(spelled_default));
}

TEST(Cli, ValidateReportsCleanFixture) {
  const auto out = scratch("validate");
  const auto r = run({"--config", kConfig, "--out", out.string(), "validate"});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(text::read_file((out / "validation.json").string()));
  EXPECT_TRUE(report["findings"].empty());
}

TEST(Cli, FullPipeline) {
  const auto out = scratch("full");
  const std::vector<std::string> base{"--config", kConfig, "--out", out.string(), "--jobs", "2"};
  auto step = [&](std::vector<std::string> args) {
    std::vector<std::string> full = base;
    full.insert(full.end(), args.begin(), args.end());
    const auto r = run(full);
    EXPECT_EQ(r.code, 0) << args.front() << ": " << r.err;
    return r;
  };
  step({"ingest"});
  step({"durmodel"});
  step({"reduce"});
  step({"prominence"});
  step({"emit-bench"});
  step({"stats"});
  step({"ngram"});
  for (const std::string task : {"reduction", "prominence"}) {
    step({"score", "--task", task, "--pred", pred(task, "conv"), "--pred", pred(task, "wiki")});
    step({"errwords", "--task", task, "--pred", pred(task, "conv")});
    step({"freqcurve", "--task", task, "--pred", pred(task, "wiki")});
  }
  step({"correlate"});
  step({"winners", "--input", (kFixture / "predictions" / "metrics.json").string()});

  for (const char* name : {"durmodel.json", "reduction.tsv", "prominence.tsv", "folds.json", "gold.reduction.tsv",
                           "gold.prominence.tsv", "stats.reduction.json", "surprisal.tsv", "score.reduction.json",
                           "results.prominence.txt", "correlation.json", "winners.txt",
                           "errwords.reduction.conv.json", "freqcurve.prominence.wiki.csv"})
    EXPECT_TRUE(fs::exists(out / name)) << name;

  const auto scored = json::parse(text::read_file((out / "score.reduction.json").string()));
  ASSERT_EQ(scored.size(), 2u);
  for (const auto& rep : scored) {
    EXPECT_EQ(rep["folds"].size(), 8u);
    EXPECT_GE(rep["f1"]["mean"].get<double>(), 0.0);
    EXPECT_LE(rep["f1"]["mean"].get<double>(), 1.0);
  }
  const auto stats = json::parse(text::read_file((out / "stats.reduction.json").string()));
  EXPECT_GT(stats["positive_rate"].get<double>(), 0.05);
  EXPECT_LT(stats["positive_rate"].get<double>(), 0.35);
}

TEST(Cli, SubwordPredictionsScore) {
  const auto out = scratch("subword");
  ASSERT_EQ(run({"--config", kConfig, "--out", out.string(), "reduce"}).code, 0);
  ASSERT_EQ(run({"--config", kConfig, "--out", out.string(), "emit-bench", "--task", "reduction"}).code, 0);
  const auto r = run({"--config", kConfig, "--out", out.string(), "score", "--task", "reduction", "--pred",
                      "conv=" + (kFixture / "predictions" / "reduction.conv.subword.tsv").string()});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, EmitBenchWithoutLabelsIsDataError) {
  const auto out = scratch("nolabels");
  const auto r = run({"--config", kConfig, "--out", out.string(), "emit-bench"});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, RerunIsByteIdentical) {
  const auto a = scratch("det-a");
  const auto b = scratch("det-b");
  for (const auto& dir : {a, b})
    for (const char* cmd : {"reduce", "prominence", "emit-bench", "ngram"})
      ASSERT_EQ(run({"--config", kConfig, "--out", dir.string(), "--jobs", dir == a ? "1" : "3", cmd}).code, 0) << cmd;
  const auto files = files_under(a);
  ASSERT_EQ(files, files_under(b));
  for (const auto& f : files)
    EXPECT_EQ(text::read_file((a / f).string()), text::read_file((b / f).string())) << f;
}
