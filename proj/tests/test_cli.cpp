#include <gtest/gtest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("failslow_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result cli(const std::string& args) {
  const auto err = fs::temp_directory_path() / ("failslow_cli_err_" + std::to_string(::getpid()));
  const std::string cmd = std::string(FAILSLOW_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

int line_count(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, GenIsDeterministic) {
  const auto a = scratch("gen_a"), b = scratch("gen_b");
  ASSERT_EQ(cli("gen --hosts 2 --days 3 --seed 7 --out " + a.string()).code, 0);
  ASSERT_EQ(cli("gen --hosts 2 --days 3 --seed 7 --out " + b.string()).code, 0);
  const auto ta = tree(a), tb = tree(b);
  EXPECT_EQ(ta, tb);
  for (const char* f : {"trace.csv", "truth.csv", "faults.csv", "run_config.txt", "VERSION"}) {
    EXPECT_TRUE(ta.contains(f)) << f;
  }
  EXPECT_EQ(ta.at("VERSION"), "failslow 0.1.0\n");
  // 24 disks x 3 days x 720 samples plus the header.
  EXPECT_EQ(line_count(ta.at("trace.csv")), 24 * 3 * 720 + 1);
  EXPECT_NE(ta.at("run_config.txt").find("seed = 7"), std::string::npos);

  const auto c = scratch("gen_c");
  ASSERT_EQ(cli("gen --hosts 2 --days 3 --seed 8 --out " + c.string()).code, 0);
  EXPECT_NE(tree(c).at("trace.csv"), ta.at("trace.csv"));
}

TEST(Cli, ErrorsAreOneMachineReadableLine) {
  const auto d = scratch("err");
  ASSERT_EQ(cli("gen --hosts 2 --days 3 --seed 1 --out " + d.string()).code, 0);
  auto r = cli("detect --model unknown --model-file " + (d / "none.json").string() + " --trace " +
               (d / "trace.csv").string() + " --out " + (d / "det").string());
  EXPECT_NE(r.code, 0);

  r = cli("train --model unknown --trace " + (d / "trace.csv").string() + " --out " + (d / "t").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(line_count(r.err), 1);
  EXPECT_EQ(r.err.rfind("failslow: error kind=config code=1 message=\"", 0), 0u) << r.err;

  r = cli("label --trace " + (d / "missing.csv").string() + " --out " + (d / "l").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("failslow: error kind=", 0), 0u) << r.err;

  EXPECT_EQ(cli("gen --hosts 0 --out " + d.string()).code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
}

TEST(Cli, StepByStepChain) {
  const auto d = scratch("chain");
  const std::string trace = (d / "gen" / "trace.csv").string();
  ASSERT_EQ(cli("gen --hosts 3 --days 4 --seed 2 --cadence 60 --out " + (d / "gen").string()).code, 0);
  ASSERT_EQ(cli("label --trace " + trace + " --out " + (d / "label").string()).code, 0);
  EXPECT_EQ(line_count(slurp(d / "label" / "labels.csv")), 36 * 4 + 1);

  ASSERT_EQ(cli("train --model iforest --split-day 2 --iforest-trees 20 --trace " + trace + " --out " +
                (d / "train").string())
                .code,
            0);
  EXPECT_TRUE(fs::exists(d / "train" / "model.json"));
  EXPECT_TRUE(fs::exists(d / "train" / "train_log.csv"));

  const std::string model = (d / "train" / "model.json").string();
  EXPECT_EQ(cli("detect --model svm --model-file " + model + " --trace " + trace + " --out " + (d / "x").string()).code, 1);
  ASSERT_EQ(cli("detect --model iforest --model-file " + model + " --trace " + trace + " --out " +
                (d / "detect").string())
                .code,
            0);
  const auto preds = slurp(d / "detect" / "predictions.csv");
  EXPECT_EQ(preds.substr(0, preds.find('\n')), "model,cluster,host,disk,date,score");
  EXPECT_EQ(line_count(preds), 36 * 2 + 1);

  ASSERT_EQ(cli("bench --predictions " + (d / "detect" / "predictions.csv").string() + " --truth " +
                (d / "gen" / "truth.csv").string() + " --out " + (d / "bench").string())
                .code,
            0);
  for (const char* metric : {"precision", "recall"}) {
    const auto csv = slurp(d / "bench" / (std::string("grid_iforest_") + metric + ".csv"));
    EXPECT_EQ(line_count(csv), 5);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "lookback\\threshold,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0");
    EXPECT_TRUE(fs::exists(d / "bench" / (std::string("grid_iforest_") + metric + ".svg")));
  }
  const auto rates = slurp(d / "bench" / "failure_rates.csv");
  EXPECT_EQ(rates.rfind("model,rate_percent,total,failures\niforest,", 0), 0u) << rates;
  EXPECT_TRUE(fs::exists(d / "bench" / "run_config.txt"));

  ASSERT_EQ(cli("report --bench " + (d / "bench").string() + " --out " + (d / "report").string()).code, 0);
  EXPECT_EQ(line_count(slurp(d / "report" / "summary.csv")), 2);
}

TEST(Cli, ConfigFileWithFlagOverrides) {
  const auto d = scratch("config");
  {
    std::ofstream cfg(d / "run.cfg");
    cfg << "# small run\nhosts = 3\ndays = 3\nseed = 11\ncadence = 60\n\nlstm-hidden = 4\n";
  }
  ASSERT_EQ(cli("gen --config " + (d / "run.cfg").string() + " --hosts 2 --out " + (d / "g").string()).code, 0);
  const auto rc = slurp(d / "g" / "run_config.txt");
  EXPECT_NE(rc.find("hosts = 2"), std::string::npos) << rc;
  EXPECT_NE(rc.find("seed = 11"), std::string::npos) << rc;
  EXPECT_NE(rc.find("cadence = 60"), std::string::npos) << rc;
  EXPECT_EQ(line_count(slurp(d / "g" / "trace.csv")), 24 * 3 * 180 + 1);

  {
    std::ofstream bad(d / "bad.cfg");
    bad << "this line has no equals sign\n";
  }
  EXPECT_EQ(cli("gen --config " + (d / "bad.cfg").string() + " --out " + (d / "b").string()).code, 1);
}

TEST(Cli, RunFromConfigIsByteIdentical) {
  const auto d = scratch("run");
  {
    std::ofstream cfg(d / "run.cfg");
    cfg << "hosts = 3\ndays = 4\nseed = 5\ncadence = 60\nsplit-day = 2\n"
        << "models = iforest,svm,autoencoder,llm\niforest-trees = 20\nsvm-epochs = 30\nae-epochs = 20\n";
  }
  ASSERT_EQ(cli("run --config " + (d / "run.cfg").string() + " --jobs 1 --out " + (d / "a").string()).code, 0);
  ASSERT_EQ(cli("run --config " + (d / "run.cfg").string() + " --jobs 4 --out " + (d / "b").string()).code, 0);
  const auto ta = tree(d / "a"), tb = tree(d / "b");
  EXPECT_EQ(ta, tb);
  for (const char* f : {"trace.csv", "truth.csv", "labels.csv", "predictions.csv", "bench/failure_rates.csv",
                        "bench/grid_svm_recall.csv", "run_config.txt", "VERSION"}) {
    EXPECT_TRUE(ta.contains(f)) << f;
  }
}
