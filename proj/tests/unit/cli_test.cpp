#include "commands.hpp"
#include "config.hpp"

#include "qatok/common.hpp"
#include "qatok/objective.hpp"
#include "qatok/quality.hpp"
#include "qatok/sampler.hpp"
#include "qatok/vocabulary.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace qatok::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = QATOK_FIXTURE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code = 0;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("qatok_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  Result run(const std::string& command, const fs::path& config, std::optional<std::uint64_t> seed = {},
             std::optional<fs::path> out = {}) {
    Options o{config, seed, out};
    std::ostringstream so, se;
    Result r;
    r.code = run_command(command, o, so, se);
    r.out = so.str();
    r.err = se.str();
    return r;
  }

  std::string genomics(const std::string& corpus, std::size_t merges, const std::string& extra = "") {
    return "run.domain = genomics\ninput.corpus = " + (kFixtures / corpus).string() +
           "\nvocab.merges = " + std::to_string(merges) + "\noutput.dir = " + (dir_ / "out").string() + "\n" + extra;
  }

  fs::path dir_;
};

double field(const std::string& text, const std::string& name) {
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line))
    if (line.rfind(name + " ", 0) == 0) return parse_double(line.substr(name.size() + 1));
  throw std::runtime_error("missing field " + name);
}

TEST(Config, ParsesCommentsDefaultsAndErrors) {
  const auto c = Config::parse("# header\nrun.domain = finance  \n\nvocab.merges=12 # trailing\n");
  EXPECT_EQ(c.str("run.domain"), "finance");
  EXPECT_EQ(c.count("vocab.merges"), 12u);
  EXPECT_EQ(c.str("run.mode"), "greedy");
  EXPECT_DOUBLE_EQ(c.real("stage2.eta0"), 0.5);
  EXPECT_THROW(c.str("params.alpha"), ConfigError);
  EXPECT_THROW(Config::parse("nope.key = 1\n"), ConfigError);
  EXPECT_THROW(Config::parse("run.seed = 1\nrun.seed = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("run.seed 1\n"), ConfigError);
  EXPECT_THROW(Config::parse("vocab.merges = -3\n").count("vocab.merges"), ConfigError);
  EXPECT_THROW(Config::parse("stage2.batch_norm_rewards = maybe\n").flag("stage2.batch_norm_rewards"), ConfigError);
  try {
    Config::parse("run.domain = genomics\nbogus = 1\n", "cfg.txt");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.txt:2"), std::string::npos);
  }
  EXPECT_NE(config_help().find("stage1.k_pq"), std::string::npos);
}

TEST_F(Cli, GreedyOnRepeatFixtureLearnsSingleMerge) {
  const auto cfg = write_config("c.txt", genomics("acacac.fastq", 1));
  const auto r = run("train", cfg);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto v = parse_vocabulary(slurp(dir_ / "out" / "vocab.txt"));
  ASSERT_EQ(v.merges.size(), 1u);
  EXPECT_EQ(v.merges[0].left, 0u);
  EXPECT_EQ(v.merges[0].right, 1u);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "params.txt"));
  const auto index = slurp(dir_ / "out" / "artifacts.txt");
  EXPECT_NE(index.find(crc32_hex(slurp(dir_ / "out" / "vocab.txt")) + "  vocab.txt"), std::string::npos);
}

TEST_F(Cli, InvalidConfigAndMissingInputExitTwo) {
  EXPECT_EQ(run("train", write_config("a.txt", genomics("does_not_exist.fastq", 1))).code, kExitInvalid);
  EXPECT_EQ(run("train", dir_ / "no_config.txt").code, kExitInvalid);
  EXPECT_EQ(run("train", write_config("b.txt", "run.domain = genomics\nvocab.merges = 1\n")).code, kExitInvalid);
  EXPECT_EQ(run("train", write_config("c.txt", genomics("acacac.fastq", 1, "run.mode = sideways\n"))).code,
            kExitInvalid);
  EXPECT_EQ(run("train", write_config("d.txt", genomics("acacac.fastq", 1, "mystery.key = 1\n"))).code,
            kExitInvalid);
  EXPECT_EQ(run("sample", write_config("e.txt", genomics("reads.fastq", 1, "sample.ratio = 2\n"))).code,
            kExitInvalid);
  EXPECT_EQ(run("juggle", write_config("f.txt", genomics("reads.fastq", 1))).code, kExitInvalid);
}

TEST_F(Cli, MalformedInputIsAnError) {
  std::ofstream(dir_ / "bad.fastq") << "@r0\nAC\n+\nI\n";
  const auto cfg = write_config("c.txt", "run.domain = genomics\nvocab.merges = 1\ninput.corpus = bad.fastq\n");
  const auto r = run("train", cfg);
  EXPECT_NE(r.code, kExitOk);
  EXPECT_NE(r.err.find("record 0"), std::string::npos);
}

TEST_F(Cli, EncodeDecodeRoundTripsFastqSequences) {
  const auto cfg = write_config("c.txt", genomics("reads.fastq", 20, "input.tokens = " + (dir_ / "tokens.txt").string() + "\n"));
  ASSERT_EQ(run("train", cfg).code, kExitOk);
  ASSERT_EQ(run("encode", cfg, {}, dir_ / "tokens.txt").code, kExitOk);
  const auto dec = run("decode", cfg);
  ASSERT_EQ(dec.code, kExitOk) << dec.err;

  std::istringstream fq(slurp(kFixtures / "reads.fastq"));
  std::istringstream got(dec.out);
  std::string header, seq, plus, qual, line;
  std::size_t n = 0;
  while (std::getline(fq, header) && std::getline(fq, seq) && std::getline(fq, plus) && std::getline(fq, qual)) {
    ASSERT_TRUE(std::getline(got, line));
    EXPECT_EQ(line, header.substr(1) + "\t" + seq);
    ++n;
  }
  EXPECT_EQ(n, 16u);
  EXPECT_FALSE(std::getline(got, line));

  // Encoding uses fewer tokens than bases once merges exist.
  const auto tokens = slurp(dir_ / "tokens.txt");
  EXPECT_LT(std::count(tokens.begin(), tokens.end(), ' '), 16 * 47);
}

TEST_F(Cli, InspectZeroMergeVocabularyReportsAlphabet) {
  const auto cfg = write_config("c.txt", genomics("reads.fastq", 0));
  ASSERT_EQ(run("train", cfg).code, kExitOk);
  const auto r = run("inspect", cfg);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // Genomics alphabet is A, C, G, T, N.
  EXPECT_EQ(field(r.out, "size"), 5.0);
  EXPECT_EQ(field(r.out, "base_size"), 5.0);
  EXPECT_EQ(field(r.out, "merges"), 0.0);
  EXPECT_NE(r.out.find("theta_adapt"), std::string::npos);
}

TEST_F(Cli, EvalMatchesHandObjective) {
  const auto cfg = write_config("c.txt", genomics("aac.fastq", 0, "params.beta_pos = 0\n"));
  ASSERT_EQ(run("train", cfg).code, kExitOk);
  const auto r = run("eval", cfg);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // N = 3, f_A = 2, f_C = 1; every base has Phred 40. Token quality carries
  // eps once from geometric pooling and g adds it again.
  const double ll = 2 * std::log(2.0 / 3) + std::log(1.0 / 3);
  const double q = phred_to_quality(40) + 2e-8;
  EXPECT_NEAR(field(r.out, "log_likelihood"), ll, 1e-12);
  EXPECT_NEAR(field(r.out, "quality"), q, 1e-12);
  EXPECT_NEAR(field(r.out, "objective"), ll + q, 1e-12);
}

TEST_F(Cli, EvalOfGreedyVocabularyIsBoundedByExhaustiveOracle) {
  const auto cfg = write_config("c.txt", genomics("acacac.fastq", 2, "params.beta_pos = 0\nparams.alpha = 1\n"));
  ASSERT_EQ(run("train", cfg).code, kExitOk);
  const auto r = run("eval", cfg);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  AtomicSequence s;
  for (int i = 0; i < 6; ++i) {
    s.elements.push_back(static_cast<SymbolId>(i % 2));
    s.qualities.push_back(phred_to_quality(40));
  }
  const std::vector<AtomicSequence> corpus{s};
  const auto best = exhaustive_optimum(corpus, 5, Domain::genomics, ObjectiveWeights{}, 2);
  const auto vocab = parse_vocabulary(slurp(dir_ / "out" / "vocab.txt"));
  EXPECT_NEAR(field(r.out, "objective"), evaluate_objective(vocab, corpus, ObjectiveWeights{}), 1e-12);
  EXPECT_LE(field(r.out, "objective"), best.best_value + 1e-12);
}

TEST_F(Cli, SampleIsDeterministicAndSeedOverrides) {
  const auto cfg = write_config("c.txt", genomics("reads.fastq", 1, "sample.ratio = 0.25\nrun.seed = 5\n"));
  const auto a = run("sample", cfg);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(run("sample", cfg).out, a.out);
  EXPECT_EQ(run("sample", cfg, 5).out, a.out);
  const auto other = run("sample", cfg, 6);
  EXPECT_NE(other.out, a.out);
  EXPECT_NE(other.out.find("seed=6"), std::string::npos);
  const auto m = parse_manifest(a.out);
  EXPECT_EQ(m.ids.size(), 4u);
  EXPECT_EQ(m.population, 16u);
}

TEST_F(Cli, Stage2TrainingIsDeterministic) {
  const std::string extra = "run.mode = greedy+stage2\nstage2.iterations = 3\nstage2.max_windows = 8\n";
  const auto cfg = write_config("c.txt", genomics("reads.fastq", 10, extra));
  ASSERT_EQ(run("train", cfg, 3).code, kExitOk);
  const auto first = slurp(dir_ / "out" / "artifacts.txt");
  ASSERT_EQ(run("train", cfg, 3).code, kExitOk);
  EXPECT_EQ(slurp(dir_ / "out" / "artifacts.txt"), first);
  EXPECT_NE(first.find("loss_trace.csv"), std::string::npos);
}

TEST_F(Cli, FullModeWritesPolicyArtifacts) {
  const std::string extra =
      "run.mode = full\nstage1.episodes = 2\nstage1.horizon = 3\nstage1.k_pq = 5\nstage2.iterations = 2\n"
      "stage2.max_windows = 4\n";
  const auto cfg = write_config("c.txt", genomics("reads.fastq", 5, extra));
  const auto r = run("train", cfg, {}, dir_ / "full");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"vocab.txt", "params.txt", "policy.bin", "value.bin", "ppo_log.csv", "loss_trace.csv"})
    EXPECT_TRUE(fs::exists(dir_ / "full" / f)) << f;
}

TEST_F(Cli, FinanceTrainEncodeDecode) {
  const auto cfg = write_config(
      "c.txt", "run.domain = finance\ninput.corpus = " + (kFixtures / "lob.csv").string() +
                   "\nvocab.merges = 6\noutput.dir = out\ninput.tokens = tok.txt\n");
  ASSERT_EQ(run("train", cfg).code, kExitOk);
  ASSERT_EQ(run("encode", cfg, {}, dir_ / "tok.txt").code, kExitOk);
  const auto dec = run("decode", cfg);
  ASSERT_EQ(dec.code, kExitOk) << dec.err;
  EXPECT_EQ(dec.out.rfind("lob\t", 0), 0u);
  std::istringstream fields(dec.out.substr(4));
  std::size_t n = 0;
  for (long v; fields >> v; ++n) EXPECT_LT(v, 7500);
  EXPECT_EQ(n, 40u);  // 200 events in groups of five
}

TEST_F(Cli, DivergenceExitsThree) {
  const std::string extra = "run.mode = greedy+stage2\nstage2.iterations = 5\nstage2.eta0 = 1e308\nstage2.max_windows = 8\n";
  const auto cfg = write_config("c.txt", genomics("reads.fastq", 3, extra));
  const auto r = run("train", cfg);
  EXPECT_EQ(r.code, kExitDiverged) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "params.last_finite.txt"));
}

#ifdef QATOK_CLI_PATH
TEST_F(Cli, BinaryHonoursExitCodesAndHelp) {
  const std::string bin = QATOK_CLI_PATH;
  const auto log = (dir_ / "log.txt").string();
  const auto code = [&](const std::string& args) {
    const int status = std::system((bin + " " + args + " >" + log + " 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(code("--help"), 0);
  EXPECT_NE(slurp(log).find("QATOK_THREADS"), std::string::npos);
  EXPECT_EQ(code("train"), kExitInvalid);
  const auto missing = write_config("m.txt", genomics("missing.fastq", 1));
  EXPECT_EQ(code("train --config " + missing.string()), kExitInvalid);
  const auto ok = write_config("ok.txt", genomics("acacac.fastq", 1));
  EXPECT_EQ(code("train --config " + ok.string() + " --seed 4"), kExitOk);
  EXPECT_EQ(code("inspect --config " + ok.string() + " --out " + (dir_ / "inspect.txt").string()), kExitOk);
  EXPECT_NE(slurp(dir_ / "inspect.txt").find("size 6"), std::string::npos);
}
#endif

}  // namespace
}  // namespace qatok::cli
