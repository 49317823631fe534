#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_support.hpp"
#include "kgin/error.hpp"
#include "kgin/sampling/mask.hpp"

using namespace kgin;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "kgin_test_cli";

fs::path write_text(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  std::ofstream(kWork / name, std::ios::trunc) << text;
  return kWork / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct RunResult {
  int code;
  std::string err;
};

RunResult run(const std::string& args) {
  fs::create_directories(kWork);
  const auto err = kWork / "stderr.txt";
  const std::string cmd = std::string(KGIN_CLI) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

}  // namespace

TEST(ConfigFile, ParsesKeyValueLines) {
  const auto p = write_text("a.cfg", "# comment\n\n steps = 20 \nmanifest = \"data dir/manifest.txt\"\nmax-lr=1e-3\n");
  const auto e = cli::read_config_file(p);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].key, "steps");
  EXPECT_EQ(e[0].value, "20");
  EXPECT_EQ(e[0].line, 3u);
  EXPECT_EQ(e[1].value, "data dir/manifest.txt");
  EXPECT_EQ(e[2].key, "max-lr");
  EXPECT_EQ(e[2].value, "1e-3");
}

TEST(ConfigFile, RejectsBadInput) {
  EXPECT_THROW(cli::read_config_file(write_text("b.cfg", "steps 20\n")), ConfigError);
  EXPECT_THROW(cli::read_config_file(write_text("b.cfg", " = 3\n")), ConfigError);
  EXPECT_THROW(cli::read_config_file(write_text("b.cfg", "steps = 1\nsteps = 2\n")), ConfigError);
  EXPECT_THROW(cli::read_config_file(kWork / "absent.cfg"), IoError);
}

TEST(ConfigFile, AppliesAsDefaultsBelowFlags) {
  CLI::App app;
  int steps = 0;
  std::string name;
  app.add_option("--steps", steps);
  app.add_option("--name", name)->required();
  cli::apply_config(app, {{"steps", "7", 1}, {"name", "x", 2}});
  const char* none[] = {"prog"};
  app.parse(1, none);
  EXPECT_EQ(steps, 7);
  EXPECT_EQ(name, "x");

  CLI::App app2;
  app2.add_option("--steps", steps);
  cli::apply_config(app2, {{"steps", "7", 1}});
  const char* flags[] = {"prog", "--steps", "9"};
  app2.parse(3, flags);
  EXPECT_EQ(steps, 9);
}

TEST(ConfigFile, UnknownKeysHaveTheirOwnKind) {
  CLI::App app;
  int steps = 0;
  app.add_option("--steps", steps);
  try {
    cli::apply_config(app, {{"stpes", "7", 4}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "config_key");
    EXPECT_NE(std::string(e.what()).find("stpes"), std::string::npos);
  }
  EXPECT_THROW(cli::apply_config(app, {{"steps", "many", 1}}), ConfigError);
}

TEST(ConfigFile, FindsConfigArgument) {
  const char* a[] = {"kgin", "train", "--config", "x.cfg"};
  EXPECT_EQ(cli::find_config_arg(4, a), "x.cfg");
  const char* b[] = {"kgin", "train", "--config=y.cfg"};
  EXPECT_EQ(cli::find_config_arg(3, b), "y.cfg");
  const char* c[] = {"kgin", "train"};
  EXPECT_FALSE(cli::find_config_arg(2, c).has_value());
}

TEST(ResolvedConfig, WritesReadableLines) {
  cli::ResolvedConfig r;
  r.set("steps", std::uint64_t(200));
  r.set("tiny", true);
  r.set("max-lr", 1e-4);
  r.set("manifest", std::string("a/b.txt"));
  EXPECT_EQ(r.str(), "steps = 200\ntiny = true\nmax-lr = 1e-04\nmanifest = a/b.txt\n");
  r.write(kWork / "r.cfg");
  const auto back = cli::read_config_file(kWork / "r.cfg");
  ASSERT_EQ(back.size(), 4u);
  EXPECT_EQ(std::stod(back[2].value), 1e-4);
}

TEST(Arguments, Dims) {
  const auto d = cli::parse_dims("32,16,8");
  EXPECT_EQ(d.x, 32u);
  EXPECT_EQ(d.y, 16u);
  EXPECT_EQ(d.t, 8u);
  EXPECT_EQ(cli::format_dims(d), "32,16,8");
  EXPECT_THROW(cli::parse_dims("32,16"), ConfigError);
  EXPECT_THROW(cli::parse_dims("32,0,8"), ConfigError);
  EXPECT_THROW(cli::parse_dims("a,b,c"), ConfigError);
}

TEST(Arguments, RList) {
  EXPECT_EQ(cli::parse_r_list("4,6,8"), (std::vector<double>{4, 6, 8}));
  EXPECT_EQ(cli::parse_r_list("2.5"), (std::vector<double>{2.5}));
  EXPECT_THROW(cli::parse_r_list("4,1"), ConfigError);
  EXPECT_THROW(cli::parse_r_list(""), ConfigError);
  EXPECT_THROW(cli::parse_r_list("4,,6"), ConfigError);
}

TEST(ExitCodes, FixedPerKind) {
  EXPECT_EQ(cli::exit_code_for("usage"), 2);
  EXPECT_EQ(cli::exit_code_for("config"), 2);
  EXPECT_EQ(cli::exit_code_for("spec"), 2);
  EXPECT_EQ(cli::exit_code_for("range"), 2);
  EXPECT_EQ(cli::exit_code_for("config_key"), 3);
  EXPECT_EQ(cli::exit_code_for("io"), 4);
  EXPECT_EQ(cli::exit_code_for("dimension"), 5);
  EXPECT_EQ(cli::exit_code_for("partition"), 5);
  EXPECT_EQ(cli::exit_code_for("format"), 6);
  EXPECT_EQ(cli::exit_code_for("checkpoint"), 6);
  EXPECT_EQ(cli::exit_code_for("training"), 7);
  EXPECT_EQ(cli::exit_code_for("numeric"), 7);
  EXPECT_EQ(cli::exit_code_for("degenerate_input"), 8);
  EXPECT_EQ(cli::exit_code_for("unsupported_size"), 8);
  EXPECT_EQ(cli::exit_code_for("internal"), 1);
  EXPECT_EQ(cli::error_line("io", 4, "no \"file\"\nhere"), "kgin: error kind=io exit=4 msg=\"no \\\"file\\\"\\nhere\"");
}

class CliRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    const auto r = run("dataset --n-train 2 --n-test 2 --dims 16,16,4 --seed 3 --out " + (kWork / "data").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = run("train --manifest " + (kWork / "data/manifest.txt").string() +
                       " --steps 3 --embed-dim 16 --heads 2 --layers 1 --out " + (kWork / "train").string());
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static std::string manifest() { return (kWork / "data/manifest.txt").string(); }
  static std::string ckpt() { return (kWork / "train/model.ckpt").string(); }
};

TEST_F(CliRun, TrainWritesArtifacts) {
  EXPECT_TRUE(fs::exists(kWork / "train/model.ckpt"));
  EXPECT_TRUE(fs::exists(kWork / "train/loss.csv"));
  const auto cfg = cli::read_config_file(kWork / "train/resolved.cfg");
  bool has_steps = false;
  for (const auto& e : cfg) has_steps = has_steps || (e.key == "steps" && e.value == "3");
  EXPECT_TRUE(has_steps);
}

TEST_F(CliRun, EvalAndInfer) {
  const auto e = run("eval --checkpoint " + ckpt() + " --manifest " + manifest() + " --R 4,8 --out " + (kWork / "eval").string());
  ASSERT_EQ(e.code, 0) << e.err;
  std::ifstream is(kWork / "eval/summary.csv");
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_TRUE(fs::exists(kWork / "eval/report.csv"));
  EXPECT_TRUE(fs::exists(kWork / "eval/report_zero_filled.csv"));

  const auto input = kWork / "data" / "test_000.k.kvol";
  ASSERT_TRUE(fs::exists(input));
  const auto i = run("infer --checkpoint " + ckpt() + " --input " + input.string() + " --R 4 --out " + (kWork / "infer").string());
  ASSERT_EQ(i.code, 0) << i.err;
  EXPECT_TRUE(fs::exists(kWork / "infer/recon.img.kvol"));
  EXPECT_TRUE(fs::exists(kWork / "infer/frames/recon_t003.pgm"));
  EXPECT_EQ(sampling::read_mask(kWork / "infer/mask.kmask").t_dim(), 4u);
}

TEST_F(CliRun, ErrorsMapToExitCodes) {
  auto expect = [](const std::string& args, int code, const std::string& kind) {
    const auto r = run(args);
    EXPECT_EQ(r.code, code) << args << "\n" << r.err;
    EXPECT_NE(r.err.find("kind=" + kind), std::string::npos) << r.err;
  };
  const auto out = " --out " + (kWork / "err").string();
  expect("", 2, "usage");
  expect("train --manifest " + manifest() + " --steps 0" + out, 2, "config");
  expect("train --manifest " + manifest() + " --steps -1" + out, 2, "usage");
  expect("train --config " + write_text("bad.cfg", "stpes = 3\n").string() + " --manifest " + manifest() + out, 3,
         "config_key");
  expect("train --manifest " + (kWork / "nope.txt").string() + out, 4, "io");
  expect("train --manifest " + manifest() + " --dims 32,32,8 --steps 1" + out, 5, "dimension");

  const auto bytes = slurp(kWork / "train/model.ckpt");
  std::ofstream(kWork / "cut.ckpt", std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() / 2);
  expect("eval --checkpoint " + (kWork / "cut.ckpt").string() + " --manifest " + manifest() + out, 6, "checkpoint");
}

TEST_F(CliRun, ConfigFileDrivesSubcommand) {
  const auto cfg = write_text("mask.cfg", "dims = 8,16,4\nR = 4\nseed = 11\n");
  const auto r = run("mask --config " + cfg.string() + " --out " + (kWork / "mask").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = sampling::read_mask(kWork / "mask/mask.kmask");
  EXPECT_EQ(m.y_dim(), 16u);
  EXPECT_EQ(m.seed(), 11u);
  EXPECT_EQ(m.lines_in_frame(0), 4u);
}
