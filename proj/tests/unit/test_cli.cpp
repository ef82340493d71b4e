#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "common/scenes.hpp"
#include "gsm/io.hpp"

namespace fs = std::filesystem;

namespace {

const char* kCli = GSM_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

// Runs the CLI with stdout captured to a file; stderr is left alone.
RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd =
      std::string(kCli) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  result.stdout_text = ss.str();
  return result;
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "gsm_cli";
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fit, field, prob, and metrics run end to end") {
  const fs::path dir = work_dir();
  const fs::path cloud = dir / "wall.xyz";
  gsm::save_xyz(scenes::rough_wall_cloud(6000, 11), cloud.string());

  const fs::path model = dir / "wall.gsm";
  RunResult fit = run_cli("fit --cloud " + q(cloud) + " --components 8 --seed 11 --out " + q(model), dir);
  CHECK(fit.exit_code == 0);
  CHECK(fit.stdout_text.find("components=8") != std::string::npos);
  CHECK(fit.stdout_text.find("loglik=") != std::string::npos);
  CHECK(fs::exists(model));

  // deterministic: a second fit with the same seed writes identical bytes
  const fs::path model2 = dir / "wall2.gsm";
  run_cli("fit --cloud " + q(cloud) + " --components 8 --seed 11 --out " + q(model2), dir);
  std::ifstream a(model), b(model2);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);

  const std::string slice = "0,1.0,1.0,0,1,0,0,0,1,1.6,1.2,24,18";
  const fs::path pred = dir / "pred";
  RunResult field = run_cli("field --model " + q(model) +
                                " --slice \"" + slice + "\" --out " + q(pred),
                            dir);
  CHECK(field.exit_code == 0);
  CHECK(fs::exists(pred.string() + ".dist.csv"));
  CHECK(fs::exists(pred.string() + ".grad.csv"));
  CHECK(fs::exists(pred.string() + ".dist.ppm"));

  // pruning on/off produces identical distance maps
  const fs::path nopr = dir / "nopr";
  run_cli("field --model " + q(model) + " --slice \"" + slice +
              "\" --prune off --out " + q(nopr),
          dir);
  std::ifstream da(pred.string() + ".dist.csv"), db(nopr.string() + ".dist.csv");
  const std::string ca((std::istreambuf_iterator<char>(da)), {});
  const std::string cb((std::istreambuf_iterator<char>(db)), {});
  CHECK(ca == cb);

  RunResult metrics = run_cli(
      "metrics --pred " + q(pred) + " --truth " + q(pred), dir);
  CHECK(metrics.exit_code == 0);
  CHECK(metrics.stdout_text.find("rmse,ces,cells") != std::string::npos);
  CHECK(metrics.stdout_text.find("\n0,0,") != std::string::npos);

  RunResult prob = run_cli("prob --model " + q(model) + " --slice \"" + slice +
                               "\" --sigma 0.01 --K 9 --blend on --out " +
                               q(dir / "prob"),
                           dir);
  CHECK(prob.exit_code == 0);
  CHECK(fs::exists(dir / "prob.prob.csv"));
  CHECK(fs::exists(dir / "prob.prob.ppm"));
  CHECK(fs::exists(dir / "prob.iso10.csv"));
}

TEST_CASE("exit codes distinguish failure classes") {
  const fs::path dir = work_dir();

  // unreadable cloud -> parse class
  RunResult fit = run_cli(
      "fit --cloud " + q(dir / "missing.xyz") + " --out " + q(dir / "m.gsm"),
      dir);
  CHECK(fit.exit_code == 2);

  // empty cloud file -> parse class
  const fs::path empty = dir / "empty.xyz";
  std::ofstream(empty.string()) << "# nothing here\n";
  fit = run_cli(
      "fit --cloud " + q(empty) + " --out " + q(dir / "m.gsm"), dir);
  CHECK(fit.exit_code == 2);

  // model declaring zero components -> empty/invalid model class
  const fs::path zero = dir / "zero.gsm";
  std::ofstream(zero.string()) << "GSM 3 0 3\n";
  RunResult field = run_cli("field --model " + q(zero) + " --out " +
                                q(dir / "f"),
                            dir);
  CHECK(field.exit_code == 4);

  // malformed model record -> parse class
  const fs::path bad = dir / "bad.gsm";
  std::ofstream(bad.string()) << "GSM 3 1 3\n0.5 0 0 0\n";
  field = run_cli("field --model " + q(bad) + " --out " + q(dir / "f"), dir);
  CHECK(field.exit_code == 2);

  // unknown flag -> parse class
  RunResult usage = run_cli("field --frobnicate", dir);
  CHECK(usage.exit_code == 2);

  // mismatched metrics shapes -> parse class
  const fs::path cloud = dir / "wall.xyz";
  gsm::save_xyz(scenes::wall_cloud(2000, 0.01, 5), cloud.string());
  const fs::path model = dir / "wall.gsm";
  run_cli("fit --cloud " + q(cloud) + " --components 4 --seed 5 --out " + q(model), dir);
  run_cli("field --model " + q(model) +
              " --slice \"0,0.8,1,0,1,0,0,0,1,1,1,8,8\" --out " + q(dir / "a"),
          dir);
  run_cli("field --model " + q(model) +
              " --slice \"0,0.8,1,0,1,0,0,0,1,1,1,6,8\" --out " + q(dir / "b"),
          dir);
  RunResult metrics = run_cli(
      "metrics --pred " + q(dir / "a") + " --truth " + q(dir / "b"), dir);
  CHECK(metrics.exit_code == 2);
}

TEST_CASE("bench emits one csv row") {
  const fs::path dir = work_dir();
  RunResult bench =
      run_cli("bench --pairs 50 --seed 3 --device-label testbox", dir);
  CHECK(bench.exit_code == 0);
  std::istringstream ss(bench.stdout_text);
  std::string header, row, extra;
  std::getline(ss, header);
  std::getline(ss, row);
  CHECK(header.find("device,init_us") == 0);
  CHECK(row.find("testbox,") == 0);
  CHECK(!std::getline(ss, extra));

  RunResult one = run_cli("bench --pairs 1 --seed 3", dir);
  CHECK(one.exit_code == 0);
  CHECK(one.stdout_text.find("local,") != std::string::npos);
}

TEST_CASE("help documents the defaults") {
  const fs::path dir = work_dir();
  RunResult help = run_cli("prob --help", dir);
  CHECK(help.exit_code == 0);
  CHECK(help.stdout_text.find("0.15 0.15 0.07 45 0 0") != std::string::npos);
  CHECK(help.stdout_text.find("GSM_FIELD_SIGMA") != std::string::npos);
  CHECK(help.stdout_text.find("GSM_FIELD_K") != std::string::npos);
}

TEST_CASE("environment variables fill in unset flags") {
  const fs::path dir = work_dir();
  const fs::path cloud = dir / "envwall.xyz";
  gsm::save_xyz(scenes::wall_cloud(2000, 0.01, 9), cloud.string());
  const fs::path model = dir / "envwall.gsm";
  run_cli("fit --cloud " + q(cloud) + " --components 4 --seed 9 --out " + q(model), dir);

  const std::string slice = "0,0.8,1.0,0,1,0,0,0,1,1.0,1.0,6,6";
  const fs::path env_out = dir / "envfield";
  const std::string cmd = "GSM_FIELD_SLICE='" + slice + "' " +
                          std::string(kCli) + " field --model " + q(model) +
                          " --out " + q(env_out) + " > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  // the env slice (6 x 6) was honored
  std::ifstream in(env_out.string() + ".dist.csv");
  std::string line;
  int rows = 0;
  std::getline(in, line);  // header
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 36);
}

}  // TEST_SUITE
