#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hmkl/dataio.hpp"
#include "synthetic.hpp"

using namespace hmkl;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, std::string* output = nullptr) {
  const fs::path log = fs::temp_directory_path() / "hmkl_cli_out.txt";
  const std::string cmd =
      std::string(HMKL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct CliFixture {
  fs::path dir;
  std::string config_path;

  CliFixture() {
    dir = fs::temp_directory_path() / "hmkl_cli_fixture";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const FeatureTable table = testing::make_multiview(
        {.classes = 3, .per_class = 14, .dims = 3, .seed = 51});
    write_view_csv((dir / "v0.csv").string(), table, 0);
    write_view_csv((dir / "v1.csv").string(), table, 1);
    write_label_csv((dir / "labels.csv").string(), table);

    config_path = (dir / "run.ini").string();
    std::ofstream cfg(config_path);
    cfg << "[data]\n"
        << "views = " << (dir / "v0.csv").string() << ", "
        << (dir / "v1.csv").string() << "\n"
        << "labels = " << (dir / "labels.csv").string() << "\n"
        << "[kernels]\n"
        << "rbf_gammas = 1, 0.1\n"
        << "chi2_gammas = 1\n"
        << "[svm]\n"
        << "C_grid = 1\n"
        << "[benchmark]\n"
        << "methods = mkl_lp\n"
        << "fractions = 0.5\n"
        << "repetitions = 1\n"
        << "base_seed = 5\n"
        << "cv_folds = 3\n"
        << "[output]\n"
        << "dir = " << (dir / "out").string() << "\n";
  }

  std::string first_line(const fs::path& p) const {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
  }
};

}  // namespace

TEST_CASE("validation failures exit with code 2") {
  std::string out;
  CHECK(run_cli("train --config /does/not/exist.ini", &out) == 2);
  CHECK(out.find("cannot open config file") != std::string::npos);
  CHECK(run_cli("frobnicate", &out) == 2);  // unknown subcommand
}

TEST_CASE("p below 1 is rejected") {
  CliFixture fx;
  std::string out;
  CHECK(run_cli("train --config " + fx.config_path + " --p 0.5", &out) == 2);
  CHECK(out.find(">= 1") != std::string::npos);
}

TEST_CASE("train, predict and select round-trip through the filesystem") {
  CliFixture fx;
  std::string out;

  REQUIRE(run_cli("train --config " + fx.config_path + " --fraction 0.5", &out) == 0);
  const fs::path model = fx.dir / "out" / "model.txt";
  const fs::path split = fx.dir / "out" / "split.csv";
  REQUIRE(fs::exists(model));
  REQUIRE(fs::exists(split));
  CHECK(fx.first_line(model).rfind("# hmkl 1.0 config=", 0) == 0);
  CHECK(fx.first_line(model).find("seed=") != std::string::npos);

  REQUIRE(run_cli("predict --config " + fx.config_path + " --model " +
                      model.string() + " --split " + split.string(),
                  &out) == 0);
  const fs::path preds = fx.dir / "out" / "predictions.csv";
  REQUIRE(fs::exists(preds));
  {
    std::ifstream in(preds);
    std::string l0, l1;
    std::getline(in, l0);
    std::getline(in, l1);
    CHECK(l0.rfind("# hmkl 1.0", 0) == 0);
    CHECK(l1 == "id,predicted");
  }

  REQUIRE(run_cli("select --config " + fx.config_path + " --fraction 0.5", &out) == 0);
  const fs::path trace = fx.dir / "out" / "trace.json";
  const fs::path specs = fx.dir / "out" / "selected_specs.txt";
  REQUIRE(fs::exists(trace));
  REQUIRE(fs::exists(specs));
  CHECK(fx.first_line(trace).rfind("# hmkl 1.0", 0) == 0);

  // The selected spec list feeds back into train.
  REQUIRE(run_cli("train --config " + fx.config_path + " --fraction 0.5 --specs " +
                      specs.string(),
                  &out) == 0);
}

TEST_CASE("select --no-heuristic trains on the full bank instead") {
  CliFixture fx;
  std::string out;
  REQUIRE(run_cli("select --config " + fx.config_path +
                      " --fraction 0.5 --no-heuristic",
                  &out) == 0);
  CHECK(fs::exists(fx.dir / "out" / "model.txt"));
  CHECK(fs::exists(fx.dir / "out" / "selected_specs.txt"));
  CHECK(!fs::exists(fx.dir / "out" / "trace.json"));
  CHECK(out.find("all ") != std::string::npos);
}

TEST_CASE("benchmark writes the report pair and the seed override sticks") {
  CliFixture fx;
  std::string out;
  REQUIRE(run_cli("benchmark --config " + fx.config_path + " --seed 123", &out) == 0);
  const fs::path json = fx.dir / "out" / "report.json";
  const fs::path csv = fx.dir / "out" / "report.csv";
  REQUIRE(fs::exists(json));
  REQUIRE(fs::exists(csv));
  {
    std::ifstream in(json);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str().find("\"base_seed\": 123") != std::string::npos);
    CHECK(ss.str().find("mkl_lp") != std::string::npos);
  }
  CHECK(fx.first_line(csv).rfind("# hmkl 1.0", 0) == 0);

  // report regenerates the CSV from the stored JSON.
  REQUIRE(run_cli("report --config " + fx.config_path + " --input " + json.string(),
                  &out) == 0);
}
