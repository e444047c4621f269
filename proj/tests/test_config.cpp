#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hmkl/config.hpp"

using namespace hmkl;

TEST_CASE("config file parsing: sections, comments, lists") {
  const ConfigFile cfg = ConfigFile::parse_text(
      "# a comment\n"
      "top = 1\n"
      "[data]\n"
      "views = a.csv, b.csv\n"
      "labels = labels.csv\n"
      "; another comment\n"
      "[svm]\n"
      "C_grid = 0.1, 1, 10\n"
      "tol = 1e-4\n",
      "test");
  CHECK(cfg.get("top") == "1");
  CHECK(cfg.require("data.labels") == "labels.csv");
  CHECK(cfg.get_list("data.views") ==
        std::vector<std::string>{"a.csv", "b.csv"});
  CHECK(cfg.get_double_list("svm.C_grid", {}) == std::vector<double>{0.1, 1, 10});
  CHECK(cfg.get_double("svm.tol", 0.0) == 1e-4);
  CHECK(cfg.get("absent", "dflt") == "dflt");
  CHECK_THROWS_AS(cfg.require("absent"), ConfigError);
}

TEST_CASE("malformed config lines are rejected with their location") {
  CHECK_THROWS_WITH_AS(ConfigFile::parse_text("[broken\n", "f.ini"),
                       doctest::Contains("f.ini:1"), ConfigError);
  CHECK_THROWS_WITH_AS(ConfigFile::parse_text("just words\n", "f.ini"),
                       doctest::Contains("key = value"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_text("= 3\n", "f.ini"), ConfigError);
  CHECK_THROWS_WITH_AS(
      ConfigFile::parse_text("[a]\nx = nope\n", "f.ini").get_double("a.x", 0.0),
      doctest::Contains("cannot parse"), ConfigError);
}

TEST_CASE("run config applies defaults and validates ranges") {
  const RunConfig cfg = RunConfig::from_file(ConfigFile::parse_text("", "empty"));
  CHECK(cfg.patch_size == 16);
  CHECK(cfg.codebook_size == 1024);
  CHECK(cfg.p == 2.0);
  CHECK(cfg.cv_folds == 5);
  CHECK(cfg.rbf_gammas == std::vector<double>{10.0, 1.0, 0.1, 0.01});
  CHECK(cfg.chi2_gammas == std::vector<double>{3.0, 2.0, 1.0, 0.5});
  CHECK(cfg.C_grid == std::vector<double>{0.1, 1, 2, 3, 4, 5});

  CHECK_THROWS_AS(RunConfig::from_file(
                      ConfigFile::parse_text("[mkl]\np = 0.5\n", "t")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_file(ConfigFile::parse_text(
                      "[benchmark]\nfractions = 1.5\n", "t")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_file(ConfigFile::parse_text(
                      "[benchmark]\ncv_folds = 1\n", "t")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_file(ConfigFile::parse_text(
                      "[kernels]\nnormalization = weird\n", "t")),
                  ConfigError);
}

TEST_CASE("run config picks up every documented key") {
  const RunConfig cfg = RunConfig::from_file(ConfigFile::parse_text(
      "[data]\nviews = v.csv\nlabels = l.csv\nimage_root = imgs\n"
      "[features]\npatch_size = 8\nstep = 4\ncodebook_size = 16\ncodebook_seed = 7\n"
      "[kernels]\nrbf_gammas = 1\nchi2_gammas = 2\nnormalization = deviation\n"
      "[svm]\nC_grid = 3\ntol = 1e-2\n"
      "[mkl]\np = 1.25\n"
      "[benchmark]\nmethods = mkl_lp\nfractions = 0.3\nrepetitions = 4\n"
      "base_seed = 99\ncv_folds = 3\n"
      "[output]\ndir = results\n",
      "t"));
  CHECK(cfg.view_paths == std::vector<std::string>{"v.csv"});
  CHECK(cfg.image_root == "imgs");
  CHECK(cfg.patch_size == 8);
  CHECK(cfg.step == 4);
  CHECK(cfg.codebook_size == 16);
  CHECK(cfg.codebook_seed == 7);
  CHECK(cfg.rbf_gammas == std::vector<double>{1.0});
  CHECK(cfg.norm_mode == StdNormMode::deviation);
  CHECK(cfg.C_grid == std::vector<double>{3.0});
  CHECK(cfg.svm_tol == 1e-2);
  CHECK(cfg.p == 1.25);
  CHECK(cfg.methods == std::vector<Method>{Method::mkl_lp});
  CHECK(cfg.fractions == std::vector<double>{0.3});
  CHECK(cfg.repetitions == 4);
  CHECK(cfg.base_seed == 99);
  CHECK(cfg.cv_folds == 3);
  CHECK(cfg.out_dir == "results");
  CHECK(cfg.config_hash != 0);
  CHECK_THROWS_AS(cfg.validate_for_tables(), ConfigError);  // files absent
}

TEST_CASE("config hash depends on the raw text") {
  const auto a = ConfigFile::parse_text("x = 1\n", "t");
  const auto b = ConfigFile::parse_text("x = 2\n", "t");
  CHECK(a.hash() != b.hash());
  CHECK(a.hash() == ConfigFile::parse_text("x = 1\n", "t").hash());
}
