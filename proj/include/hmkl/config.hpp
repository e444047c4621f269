#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmkl/harness.hpp"

namespace hmkl {

// Configuration / validation failure: CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Line-oriented "[section]" / "key = value" configuration file.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  std::string require(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  // Comma-separated list values.
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  const std::string& text() const { return text_; }
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> value
  std::string text_;
};

// Everything the batch pipeline needs, resolved and validated.
struct RunConfig {
  // data
  std::vector<std::string> view_paths;
  std::string label_path;
  std::string image_root;
  // features
  int patch_size = 16;
  int step = 16;
  int codebook_size = 1024;
  std::uint64_t codebook_seed = 1;
  std::string codebook_path;
  // kernels / svm / mkl
  std::vector<double> rbf_gammas = kDefaultRbfGammas;
  std::vector<double> chi2_gammas = kDefaultChi2Gammas;
  StdNormMode norm_mode = StdNormMode::variance;
  std::vector<double> C_grid = {0.1, 1, 2, 3, 4, 5};
  double svm_tol = 1e-3;
  double p = 2.0;
  // benchmark
  std::vector<Method> methods = {Method::mkl_lp, Method::heuristic_mkl};
  std::vector<double> fractions = {0.1};
  int repetitions = 1;
  std::uint64_t base_seed = 0;
  int cv_folds = 5;
  // output
  std::string out_dir = "out";

  std::uint64_t config_hash = 0;

  static RunConfig from_file(const ConfigFile& file);
  // Throws ConfigError on missing paths / empty grids.
  void validate_for_tables() const;
};

}  // namespace hmkl
