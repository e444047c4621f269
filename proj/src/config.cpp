#include "hmkl/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace hmkl {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.text_ = text;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    cfg.values_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

std::string ConfigFile::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string ConfigFile::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required config key: " + key);
  return it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (...) {
    throw ConfigError("config key '" + key + "': cannot parse '" + it->second + "'");
  }
}

long ConfigFile::get_long(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (...) {
    throw ConfigError("config key '" + key + "': cannot parse '" + it->second + "'");
  }
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (...) {
    throw ConfigError("config key '" + key + "': cannot parse '" + it->second + "'");
  }
}

std::vector<std::string> ConfigFile::get_list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::istringstream iss(it->second);
  std::string item;
  while (std::getline(iss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> ConfigFile::get_double_list(const std::string& key,
                                                const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : get_list(key)) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw ConfigError("config key '" + key + "': cannot parse '" + item + "'");
    }
  }
  return out;
}

std::uint64_t ConfigFile::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text_) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig RunConfig::from_file(const ConfigFile& file) {
  RunConfig cfg;
  cfg.view_paths = file.get_list("data.views");
  cfg.label_path = file.get("data.labels");
  cfg.image_root = file.get("data.image_root");

  cfg.patch_size = static_cast<int>(file.get_long("features.patch_size", cfg.patch_size));
  cfg.step = static_cast<int>(file.get_long("features.step", cfg.step));
  cfg.codebook_size = static_cast<int>(file.get_long("features.codebook_size", cfg.codebook_size));
  cfg.codebook_seed = file.get_u64("features.codebook_seed", cfg.codebook_seed);
  cfg.codebook_path = file.get("features.codebook_path");

  cfg.rbf_gammas = file.get_double_list("kernels.rbf_gammas", cfg.rbf_gammas);
  cfg.chi2_gammas = file.get_double_list("kernels.chi2_gammas", cfg.chi2_gammas);
  const std::string norm = file.get("kernels.normalization", "variance");
  if (norm == "variance") cfg.norm_mode = StdNormMode::variance;
  else if (norm == "deviation") cfg.norm_mode = StdNormMode::deviation;
  else if (norm == "none") cfg.norm_mode = StdNormMode::none;
  else throw ConfigError("kernels.normalization must be variance, deviation or none");

  cfg.C_grid = file.get_double_list("svm.C_grid", cfg.C_grid);
  cfg.svm_tol = file.get_double("svm.tol", cfg.svm_tol);
  cfg.p = file.get_double("mkl.p", cfg.p);

  if (file.has("benchmark.methods")) {
    cfg.methods.clear();
    for (const auto& name : file.get_list("benchmark.methods"))
      cfg.methods.push_back(parse_method(name));
  }
  cfg.fractions = file.get_double_list("benchmark.fractions", cfg.fractions);
  cfg.repetitions = static_cast<int>(file.get_long("benchmark.repetitions", cfg.repetitions));
  cfg.base_seed = file.get_u64("benchmark.base_seed", cfg.base_seed);
  cfg.cv_folds = static_cast<int>(file.get_long("benchmark.cv_folds", cfg.cv_folds));

  cfg.out_dir = file.get("output.dir", cfg.out_dir);
  cfg.config_hash = file.hash();

  if (cfg.p < 1.0) throw ConfigError("mkl.p must be >= 1");
  if (cfg.C_grid.empty()) throw ConfigError("svm.C_grid must be non-empty");
  if (cfg.repetitions < 1) throw ConfigError("benchmark.repetitions must be >= 1");
  if (cfg.cv_folds < 2) throw ConfigError("benchmark.cv_folds must be >= 2");
  for (double f : cfg.fractions)
    if (!(f > 0.0 && f < 1.0))
      throw ConfigError("benchmark.fractions must lie in (0,1)");
  return cfg;
}

void RunConfig::validate_for_tables() const {
  if (view_paths.empty()) throw ConfigError("data.views is required");
  if (label_path.empty()) throw ConfigError("data.labels is required");
  for (const auto& p : view_paths)
    if (!std::filesystem::exists(p)) throw ConfigError("view file does not exist: " + p);
  if (!std::filesystem::exists(label_path))
    throw ConfigError("label file does not exist: " + label_path);
}

}  // namespace hmkl
