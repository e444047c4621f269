#include "hmkl/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hmkl/rng.hpp"

namespace hmkl {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path, int line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    if (!std::isfinite(v))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": non-finite value '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                             ": cannot parse '" + s + "' as a number");
  } catch (const std::out_of_range&) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                             ": value out of range '" + s + "'");
  }
}

// Per-class sample indices in table order.
std::vector<std::vector<int>> indices_by_class(const FeatureTable& table) {
  std::vector<std::vector<int>> by_class(table.num_classes());
  for (int i = 0; i < table.num_samples(); ++i)
    by_class[table.labels[i]].push_back(i);
  return by_class;
}

}  // namespace

FeatureTable FeatureTable::subset(std::span<const int> indices) const {
  FeatureTable out;
  out.view_names = view_names;
  out.class_names = class_names;
  out.views.resize(views.size());
  for (std::size_t f = 0; f < views.size(); ++f) {
    out.views[f].resize(static_cast<Eigen::Index>(indices.size()), views[f].cols());
  }
  for (std::size_t r = 0; r < indices.size(); ++r) {
    int i = indices[r];
    out.sample_ids.push_back(sample_ids[i]);
    out.labels.push_back(labels[i]);
    for (std::size_t f = 0; f < views.size(); ++f)
      out.views[f].row(static_cast<Eigen::Index>(r)) = views[f].row(i);
  }
  return out;
}

void FeatureTable::validate() const {
  const int n = num_samples();
  if (n < 1) throw std::runtime_error("feature table is empty");
  if (static_cast<int>(sample_ids.size()) != n)
    throw std::runtime_error("sample_ids/labels length mismatch");
  if (views.empty()) throw std::runtime_error("feature table has no views");
  for (std::size_t f = 0; f < views.size(); ++f) {
    if (views[f].rows() != n)
      throw std::runtime_error("view '" + view_names[f] + "' row count " +
                               std::to_string(views[f].rows()) +
                               " != sample count " + std::to_string(n));
    if (views[f].cols() < 1)
      throw std::runtime_error("view '" + view_names[f] + "' has no columns");
    if (!views[f].allFinite())
      throw std::runtime_error("view '" + view_names[f] + "' contains non-finite values");
  }
  std::set<std::string> seen;
  for (const auto& id : sample_ids)
    if (!seen.insert(id).second)
      throw std::runtime_error("duplicate sample_id '" + id + "'");
  for (int y : labels)
    if (y < 0 || y >= num_classes())
      throw std::runtime_error("label index out of range: " + std::to_string(y));
}

std::uint64_t FeatureTable::content_hash() const {
  // FNV-1a over ids, labels and raw view bytes.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& id : sample_ids) mix(id.data(), id.size());
  mix(labels.data(), labels.size() * sizeof(int));
  for (const auto& v : views) {
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        double x = v(r, c);
        mix(&x, sizeof(x));
      }
  }
  return h;
}

FeatureTable load_feature_table(const std::vector<std::string>& view_paths,
                                const std::string& label_path) {
  FeatureTable table;

  // Header is the first non-comment line; leading '#' lines carry provenance.
  auto read_header = [](std::ifstream& f, std::string& line, int& line_no,
                        const std::string& path) {
    for (;;) {
      if (!std::getline(f, line)) throw std::runtime_error(path + ": empty file");
      ++line_no;
      if (!line.empty() && line[0] != '#') return;
    }
  };

  // Labels first: they fix the row order and the class index mapping.
  std::ifstream lf(label_path);
  if (!lf) throw std::runtime_error("cannot open label file: " + label_path);
  std::string line;
  std::map<std::string, int> class_index;
  std::map<std::string, int> row_of_id;
  int line_no = 0;
  read_header(lf, line, line_no, label_path);
  while (std::getline(lf, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw std::runtime_error(label_path + ":" + std::to_string(line_no) +
                               ": expected 'id,label'");
    const std::string& id = fields[0];
    const std::string& cls = fields[1];
    if (row_of_id.count(id))
      throw std::runtime_error(label_path + ":" + std::to_string(line_no) +
                               ": duplicate sample_id '" + id + "'");
    auto it = class_index.find(cls);
    if (it == class_index.end()) {
      it = class_index.emplace(cls, static_cast<int>(table.class_names.size())).first;
      table.class_names.push_back(cls);
    }
    row_of_id[id] = static_cast<int>(table.sample_ids.size());
    table.sample_ids.push_back(id);
    table.labels.push_back(it->second);
  }
  const int n = table.num_samples();
  if (n == 0) throw std::runtime_error(label_path + ": no samples");

  for (const auto& path : view_paths) {
    std::ifstream vf(path);
    if (!vf) throw std::runtime_error("cannot open view file: " + path);
    line_no = 0;
    read_header(vf, line, line_no, path);
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "id")
      throw std::runtime_error(path + ": header must be 'id,v0,v1,...'");
    const int dim = static_cast<int>(header.size()) - 1;

    Eigen::MatrixXd view(n, dim);
    std::vector<bool> filled(n, false);
    while (std::getline(vf, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto fields = split_csv_line(line);
      if (static_cast<int>(fields.size()) != dim + 1)
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": expected " + std::to_string(dim + 1) +
                                 " fields, got " + std::to_string(fields.size()));
      auto it = row_of_id.find(fields[0]);
      if (it == row_of_id.end())
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": unknown sample_id '" + fields[0] + "'");
      for (int c = 0; c < dim; ++c)
        view(it->second, c) = parse_double(fields[c + 1], path, line_no);
      filled[it->second] = true;
    }
    for (int i = 0; i < n; ++i)
      if (!filled[i])
        throw std::runtime_error(path + ": missing sample_id '" +
                                 table.sample_ids[i] + "'");

    // View name from the file's basename, extension stripped.
    std::string name = path;
    if (auto p = name.find_last_of("/\\"); p != std::string::npos) name = name.substr(p + 1);
    if (auto p = name.rfind('.'); p != std::string::npos) name = name.substr(0, p);
    table.view_names.push_back(name);
    table.views.push_back(std::move(view));
  }

  table.validate();
  return table;
}

void write_view_csv(const std::string& path, const FeatureTable& table, int view) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write view file: " + path);
  const Eigen::MatrixXd& v = table.views.at(view);
  out << "id";
  for (Eigen::Index c = 0; c < v.cols(); ++c) out << ",v" << c;
  out << "\n";
  char buf[64];
  for (int i = 0; i < table.num_samples(); ++i) {
    out << table.sample_ids[i];
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      // %.17g round-trips doubles exactly.
      std::snprintf(buf, sizeof(buf), "%.17g", v(i, c));
      out << ',' << buf;
    }
    out << "\n";
  }
}

void write_label_csv(const std::string& path, const FeatureTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write label file: " + path);
  out << "id,label\n";
  for (int i = 0; i < table.num_samples(); ++i)
    out << table.sample_ids[i] << ',' << table.class_names[table.labels[i]] << "\n";
}

SplitManifest stratified_split(const FeatureTable& table, double fraction,
                               std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::runtime_error("train fraction must be in (0,1)");
  SplitManifest m;
  m.seed = seed;
  m.train_fraction = fraction;

  Rng rng(seed);
  auto by_class = indices_by_class(table);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& idx = by_class[k];
    const int size = static_cast<int>(idx.size());
    if (size < 2)
      throw std::runtime_error("class '" + table.class_names[k] +
                               "' has fewer than 2 samples; cannot stratify");
    int train = static_cast<int>(std::floor(fraction * size + 0.5));
    train = std::clamp(train, 1, size - 1);
    rng.shuffle(idx);
    for (int i = 0; i < size; ++i)
      (i < train ? m.train_indices : m.test_indices).push_back(idx[i]);
  }
  std::sort(m.train_indices.begin(), m.train_indices.end());
  std::sort(m.test_indices.begin(), m.test_indices.end());
  return m;
}

FoldAssignment make_folds(const SplitManifest& manifest, const FeatureTable& table,
                          int k, std::uint64_t seed) {
  if (k < 2) throw std::runtime_error("fold count must be >= 2");
  FoldAssignment fa;
  fa.k = k;
  fa.fold_of.assign(manifest.train_indices.size(), -1);

  Rng rng(seed);
  std::vector<std::vector<int>> by_class(table.num_classes());
  for (std::size_t p = 0; p < manifest.train_indices.size(); ++p)
    by_class[table.labels[manifest.train_indices[p]]].push_back(static_cast<int>(p));
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& pos = by_class[c];
    if (pos.empty())
      throw std::runtime_error("class '" + table.class_names[c] +
                               "' has no training samples");
    rng.shuffle(pos);
    // Round-robin keeps per-class fold sizes within 1 of each other; classes
    // smaller than k land in the first (class size) folds.
    for (std::size_t i = 0; i < pos.size(); ++i)
      fa.fold_of[pos[i]] = static_cast<int>(i % k);
  }
  return fa;
}

void write_split_manifest(const std::string& path, const SplitManifest& manifest,
                          const FeatureTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", manifest.train_fraction);
  out << "# seed=" << manifest.seed << " fraction=" << buf << "\n";
  out << "id,role\n";
  std::vector<char> role(table.num_samples(), 0);
  for (int i : manifest.train_indices) role[i] = 1;
  for (int i : manifest.test_indices) role[i] = 2;
  for (int i = 0; i < table.num_samples(); ++i) {
    if (role[i] == 0)
      throw std::runtime_error("manifest does not cover sample '" + table.sample_ids[i] + "'");
    out << table.sample_ids[i] << ',' << (role[i] == 1 ? "train" : "test") << "\n";
  }
}

SplitManifest read_split_manifest(const std::string& path, const FeatureTable& table) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  SplitManifest m;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# seed=", 0) != 0)
    throw std::runtime_error(path + ": missing '# seed=...' comment line");
  {
    std::istringstream iss(line.substr(2));
    std::string tok;
    while (iss >> tok) {
      if (tok.rfind("seed=", 0) == 0) m.seed = std::stoull(tok.substr(5));
      if (tok.rfind("fraction=", 0) == 0) m.train_fraction = std::stod(tok.substr(9));
    }
  }
  if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated");
  std::map<std::string, int> row_of_id;
  for (int i = 0; i < table.num_samples(); ++i) row_of_id[table.sample_ids[i]] = i;
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'id,role'");
    auto it = row_of_id.find(fields[0]);
    if (it == row_of_id.end())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": unknown sample_id '" + fields[0] + "'");
    if (fields[1] == "train")
      m.train_indices.push_back(it->second);
    else if (fields[1] == "test")
      m.test_indices.push_back(it->second);
    else
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": role must be 'train' or 'test'");
  }
  return m;
}

}  // namespace hmkl
