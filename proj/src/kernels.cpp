#include "hmkl/kernels.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hmkl {

std::string family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::linear: return "linear";
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::chi2: return "chi2";
  }
  return "?";
}

std::string KernelSpec::str() const {
  char buf[64];
  if (family == KernelFamily::linear) {
    std::snprintf(buf, sizeof(buf), "v%d:linear", view);
  } else {
    std::snprintf(buf, sizeof(buf), "v%d:%s:g=%.17g", view,
                  family_name(family).c_str(), gamma);
  }
  return buf;
}

KernelSpec KernelSpec::parse(const std::string& s) {
  KernelSpec spec;
  std::istringstream iss(s);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(iss, part, ':')) parts.push_back(part);
  if (parts.size() < 2 || parts[0].size() < 2 || parts[0][0] != 'v')
    throw std::runtime_error("bad kernel spec string: " + s);
  spec.view = std::stoi(parts[0].substr(1));
  if (parts[1] == "linear") {
    spec.family = KernelFamily::linear;
    if (parts.size() != 2) throw std::runtime_error("bad kernel spec string: " + s);
  } else {
    spec.family = parts[1] == "rbf" ? KernelFamily::rbf
                : parts[1] == "chi2" ? KernelFamily::chi2
                : throw std::runtime_error("unknown kernel family in: " + s);
    if (parts.size() != 3 || parts[2].rfind("g=", 0) != 0)
      throw std::runtime_error("bad kernel spec string: " + s);
    spec.gamma = std::stod(parts[2].substr(2));
  }
  return spec;
}

namespace {

template <typename A, typename B>
double chi2_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  double d = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double s = a[j] + b[j];
    if (s > 0.0) {
      const double diff = a[j] - b[j];
      d += diff * diff / s;
    }
    // both components zero: contribution 0 (limit of the term)
  }
  return d;
}

void check_chi2_domain(const Eigen::VectorXd& x) {
  if ((x.array() < 0.0).any())
    throw std::runtime_error("chi2 kernel requires non-negative features");
}

}  // namespace

double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& x1,
                   const Eigen::VectorXd& x2) {
  if (x1.size() != x2.size())
    throw std::runtime_error("kernel operand dimension mismatch");
  switch (spec.family) {
    case KernelFamily::linear:
      return x1.dot(x2);
    case KernelFamily::rbf:
      return std::exp(-spec.gamma * (x1 - x2).squaredNorm());
    case KernelFamily::chi2:
      check_chi2_domain(x1);
      check_chi2_domain(x2);
      return std::exp(-spec.gamma * chi2_distance(x1, x2));
  }
  return 0.0;
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  switch (spec.family) {
    case KernelFamily::linear:
      return rows * rows.transpose();
    case KernelFamily::rbf: {
      const Eigen::VectorXd sq = rows.rowwise().squaredNorm();
      Eigen::MatrixXd d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                           2.0 * rows * rows.transpose();
      return (-spec.gamma * d2.cwiseMax(0.0)).array().exp();
    }
    case KernelFamily::chi2: {
      if ((rows.array() < 0.0).any())
        throw std::runtime_error("chi2 kernel requires non-negative features");
      Eigen::MatrixXd k(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
          double v = std::exp(-spec.gamma * chi2_distance(rows.row(i), rows.row(j)));
          k(i, j) = v;
          k(j, i) = v;
        }
      }
      return k;
    }
  }
  return {};
}

Eigen::MatrixXd cross_gram_matrix(const KernelSpec& spec,
                                  const Eigen::MatrixXd& eval_rows,
                                  const Eigen::MatrixXd& train_rows) {
  if (eval_rows.cols() != train_rows.cols())
    throw std::runtime_error("cross-gram feature dimension mismatch");
  const Eigen::Index ne = eval_rows.rows(), nt = train_rows.rows();
  switch (spec.family) {
    case KernelFamily::linear:
      return eval_rows * train_rows.transpose();
    case KernelFamily::rbf: {
      const Eigen::VectorXd se = eval_rows.rowwise().squaredNorm();
      const Eigen::VectorXd st = train_rows.rowwise().squaredNorm();
      Eigen::MatrixXd d2 = se.replicate(1, nt) + st.transpose().replicate(ne, 1) -
                           2.0 * eval_rows * train_rows.transpose();
      return (-spec.gamma * d2.cwiseMax(0.0)).array().exp();
    }
    case KernelFamily::chi2: {
      if ((eval_rows.array() < 0.0).any() || (train_rows.array() < 0.0).any())
        throw std::runtime_error("chi2 kernel requires non-negative features");
      Eigen::MatrixXd k(ne, nt);
      for (Eigen::Index i = 0; i < ne; ++i)
        for (Eigen::Index j = 0; j < nt; ++j)
          k(i, j) = std::exp(-spec.gamma *
                             chi2_distance(eval_rows.row(i), train_rows.row(j)));
      return k;
    }
  }
  return {};
}

double hilbert_variance(const Eigen::MatrixXd& gram) {
  const double n = static_cast<double>(gram.rows());
  return gram.trace() / n - gram.sum() / (n * n);
}

Eigen::MatrixXd zien_ong_normalize(const Eigen::MatrixXd& gram) {
  const double s2 = hilbert_variance(gram);
  if (s2 < 1e-12)
    throw std::runtime_error("degenerate kernel: embedded variance below 1e-12");
  return gram / s2;
}

int KernelBank::find(const KernelSpec& spec) const {
  for (int i = 0; i < size(); ++i)
    if (specs[i] == spec) return i;
  return -1;
}

KernelBank build_bank(const FeatureTable& table,
                      const std::vector<double>& rbf_gammas,
                      const std::vector<double>& chi2_gammas) {
  if (table.num_samples() < 1) throw std::runtime_error("empty table");
  KernelBank bank;
  for (int f = 0; f < table.num_views(); ++f) {
    const Eigen::MatrixXd& rows = table.views[f];
    const bool nonneg = (rows.array() >= 0.0).all();

    bank.specs.push_back({f, KernelFamily::linear, 0.0});
    bank.grams.push_back(gram_matrix(bank.specs.back(), rows));
    for (double g : rbf_gammas) {
      bank.specs.push_back({f, KernelFamily::rbf, g});
      bank.grams.push_back(gram_matrix(bank.specs.back(), rows));
    }
    if (nonneg) {
      for (double g : chi2_gammas) {
        bank.specs.push_back({f, KernelFamily::chi2, g});
        bank.grams.push_back(gram_matrix(bank.specs.back(), rows));
      }
    } else if (!chi2_gammas.empty()) {
      bank.warnings.push_back("view '" + table.view_names[f] +
                              "' has negative entries; chi2 kernels skipped");
    }
  }
  bank.scales.assign(bank.specs.size(), 1.0);
  return bank;
}

void normalize_by_hilbert_std(KernelBank& bank, StdNormMode mode) {
  if (mode == StdNormMode::none) return;
  for (int i = 0; i < bank.size(); ++i) {
    const double s2 = hilbert_variance(bank.grams[i]);
    if (s2 < 1e-12)
      throw std::runtime_error("degenerate kernel " + bank.specs[i].str() +
                               ": embedded variance below 1e-12");
    const double scale = mode == StdNormMode::variance ? s2 : std::sqrt(s2);
    bank.grams[i] /= scale;
    bank.scales[i] *= scale;
  }
  bank.norm_mode = mode;
}

std::vector<Eigen::MatrixXd> bank_cross_grams(const KernelBank& bank,
                                              const FeatureTable& eval_table,
                                              const FeatureTable& train_table) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(bank.specs.size());
  for (int i = 0; i < bank.size(); ++i) {
    const KernelSpec& s = bank.specs[i];
    out.push_back(cross_gram_matrix(s, eval_table.views[s.view],
                                    train_table.views[s.view]) /
                  bank.scales[i]);
  }
  return out;
}

void write_gram_cache(const std::string& path, const Eigen::MatrixXd& gram,
                      const KernelSpec& spec, std::uint64_t table_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write gram cache: " + path);
  out << "gram " << gram.rows() << ' ' << gram.cols() << ' ' << spec.str() << ' '
      << table_hash << '\n';
  static_assert(std::endian::native == std::endian::little,
                "gram cache assumes a little-endian host");
  for (Eigen::Index r = 0; r < gram.rows(); ++r)
    for (Eigen::Index c = 0; c < gram.cols(); ++c) {
      double v = gram(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

bool read_gram_cache(const std::string& path, Eigen::MatrixXd& gram,
                     const KernelSpec& spec, std::uint64_t table_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::string header;
  if (!std::getline(in, header)) return false;
  std::istringstream iss(header);
  std::string magic, spec_str;
  Eigen::Index rows, cols;
  std::uint64_t hash;
  if (!(iss >> magic >> rows >> cols >> spec_str >> hash)) return false;
  if (magic != "gram" || spec_str != spec.str() || hash != table_hash) return false;
  gram.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) return false;
      gram(r, c) = v;
    }
  return true;
}

}  // namespace hmkl
