#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hmkl/dataio.hpp"

namespace hmkl {

enum class KernelFamily { linear, rbf, chi2 };

std::string family_name(KernelFamily f);

// One (feature view, kernel family, gamma) combination.  gamma is ignored
// for the linear family.
struct KernelSpec {
  int view = 0;
  KernelFamily family = KernelFamily::linear;
  double gamma = 0.0;

  std::string str() const;  // e.g. "v0:rbf:g=0.1"
  static KernelSpec parse(const std::string& s);

  friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
    return a.view == b.view && a.family == b.family && a.gamma == b.gamma;
  }
  // Ordering used for all tie-breaking: view, then family, then gamma in
  // grid order (descending, matching the grids' listing).
  friend bool operator<(const KernelSpec& a, const KernelSpec& b) {
    if (a.view != b.view) return a.view < b.view;
    if (a.family != b.family) return static_cast<int>(a.family) < static_cast<int>(b.family);
    return a.gamma > b.gamma;
  }
};

double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& x1,
                   const Eigen::VectorXd& x2);

// Square Gram over `rows` (one sample per row of the view matrix).
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& rows);

// Rectangular eval x train Gram.
Eigen::MatrixXd cross_gram_matrix(const KernelSpec& spec,
                                  const Eigen::MatrixXd& eval_rows,
                                  const Eigen::MatrixXd& train_rows);

// Variance of the kernel-embedded points: (1/N) tr K - (1/N^2) sum K.
double hilbert_variance(const Eigen::MatrixXd& gram);

// Multiplicative normalization K / hilbert_variance(K), used for weight
// reporting so betas are comparable across kernels.
Eigen::MatrixXd zien_ong_normalize(const Eigen::MatrixXd& gram);

enum class StdNormMode { none, variance, deviation };

// All evaluated kernels over one training table.  Specs excluded as
// unavailable (chi2 over a view with negative entries) are kept in
// `skipped` with a note.
struct KernelBank {
  std::vector<KernelSpec> specs;
  std::vector<Eigen::MatrixXd> grams;  // aligned with specs, N x N
  std::vector<double> scales;          // divisor applied per spec (1 if none)
  StdNormMode norm_mode = StdNormMode::none;
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(specs.size()); }
  int find(const KernelSpec& spec) const;  // -1 if absent
};

inline const std::vector<double> kDefaultRbfGammas = {10.0, 1.0, 0.1, 0.01};
inline const std::vector<double> kDefaultChi2Gammas = {3.0, 2.0, 1.0, 0.5};

KernelBank build_bank(const FeatureTable& table,
                      const std::vector<double>& rbf_gammas = kDefaultRbfGammas,
                      const std::vector<double>& chi2_gammas = kDefaultChi2Gammas);

// Rescales every Gram so the embedded points have unit variance
// (mode=variance divides by s^2; mode=deviation by s).  Scale factors are
// stored and reused for prediction-time cross Grams.
void normalize_by_hilbert_std(KernelBank& bank,
                              StdNormMode mode = StdNormMode::variance);

// Cross Grams for the bank's specs between evaluation and training tables,
// divided by the stored training scales.
std::vector<Eigen::MatrixXd> bank_cross_grams(const KernelBank& bank,
                                              const FeatureTable& eval_table,
                                              const FeatureTable& train_table);

// Binary Gram cache: text header "gram <rows> <cols> <spec> <table-hash>"
// followed by row-major little-endian doubles.
void write_gram_cache(const std::string& path, const Eigen::MatrixXd& gram,
                      const KernelSpec& spec, std::uint64_t table_hash);
bool read_gram_cache(const std::string& path, Eigen::MatrixXd& gram,
                     const KernelSpec& spec, std::uint64_t table_hash);

}  // namespace hmkl
