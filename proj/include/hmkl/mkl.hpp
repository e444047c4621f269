#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "hmkl/kernels.hpp"
#include "hmkl/svm.hpp"

namespace hmkl {

struct MklModel {
  std::vector<KernelSpec> specs;  // active kernels
  Eigen::VectorXd betas;          // aligned with specs, sum beta^p = 1
  double p = 2.0;
  SvmModel svm;                   // trained on the beta-combined Gram
  Eigen::VectorXd primal_norms;   // ||w_m||^2 per kernel, diagnostic
  std::vector<std::pair<Eigen::VectorXd, double>> trace;  // (beta, objective)
  int outer_iterations = 0;
};

Eigen::MatrixXd combined_gram(const Eigen::VectorXd& betas,
                              const std::vector<Eigen::MatrixXd>& grams);

// Alternating optimization of kernel weights and SVM duals under the
// constraint sum_m beta_m^p = 1 (sparse at p=1, dense for p>1).  Converges
// on max |delta beta| < tol_beta; the inner SVM is warm-started across
// outer iterations.
MklModel train_lp_mkl(const std::vector<KernelSpec>& specs,
                      const std::vector<Eigen::MatrixXd>& grams,
                      const std::vector<int>& labels, double C, double p,
                      double tol_beta = 1e-4, int max_outer = 100,
                      double svm_tol = 1e-3);

// Decision values on the beta-combined cross Grams (one per active spec).
Eigen::VectorXd predict_mkl(const MklModel& model,
                            const std::vector<Eigen::MatrixXd>& cross_grams);

void write_mkl_model(std::ostream& out, const MklModel& model);
MklModel read_mkl_model(std::istream& in);

}  // namespace hmkl
