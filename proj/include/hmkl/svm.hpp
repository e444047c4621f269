#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace hmkl {

struct SvmModel {
  Eigen::VectorXd alphas;
  double bias = 0.0;
  std::vector<int> labels;  // -1/+1, aligned with the training Gram
  double C = 1.0;
  double objective = 0.0;  // dual value: sum(alpha) - 1/2 alpha' Q alpha
  long iterations = 0;     // pair updates performed
  bool converged = true;

  std::vector<int> support_indices(double eps = 1e-8) const;
};

// Solves the soft-margin SVM dual on a precomputed Gram by two-variable
// updates with maximal-violating-pair working-set selection.  Terminates
// when the KKT violation gap drops below tol or at max_updates (reported
// via converged=false).  warm_start, when given, must be a feasible alpha
// of matching size (constraints do not depend on the Gram, so alphas from
// a previous solve on a different combined Gram remain feasible).
SvmModel train_binary_svm(const Eigen::MatrixXd& gram, const std::vector<int>& labels,
                          double C, double tol = 1e-3,
                          const Eigen::VectorXd* warm_start = nullptr,
                          long max_updates = 10'000'000);

// b + sum_i alpha_i y_i K(x, x_i) per row of cross_gram (N_eval x N_train).
Eigen::VectorXd decision_values(const SvmModel& model, const Eigen::MatrixXd& cross_gram);

// sign with sign(0) -> +1.
std::vector<int> predict_labels(const Eigen::VectorXd& decisions);

void write_svm_model(std::ostream& out, const SvmModel& model);
SvmModel read_svm_model(std::istream& in);

}  // namespace hmkl
