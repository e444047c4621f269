#include "hmkl/mkl.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hmkl {

Eigen::MatrixXd combined_gram(const Eigen::VectorXd& betas,
                              const std::vector<Eigen::MatrixXd>& grams) {
  if (static_cast<std::size_t>(betas.size()) != grams.size())
    throw std::runtime_error("beta/gram count mismatch");
  if (grams.empty()) throw std::runtime_error("no grams to combine");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grams[0].rows(), grams[0].cols());
  for (std::size_t m = 0; m < grams.size(); ++m) {
    if (grams[m].rows() != out.rows() || grams[m].cols() != out.cols())
      throw std::runtime_error("gram shape mismatch in combination");
    if (betas[m] != 0.0) out += betas[m] * grams[m];
  }
  return out;
}

namespace {

// Closed-form weight update for the l_p-constrained combination:
//   beta_m = (||w_m||^2)^(1/(p+1)) / ( sum_m' (||w_m'||^2)^(p/(p+1)) )^(1/p),
// the stationary point of the regularized objective under sum beta^p = 1.
// At p=1 this reduces to beta_m = ||w_m|| / sum ||w_m'||; kernels with
// vanishing ||w_m|| get exactly zero (the sparse limit).
Eigen::VectorXd beta_update(const Eigen::VectorXd& w2, double p) {
  const Eigen::Index m = w2.size();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  double denom = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (w2[i] > 1e-24) denom += std::pow(w2[i], p / (p + 1.0));
  if (denom <= 0.0) return beta;
  const double denom_root = std::pow(denom, 1.0 / p);
  for (Eigen::Index i = 0; i < m; ++i)
    if (w2[i] > 1e-24) beta[i] = std::pow(w2[i], 1.0 / (p + 1.0)) / denom_root;
  // Exact renormalization of sum beta^p = 1.
  double norm_p = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) norm_p += std::pow(beta[i], p);
  if (norm_p > 0.0) beta /= std::pow(norm_p, 1.0 / p);
  return beta;
}

}  // namespace

MklModel train_lp_mkl(const std::vector<KernelSpec>& specs,
                      const std::vector<Eigen::MatrixXd>& grams,
                      const std::vector<int>& labels, double C, double p,
                      double tol_beta, int max_outer, double svm_tol) {
  if (grams.empty()) throw std::runtime_error("no kernels given");
  if (specs.size() != grams.size())
    throw std::runtime_error("spec/gram count mismatch");
  if (p < 1.0) throw std::runtime_error("p must be >= 1");

  const std::size_t m = grams.size();
  MklModel model;
  model.specs = specs;
  model.p = p;
  model.betas = Eigen::VectorXd::Constant(m, std::pow(1.0 / m, 1.0 / p));

  Eigen::VectorXd warm;
  bool have_warm = false;
  for (int outer = 0; outer < max_outer; ++outer) {
    model.outer_iterations = outer + 1;
    Eigen::MatrixXd combined = combined_gram(model.betas, grams);
    model.svm = train_binary_svm(combined, labels, C, svm_tol,
                                 have_warm ? &warm : nullptr);
    warm = model.svm.alphas;
    have_warm = true;

    // ||w_m||^2 = beta_m^2 * alpha' diag(y) K_m diag(y) alpha
    Eigen::VectorXd ay(model.svm.alphas.size());
    for (Eigen::Index i = 0; i < ay.size(); ++i)
      ay[i] = model.svm.alphas[i] * labels[i];
    Eigen::VectorXd w2(m);
    for (std::size_t k = 0; k < m; ++k)
      w2[k] = model.betas[k] * model.betas[k] * ay.dot(grams[k] * ay);
    model.primal_norms = w2;

    if ((w2.array() <= 1e-24).all())
      throw std::runtime_error(
          "degenerate MKL solution: every alpha is zero; try a larger C");

    Eigen::VectorXd next = beta_update(w2, p);
    const double delta = (next - model.betas).cwiseAbs().maxCoeff();
    model.betas = next;
    model.trace.emplace_back(model.betas, model.svm.objective);
    if (delta < tol_beta) break;
  }

  // Final SVM on the converged weights so model.svm matches model.betas.
  Eigen::MatrixXd combined = combined_gram(model.betas, grams);
  model.svm = train_binary_svm(combined, labels, C, svm_tol, &warm);
  return model;
}

Eigen::VectorXd predict_mkl(const MklModel& model,
                            const std::vector<Eigen::MatrixXd>& cross_grams) {
  if (cross_grams.size() != model.specs.size())
    throw std::runtime_error("one cross gram per active kernel is required");
  Eigen::MatrixXd combined = combined_gram(model.betas, cross_grams);
  return decision_values(model.svm, combined);
}

void write_mkl_model(std::ostream& out, const MklModel& model) {
  write_svm_model(out, model.svm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", model.p);
  out << "p " << buf << "\n";
  for (std::size_t i = 0; i < model.specs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", model.betas[i]);
    out << "beta " << model.specs[i].str() << " " << buf << "\n";
  }
}

MklModel read_mkl_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "# svm-model v1")
    throw std::runtime_error("not a model file");
  MklModel model;
  std::vector<double> alphas, betas;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string key;
    iss >> key;
    if (key == "C") {
      iss >> model.svm.C;
    } else if (key == "bias") {
      iss >> model.svm.bias;
    } else if (key == "objective") {
      iss >> model.svm.objective;
    } else if (key == "alpha") {
      long idx;
      double v;
      int y;
      if (!(iss >> idx >> v >> y))
        throw std::runtime_error("malformed alpha line: " + line);
      alphas.push_back(v);
      model.svm.labels.push_back(y);
    } else if (key == "p") {
      iss >> model.p;
    } else if (key == "beta") {
      std::string spec_str;
      double v;
      if (!(iss >> spec_str >> v))
        throw std::runtime_error("malformed beta line: " + line);
      model.specs.push_back(KernelSpec::parse(spec_str));
      betas.push_back(v);
    } else {
      throw std::runtime_error("unknown model line: " + line);
    }
  }
  model.svm.alphas = Eigen::Map<Eigen::VectorXd>(alphas.data(), alphas.size());
  model.betas = Eigen::Map<Eigen::VectorXd>(betas.data(), betas.size());
  return model;
}

}  // namespace hmkl
