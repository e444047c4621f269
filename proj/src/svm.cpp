#include "hmkl/svm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hmkl {

std::vector<int> SvmModel::support_indices(double eps) const {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < alphas.size(); ++i)
    if (alphas[i] > eps) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

double dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& g,
                      const std::vector<int>& y) {
  // g_i = sum_j alpha_j y_j K_ij, so alpha' Q alpha = sum_i alpha_i y_i g_i.
  double quad = 0.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) quad += alpha[i] * y[i] * g[i];
  return alpha.sum() - 0.5 * quad;
}

}  // namespace

SvmModel train_binary_svm(const Eigen::MatrixXd& gram, const std::vector<int>& labels,
                          double C, double tol, const Eigen::VectorXd* warm_start,
                          long max_updates) {
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n) throw std::runtime_error("gram matrix is not square");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::runtime_error("label count does not match gram size");
  if (!gram.isApprox(gram.transpose(), 1e-9))
    throw std::runtime_error("gram matrix is not symmetric");
  if (C <= 0.0) throw std::runtime_error("C must be positive");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y == 1) has_pos = true;
    else if (y == -1) has_neg = true;
    else throw std::runtime_error("labels must be -1 or +1");
  }
  if (!has_pos || !has_neg)
    throw std::runtime_error("both classes must be present");

  SvmModel model;
  model.labels = labels;
  model.C = C;

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  if (warm_start) {
    if (warm_start->size() != n)
      throw std::runtime_error("warm start size mismatch");
    alpha = warm_start->cwiseMax(0.0).cwiseMin(C);
    // Restore the equality constraint if clipping (or a C change) broke it.
    double viol = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) viol += alpha[i] * labels[i];
    for (Eigen::Index i = 0; i < n && std::abs(viol) > 1e-12; ++i) {
      double step = -viol * labels[i];  // change to alpha_i removing residual
      double clipped = std::clamp(alpha[i] + step, 0.0, C);
      viol += (clipped - alpha[i]) * labels[i];
      alpha[i] = clipped;
    }
  }

  // Gradient cache g_i = sum_j alpha_j y_j K_ij.
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  if ((alpha.array() != 0.0).any()) {
    Eigen::VectorXd ay(n);
    for (Eigen::Index i = 0; i < n; ++i) ay[i] = alpha[i] * labels[i];
    g = gram * ay;
  }

#ifndef NDEBUG
  double last_checked_obj = -std::numeric_limits<double>::infinity();
#endif

  long updates = 0;
  double gap_up = 0, gap_low = 0;
  for (;;) {
    // Maximal violating pair: i maximizes y_i - g_i over I_up,
    // j minimizes it over I_low.  Ties resolved to the lowest index by the
    // strict comparisons below.
    int best_i = -1, best_j = -1;
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = labels[t] - g[t];
      const bool in_up = (labels[t] == 1 && alpha[t] < C) || (labels[t] == -1 && alpha[t] > 0);
      const bool in_low = (labels[t] == -1 && alpha[t] < C) || (labels[t] == 1 && alpha[t] > 0);
      if (in_up && v > m_up) { m_up = v; best_i = static_cast<int>(t); }
      if (in_low && v < m_low) { m_low = v; best_j = static_cast<int>(t); }
    }
    gap_up = m_up;
    gap_low = m_low;
    if (best_i < 0 || best_j < 0 || m_up - m_low < tol) break;
    if (updates >= max_updates) {
      model.converged = false;
      break;
    }

    const int i = best_i, j = best_j;
    const double yi = labels[i], yj = labels[j];
    const double s = yi * yj;

    // Bounds on the new alpha_j.
    double lo, hi;
    if (s < 0) {
      lo = std::max(0.0, alpha[j] - alpha[i]);
      hi = std::min(C, C + alpha[j] - alpha[i]);
    } else {
      lo = std::max(0.0, alpha[i] + alpha[j] - C);
      hi = std::min(C, alpha[i] + alpha[j]);
    }

    const double eta = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
    const double ei = g[i] - yi, ej = g[j] - yj;
    double aj_new;
    if (eta > 1e-12) {
      aj_new = std::clamp(alpha[j] + yj * (ei - ej) / eta, lo, hi);
    } else {
      // Flat direction: pick the bound with the larger dual value.  The
      // objective along the segment is linear (up to the tiny eta), so the
      // better endpoint never decreases it.
      const double slope = yj * (ei - ej);
      aj_new = slope > 0 ? hi : lo;
    }
    // Snap round-off residues to the exact bound, otherwise an alpha that
    // should be 0 (or C) keeps a ~1e-16 remainder, stays in the working set
    // and degenerates the pair bounds of later iterations.
    const auto snap = [C](double a) {
      if (a < 1e-12 * C) return 0.0;
      if (a > C * (1.0 - 1e-12)) return C;
      return a;
    };
    aj_new = snap(aj_new);
    const double ai_new = snap(alpha[i] - s * (aj_new - alpha[j]));
    const double delta_j = aj_new - alpha[j];
    const double delta_i = ai_new - alpha[i];
    if (std::abs(delta_j) < 1e-14 && std::abs(delta_i) < 1e-14) {
      // Numerically stuck pair: no representable progress left.
      model.converged = false;
      break;
    }
    alpha[j] = aj_new;
    alpha[i] = ai_new;
    g += (delta_i * yi) * gram.col(i) + (delta_j * yj) * gram.col(j);
    ++updates;

#ifndef NDEBUG
    if (updates % 1000 == 0) {
      const double obj = dual_objective(alpha, g, labels);
      assert(obj >= last_checked_obj - 1e-7 * (1.0 + std::abs(obj)));
      last_checked_obj = obj;
    }
#endif
  }

  model.alphas = alpha;
  model.iterations = updates;
  model.objective = dual_objective(alpha, g, labels);

  // Bias from free support vectors; midpoint of the KKT interval otherwise.
  double sum = 0.0;
  int free_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (alpha[i] > 1e-8 && alpha[i] < C - 1e-8) {
      sum += labels[i] - g[i];
      ++free_count;
    }
  }
  model.bias = free_count > 0 ? sum / free_count : 0.5 * (gap_up + gap_low);
  return model;
}

Eigen::VectorXd decision_values(const SvmModel& model, const Eigen::MatrixXd& cross_gram) {
  if (cross_gram.cols() != model.alphas.size())
    throw std::runtime_error("cross gram column count does not match training size");
  Eigen::VectorXd ay(model.alphas.size());
  for (Eigen::Index i = 0; i < ay.size(); ++i) ay[i] = model.alphas[i] * model.labels[i];
  return (cross_gram * ay).array() + model.bias;
}

std::vector<int> predict_labels(const Eigen::VectorXd& decisions) {
  std::vector<int> out(decisions.size());
  for (Eigen::Index i = 0; i < decisions.size(); ++i)
    out[i] = decisions[i] < 0.0 ? -1 : 1;
  return out;
}

void write_svm_model(std::ostream& out, const SvmModel& model) {
  out << "# svm-model v1\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", model.C);
  out << "C " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", model.bias);
  out << "bias " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", model.objective);
  out << "objective " << buf << "\n";
  for (Eigen::Index i = 0; i < model.alphas.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", model.alphas[i]);
    out << "alpha " << i << " " << buf << " " << model.labels[i] << "\n";
  }
}

SvmModel read_svm_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "# svm-model v1")
    throw std::runtime_error("not an svm model file");
  SvmModel model;
  std::vector<double> alphas;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string key;
    iss >> key;
    if (key == "C") {
      iss >> model.C;
    } else if (key == "bias") {
      iss >> model.bias;
    } else if (key == "objective") {
      iss >> model.objective;
    } else if (key == "alpha") {
      long idx;
      double v;
      int y;
      if (!(iss >> idx >> v >> y))
        throw std::runtime_error("malformed alpha line: " + line);
      if (idx != static_cast<long>(alphas.size()))
        throw std::runtime_error("alpha lines out of order");
      alphas.push_back(v);
      model.labels.push_back(y);
    } else {
      break;  // lines owned by an extending format (mkl)
    }
  }
  model.alphas = Eigen::Map<Eigen::VectorXd>(alphas.data(), alphas.size());
  return model;
}

}  // namespace hmkl
