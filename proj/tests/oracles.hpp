#pragma once

// Independent reference solvers used to validate the production code.  They
// share no implementation with src/: the SVM oracle is accelerated projected
// gradient ascent, the MKL oracle a grid search over the weight constraint
// surface, the k-means oracle an exhaustive partition search.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "hmkl/svm.hpp"

namespace hmkl::testing {

// Euclidean projection onto {0 <= a <= C, y'a = 0} by bisection on the
// multiplier of the equality constraint.
inline Eigen::VectorXd project_box_hyperplane(const Eigen::VectorXd& v,
                                              const std::vector<int>& y, double C) {
  const Eigen::Index n = v.size();
  auto value = [&](double lambda) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double a = v[i] - lambda * y[i];
      a = std::min(C, std::max(0.0, a));
      s += y[i] * a;
    }
    return s;
  };
  double lo = -(v.cwiseAbs().maxCoeff() + C + 1.0);
  double hi = -lo;
  for (int it = 0; it < 100; ++it) {  // value() is non-increasing in lambda
    const double mid = 0.5 * (lo + hi);
    (value(mid) > 0.0 ? lo : hi) = mid;
  }
  const double lambda = 0.5 * (lo + hi);
  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i)
    a[i] = std::min(C, std::max(0.0, v[i] - lambda * y[i]));
  return a;
}

// Dual value sum(a) - 1/2 a' Q a with Q_ij = y_i y_j K_ij.
inline double svm_dual_objective(const Eigen::MatrixXd& K, const std::vector<int>& y,
                                 const Eigen::VectorXd& a, int /*unused*/ = 0) {
  double quad = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < a.size(); ++j)
      quad += a[i] * a[j] * y[i] * y[j] * K(i, j);
  return a.sum() - 0.5 * quad;
}

// Maximizes the dual by accelerated (Nesterov) projected gradient ascent
// with a fixed step from the spectral bound and momentum restart on
// non-monotone progress; suitable for small N only.
inline Eigen::VectorXd svm_dual_oracle(const Eigen::MatrixXd& K,
                                       const std::vector<int>& y, double C,
                                       int max_iterations = 100000) {
  const Eigen::Index n = K.rows();
  Eigen::MatrixXd Q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) Q(i, j) = y[i] * y[j] * K(i, j);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  const double L = std::max(es.eigenvalues().maxCoeff(), 1e-9);
  const double step = 1.0 / L;
  auto objective = [&](const Eigen::VectorXd& v) {
    return v.sum() - 0.5 * v.dot(Q * v);
  };
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = a;  // extrapolation point
  double t = 1.0;
  double best = 0.0;
  Eigen::VectorXd best_a = a;
  int stalled = 0;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd grad = Eigen::VectorXd::Ones(n) - Q * z;
    const Eigen::VectorXd a_next = project_box_hyperplane(z + step * grad, y, C);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = a_next + ((t - 1.0) / t_next) * (a_next - a);
    const double obj = objective(a_next);
    if (obj < objective(a)) {  // restart the momentum when ascent stalls
      z = a;
      t = 1.0;
    } else {
      a = a_next;
      t = t_next;
    }
    if (obj > best + 1e-13 * (std::abs(best) + 1.0)) {
      best = obj;
      best_a = a_next;
      stalled = 0;
    } else if (++stalled >= 200) {
      break;
    }
  }
  return best_a;
}

// MKL reference for two kernels: sweep the constraint surface
// beta = (t, (1-t^p)^(1/p)), solve the SVM exactly on the combined Gram and
// keep the weights minimizing the optimal dual value (the min-max problem
// the alternating algorithm solves).
inline Eigen::Vector2d mkl_beta_oracle(const Eigen::MatrixXd& K1,
                                       const Eigen::MatrixXd& K2,
                                       const std::vector<int>& y, double C, double p,
                                       double grid_step = 0.005) {
  Eigen::Vector2d best(0.0, 1.0);
  double best_value = std::numeric_limits<double>::infinity();
  for (double t = 0.0; t <= 1.0 + 1e-12; t += grid_step) {
    const double b1 = std::min(t, 1.0);
    const double b2 = std::pow(std::max(0.0, 1.0 - std::pow(b1, p)), 1.0 / p);
    const Eigen::MatrixXd K = b1 * K1 + b2 * K2;
    const SvmModel m = train_binary_svm(K, y, C, 1e-7);
    if (m.objective < best_value) {
      best_value = m.objective;
      best = {b1, b2};
    }
  }
  return best;
}

// Exhaustive 2-cluster k-means on tiny inputs: best partition by total
// squared distance to cluster means.
inline double kmeans2_oracle_inertia(const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n) - 1; ++mask) {
    Eigen::RowVectorXd m0 = Eigen::RowVectorXd::Zero(X.cols());
    Eigen::RowVectorXd m1 = Eigen::RowVectorXd::Zero(X.cols());
    int n0 = 0, n1 = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        m1 += X.row(i);
        ++n1;
      } else {
        m0 += X.row(i);
        ++n0;
      }
    m0 /= n0;
    m1 /= n1;
    double inertia = 0.0;
    for (int i = 0; i < n; ++i)
      inertia += (X.row(i) - ((mask & (1u << i)) ? m1 : m0)).squaredNorm();
    best = std::min(best, inertia);
  }
  return best;
}

}  // namespace hmkl::testing
