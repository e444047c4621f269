#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hmkl/kernels.hpp"
#include "hmkl/mkl.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace hmkl;

namespace {

// Informative RBF Gram plus a Gram over pure noise features.
void two_kernel_problem(std::uint64_t seed, Eigen::MatrixXd& K_signal,
                        Eigen::MatrixXd& K_noise, std::vector<int>& y) {
  Eigen::MatrixXd X;
  testing::make_blobs(10, 3.0, 0.6, seed, X, y);
  const Eigen::MatrixXd N = testing::random_features(static_cast<int>(X.rows()), 2,
                                                     seed + 1000, -1.0, 1.0);
  K_signal = gram_matrix({0, KernelFamily::rbf, 0.5}, X);
  K_noise = gram_matrix({0, KernelFamily::rbf, 0.5}, N);
}

std::vector<KernelSpec> two_specs() {
  return {{0, KernelFamily::rbf, 0.5}, {1, KernelFamily::rbf, 0.5}};
}

}  // namespace

TEST_CASE("weights satisfy the p-norm constraint for p in {1, 1.25, 2}") {
  Eigen::MatrixXd K1, K2;
  std::vector<int> y;
  two_kernel_problem(4, K1, K2, y);
  for (double p : {1.0, 1.25, 2.0}) {
    CAPTURE(p);
    const MklModel m = train_lp_mkl(two_specs(), {K1, K2}, y, 1.0, p);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m.betas.size(); ++i) {
      CHECK(m.betas[i] >= 0.0);
      sum += std::pow(m.betas[i], p);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("two identical kernels at p=2 share the weight equally") {
  Eigen::MatrixXd K1, K2;
  std::vector<int> y;
  two_kernel_problem(8, K1, K2, y);
  const MklModel m = train_lp_mkl(two_specs(), {K1, K1}, y, 1.0, 2.0);
  CHECK(std::abs(m.betas[0] - std::sqrt(2.0) / 2.0) <= 1e-3);
  CHECK(std::abs(m.betas[1] - std::sqrt(2.0) / 2.0) <= 1e-3);
}

TEST_CASE("weights are as good as the constraint-surface grid oracle") {
  // The min-max objective can be nearly flat in beta, so the oracle check
  // compares attained values, not the weights themselves.
  auto value_at = [](const Eigen::MatrixXd& K1, const Eigen::MatrixXd& K2,
                     const std::vector<int>& y, double b1, double b2) {
    return train_binary_svm(b1 * K1 + b2 * K2, y, 1.0, 1e-7).objective;
  };
  for (std::uint64_t seed : {2, 5, 11}) {
    Eigen::MatrixXd K1, K2;
    std::vector<int> y;
    two_kernel_problem(seed, K1, K2, y);
    for (double p : {1.0, 2.0}) {
      CAPTURE(seed);
      CAPTURE(p);
      const MklModel m = train_lp_mkl(two_specs(), {K1, K2}, y, 1.0, p, 1e-6);
      const Eigen::Vector2d want = testing::mkl_beta_oracle(K1, K2, y, 1.0, p);
      const double v_model = value_at(K1, K2, y, m.betas[0], m.betas[1]);
      const double v_oracle = value_at(K1, K2, y, want[0], want[1]);
      CHECK(v_model <= v_oracle + 1e-3 * (std::abs(v_oracle) + 1.0));
      if (p == 1.0) {  // sparse optimum: the weights themselves are determined
        CHECK(std::abs(m.betas[0] - want[0]) <= 0.05);
        CHECK(std::abs(m.betas[1] - want[1]) <= 0.05);
      }
    }
  }
}

TEST_CASE("p=1 sparsifies the noise kernel, p=2 keeps it dense") {
  int sparser_or_equal = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Eigen::MatrixXd K1, K2;
    std::vector<int> y;
    two_kernel_problem(seed, K1, K2, y);
    auto zeros = [](const MklModel& m) {
      int z = 0;
      for (Eigen::Index i = 0; i < m.betas.size(); ++i) z += m.betas[i] < 1e-3;
      return z;
    };
    const int z1 = zeros(train_lp_mkl(two_specs(), {K1, K2}, y, 1.0, 1.0));
    const int z2 = zeros(train_lp_mkl(two_specs(), {K1, K2}, y, 1.0, 2.0));
    sparser_or_equal += z1 >= z2;
  }
  CHECK(sparser_or_equal >= 9);
}

TEST_CASE("a single kernel reduces to the plain SVM with beta = 1") {
  Eigen::MatrixXd K1, K2;
  std::vector<int> y;
  two_kernel_problem(3, K1, K2, y);
  for (double p : {1.0, 2.0}) {
    const MklModel m = train_lp_mkl({two_specs()[0]}, {K1}, y, 1.0, p);
    CHECK(m.betas[0] == doctest::Approx(1.0).epsilon(1e-9));
    const SvmModel svm = train_binary_svm(K1, y, 1.0);
    CHECK(m.svm.objective ==
          doctest::Approx(svm.objective).epsilon(1e-6).scale(std::abs(svm.objective) + 1.0));
  }
}

TEST_CASE("prediction equals the SVM decision on the combined cross gram") {
  Eigen::MatrixXd K1, K2;
  std::vector<int> y;
  two_kernel_problem(6, K1, K2, y);
  const MklModel m = train_lp_mkl(two_specs(), {K1, K2}, y, 1.0, 2.0);
  const Eigen::VectorXd d = predict_mkl(m, {K1, K2});
  const Eigen::MatrixXd combined = m.betas[0] * K1 + m.betas[1] * K2;
  const Eigen::VectorXd want = decision_values(m.svm, combined);
  CHECK((d - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("combined gram is the beta-weighted sum") {
  Eigen::MatrixXd K1, K2;
  std::vector<int> y;
  two_kernel_problem(9, K1, K2, y);
  Eigen::VectorXd betas(2);
  betas << 0.25, 0.75;
  const Eigen::MatrixXd K = combined_gram(betas, {K1, K2});
  CHECK((K - (0.25 * K1 + 0.75 * K2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("degenerate problems raise a diagnosable error") {
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(6, 6);
  const std::vector<int> y = {1, 1, 1, -1, -1, -1};
  CHECK_THROWS_WITH_AS(train_lp_mkl(two_specs(), {Z, Z}, y, 1.0, 2.0),
                       doctest::Contains("larger C"), std::runtime_error);
}

TEST_CASE("model file round-trip restores specs, weights and the inner SVM") {
  Eigen::MatrixXd K1, K2;
  std::vector<int> y;
  two_kernel_problem(12, K1, K2, y);
  const MklModel m = train_lp_mkl(two_specs(), {K1, K2}, y, 2.0, 1.25);
  std::stringstream io;
  write_mkl_model(io, m);
  const MklModel back = read_mkl_model(io);
  REQUIRE(back.specs.size() == 2);
  CHECK(back.specs[0] == m.specs[0]);
  CHECK(back.specs[1] == m.specs[1]);
  CHECK(back.betas == m.betas);
  CHECK(back.p == m.p);
  CHECK(back.svm.alphas == m.svm.alphas);
  CHECK(back.svm.bias == m.svm.bias);
}

TEST_CASE("outer loop converges and the trace records its descent") {
  Eigen::MatrixXd K1, K2;
  std::vector<int> y;
  two_kernel_problem(15, K1, K2, y);
  const MklModel m = train_lp_mkl(two_specs(), {K1, K2}, y, 1.0, 2.0);
  CHECK(m.outer_iterations >= 1);
  CHECK(m.outer_iterations <= 100);
  CHECK(static_cast<int>(m.trace.size()) == m.outer_iterations);
}
