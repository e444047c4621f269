#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hmkl/dataio.hpp"
#include "hmkl/heuristic.hpp"
#include "hmkl/kernels.hpp"
#include "hmkl/mkl.hpp"

namespace hmkl {

enum class Method { single_kernel, concat_single_kernel, mkl_lp, heuristic_mkl };

std::string method_name(Method m);
Method parse_method(const std::string& name);

// One-vs-all multiclass model: K binary classifiers sharing the same
// kernel set and normalization state.
struct MulticlassModel {
  std::vector<std::string> class_names;
  std::vector<KernelSpec> specs;
  std::vector<double> scales;  // training normalization divisor per spec
  std::vector<MklModel> models;  // one per class, aligned with class_names
  double C = 1.0;
  double p = 2.0;
};

// Trains one binary problem per class (+1 = class, -1 = rest) on the given
// bank kernels.  kernel_indices index into the bank.
MulticlassModel train_one_vs_all(const KernelBank& bank,
                                 const std::vector<int>& kernel_indices,
                                 const std::vector<int>& labels,
                                 const std::vector<std::string>& class_names,
                                 double C, double p, double svm_tol = 1e-3);

// Argmax over per-class decision values, ties to the lowest class index.
// cross_grams are aligned with model.specs (already divided by scales).
std::vector<int> predict_multiclass(const MulticlassModel& model,
                                    const std::vector<Eigen::MatrixXd>& cross_grams);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

// CV accuracy of one-vs-all l_p MKL over the given kernels at penalty C.
double cv_accuracy(const KernelBank& bank, const std::vector<int>& kernel_indices,
                   const std::vector<int>& labels, int num_classes,
                   const FoldAssignment& folds, double C, double p,
                   double svm_tol = 1e-3);

// One global C maximizing CV accuracy; ties go to the smaller value.
double select_C(const KernelBank& bank, const std::vector<int>& kernel_indices,
                const std::vector<int>& labels, int num_classes,
                const FoldAssignment& folds, const std::vector<double>& C_grid,
                double p, double svm_tol = 1e-3);

// Joint (kernel, C) selection for the single-kernel baselines: every bank
// kernel is scored alone over the C grid.
struct SingleKernelChoice {
  int kernel_index = 0;
  double C = 1.0;
  double cv_score = 0.0;
};
SingleKernelChoice select_single_kernel(const KernelBank& bank,
                                        const std::vector<int>& labels,
                                        int num_classes, const FoldAssignment& folds,
                                        const std::vector<double>& C_grid,
                                        double svm_tol = 1e-3);

struct BenchmarkOptions {
  std::vector<Method> methods;
  std::vector<double> fractions;
  int repetitions = 1;
  std::uint64_t base_seed = 0;
  std::vector<double> C_grid = {0.1, 1, 2, 3, 4, 5};
  std::vector<double> rbf_gammas = kDefaultRbfGammas;
  std::vector<double> chi2_gammas = kDefaultChi2Gammas;
  int cv_folds = 5;
  double mkl_p = 2.0;  // p used by the mkl_lp method
  StdNormMode norm_mode = StdNormMode::variance;
  double svm_tol = 1e-3;
  bool emit_plots = false;
  std::string cache_dir;  // per-repetition result cache; empty disables it
};

struct RepetitionResult {
  double test_accuracy = 0.0;
  std::vector<double> iteration_accuracies;  // heuristic: test acc per iteration
  std::vector<std::string> weight_specs;     // heuristic: bank specs of this run
  std::vector<std::vector<double>> class_weights;  // [class][weight_spec] reported beta
  std::vector<std::string> selected_specs;
  std::string error;  // non-empty if the repetition failed
};

struct BenchmarkCell {
  Method method = Method::mkl_lp;
  double fraction = 0.0;
  std::vector<RepetitionResult> repetitions;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation
};

struct BenchmarkReport {
  std::vector<BenchmarkCell> cells;
  std::vector<std::string> class_names;
  std::vector<std::string> spec_strings;  // specs of the last heuristic run
  BenchmarkOptions options;
};

// The repeated-split protocol: per (method, fraction, repetition) split with
// seed base_seed + r, build the bank on the training split, select C by CV,
// train and score on the held-out split.  Component errors are recorded per
// repetition without aborting the batch.
BenchmarkReport run_benchmark(const FeatureTable& table, const BenchmarkOptions& options);

// L2-normalizes every feature row of every view (in place).
void l2_normalize_table(FeatureTable& table);

// Zien-Ong comparable weights for one trained binary model: beta scaled by
// the embedded variance of each (already normalized) training Gram.
std::vector<double> report_weights(const MklModel& model, const KernelBank& bank,
                                   const std::vector<int>& kernel_indices);

void write_report_json(std::ostream& out, const BenchmarkReport& report,
                       const std::string& provenance);
void write_report_csv(std::ostream& out, const BenchmarkReport& report,
                      const std::string& provenance);
void write_iteration_csv(std::ostream& out, const BenchmarkCell& cell,
                         const std::string& provenance);
void write_weights_csv(std::ostream& out, const BenchmarkCell& cell,
                       const std::vector<std::string>& class_names,
                       const std::string& provenance);

void write_multiclass_model(std::ostream& out, const MulticlassModel& model);
MulticlassModel read_multiclass_model(std::istream& in);

}  // namespace hmkl
