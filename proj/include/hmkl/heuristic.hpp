#pragma once

#include <map>
#include <string>
#include <vector>

#include "hmkl/dataio.hpp"
#include "hmkl/kernels.hpp"

namespace hmkl {

// Evaluation environment for greedy kernel selection: a bank built on the
// training split, the training labels, and fixed fold assignments.
struct SelectionContext {
  const KernelBank* bank = nullptr;
  std::vector<int> labels;  // class indices aligned with the bank's Grams
  int num_classes = 0;
  FoldAssignment folds;     // over 0..N-1 of the bank's rows
  double C = 1.0;
  double p = 2.0;
  double svm_tol = 1e-3;
};

// Memoized cross-validated accuracy of kernel subsets.  `evaluate_calls`
// counts actual CV evaluations (memo hits are free); `classifier_trainings`
// counts the underlying MKL solves.
class SetEvaluator {
 public:
  explicit SetEvaluator(const SelectionContext& ctx) : ctx_(ctx) {}

  // One-vs-all MKL (p from ctx) scored by k-fold CV, accuracy pooled over
  // all held-out samples.  kernel_indices index into the bank.
  double evaluate(const std::vector<int>& kernel_indices);

  long evaluate_calls() const { return evaluate_calls_; }
  long classifier_trainings() const { return classifier_trainings_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  const SelectionContext& ctx_;
  std::map<std::vector<int>, double> memo_;
  long evaluate_calls_ = 0;
  long classifier_trainings_ = 0;
  std::vector<std::string> warnings_;
};

struct SubsetScore {
  std::vector<int> subset;  // kernel indices
  double score = 0.0;
};

struct SelectionIteration {
  std::vector<int> selected_before;           // S entering the iteration
  std::vector<int> candidates;                // C, at most one per view
  std::vector<SubsetScore> candidate_scores;  // step-2 scores per unselected kernel
  std::vector<SubsetScore> subset_scores;     // step-4 scores per subset of C
  std::vector<int> chosen;                    // B*
  double best_cv = 0.0;                       // CV accuracy of S after the iteration
};

struct SelectionTrace {
  std::vector<double> initial_scores;  // step-1 score per bank kernel
  std::vector<int> initial_selection;
  double initial_cv = 0.0;             // CV accuracy of the step-1 selection
  std::vector<SelectionIteration> iterations;
  long evaluate_calls = 0;
  long classifier_train_count = 0;
  std::string terminated_reason;  // empty_candidates | empty_best_subset | all_selected
  std::vector<std::string> warnings;
};

struct SelectionResult {
  std::vector<int> selected;  // kernel indices into the bank, sorted
  SelectionTrace trace;
};

// Greedy subset selection: seed with the best kernel per view, then
// repeatedly form per-view candidates from individually improving kernels
// and add the best-scoring candidate subset, until no strict improvement
// remains.  All tie-breaking is by lower kernel index / smaller subset, so
// reruns reproduce the identical trace.
SelectionResult select_kernels(const SelectionContext& ctx);

std::string trace_to_json(const SelectionTrace& trace, const KernelBank& bank);

}  // namespace hmkl
