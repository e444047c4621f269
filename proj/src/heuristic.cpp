#include "hmkl/heuristic.hpp"

#include <algorithm>
#include <limits>
#include <mutex>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hmkl/mkl.hpp"
#include "hmkl/parallel.hpp"

namespace hmkl {

namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& k, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(r, c) = k(rows[r], cols[c]);
  return out;
}

std::vector<int> sorted_copy(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

double SetEvaluator::evaluate(const std::vector<int>& kernel_indices) {
  if (kernel_indices.empty())
    throw std::runtime_error("cannot evaluate an empty kernel set");
  const std::vector<int> key = sorted_copy(kernel_indices);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  const KernelBank& bank = *ctx_.bank;
  const int n = static_cast<int>(ctx_.labels.size());
  const int k = ctx_.folds.k;

  // Per-fold index lists (positions into the bank's rows).
  std::vector<std::vector<int>> held(k), rest(k);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < k; ++t)
      (ctx_.folds.fold_of[i] == t ? held[t] : rest[t]).push_back(i);

  struct Task {
    int fold, cls;
  };
  std::vector<Task> tasks;
  for (int t = 0; t < k; ++t) {
    if (held[t].empty()) continue;
    for (int c = 0; c < ctx_.num_classes; ++c) tasks.push_back({t, c});
  }

  // decision[fold][class] over held-out rows; untrainable classes stay empty.
  std::vector<std::vector<Eigen::VectorXd>> decisions(
      k, std::vector<Eigen::VectorXd>(ctx_.num_classes));
  std::mutex warn_mutex;
  long trainings = 0;
  std::mutex train_mutex;

  std::vector<KernelSpec> specs;
  for (int idx : key) specs.push_back(bank.specs[idx]);

  parallel_for(tasks.size(), [&](std::size_t ti) {
    const auto [t, c] = tasks[ti];
    std::vector<int> y;
    bool has_pos = false, has_neg = false;
    for (int i : rest[t]) {
      int v = ctx_.labels[i] == c ? 1 : -1;
      (v > 0 ? has_pos : has_neg) = true;
      y.push_back(v);
    }
    if (!has_pos || !has_neg) {
      std::lock_guard<std::mutex> lock(warn_mutex);
      warnings_.push_back("fold " + std::to_string(t) + ": class " +
                          std::to_string(c) + " untrainable (one-sided labels)");
      return;
    }
    std::vector<Eigen::MatrixXd> train_grams, cross_grams;
    for (int idx : key) {
      train_grams.push_back(submatrix(bank.grams[idx], rest[t], rest[t]));
      cross_grams.push_back(submatrix(bank.grams[idx], held[t], rest[t]));
    }
    MklModel model = train_lp_mkl(specs, train_grams, y, ctx_.C, ctx_.p, 1e-4,
                                  100, ctx_.svm_tol);
    decisions[t][c] = predict_mkl(model, cross_grams);
    std::lock_guard<std::mutex> lock(train_mutex);
    ++trainings;
  });

  long correct = 0, total = 0;
  for (int t = 0; t < k; ++t) {
    for (std::size_t h = 0; h < held[t].size(); ++h) {
      int best_class = -1;
      double best = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < ctx_.num_classes; ++c) {
        if (decisions[t][c].size() == 0) continue;
        if (decisions[t][c][static_cast<Eigen::Index>(h)] > best) {
          best = decisions[t][c][static_cast<Eigen::Index>(h)];
          best_class = c;
        }
      }
      if (best_class == ctx_.labels[held[t][h]]) ++correct;
      ++total;
    }
  }
  if (total == 0) throw std::runtime_error("no held-out samples across folds");

  const double accuracy = static_cast<double>(correct) / total;
  memo_[key] = accuracy;
  ++evaluate_calls_;
  classifier_trainings_ += trainings;
  return accuracy;
}

namespace {

// All subsets of `candidates` ordered by (cardinality, lexicographic
// indices); scanning in this order with a strict > comparison yields the
// smallest best subset.
std::vector<std::vector<int>> ordered_subsets(const std::vector<int>& candidates) {
  const std::size_t m = candidates.size();
  std::vector<std::vector<int>> subsets;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<int> s;
    for (std::size_t b = 0; b < m; ++b)
      if (mask & (std::size_t{1} << b)) s.push_back(candidates[b]);
    subsets.push_back(std::move(s));
  }
  std::sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return subsets;
}

}  // namespace

SelectionResult select_kernels(const SelectionContext& ctx) {
  const KernelBank& bank = *ctx.bank;
  if (bank.size() == 0) throw std::runtime_error("empty kernel bank");

  SetEvaluator evaluator(ctx);
  SelectionResult result;
  SelectionTrace& trace = result.trace;

  int num_views = 0;
  for (const auto& s : bank.specs) num_views = std::max(num_views, s.view + 1);

  // Step 1: best kernel per view in isolation.
  trace.initial_scores.assign(bank.size(), 0.0);
  for (int i = 0; i < bank.size(); ++i)
    trace.initial_scores[i] = evaluator.evaluate({i});
  std::vector<int> selected;
  for (int f = 0; f < num_views; ++f) {
    int best = -1;
    double best_score = -1.0;
    for (int i = 0; i < bank.size(); ++i)
      if (bank.specs[i].view == f && trace.initial_scores[i] > best_score) {
        best_score = trace.initial_scores[i];
        best = i;
      }
    if (best >= 0) selected.push_back(best);
  }
  std::sort(selected.begin(), selected.end());
  trace.initial_selection = selected;
  trace.initial_cv = evaluator.evaluate(selected);

  double current = trace.initial_cv;
  for (;;) {
    if (static_cast<int>(selected.size()) == bank.size()) {
      trace.terminated_reason = "all_selected";
      break;
    }
    SelectionIteration iter;
    iter.selected_before = selected;

    // Step 2: score every unselected kernel added to S.
    std::vector<double> add_score(bank.size(),
                                  -std::numeric_limits<double>::infinity());
    for (int i = 0; i < bank.size(); ++i) {
      if (std::find(selected.begin(), selected.end(), i) != selected.end())
        continue;
      std::vector<int> with = selected;
      with.push_back(i);
      add_score[i] = evaluator.evaluate(with);
      iter.candidate_scores.push_back({{i}, add_score[i]});
    }

    // Step 3: per view, the best strictly improving kernel.
    for (int f = 0; f < num_views; ++f) {
      int best = -1;
      double best_score = current;  // must beat the current score
      for (int i = 0; i < bank.size(); ++i)
        if (bank.specs[i].view == f && add_score[i] > best_score) {
          best_score = add_score[i];
          best = i;
        }
      if (best >= 0) iter.candidates.push_back(best);
    }
    if (iter.candidates.empty()) {
      iter.best_cv = current;
      trace.terminated_reason = "empty_candidates";
      trace.iterations.push_back(std::move(iter));
      break;
    }

    // Step 4: best subset of the candidates, empty subset included.
    std::vector<int> best_subset;  // empty = keep S
    double best_score = current;
    for (const auto& subset : ordered_subsets(iter.candidates)) {
      std::vector<int> with = selected;
      with.insert(with.end(), subset.begin(), subset.end());
      const double score = evaluator.evaluate(with);
      iter.subset_scores.push_back({subset, score});
      if (score > best_score) {
        best_score = score;
        best_subset = subset;
      }
    }
    if (best_subset.empty()) {
      iter.best_cv = current;
      trace.terminated_reason = "empty_best_subset";
      trace.iterations.push_back(std::move(iter));
      break;
    }

    selected.insert(selected.end(), best_subset.begin(), best_subset.end());
    std::sort(selected.begin(), selected.end());
    current = best_score;
    iter.chosen = best_subset;
    iter.best_cv = current;
    trace.iterations.push_back(std::move(iter));
  }

  trace.evaluate_calls = evaluator.evaluate_calls();
  trace.classifier_train_count = evaluator.classifier_trainings();
  trace.warnings = evaluator.warnings();
  result.selected = selected;
  return result;
}

std::string trace_to_json(const SelectionTrace& trace, const KernelBank& bank) {
  using json = nlohmann::ordered_json;
  auto spec_strings = [&bank](const std::vector<int>& idx) {
    std::vector<std::string> out;
    for (int i : idx) out.push_back(bank.specs[i].str());
    return out;
  };

  json j;
  json init;
  for (int i = 0; i < bank.size(); ++i)
    init[bank.specs[i].str()] = trace.initial_scores[i];
  j["initial_scores"] = init;
  j["initial_selection"] = spec_strings(trace.initial_selection);
  j["initial_cv"] = trace.initial_cv;
  j["iterations"] = json::array();
  for (const auto& it : trace.iterations) {
    json ji;
    ji["selected_before"] = spec_strings(it.selected_before);
    ji["candidates"] = spec_strings(it.candidates);
    json cs = json::array();
    for (const auto& s : it.candidate_scores)
      cs.push_back({{"kernels", spec_strings(s.subset)}, {"score", s.score}});
    ji["candidate_scores"] = cs;
    json ss = json::array();
    for (const auto& s : it.subset_scores)
      ss.push_back({{"kernels", spec_strings(s.subset)}, {"score", s.score}});
    ji["subset_scores"] = ss;
    ji["chosen"] = spec_strings(it.chosen);
    ji["best_cv"] = it.best_cv;
    j["iterations"].push_back(ji);
  }
  j["evaluate_calls"] = trace.evaluate_calls;
  j["classifier_train_count"] = trace.classifier_train_count;
  j["terminated_reason"] = trace.terminated_reason;
  j["warnings"] = trace.warnings;
  return j.dump(2);
}

}  // namespace hmkl
