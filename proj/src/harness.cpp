#include "hmkl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hmkl/parallel.hpp"

namespace hmkl {

using json = nlohmann::ordered_json;

std::string method_name(Method m) {
  switch (m) {
    case Method::single_kernel: return "single_kernel";
    case Method::concat_single_kernel: return "concat_single_kernel";
    case Method::mkl_lp: return "mkl_lp";
    case Method::heuristic_mkl: return "heuristic_mkl";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "single_kernel") return Method::single_kernel;
  if (name == "concat_single_kernel") return Method::concat_single_kernel;
  if (name == "mkl_lp") return Method::mkl_lp;
  if (name == "heuristic_mkl") return Method::heuristic_mkl;
  throw std::runtime_error("unknown method: " + name);
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<Eigen::MatrixXd> grams_for(const KernelBank& bank,
                                       const std::vector<int>& kernel_indices) {
  std::vector<Eigen::MatrixXd> out;
  for (int i : kernel_indices) out.push_back(bank.grams[i]);
  return out;
}

std::vector<Eigen::MatrixXd> cross_grams_for(const KernelBank& bank,
                                             const std::vector<int>& kernel_indices,
                                             const FeatureTable& eval_table,
                                             const FeatureTable& train_table) {
  std::vector<Eigen::MatrixXd> out;
  for (int i : kernel_indices) {
    const KernelSpec& s = bank.specs[i];
    out.push_back(cross_gram_matrix(s, eval_table.views[s.view],
                                    train_table.views[s.view]) /
                  bank.scales[i]);
  }
  return out;
}

// Single-view table holding the concatenation of all views.
FeatureTable concat_views(const FeatureTable& table) {
  FeatureTable out;
  out.sample_ids = table.sample_ids;
  out.labels = table.labels;
  out.class_names = table.class_names;
  Eigen::Index total = 0;
  for (const auto& v : table.views) total += v.cols();
  Eigen::MatrixXd all(table.num_samples(), total);
  Eigen::Index at = 0;
  for (const auto& v : table.views) {
    all.middleCols(at, v.cols()) = v;
    at += v.cols();
  }
  out.views.push_back(std::move(all));
  out.view_names.push_back("concat");
  return out;
}

}  // namespace

MulticlassModel train_one_vs_all(const KernelBank& bank,
                                 const std::vector<int>& kernel_indices,
                                 const std::vector<int>& labels,
                                 const std::vector<std::string>& class_names,
                                 double C, double p, double svm_tol) {
  const int num_classes = static_cast<int>(class_names.size());
  if (num_classes < 2) throw std::runtime_error("need at least 2 classes");
  for (int c = 0; c < num_classes; ++c)
    if (std::find(labels.begin(), labels.end(), c) == labels.end())
      throw std::runtime_error("class '" + class_names[c] +
                               "' absent from training data");

  MulticlassModel model;
  model.class_names = class_names;
  model.C = C;
  model.p = p;
  for (int i : kernel_indices) {
    model.specs.push_back(bank.specs[i]);
    model.scales.push_back(bank.scales[i]);
  }

  const auto grams = grams_for(bank, kernel_indices);
  model.models.resize(num_classes);
  parallel_for(num_classes, [&](std::size_t c) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      y[i] = labels[i] == static_cast<int>(c) ? 1 : -1;
    model.models[c] =
        train_lp_mkl(model.specs, grams, y, C, p, 1e-4, 100, svm_tol);
  });
  return model;
}

std::vector<int> predict_multiclass(const MulticlassModel& model,
                                    const std::vector<Eigen::MatrixXd>& cross_grams) {
  const int num_classes = static_cast<int>(model.models.size());
  std::vector<Eigen::VectorXd> decisions(num_classes);
  for (int c = 0; c < num_classes; ++c)
    decisions[c] = predict_mkl(model.models[c], cross_grams);

  const Eigen::Index n = decisions.empty() ? 0 : decisions[0].size();
  std::vector<int> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
      if (decisions[c][i] > decisions[best][i]) best = c;
    out[i] = best;
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size())
    throw std::runtime_error("prediction/label count mismatch");
  if (predicted.empty()) return 0.0;
  long correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    correct += predicted[i] == truth[i];
  return static_cast<double>(correct) / predicted.size();
}

double cv_accuracy(const KernelBank& bank, const std::vector<int>& kernel_indices,
                   const std::vector<int>& labels, int num_classes,
                   const FoldAssignment& folds, double C, double p, double svm_tol) {
  SelectionContext ctx;
  ctx.bank = &bank;
  ctx.labels = labels;
  ctx.num_classes = num_classes;
  ctx.folds = folds;
  ctx.C = C;
  ctx.p = p;
  ctx.svm_tol = svm_tol;
  SetEvaluator evaluator(ctx);
  return evaluator.evaluate(kernel_indices);
}

double select_C(const KernelBank& bank, const std::vector<int>& kernel_indices,
                const std::vector<int>& labels, int num_classes,
                const FoldAssignment& folds, const std::vector<double>& C_grid,
                double p, double svm_tol) {
  if (C_grid.empty()) throw std::runtime_error("empty C grid");
  std::vector<double> grid = C_grid;
  std::sort(grid.begin(), grid.end());
  double best_c = grid.front();
  double best_score = -1.0;
  for (double c : grid) {
    const double score =
        cv_accuracy(bank, kernel_indices, labels, num_classes, folds, c, p, svm_tol);
    if (score > best_score) {  // ties keep the smaller C
      best_score = score;
      best_c = c;
    }
  }
  return best_c;
}

SingleKernelChoice select_single_kernel(const KernelBank& bank,
                                        const std::vector<int>& labels,
                                        int num_classes, const FoldAssignment& folds,
                                        const std::vector<double>& C_grid,
                                        double svm_tol) {
  if (C_grid.empty()) throw std::runtime_error("empty C grid");
  std::vector<double> grid = C_grid;
  std::sort(grid.begin(), grid.end());
  SingleKernelChoice best;
  best.cv_score = -1.0;
  for (int i = 0; i < bank.size(); ++i) {
    for (double c : grid) {
      const double score =
          cv_accuracy(bank, {i}, labels, num_classes, folds, c, 2.0, svm_tol);
      if (score > best.cv_score) {
        best = {i, c, score};
      }
    }
  }
  return best;
}

void l2_normalize_table(FeatureTable& table) {
  for (auto& view : table.views)
    for (Eigen::Index r = 0; r < view.rows(); ++r) {
      const double norm = view.row(r).norm();
      if (norm >= 1e-12) view.row(r) /= norm;
    }
}

std::vector<double> report_weights(const MklModel& model, const KernelBank& bank,
                                   const std::vector<int>& kernel_indices) {
  // The trained Gram K'_m relates to the Zien-Ong normalized one by
  // K'_m = hilbert_variance(K'_m) * K^zo_m, so the comparable weight is
  // beta_m * hilbert_variance(K'_m) (identically beta under the default
  // variance normalization).
  std::vector<double> out;
  for (std::size_t m = 0; m < kernel_indices.size(); ++m)
    out.push_back(model.betas[m] * hilbert_variance(bank.grams[kernel_indices[m]]));
  return out;
}

namespace {

RepetitionResult run_repetition(const FeatureTable& norm_table, Method method,
                                double fraction, std::uint64_t seed,
                                const BenchmarkOptions& options) {
  RepetitionResult rep;
  const SplitManifest split = stratified_split(norm_table, fraction, seed);
  const FeatureTable train_table = norm_table.subset(split.train_indices);
  const FeatureTable test_table = norm_table.subset(split.test_indices);
  const FoldAssignment folds = make_folds(split, norm_table, options.cv_folds, seed);
  const std::vector<int>& labels = train_table.labels;
  const int num_classes = norm_table.num_classes();

  const bool concat = method == Method::concat_single_kernel;
  const FeatureTable& bank_train = concat ? concat_views(train_table) : train_table;
  const FeatureTable& bank_test = concat ? concat_views(test_table) : test_table;

  KernelBank bank = build_bank(bank_train, options.rbf_gammas, options.chi2_gammas);
  normalize_by_hilbert_std(bank, options.norm_mode);

  std::vector<int> all_indices(bank.size());
  for (int i = 0; i < bank.size(); ++i) all_indices[i] = i;

  MulticlassModel model;
  std::vector<int> model_indices;
  switch (method) {
    case Method::single_kernel:
    case Method::concat_single_kernel: {
      const SingleKernelChoice choice = select_single_kernel(
          bank, labels, num_classes, folds, options.C_grid, options.svm_tol);
      model_indices = {choice.kernel_index};
      model = train_one_vs_all(bank, model_indices, labels, norm_table.class_names,
                               choice.C, 2.0, options.svm_tol);
      break;
    }
    case Method::mkl_lp: {
      const double C = select_C(bank, all_indices, labels, num_classes, folds,
                                options.C_grid, options.mkl_p, options.svm_tol);
      model_indices = all_indices;
      model = train_one_vs_all(bank, model_indices, labels, norm_table.class_names,
                               C, options.mkl_p, options.svm_tol);
      break;
    }
    case Method::heuristic_mkl: {
      const double C = select_C(bank, all_indices, labels, num_classes, folds,
                                options.C_grid, 2.0, options.svm_tol);
      SelectionContext ctx;
      ctx.bank = &bank;
      ctx.labels = labels;
      ctx.num_classes = num_classes;
      ctx.folds = folds;
      ctx.C = C;
      ctx.p = 2.0;
      ctx.svm_tol = options.svm_tol;
      const SelectionResult selection = select_kernels(ctx);
      model_indices = selection.selected;
      model = train_one_vs_all(bank, model_indices, labels, norm_table.class_names,
                               C, 2.0, options.svm_tol);
      for (int i : model_indices) rep.selected_specs.push_back(bank.specs[i].str());

      // Test accuracy after the initial selection and after each growth
      // step (the iteration curve of the selection procedure).
      std::vector<std::vector<int>> stages;
      stages.push_back(selection.trace.initial_selection);
      for (const auto& it : selection.trace.iterations) {
        if (it.chosen.empty()) continue;
        std::vector<int> s = stages.back();
        s.insert(s.end(), it.chosen.begin(), it.chosen.end());
        std::sort(s.begin(), s.end());
        stages.push_back(std::move(s));
      }
      for (const auto& stage : stages) {
        MulticlassModel m = train_one_vs_all(bank, stage, labels,
                                             norm_table.class_names, C, 2.0,
                                             options.svm_tol);
        const auto cross = cross_grams_for(bank, stage, bank_test, bank_train);
        rep.iteration_accuracies.push_back(
            accuracy(predict_multiclass(m, cross), test_table.labels));
      }

      for (int i = 0; i < bank.size(); ++i)
        rep.weight_specs.push_back(bank.specs[i].str());
      for (int c = 0; c < num_classes; ++c) {
        const auto w = report_weights(model.models[c], bank, model_indices);
        std::vector<double> full(bank.size(), 0.0);
        for (std::size_t m = 0; m < model_indices.size(); ++m)
          full[model_indices[m]] = w[m];
        rep.class_weights.push_back(std::move(full));
      }
      break;
    }
  }

  const auto cross = cross_grams_for(bank, model_indices, bank_test, bank_train);
  rep.test_accuracy = accuracy(predict_multiclass(model, cross), test_table.labels);
  return rep;
}

std::string cache_path(const std::string& dir, Method method, double fraction,
                       int repetition, std::uint64_t base_seed) {
  std::ostringstream name;
  name << dir << "/rep_" << method_name(method) << "_f" << fraction << "_s"
       << base_seed << "_r" << repetition << ".json";
  return name.str();
}

bool load_cached_repetition(const std::string& path, RepetitionResult& rep) {
  std::ifstream in(path);
  if (!in) return false;
  try {
    json j = json::parse(in);
    rep.test_accuracy = j.at("test_accuracy").get<double>();
    rep.iteration_accuracies =
        j.value("iteration_accuracies", std::vector<double>{});
    rep.weight_specs = j.value("weight_specs", std::vector<std::string>{});
    rep.class_weights =
        j.value("class_weights", std::vector<std::vector<double>>{});
    rep.selected_specs = j.value("selected_specs", std::vector<std::string>{});
    rep.error = j.value("error", std::string{});
    return true;
  } catch (const json::exception&) {
    return false;
  }
}

void store_cached_repetition(const std::string& path, const RepetitionResult& rep) {
  json j;
  j["test_accuracy"] = rep.test_accuracy;
  j["iteration_accuracies"] = rep.iteration_accuracies;
  j["weight_specs"] = rep.weight_specs;
  j["class_weights"] = rep.class_weights;
  j["selected_specs"] = rep.selected_specs;
  j["error"] = rep.error;
  std::ofstream out(path);
  if (out) out << j.dump(2) << "\n";
}

}  // namespace

BenchmarkReport run_benchmark(const FeatureTable& table, const BenchmarkOptions& options) {
  if (options.repetitions < 1) throw std::runtime_error("repetitions must be >= 1");
  for (double f : options.fractions)
    if (!(f > 0.0 && f < 1.0))
      throw std::runtime_error("train fractions must lie in (0,1)");

  FeatureTable norm_table = table;
  l2_normalize_table(norm_table);

  if (!options.cache_dir.empty())
    std::filesystem::create_directories(options.cache_dir);

  BenchmarkReport report;
  report.options = options;
  report.class_names = table.class_names;

  for (Method method : options.methods) {
    for (double fraction : options.fractions) {
      BenchmarkCell cell;
      cell.method = method;
      cell.fraction = fraction;
      for (int r = 0; r < options.repetitions; ++r) {
        RepetitionResult rep;
        std::string path;
        if (!options.cache_dir.empty()) {
          path = cache_path(options.cache_dir, method, fraction, r, options.base_seed);
          if (load_cached_repetition(path, rep)) {
            cell.repetitions.push_back(std::move(rep));
            continue;
          }
        }
        try {
          rep = run_repetition(norm_table, method, fraction,
                               options.base_seed + static_cast<std::uint64_t>(r),
                               options);
        } catch (const std::exception& e) {
          rep = RepetitionResult{};
          rep.error = e.what();
        }
        if (!path.empty()) store_cached_repetition(path, rep);
        cell.repetitions.push_back(std::move(rep));
      }

      double sum = 0.0;
      int n = 0;
      for (const auto& rep : cell.repetitions)
        if (rep.error.empty()) {
          sum += rep.test_accuracy;
          ++n;
        }
      cell.mean_accuracy = n > 0 ? sum / n : 0.0;
      double ss = 0.0;
      for (const auto& rep : cell.repetitions)
        if (rep.error.empty()) ss += (rep.test_accuracy - cell.mean_accuracy) *
                                     (rep.test_accuracy - cell.mean_accuracy);
      cell.std_accuracy = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;

      if (method == Method::heuristic_mkl) {
        for (const auto& rep : cell.repetitions)
          if (rep.error.empty() && !rep.weight_specs.empty()) {
            report.spec_strings = rep.weight_specs;
            break;
          }
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

void write_report_json(std::ostream& out, const BenchmarkReport& report,
                       const std::string& provenance) {
  json j;
  j["provenance"] = provenance;
  json cfg;
  cfg["repetitions"] = report.options.repetitions;
  cfg["base_seed"] = report.options.base_seed;
  cfg["fractions"] = report.options.fractions;
  cfg["C_grid"] = report.options.C_grid;
  cfg["rbf_gammas"] = report.options.rbf_gammas;
  cfg["chi2_gammas"] = report.options.chi2_gammas;
  cfg["cv_folds"] = report.options.cv_folds;
  cfg["mkl_p"] = report.options.mkl_p;
  cfg["stratified_splits"] = true;  // assumed; see README
  j["config"] = cfg;
  j["class_names"] = report.class_names;
  j["cells"] = json::array();
  for (const auto& cell : report.cells) {
    json jc;
    jc["method"] = method_name(cell.method);
    jc["fraction"] = cell.fraction;
    jc["mean_accuracy"] = cell.mean_accuracy;
    jc["std_accuracy"] = cell.std_accuracy;
    jc["repetition_count"] = cell.repetitions.size();
    json reps = json::array();
    for (const auto& rep : cell.repetitions) {
      json jr;
      jr["test_accuracy"] = rep.test_accuracy;
      if (!rep.iteration_accuracies.empty())
        jr["iteration_accuracies"] = rep.iteration_accuracies;
      if (!rep.selected_specs.empty()) jr["selected_specs"] = rep.selected_specs;
      if (!rep.error.empty()) jr["error"] = rep.error;
      reps.push_back(jr);
    }
    jc["repetitions"] = reps;
    j["cells"].push_back(jc);
  }
  out << j.dump(2) << "\n";
}

void write_report_csv(std::ostream& out, const BenchmarkReport& report,
                      const std::string& provenance) {
  out << "# " << provenance << "\n";
  // Table layout: one row per method, one column per fraction.
  std::vector<double> fractions = report.options.fractions;
  out << "method";
  for (double f : fractions) out << "," << f;
  out << "\n";
  for (Method method : report.options.methods) {
    out << method_name(method);
    for (double f : fractions) {
      const BenchmarkCell* found = nullptr;
      for (const auto& cell : report.cells)
        if (cell.method == method && cell.fraction == f) found = &cell;
      if (found) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f (±%.2f)", 100.0 * found->mean_accuracy,
                      100.0 * found->std_accuracy);
        out << "," << buf;
      } else {
        out << ",";
      }
    }
    out << "\n";
  }
}

void write_iteration_csv(std::ostream& out, const BenchmarkCell& cell,
                         const std::string& provenance) {
  out << "# " << provenance << "\n";
  out << "iteration,accuracy\n";
  // Mean over repetitions; shorter curves repeat their final value.
  std::size_t max_len = 0;
  for (const auto& rep : cell.repetitions)
    if (rep.error.empty()) max_len = std::max(max_len, rep.iteration_accuracies.size());
  for (std::size_t i = 0; i < max_len; ++i) {
    double sum = 0.0;
    int n = 0;
    for (const auto& rep : cell.repetitions) {
      if (!rep.error.empty() || rep.iteration_accuracies.empty()) continue;
      const auto& curve = rep.iteration_accuracies;
      sum += i < curve.size() ? curve[i] : curve.back();
      ++n;
    }
    if (n > 0) out << i << "," << format_double(sum / n) << "\n";
  }
}

void write_weights_csv(std::ostream& out, const BenchmarkCell& cell,
                       const std::vector<std::string>& class_names,
                       const std::string& provenance) {
  out << "# " << provenance << "\n";
  out << "class,spec,beta\n";
  // Mean reported weight per (class, spec) over repetitions; specs a
  // repetition never selected contribute zero.
  std::map<std::pair<int, std::string>, std::pair<double, int>> acc;
  for (const auto& rep : cell.repetitions) {
    if (!rep.error.empty()) continue;
    for (std::size_t c = 0; c < rep.class_weights.size(); ++c)
      for (std::size_t m = 0; m < rep.weight_specs.size(); ++m) {
        auto& slot = acc[{static_cast<int>(c), rep.weight_specs[m]}];
        slot.first += rep.class_weights[c][m];
        slot.second += 1;
      }
  }
  for (const auto& [key, value] : acc)
    out << class_names[key.first] << "," << key.second << ","
        << format_double(value.first / value.second) << "\n";
}

void write_multiclass_model(std::ostream& out, const MulticlassModel& model) {
  out << "# hmkl-multiclass v1\n";
  out << "classes " << model.class_names.size() << "\n";
  out << "C " << format_double(model.C) << "\n";
  out << "p " << format_double(model.p) << "\n";
  for (std::size_t m = 0; m < model.specs.size(); ++m)
    out << "scale " << model.specs[m].str() << " " << format_double(model.scales[m])
        << "\n";
  for (std::size_t c = 0; c < model.class_names.size(); ++c) {
    out << "class " << model.class_names[c] << "\n";
    write_mkl_model(out, model.models[c]);
  }
}

MulticlassModel read_multiclass_model(std::istream& in) {
  std::string line;
  // Provenance comment lines may precede the format magic.
  for (;;) {
    if (!std::getline(in, line))
      throw std::runtime_error("not a multiclass model file");
    if (line == "# hmkl-multiclass v1") break;
    if (line.empty() || line[0] == '#') continue;
    throw std::runtime_error("not a multiclass model file");
  }
  MulticlassModel model;
  std::size_t expected_classes = 0;
  // Gather per-class blocks, then parse each through read_mkl_model.
  std::string pending_class;
  std::ostringstream block;
  auto flush = [&]() {
    if (pending_class.empty()) return;
    std::istringstream bin(block.str());
    model.class_names.push_back(pending_class);
    model.models.push_back(read_mkl_model(bin));
    block.str("");
    block.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string key;
    iss >> key;
    if (key == "classes") {
      iss >> expected_classes;
    } else if (key == "C" && pending_class.empty()) {
      iss >> model.C;
    } else if (key == "p" && pending_class.empty()) {
      iss >> model.p;
    } else if (key == "scale") {
      std::string spec_str;
      double v;
      iss >> spec_str >> v;
      model.specs.push_back(KernelSpec::parse(spec_str));
      model.scales.push_back(v);
    } else if (key == "class") {
      flush();
      iss >> pending_class;
    } else {
      block << line << "\n";
    }
  }
  flush();
  if (model.models.size() != expected_classes)
    throw std::runtime_error("multiclass model: class count mismatch");
  return model;
}

}  // namespace hmkl
