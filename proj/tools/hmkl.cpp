#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "hmkl/config.hpp"
#include "hmkl/dataio.hpp"
#include "hmkl/features.hpp"
#include "hmkl/harness.hpp"
#include "hmkl/heuristic.hpp"
#include "hmkl/parallel.hpp"

namespace fs = std::filesystem;
using namespace hmkl;

namespace {

constexpr const char* kVersion = "hmkl 1.0";

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool emit_plots = false;
  bool no_heuristic = false;
  std::optional<double> p;
  std::optional<double> fraction;
  std::string out_dir;
};

std::string provenance_line(const RunConfig& cfg) {
  std::ostringstream os;
  os << kVersion << " config=" << std::hex << cfg.config_hash << std::dec
     << " seed=" << cfg.base_seed;
  return os.str();
}

RunConfig load_config(GlobalOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("--config is required");
  RunConfig cfg = RunConfig::from_file(ConfigFile::parse_file(opts.config_path));
  if (opts.seed) cfg.base_seed = *opts.seed;
  if (opts.p) {
    if (*opts.p < 1.0) throw ConfigError("--p must be >= 1");
    cfg.p = *opts.p;
  }
  if (opts.fraction) {
    if (!(*opts.fraction > 0.0 && *opts.fraction < 1.0))
      throw ConfigError("--fraction must lie in (0,1)");
    cfg.fractions = {*opts.fraction};
  }
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.jobs > 0) set_default_jobs(opts.jobs);
  return cfg;
}

// <class>/<image> folder tree, classes and images in lexicographic order.
std::vector<std::pair<std::string, std::string>> scan_image_tree(const std::string& root) {
  if (!fs::is_directory(root)) throw ConfigError("image folder does not exist: " + root);
  std::vector<std::pair<std::string, std::string>> out;  // (class, path)
  std::vector<std::string> classes;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) classes.push_back(e.path().filename().string());
  std::sort(classes.begin(), classes.end());
  for (const auto& cls : classes) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(fs::path(root) / cls)) {
      const std::string ext = e.path().extension().string();
      if (ext == ".png" || ext == ".tif" || ext == ".tiff")
        files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.emplace_back(cls, f);
  }
  if (out.empty()) throw ConfigError("no png/tif images under: " + root);
  return out;
}

void write_with_provenance(const std::string& path, const std::string& provenance,
                           const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "# " << provenance << "\n" << body;
}

FeatureTable load_tables(const RunConfig& cfg) {
  cfg.validate_for_tables();
  return load_feature_table(cfg.view_paths, cfg.label_path);
}

int cmd_extract(GlobalOptions& opts) {
  RunConfig cfg = load_config(opts);
  if (cfg.image_root.empty()) throw ConfigError("data.image_root is required for extract");
  const auto images = scan_image_tree(cfg.image_root);
  fs::create_directories(cfg.out_dir);
  LbpConfig lbp;

  std::optional<Codebook> codebook;
  if (!cfg.codebook_path.empty()) {
    if (!fs::exists(cfg.codebook_path))
      throw ConfigError("codebook file does not exist: " + cfg.codebook_path);
    codebook = read_codebook(cfg.codebook_path);
  }

  FeatureTable table;
  std::map<std::string, int> class_index;
  std::vector<Eigen::VectorXd> moments, bags;
  for (const auto& [cls, path] : images) {
    const Image img = read_image(path);
    moments.push_back(lbp_of_dense_moments(img, cfg.patch_size, lbp));
    if (codebook)
      bags.push_back(bag_of_dense_lbp(img, *codebook, cfg.patch_size, cfg.step, lbp));
    auto it = class_index.find(cls);
    if (it == class_index.end()) {
      it = class_index.emplace(cls, static_cast<int>(table.class_names.size())).first;
      table.class_names.push_back(cls);
    }
    table.sample_ids.push_back(fs::path(path).stem().string() + "_" + cls);
    table.labels.push_back(it->second);
  }

  auto stack = [](const std::vector<Eigen::VectorXd>& rows) {
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(i) = rows[i].transpose();
    return m;
  };
  table.views.push_back(stack(moments));
  table.view_names.push_back("lbp_moments");
  if (codebook) {
    table.views.push_back(stack(bags));
    table.view_names.push_back("bag_of_lbp");
  }
  table.validate();

  const std::string prov = provenance_line(cfg);
  for (int f = 0; f < table.num_views(); ++f) {
    const std::string path = cfg.out_dir + "/" + table.view_names[f] + ".csv";
    std::ostringstream body;
    {
      const std::string tmp = path + ".tmp";
      write_view_csv(tmp, table, f);
      std::ifstream in(tmp);
      body << in.rdbuf();
      fs::remove(tmp);
    }
    write_with_provenance(path, prov, body.str());
    std::cout << "wrote " << path << "\n";
  }
  {
    const std::string path = cfg.out_dir + "/labels.csv";
    const std::string tmp = path + ".tmp";
    write_label_csv(tmp, table);
    std::ifstream in(tmp);
    std::ostringstream body;
    body << in.rdbuf();
    fs::remove(tmp);
    write_with_provenance(path, prov, body.str());
    std::cout << "wrote " << path << "\n";
  }
  return 0;
}

int cmd_codebook(GlobalOptions& opts) {
  RunConfig cfg = load_config(opts);
  if (cfg.image_root.empty()) throw ConfigError("data.image_root is required for codebook");
  const auto images = scan_image_tree(cfg.image_root);
  LbpConfig lbp;
  std::vector<Eigen::MatrixXd> chunks;
  Eigen::Index total = 0, dim = 0;
  for (const auto& [cls, path] : images) {
    const Image img = read_image(path);
    chunks.push_back(dense_lbp_descriptors(img, cfg.patch_size, cfg.step, lbp));
    total += chunks.back().rows();
    dim = chunks.back().cols();
  }
  Eigen::MatrixXd all(total, dim);
  Eigen::Index at = 0;
  for (const auto& c : chunks) {
    all.middleRows(at, c.rows()) = c;
    at += c.rows();
  }
  const Codebook cb = build_codebook(all, cfg.codebook_size, cfg.codebook_seed);
  fs::create_directories(cfg.out_dir);
  const std::string path = cfg.codebook_path.empty() ? cfg.out_dir + "/codebook.csv"
                                                     : cfg.codebook_path;
  write_codebook(path, cb);
  std::cout << "wrote " << path << " (k=" << cb.centers.rows()
            << ", inertia=" << cb.inertia << ")\n";
  return 0;
}

// Shared setup for select/train/predict: normalized table, split, bank.
struct TrainingSetup {
  FeatureTable table;  // L2-normalized full table
  SplitManifest split;
  FeatureTable train_table;
  FoldAssignment folds;
  KernelBank bank;
};

TrainingSetup make_setup(const RunConfig& cfg) {
  TrainingSetup s;
  s.table = load_tables(cfg);
  l2_normalize_table(s.table);
  const double fraction = cfg.fractions.empty() ? 0.1 : cfg.fractions.front();
  s.split = stratified_split(s.table, fraction, cfg.base_seed);
  s.train_table = s.table.subset(s.split.train_indices);
  s.folds = make_folds(s.split, s.table, cfg.cv_folds, cfg.base_seed);
  s.bank = build_bank(s.train_table, cfg.rbf_gammas, cfg.chi2_gammas);
  normalize_by_hilbert_std(s.bank, cfg.norm_mode);
  return s;
}

int cmd_select(GlobalOptions& opts) {
  RunConfig cfg = load_config(opts);
  TrainingSetup s = make_setup(cfg);
  fs::create_directories(cfg.out_dir);
  const std::string prov = provenance_line(cfg);

  std::vector<int> all_indices(s.bank.size());
  for (int i = 0; i < s.bank.size(); ++i) all_indices[i] = i;
  const double C =
      select_C(s.bank, all_indices, s.train_table.labels, s.table.num_classes(),
               s.folds, cfg.C_grid, opts.no_heuristic ? cfg.p : 2.0, cfg.svm_tol);

  std::vector<int> selected;
  if (opts.no_heuristic) {
    selected = all_indices;
    MulticlassModel model =
        train_one_vs_all(s.bank, selected, s.train_table.labels, s.table.class_names,
                         C, cfg.p, cfg.svm_tol);
    std::ostringstream body;
    write_multiclass_model(body, model);
    write_with_provenance(cfg.out_dir + "/model.txt", prov, body.str());
    std::cout << "wrote " << cfg.out_dir << "/model.txt (all " << s.bank.size()
              << " kernels, p=" << cfg.p << ", C=" << C << ")\n";
  } else {
    SelectionContext ctx;
    ctx.bank = &s.bank;
    ctx.labels = s.train_table.labels;
    ctx.num_classes = s.table.num_classes();
    ctx.folds = s.folds;
    ctx.C = C;
    ctx.p = 2.0;
    ctx.svm_tol = cfg.svm_tol;
    const SelectionResult result = select_kernels(ctx);
    selected = result.selected;
    write_with_provenance(cfg.out_dir + "/trace.json", prov,
                          trace_to_json(result.trace, s.bank) + "\n");
    std::cout << "wrote " << cfg.out_dir << "/trace.json ("
              << result.trace.evaluate_calls << " evaluations, reason: "
              << result.trace.terminated_reason << ")\n";
  }

  std::ostringstream specs;
  for (int i : selected) specs << s.bank.specs[i].str() << "\n";
  write_with_provenance(cfg.out_dir + "/selected_specs.txt", prov, specs.str());
  std::cout << "wrote " << cfg.out_dir << "/selected_specs.txt (" << selected.size()
            << " kernels, C=" << C << ")\n";
  return 0;
}

std::vector<int> read_spec_file(const std::string& path, const KernelBank& bank) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file: " + path);
  std::vector<int> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const int idx = bank.find(KernelSpec::parse(line));
    if (idx < 0) throw ConfigError("spec not present in the bank: " + line);
    out.push_back(idx);
  }
  if (out.empty()) throw ConfigError("spec file selects no kernels: " + path);
  return out;
}

int cmd_train(GlobalOptions& opts, const std::string& specs_path) {
  RunConfig cfg = load_config(opts);
  TrainingSetup s = make_setup(cfg);
  fs::create_directories(cfg.out_dir);

  std::vector<int> indices;
  if (specs_path.empty()) {
    indices.resize(s.bank.size());
    for (int i = 0; i < s.bank.size(); ++i) indices[i] = i;
  } else {
    indices = read_spec_file(specs_path, s.bank);
  }
  const double C =
      select_C(s.bank, indices, s.train_table.labels, s.table.num_classes(), s.folds,
               cfg.C_grid, cfg.p, cfg.svm_tol);
  MulticlassModel model =
      train_one_vs_all(s.bank, indices, s.train_table.labels, s.table.class_names, C,
                       cfg.p, cfg.svm_tol);
  std::ostringstream body;
  write_multiclass_model(body, model);
  write_with_provenance(cfg.out_dir + "/model.txt", provenance_line(cfg), body.str());

  std::ostringstream manifest;
  {
    const std::string tmp = cfg.out_dir + "/split.csv.tmp";
    write_split_manifest(tmp, s.split, s.table);
    std::ifstream in(tmp);
    manifest << in.rdbuf();
    fs::remove(tmp);
  }
  std::ofstream mout(cfg.out_dir + "/split.csv");
  mout << manifest.str();
  std::cout << "wrote " << cfg.out_dir << "/model.txt and split.csv (C=" << C << ")\n";
  return 0;
}

int cmd_predict(GlobalOptions& opts, const std::string& model_path,
                const std::string& split_path) {
  RunConfig cfg = load_config(opts);
  FeatureTable table = load_tables(cfg);
  l2_normalize_table(table);
  std::ifstream min(model_path);
  if (!min) throw ConfigError("cannot open model file: " + model_path);
  MulticlassModel model = read_multiclass_model(min);
  SplitManifest split = read_split_manifest(split_path, table);
  FeatureTable train_table = table.subset(split.train_indices);
  FeatureTable test_table = table.subset(split.test_indices);

  std::vector<Eigen::MatrixXd> cross;
  for (std::size_t m = 0; m < model.specs.size(); ++m) {
    const KernelSpec& spec = model.specs[m];
    if (spec.view >= table.num_views())
      throw ConfigError("model references view " + std::to_string(spec.view) +
                        " not present in the data");
    cross.push_back(cross_gram_matrix(spec, test_table.views[spec.view],
                                      train_table.views[spec.view]) /
                    model.scales[m]);
  }
  const std::vector<int> predicted = predict_multiclass(model, cross);

  fs::create_directories(cfg.out_dir);
  std::ostringstream body;
  body << "id,predicted\n";
  for (std::size_t i = 0; i < predicted.size(); ++i)
    body << test_table.sample_ids[i] << "," << model.class_names[predicted[i]] << "\n";
  write_with_provenance(cfg.out_dir + "/predictions.csv", provenance_line(cfg), body.str());
  std::cout << "wrote " << cfg.out_dir << "/predictions.csv ("
            << 100.0 * accuracy(predicted, test_table.labels) << "% on held-out labels)\n";
  return 0;
}

int cmd_benchmark(GlobalOptions& opts) {
  RunConfig cfg = load_config(opts);
  FeatureTable table = load_tables(cfg);
  fs::create_directories(cfg.out_dir);

  BenchmarkOptions bopts;
  bopts.methods = cfg.methods;
  if (opts.no_heuristic)
    std::erase(bopts.methods, Method::heuristic_mkl);
  bopts.fractions = cfg.fractions;
  bopts.repetitions = cfg.repetitions;
  bopts.base_seed = cfg.base_seed;
  bopts.C_grid = cfg.C_grid;
  bopts.rbf_gammas = cfg.rbf_gammas;
  bopts.chi2_gammas = cfg.chi2_gammas;
  bopts.cv_folds = cfg.cv_folds;
  bopts.mkl_p = cfg.p;
  bopts.norm_mode = cfg.norm_mode;
  bopts.svm_tol = cfg.svm_tol;
  bopts.emit_plots = opts.emit_plots;
  bopts.cache_dir = cfg.out_dir + "/cache";

  const BenchmarkReport report = run_benchmark(table, bopts);
  const std::string prov = provenance_line(cfg);
  {
    std::ofstream out(cfg.out_dir + "/report.json");
    write_report_json(out, report, prov);
  }
  {
    std::ofstream out(cfg.out_dir + "/report.csv");
    write_report_csv(out, report, prov);
  }
  std::cout << "wrote " << cfg.out_dir << "/report.json and report.csv\n";

  if (opts.emit_plots) {
    for (const auto& cell : report.cells) {
      if (cell.method != Method::heuristic_mkl) continue;
      std::ostringstream frac;
      frac << cell.fraction;
      {
        std::ofstream out(cfg.out_dir + "/iterations_f" + frac.str() + ".csv");
        write_iteration_csv(out, cell, prov);
      }
      {
        std::ofstream out(cfg.out_dir + "/weights_f" + frac.str() + ".csv");
        write_weights_csv(out, cell, report.class_names, prov);
      }
      std::cout << "wrote plot data for fraction " << cell.fraction << "\n";
    }
  }
  return 0;
}

int cmd_report(GlobalOptions& opts, const std::string& report_path) {
  RunConfig cfg = load_config(opts);
  std::ifstream in(report_path);
  if (!in) throw ConfigError("cannot open report: " + report_path);
  nlohmann::json j = nlohmann::json::parse(in);

  // Rebuild the CSV table from the stored per-repetition accuracies.
  fs::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir + "/report.csv");
  out << "# " << provenance_line(cfg) << "\n";
  std::vector<double> fractions;
  for (const auto& cell : j.at("cells"))
    if (std::find(fractions.begin(), fractions.end(), cell.at("fraction").get<double>()) ==
        fractions.end())
      fractions.push_back(cell.at("fraction").get<double>());
  out << "method";
  for (double f : fractions) out << "," << f;
  out << "\n";
  std::vector<std::string> methods;
  for (const auto& cell : j.at("cells")) {
    const std::string m = cell.at("method").get<std::string>();
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
  }
  for (const auto& m : methods) {
    out << m;
    for (double f : fractions) {
      bool found = false;
      for (const auto& cell : j.at("cells"))
        if (cell.at("method") == m && cell.at("fraction").get<double>() == f) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.2f (±%.2f)",
                        100.0 * cell.at("mean_accuracy").get<double>(),
                        100.0 * cell.at("std_accuracy").get<double>());
          out << "," << buf;
          found = true;
          break;
        }
      if (!found) out << ",";
    }
    out << "\n";
  }
  std::cout << "wrote " << cfg.out_dir << "/report.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heuristic multiple kernel learning toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "configuration file");
  app.add_option("--seed", opts.seed, "override the base seed");
  app.add_option("--jobs", opts.jobs, "worker thread cap");
  app.add_flag("--emit-plots", opts.emit_plots, "write iteration/weight plot data");
  app.add_flag("--no-heuristic", opts.no_heuristic, "skip greedy selection");
  app.add_option("--p", opts.p, "MKL norm parameter");
  app.add_option("--fraction", opts.fraction, "train fraction override");
  app.add_option("--out", opts.out_dir, "output directory override");

  auto* extract = app.add_subcommand("extract", "compute descriptor views from images");
  auto* codebook = app.add_subcommand("codebook", "build the bag-of-LBP codebook");
  auto* select = app.add_subcommand("select", "run greedy kernel selection");
  auto* train = app.add_subcommand("train", "train a one-vs-all model");
  std::string specs_path;
  train->add_option("--specs", specs_path, "kernel spec list (from select)");
  auto* predict = app.add_subcommand("predict", "predict with a trained model");
  std::string model_path, split_path;
  predict->add_option("--model", model_path, "model file")->required();
  predict->add_option("--split", split_path, "split manifest")->required();
  auto* benchmark = app.add_subcommand("benchmark", "run the repeated-split protocol");
  auto* report = app.add_subcommand("report", "regenerate the CSV table from a JSON report");
  std::string report_path;
  report->add_option("--input", report_path, "report.json path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (extract->parsed()) return cmd_extract(opts);
    if (codebook->parsed()) return cmd_codebook(opts);
    if (select->parsed()) return cmd_select(opts);
    if (train->parsed()) return cmd_train(opts, specs_path);
    if (predict->parsed()) return cmd_predict(opts, model_path, split_path);
    if (benchmark->parsed()) return cmd_benchmark(opts);
    if (report->parsed()) return cmd_report(opts, report_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
