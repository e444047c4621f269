#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hmkl {

// Labeled multi-view dataset: one row per sample in every view, labels as
// class indices assigned by first appearance in the label file.
struct FeatureTable {
  std::vector<std::string> sample_ids;
  std::vector<int> labels;
  std::vector<Eigen::MatrixXd> views;  // view f: N x d_f
  std::vector<std::string> view_names;
  std::vector<std::string> class_names;  // class index -> name

  int num_samples() const { return static_cast<int>(labels.size()); }
  int num_views() const { return static_cast<int>(views.size()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  // Row subset preserving the given order.
  FeatureTable subset(std::span<const int> indices) const;

  // Sanity checks for the invariants above; throws on violation.
  void validate() const;

  std::uint64_t content_hash() const;
};

struct SplitManifest {
  std::uint64_t seed = 0;
  double train_fraction = 0.0;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
};

struct FoldAssignment {
  int k = 0;
  // fold_of[i] is the fold of manifest.train_indices[i].
  std::vector<int> fold_of;
};

FeatureTable load_feature_table(const std::vector<std::string>& view_paths,
                                const std::string& label_path);

void write_view_csv(const std::string& path, const FeatureTable& table, int view);
void write_label_csv(const std::string& path, const FeatureTable& table);

// Stratified per class: train count = round-half-up(fraction * class size),
// clamped so both sides are non-empty.  Deterministic in (table order,
// fraction, seed).
SplitManifest stratified_split(const FeatureTable& table, double fraction,
                               std::uint64_t seed);

// Stratified folds over the train indices; classes with fewer than k train
// samples are spread over the first (class size) folds.
FoldAssignment make_folds(const SplitManifest& manifest, const FeatureTable& table,
                          int k, std::uint64_t seed);

void write_split_manifest(const std::string& path, const SplitManifest& manifest,
                          const FeatureTable& table);
SplitManifest read_split_manifest(const std::string& path, const FeatureTable& table);

}  // namespace hmkl
