#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "hmkl/image.hpp"

namespace hmkl {

// Circular LBP with uniform rotation-invariant coding: codes with at most
// two 0/1 transitions map to their bit count (samples+1 bins), everything
// else to one extra bin.
struct LbpConfig {
  int radius = 2;
  int samples = 16;
  int pattern_count() const { return samples + 2; }
};

// Histogram of uniform rotation-invariant codes over all interior pixels;
// bins sum to the interior pixel count.  Off-grid neighbors are sampled
// with bilinear interpolation; the neighbor >= center rule sets the bit.
Eigen::VectorXd lbp_histogram(const Eigen::MatrixXd& matrix, const LbpConfig& config);

// Per-channel mean and std matrices over a non-overlapping w x w patch
// grid, one LBP histogram per matrix, each normalized to sum 1 and
// concatenated: dimension 3 * 2 * pattern_count (108 with the defaults).
Eigen::VectorXd lbp_of_dense_moments(const Image& image, int w, const LbpConfig& config);

struct Codebook {
  Eigen::MatrixXd centers;  // size x descriptor dimension
  std::uint64_t seed = 0;
  int iterations = 0;
  double inertia = 0.0;
};

// k-means with k-means++ seeding; stops when assignments are stable or at
// max_iter.  Deterministic in (descriptors, size, seed).
Codebook build_codebook(const Eigen::MatrixXd& descriptors, int size,
                        std::uint64_t seed, int max_iter = 100);

void write_codebook(const std::string& path, const Codebook& codebook);
Codebook read_codebook(const std::string& path);

// Patch descriptor used by the bag: per-channel LBP histograms, each
// L1-normalized, concatenated (3 * pattern_count dims).
Eigen::VectorXd lbp_patch_descriptor(const Image& image, int row, int col, int w,
                                     const LbpConfig& config);

// Dense-grid patch descriptors of one image (one row per patch position),
// the clustering input for build_codebook.
Eigen::MatrixXd dense_lbp_descriptors(const Image& image, int w, int step,
                                      const LbpConfig& config);

// Normalized histogram of nearest-center assignments (Euclidean, ties to
// the lowest index) over the dense patch grid.
Eigen::VectorXd bag_of_dense_lbp(const Image& image, const Codebook& codebook,
                                 int w, int step, const LbpConfig& config);

// Scales to unit Euclidean norm; vectors with norm below 1e-12 pass through.
Eigen::VectorXd l2_normalize(const Eigen::VectorXd& v);

}  // namespace hmkl
