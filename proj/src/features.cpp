#include "hmkl/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hmkl/rng.hpp"

namespace hmkl {

namespace {

// Sampling offsets on the circle, tiny components snapped to zero so the
// sample set is exactly symmetric under 90-degree rotations.
struct SampleOffsets {
  std::vector<double> dy, dx;
};

SampleOffsets circle_offsets(const LbpConfig& config) {
  SampleOffsets off;
  for (int s = 0; s < config.samples; ++s) {
    const double angle = 2.0 * std::numbers::pi * s / config.samples;
    double dx = config.radius * std::cos(angle);
    double dy = -config.radius * std::sin(angle);
    if (std::abs(dx) < 1e-9) dx = 0.0;
    if (std::abs(dy) < 1e-9) dy = 0.0;
    off.dx.push_back(dx);
    off.dy.push_back(dy);
  }
  return off;
}

double bilinear(const Eigen::MatrixXd& m, double y, double x) {
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0, fx = x - x0;
  if (fy == 0.0 && fx == 0.0) return m(y0, x0);
  const int y1 = std::min<int>(y0 + 1, static_cast<int>(m.rows()) - 1);
  const int x1 = std::min<int>(x0 + 1, static_cast<int>(m.cols()) - 1);
  return (1 - fy) * ((1 - fx) * m(y0, x0) + fx * m(y0, x1)) +
         fy * ((1 - fx) * m(y1, x0) + fx * m(y1, x1));
}

}  // namespace

Eigen::VectorXd lbp_histogram(const Eigen::MatrixXd& matrix, const LbpConfig& config) {
  const int support = 2 * config.radius + 1;
  if (matrix.rows() < support || matrix.cols() < support)
    throw std::runtime_error("matrix smaller than the LBP support (" +
                             std::to_string(support) + "x" + std::to_string(support) + ")");
  const SampleOffsets off = circle_offsets(config);
  const int p = config.samples;

  Eigen::VectorXd hist = Eigen::VectorXd::Zero(config.pattern_count());
  for (int y = config.radius; y < matrix.rows() - config.radius; ++y) {
    for (int x = config.radius; x < matrix.cols() - config.radius; ++x) {
      const double center = matrix(y, x);
      unsigned code = 0;
      for (int s = 0; s < p; ++s)
        if (bilinear(matrix, y + off.dy[s], x + off.dx[s]) >= center)
          code |= 1u << s;
      // Circular 0/1 transition count decides uniformity.
      int transitions = 0;
      for (int s = 0; s < p; ++s) {
        const unsigned a = (code >> s) & 1u;
        const unsigned b = (code >> ((s + 1) % p)) & 1u;
        transitions += a != b;
      }
      const int bin = transitions <= 2 ? std::popcount(code) : p + 1;
      hist[bin] += 1.0;
    }
  }
  return hist;
}

Eigen::VectorXd lbp_of_dense_moments(const Image& image, int w, const LbpConfig& config) {
  if (w < 1) throw std::runtime_error("patch size must be positive");
  const int gh = image.height() / w;
  const int gw = image.width() / w;
  const int support = 2 * config.radius + 1;
  if (gh < support || gw < support)
    throw std::runtime_error("moment grid " + std::to_string(gh) + "x" +
                             std::to_string(gw) + " smaller than the LBP support");

  Eigen::VectorXd out(3 * 2 * config.pattern_count());
  int pos = 0;
  for (int c = 0; c < 3; ++c) {
    const Eigen::MatrixXd& channel = image.channel(c);
    Eigen::MatrixXd means(gh, gw), stds(gh, gw);
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx) {
        auto patch = channel.block(gy * w, gx * w, w, w);
        const double mean = patch.mean();
        means(gy, gx) = mean;
        stds(gy, gx) = std::sqrt((patch.array() - mean).square().mean());
      }
    for (const Eigen::MatrixXd* m : {&means, &stds}) {
      Eigen::VectorXd h = lbp_histogram(*m, config);
      const double sum = h.sum();
      if (sum > 0) h /= sum;
      out.segment(pos, h.size()) = h;
      pos += static_cast<int>(h.size());
    }
  }
  return out;
}

Codebook build_codebook(const Eigen::MatrixXd& descriptors, int size,
                        std::uint64_t seed, int max_iter) {
  const Eigen::Index n = descriptors.rows();
  if (n < size)
    throw std::runtime_error("fewer descriptors (" + std::to_string(n) +
                             ") than clusters (" + std::to_string(size) + ")");
  Codebook cb;
  cb.seed = seed;
  Rng rng(seed);

  // k-means++ seeding.
  Eigen::MatrixXd centers(size, descriptors.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  centers.row(0) = descriptors.row(rng.uniform_below(n));
  for (int k = 1; k < size; ++k) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (descriptors.row(i) - centers.row(k - 1)).squaredNorm());
      total += d2[i];
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform01() * total, acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) { pick = i; break; }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_below(n));
    }
    centers.row(k) = descriptors.row(pick);
  }

  std::vector<int> assign(n, -1);
  double inertia = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    cb.iterations = iter + 1;
    bool changed = false;
    inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (descriptors.row(i) - centers.row(0)).squaredNorm();
      for (int k = 1; k < size; ++k) {
        const double d = (descriptors.row(i) - centers.row(k)).squaredNorm();
        if (d < best_d) { best_d = d; best = k; }
      }
      if (assign[i] != best) { assign[i] = best; changed = true; }
      inertia += best_d;
    }
    if (!changed && iter > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(size, descriptors.cols());
    std::vector<int> counts(size, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += descriptors.row(i);
      ++counts[assign[i]];
    }
    for (int k = 0; k < size; ++k) {
      if (counts[k] > 0) {
        centers.row(k) = sums.row(k) / counts[k];
      } else {
        // Re-seed an empty cluster with the point farthest from its center.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = (descriptors.row(i) - centers.row(assign[i])).squaredNorm();
          if (d > far_d) { far_d = d; far = i; }
        }
        centers.row(k) = descriptors.row(far);
      }
    }
  }
  cb.centers = centers;
  cb.inertia = inertia;
  return cb;
}

void write_codebook(const std::string& path, const Codebook& codebook) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write codebook: " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", codebook.inertia);
  out << "# k=" << codebook.centers.rows() << " seed=" << codebook.seed
      << " inertia=" << buf << "\n";
  for (Eigen::Index r = 0; r < codebook.centers.rows(); ++r) {
    for (Eigen::Index c = 0; c < codebook.centers.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", codebook.centers(r, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

Codebook read_codebook(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open codebook: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# k=", 0) != 0)
    throw std::runtime_error(path + ": missing codebook header");
  Codebook cb;
  {
    std::istringstream iss(line.substr(2));
    std::string tok;
    while (iss >> tok) {
      if (tok.rfind("seed=", 0) == 0) cb.seed = std::stoull(tok.substr(5));
      if (tok.rfind("inertia=", 0) == 0) cb.inertia = std::stod(tok.substr(8));
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream iss(line);
    std::string field;
    while (std::getline(iss, field, ',')) row.push_back(std::stod(field));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": ragged codebook rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty codebook");
  cb.centers.resize(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      cb.centers(r, c) = rows[r][c];
  if (!cb.centers.allFinite())
    throw std::runtime_error(path + ": non-finite codebook entries");
  return cb;
}

Eigen::VectorXd lbp_patch_descriptor(const Image& image, int row, int col, int w,
                                     const LbpConfig& config) {
  Eigen::VectorXd out(3 * config.pattern_count());
  for (int c = 0; c < 3; ++c) {
    Eigen::MatrixXd patch = image.channel(c).block(row, col, w, w);
    Eigen::VectorXd h = lbp_histogram(patch, config);
    const double sum = h.sum();
    if (sum > 0) h /= sum;
    out.segment(c * config.pattern_count(), config.pattern_count()) = h;
  }
  return out;
}

Eigen::MatrixXd dense_lbp_descriptors(const Image& image, int w, int step,
                                      const LbpConfig& config) {
  if (step < 1) throw std::runtime_error("grid step must be positive");
  if (image.height() < w || image.width() < w)
    throw std::runtime_error("image smaller than the patch size");
  std::vector<std::pair<int, int>> positions;
  for (int y = 0; y + w <= image.height(); y += step)
    for (int x = 0; x + w <= image.width(); x += step)
      positions.emplace_back(y, x);
  if (positions.empty()) throw std::runtime_error("empty patch grid");

  Eigen::MatrixXd out(positions.size(), 3 * config.pattern_count());
  for (std::size_t i = 0; i < positions.size(); ++i)
    out.row(i) =
        lbp_patch_descriptor(image, positions[i].first, positions[i].second, w, config)
            .transpose();
  return out;
}

Eigen::VectorXd bag_of_dense_lbp(const Image& image, const Codebook& codebook,
                                 int w, int step, const LbpConfig& config) {
  const Eigen::MatrixXd descriptors = dense_lbp_descriptors(image, w, step, config);
  if (descriptors.cols() != codebook.centers.cols())
    throw std::runtime_error("patch descriptor dimension does not match codebook");
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(codebook.centers.rows());
  for (Eigen::Index i = 0; i < descriptors.rows(); ++i) {
    int best = 0;
    double best_d = (descriptors.row(i) - codebook.centers.row(0)).squaredNorm();
    for (Eigen::Index k = 1; k < codebook.centers.rows(); ++k) {
      const double d = (descriptors.row(i) - codebook.centers.row(k)).squaredNorm();
      if (d < best_d) { best_d = d; best = static_cast<int>(k); }
    }
    hist[best] += 1.0;
  }
  hist /= static_cast<double>(descriptors.rows());
  return hist;
}

Eigen::VectorXd l2_normalize(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (norm < 1e-12) return v;
  return v / norm;
}

}  // namespace hmkl
