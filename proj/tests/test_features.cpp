#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "hmkl/features.hpp"
#include "hmkl/image.hpp"
#include "hmkl/rng.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace hmkl;
namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd random_texture(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(y, x) = 255.0 * rng.uniform01();
  return m;
}

Image gray_image(const Eigen::MatrixXd& m) {
  Image img;
  img.r = img.g = img.b = m;
  return img;
}

Eigen::MatrixXd rot90(const Eigen::MatrixXd& m) {
  return m.transpose().rowwise().reverse();
}

// Minimal little-endian uncompressed 8-bit TIFF, chunky layout, one strip.
void write_test_tiff(const std::string& path, const std::vector<unsigned char>& pixels,
                     std::uint16_t width, std::uint16_t height, std::uint16_t spp) {
  std::vector<unsigned char> out;
  auto u16 = [&](std::uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back(v >> 8);
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
  };
  out.push_back('I');
  out.push_back('I');
  u16(42);
  u32(8);  // IFD directly after the header
  const std::uint16_t entries = 8;
  const std::uint32_t pixel_offset = 8 + 2 + entries * 12 + 4;
  u16(entries);
  auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t value) {
    u16(tag);
    u16(type);
    u32(1);
    if (type == 3) {
      u16(static_cast<std::uint16_t>(value));
      u16(0);
    } else {
      u32(value);
    }
  };
  entry(256, 3, width);
  entry(257, 3, height);
  entry(258, 3, 8);
  entry(259, 3, 1);
  entry(273, 4, pixel_offset);
  entry(277, 3, spp);
  entry(278, 3, height);
  entry(279, 4, static_cast<std::uint32_t>(pixels.size()));
  u32(0);  // no further IFD
  out.insert(out.end(), pixels.begin(), pixels.end());
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(out.data()), out.size());
}

}  // namespace

TEST_CASE("constant matrix maps every interior pixel to the all-ones code") {
  const LbpConfig cfg;
  const Eigen::MatrixXd m = Eigen::MatrixXd::Constant(10, 12, 37.0);
  const Eigen::VectorXd h = lbp_histogram(m, cfg);
  REQUIRE(h.size() == 18);
  // neighbor >= center everywhere: 16 set bits, 0 transitions -> bin 16.
  const double interior = (10 - 2 * cfg.radius) * (12 - 2 * cfg.radius);
  CHECK(h[16] == doctest::Approx(interior));
  CHECK(h.sum() == doctest::Approx(interior));
}

TEST_CASE("histogram counts all interior pixels; 5x5 has exactly one") {
  const LbpConfig cfg;
  CHECK(cfg.pattern_count() == 18);
  const Eigen::MatrixXd m5 = random_texture(5, 5, 3);
  CHECK(lbp_histogram(m5, cfg).sum() == doctest::Approx(1.0));
  const Eigen::MatrixXd m9 = random_texture(9, 7, 4);
  CHECK(lbp_histogram(m9, cfg).sum() == doctest::Approx(5.0 * 3.0));
}

TEST_CASE("uniform-rotation-invariant coding survives a 90 degree rotation") {
  const LbpConfig cfg;
  const Eigen::MatrixXd m = random_texture(40, 40, 11);
  Eigen::VectorXd a = lbp_histogram(m, cfg);
  Eigen::VectorXd b = lbp_histogram(rot90(m), cfg);
  a /= a.sum();
  b /= b.sum();
  CHECK((a - b).cwiseAbs().sum() < 0.05);
}

TEST_CASE("histogram is translation invariant over a shared texture") {
  const LbpConfig cfg;
  const Eigen::MatrixXd big = random_texture(50, 50, 21);
  // Two windows onto the same texture: identical multiset of interior codes.
  const Eigen::MatrixXd w1 = big.block(0, 0, 40, 40);
  const Eigen::MatrixXd w2 = big.block(5, 7, 40, 40);
  Eigen::VectorXd a = lbp_histogram(w1, cfg);
  Eigen::VectorXd b = lbp_histogram(w2, cfg);
  a /= a.sum();
  b /= b.sum();
  CHECK((a - b).cwiseAbs().sum() < 0.10);  // only window borders differ
}

TEST_CASE("LBP of dense moments has 108 dimensions of unit-sum histograms") {
  const LbpConfig cfg;
  // 96x96 with w=16 gives a 6x6 moment grid, enough for the radius-2 LBP.
  const Image img = gray_image(random_texture(96, 96, 9));
  const Eigen::VectorXd f = lbp_of_dense_moments(img, 16, cfg);
  REQUIRE(f.size() == 108);
  for (int block = 0; block < 6; ++block)
    CHECK(f.segment(block * 18, 18).sum() == doctest::Approx(1.0));
  CHECK(f.minCoeff() >= 0.0);
}

TEST_CASE("dense patch grid: 256x256 with w=16, step=16 gives 256 patches") {
  const LbpConfig cfg;
  const Image img = gray_image(random_texture(256, 256, 5));
  const Eigen::MatrixXd d = dense_lbp_descriptors(img, 16, 16, cfg);
  CHECK(d.rows() == 256);
  CHECK(d.cols() == 54);
  // Each patch descriptor is three unit-sum channel histograms.
  for (int c = 0; c < 3; ++c)
    CHECK(d.row(0).segment(c * 18, 18).sum() == doctest::Approx(1.0));
}

TEST_CASE("k-means recovers the obvious 1-d clustering") {
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 0.1, 10.0, 10.1;
  const Codebook cb = build_codebook(X, 2, 1);
  Eigen::Vector2d centers(cb.centers(0, 0), cb.centers(1, 0));
  if (centers[0] > centers[1]) std::swap(centers[0], centers[1]);
  CHECK(centers[0] == doctest::Approx(0.05));
  CHECK(centers[1] == doctest::Approx(10.05));
  CHECK(cb.inertia == doctest::Approx(4 * 0.05 * 0.05));
}

TEST_CASE("k-means inertia matches the exhaustive 2-partition oracle") {
  Eigen::MatrixXd X(8, 2);
  X << 0.0, 0.1, 0.2, 0.0, 0.1, 0.3, 0.0, 0.2,
       5.0, 5.1, 5.2, 5.0, 5.1, 5.3, 5.0, 5.2;
  const Codebook cb = build_codebook(X, 2, 7);
  CHECK(cb.inertia == doctest::Approx(testing::kmeans2_oracle_inertia(X)).epsilon(1e-9));
}

TEST_CASE("k-means is deterministic in the seed") {
  const Eigen::MatrixXd X = testing::random_features(30, 4, 88);
  const Codebook a = build_codebook(X, 5, 3);
  const Codebook b = build_codebook(X, 5, 3);
  CHECK(a.centers == b.centers);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("codebook file round-trip") {
  const Eigen::MatrixXd X = testing::random_features(20, 6, 44);
  const Codebook cb = build_codebook(X, 4, 9);
  const std::string path = (fs::temp_directory_path() / "hmkl_codebook.csv").string();
  write_codebook(path, cb);
  const Codebook back = read_codebook(path);
  CHECK(back.centers == cb.centers);
  CHECK(back.seed == cb.seed);
  CHECK(back.inertia == doctest::Approx(cb.inertia).epsilon(1e-15));
}

TEST_CASE("bag of dense LBP splits evenly over a two-texture image") {
  const LbpConfig cfg;
  // Left half: checkerboard; right half: constant.
  Eigen::MatrixXd m(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      m(y, x) = x < 16 ? ((x + y) % 2 ? 255.0 : 0.0) : 128.0;
  const Image img = gray_image(m);
  const Eigen::MatrixXd d = dense_lbp_descriptors(img, 16, 16, cfg);
  REQUIRE(d.rows() == 4);

  Codebook cb;
  cb.centers.resize(2, d.cols());
  cb.centers.row(0) = 0.5 * (d.row(0) + d.row(2));  // left-column patches
  cb.centers.row(1) = 0.5 * (d.row(1) + d.row(3));
  const Eigen::VectorXd bag = bag_of_dense_lbp(img, cb, 16, 16, cfg);
  REQUIRE(bag.size() == 2);
  CHECK(bag[0] == doctest::Approx(0.5));
  CHECK(bag[1] == doctest::Approx(0.5));
  CHECK(bag.sum() == doctest::Approx(1.0));
}

TEST_CASE("bag output length equals the codebook size") {
  const LbpConfig cfg;
  const Image img = gray_image(random_texture(48, 48, 31));
  const Eigen::MatrixXd d = dense_lbp_descriptors(img, 16, 16, cfg);
  const Codebook cb = build_codebook(d, 3, 2);
  const Eigen::VectorXd bag = bag_of_dense_lbp(img, cb, 16, 16, cfg);
  CHECK(bag.size() == 3);
  CHECK(bag.sum() == doctest::Approx(1.0));
}

TEST_CASE("l2 normalization") {
  Eigen::VectorXd v(3);
  v << 3.0, 0.0, 4.0;
  CHECK(l2_normalize(v).norm() == doctest::Approx(1.0));
  CHECK(l2_normalize(v)[0] == doctest::Approx(0.6));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(l2_normalize(zero) == zero);  // passthrough below the norm floor
}

TEST_CASE("PNG round-trip preserves 8-bit RGB pixels") {
  Image img;
  img.r = random_texture(20, 17, 61).array().round();
  img.g = random_texture(20, 17, 62).array().round();
  img.b = random_texture(20, 17, 63).array().round();
  const std::string path = (fs::temp_directory_path() / "hmkl_test.png").string();
  write_png(path, img);
  const Image back = read_image(path);
  REQUIRE(back.height() == 20);
  REQUIRE(back.width() == 17);
  CHECK((back.r - img.r).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.g - img.g).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.b - img.b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uncompressed TIFF decodes gray, RGB and RGBA layouts") {
  const fs::path dir = fs::temp_directory_path();

  SUBCASE("gray replicates into all channels") {
    std::vector<unsigned char> pix = {10, 20, 30, 40, 50, 60};
    const std::string path = (dir / "hmkl_gray.tif").string();
    write_test_tiff(path, pix, 3, 2, 1);
    const Image img = read_image(path);
    REQUIRE(img.width() == 3);
    REQUIRE(img.height() == 2);
    CHECK(img.r(0, 0) == 10);
    CHECK(img.g(1, 2) == 60);
    CHECK(img.b(0, 1) == 20);
  }
  SUBCASE("RGB") {
    std::vector<unsigned char> pix = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    const std::string path = (dir / "hmkl_rgb.tiff").string();
    write_test_tiff(path, pix, 2, 2, 3);
    const Image img = read_image(path);
    CHECK(img.r(0, 1) == 4);
    CHECK(img.g(1, 0) == 8);
    CHECK(img.b(1, 1) == 12);
  }
  SUBCASE("RGBA drops alpha") {
    std::vector<unsigned char> pix = {1, 2, 3, 99, 4, 5, 6, 99};
    const std::string path = (dir / "hmkl_rgba.tif").string();
    write_test_tiff(path, pix, 2, 1, 4);
    const Image img = read_image(path);
    CHECK(img.r(0, 0) == 1);
    CHECK(img.b(0, 1) == 6);
  }
  SUBCASE("compressed data is rejected") {
    std::vector<unsigned char> pix = {0, 0};
    const std::string path = (dir / "hmkl_bad.tif").string();
    write_test_tiff(path, pix, 2, 1, 1);
    // Patch the compression entry (tag 259, entry index 3) to LZW.
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8 + 2 + 3 * 12 + 8);
    const char lzw[2] = {5, 0};
    f.write(lzw, 2);
    f.close();
    CHECK_THROWS_WITH_AS(read_image(path), doctest::Contains("uncompressed"),
                         std::runtime_error);
  }
}
