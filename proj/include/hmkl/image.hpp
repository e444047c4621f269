#pragma once

#include <Eigen/Core>
#include <string>

namespace hmkl {

// 8-bit RGB image as three intensity matrices (values 0..255).
struct Image {
  Eigen::MatrixXd r, g, b;

  int height() const { return static_cast<int>(r.rows()); }
  int width() const { return static_cast<int>(r.cols()); }
  const Eigen::MatrixXd& channel(int c) const;
};

// Decodes .png (libpng) or uncompressed .tif/.tiff; 8-bit gray, RGB and
// RGBA inputs, alpha dropped, gray replicated to the three channels.
Image read_image(const std::string& path);

// 8-bit RGB PNG writer; values are clamped to [0,255] and rounded.
void write_png(const std::string& path, const Image& image);

}  // namespace hmkl
