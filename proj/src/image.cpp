#include "hmkl/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace hmkl {

const Eigen::MatrixXd& Image::channel(int c) const {
  switch (c) {
    case 0: return r;
    case 1: return g;
    case 2: return b;
  }
  throw std::runtime_error("channel index out of range");
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image from_interleaved(const std::vector<unsigned char>& pixels, int width,
                       int height, int channels) {
  Image img;
  img.r.resize(height, width);
  img.g.resize(height, width);
  img.b.resize(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const unsigned char* p = &pixels[(static_cast<std::size_t>(y) * width + x) * channels];
      if (channels == 1) {
        img.r(y, x) = img.g(y, x) = img.b(y, x) = p[0];
      } else {
        img.r(y, x) = p[0];
        img.g(y, x) = p[1];
        img.b(y, x) = p[2];
      }
    }
  return img;
}

Image read_png_file(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open image: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed to decode PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize everything to 8-bit RGB.
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> pixels(rowbytes * height);
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) row_ptrs[y] = &pixels[y * rowbytes];
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);

  if (rowbytes != static_cast<std::size_t>(width) * 3)
    throw std::runtime_error("unexpected PNG row layout: " + path);
  return from_interleaved(pixels, width, height, 3);
}

std::uint32_t read_u32(const unsigned char* p, bool little) {
  return little ? (p[0] | p[1] << 8 | p[2] << 16 | std::uint32_t(p[3]) << 24)
                : (std::uint32_t(p[0]) << 24 | p[1] << 16 | p[2] << 8 | p[3]);
}

std::uint16_t read_u16(const unsigned char* p, bool little) {
  return little ? static_cast<std::uint16_t>(p[0] | p[1] << 8)
                : static_cast<std::uint16_t>(p[0] << 8 | p[1]);
}

// Minimal baseline TIFF reader: uncompressed, 8 bits per sample, gray or
// RGB(A), chunky layout, strip based.
Image read_tiff_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  auto fail = [&path](const std::string& why) -> Image {
    throw std::runtime_error(path + ": " + why);
  };
  if (data.size() < 8) return fail("truncated TIFF");
  bool little;
  if (data[0] == 'I' && data[1] == 'I') little = true;
  else if (data[0] == 'M' && data[1] == 'M') little = false;
  else return fail("not a TIFF file");
  if (read_u16(&data[2], little) != 42) return fail("bad TIFF magic");

  std::uint32_t ifd = read_u32(&data[4], little);
  if (ifd + 2 > data.size()) return fail("bad IFD offset");
  const std::uint16_t entries = read_u16(&data[ifd], little);

  std::uint32_t width = 0, height = 0, compression = 1, spp = 1, bps = 8;
  std::uint32_t rows_per_strip = 0xffffffffu;
  std::vector<std::uint32_t> strip_offsets, strip_counts;

  for (std::uint16_t e = 0; e < entries; ++e) {
    const std::uint32_t off = ifd + 2 + 12u * e;
    if (off + 12 > data.size()) return fail("truncated IFD");
    const std::uint16_t tag = read_u16(&data[off], little);
    const std::uint16_t type = read_u16(&data[off + 2], little);
    const std::uint32_t count = read_u32(&data[off + 4], little);
    auto value_at = [&](std::uint32_t i) -> std::uint32_t {
      const std::uint32_t size = type == 3 ? 2 : 4;
      std::uint32_t base = off + 8;
      if (count * size > 4) base = read_u32(&data[off + 8], little);
      if (base + (i + 1) * size > data.size()) return fail("bad tag data"), 0u;
      return type == 3 ? read_u16(&data[base + i * size], little)
                       : read_u32(&data[base + i * size], little);
    };
    switch (tag) {
      case 256: width = value_at(0); break;
      case 257: height = value_at(0); break;
      case 258: bps = value_at(0); break;
      case 259: compression = value_at(0); break;
      case 273:
        for (std::uint32_t i = 0; i < count; ++i) strip_offsets.push_back(value_at(i));
        break;
      case 277: spp = value_at(0); break;
      case 278: rows_per_strip = value_at(0); break;
      case 279:
        for (std::uint32_t i = 0; i < count; ++i) strip_counts.push_back(value_at(i));
        break;
      default: break;
    }
  }
  if (width == 0 || height == 0) return fail("missing dimensions");
  if (compression != 1) return fail("only uncompressed TIFF is supported");
  if (bps != 8) return fail("only 8 bits per sample is supported");
  if (spp != 1 && spp != 3 && spp != 4) return fail("unsupported samples per pixel");
  if (strip_offsets.empty()) return fail("missing strip offsets");

  std::vector<unsigned char> pixels;
  pixels.reserve(static_cast<std::size_t>(width) * height * spp);
  for (std::size_t s = 0; s < strip_offsets.size(); ++s) {
    std::uint32_t n = s < strip_counts.size()
                          ? strip_counts[s]
                          : width * std::min(rows_per_strip, height) * spp;
    if (strip_offsets[s] + n > data.size()) return fail("strip out of bounds");
    pixels.insert(pixels.end(), data.begin() + strip_offsets[s],
                  data.begin() + strip_offsets[s] + n);
  }
  if (pixels.size() < static_cast<std::size_t>(width) * height * spp)
    return fail("pixel data truncated");
  // Drop alpha by re-packing RGBA to RGB.
  if (spp == 4) {
    std::vector<unsigned char> rgb(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i)
      std::memcpy(&rgb[i * 3], &pixels[i * 4], 3);
    pixels = std::move(rgb);
    spp = 3;
  }
  return from_interleaved(pixels, static_cast<int>(width), static_cast<int>(height),
                          static_cast<int>(spp));
}

bool ends_with_nocase(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  for (std::size_t i = 0; i < suffix.size(); ++i)
    if (std::tolower(s[s.size() - suffix.size() + i]) != suffix[i]) return false;
  return true;
}

}  // namespace

Image read_image(const std::string& path) {
  if (ends_with_nocase(path, ".png")) return read_png_file(path);
  if (ends_with_nocase(path, ".tif") || ends_with_nocase(path, ".tiff"))
    return read_tiff_file(path);
  throw std::runtime_error("unsupported image format (png/tif only): " + path);
}

void write_png(const std::string& path, const Image& image) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write image: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed to encode PNG: " + path);
  }
  png_init_io(png, fp.get());
  const int w = image.width(), h = image.height();
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  auto quantize = [](double v) {
    return static_cast<unsigned char>(std::clamp(v + 0.5, 0.0, 255.0));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      row[x * 3 + 0] = quantize(image.r(y, x));
      row[x * 3 + 1] = quantize(image.g(y, x));
      row[x * 3 + 2] = quantize(image.b(y, x));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace hmkl
