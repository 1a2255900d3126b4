// Copyright 2026 The modecompose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "modecompose/image_io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace modecompose {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void WriteImageGrid(const std::filesystem::path& path, const Matrix& images, int resolution,
                    int columns) {
  const int n = static_cast<int>(images.rows());
  Require(n > 0, "png: no images");
  Require(resolution > 0 && images.cols() == 3 * resolution * resolution,
          "png: row length does not match 3 * resolution^2");
  const int cols = columns > 0 ? columns : static_cast<int>(std::ceil(std::sqrt(n)));
  const int rows = (n + cols - 1) / cols;
  const int width = cols * (resolution + 1) + 1;
  const int height = rows * (resolution + 1) + 1;
  std::vector<png_byte> pixels(static_cast<size_t>(width) * height * 3, 255);
  for (int i = 0; i < n; ++i) {
    const int ox = 1 + (i % cols) * (resolution + 1);
    const int oy = 1 + (i / cols) * (resolution + 1);
    for (int y = 0; y < resolution; ++y) {
      for (int x = 0; x < resolution; ++x) {
        for (int c = 0; c < 3; ++c) {
          const double v = images(i, (y * resolution + x) * 3 + c);
          const double u = std::clamp((v + 1.0) * 0.5, 0.0, 1.0);
          pixels[(static_cast<size_t>(oy + y) * width + ox + x) * 3 + c] =
              static_cast<png_byte>(std::lround(u * 255.0));
        }
      }
    }
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw std::runtime_error("png: cannot open " + tmp.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("png: allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("png: write failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) png_write_row(png, &pixels[static_cast<size_t>(y) * width * 3]);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

Vector ReadPngRgb(const std::filesystem::path& path, int* width, int* height) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw std::runtime_error("png: cannot read " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw std::runtime_error("png: decode failed for " + path.string() + ": " + image.message);
  }
  if (width) *width = static_cast<int>(image.width);
  if (height) *height = static_cast<int>(image.height);
  Vector out(buf.size());
  for (size_t i = 0; i < buf.size(); ++i) out[i] = buf[i] / 127.5 - 1.0;
  return out;
}

}  // namespace modecompose
