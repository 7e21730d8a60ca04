#include "vhpt/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace vhpt::io {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

void write_png(const std::filesystem::path& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& pixels) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("png: cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: cannot initialise writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: write failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * width * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Range range_of(const RealMatrix& m) {
  if (m.size() == 0) return {};
  if (!m.allFinite()) throw std::invalid_argument("image: non-finite values");
  return {m.minCoeff(), m.maxCoeff()};
}

std::vector<std::uint8_t> gray_bytes(const RealMatrix& m, Range r) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(m.size()));
  const double span = r.max - r.min;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = span > 0.0 ? (m(i, j) - r.min) / span : 0.0;
      px[static_cast<std::size_t>(i * m.cols() + j)] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
  return px;
}

void check_nonempty(const RealMatrix& m) {
  if (m.rows() < 1 || m.cols() < 1) throw std::invalid_argument("image: empty matrix");
}

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    auto* p = &px_[(static_cast<std::size_t>(y) * w_ + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void save(const std::filesystem::path& path) const { write_png(path, w_, h_, 3, px_); }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

}  // namespace

RealMatrix flip_rows(const RealMatrix& m) { return m.colwise().reverse(); }

Range write_png_gray(const std::filesystem::path& path, const RealMatrix& values) {
  check_nonempty(values);
  const Range r = range_of(values);
  write_png(path, static_cast<int>(values.cols()), static_cast<int>(values.rows()), 1, gray_bytes(values, r));
  return r;
}

Range write_pgm(const std::filesystem::path& path, const RealMatrix& values) {
  check_nonempty(values);
  const Range r = range_of(values);
  const auto px = gray_bytes(values, r);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("pgm: cannot open for writing: " + path.string());
  f << "P5\n" << values.cols() << " " << values.rows() << "\n255\n";
  f.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!f) throw std::runtime_error("pgm: write failed: " + path.string());
  return r;
}

Range write_png_heatmap(const std::filesystem::path& path, const RealMatrix& values) {
  check_nonempty(values);
  const Range r = range_of(values);
  const double amp = std::max(std::abs(r.min), std::abs(r.max));
  std::vector<std::uint8_t> px(static_cast<std::size_t>(values.size()) * 3);
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double v = amp > 0.0 ? values(i, j) / amp : 0.0;  // [-1, 1]
      const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(v))));
      const Rgb c = v >= 0.0 ? Rgb{255, fade, fade} : Rgb{fade, fade, 255};
      std::copy(c.begin(), c.end(), px.begin() + (i * values.cols() + j) * 3);
    }
  write_png(path, static_cast<int>(values.cols()), static_cast<int>(values.rows()), 3, px);
  return r;
}

Range write_png_profile(const std::filesystem::path& path, const std::vector<double>& x,
                        const std::vector<double>& y, int width, int height) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("profile: need >= 2 matching points");
  if (width < 32 || height < 32) throw std::invalid_argument("profile: canvas too small");
  const auto [ylo_it, yhi_it] = std::minmax_element(y.begin(), y.end());
  Range r{*ylo_it, *yhi_it};
  double lo = r.min, hi = r.max;
  if (hi - lo <= 0.0) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double xlo = x.front(), xhi = x.back();
  const int m = 16;
  auto px = [&](double v) { return m + static_cast<int>(std::lround((v - xlo) / (xhi - xlo) * (width - 2 * m - 1))); };
  auto py = [&](double v) { return height - m - 1 - static_cast<int>(std::lround((v - lo) / (hi - lo) * (height - 2 * m - 1))); };

  Canvas c(width, height);
  const Rgb frame{0, 0, 0}, axis{170, 170, 170}, curve{20, 60, 200};
  c.line(m, m, width - m - 1, m, frame);
  c.line(m, height - m - 1, width - m - 1, height - m - 1, frame);
  c.line(m, m, m, height - m - 1, frame);
  c.line(width - m - 1, m, width - m - 1, height - m - 1, frame);
  if (lo < 0.0 && hi > 0.0) c.line(m + 1, py(0.0), width - m - 2, py(0.0), axis);
  for (std::size_t k = 1; k < x.size(); ++k) c.line(px(x[k - 1]), py(y[k - 1]), px(x[k]), py(y[k]), curve);
  c.save(path);
  return r;
}

}  // namespace vhpt::io
