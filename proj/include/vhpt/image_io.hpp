#pragma once

#include "vhpt/types.hpp"

#include <filesystem>
#include <vector>

namespace vhpt::io {

struct Range {
  double min = 0.0;
  double max = 0.0;
};

/// 8-bit grayscale, min→0 and max→255 (flat input maps to 0). Row 0 is the top.
Range write_png_gray(const std::filesystem::path& path, const RealMatrix& values);
Range write_pgm(const std::filesystem::path& path, const RealMatrix& values);

/// Diverging blue-white-red colouring, symmetric about zero.
Range write_png_heatmap(const std::filesystem::path& path, const RealMatrix& values);

/// Line plot of y against x with a frame and the y = 0 axis when in range.
Range write_png_profile(const std::filesystem::path& path, const std::vector<double>& x,
                        const std::vector<double>& y, int width = 640, int height = 360);

/// Image rows run top to bottom; images with row i ↔ y_i are flipped so +y is up.
RealMatrix flip_rows(const RealMatrix& m);

}  // namespace vhpt::io
