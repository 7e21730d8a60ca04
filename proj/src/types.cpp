#include "vhpt/types.hpp"

#include <cmath>

namespace vhpt {

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("linspace: n must be >= 1");
  std::vector<double> out(static_cast<size_t>(n));
  if (n == 1) {
    out[0] = 0.5 * (lo + hi);
    return out;
  }
  const double step = (hi - lo) / (n - 1);
  for (int k = 0; k < n; ++k) out[k] = lo + k * step;
  // exact endpoints and exact centre for symmetric odd grids
  out.back() = hi;
  if (n % 2 == 1 && lo == -hi) out[n / 2] = 0.0;
  return out;
}

std::vector<double> periodic_grid(int n) {
  if (n < 1) throw std::invalid_argument("periodic_grid: n must be >= 1");
  std::vector<double> out(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) out[k] = kTwoPi * k / n;
  return out;
}

std::vector<double> centered_grid(double half_width, int n) {
  if (n < 1) throw std::invalid_argument("centered_grid: n must be >= 1");
  std::vector<double> out(static_cast<size_t>(n));
  const double h = 2.0 * half_width / n;
  for (int k = 0; k < n / 2; ++k) {
    out[k] = -half_width + (k + 0.5) * h;
    out[n - 1 - k] = -out[k];
  }
  if (n % 2 == 1) out[n / 2] = 0.0;
  return out;
}

ImageGrid::ImageGrid(int n) {
  if (n < 2) throw std::invalid_argument("ImageGrid: n must be >= 2");
  values = RealMatrix::Zero(n, n);
}

ImageGrid::ImageGrid(RealMatrix v) : values(std::move(v)) {
  if (values.rows() != values.cols() || values.rows() < 2)
    throw std::invalid_argument("ImageGrid: values must be square with n >= 2");
}

bool ImageGrid::inside_disc(int i, int j) const {
  const double x = coord(j), y = coord(i);
  return x * x + y * y <= 1.0;
}

void ImageGrid::mask_to_disc() {
  for (int i = 0; i < n(); ++i)
    for (int j = 0; j < n(); ++j)
      if (!inside_disc(i, j)) values(i, j) = 0.0;
}

Sinogram::Sinogram(std::vector<double> s, std::vector<double> phi)
    : values(RealMatrix::Zero(static_cast<Eigen::Index>(s.size()),
                              static_cast<Eigen::Index>(phi.size()))),
      offsets(std::move(s)),
      angles(std::move(phi)) {}

double Sinogram::offset_step() const {
  return offsets.size() > 1 ? offsets[1] - offsets[0] : 0.0;
}

double Sinogram::angle_step() const {
  return angles.size() > 1 ? angles[1] - angles[0] : kTwoPi;
}

}  // namespace vhpt
