#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace vhpt {

using cplx = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Raised for violated preconditions on physical quantities (σ ≤ 0, |μ| ≥ 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a numerical stage cannot produce a trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inclusive grid lo..hi with n points.
std::vector<double> linspace(double lo, double hi, int n);

/// 2πj/n for j = 0..n-1.
std::vector<double> periodic_grid(int n);

/// Cell centres of n equal cells covering [-half_width, half_width].
std::vector<double> centered_grid(double half_width, int n);

/// Square raster over [-1,1]², row i ↔ y_i, column j ↔ x_j, pixel centres at
/// -1 + (k + ½)·2/n. Values outside the inscribed unit disc are zero.
struct ImageGrid {
  RealMatrix values;

  ImageGrid() = default;
  explicit ImageGrid(int n);
  explicit ImageGrid(RealMatrix v);

  [[nodiscard]] int n() const { return static_cast<int>(values.rows()); }
  [[nodiscard]] double pixel_size() const { return 2.0 / n(); }
  [[nodiscard]] double coord(int k) const { return -1.0 + (k + 0.5) * pixel_size(); }
  [[nodiscard]] bool inside_disc(int i, int j) const;

  /// Zeroes every pixel whose centre lies outside the unit disc.
  void mask_to_disc();
};

/// Real sinogram: rows are offsets s, columns are angles.
struct Sinogram {
  RealMatrix values;
  std::vector<double> offsets;
  std::vector<double> angles;

  Sinogram() = default;
  Sinogram(std::vector<double> s, std::vector<double> phi);

  [[nodiscard]] int num_offsets() const { return static_cast<int>(offsets.size()); }
  [[nodiscard]] int num_angles() const { return static_cast<int>(angles.size()); }
  [[nodiscard]] double offset_step() const;
  [[nodiscard]] double angle_step() const;
};

/// Complex pseudo-time sinogram T(t, φ): rows are pseudo-times, columns angles.
struct ComplexSinogram {
  ComplexMatrix values;
  std::vector<double> times;
  std::vector<double> angles;
  double window_a = 0.0;
  double r_cut = 0.0;
};

}  // namespace vhpt
