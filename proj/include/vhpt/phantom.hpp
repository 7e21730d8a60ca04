#pragma once

#include "vhpt/types.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace vhpt::phantoms {

using Point = std::array<double, 2>;

struct Disc {
  Point center{0.0, 0.0};
  double radius = 0.0;
};

struct Ellipse {
  Point center{0.0, 0.0};
  std::array<double, 2> semi_axes{0.0, 0.0};
  double angle = 0.0;  // rotation of the first semi-axis, radians
};

struct Polygon {
  std::vector<Point> vertices;
};

/// Disc with a circular sector removed; the mouth opens towards mouth_direction.
struct PacMan {
  Point center{0.0, 0.0};
  double radius = 0.0;
  double mouth_half_angle = 0.0;
  double mouth_direction = 0.0;
};

using Shape = std::variant<Disc, Ellipse, Polygon, PacMan>;

bool contains(const Shape& shape, double x, double y);

/// Largest distance from the origin reached by the shape.
double max_radius(const Shape& shape);

struct Inclusion {
  Shape shape;
  double sigma = 1.0;
};

enum class Field { kSigma, kMu };

/// Piecewise-constant conductivity on the unit disc. Later inclusions
/// overwrite earlier ones where they overlap.
class Phantom {
 public:
  static constexpr double kDefaultContrastBound = 100.0;

  Phantom() = default;
  explicit Phantom(double background_sigma, std::vector<Inclusion> inclusions = {},
                   double contrast_bound = kDefaultContrastBound);

  [[nodiscard]] double background_sigma() const { return background_; }
  [[nodiscard]] double contrast_bound() const { return contrast_bound_; }
  [[nodiscard]] const std::vector<Inclusion>& inclusions() const { return inclusions_; }

  /// Absolute conductivity at (x, y); background outside inclusions.
  [[nodiscard]] double sigma_at(double x, double y) const;
  /// Conductivity normalised by the background, so the background maps to 1.
  [[nodiscard]] double relative_sigma_at(double x, double y) const;
  [[nodiscard]] double mu_at(double x, double y) const;

  /// Same geometry with every conductivity multiplied by `factor`.
  [[nodiscard]] Phantom scaled(double factor) const;

  [[nodiscard]] bool is_homogeneous() const { return inclusions_.empty(); }

 private:
  double background_ = 1.0;
  double contrast_bound_ = kDefaultContrastBound;
  std::vector<Inclusion> inclusions_;
};

double sigma_to_mu(double sigma);
double mu_to_sigma(double mu);

/// Pixel-centre sampling; `supersample` > 1 averages an s×s sub-grid per pixel.
ImageGrid rasterize(const Phantom& phantom, int n, Field field, int supersample = 1);

/// Line integrals of μ for phantoms built from discs and ellipses only, at
/// standard Radon angle psi (direction (cos psi, sin psi)) and offset s.
/// Returns std::nullopt if any inclusion has another shape.
std::optional<double> analytic_mu_radon(const Phantom& phantom, double s, double psi);

struct RandomPhantomParams {
  int count_min = 1;
  int count_max = 3;
  double radius_min = 0.1;
  double radius_max = 0.3;
  double sigma_min = 0.5;
  double sigma_max = 2.0;
  double margin = 0.05;  // minimum gap to the boundary
  int max_retries = 1000;
  bool allow_ellipses = true;
};

Phantom random_phantom(std::uint64_t seed, const RandomPhantomParams& params = {});

nlohmann::json to_json(const Phantom& p);
Phantom phantom_from_json(const nlohmann::json& j);

}  // namespace vhpt::phantoms
