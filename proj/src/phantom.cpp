#include "vhpt/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace vhpt::phantoms {

namespace {

double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  return a;
}

struct Contains {
  double x, y;
  bool operator()(const Disc& d) const {
    const double dx = x - d.center[0], dy = y - d.center[1];
    return dx * dx + dy * dy < d.radius * d.radius;
  }
  bool operator()(const Ellipse& e) const {
    const double dx = x - e.center[0], dy = y - e.center[1];
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double u = (c * dx + s * dy) / e.semi_axes[0];
    const double v = (-s * dx + c * dy) / e.semi_axes[1];
    return u * u + v * v < 1.0;
  }
  bool operator()(const Polygon& p) const {
    bool inside = false;
    const auto& v = p.vertices;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      if ((v[i][1] > y) != (v[j][1] > y)) {
        const double xc = v[i][0] + (y - v[i][1]) * (v[j][0] - v[i][0]) / (v[j][1] - v[i][1]);
        if (x < xc) inside = !inside;
      }
    }
    return inside;
  }
  bool operator()(const PacMan& p) const {
    const double dx = x - p.center[0], dy = y - p.center[1];
    if (dx * dx + dy * dy >= p.radius * p.radius) return false;
    if (dx == 0.0 && dy == 0.0) return true;
    const double rel = wrap_angle(std::atan2(dy, dx) - p.mouth_direction);
    return std::abs(rel) >= p.mouth_half_angle;
  }
};

struct MaxRadius {
  double operator()(const Disc& d) const { return std::hypot(d.center[0], d.center[1]) + d.radius; }
  double operator()(const Ellipse& e) const {
    return std::hypot(e.center[0], e.center[1]) + std::max(e.semi_axes[0], e.semi_axes[1]);
  }
  double operator()(const Polygon& p) const {
    double r = 0.0;
    for (const auto& v : p.vertices) r = std::max(r, std::hypot(v[0], v[1]));
    return r;
  }
  double operator()(const PacMan& p) const {
    return std::hypot(p.center[0], p.center[1]) + p.radius;
  }
};

void validate_shape(const Shape& shape) {
  const bool ok = std::visit(
      [](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) return s.radius > 0.0;
        if constexpr (std::is_same_v<T, Ellipse>) return s.semi_axes[0] > 0.0 && s.semi_axes[1] > 0.0;
        if constexpr (std::is_same_v<T, Polygon>) return s.vertices.size() >= 3;
        if constexpr (std::is_same_v<T, PacMan>)
          return s.radius > 0.0 && s.mouth_half_angle >= 0.0 && s.mouth_half_angle < kPi;
        return false;
      },
      shape);
  if (!ok) throw std::invalid_argument("Phantom: degenerate inclusion shape");
  if (max_radius(shape) >= 1.0)
    throw std::invalid_argument("Phantom: inclusion does not lie strictly inside the unit disc");
}

Point point_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

bool contains(const Shape& shape, double x, double y) { return std::visit(Contains{x, y}, shape); }

double max_radius(const Shape& shape) { return std::visit(MaxRadius{}, shape); }

Phantom::Phantom(double background_sigma, std::vector<Inclusion> inclusions, double contrast_bound)
    : background_(background_sigma),
      contrast_bound_(contrast_bound),
      inclusions_(std::move(inclusions)) {
  if (!(background_ > 0.0)) throw DomainError("Phantom: background conductivity must be positive");
  if (!(contrast_bound_ >= 1.0)) throw std::invalid_argument("Phantom: contrast bound must be >= 1");
  for (const auto& inc : inclusions_) {
    validate_shape(inc.shape);
    const double rel = inc.sigma / background_;
    if (!(rel > 1.0 / contrast_bound_ && rel < contrast_bound_))
      throw DomainError("Phantom: inclusion conductivity " + std::to_string(inc.sigma) +
                        " outside the contrast bound");
  }
}

double Phantom::sigma_at(double x, double y) const {
  double s = background_;
  for (const auto& inc : inclusions_)
    if (contains(inc.shape, x, y)) s = inc.sigma;
  return s;
}

double Phantom::relative_sigma_at(double x, double y) const { return sigma_at(x, y) / background_; }

double Phantom::mu_at(double x, double y) const { return sigma_to_mu(relative_sigma_at(x, y)); }

Phantom Phantom::scaled(double factor) const {
  auto incs = inclusions_;
  for (auto& inc : incs) inc.sigma *= factor;
  return Phantom(background_ * factor, std::move(incs), contrast_bound_);
}

double sigma_to_mu(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("sigma_to_mu: conductivity must be positive");
  return (1.0 - sigma) / (1.0 + sigma);
}

double mu_to_sigma(double mu) {
  if (!(std::abs(mu) < 1.0)) throw DomainError("mu_to_sigma: |mu| must be < 1");
  return (1.0 - mu) / (1.0 + mu);
}

ImageGrid rasterize(const Phantom& phantom, int n, Field field, int supersample) {
  if (n < 2) throw std::invalid_argument("rasterize: n must be >= 2");
  if (supersample < 1) throw std::invalid_argument("rasterize: supersample must be >= 1");
  ImageGrid img(n);
  const double h = img.pixel_size();
  const double sub = h / supersample;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int a = 0; a < supersample; ++a) {
        for (int b = 0; b < supersample; ++b) {
          const double x = -1.0 + j * h + (b + 0.5) * sub;
          const double y = -1.0 + i * h + (a + 0.5) * sub;
          if (x * x + y * y > 1.0) continue;
          acc += field == Field::kMu ? phantom.mu_at(x, y) : phantom.sigma_at(x, y);
        }
      }
      img.values(i, j) = acc / (supersample * supersample);
    }
  }
  img.mask_to_disc();
  return img;
}

std::optional<double> analytic_mu_radon(const Phantom& phantom, double s, double psi) {
  const double nx = std::cos(psi), ny = std::sin(psi);
  double total = 0.0;
  for (const auto& inc : phantom.inclusions()) {
    const double mu = sigma_to_mu(inc.sigma / phantom.background_sigma());
    double a, b, cx, cy, rot;
    if (const auto* d = std::get_if<Disc>(&inc.shape)) {
      a = b = d->radius;
      cx = d->center[0];
      cy = d->center[1];
      rot = 0.0;
    } else if (const auto* e = std::get_if<Ellipse>(&inc.shape)) {
      a = e->semi_axes[0];
      b = e->semi_axes[1];
      cx = e->center[0];
      cy = e->center[1];
      rot = e->angle;
    } else {
      return std::nullopt;
    }
    // normal expressed in the ellipse frame
    const double mx = std::cos(rot) * nx + std::sin(rot) * ny;
    const double my = -std::sin(rot) * nx + std::cos(rot) * ny;
    const double p2 = a * a * mx * mx + b * b * my * my;
    const double sl = s - (cx * nx + cy * ny);
    if (sl * sl < p2) total += mu * 2.0 * a * b * std::sqrt(p2 - sl * sl) / p2;
  }
  return total;
}

Phantom random_phantom(std::uint64_t seed, const RandomPhantomParams& p) {
  if (p.count_min < 0 || p.count_max < p.count_min || p.radius_min <= 0.0 ||
      p.radius_max < p.radius_min || p.sigma_min <= 0.0 || p.sigma_max < p.sigma_min)
    throw std::invalid_argument("random_phantom: invalid parameter ranges");
  const double c = Phantom::kDefaultContrastBound;
  if (!(p.sigma_min > 1.0 / c && p.sigma_max < c))
    throw DomainError("random_phantom: sigma range outside the contrast bound");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count_dist(p.count_min, p.count_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const int count = count_dist(rng);
  std::vector<Inclusion> incs;
  std::vector<std::array<double, 3>> placed;  // bounding circles
  for (int k = 0; k < count; ++k) {
    bool done = false;
    for (int attempt = 0; attempt < p.max_retries && !done; ++attempt) {
      const double r = uniform(p.radius_min, p.radius_max);
      const double reach = 1.0 - p.margin - r;
      if (reach < 0.0) continue;
      const double rr = reach * std::sqrt(unit(rng));
      const double th = kTwoPi * unit(rng);
      const double cx = rr * std::cos(th), cy = rr * std::sin(th);
      const bool ellipse = p.allow_ellipses && unit(rng) < 0.5;
      const double ratio = ellipse ? uniform(0.5, 1.0) : 1.0;
      const double angle = ellipse ? uniform(0.0, kPi) : 0.0;
      const double sigma = uniform(p.sigma_min, p.sigma_max);
      bool clash = false;
      for (const auto& q : placed)
        if (std::hypot(cx - q[0], cy - q[1]) < r + q[2] + p.margin) clash = true;
      if (clash) continue;
      Shape shape = ellipse ? Shape(Ellipse{{cx, cy}, {r, r * ratio}, angle})
                            : Shape(Disc{{cx, cy}, r});
      incs.push_back({shape, sigma});
      placed.push_back({cx, cy, r});
      done = true;
    }
    if (!done)
      throw std::runtime_error("random_phantom: could not place inclusion " + std::to_string(k) +
                               " after " + std::to_string(p.max_retries) + " attempts");
  }
  return Phantom(1.0, std::move(incs), c);
}

nlohmann::json to_json(const Phantom& p) {
  nlohmann::json incs = nlohmann::json::array();
  for (const auto& inc : p.inclusions()) {
    nlohmann::json j;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Disc>) {
            j = {{"shape", "disc"}, {"center", s.center}, {"radius", s.radius}};
          } else if constexpr (std::is_same_v<T, Ellipse>) {
            j = {{"shape", "ellipse"}, {"center", s.center}, {"semi_axes", s.semi_axes},
                 {"angle", s.angle}};
          } else if constexpr (std::is_same_v<T, Polygon>) {
            j = {{"shape", "polygon"}, {"vertices", s.vertices}};
          } else {
            j = {{"shape", "pacman"}, {"center", s.center}, {"radius", s.radius},
                 {"mouth_half_angle", s.mouth_half_angle}, {"mouth_direction", s.mouth_direction}};
          }
        },
        inc.shape);
    j["sigma"] = inc.sigma;
    incs.push_back(std::move(j));
  }
  return {{"background_sigma", p.background_sigma()},
          {"contrast_bound", p.contrast_bound()},
          {"inclusions", incs}};
}

Phantom phantom_from_json(const nlohmann::json& j) {
  std::vector<Inclusion> incs;
  for (const auto& ji : j.value("inclusions", nlohmann::json::array())) {
    const auto kind = ji.at("shape").get<std::string>();
    Shape shape;
    if (kind == "disc") {
      shape = Disc{point_from_json(ji.at("center")), ji.at("radius").get<double>()};
    } else if (kind == "ellipse") {
      shape = Ellipse{point_from_json(ji.at("center")),
                      {ji.at("semi_axes").at(0).get<double>(), ji.at("semi_axes").at(1).get<double>()},
                      ji.value("angle", 0.0)};
    } else if (kind == "polygon") {
      Polygon poly;
      for (const auto& v : ji.at("vertices")) poly.vertices.push_back(point_from_json(v));
      shape = poly;
    } else if (kind == "pacman") {
      shape = PacMan{point_from_json(ji.at("center")), ji.at("radius").get<double>(),
                     ji.at("mouth_half_angle").get<double>(), ji.value("mouth_direction", 0.0)};
    } else {
      throw std::invalid_argument("phantom JSON: unknown shape '" + kind + "'");
    }
    incs.push_back({shape, ji.at("sigma").get<double>()});
  }
  return Phantom(j.value("background_sigma", 1.0), std::move(incs),
                 j.value("contrast_bound", Phantom::kDefaultContrastBound));
}

}  // namespace vhpt::phantoms
