#include "vhpt/phantom.hpp"
#include "vhpt/recon.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace vhpt;
using namespace vhpt::recon;
using phantoms::Disc;
using phantoms::Ellipse;
using phantoms::Phantom;
using doctest::Approx;

namespace {

const std::vector<double> kOffsets = centered_grid(1.0, 200);
const std::vector<double> kAngles = periodic_grid(100);

ImageGrid smooth_mu(int n) {
  ImageGrid g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = g.coord(j), y = g.coord(i);
      g.values(i, j) = 0.3 * std::exp(-((x - 0.2) * (x - 0.2) + y * y) / 0.05) -
                       0.2 * std::exp(-((x + 0.3) * (x + 0.3) + (y - 0.3) * (y - 0.3)) / 0.02);
    }
  g.mask_to_disc();
  return g;
}

Sinogram analytic_sinogram(const Phantom& p, const std::vector<double>& s, const std::vector<double>& psi) {
  Sinogram out(s, psi);
  for (std::size_t q = 0; q < psi.size(); ++q)
    for (std::size_t r = 0; r < s.size(); ++r) out.values(r, q) = *phantoms::analytic_mu_radon(p, s[r], psi[q]);
  return out;
}

double rel_inside(const ImageGrid& a, const ImageGrid& b, double radius = 1.0) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < a.n(); ++i)
    for (int j = 0; j < a.n(); ++j)
      if (std::hypot(a.coord(i), a.coord(j)) < radius) {
        num += std::pow(a.values(i, j) - b.values(i, j), 2);
        den += b.values(i, j) * b.values(i, j);
      }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("radon transform of simple objects") {
  CHECK(radon_transform(ImageGrid(32), kOffsets, kAngles).values.isZero());

  const Phantom disc(1.0, {{Disc{{0.0, 0.0}, 0.5}, phantoms::mu_to_sigma(0.3)}});
  const auto mu = phantoms::rasterize(disc, 512, phantoms::Field::kMu, 4);
  const std::vector<double> s{0.0, 0.2, 0.45};
  const auto r = radon_transform(mu, s, {0.0, 0.7, 2.0}, 512);
  for (int q = 0; q < 3; ++q) {
    CHECK(std::abs(r.values(0, q) - 0.3) <= 1e-3);
    for (int k = 0; k < 3; ++k)
      CHECK(r.values(k, q) == Approx(0.6 * std::sqrt(0.25 - s[k] * s[k])).epsilon(0.01));
  }
}

TEST_CASE("mass is conserved along every angle") {
  const auto mu = smooth_mu(128);
  const double mass = mu.values.sum() * mu.pixel_size() * mu.pixel_size();
  const auto r = radon_transform(mu, kOffsets, kAngles);
  const double ds = kOffsets[1] - kOffsets[0];
  for (int q = 0; q < 100; ++q) CHECK(r.values.col(q).sum() * ds == Approx(mass).epsilon(0.005));
}

TEST_CASE("sparse operator matches the matrix-free transform") {
  const auto mu = smooth_mu(32);
  const auto s = centered_grid(1.0, 40);
  const auto psi = periodic_grid(12);
  const auto a = radon_matrix(32, s, psi, 64);
  const Eigen::Map<const RealVector> x(mu.values.data(), mu.values.size());
  RealVector flat(32 * 32);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) flat(i * 32 + j) = mu.values(i, j);
  const RealVector y = a * flat;
  const auto ref = radon_transform(mu, s, psi, 64);
  double err = 0.0;
  for (int r = 0; r < 40; ++r)
    for (int q = 0; q < 12; ++q) err = std::max(err, std::abs(y(r * 12 + q) - ref.values(r, q)));
  CHECK(err <= 1e-12);
}

TEST_CASE("backprojection") {
  CHECK(backprojection(Sinogram(kOffsets, kAngles), 32).values.isZero());
  Sinogram ones(kOffsets, kAngles);
  ones.values.setOnes();
  const auto b = backprojection(ones, 64);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      CHECK(b.values(i, j) == Approx(b.values(j, i)).epsilon(0.02));
      CHECK(b.values(i, j) == Approx(b.values(63 - i, j)).epsilon(0.02));
    }
}

TEST_CASE("fbp") {
  CHECK(fbp(Sinogram(kOffsets, kAngles)).values.isZero());

  const Phantom disc(1.0, {{Disc{{0.0, 0.0}, 0.5}, phantoms::mu_to_sigma(0.3)}});
  const auto truth = phantoms::rasterize(disc, 128, phantoms::Field::kMu);
  const auto rec = fbp(radon_transform(truth, kOffsets, kAngles), {128});
  CHECK(rel_inside(rec, truth, 0.5) <= 0.05);
  CHECK(rec.values(64, 64) == Approx(0.3).epsilon(0.05));
  CHECK(rel_inside(fbp(analytic_sinogram(disc, kOffsets, kAngles), {128}), truth, 0.5) <= 0.05);

  const auto mu = smooth_mu(128);
  auto err_at = [&](int na) {
    return rel_inside(fbp(radon_transform(mu, kOffsets, periodic_grid(na)), {128}), mu);
  };
  const double e50 = err_at(50), e100 = err_at(100);
  CHECK(e100 <= 0.05);
  CHECK(e100 < e50);

  Sinogram a = radon_transform(mu, kOffsets, kAngles), b = a;
  b.values = b.values.colwise().reverse().eval();
  Sinogram ab = a;
  ab.values += b.values;
  CHECK((fbp(ab).values - fbp(a).values - fbp(b).values).norm() <= 1e-10 * fbp(ab).values.norm());
}

TEST_CASE("rotation shifts the sinogram columns") {
  const int shift = 7;
  const double delta = kAngles[shift];
  auto make = [](double rot) {
    const double c = std::cos(rot), s = std::sin(rot);
    return Phantom(1.0, {{Ellipse{{0.3 * c, 0.3 * s}, {0.3, 0.15}, 0.4 + rot}, 1.6},
                         {Disc{{-0.4 * c + 0.1 * s, -0.4 * s - 0.1 * c}, 0.2}, 0.7}});
  };
  const auto r0 = radon_transform(phantoms::rasterize(make(0.0), 256, phantoms::Field::kMu, 2), kOffsets, kAngles);
  const auto r1 = radon_transform(phantoms::rasterize(make(delta), 256, phantoms::Field::kMu, 2), kOffsets, kAngles);
  RealMatrix shifted(200, 100);
  for (int q = 0; q < 100; ++q) shifted.col((q + shift) % 100) = r0.values.col(q);
  CHECK((r1.values - shifted).norm() <= 0.02 * r1.values.norm());
}

TEST_CASE("sigma from mu") {
  ImageGrid mu(4);
  mu.values << 0, -1.0 / 3.0, 1.5, -2, 0.5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0;
  const auto s = finalize_sigma(mu);
  CHECK(s.values(0, 0) == 1.0);
  CHECK(s.values(0, 1) == Approx(2.0));
  CHECK(s.values(1, 0) == Approx(1.0 / 3.0));
  CHECK(s.values.allFinite());
  CHECK(s.values(0, 2) > 0.0);
  CHECK(s.values(0, 3) == Approx(2.0 / 1e-6).epsilon(1e-6));
}

TEST_CASE("angle adapter") {
  Sinogram s(centered_grid(1.0, 4), periodic_grid(8));
  for (int q = 0; q < 8; ++q) s.values.col(q).setConstant(q);
  const auto r = cgo_to_radon_angles(s);
  for (int q = 0; q < 8; ++q) CHECK(r.values(0, q) == (12 - q) % 8);
  CHECK(r.angles == s.angles);
  CHECK(radon_to_cgo_angles(r).values == s.values);
  CHECK_THROWS(cgo_to_radon_angles(Sinogram(centered_grid(1.0, 4), periodic_grid(7))));
}

TEST_CASE("total variation reconstruction") {
  const Phantom disc(1.0, {{Disc{{0.0, 0.0}, 0.5}, phantoms::mu_to_sigma(0.25)}});
  const auto sino = analytic_sinogram(disc, centered_grid(1.0, 100), periodic_grid(50));
  TvOptions opt;
  opt.n = 64;
  opt.iterations = 150;
  opt.ray_samples = 128;
  SUBCASE("plateau and descent") {
    const auto res = tv_reconstruct(sino, opt);
    for (std::size_t i = 1; i < res.objective.size(); ++i)
      CHECK(res.objective[i] <= res.objective[i - 1] + 1e-10 * std::abs(res.objective[i - 1]));
    double plateau = 0.0;
    int count = 0;
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j)
        if (std::hypot(res.image.coord(i), res.image.coord(j)) < 0.35) {
          plateau += res.image.values(i, j);
          ++count;
        }
    CHECK(plateau / count == Approx(0.25).epsilon(0.10));
    CHECK(res.objective.back() == Approx(tv_objective(res.image, sino, opt.alpha, opt.ray_samples)).epsilon(1e-9));
  }
  SUBCASE("huge alpha flattens the image") {
    opt.alpha = 1e3;
    opt.iterations = 50;
    const auto res = tv_reconstruct(sino, opt);
    CHECK(res.image.values.cwiseAbs().maxCoeff() <= 1e-3);
  }
  SUBCASE("invalid settings") {
    opt.alpha = 0.0;
    CHECK_THROWS(tv_reconstruct(sino, opt));
  }
}
