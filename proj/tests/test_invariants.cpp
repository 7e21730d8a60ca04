#include "vhpt/cgo.hpp"
#include "vhpt/deblur.hpp"
#include "vhpt/dnmap.hpp"
#include "vhpt/forward.hpp"
#include "vhpt/phantom.hpp"
#include "vhpt/pseudotime.hpp"
#include "vhpt/recon.hpp"

#include <doctest.h>
#include <omp.h>

#include <random>

using namespace vhpt;
using phantoms::Disc;
using phantoms::Phantom;

namespace {

RealMatrix random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  RealMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

ImageGrid random_image(int n, unsigned seed, double radius = 1.0) {
  ImageGrid g(random_matrix(n, n, seed));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::hypot(g.coord(i), g.coord(j)) > radius) g.values(i, j) = 0.0;
  return g;
}

Sinogram random_sinogram(int ns, int na, unsigned seed) {
  Sinogram s(centered_grid(1.0, ns), periodic_grid(na));
  s.values = random_matrix(ns, na, seed);
  return s;
}

cgo::ScatteringGrid random_scattering(unsigned seed) {
  cgo::ScatteringGrid g;
  g.tau = linspace(-6.0, 6.0, 33);
  g.phi = periodic_grid(20);
  g.values = random_matrix(33, 20, seed) + cplx(0.0, 1.0) * random_matrix(33, 20, seed + 1);
  return g;
}

const Phantom kPhantom(1.0, {{Disc{{0.2, -0.1}, 0.35}, 1.3}, {Disc{{-0.4, 0.3}, 0.2}, 0.8}});

template <class F>
auto with_threads(int n, F f) {
  const int before = omp_get_max_threads();
  omp_set_num_threads(n);
  auto r = f();
  omp_set_num_threads(before);
  return r;
}

template <class F>
void check_thread_invariant(F f) {
  const auto one = with_threads(1, f);
  const auto four = with_threads(4, f);
  CHECK(one == four);
}

}  // namespace

TEST_CASE("adjointness of radon and backprojection") {
  const auto s = centered_grid(1.0, 60);
  const auto psi = periodic_grid(30);
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto mu = random_image(40, seed);
    Sinogram y(s, psi);
    y.values = random_matrix(60, 30, seed + 100);
    const double lhs = (recon::radon_transform(mu, s, psi, 120).values.array() * y.values.array()).sum();
    const double rhs = (mu.values.array() * recon::backprojection(y, 40, 120).values.array()).sum();
    CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max(std::abs(lhs), std::abs(rhs)));
    const double rhs_serial = (mu.values.array() * serial::backprojection(y, 40, 120).values.array()).sum();
    CHECK(std::abs(lhs - rhs_serial) <= 1e-6 * std::abs(lhs));
  }
}

TEST_CASE("linearity of the linear stages") {
  const double a = 0.7, b = -1.9;
  SUBCASE("radon and fbp") {
    const auto s = centered_grid(1.0, 60);
    const auto psi = periodic_grid(30);
    const auto x = random_image(40, 1), y = random_image(40, 2);
    ImageGrid xy(RealMatrix(a * x.values + b * y.values));
    const auto rx = recon::radon_transform(x, s, psi), ry = recon::radon_transform(y, s, psi);
    const auto rxy = recon::radon_transform(xy, s, psi);
    CHECK((rxy.values - a * rx.values - b * ry.values).norm() <= 1e-12 * rxy.values.norm());
    Sinogram sxy = rx;
    sxy.values = a * rx.values + b * ry.values;
    const auto f = recon::fbp(sxy, {40});
    CHECK((f.values - a * recon::fbp(rx, {40}).values - b * recon::fbp(ry, {40}).values).norm() <=
          1e-10 * f.values.norm());
  }
  SUBCASE("windowed fourier transform") {
    const auto g1 = random_scattering(3), g2 = random_scattering(5);
    auto g = g1;
    g.values = a * g1.values + b * g2.values;
    const auto t = centered_grid(2.0, 50);
    const auto w = pseudotime::windowed_ft(g, 0.1, t).values;
    const auto w1 = pseudotime::windowed_ft(g1, 0.1, t).values, w2 = pseudotime::windowed_ft(g2, 0.1, t).values;
    CHECK((w - a * w1 - b * w2).norm() <= 1e-12 * w.norm());
  }
  SUBCASE("deconvolution") {
    const auto x = random_sinogram(80, 10, 7), y = random_sinogram(80, 10, 8);
    auto xy = x;
    xy.values = a * x.values + b * y.values;
    const auto d = deblur::deconvolve_columns(xy, 0.01, 1e-3).values;
    CHECK((d - a * deblur::deconvolve_columns(x, 0.01, 1e-3).values -
           b * deblur::deconvolve_columns(y, 0.01, 1e-3).values)
              .norm() <= 1e-10 * d.norm());
  }
  SUBCASE("single scattering in mu") {
    const auto x = random_image(32, 11, 0.9), y = random_image(32, 12, 0.9);
    ImageGrid xy(RealMatrix(a * x.values + b * y.values));
    const auto theta = periodic_grid(17);
    const cplx k(1.3, -0.4);
    const auto v = pseudotime::direct_v1(xy, k, theta);
    CHECK((v - a * pseudotime::direct_v1(x, k, theta) - b * pseudotime::direct_v1(y, k, theta)).norm() <=
          1e-12 * v.norm());
  }
  SUBCASE("electrode voltages in the currents") {
    const auto mesh = forward::make_disc_mesh(12);
    const auto layout = forward::ElectrodeLayout::uniform(8, 0.5, 1e-2);
    const auto pat = dnmap::trig_patterns(8).currents;
    RealMatrix c1 = pat.leftCols(3), c2 = pat.rightCols(3);
    const auto v = forward::solve_cem(kPhantom, layout, RealMatrix(a * c1 + b * c2), mesh);
    const auto v1 = forward::solve_cem(kPhantom, layout, c1, mesh), v2 = forward::solve_cem(kPhantom, layout, c2, mesh);
    CHECK((v - a * v1 - b * v2).norm() <= 1e-10 * v.norm());
  }
}

TEST_CASE("calibration under voltage scaling") {
  const auto mesh = forward::make_disc_mesh(16);
  const auto layout = forward::ElectrodeLayout::uniform(16, 0.5, 1e-2);
  const auto pat = dnmap::trig_patterns(16, 0.35);
  const RealMatrix trg = forward::solve_cem(kPhantom.scaled(2.7), layout, pat.currents, mesh);
  const RealMatrix clb = forward::solve_cem(Phantom(2.7), layout, pat.currents, mesh);
  const RealMatrix one = forward::solve_cem(Phantom(1.0), layout, pat.currents, mesh);
  const auto base = dnmap::assemble_dn_calibrated(trg, clb, one, pat).lambda;

  for (double c : {0.5, 3.0, 1e3}) {
    CAPTURE(c);
    const auto scaled = dnmap::assemble_dn_calibrated(c * trg, c * clb, one, pat).lambda;
    CHECK((scaled - base).norm() <= 1e-10 * base.norm());

    const RealMatrix r_trg = dnmap::measurement_nd(trg, pat), r_clb = dnmap::measurement_nd(clb, pat);
    const RealMatrix r_one = dnmap::measurement_nd(one, pat);
    const RealMatrix cal = r_one * r_clb.inverse();
    const RealMatrix expect_inv = c * (cal * r_trg - r_one) + dnmap::ideal_nd_reference(16);
    RealMatrix expect = expect_inv.inverse();
    expect = 0.5 * (expect + expect.transpose()).eval();
    const auto all = dnmap::assemble_dn_calibrated(c * trg, c * clb, c * one, pat).lambda;
    CHECK((all - expect).norm() <= 1e-10 * expect.norm());
  }
}

TEST_CASE("results do not depend on the thread count") {
  const auto mu = phantoms::rasterize(kPhantom, 64, phantoms::Field::kMu);
  const auto s = centered_grid(1.0, 80);
  const auto psi = periodic_grid(40);
  const auto sino = recon::radon_transform(mu, s, psi);

  check_thread_invariant([&] { return recon::radon_transform(mu, s, psi).values; });
  check_thread_invariant([&] { return recon::backprojection(sino, 64).values; });
  check_thread_invariant([&] { return recon::fbp(sino, {64}).values; });
  check_thread_invariant([&] { return deblur::deconvolve_columns(sino, 0.01, 1e-3).values; });
  check_thread_invariant([&] { return pseudotime::direct_v1(mu, cplx(2.0, 1.0), periodic_grid(33)); });
  check_thread_invariant(
      [&] { return pseudotime::windowed_ft(random_scattering(9), 0.1, centered_grid(2.0, 40)).values; });
  check_thread_invariant([&] {
    recon::TvOptions opt;
    opt.n = 32;
    opt.iterations = 5;
    opt.ray_samples = 64;
    return recon::tv_reconstruct(sino, opt).image.values;
  });

  const auto mesh = forward::make_disc_mesh(16);
  const auto pat = dnmap::trig_patterns(16);
  const auto layout = forward::ElectrodeLayout::uniform(16, 0.5, 1e-2);
  check_thread_invariant([&] { return forward::solve_cem(kPhantom, layout, pat.currents, mesh); });
  check_thread_invariant([&] { return forward::solve_continuum_nd(kPhantom, 7, mesh); });

  const auto dn = dnmap::radial_dn_matrix(0.5, 1.2, 7);
  check_thread_invariant([&] {
    cgo::BieOptions opt;
    opt.m_theta = 33;
    const auto t = cgo::solve_bie(dn, linspace(-4.0, 4.0, 9), periodic_grid(8), opt);
    return ComplexMatrix(t.plus + t.minus);
  });
}

TEST_CASE("parallel kernels match the serial reference") {
  const auto mu = phantoms::rasterize(kPhantom, 48, phantoms::Field::kMu);
  const auto s = centered_grid(1.0, 50);
  const auto psi = periodic_grid(24);
  const auto r = recon::radon_transform(mu, s, psi);
  CHECK(r.values == serial::radon_transform(mu, s, psi).values);
  CHECK((recon::backprojection(r, 48).values - serial::backprojection(r, 48).values).norm() <=
        1e-13 * recon::backprojection(r, 48).values.norm());
  const auto theta = periodic_grid(33);
  CHECK(pseudotime::direct_v1(mu, cplx(1.5, 0.5), theta) == serial::direct_v1(mu, cplx(1.5, 0.5), theta));
}
