#include "vhpt/dnmap.hpp"
#include "vhpt/forward.hpp"

#include <doctest.h>

#include <cmath>

using namespace vhpt;
using namespace vhpt::dnmap;
using phantoms::Disc;
using phantoms::Phantom;
using doctest::Approx;

TEST_CASE("trigonometric current patterns") {
  auto p4 = trig_patterns(4, 1.0);
  REQUIRE(p4.currents.rows() == 4);
  REQUIRE(p4.currents.cols() == 2);
  const double h = kPi / 2;
  CHECK(p4.currents(0, 0) == Approx(0.0).scale(1.0));
  CHECK(p4.currents(1, 0) == Approx(-h));
  CHECK(p4.currents(2, 0) == Approx(0.0).scale(1.0));
  CHECK(p4.currents(3, 0) == Approx(h));

  auto p32 = trig_patterns(32, 0.35);
  CHECK(p32.currents.cols() == 30);
  CHECK(p32.amplitude == 0.35);
  CHECK(p32.basis_order() == 15);
  for (int c = 0; c < 30; ++c) CHECK(std::abs(p32.currents.col(c).sum()) <= 1e-12);
  CHECK(p32.currents.col(0).maxCoeff() == Approx(0.35 * kTwoPi / 32));
  CHECK_THROWS(trig_patterns(7));
  CHECK_THROWS(trig_patterns(2));
}

TEST_CASE("ideal ND reference") {
  RealVector d6(4);
  d6 << 1, 1, 0.5, 0.5;
  CHECK(ideal_nd_reference(6).diagonal() == d6);
  auto r32 = ideal_nd_reference(32);
  CHECK(r32(29, 29) == Approx(2.0 / 30));
  CHECK(r32(28, 28) == Approx(2.0 / 30));
  CHECK(r32.isDiagonal());
  for (int i = 0; i + 2 < 30; i += 2) {
    CHECK(r32(i, i) == r32(i + 1, i + 1));
    CHECK(r32(i + 2, i + 2) <= r32(i, i));
    CHECK(r32(i, i) > 0.0);
  }
}

TEST_CASE("continuum assembly") {
  auto dn = assemble_dn_continuum(ideal_nd_reference(10));
  for (int i = 0; i < 8; ++i) CHECK(dn.lambda(i, i) == Approx(i / 2 + 1));
  CHECK(dn.basis_order() == 4);

  RealMatrix a = RealMatrix::Random(6, 6);
  RealMatrix nd = a * a.transpose() + 6.0 * RealMatrix::Identity(6, 6);
  auto inv = assemble_dn_continuum(nd);
  CHECK((inv.lambda.inverse() - nd).norm() <= 1e-10 * nd.norm());

  RealMatrix singular = RealMatrix::Identity(4, 4);
  singular(3, 3) = 1e-14;
  try {
    assemble_dn_continuum(singular);
    FAIL("expected an error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("ND") != std::string::npos);
  }
  CHECK_THROWS(DNMatrix(RealMatrix::Identity(3, 3)));
}

TEST_CASE("calibration collapses when all sets coincide") {
  auto pat = trig_patterns(16, 0.35);
  auto v = forward::solve_cem(Phantom(2.7), forward::ElectrodeLayout::uniform(16), pat.currents,
                              forward::make_disc_mesh(24));
  for (auto form : {CalibrationForm::kNdSide, CalibrationForm::kDnSide}) {
    auto dn = assemble_dn_calibrated(v, v, v, pat, {form});
    const RealMatrix expect = ideal_nd_reference(16).inverse();
    CHECK((dn.lambda - expect).norm() <= 1e-9 * expect.norm());
    CHECK((dn.lambda - dn.lambda.transpose()).norm() == 0.0);
  }
}

TEST_CASE("calibrated tank measurement against the radial oracle") {
  const int L = 32;
  const double tank = 2.7;
  auto pat = trig_patterns(L, 0.35);
  auto mesh = forward::make_disc_mesh(64);
  auto layout = forward::ElectrodeLayout::uniform(L, 0.5, 1e-2);
  const Phantom target(1.0, {{Disc{{0.0, 0.0}, 0.5}, 2.0}});
  auto v_trg = forward::solve_cem(target.scaled(tank), layout, pat.currents, mesh);
  auto v_clb = forward::solve_cem(Phantom(tank), layout, pat.currents, mesh);
  auto v_1 = forward::solve_cem(Phantom(1.0), layout, pat.currents, mesh);
  auto nd = assemble_dn_calibrated(v_trg, v_clb, v_1, pat);
  auto dn = assemble_dn_calibrated(v_trg, v_clb, v_1, pat, {CalibrationForm::kDnSide});
  CHECK(nd.lambda(0, 0) == Approx(13.0 / 11.0).epsilon(0.05));
  CHECK(nd.lambda(1, 1) == Approx(13.0 / 11.0).epsilon(0.05));
  CHECK((nd.lambda - dn.lambda).norm() <= 1e-10 * nd.lambda.norm());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(nd.lambda);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("ill-conditioned calibration names the matrix") {
  auto pat = trig_patterns(8, 1.0);
  RealMatrix v = RealMatrix::Zero(8, 6);
  v(0, 0) = 1.0;
  try {
    assemble_dn_calibrated(v, v, v, pat);
    FAIL("expected an error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("R_clb") != std::string::npos);
  }
}
