#include "vhpt/deblur.hpp"
#include "vhpt/vht1.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace vhpt;
using namespace vhpt::deblur;
using doctest::Approx;

namespace {

Sinogram bumps(int ns, int na) {
  Sinogram s(centered_grid(1.0, ns), periodic_grid(na));
  for (int c = 0; c < na; ++c)
    for (int r = 0; r < ns; ++r) {
      const double x = s.offsets[r];
      s.values(r, c) = std::exp(-std::pow(x - 0.3 * std::cos(c), 2) / 0.02) -
                       0.5 * std::exp(-std::pow(x + 0.4, 2) / 0.01);
    }
  return s;
}

std::string stub(const std::string& mode) { return std::string(VHPT_STUB_BIN) + " " + mode; }

std::string error_of(const Sinogram& s, const std::string& command) {
  try {
    external_deblur(s, {command, {}});
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("gaussian kernel") {
  CHECK(gaussian(1.0, 0.0) == Approx(0.28209479177).epsilon(1e-10));
  const auto t = centered_grid(2.0, 200);
  const auto k = gaussian_kernel(0.0025, t);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(k.g[i] == k.g[t.size() - 1 - i]);
  double mass = 0.0;
  for (double g : k.g) mass += g * (t[1] - t[0]);
  CHECK(mass == Approx(1.0).epsilon(1e-6));
  CHECK_THROWS(gaussian(0.0, 1.0));
}

TEST_CASE("two spikes survive blur and deblur") {
  const double a = 1e-4;
  Sinogram s(centered_grid(1.0, 200), {0.0});
  s.values(60, 0) = 1.0;
  s.values(140, 0) = -0.6;
  const auto blurred = blur_columns(s, a);
  CHECK(blurred.values(60, 0) < 0.8);
  const auto back = deconvolve_columns(blurred, a, 1e-4);
  Eigen::Index imax, imin;
  back.values.col(0).maxCoeff(&imax);
  back.values.col(0).minCoeff(&imin);
  CHECK(imax == 60);
  CHECK(imin == 140);
  CHECK(back.values(60, 0) == Approx(1.0).epsilon(0.05));
  CHECK(back.values(140, 0) == Approx(-0.6).epsilon(0.05));
}

TEST_CASE("deconvolution limits") {
  Sinogram s = bumps(200, 6);
  Sinogram zero(s.offsets, s.angles);
  CHECK(deconvolve_columns(zero, 0.0025, 1e-3).values.isZero());
  CHECK(deconvolve_columns(s, 0.0025, 1e12).values.norm() < 1e-10 * s.values.norm());
  CHECK_THROWS(deconvolve_columns(s, 0.0025, 0.0));
}

TEST_CASE("deconvolution is linear and column-local") {
  Sinogram a = bumps(200, 6), b = bumps(200, 6);
  b.values = b.values.reverse().eval();
  Sinogram mix = a;
  mix.values = 1.5 * a.values - 0.25 * b.values;
  const auto da = deconvolve_columns(a, 0.0025, 1e-3), db = deconvolve_columns(b, 0.0025, 1e-3);
  const auto dm = deconvolve_columns(mix, 0.0025, 1e-3);
  CHECK((dm.values - (1.5 * da.values - 0.25 * db.values)).norm() <= 1e-12 * dm.values.norm());

  Sinogram perm = a;
  for (int c = 0; c < 6; ++c) perm.values.col(c) = a.values.col(5 - c);
  const auto dp = deconvolve_columns(perm, 0.0025, 1e-3);
  for (int c = 0; c < 6; ++c) CHECK(dp.values.col(c) == da.values.col(5 - c));
}

TEST_CASE("band-limited round trip") {
  const Sinogram x = bumps(200, 8);
  const auto back = deconvolve_columns(blur_columns(x, 0.0025), 0.0025, 1e-4);
  CHECK((back.values - x.values).norm() <= 0.1 * x.values.norm());
}

TEST_CASE("external deblurrer through the exchange files") {
  const Sinogram s = bumps(20, 5);
  SUBCASE("identity") {
    const auto out = external_deblur(s, {VHPT_IDENTITY_STUB, {}});
    CHECK(out.values == s.values);
    CHECK(out.offsets == s.offsets);
  }
  SUBCASE("doubling") {
    const auto dir = std::filesystem::temp_directory_path() / "vhpt-test-exchange";
    std::filesystem::remove_all(dir);
    const auto out = external_deblur(s, {stub("double"), dir});
    CHECK(out.values == 2.0 * s.values);
    CHECK(std::filesystem::exists(dir / "in.vht"));
    CHECK(std::filesystem::exists(dir / "out.vht"));
    CHECK(io::read_sinogram(dir / "in.vht").values == s.values);
  }
  SUBCASE("contract violations") {
    CHECK(error_of(s, stub("transpose")).find("shape") != std::string::npos);
    CHECK(error_of(s, stub("nan")).find("non-finite") != std::string::npos);
    CHECK(error_of(s, stub("garbage")).find("ill-formed") != std::string::npos);
    CHECK(error_of(s, stub("silent")).find("no response") != std::string::npos);
    CHECK(error_of(s, stub("fail")).find("status") != std::string::npos);
    CHECK_THROWS(external_deblur(s, {"", {}}));
  }
}
