#include "vhpt/image_io.hpp"
#include "vhpt/pipeline.hpp"
#include "vhpt/vht1.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace vhpt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / "vhpt-test-io";
  fs::create_directories(d);
  return d / name;
}

io::Vht1Errc decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    io::vht1_decode(bytes);
  } catch (const io::Vht1Error& e) {
    return e.code();
  }
  return io::Vht1Errc{};
}

}  // namespace

TEST_CASE("grids") {
  auto l = linspace(-1.0, 1.0, 5);
  CHECK(l.front() == -1.0);
  CHECK(l.back() == 1.0);
  CHECK(l[2] == doctest::Approx(0.0));
  auto p = periodic_grid(4);
  CHECK(p[1] == doctest::Approx(kPi / 2));
  auto c = centered_grid(2.0, 200);
  CHECK(c.size() == 200);
  CHECK(c.front() == doctest::Approx(-2.0 + 0.01));
  CHECK(c[99] == doctest::Approx(-c[100]));
  CHECK_THROWS(linspace(0, 1, 0));
}

TEST_CASE("image grid support") {
  ImageGrid g(8);
  CHECK(g.values.isZero());
  g.values.setOnes();
  g.mask_to_disc();
  CHECK(g.values(0, 0) == 0.0);
  CHECK(g.values(4, 4) == 1.0);
  CHECK_THROWS(ImageGrid(1));
  CHECK_THROWS(ImageGrid(RealMatrix(3, 4)));
}

TEST_CASE("vht1 header layout is bit exact") {
  RealMatrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  auto b = io::vht1_encode(m, {{"k", 1}});
  REQUIRE(b.size() == 17 + 6 * 8 + 4 + std::string(R"({"k":1})").size());
  CHECK(std::memcmp(b.data(), "VHT1", 4) == 0);
  CHECK(b[4] == 1);
  CHECK(b[5] == 0);
  CHECK(b[8] == 0);
  CHECK(b[9] == 2);
  CHECK(b[13] == 3);
  double second;
  std::memcpy(&second, b.data() + 17 + 8, 8);
  CHECK(second == 2.0);  // row-major
}

TEST_CASE("vht1 round trips") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  SUBCASE("real") {
    RealMatrix m = RealMatrix::NullaryExpr(5, 7, [&] { return n(rng); });
    auto f = io::vht1_decode(io::vht1_encode(m, {{"note", "x"}}));
    CHECK(f.dtype == io::Dtype::kReal64);
    CHECK(f.as_real() == m);
    CHECK(f.meta["note"] == "x");
    CHECK_THROWS_AS(f.as_complex(), io::Vht1Error);
  }
  SUBCASE("complex") {
    ComplexMatrix m = ComplexMatrix::NullaryExpr(4, 3, [&] { return cplx(n(rng), n(rng)); });
    auto path = scratch("c.vht");
    io::vht1_write(path, m);
    auto f = io::vht1_read(path);
    CHECK(f.as_complex() == m);
  }
  SUBCASE("empty") {
    auto f = io::vht1_decode(io::vht1_encode(RealMatrix(0, 0)));
    CHECK(f.real.rows() == 0);
    CHECK(f.real.cols() == 0);
  }
}

TEST_CASE("vht1 error codes are distinct") {
  RealMatrix m = RealMatrix::Ones(3, 3);
  auto good = io::vht1_encode(m, {{"a", 1}});

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(decode_error(bad_magic) == io::Vht1Errc::kBadMagic);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK(decode_error(bad_version) == io::Vht1Errc::kBadVersion);

  auto bad_dtype = good;
  bad_dtype[8] = 7;
  CHECK(decode_error(bad_dtype) == io::Vht1Errc::kBadDtype);

  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, std::size_t{40}, good.size() - 1}) {
    auto t = good;
    t.resize(cut);
    CHECK(decode_error(t) == io::Vht1Errc::kTruncated);
  }

  auto bad_meta = good;
  bad_meta.back() = '#';
  CHECK(decode_error(bad_meta) == io::Vht1Errc::kBadMetadata);

  try {
    io::vht1_read(scratch("does-not-exist.vht"));
    FAIL("expected an error");
  } catch (const io::Vht1Error& e) {
    CHECK(e.code() == io::Vht1Errc::kIo);
  }
}

TEST_CASE("sinogram files carry their grids") {
  Sinogram s(centered_grid(1.0, 6), periodic_grid(4));
  s.values.setRandom();
  auto path = scratch("s.vht");
  io::write_sinogram(path, s, {{"tag", 3}});
  nlohmann::json meta;
  auto r = io::read_sinogram(path, &meta);
  CHECK(r.values == s.values);
  CHECK(r.offsets == s.offsets);
  CHECK(r.angles == s.angles);
  CHECK(meta["tag"] == 3);

  ComplexSinogram c;
  c.values = ComplexMatrix::Random(6, 4);
  c.times = centered_grid(2.0, 6);
  c.angles = periodic_grid(4);
  c.window_a = 0.1;
  c.r_cut = 6;
  io::write_complex_sinogram(path, c);
  auto rc = io::read_complex_sinogram(path);
  CHECK(rc.values == c.values);
  CHECK(rc.window_a == 0.1);
  CHECK(rc.r_cut == 6);
}

TEST_CASE("sha256 of a known message") {
  auto path = scratch("abc.txt");
  {
    std::ofstream f(path, std::ios::binary);
    f << "abc";
  }
  CHECK(pipeline::sha256_file(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("image export records min and max") {
  RealMatrix m(4, 4);
  m.setConstant(0.5);
  m(1, 2) = 2.0;
  auto r = io::write_png_gray(scratch("g.png"), m);
  CHECK(r.min == 0.5);
  CHECK(r.max == 2.0);
  auto p = io::write_pgm(scratch("g.pgm"), m);
  CHECK(p.max == 2.0);
  std::ifstream f(scratch("g.pgm"), std::ios::binary);
  std::string magic;
  f >> magic;
  CHECK(magic == "P5");
  CHECK(fs::file_size(scratch("g.png")) > 8);
  CHECK(io::flip_rows(m)(2, 2) == 2.0);

  std::vector<double> x{0, 1, 2}, y{0, 0, 0};
  CHECK_NOTHROW(io::write_png_profile(scratch("flat.png"), x, y));
}
