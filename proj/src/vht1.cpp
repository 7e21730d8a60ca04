#include "vhpt/vht1.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace vhpt::io {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 17;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return v;
}

double get_f64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(v);
}

std::uint32_t checked_dim(Eigen::Index n) {
  if (n < 0 || static_cast<std::uint64_t>(n) > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("VHT1: dimension does not fit in u32");
  return static_cast<std::uint32_t>(n);
}

std::vector<std::uint8_t> header(Dtype dtype, Eigen::Index rows, Eigen::Index cols) {
  std::vector<std::uint8_t> out{'V', 'H', 'T', '1'};
  put_u32(out, kVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  put_u32(out, checked_dim(rows));
  put_u32(out, checked_dim(cols));
  return out;
}

void append_meta(std::vector<std::uint8_t>& out, const nlohmann::json& meta) {
  const std::string text = meta.is_null() ? std::string("{}") : meta.dump();
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Vht1Error(Vht1Errc::kIo, "VHT1: cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Vht1Error(Vht1Errc::kIo, "VHT1: write failed: " + path.string());
}

nlohmann::json grid_meta(const std::vector<double>& v) { return nlohmann::json(v); }

}  // namespace

const RealMatrix& Vht1File::as_real() const {
  if (dtype != Dtype::kReal64) throw Vht1Error(Vht1Errc::kWrongDtype, "VHT1: payload is complex");
  return real;
}

const ComplexMatrix& Vht1File::as_complex() const {
  if (dtype != Dtype::kComplex128)
    throw Vht1Error(Vht1Errc::kWrongDtype, "VHT1: payload is real");
  return complex;
}

std::vector<std::uint8_t> vht1_encode(const RealMatrix& m, const nlohmann::json& meta) {
  auto out = header(Dtype::kReal64, m.rows(), m.cols());
  out.reserve(kHeaderSize + 8 * static_cast<std::size_t>(m.size()) + 64);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
  append_meta(out, meta);
  return out;
}

std::vector<std::uint8_t> vht1_encode(const ComplexMatrix& m, const nlohmann::json& meta) {
  auto out = header(Dtype::kComplex128, m.rows(), m.cols());
  out.reserve(kHeaderSize + 16 * static_cast<std::size_t>(m.size()) + 64);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      put_f64(out, m(i, j).real());
      put_f64(out, m(i, j).imag());
    }
  append_meta(out, meta);
  return out;
}

Vht1File vht1_decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw Vht1Error(Vht1Errc::kTruncated, "VHT1: truncated header");
  if (std::memcmp(bytes.data(), "VHT1", 4) != 0)
    throw Vht1Error(Vht1Errc::kBadMagic, "VHT1: bad magic bytes");
  if (bytes.size() < kHeaderSize) throw Vht1Error(Vht1Errc::kTruncated, "VHT1: truncated header");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kVersion)
    throw Vht1Error(Vht1Errc::kBadVersion, "VHT1: unsupported version " + std::to_string(version));
  const std::uint8_t dt = bytes[8];
  if (dt > 1) throw Vht1Error(Vht1Errc::kBadDtype, "VHT1: unknown dtype " + std::to_string(dt));

  Vht1File out;
  out.dtype = static_cast<Dtype>(dt);
  const std::uint64_t rows = get_u32(bytes.data() + 9);
  const std::uint64_t cols = get_u32(bytes.data() + 13);
  const std::uint64_t elem = out.dtype == Dtype::kReal64 ? 8 : 16;
  const std::uint64_t payload = rows * cols * elem;
  if (bytes.size() < kHeaderSize + payload + 4)
    throw Vht1Error(Vht1Errc::kTruncated, "VHT1: truncated payload");

  const std::uint8_t* p = bytes.data() + kHeaderSize;
  const auto r = static_cast<Eigen::Index>(rows);
  const auto c = static_cast<Eigen::Index>(cols);
  if (out.dtype == Dtype::kReal64) {
    out.real.resize(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j, p += 8) out.real(i, j) = get_f64(p);
  } else {
    out.complex.resize(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j, p += 16)
        out.complex(i, j) = cplx(get_f64(p), get_f64(p + 8));
  }

  const std::uint32_t meta_len = get_u32(p);
  p += 4;
  const auto consumed = static_cast<std::uint64_t>(p - bytes.data());
  if (bytes.size() < consumed + meta_len)
    throw Vht1Error(Vht1Errc::kTruncated, "VHT1: truncated metadata");
  if (meta_len > 0) {
    try {
      out.meta = nlohmann::json::parse(p, p + meta_len);
    } catch (const nlohmann::json::exception& e) {
      throw Vht1Error(Vht1Errc::kBadMetadata, std::string("VHT1: bad metadata: ") + e.what());
    }
  }
  return out;
}

void vht1_write(const std::filesystem::path& path, const RealMatrix& m,
                const nlohmann::json& meta) {
  write_bytes(path, vht1_encode(m, meta));
}

void vht1_write(const std::filesystem::path& path, const ComplexMatrix& m,
                const nlohmann::json& meta) {
  write_bytes(path, vht1_encode(m, meta));
}

Vht1File vht1_read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Vht1Error(Vht1Errc::kIo, "VHT1: cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return vht1_decode(bytes);
}

void write_sinogram(const std::filesystem::path& path, const Sinogram& s, nlohmann::json meta) {
  if (meta.is_null()) meta = nlohmann::json::object();
  meta["offsets"] = grid_meta(s.offsets);
  meta["angles"] = grid_meta(s.angles);
  vht1_write(path, s.values, meta);
}

Sinogram read_sinogram(const std::filesystem::path& path, nlohmann::json* meta) {
  auto f = vht1_read(path);
  Sinogram s;
  s.values = f.as_real();
  if (f.meta.contains("offsets")) s.offsets = f.meta["offsets"].get<std::vector<double>>();
  if (f.meta.contains("angles")) s.angles = f.meta["angles"].get<std::vector<double>>();
  if (s.offsets.size() != static_cast<std::size_t>(s.values.rows()))
    s.offsets = centered_grid(1.0, static_cast<int>(s.values.rows()));
  if (s.angles.size() != static_cast<std::size_t>(s.values.cols()))
    s.angles = periodic_grid(static_cast<int>(s.values.cols()));
  if (meta) *meta = f.meta;
  return s;
}

void write_complex_sinogram(const std::filesystem::path& path, const ComplexSinogram& s,
                            nlohmann::json meta) {
  if (meta.is_null()) meta = nlohmann::json::object();
  meta["times"] = grid_meta(s.times);
  meta["angles"] = grid_meta(s.angles);
  meta["window_a"] = s.window_a;
  meta["r_cut"] = s.r_cut;
  vht1_write(path, s.values, meta);
}

ComplexSinogram read_complex_sinogram(const std::filesystem::path& path, nlohmann::json* meta) {
  auto f = vht1_read(path);
  ComplexSinogram s;
  s.values = f.as_complex();
  s.times = f.meta.value("times", std::vector<double>{});
  s.angles = f.meta.value("angles", std::vector<double>{});
  s.window_a = f.meta.value("window_a", 0.0);
  s.r_cut = f.meta.value("r_cut", 0.0);
  if (meta) *meta = f.meta;
  return s;
}

}  // namespace vhpt::io
