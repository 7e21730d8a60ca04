#pragma once

// VHT1 matrix container.
//
//   offset  size  field
//   0       4     magic "VHT1"
//   4       4     version (u32 LE) = 1
//   8       1     dtype (u8): 0 = real64, 1 = complex128 (re, im interleaved)
//   9       4     rows (u32 LE)
//   13      4     cols (u32 LE)
//   17      ...   payload, row-major, little-endian IEEE-754
//   ...     4     metadata length in bytes (u32 LE)
//   ...     n     metadata, UTF-8 JSON

#include "vhpt/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vhpt::io {

enum class Vht1Errc {
  kIo = 1,
  kBadMagic,
  kBadVersion,
  kBadDtype,
  kTruncated,
  kBadMetadata,
  kWrongDtype,
};

class Vht1Error : public std::runtime_error {
 public:
  Vht1Error(Vht1Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  [[nodiscard]] Vht1Errc code() const { return code_; }

 private:
  Vht1Errc code_;
};

enum class Dtype : std::uint8_t { kReal64 = 0, kComplex128 = 1 };

struct Vht1File {
  Dtype dtype = Dtype::kReal64;
  RealMatrix real;
  ComplexMatrix complex;
  nlohmann::json meta = nlohmann::json::object();

  /// Throws kWrongDtype when the payload is complex.
  [[nodiscard]] const RealMatrix& as_real() const;
  [[nodiscard]] const ComplexMatrix& as_complex() const;
};

std::vector<std::uint8_t> vht1_encode(const RealMatrix& m, const nlohmann::json& meta = {});
std::vector<std::uint8_t> vht1_encode(const ComplexMatrix& m, const nlohmann::json& meta = {});
Vht1File vht1_decode(const std::vector<std::uint8_t>& bytes);

void vht1_write(const std::filesystem::path& path, const RealMatrix& m,
                const nlohmann::json& meta = {});
void vht1_write(const std::filesystem::path& path, const ComplexMatrix& m,
                const nlohmann::json& meta = {});
Vht1File vht1_read(const std::filesystem::path& path);

/// Sinogram helpers: offsets/angles travel in the metadata blob.
void write_sinogram(const std::filesystem::path& path, const Sinogram& s,
                    nlohmann::json meta = {});
Sinogram read_sinogram(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

void write_complex_sinogram(const std::filesystem::path& path, const ComplexSinogram& s,
                            nlohmann::json meta = {});
ComplexSinogram read_complex_sinogram(const std::filesystem::path& path,
                                      nlohmann::json* meta = nullptr);

}  // namespace vhpt::io
