#include "vhpt/deblur.hpp"

#include "vhpt/vht1.hpp"

#include <unsupported/Eigen/FFT>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>

namespace vhpt::deblur {

namespace {

void check_a(double a) {
  if (!(a > 0.0)) throw std::invalid_argument("deblur: window parameter a must be positive");
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::filesystem::path fresh_directory() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto dir = base / ("vhpt-deblur-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    if (std::filesystem::create_directory(dir)) return dir;
  }
  throw std::runtime_error("external_deblur: cannot create exchange directory");
}

}  // namespace

double gaussian(double a, double t) {
  check_a(a);
  return std::exp(-t * t / (4.0 * a)) / (2.0 * std::sqrt(kPi * a));
}

BlurKernel gaussian_kernel(double a, const std::vector<double>& t) {
  check_a(a);
  BlurKernel k{a, t, {}};
  k.g.reserve(t.size());
  for (double x : t) k.g.push_back(gaussian(a, x));
  return k;
}

Sinogram blur_columns(const Sinogram& sharp, double a) {
  check_a(a);
  const int ns = sharp.num_offsets();
  const double ds = sharp.offset_step();
  RealMatrix kernel(ns, ns);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j)
      kernel(i, j) = 2.0 * gaussian(a, 2.0 * (sharp.offsets[i] - sharp.offsets[j])) * ds;
  Sinogram out(sharp.offsets, sharp.angles);
  out.values = kernel * sharp.values;
  return out;
}

Sinogram deconvolve_columns(const Sinogram& blurred, double a, double lambda) {
  check_a(a);
  if (!(lambda > 0.0)) throw std::invalid_argument("deconvolve_columns: lambda must be positive");
  const int ns = blurred.num_offsets();
  const double ds = blurred.offset_step();
  const int nfft = 2 * ns;
  std::vector<double> filter(static_cast<std::size_t>(nfft));
  for (int f = 0; f < nfft; ++f) {
    const int m = f <= nfft / 2 ? f : f - nfft;
    const double xi = kTwoPi * m / (nfft * ds);
    const double h = std::exp(-a * xi * xi / 4.0);
    filter[f] = h / (h * h + lambda);
  }
  Sinogram out(blurred.offsets, blurred.angles);
  const int nc = blurred.num_angles();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < nc; ++c) {
    Eigen::FFT<double> fft;
    std::vector<double> col(static_cast<std::size_t>(nfft), 0.0), res;
    for (int r = 0; r < ns; ++r) col[r] = blurred.values(r, c);
    std::vector<cplx> spec;
    fft.fwd(spec, col);
    for (int f = 0; f < nfft; ++f) spec[f] *= filter[f];
    fft.inv(res, spec);
    for (int r = 0; r < ns; ++r) out.values(r, c) = res[r];
  }
  return out;
}

Sinogram external_deblur(const Sinogram& blurred, const ExternalOptions& options) {
  if (options.command.empty()) throw std::invalid_argument("external_deblur: no command given");
  std::filesystem::path dir = options.exchange_dir;
  if (dir.empty())
    dir = fresh_directory();
  else
    std::filesystem::create_directories(dir);
  const auto in = dir / "in.vht";
  const auto out = dir / "out.vht";
  std::filesystem::remove(out);
  io::write_sinogram(in, blurred);

  const std::string cmd =
      options.command + " --in " + shell_quote(in.string()) + " --out " + shell_quote(out.string());
  const int status = std::system(cmd.c_str());
  if (status != 0)
    throw std::runtime_error("external_deblur: command exited with status " + std::to_string(status) +
                             ": " + cmd);
  if (!std::filesystem::exists(out))
    throw std::runtime_error("external_deblur: no response written to " + out.string());

  Sinogram result(blurred.offsets, blurred.angles);
  try {
    result.values = io::vht1_read(out).as_real();
  } catch (const io::Vht1Error& e) {
    throw std::runtime_error(std::string("external_deblur: ill-formed response: ") + e.what());
  }
  if (result.values.rows() != blurred.values.rows() || result.values.cols() != blurred.values.cols())
    throw std::runtime_error("external_deblur: response shape " + std::to_string(result.values.rows()) +
                             "x" + std::to_string(result.values.cols()) + " does not match input " +
                             std::to_string(blurred.values.rows()) + "x" +
                             std::to_string(blurred.values.cols()));
  if (!result.values.allFinite()) throw std::runtime_error("external_deblur: response has non-finite values");
  return result;
}

}  // namespace vhpt::deblur
