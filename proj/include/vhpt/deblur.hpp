#pragma once

#include "vhpt/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace vhpt::deblur {

// Transform convention: ĝ(τ) = ∫ e^{-itτ} g(t) dt.

/// g(t) = e^{-t²/(4a)} / (2√(πa)), the inverse transform of e^{-aτ²}.
double gaussian(double a, double t);

struct BlurKernel {
  double a = 0.0;
  std::vector<double> t;
  std::vector<double> g;
};

BlurKernel gaussian_kernel(double a, const std::vector<double>& t);

// Sinogram columns live on s = t/2, where the pseudo-time blur g(t) becomes
// k(s) = 2·g(2s) with transfer function e^{-aξ²/4}.

/// Direct column-wise convolution with k(s) on the offset grid (zero outside).
Sinogram blur_columns(const Sinogram& sharp, double a);

/// Per column: spectrum times H/(H² + λ), H = e^{-aξ²/4}, on a 2× zero-padded FFT.
Sinogram deconvolve_columns(const Sinogram& blurred, double a, double lambda);

struct ExternalOptions {
  std::string command;                 // invoked as: command --in <in.vht> --out <out.vht>
  std::filesystem::path exchange_dir;  // empty: fresh directory under the system temp dir
};

/// Hands the sinogram to an external deblurrer through VHT1 files and reads
/// back a result of identical shape.
Sinogram external_deblur(const Sinogram& blurred, const ExternalOptions& options);

}  // namespace vhpt::deblur
