#pragma once

#include "vhpt/types.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace vhpt::recon {

// Radon angle convention: column q integrates μ along the line
// {x : x·(cos ψ_q, sin ψ_q) = s}.

/// Ray-driven line integrals, bilinear interpolation at `ray_samples`
/// cell-centred points across [-1, 1].
Sinogram radon_transform(const ImageGrid& mu, const std::vector<double>& offsets,
                         const std::vector<double>& angles, int ray_samples = 400);

/// Exact adjoint of radon_transform under the plain ℓ² inner products.
ImageGrid backprojection(const Sinogram& sinogram, int n, int ray_samples = 400);

using SparseOperator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// radon_transform as a sparse matrix: row r·M + q is ray (offset r, angle q),
/// column i·n + j is pixel (i, j).
SparseOperator radon_matrix(int n, const std::vector<double>& offsets,
                            const std::vector<double>& angles, int ray_samples = 400);

enum class Filter { kRamLak, kNone };

struct FbpOptions {
  int n = 128;
  Filter filter = Filter::kRamLak;
  bool hann = false;
};

/// Ramp-filtered back-projection over angles covering [0, 2π).
ImageGrid fbp(const Sinogram& sinogram, const FbpOptions& options = {});

/// Spatial Ram-Lak kernel h(kΔs) for |k| < count.
std::vector<double> ram_lak_kernel(double ds, int count);

/// Column-wise ramp filtering (linear convolution, zero padded).
RealMatrix ramp_filter(const RealMatrix& columns, double ds, bool hann = false);

enum class TvSolver {
  kMonotone,        // majorise-minimise proximal gradient, primal-dual inner TV prox
  kChambollePock,   // plain primal-dual on [R; ∇]
};

struct TvOptions {
  TvSolver solver = TvSolver::kMonotone;
  double alpha = 0.009;
  int iterations = 400;
  int n = 128;
  int ray_samples = 256;
  int power_iterations = 30;
  int inner_iterations = 40;
};

struct TvResult {
  ImageGrid image;
  std::vector<double> objective;  // after each iteration
  double operator_norm = 0.0;
  int rejected_steps = 0;  // monotone solver: prox results that did not improve
};

/// ½·Δs·Δψ·‖Rμ − S‖² + α·h·Σ|∇μ| with forward differences.
double tv_objective(const ImageGrid& mu, const Sinogram& sinogram, double alpha, int ray_samples);

/// Minimises the objective above with μ constrained to the disc. The
/// monotone solver never increases the objective between iterations.
TvResult tv_reconstruct(const Sinogram& sinogram, const TvOptions& options = {});

/// σ = (1 − μ)/(1 + μ) with μ clipped to [−1 + ε, 1 − ε]; zero outside the disc
/// becomes 1.
ImageGrid finalize_sigma(const ImageGrid& mu, double eps = 1e-6);

/// Reorders columns from the CGO angle φ_p to the Radon angle ψ = π − φ, both
/// on the grid 2πj/M (M even).
Sinogram cgo_to_radon_angles(const Sinogram& cgo);
Sinogram radon_to_cgo_angles(const Sinogram& radon);

}  // namespace vhpt::recon

namespace vhpt::serial {

Sinogram radon_transform(const ImageGrid& mu, const std::vector<double>& offsets,
                         const std::vector<double>& angles, int ray_samples = 400);
ImageGrid backprojection(const Sinogram& sinogram, int n, int ray_samples = 400);

}  // namespace vhpt::serial
