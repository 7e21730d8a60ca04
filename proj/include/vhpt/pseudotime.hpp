#pragma once

#include "vhpt/cgo.hpp"
#include "vhpt/phantom.hpp"
#include "vhpt/types.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace vhpt::pseudotime {

/// Analytic scale that turns the ω_odd path into the blurred Radon sinogram.
inline constexpr double kDefaultScale = 2.0 * kPi * kPi;

/// T(t, φ) = (1/2πi)·Σ_m w_m·e^{-aτ_m²}·e^{-itτ_m}·T̃(τ_m, φ), trapezoid weights w_m.
ComplexSinogram windowed_ft(const cgo::ScatteringGrid& grid, double a, const std::vector<double>& t);

struct PhaseOptions {
  double scale = kDefaultScale;
  double imag_warning_fraction = 0.2;
};

/// Real part of scale·∫_{-∞}^t (−e^{iφ}/2πi)·T(t', φ) dt' (cumulative trapezoid),
/// rows relabelled s = t/2. Column p holds the CGO angle φ_p; the values
/// approximate the blurred Radon transform at angle π − φ_p.
Sinogram phase_integrate(const ComplexSinogram& t, const PhaseOptions& options = {},
                         nlohmann::json* meta = nullptr);

/// v₁(e^{iθ}, k) = −i·k̄·(1/π)·Σ μ(x')·e^{-2i·Re(k x')}/(x − x')·ΔA over the raster.
ComplexVector direct_v1(const ImageGrid& mu, cplx k, const std::vector<double>& theta);
ComplexVector direct_v1(const phantoms::Phantom& phantom, cplx k, const std::vector<double>& theta,
                        int raster = 256);

/// CGOTraces with ω⁺ = v₁ and ω⁻ = −v₁, the first-order terms of the BIE traces.
cgo::CGOTraces single_scattering_traces(const ImageGrid& mu, const std::vector<double>& tau,
                                        const std::vector<double>& phi, int m_theta);

struct SingleScattering {
  ComplexSinogram t1a;  // first-order T_odd
  Sinogram r1;          // blurred Radon sinogram on s = t/2, CGO angles
};

/// First-order pseudo-time data from Radon line integrals:
/// T₁ᵃ(t, φ) = (e^{-iφ}/πi)·∂_t (g ∗ ℛ̃)(t), R₁ = (g ∗ ℛ̃)(2s),
/// ℛ̃(t) = ℛμ(π − φ, t/2). Exact disc/ellipse chords when available, otherwise
/// the Radon transform of a `raster`² μ image.
SingleScattering single_scattering_oracle(const phantoms::Phantom& phantom, double a,
                                          const std::vector<double>& t,
                                          const std::vector<double>& phi, int raster = 256);

/// Least-squares c minimising ‖c·measured − reference‖.
double fit_scale(const Sinogram& measured, const Sinogram& reference);

}  // namespace vhpt::pseudotime

namespace vhpt::serial {

ComplexVector direct_v1(const ImageGrid& mu, cplx k, const std::vector<double>& theta);

}  // namespace vhpt::serial
