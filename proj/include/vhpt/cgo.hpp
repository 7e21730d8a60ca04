#pragma once

#include "vhpt/dnmap.hpp"
#include "vhpt/types.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace vhpt::cgo {

// Boundary operators act on samples g(θ_j), θ_j = 2πj/M_θ, M_θ odd. A
// complex function is stored as the real vector (Re g, Im g) of length 2·M_θ.

/// Samples → coefficients (mean, a_1, b_1, ..., a_K, b_K), K = (M-1)/2,
/// g = mean + Σ a_n cos nθ + b_n sin nθ.
RealMatrix fourier_analysis(int m_theta);
RealMatrix fourier_synthesis(int m_theta);

/// μ-Hilbert transform H_μ = ∂_T⁻¹·Λ on modes 1..N, classical conjugation
/// above N, zero on constants.
RealMatrix hilbert_matrix(const dnmap::DNMatrix& dn, int m_theta);

/// H_{-μ} = −(H_μ)⁻¹ on the zero-mean retained block.
RealMatrix hilbert_matrix_neg(const dnmap::DNMatrix& dn, int m_theta);

/// Real 2M×2M matrix of P g = ½(g + i·H g) + ½·mean(g), where H acts as
/// h_plus on Re g and h_minus on Im g.
RealMatrix projection_operator(const RealMatrix& h_plus, const RealMatrix& h_minus);

/// E_{-k}·P·E_k with E_k multiplication by e^{ik e^{iθ}}.
RealMatrix conjugate_projection(const RealMatrix& p, cplx k, double k_cutoff);

struct BieOptions {
  int m_theta = 65;
  double k_cutoff = 12.0;
  double residual_tolerance = 1e-6;
};

/// Traces ω± on the θ grid for k = τ_m·e^{iφ_p}; column index p·M_τ + m.
struct CGOTraces {
  std::vector<double> theta;
  std::vector<double> tau;
  std::vector<double> phi;
  ComplexMatrix plus;
  ComplexMatrix minus;
  std::vector<double> residual_plus;
  std::vector<double> residual_minus;
  int residual_warnings = 0;

  [[nodiscard]] int column(int m, int p) const { return p * static_cast<int>(tau.size()) + m; }
  [[nodiscard]] nlohmann::json metadata() const;
};

/// T̃_odd(τ_m, φ_p), rows τ, columns φ.
struct ScatteringGrid {
  std::vector<double> tau;
  std::vector<double> phi;
  ComplexMatrix values;
};

CGOTraces solve_bie(const dnmap::DNMatrix& dn, const std::vector<double>& tau,
                    const std::vector<double>& phi, const BieOptions& options = {});

/// Same solve with explicit H_μ and H_{-μ}, e.g. H_{-μ} from Λ_{1/σ}.
CGOTraces solve_bie(const RealMatrix& h_plus, const RealMatrix& h_minus,
                    const std::vector<double>& tau, const std::vector<double>& phi,
                    const BieOptions& options = {});

/// (1/2πi)∮ (ω⁺ − ω⁻) dx by the trapezoid rule.
ScatteringGrid scattering_trace(const CGOTraces& traces);

/// Trapezoid contour integral (1/2πi)∮ f dx for one trace on the θ grid.
cplx contour_average(const ComplexVector& values);

}  // namespace vhpt::cgo

namespace vhpt::serial {

cgo::CGOTraces solve_bie(const RealMatrix& h_plus, const RealMatrix& h_minus,
                         const std::vector<double>& tau, const std::vector<double>& phi,
                         const cgo::BieOptions& options = {});

}  // namespace vhpt::serial
