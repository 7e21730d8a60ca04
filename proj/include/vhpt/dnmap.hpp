#pragma once

#include "vhpt/types.hpp"

#include <string>

namespace vhpt::dnmap {

/// Column n (n = 1..L-2) samples I0·φ_n at θ_ℓ = ℓ·2π/L, scaled by 2π/L.
/// The pattern n = L-1 (sin(L/2·θ), identically zero at the centres) is dropped.
struct CurrentPatternMatrix {
  RealMatrix currents;  // L × (L-2)
  double amplitude = 1.0;

  [[nodiscard]] int electrodes() const { return static_cast<int>(currents.rows()); }
  [[nodiscard]] int basis_order() const { return static_cast<int>(currents.cols()) / 2; }
};

/// Symmetric DN matrix in the trigonometric basis, coefficient order
/// (cos θ, sin θ, cos 2θ, sin 2θ, ...).
struct DNMatrix {
  RealMatrix lambda;

  DNMatrix() = default;
  explicit DNMatrix(RealMatrix m);

  [[nodiscard]] int basis_order() const { return static_cast<int>(lambda.rows()) / 2; }
};

CurrentPatternMatrix trig_patterns(int electrodes, double amplitude = 1.0);

/// diag(1, 1, 1/2, 1/2, ..., 2/(L-2), 2/(L-2)).
RealMatrix ideal_nd_reference(int electrodes);

/// Exact DN matrix of a radial phantom (σ = s for r < rho), diagonal |n|·(...).
DNMatrix radial_dn_matrix(double rho, double s, int basis_order);

/// Current-to-voltage matrix Iᵀ·V/(π·I0²), which approximates the ND matrix
/// in the same normalisation as the continuum solver.
RealMatrix measurement_nd(const RealMatrix& voltages, const CurrentPatternMatrix& patterns);

enum class CalibrationForm {
  kNdSide,    // (C·R_trg − R1cem + R1)⁻¹, then ½(Λ̃ + Λ̃ᵀ)
  kDnSide,    // Λ̃ = Λ1cem⁻¹·Λclb·Λtrg⁻¹ − Λ1cem⁻¹ + Λ1⁻¹, then ½(Λ̃⁻¹ + Λ̃⁻ᵀ)
};

struct CalibrationOptions {
  CalibrationForm form = CalibrationForm::kNdSide;
  double condition_cap = 1e10;
};

DNMatrix assemble_dn_calibrated(const RealMatrix& v_trg, const RealMatrix& v_clb,
                                const RealMatrix& v_1cem, const CurrentPatternMatrix& patterns,
                                const CalibrationOptions& options = {});

/// Symmetrised inverse of a continuum ND matrix.
DNMatrix assemble_dn_continuum(const RealMatrix& nd, double condition_cap = 1e10);

/// (R_σ − R_1 + R1_ideal)⁻¹ symmetrised, with R_1 the same solver's σ ≡ 1 output.
/// Discretisation error common to both solves cancels.
DNMatrix assemble_dn_continuum_relative(const RealMatrix& nd_sigma, const RealMatrix& nd_one,
                                        double condition_cap = 1e10);

/// 2-norm condition number.
double condition_number(const RealMatrix& m);

/// Inverse, or NumericalError naming `what` if cond(m) exceeds the cap.
RealMatrix checked_inverse(const RealMatrix& m, const std::string& what, double condition_cap);

}  // namespace vhpt::dnmap
