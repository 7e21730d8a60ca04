#pragma once

#include "vhpt/phantom.hpp"
#include "vhpt/types.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <vector>

namespace vhpt::forward {

/// Conforming triangulation of the unit disc.
struct Mesh {
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise
  std::vector<int> boundary;                  // counter-clockwise, on |x| = 1

  [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices.size()); }
  [[nodiscard]] int num_triangles() const { return static_cast<int>(triangles.size()); }
  /// Polar angle in [0, 2π) of boundary vertex k.
  [[nodiscard]] double boundary_angle(int k) const;
};

/// Concentric-ring disc mesh: ring i has radius i/rings and 6·i vertices,
/// giving 6·rings² triangles. Every ring radius is resolved exactly, so
/// centred discs of radius p/rings are conforming.
Mesh make_disc_mesh(int rings);

/// Throws std::invalid_argument if the mesh violates the Mesh invariants.
void validate_mesh(const Mesh& mesh);

nlohmann::json to_json(const Mesh& mesh);
Mesh mesh_from_json(const nlohmann::json& j);

struct ElectrodeLayout {
  int count = 32;
  double coverage = 0.5;
  std::vector<double> contact_impedance;  // one per electrode

  static ElectrodeLayout uniform(int count, double coverage = 0.5, double z = 1e-2);

  /// Centre of electrode ℓ = 1..L at ℓ·2π/L (returned for index ℓ-1).
  [[nodiscard]] double center(int index) const;
  [[nodiscard]] double width() const { return coverage * kTwoPi / count; }
  void validate() const;
};

/// Radial DN eigenvalue for σ = s inside radius rho and 1 outside, on e^{inθ}.
double analytic_dn_radial(double rho, double s, int n);

/// Trigonometric basis function n = 1..2N with unit amplitude:
/// odd n → cos((n+1)/2·θ), even n → sin(n/2·θ).
double trig_basis(int n, double theta);

/// Piecewise-linear FEM approximation of the ND map in the trigonometric
/// basis, normalised so that σ ≡ 1 gives diag(1, 1, 1/2, 1/2, ...).
/// Entry (m, n) = (1/π)·⟨φ_m, R_σ φ_n⟩.
RealMatrix solve_continuum_nd(const phantoms::Phantom& phantom, int basis_order, const Mesh& mesh);

/// Complete electrode model. Each column of `currents` is one injection
/// (must sum to zero); returns electrode potentials with zero column mean.
RealMatrix solve_cem(const phantoms::Phantom& phantom, const ElectrodeLayout& layout,
                     const RealMatrix& currents, const Mesh& mesh);

/// Additive Gaussian noise with std = level·‖V‖_F/√(count), deterministic per seed.
RealMatrix add_noise(const RealMatrix& voltages, double level, std::uint64_t seed);

}  // namespace vhpt::forward
