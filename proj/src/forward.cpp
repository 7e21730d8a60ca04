#include "vhpt/forward.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace vhpt::forward {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// 4-point Gauss-Legendre on [0, 1]
constexpr std::array<double, 4> kGaussX{0.0694318442029737, 0.3300094782075719,
                                        0.6699905217924281, 0.9305681557970263};
constexpr std::array<double, 4> kGaussW{0.1739274225687269, 0.3260725774312731,
                                        0.3260725774312731, 0.1739274225687269};

double triangle_area(const Mesh& m, const std::array<int, 3>& t) {
  const auto& a = m.vertices[t[0]];
  const auto& b = m.vertices[t[1]];
  const auto& c = m.vertices[t[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

// Conductivity averaged over the centroid and three interior points.
double element_sigma(const phantoms::Phantom& ph, const Mesh& m, const std::array<int, 3>& t) {
  static constexpr double kW[4][3] = {{1.0 / 3, 1.0 / 3, 1.0 / 3},
                                      {2.0 / 3, 1.0 / 6, 1.0 / 6},
                                      {1.0 / 6, 2.0 / 3, 1.0 / 6},
                                      {1.0 / 6, 1.0 / 6, 2.0 / 3}};
  double acc = 0.0;
  for (const auto& w : kW) {
    double x = 0.0, y = 0.0;
    for (int k = 0; k < 3; ++k) {
      x += w[k] * m.vertices[t[k]][0];
      y += w[k] * m.vertices[t[k]][1];
    }
    acc += ph.sigma_at(x, y);
  }
  return 0.25 * acc;
}

std::vector<Triplet> stiffness_triplets(const phantoms::Phantom& ph, const Mesh& m) {
  std::vector<Triplet> trip;
  trip.reserve(9 * m.triangles.size());
  for (const auto& t : m.triangles) {
    const double area = triangle_area(m, t);
    if (!(area > 0.0)) throw NumericalError("FEM: degenerate or inverted triangle");
    const double sigma = element_sigma(ph, m, t);
    double gx[3], gy[3];
    for (int k = 0; k < 3; ++k) {
      const auto& p1 = m.vertices[t[(k + 1) % 3]];
      const auto& p2 = m.vertices[t[(k + 2) % 3]];
      gx[k] = (p1[1] - p2[1]) / (2.0 * area);
      gy[k] = (p2[0] - p1[0]) / (2.0 * area);
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        trip.emplace_back(t[a], t[b], sigma * area * (gx[a] * gx[b] + gy[a] * gy[b]));
  }
  return trip;
}

struct BoundaryEdge {
  int v0, v1;
  double th0, th1;  // th1 > th0, th1 - th0 < π
};

std::vector<BoundaryEdge> boundary_edges(const Mesh& m) {
  std::vector<BoundaryEdge> edges;
  const int nb = static_cast<int>(m.boundary.size());
  for (int k = 0; k < nb; ++k) {
    const int k1 = (k + 1) % nb;
    double a0 = m.boundary_angle(k), a1 = m.boundary_angle(k1);
    if (a1 <= a0) a1 += kTwoPi;
    edges.push_back({m.boundary[k], m.boundary[k1], a0, a1});
  }
  return edges;
}

template <class Fn>
void integrate_segment(double lo, double hi, Fn&& fn) {
  const double len = hi - lo;
  for (int q = 0; q < 4; ++q) fn(lo + kGaussX[q] * len, kGaussW[q] * len);
}

// Overlap of [a0, a1] with the periodic arc [c - w/2, c + w/2].
std::vector<std::array<double, 2>> arc_overlaps(double a0, double a1, double c, double w) {
  std::vector<std::array<double, 2>> out;
  for (int shift = -1; shift <= 2; ++shift) {
    const double lo = std::max(a0, c - 0.5 * w + shift * kTwoPi);
    const double hi = std::min(a1, c + 0.5 * w + shift * kTwoPi);
    if (hi > lo) out.push_back({lo, hi});
  }
  return out;
}

template <class Solver>
RealMatrix solve_columns(const Solver& solver, const RealMatrix& rhs) {
  RealMatrix out(rhs.rows(), rhs.cols());
  const auto cols = static_cast<int>(rhs.cols());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cols; ++c) out.col(c) = solver.solve(rhs.col(c));
  return out;
}

}  // namespace

double Mesh::boundary_angle(int k) const {
  const auto& p = vertices[boundary[k]];
  double a = std::atan2(p[1], p[0]);
  if (a < 0.0) a += kTwoPi;
  return a;
}

Mesh make_disc_mesh(int rings) {
  if (rings < 1) throw std::invalid_argument("make_disc_mesh: rings must be >= 1");
  Mesh m;
  m.vertices.push_back({0.0, 0.0});
  std::vector<int> prev{0};
  std::vector<double> prev_ang{0.0};
  for (int i = 1; i <= rings; ++i) {
    const double r = static_cast<double>(i) / rings;
    const int count = 6 * i;
    std::vector<int> cur(count);
    std::vector<double> cur_ang(count);
    for (int j = 0; j < count; ++j) {
      const double a = kTwoPi * j / count;
      cur[j] = m.num_vertices();
      cur_ang[j] = a;
      m.vertices.push_back({r * std::cos(a), r * std::sin(a)});
    }
    if (i == 1) {
      for (int j = 0; j < count; ++j) m.triangles.push_back({0, cur[j], cur[(j + 1) % count]});
    } else {
      // zip the two rings together in order of angle
      const int na = static_cast<int>(prev.size());
      int ia = 0, ib = 0;
      while (ia < na || ib < count) {
        const double next_a = ia + 1 < na ? prev_ang[ia + 1] : kTwoPi;
        const double next_b = ib + 1 < count ? cur_ang[ib + 1] : kTwoPi;
        const bool advance_outer = ib < count && (ia >= na || next_b <= next_a);
        if (advance_outer) {
          m.triangles.push_back({prev[ia % na], cur[ib], cur[(ib + 1) % count]});
          ++ib;
        } else {
          m.triangles.push_back({prev[ia], cur[ib % count], prev[(ia + 1) % na]});
          ++ia;
        }
      }
    }
    prev = std::move(cur);
    prev_ang = std::move(cur_ang);
  }
  m.boundary = prev;
  return m;
}

void validate_mesh(const Mesh& m) {
  if (m.vertices.empty() || m.triangles.empty() || m.boundary.size() < 3)
    throw std::invalid_argument("mesh: empty");
  for (const auto& t : m.triangles) {
    for (int v : t)
      if (v < 0 || v >= m.num_vertices()) throw std::invalid_argument("mesh: bad vertex index");
    if (!(triangle_area(m, t) > 0.0))
      throw std::invalid_argument("mesh: triangle not counter-clockwise or degenerate");
  }
  for (int v : m.boundary) {
    if (v < 0 || v >= m.num_vertices()) throw std::invalid_argument("mesh: bad boundary index");
    const double r = std::hypot(m.vertices[v][0], m.vertices[v][1]);
    if (std::abs(r - 1.0) > 1e-9) throw std::invalid_argument("mesh: boundary vertex off the unit circle");
  }
  double turned = 0.0;
  const int nb = static_cast<int>(m.boundary.size());
  for (int k = 0; k < nb; ++k) {
    double d = m.boundary_angle((k + 1) % nb) - m.boundary_angle(k);
    if (d <= -kPi) d += kTwoPi;
    if (d <= 0.0 || d >= kPi) throw std::invalid_argument("mesh: boundary not counter-clockwise");
    turned += d;
  }
  if (std::abs(turned - kTwoPi) > 1e-9) throw std::invalid_argument("mesh: boundary does not close");
}

nlohmann::json to_json(const Mesh& m) {
  return {{"vertices", m.vertices}, {"triangles", m.triangles}, {"boundary", m.boundary}};
}

Mesh mesh_from_json(const nlohmann::json& j) {
  Mesh m;
  m.vertices = j.at("vertices").get<std::vector<std::array<double, 2>>>();
  m.triangles = j.at("triangles").get<std::vector<std::array<int, 3>>>();
  m.boundary = j.at("boundary").get<std::vector<int>>();
  validate_mesh(m);
  return m;
}

ElectrodeLayout ElectrodeLayout::uniform(int count, double coverage, double z) {
  ElectrodeLayout l;
  l.count = count;
  l.coverage = coverage;
  l.contact_impedance.assign(static_cast<std::size_t>(count), z);
  l.validate();
  return l;
}

double ElectrodeLayout::center(int index) const { return kTwoPi * (index + 1) / count; }

void ElectrodeLayout::validate() const {
  if (count < 4 || count % 2 != 0) throw std::invalid_argument("electrodes: count must be even and >= 4");
  if (!(coverage > 0.0 && coverage < 1.0)) throw std::invalid_argument("electrodes: coverage must be in (0,1)");
  if (contact_impedance.size() != static_cast<std::size_t>(count))
    throw std::invalid_argument("electrodes: one contact impedance per electrode required");
  for (double z : contact_impedance)
    if (!(z > 0.0)) throw std::invalid_argument("electrodes: contact impedance must be positive");
}

double analytic_dn_radial(double rho, double s, int n) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("analytic_dn_radial: rho must be in (0,1)");
  if (!(s > 0.0)) throw DomainError("analytic_dn_radial: s must be positive");
  if (n == 0) throw std::invalid_argument("analytic_dn_radial: n must be nonzero");
  const int a = std::abs(n);
  const double mu0 = (1.0 - s) / (1.0 + s);
  const double q = mu0 * std::pow(rho, 2 * a);
  return a * (1.0 - q) / (1.0 + q);
}

double trig_basis(int n, double theta) {
  if (n < 1) throw std::invalid_argument("trig_basis: n must be >= 1");
  return n % 2 == 1 ? std::cos(0.5 * (n + 1) * theta) : std::sin(0.5 * n * theta);
}

RealMatrix solve_continuum_nd(const phantoms::Phantom& phantom, int basis_order, const Mesh& mesh) {
  if (basis_order < 1) throw std::invalid_argument("solve_continuum_nd: basis order must be >= 1");
  const int nv = mesh.num_vertices();
  const int nbasis = 2 * basis_order;

  // ground vertex 0, solve on the remaining nv-1 unknowns
  auto trip = stiffness_triplets(phantom, mesh);
  std::vector<Triplet> reduced;
  reduced.reserve(trip.size());
  for (const auto& t : trip)
    if (t.row() > 0 && t.col() > 0) reduced.emplace_back(t.row() - 1, t.col() - 1, t.value());
  SpMat k(nv - 1, nv - 1);
  k.setFromTriplets(reduced.begin(), reduced.end());

  Eigen::SimplicialLLT<SpMat> solver(k);
  if (solver.info() != Eigen::Success) throw NumericalError("solve_continuum_nd: singular FEM system");

  RealMatrix loads = RealMatrix::Zero(nv, nbasis);
  RealVector bmass = RealVector::Zero(nv);  // ∫ψ_i ds
  for (const auto& e : boundary_edges(mesh)) {
    integrate_segment(e.th0, e.th1, [&](double th, double w) {
      const double l1 = (th - e.th0) / (e.th1 - e.th0), l0 = 1.0 - l1;
      bmass(e.v0) += w * l0;
      bmass(e.v1) += w * l1;
      for (int n = 0; n < nbasis; ++n) {
        const double phi = trig_basis(n + 1, th);
        loads(e.v0, n) += w * l0 * phi;
        loads(e.v1, n) += w * l1 * phi;
      }
    });
  }

  const RealMatrix sol = solve_columns(solver, loads.bottomRows(nv - 1));
  if (!sol.allFinite()) throw NumericalError("solve_continuum_nd: non-finite solution");
  RealMatrix u = RealMatrix::Zero(nv, nbasis);
  u.bottomRows(nv - 1) = sol;
  const double perimeter = bmass.sum();
  for (int n = 0; n < nbasis; ++n) u.col(n).array() -= bmass.dot(u.col(n)) / perimeter;

  return loads.transpose() * u / kPi;
}

RealMatrix solve_cem(const phantoms::Phantom& phantom, const ElectrodeLayout& layout,
                     const RealMatrix& currents, const Mesh& mesh) {
  layout.validate();
  const int L = layout.count;
  if (currents.rows() != L) throw std::invalid_argument("solve_cem: currents must have one row per electrode");
  for (Eigen::Index c = 0; c < currents.cols(); ++c) {
    const double scale = currents.col(c).cwiseAbs().maxCoeff();
    if (std::abs(currents.col(c).sum()) > 1e-9 * scale + 1e-300)
      throw std::invalid_argument("solve_cem: current column " + std::to_string(c) +
                                  " does not sum to zero");
  }
  const int nv = mesh.num_vertices();
  // unknowns: u_0..u_{nv-1}, V_1..V_{L-1}; V_L = 0 is the ground
  const int nu = nv + L - 1;
  auto trip = stiffness_triplets(phantom, mesh);

  const double w = layout.width();
  std::vector<int> overlap_count(static_cast<std::size_t>(L), 0);
  for (const auto& e : boundary_edges(mesh)) {
    for (int l = 0; l < L; ++l) {
      const double invz = 1.0 / layout.contact_impedance[l];
      for (const auto& seg : arc_overlaps(e.th0, e.th1, layout.center(l), w)) {
        ++overlap_count[l];
        double m00 = 0.0, m01 = 0.0, m11 = 0.0, c0 = 0.0, c1 = 0.0;
        integrate_segment(seg[0], seg[1], [&](double th, double q) {
          const double l1 = (th - e.th0) / (e.th1 - e.th0), l0 = 1.0 - l1;
          m00 += q * l0 * l0;
          m01 += q * l0 * l1;
          m11 += q * l1 * l1;
          c0 += q * l0;
          c1 += q * l1;
        });
        trip.emplace_back(e.v0, e.v0, invz * m00);
        trip.emplace_back(e.v0, e.v1, invz * m01);
        trip.emplace_back(e.v1, e.v0, invz * m01);
        trip.emplace_back(e.v1, e.v1, invz * m11);
        if (l < L - 1) {
          const int vi = nv + l;
          trip.emplace_back(e.v0, vi, -invz * c0);
          trip.emplace_back(vi, e.v0, -invz * c0);
          trip.emplace_back(e.v1, vi, -invz * c1);
          trip.emplace_back(vi, e.v1, -invz * c1);
        }
      }
    }
  }
  for (int l = 0; l < L; ++l)
    if (overlap_count[l] == 0) throw std::invalid_argument("solve_cem: mesh does not resolve electrode " + std::to_string(l + 1));
  for (int l = 0; l < L - 1; ++l) trip.emplace_back(nv + l, nv + l, w / layout.contact_impedance[l]);

  SpMat a(nu, nu);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLLT<SpMat> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError("solve_cem: singular CEM system");

  RealMatrix rhs = RealMatrix::Zero(nu, currents.cols());
  rhs.bottomRows(L - 1) = currents.topRows(L - 1);
  const RealMatrix sol = solve_columns(solver, rhs);
  if (!sol.allFinite()) throw NumericalError("solve_cem: non-finite solution");

  RealMatrix v = RealMatrix::Zero(L, currents.cols());
  v.topRows(L - 1) = sol.bottomRows(L - 1);
  for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c).array() -= v.col(c).mean();
  return v;
}

RealMatrix add_noise(const RealMatrix& voltages, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw std::invalid_argument("add_noise: level must be >= 0");
  if (level == 0.0 || voltages.size() == 0) return voltages;
  const double sd = level * voltages.norm() / std::sqrt(static_cast<double>(voltages.size()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sd);
  RealMatrix out = voltages;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) += gauss(rng);
  return out;
}

}  // namespace vhpt::forward
