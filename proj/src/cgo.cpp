#include "vhpt/cgo.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>
#include <string>

namespace vhpt::cgo {

namespace {

void check_grid(int m_theta) {
  if (m_theta < 3 || m_theta % 2 == 0)
    throw std::invalid_argument("theta grid must have an odd number (>= 3) of points");
}

// Coefficient-space operator: Λ block through ∂_T⁻¹, classical above N.
RealMatrix hilbert_coefficients(const RealMatrix& lambda, int m_theta) {
  check_grid(m_theta);
  const int k_max = (m_theta - 1) / 2;
  const int n_ret = static_cast<int>(lambda.rows()) / 2;
  if (n_ret > k_max)
    throw std::invalid_argument("theta grid too coarse for DN basis order " + std::to_string(n_ret));
  RealMatrix inv_dt = RealMatrix::Zero(2 * n_ret, 2 * n_ret);
  for (int n = 1; n <= n_ret; ++n) {
    inv_dt(2 * n - 2, 2 * n - 1) = -1.0 / n;
    inv_dt(2 * n - 1, 2 * n - 2) = 1.0 / n;
  }
  RealMatrix h = RealMatrix::Zero(m_theta, m_theta);
  h.block(1, 1, 2 * n_ret, 2 * n_ret) = inv_dt * lambda;
  for (int n = n_ret + 1; n <= k_max; ++n) {
    h(2 * n - 1, 2 * n) = -1.0;
    h(2 * n, 2 * n - 1) = 1.0;
  }
  return h;
}

RealMatrix to_samples(const RealMatrix& coeff_op, int m_theta) {
  return fourier_synthesis(m_theta) * coeff_op * fourier_analysis(m_theta);
}

struct Solved {
  ComplexVector omega;
  double residual;
};

Solved solve_one(const RealMatrix& p, const RealMatrix& p0, cplx k, const BieOptions& opt) {
  const int m = opt.m_theta;
  if (k == cplx(0.0, 0.0)) return {ComplexVector::Zero(m), 0.0};
  RealMatrix a = -conjugate_projection(p, k, opt.k_cutoff) - p0;
  a.diagonal().array() += 1.0;
  RealVector rhs = RealVector::Zero(2 * m);
  rhs.head(m).setConstant(-1.0);
  Eigen::PartialPivLU<RealMatrix> lu(a);
  if (!(lu.rcond() > 1e-14))
    throw NumericalError("solve_bie: singular system at k = (" + std::to_string(k.real()) + ", " +
                         std::to_string(k.imag()) + ")");
  const RealVector x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericalError("solve_bie: non-finite solution");
  Solved out;
  out.residual = (a * x - rhs).norm() / x.norm();
  out.omega.resize(m);
  for (int j = 0; j < m; ++j) out.omega(j) = cplx(x(j) - 1.0, x(m + j));
  return out;
}

}  // namespace

namespace detail {

CGOTraces solve_impl(const RealMatrix& h_plus, const RealMatrix& h_minus,
                     const std::vector<double>& tau, const std::vector<double>& phi,
                     const BieOptions& opt, bool parallel) {
  check_grid(opt.m_theta);
  const int m = opt.m_theta;
  if (h_plus.rows() != m || h_plus.cols() != m || h_minus.rows() != m || h_minus.cols() != m)
    throw std::invalid_argument("solve_bie: Hilbert matrices do not match the theta grid");
  for (double t : tau)
    if (std::abs(t) > opt.k_cutoff)
      throw std::invalid_argument("solve_bie: |k| = " + std::to_string(std::abs(t)) + " beyond cutoff");

  const RealMatrix h0 = hilbert_coefficients(RealMatrix(0, 0), m);
  const RealMatrix h_classical = to_samples(h0, m);
  const RealMatrix p_plus = projection_operator(h_plus, h_minus);
  const RealMatrix p_minus = projection_operator(h_minus, h_plus);
  const RealMatrix p0 = projection_operator(h_classical, h_classical);

  CGOTraces out;
  out.theta = periodic_grid(m);
  out.tau = tau;
  out.phi = phi;
  const int mt = static_cast<int>(tau.size());
  const int cols = mt * static_cast<int>(phi.size());
  out.plus.resize(m, cols);
  out.minus.resize(m, cols);
  out.residual_plus.assign(static_cast<std::size_t>(cols), 0.0);
  out.residual_minus.assign(static_cast<std::size_t>(cols), 0.0);

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int c = 0; c < cols; ++c) {
    const cplx k = tau[c % mt] * std::exp(kI * phi[c / mt]);
    auto sp = solve_one(p_plus, p0, k, opt);
    auto sm = solve_one(p_minus, p0, k, opt);
    out.plus.col(c) = sp.omega;
    out.minus.col(c) = sm.omega;
    out.residual_plus[c] = sp.residual;
    out.residual_minus[c] = sm.residual;
  }
  for (int c = 0; c < cols; ++c) {
    if (out.residual_plus[c] > opt.residual_tolerance) ++out.residual_warnings;
    if (out.residual_minus[c] > opt.residual_tolerance) ++out.residual_warnings;
  }
  return out;
}

}  // namespace detail

RealMatrix fourier_analysis(int m_theta) {
  check_grid(m_theta);
  const int k_max = (m_theta - 1) / 2;
  RealMatrix f(m_theta, m_theta);
  for (int j = 0; j < m_theta; ++j) {
    const double th = kTwoPi * j / m_theta;
    f(0, j) = 1.0 / m_theta;
    for (int n = 1; n <= k_max; ++n) {
      f(2 * n - 1, j) = 2.0 / m_theta * std::cos(n * th);
      f(2 * n, j) = 2.0 / m_theta * std::sin(n * th);
    }
  }
  return f;
}

RealMatrix fourier_synthesis(int m_theta) {
  check_grid(m_theta);
  const int k_max = (m_theta - 1) / 2;
  RealMatrix s(m_theta, m_theta);
  for (int j = 0; j < m_theta; ++j) {
    const double th = kTwoPi * j / m_theta;
    s(j, 0) = 1.0;
    for (int n = 1; n <= k_max; ++n) {
      s(j, 2 * n - 1) = std::cos(n * th);
      s(j, 2 * n) = std::sin(n * th);
    }
  }
  return s;
}

RealMatrix hilbert_matrix(const dnmap::DNMatrix& dn, int m_theta) {
  return to_samples(hilbert_coefficients(dn.lambda, m_theta), m_theta);
}

RealMatrix hilbert_matrix_neg(const dnmap::DNMatrix& dn, int m_theta) {
  RealMatrix h = hilbert_coefficients(dn.lambda, m_theta);
  const int r = static_cast<int>(dn.lambda.rows());
  const RealMatrix block = h.block(1, 1, r, r);
  Eigen::PartialPivLU<RealMatrix> lu(block);
  if (!(lu.rcond() > 1e-12)) throw NumericalError("hilbert_matrix_neg: H_mu block is singular");
  h.block(1, 1, r, r) = -lu.inverse();
  return to_samples(h, m_theta);
}

RealMatrix projection_operator(const RealMatrix& h_plus, const RealMatrix& h_minus) {
  const auto m = h_plus.rows();
  RealMatrix half_ij = RealMatrix::Constant(m, m, 0.5 / static_cast<double>(m));
  half_ij.diagonal().array() += 0.5;
  RealMatrix p(2 * m, 2 * m);
  p << half_ij, -0.5 * h_minus, 0.5 * h_plus, half_ij;
  return p;
}

RealMatrix conjugate_projection(const RealMatrix& p, cplx k, double k_cutoff) {
  if (std::abs(k) > k_cutoff)
    throw std::invalid_argument("projection: |k| = " + std::to_string(std::abs(k)) + " beyond cutoff");
  const auto m = p.rows() / 2;
  std::vector<cplx> e(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) e[j] = std::exp(kI * k * std::exp(kI * (kTwoPi * j / m)));
  RealMatrix out(2 * m, 2 * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double cr = e[j].real(), ci = e[j].imag();
    for (Eigen::Index i = 0; i < m; ++i) {
      const cplx inv = 1.0 / e[i];
      const double ar = inv.real(), ai = inv.imag();
      // B·C(c_j)
      const double b00 = p(i, j) * cr + p(i, m + j) * ci;
      const double b01 = -p(i, j) * ci + p(i, m + j) * cr;
      const double b10 = p(m + i, j) * cr + p(m + i, m + j) * ci;
      const double b11 = -p(m + i, j) * ci + p(m + i, m + j) * cr;
      // C(1/c_i)·(...)
      out(i, j) = ar * b00 - ai * b10;
      out(i, m + j) = ar * b01 - ai * b11;
      out(m + i, j) = ai * b00 + ar * b10;
      out(m + i, m + j) = ai * b01 + ar * b11;
    }
  }
  return out;
}

nlohmann::json CGOTraces::metadata() const {
  double worst = 0.0;
  for (double r : residual_plus) worst = std::max(worst, r);
  for (double r : residual_minus) worst = std::max(worst, r);
  return {{"theta_points", theta.size()}, {"tau", tau}, {"phi", phi},
          {"max_residual", worst}, {"residual_warnings", residual_warnings},
          {"column_index", "p*M_tau + m"}};
}

CGOTraces solve_bie(const dnmap::DNMatrix& dn, const std::vector<double>& tau,
                    const std::vector<double>& phi, const BieOptions& options) {
  return detail::solve_impl(hilbert_matrix(dn, options.m_theta), hilbert_matrix_neg(dn, options.m_theta),
                    tau, phi, options, true);
}

CGOTraces solve_bie(const RealMatrix& h_plus, const RealMatrix& h_minus,
                    const std::vector<double>& tau, const std::vector<double>& phi,
                    const BieOptions& options) {
  return detail::solve_impl(h_plus, h_minus, tau, phi, options, true);
}

cplx contour_average(const ComplexVector& values) {
  const auto m = values.size();
  cplx acc(0.0, 0.0);
  for (Eigen::Index j = 0; j < m; ++j) acc += values(j) * std::exp(kI * (kTwoPi * j / m));
  return acc / static_cast<double>(m);
}

ScatteringGrid scattering_trace(const CGOTraces& traces) {
  ScatteringGrid g;
  g.tau = traces.tau;
  g.phi = traces.phi;
  const int mt = static_cast<int>(traces.tau.size());
  const int mp = static_cast<int>(traces.phi.size());
  g.values.resize(mt, mp);
  for (int p = 0; p < mp; ++p)
    for (int m = 0; m < mt; ++m) {
      const int c = traces.column(m, p);
      g.values(m, p) = contour_average(traces.plus.col(c) - traces.minus.col(c));
    }
  return g;
}

}  // namespace vhpt::cgo

namespace vhpt::serial {

cgo::CGOTraces solve_bie(const RealMatrix& h_plus, const RealMatrix& h_minus,
                         const std::vector<double>& tau, const std::vector<double>& phi,
                         const cgo::BieOptions& options) {
  return cgo::detail::solve_impl(h_plus, h_minus, tau, phi, options, false);
}

}  // namespace vhpt::serial
