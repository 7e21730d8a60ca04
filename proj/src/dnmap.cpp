#include "vhpt/dnmap.hpp"

#include "vhpt/forward.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace vhpt::dnmap {

namespace {

void check_even(int electrodes) {
  if (electrodes < 4 || electrodes % 2 != 0)
    throw std::invalid_argument("electrode count must be even and >= 4");
}

RealMatrix symmetrize(const RealMatrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

DNMatrix::DNMatrix(RealMatrix m) : lambda(std::move(m)) {
  if (lambda.rows() != lambda.cols() || lambda.rows() % 2 != 0)
    throw std::invalid_argument("DNMatrix: must be square with even size");
  if (!lambda.allFinite()) throw NumericalError("DNMatrix: non-finite entries");
}

CurrentPatternMatrix trig_patterns(int electrodes, double amplitude) {
  check_even(electrodes);
  if (!(amplitude > 0.0)) throw std::invalid_argument("trig_patterns: amplitude must be positive");
  CurrentPatternMatrix out;
  out.amplitude = amplitude;
  out.currents.resize(electrodes, electrodes - 2);
  const double h = kTwoPi / electrodes;
  for (int l = 0; l < electrodes; ++l)
    for (int n = 1; n <= electrodes - 2; ++n)
      out.currents(l, n - 1) = h * amplitude * forward::trig_basis(n, h * (l + 1));
  return out;
}

RealMatrix ideal_nd_reference(int electrodes) {
  check_even(electrodes);
  RealVector d(electrodes - 2);
  for (int n = 0; n < electrodes - 2; ++n) d(n) = 1.0 / (n / 2 + 1);
  return d.asDiagonal();
}

DNMatrix radial_dn_matrix(double rho, double s, int basis_order) {
  RealVector d(2 * basis_order);
  for (int n = 0; n < 2 * basis_order; ++n) d(n) = forward::analytic_dn_radial(rho, s, n / 2 + 1);
  return DNMatrix(d.asDiagonal());
}

double condition_number(const RealMatrix& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<RealMatrix> svd(m);
  const auto& sv = svd.singularValues();
  const double lo = sv(sv.size() - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return sv(0) / lo;
}

RealMatrix checked_inverse(const RealMatrix& m, const std::string& what, double condition_cap) {
  if (m.rows() != m.cols()) throw std::invalid_argument(what + ": not square");
  if (!m.allFinite()) throw NumericalError(what + ": non-finite entries");
  const double cond = condition_number(m);
  if (!(cond <= condition_cap))
    throw NumericalError(what + ": condition number " + std::to_string(cond) + " exceeds cap");
  return m.inverse();
}

RealMatrix measurement_nd(const RealMatrix& voltages, const CurrentPatternMatrix& p) {
  if (voltages.rows() != p.currents.rows() || voltages.cols() != p.currents.cols())
    throw std::invalid_argument("measurement_nd: voltage matrix shape does not match the patterns");
  return p.currents.transpose() * voltages / (kPi * p.amplitude * p.amplitude);
}

DNMatrix assemble_dn_calibrated(const RealMatrix& v_trg, const RealMatrix& v_clb,
                                const RealMatrix& v_1cem, const CurrentPatternMatrix& patterns,
                                const CalibrationOptions& options) {
  const double cap = options.condition_cap;
  const RealMatrix r_trg = measurement_nd(v_trg, patterns);
  const RealMatrix r_clb = measurement_nd(v_clb, patterns);
  const RealMatrix r_1cem = measurement_nd(v_1cem, patterns);
  const RealMatrix r_1 = ideal_nd_reference(patterns.electrodes());

  if (options.form == CalibrationForm::kNdSide) {
    const RealMatrix c = r_1cem * checked_inverse(r_clb, "R_clb", cap);
    const RealMatrix tilde = checked_inverse(c * r_trg - r_1cem + r_1, "C*R_trg - R_1cem + R_1", cap);
    return DNMatrix(symmetrize(tilde));
  }
  const RealMatrix l_trg = checked_inverse(r_trg, "R_trg", cap);
  const RealMatrix l_clb = checked_inverse(r_clb, "R_clb", cap);
  const RealMatrix l_1cem = checked_inverse(r_1cem, "R_1cem", cap);
  const RealMatrix l_1 = checked_inverse(r_1, "R_1", cap);
  const RealMatrix l_1cem_inv = checked_inverse(l_1cem, "Lambda_1cem", cap);
  const RealMatrix tilde = l_1cem_inv * l_clb * checked_inverse(l_trg, "Lambda_trg", cap) -
                           l_1cem_inv + checked_inverse(l_1, "Lambda_1", cap);
  const RealMatrix inv = checked_inverse(tilde, "Lambda_tilde", cap);
  return DNMatrix(0.5 * (inv + inv.transpose()));
}

DNMatrix assemble_dn_continuum(const RealMatrix& nd, double condition_cap) {
  return DNMatrix(symmetrize(checked_inverse(nd, "ND matrix", condition_cap)));
}

DNMatrix assemble_dn_continuum_relative(const RealMatrix& nd_sigma, const RealMatrix& nd_one,
                                        double condition_cap) {
  if (nd_sigma.rows() != nd_one.rows() || nd_sigma.cols() != nd_one.cols())
    throw std::invalid_argument("assemble_dn_continuum_relative: shape mismatch");
  const RealMatrix r1 = ideal_nd_reference(static_cast<int>(nd_sigma.rows()) + 2);
  return DNMatrix(symmetrize(checked_inverse(nd_sigma - nd_one + r1, "relative ND matrix", condition_cap)));
}

}  // namespace vhpt::dnmap
