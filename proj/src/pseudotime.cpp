#include "vhpt/pseudotime.hpp"

#include "vhpt/deblur.hpp"
#include "vhpt/recon.hpp"

#include <cmath>
#include <stdexcept>

namespace vhpt::pseudotime {

namespace {

struct Support {
  std::vector<cplx> x;
  std::vector<double> weight;  // μ·ΔA
};

Support support_of(const ImageGrid& mu) {
  Support s;
  const double area = mu.pixel_size() * mu.pixel_size();
  for (int i = 0; i < mu.n(); ++i)
    for (int j = 0; j < mu.n(); ++j) {
      const double v = mu.values(i, j);
      if (v == 0.0) continue;
      const cplx x(mu.coord(j), mu.coord(i));
      if (std::abs(x) > 0.98)
        throw DomainError("direct_v1: μ support reaches the boundary (|x| > 0.98)");
      s.x.push_back(x);
      s.weight.push_back(v * area);
    }
  return s;
}

cplx v1_at(const Support& s, cplx k, double theta) {
  const cplx x = std::exp(kI * theta);
  cplx acc(0.0, 0.0);
  for (std::size_t q = 0; q < s.x.size(); ++q)
    acc += s.weight[q] * std::exp(-2.0 * kI * (k * s.x[q]).real()) / (x - s.x[q]);
  return -kI * std::conj(k) / kPi * acc;
}

ComplexVector v1_impl(const ImageGrid& mu, cplx k, const std::vector<double>& theta, bool parallel) {
  ComplexVector out = ComplexVector::Zero(static_cast<Eigen::Index>(theta.size()));
  if (k == cplx(0.0, 0.0)) return out;
  const Support s = support_of(mu);
  const int m = static_cast<int>(theta.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (int j = 0; j < m; ++j) out(j) = v1_at(s, k, theta[j]);
  return out;
}

void check_uniform(const std::vector<double>& g, const char* what) {
  if (g.size() < 2) throw std::invalid_argument(std::string(what) + ": grid needs >= 2 points");
  const double d = g[1] - g[0];
  for (std::size_t i = 1; i < g.size(); ++i)
    if (std::abs(g[i] - g[i - 1] - d) > 1e-9 * std::abs(d) + 1e-14)
      throw std::invalid_argument(std::string(what) + ": grid must be uniform");
}

}  // namespace

ComplexSinogram windowed_ft(const cgo::ScatteringGrid& grid, double a, const std::vector<double>& t) {
  if (!(a > 0.0)) throw std::invalid_argument("windowed_ft: a must be positive");
  check_uniform(grid.tau, "windowed_ft tau");
  const int mt = static_cast<int>(grid.tau.size());
  if (std::abs(grid.tau.front() + grid.tau.back()) > 1e-12)
    throw std::invalid_argument("windowed_ft: tau grid must be symmetric about 0");
  const double dtau = grid.tau[1] - grid.tau[0];
  std::vector<double> w(static_cast<std::size_t>(mt));
  for (int m = 0; m < mt; ++m)
    w[m] = dtau * ((m == 0 || m == mt - 1) ? 0.5 : 1.0) * std::exp(-a * grid.tau[m] * grid.tau[m]);

  ComplexSinogram out;
  out.times = t;
  out.angles = grid.phi;
  out.window_a = a;
  out.r_cut = grid.tau.back();
  const int nt = static_cast<int>(t.size());
  const int np = static_cast<int>(grid.phi.size());
  ComplexMatrix kernel(nt, mt);
  for (int i = 0; i < nt; ++i)
    for (int m = 0; m < mt; ++m) kernel(i, m) = w[m] * std::exp(-kI * t[i] * grid.tau[m]) / (kTwoPi * kI);
  out.values.resize(nt, np);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < np; ++p) out.values.col(p) = kernel * grid.values.col(p);
  return out;
}

Sinogram phase_integrate(const ComplexSinogram& tsino, const PhaseOptions& opt, nlohmann::json* meta) {
  check_uniform(tsino.times, "phase_integrate t");
  if (tsino.values.rows() != static_cast<Eigen::Index>(tsino.times.size()) ||
      tsino.values.cols() != static_cast<Eigen::Index>(tsino.angles.size()))
    throw std::invalid_argument("phase_integrate: value shape does not match its grids");
  const int nt = static_cast<int>(tsino.times.size());
  const int np = static_cast<int>(tsino.angles.size());
  const double dt = tsino.times[1] - tsino.times[0];
  std::vector<double> s(static_cast<std::size_t>(nt));
  for (int i = 0; i < nt; ++i) s[i] = 0.5 * tsino.times[i];

  ComplexMatrix acc(nt, np);
  for (int p = 0; p < np; ++p) {
    const cplx phase = -opt.scale * std::exp(kI * tsino.angles[p]) / (kTwoPi * kI);
    cplx run(0.0, 0.0);
    acc(0, p) = run;
    for (int i = 1; i < nt; ++i) {
      run += 0.5 * dt * phase * (tsino.values(i - 1, p) + tsino.values(i, p));
      acc(i, p) = run;
    }
  }
  Sinogram out(s, tsino.angles);
  out.values = acc.real();
  const double re = out.values.norm();
  const double im = acc.imag().norm();
  const double fraction = re > 0.0 ? im / re : (im > 0.0 ? INFINITY : 0.0);
  if (meta) {
    (*meta)["scale"] = opt.scale;
    (*meta)["imag_residual"] = im;
    (*meta)["imag_fraction"] = std::isfinite(fraction) ? fraction : -1.0;
    (*meta)["imag_warning"] = fraction > opt.imag_warning_fraction;
    (*meta)["window_a"] = tsino.window_a;
    (*meta)["r_cut"] = tsino.r_cut;
    (*meta)["angle_convention"] = "cgo: column p approximates Radon angle pi - phi_p";
  }
  return out;
}

ComplexVector direct_v1(const ImageGrid& mu, cplx k, const std::vector<double>& theta) {
  return v1_impl(mu, k, theta, true);
}

ComplexVector direct_v1(const phantoms::Phantom& phantom, cplx k, const std::vector<double>& theta,
                        int raster) {
  return direct_v1(phantoms::rasterize(phantom, raster, phantoms::Field::kMu), k, theta);
}

cgo::CGOTraces single_scattering_traces(const ImageGrid& mu, const std::vector<double>& tau,
                                        const std::vector<double>& phi, int m_theta) {
  cgo::CGOTraces tr;
  tr.theta = periodic_grid(m_theta);
  tr.tau = tau;
  tr.phi = phi;
  const int mt = static_cast<int>(tau.size());
  const int cols = mt * static_cast<int>(phi.size());
  tr.plus.resize(m_theta, cols);
  tr.residual_plus.assign(static_cast<std::size_t>(cols), 0.0);
  tr.residual_minus = tr.residual_plus;
  const Support s = support_of(mu);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cols; ++c) {
    const cplx k = tau[c % mt] * std::exp(kI * phi[c / mt]);
    for (int j = 0; j < m_theta; ++j)
      tr.plus(j, c) = k == cplx(0.0, 0.0) ? cplx(0.0, 0.0) : v1_at(s, k, tr.theta[j]);
  }
  tr.minus = -tr.plus;
  return tr;
}

SingleScattering single_scattering_oracle(const phantoms::Phantom& phantom, double a,
                                          const std::vector<double>& t,
                                          const std::vector<double>& phi, int raster) {
  if (!(a > 0.0)) throw std::invalid_argument("single_scattering_oracle: a must be positive");
  check_uniform(t, "single_scattering_oracle t");
  const int nt = static_cast<int>(t.size());
  const int np = static_cast<int>(phi.size());
  const double dt = t[1] - t[0];

  // ℛ̃(t_i, φ_p) = ℛμ(π − φ_p, t_i/2)
  RealMatrix radon(nt, np);
  bool exact = phantom.is_homogeneous() || phantoms::analytic_mu_radon(phantom, 0.0, 0.0).has_value();
  if (exact) {
    for (int p = 0; p < np; ++p)
      for (int i = 0; i < nt; ++i)
        radon(i, p) = *phantoms::analytic_mu_radon(phantom, 0.5 * t[i], kPi - phi[p]);
  } else {
    std::vector<double> s(static_cast<std::size_t>(nt)), psi(static_cast<std::size_t>(np));
    for (int i = 0; i < nt; ++i) s[i] = 0.5 * t[i];
    for (int p = 0; p < np; ++p) psi[p] = kPi - phi[p];
    const ImageGrid mu = phantoms::rasterize(phantom, raster, phantoms::Field::kMu, 4);
    radon = recon::radon_transform(mu, s, psi, 2 * raster).values;
  }

  RealMatrix conv(nt, nt);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nt; ++j) conv(i, j) = deblur::gaussian(a, t[i] - t[j]) * dt;
  const RealMatrix blurred = conv * radon;

  SingleScattering out;
  out.t1a.times = t;
  out.t1a.angles = phi;
  out.t1a.window_a = a;
  out.t1a.values.resize(nt, np);
  for (int p = 0; p < np; ++p) {
    const cplx phase = std::exp(-kI * phi[p]) / (kPi * kI);
    for (int i = 0; i < nt; ++i) {
      double d;
      if (i == 0)
        d = (blurred(1, p) - blurred(0, p)) / dt;
      else if (i == nt - 1)
        d = (blurred(i, p) - blurred(i - 1, p)) / dt;
      else
        d = (blurred(i + 1, p) - blurred(i - 1, p)) / (2.0 * dt);
      out.t1a.values(i, p) = phase * d;
    }
  }
  std::vector<double> s(static_cast<std::size_t>(nt));
  for (int i = 0; i < nt; ++i) s[i] = 0.5 * t[i];
  out.r1 = Sinogram(s, phi);
  out.r1.values = blurred;
  return out;
}

double fit_scale(const Sinogram& measured, const Sinogram& reference) {
  if (measured.values.rows() != reference.values.rows() || measured.values.cols() != reference.values.cols())
    throw std::invalid_argument("fit_scale: shape mismatch");
  const double den = measured.values.squaredNorm();
  if (!(den > 0.0)) throw NumericalError("fit_scale: measured sinogram is zero");
  return measured.values.cwiseProduct(reference.values).sum() / den;
}

}  // namespace vhpt::pseudotime

namespace vhpt::serial {

ComplexVector direct_v1(const ImageGrid& mu, cplx k, const std::vector<double>& theta) {
  return pseudotime::v1_impl(mu, k, theta, false);
}

}  // namespace vhpt::serial
