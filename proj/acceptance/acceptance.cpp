// One PASS/FAIL line per primary acceptance criterion. Exit status 1 if any fails.

#include "vhpt/cgo.hpp"
#include "vhpt/deblur.hpp"
#include "vhpt/dnmap.hpp"
#include "vhpt/forward.hpp"
#include "vhpt/phantom.hpp"
#include "vhpt/pipeline.hpp"
#include "vhpt/pseudotime.hpp"
#include "vhpt/recon.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace vhpt;
using phantoms::Disc;
using phantoms::Phantom;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = out.ok && secs <= limit_s;
  if (!pass) ++failures;
  std::printf("%s [%d] %s: %s; %.1f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", id, name, out.detail.c_str(), secs,
              limit_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double radial_dn(double rho, double s, int n) {
  const double m = (1.0 - s) / (1.0 + s);
  const double q = std::pow(rho, 2.0 * n);
  return n * (1.0 - m * q) / (1.0 + m * q);
}

double pearson(const RealVector& x, const RealVector& y) {
  const RealVector a = x.array() - x.mean();
  const RealVector b = y.array() - y.mean();
  return a.dot(b) / (a.norm() * b.norm());
}

template <class M>
double rel(const M& a, const M& b) {
  return (a - b).norm() / b.norm();
}

ImageGrid smooth_mu(int n) {
  ImageGrid g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = g.coord(j), y = g.coord(i);
      g.values(i, j) = 0.3 * std::exp(-((x - 0.2) * (x - 0.2) + y * y) / 0.05) -
                       0.2 * std::exp(-((x + 0.3) * (x + 0.3) + (y - 0.3) * (y - 0.3)) / 0.02) +
                       0.1 * std::exp(-(x * x + (y + 0.4) * (y + 0.4)) / 0.08);
    }
  g.mask_to_disc();
  return g;
}

const Phantom kTwoDiscs(1.0, {{Disc{{-0.35, 0.2}, 0.25}, 1.0 / 1.1}, {Disc{{0.35, -0.15}, 0.25}, 1.1}});

Outcome radial_dn_oracle() {
  const Phantom p(1.0, {{Disc{{0.0, 0.0}, 0.5}, 2.0}});
  const auto mesh = forward::make_disc_mesh(128);
  const auto dn = dnmap::assemble_dn_continuum(forward::solve_continuum_nd(p, 8, mesh));
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(dn.lambda);
  double worst = 0.0;
  for (int n = 1; n <= 8; ++n)
    for (int c = 0; c < 2; ++c)
      worst = std::max(worst, std::abs(eig.eigenvalues()(2 * n - 2 + c) - radial_dn(0.5, 2.0, n)) / radial_dn(0.5, 2.0, n));
  return {worst <= 0.02, fmt("max relative eigenvalue error %.4g (tol %.2g), n=1 analytic 13/11", worst, 0.02)};
}

Outcome homogeneous_null() {
  pipeline::PipelineConfig c;
  c.output_dir = (std::filesystem::temp_directory_path() / "vhpt-acceptance-null").string();
  const auto b = pipeline::run_pipeline(c);
  const double grid_norm = std::sqrt(double(b.ttilde.values.size()));
  const double t_ratio = b.ttilde.values.norm() / grid_norm;
  const double sigma_dev = (b.sigma.values.array() - 1.0).abs().maxCoeff();
  return {t_ratio <= 1e-6 && sigma_dev <= 0.01,
          fmt("|T~odd|/grid-norm %.3g (tol 1e-6), max |sigma-1| %.3g (tol 0.01)", t_ratio, sigma_dev)};
}

Outcome single_scattering() {
  const Phantom p(1.0, {{Disc{{0.0, 0.0}, 0.5}, 1.05}});
  const auto mesh = forward::make_disc_mesh(64);
  const auto dn = dnmap::assemble_dn_continuum_relative(forward::solve_continuum_nd(p, 15, mesh),
                                                        forward::solve_continuum_nd(Phantom(1.0), 15, mesh));
  const auto tau = linspace(-4.0, 4.0, 17);
  const auto phi = periodic_grid(16);
  const auto tr = cgo::solve_bie(dn, tau, phi);
  ComplexMatrix v1(tr.plus.rows(), tr.plus.cols());
  for (std::size_t q = 0; q < phi.size(); ++q)
    for (std::size_t m = 0; m < tau.size(); ++m)
      v1.col(tr.column(int(m), int(q))) = pseudotime::direct_v1(p, tau[m] * std::exp(kI * phi[q]), tr.theta, 256);
  const double e = rel(tr.plus, v1);
  return {e <= 0.10, fmt("relative L2 |w+ - v1|/|v1| %.4g (tol %.2g) over |k|<=4", e, 0.10)};
}

Outcome generalized_radon() {
  const Phantom p(1.0, {{Disc{{0.2, -0.1}, 0.3}, 1.1}});
  const double a = 0.1;
  const auto t = centered_grid(2.0, 200);
  const auto phi = periodic_grid(20);
  const auto oracle = pseudotime::single_scattering_oracle(p, a, t, phi);
  const auto mu = phantoms::rasterize(p, 256, phantoms::Field::kMu, 2);
  const auto tr = pseudotime::single_scattering_traces(mu, linspace(-6.0, 6.0, 33), phi, 65);
  const auto path = pseudotime::windowed_ft(cgo::scattering_trace(tr), a, t);
  const double e = rel(path.values, oracle.t1a.values);
  return {e <= 0.10, fmt("relative L2 between the two T1a paths %.4g (tol %.2g)", e, 0.10)};
}

Outcome pipeline_vs_radon() {
  pipeline::PipelineConfig c;
  c.phantom = phantoms::to_json(kTwoDiscs);
  const auto ph = c.make_phantom();
  const auto v = pipeline::stage_forward(c, ph);
  const auto dn = pipeline::stage_calibrate(c, v);
  const auto sharp = pipeline::stage_deblur(
      c, pipeline::stage_phase(c, pipeline::stage_pseudotime(c, pipeline::stage_cgo(c, dn))));
  Sinogram truth(sharp.offsets, sharp.angles);
  for (int q = 0; q < truth.num_angles(); ++q)
    for (int r = 0; r < truth.num_offsets(); ++r)
      truth.values(r, q) = *phantoms::analytic_mu_radon(ph, truth.offsets[r], truth.angles[q]);

  std::vector<double> rs;
  for (int q = 0; q < truth.num_angles(); ++q) rs.push_back(pearson(sharp.values.col(q), truth.values.col(q)));
  std::nth_element(rs.begin(), rs.begin() + rs.size() / 2, rs.end());
  const double median = rs[rs.size() / 2];

  // resistive disc (σ < 1) must give the column maximum, conductive the minimum,
  // on every angle where the two shadows are disjoint
  int checked = 0, held = 0;
  for (int q = 0; q < truth.num_angles(); ++q) {
    const double cq = std::cos(truth.angles[q]), sq = std::sin(truth.angles[q]);
    const double s_res = -0.35 * cq + 0.2 * sq, s_con = 0.35 * cq - 0.15 * sq;
    if (std::abs(s_res - s_con) < 0.6) continue;
    ++checked;
    Eigen::Index hi = 0, lo = 0;
    const double vmax = sharp.values.col(q).maxCoeff(&hi), vmin = sharp.values.col(q).minCoeff(&lo);
    if (vmax > 0.0 && vmin < 0.0 && std::abs(sharp.offsets[hi] - s_res) < 0.25 &&
        std::abs(sharp.offsets[lo] - s_con) < 0.25)
      ++held;
  }
  const bool ok = median >= 0.9 && checked > 0 && held == checked;
  return {ok, fmt("median column Pearson %.4g (tol >= 0.9); peak/valley sign held on %.0f", median, held) + " of " +
                  std::to_string(checked) + " separated angles"};
}

Outcome fbp_roundtrip() {
  const auto mu = smooth_mu(128);
  const auto s = centered_grid(1.0, 200);
  const auto psi = periodic_grid(100);
  const auto rec = recon::fbp(recon::radon_transform(mu, s, psi), {128});
  const double e = (rec.values - mu.values).norm() / mu.values.norm();
  return {e <= 0.05, fmt("relative L2 %.4g (tol %.2g), 200x100 sinogram, 128^2 image", e, 0.05)};
}

Outcome tv_descent() {
  const auto s = centered_grid(1.0, 200);
  const auto psi = periodic_grid(100);
  Sinogram sino(s, psi);
  for (int q = 0; q < 100; ++q)
    for (int r = 0; r < 200; ++r) sino.values(r, q) = *phantoms::analytic_mu_radon(kTwoDiscs, s[r], psi[q]);
  std::string detail;
  bool ok = true;
  for (double alpha : {0.009, 0.006, 0.02}) {
    recon::TvOptions opt;
    opt.alpha = alpha;
    opt.iterations = 400;
    const auto res = recon::tv_reconstruct(sino, opt);
    int increases = 0;
    for (std::size_t i = 1; i < res.objective.size(); ++i)
      if (res.objective[i] > res.objective[i - 1]) ++increases;
    ok = ok && increases == 0 && res.objective.size() == 400;
    detail += fmt("alpha %.3g: %.0f increases", alpha, increases) + "; ";
  }
  detail += "400 iterations each";
  return {ok, detail};
}

template <class F>
bool thread_invariant(F f) {
  omp_set_num_threads(1);
  const auto one = f();
  omp_set_num_threads(4);
  const auto four = f();
  omp_set_num_threads(1);
  return one == four;
}

Outcome invariant_suites() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  auto random = [&](int r, int c) {
    RealMatrix m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = nd(rng);
    return m;
  };
  const auto s = centered_grid(1.0, 80);
  const auto psi = periodic_grid(40);

  // adjointness
  double adj = 0.0;
  for (int k = 0; k < 5; ++k) {
    ImageGrid mu(random(48, 48));
    mu.mask_to_disc();
    Sinogram y(s, psi);
    y.values = random(80, 40);
    const double lhs = (recon::radon_transform(mu, s, psi).values.array() * y.values.array()).sum();
    const double rhs = (mu.values.array() * recon::backprojection(y, 48).values.array()).sum();
    adj = std::max(adj, std::abs(lhs - rhs) / std::abs(lhs));
  }

  // linearity
  Sinogram a(s, psi), b(s, psi), ab(s, psi);
  a.values = random(80, 40);
  b.values = random(80, 40);
  ab.values = a.values + b.values;
  const RealMatrix fab = recon::fbp(ab, {48}).values;
  const double lin_fbp = (fab - recon::fbp(a, {48}).values - recon::fbp(b, {48}).values).norm() / fab.norm();
  cgo::ScatteringGrid g1, g2, g12;
  g1.tau = g2.tau = g12.tau = linspace(-6.0, 6.0, 33);
  g1.phi = g2.phi = g12.phi = periodic_grid(20);
  g1.values = random(33, 20).cast<cplx>() + kI * random(33, 20).cast<cplx>();
  g2.values = random(33, 20).cast<cplx>() + kI * random(33, 20).cast<cplx>();
  g12.values = 2.0 * g1.values - 3.0 * g2.values;
  const auto t = centered_grid(2.0, 100);
  const ComplexMatrix w = pseudotime::windowed_ft(g12, 0.1, t).values;
  const double lin_ft = (w - 2.0 * pseudotime::windowed_ft(g1, 0.1, t).values +
                         3.0 * pseudotime::windowed_ft(g2, 0.1, t).values).norm() / w.norm();

  // calibration: trg, clb and 1cem voltages all multiplied by a common scalar
  const auto mesh = forward::make_disc_mesh(32);
  const auto layout = forward::ElectrodeLayout::uniform(32, 0.5, 1e-2);
  const auto pat = dnmap::trig_patterns(32, 0.35);
  const RealMatrix trg = forward::solve_cem(kTwoDiscs.scaled(2.7), layout, pat.currents, mesh);
  const RealMatrix clb = forward::solve_cem(Phantom(2.7), layout, pat.currents, mesh);
  const RealMatrix one = forward::solve_cem(Phantom(1.0), layout, pat.currents, mesh);
  const RealMatrix base = dnmap::assemble_dn_calibrated(trg, clb, one, pat).lambda;
  double cal = 0.0;
  for (double c : {0.5, 3.0}) {
    const RealMatrix scaled = dnmap::assemble_dn_calibrated(c * trg, c * clb, c * one, pat).lambda;
    cal = std::max(cal, (scaled - base).norm() / base.norm());
  }

  // thread count
  const auto mu = phantoms::rasterize(kTwoDiscs, 64, phantoms::Field::kMu);
  const auto sino = recon::radon_transform(mu, s, psi);
  const auto dn = dnmap::radial_dn_matrix(0.5, 1.2, 15);
  bool threads = thread_invariant([&] { return recon::radon_transform(mu, s, psi).values; }) &&
                 thread_invariant([&] { return recon::backprojection(sino, 64).values; }) &&
                 thread_invariant([&] { return deblur::deconvolve_columns(sino, 0.01, 1e-3).values; }) &&
                 thread_invariant([&] { return pseudotime::direct_v1(mu, cplx(2.0, 1.0), periodic_grid(65)); }) &&
                 thread_invariant([&] { return pseudotime::windowed_ft(g1, 0.1, t).values; }) &&
                 thread_invariant([&] { return forward::solve_cem(kTwoDiscs, layout, pat.currents, mesh); }) &&
                 thread_invariant([&] {
                   const auto tr = cgo::solve_bie(dn, linspace(-4.0, 4.0, 9), periodic_grid(8));
                   return ComplexMatrix(tr.plus + tr.minus);
                 });

  const bool ok = adj <= 1e-6 && lin_fbp <= 1e-10 && lin_ft <= 1e-12 && cal <= 1e-10 && threads;
  return {ok, fmt("adjoint %.2g (tol 1e-6); fbp linearity %.2g (tol 1e-10); ", adj, lin_fbp) +
                  fmt("windowed_ft linearity %.2g (tol 1e-12); calibration scale %.3g (tol 1e-10); ", lin_ft, cal) +
                  "threads 1 vs 4 " + (threads ? "bitwise equal" : "differ")};
}

}  // namespace

int main() {
  criterion(1, "radial DN oracle", 60, radial_dn_oracle);
  criterion(2, "homogeneous null test", 120, homogeneous_null);
  criterion(3, "single-scattering consistency", 300, single_scattering);
  criterion(4, "generalized-Radon identity", 300, generalized_radon);
  criterion(5, "pipeline vs Radon sinogram", 900, pipeline_vs_radon);
  criterion(6, "Radon/FBP roundtrip", 30, fbp_roundtrip);
  criterion(7, "TV descent", 300, tv_descent);
  criterion(8, "invariant suites", 600, invariant_suites);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
