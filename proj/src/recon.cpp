#include "vhpt/recon.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <utility>
#include <cmath>
#include <stdexcept>

namespace vhpt::recon {

namespace {

constexpr int kAngleBlock = 4;

struct Tap {
  int i0, j0;
  double wy, wx;
};

inline Tap bilinear_tap(double x, double y, double h) {
  const double fx = (x + 1.0) / h - 0.5;
  const double fy = (y + 1.0) / h - 0.5;
  const double jf = std::floor(fx), iff = std::floor(fy);
  return {static_cast<int>(iff), static_cast<int>(jf), fy - iff, fx - jf};
}

inline double sample(const RealMatrix& img, const Tap& t) {
  const int n = static_cast<int>(img.rows());
  double v = 0.0;
  const int i1 = t.i0 + 1, j1 = t.j0 + 1;
  if (t.i0 >= 0 && t.i0 < n) {
    if (t.j0 >= 0 && t.j0 < n) v += (1 - t.wy) * (1 - t.wx) * img(t.i0, t.j0);
    if (j1 >= 0 && j1 < n) v += (1 - t.wy) * t.wx * img(t.i0, j1);
  }
  if (i1 >= 0 && i1 < n) {
    if (t.j0 >= 0 && t.j0 < n) v += t.wy * (1 - t.wx) * img(i1, t.j0);
    if (j1 >= 0 && j1 < n) v += t.wy * t.wx * img(i1, j1);
  }
  return v;
}

inline void scatter(RealMatrix& img, const Tap& t, double v) {
  const int n = static_cast<int>(img.rows());
  const int i1 = t.i0 + 1, j1 = t.j0 + 1;
  if (t.i0 >= 0 && t.i0 < n) {
    if (t.j0 >= 0 && t.j0 < n) img(t.i0, t.j0) += (1 - t.wy) * (1 - t.wx) * v;
    if (j1 >= 0 && j1 < n) img(t.i0, j1) += (1 - t.wy) * t.wx * v;
  }
  if (i1 >= 0 && i1 < n) {
    if (t.j0 >= 0 && t.j0 < n) img(i1, t.j0) += t.wy * (1 - t.wx) * v;
    if (j1 >= 0 && j1 < n) img(i1, j1) += t.wy * t.wx * v;
  }
}

void check_rays(int ray_samples) {
  if (ray_samples < 2) throw std::invalid_argument("radon: ray_samples must be >= 2");
}

void radon_column(const ImageGrid& mu, const std::vector<double>& offsets, double psi,
                  int ray_samples, Eigen::Ref<RealVector> out) {
  const double h = mu.pixel_size();
  const double c = std::cos(psi), sn = std::sin(psi);
  const double dt = 2.0 / ray_samples;
  for (std::size_t r = 0; r < offsets.size(); ++r) {
    const double s = offsets[r];
    double acc = 0.0;
    for (int k = 0; k < ray_samples; ++k) {
      const double t = -1.0 + (k + 0.5) * dt;
      acc += sample(mu.values, bilinear_tap(s * c - t * sn, s * sn + t * c, h));
    }
    out(static_cast<Eigen::Index>(r)) = acc * dt;
  }
}

void backproject_column(const Sinogram& sino, int q, int ray_samples, RealMatrix& img, double h) {
  const double psi = sino.angles[q];
  const double c = std::cos(psi), sn = std::sin(psi);
  const double dt = 2.0 / ray_samples;
  for (int r = 0; r < sino.num_offsets(); ++r) {
    const double v = sino.values(r, q) * dt;
    if (v == 0.0) continue;
    const double s = sino.offsets[r];
    for (int k = 0; k < ray_samples; ++k) {
      const double t = -1.0 + (k + 0.5) * dt;
      scatter(img, bilinear_tap(s * c - t * sn, s * sn + t * c, h), v);
    }
  }
}

void check_sinogram(const Sinogram& s) {
  if (s.values.rows() != s.num_offsets() || s.values.cols() != s.num_angles())
    throw std::invalid_argument("sinogram: value shape does not match its grids");
}

// Forward differences with zero flux across the last row/column.
void gradient(const RealMatrix& u, RealMatrix& gx, RealMatrix& gy) {
  const auto n = u.rows();
  gx.setZero(n, n);
  gy.setZero(n, n);
  gx.leftCols(n - 1) = u.rightCols(n - 1) - u.leftCols(n - 1);
  gy.topRows(n - 1) = u.bottomRows(n - 1) - u.topRows(n - 1);
}

// Negative adjoint of `gradient`.
RealMatrix divergence(const RealMatrix& px, const RealMatrix& py) {
  const auto n = px.rows();
  RealMatrix d = RealMatrix::Zero(n, n);
  d.leftCols(n - 1) += px.leftCols(n - 1);
  d.rightCols(n - 1) -= px.leftCols(n - 1);
  d.topRows(n - 1) += py.topRows(n - 1);
  d.bottomRows(n - 1) -= py.topRows(n - 1);
  return d;
}

double tv_sum(const RealMatrix& u) {
  RealMatrix gx, gy;
  gradient(u, gx, gy);
  return (gx.array().square() + gy.array().square()).sqrt().sum();
}


}  // namespace

Sinogram radon_transform(const ImageGrid& mu, const std::vector<double>& offsets,
                         const std::vector<double>& angles, int ray_samples) {
  check_rays(ray_samples);
  Sinogram out(offsets, angles);
  const int na = static_cast<int>(angles.size());
#pragma omp parallel for schedule(static)
  for (int q = 0; q < na; ++q) radon_column(mu, offsets, angles[q], ray_samples, out.values.col(q));
  return out;
}

ImageGrid backprojection(const Sinogram& sinogram, int n, int ray_samples) {
  check_rays(ray_samples);
  check_sinogram(sinogram);
  if (n < 2) throw std::invalid_argument("backprojection: n must be >= 2");
  const double h = 2.0 / n;
  const int na = sinogram.num_angles();
  const int blocks = (na + kAngleBlock - 1) / kAngleBlock;
  std::vector<RealMatrix> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    RealMatrix& img = partial[b];
    img.setZero(n, n);
    for (int q = b * kAngleBlock; q < std::min(na, (b + 1) * kAngleBlock); ++q)
      backproject_column(sinogram, q, ray_samples, img, h);
  }
  RealMatrix total = RealMatrix::Zero(n, n);
  for (const auto& p : partial) total += p;
  return ImageGrid(std::move(total));
}

std::vector<double> ram_lak_kernel(double ds, int count) {
  std::vector<double> h(static_cast<std::size_t>(count), 0.0);
  for (int k = 0; k < count; ++k) {
    if (k == 0)
      h[k] = 1.0 / (4.0 * ds * ds);
    else if (k % 2 == 1)
      h[k] = -1.0 / (kPi * kPi * k * k * ds * ds);
  }
  return h;
}

RealMatrix ramp_filter(const RealMatrix& columns, double ds, bool hann) {
  const int ns = static_cast<int>(columns.rows());
  int nfft = 1;
  while (nfft < 2 * ns) nfft *= 2;
  const auto h = ram_lak_kernel(ds, ns);
  std::vector<double> kernel(static_cast<std::size_t>(nfft), 0.0);
  for (int k = 0; k < ns; ++k) {
    kernel[k] = h[k];
    if (k > 0) kernel[nfft - k] = h[k];
  }
  Eigen::FFT<double> fft;
  std::vector<cplx> kspec;
  fft.fwd(kspec, kernel);
  if (hann)
    for (int f = 0; f < nfft; ++f) {
      const double nu = static_cast<double>(std::min(f, nfft - f)) / (nfft / 2);
      kspec[f] *= 0.5 * (1.0 + std::cos(kPi * nu));
    }
  RealMatrix out(ns, columns.cols());
  const int nc = static_cast<int>(columns.cols());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < nc; ++c) {
    Eigen::FFT<double> local;
    std::vector<double> col(static_cast<std::size_t>(nfft), 0.0), res;
    for (int r = 0; r < ns; ++r) col[r] = columns(r, c);
    std::vector<cplx> spec;
    local.fwd(spec, col);
    for (int f = 0; f < nfft; ++f) spec[f] *= kspec[f];
    local.inv(res, spec);
    for (int r = 0; r < ns; ++r) out(r, c) = ds * res[r];
  }
  return out;
}

ImageGrid fbp(const Sinogram& sinogram, const FbpOptions& options) {
  check_sinogram(sinogram);
  if (options.n < 2) throw std::invalid_argument("fbp: n must be >= 2");
  if (sinogram.num_offsets() < 2 || sinogram.num_angles() < 1)
    throw std::invalid_argument("fbp: sinogram too small");
  const double ds = sinogram.offset_step();
  const RealMatrix q = options.filter == Filter::kRamLak
                           ? ramp_filter(sinogram.values, ds, options.hann)
                           : sinogram.values;
  const int n = options.n;
  const int na = sinogram.num_angles();
  const int ns = sinogram.num_offsets();
  const double weight = kPi / na;  // Δψ·½ over a full turn
  const double s0 = sinogram.offsets.front();
  std::vector<double> cs(static_cast<std::size_t>(na)), sn(static_cast<std::size_t>(na));
  for (int a = 0; a < na; ++a) {
    cs[a] = std::cos(sinogram.angles[a]);
    sn[a] = std::sin(sinogram.angles[a]);
  }
  ImageGrid img(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double y = img.coord(i);
    for (int j = 0; j < n; ++j) {
      if (!img.inside_disc(i, j)) continue;
      const double x = img.coord(j);
      double acc = 0.0;
      for (int a = 0; a < na; ++a) {
        const double f = (x * cs[a] + y * sn[a] - s0) / ds;
        const int k = static_cast<int>(std::floor(f));
        const double w = f - k;
        if (k >= 0 && k < ns) acc += (1 - w) * q(k, a);
        if (k + 1 >= 0 && k + 1 < ns) acc += w * q(k + 1, a);
      }
      img.values(i, j) = weight * acc;
    }
  }
  return img;
}

double tv_objective(const ImageGrid& mu, const Sinogram& sinogram, double alpha, int ray_samples) {
  const Sinogram r = radon_transform(mu, sinogram.offsets, sinogram.angles, ray_samples);
  const double w = sinogram.offset_step() * sinogram.angle_step();
  return 0.5 * w * (r.values - sinogram.values).squaredNorm() + alpha * mu.pixel_size() * tv_sum(mu.values);
}

SparseOperator radon_matrix(int n, const std::vector<double>& offsets,
                            const std::vector<double>& angles, int ray_samples) {
  check_rays(ray_samples);
  if (n < 2) throw std::invalid_argument("radon_matrix: n must be >= 2");
  const int ns = static_cast<int>(offsets.size());
  const int na = static_cast<int>(angles.size());
  const double h = 2.0 / n;
  const double dt = 2.0 / ray_samples;
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(ns) * na);
#pragma omp parallel for schedule(static)
  for (int q = 0; q < na; ++q) {
    const double c = std::cos(angles[q]), sn = std::sin(angles[q]);
    for (int r = 0; r < ns; ++r) {
      std::vector<std::pair<int, double>> taps;
      for (int k = 0; k < ray_samples; ++k) {
        const double t = -1.0 + (k + 0.5) * dt;
        const Tap tp = bilinear_tap(offsets[r] * c - t * sn, offsets[r] * sn + t * c, h);
        const double w[2][2] = {{(1 - tp.wy) * (1 - tp.wx), (1 - tp.wy) * tp.wx},
                                {tp.wy * (1 - tp.wx), tp.wy * tp.wx}};
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj) {
            const int i = tp.i0 + di, j = tp.j0 + dj;
            if (i >= 0 && i < n && j >= 0 && j < n) taps.emplace_back(i * n + j, w[di][dj] * dt);
          }
      }
      std::sort(taps.begin(), taps.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      auto& row = rows[static_cast<std::size_t>(r) * na + q];
      for (const auto& tp : taps) {
        if (!row.empty() && row.back().first == tp.first)
          row.back().second += tp.second;
        else
          row.push_back(tp);
      }
    }
  }
  std::size_t nnz = 0;
  for (const auto& row : rows) nnz += row.size();
  SparseOperator m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n) * n);
  m.reserve(static_cast<Eigen::Index>(nnz));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.startVec(static_cast<Eigen::Index>(r));
    for (const auto& [col, w] : rows[r]) m.insertBack(static_cast<Eigen::Index>(r), col) = w;
  }
  m.finalize();
  return m;
}

namespace {

// min_y ½‖y − z‖² + λ·Σ|∇y| over disc-supported y; accelerated primal-dual
// (the data term is 1-strongly convex), warm-started from y0 and the duals.
RealMatrix rof_denoise(const RealMatrix& z, const RealMatrix& y0, double lambda, const RealMatrix& mask,
                       RealMatrix& px, RealMatrix& py, int iterations) {
  double tau = 0.99 / std::sqrt(8.0), sigma = 0.99 / std::sqrt(8.0);
  RealMatrix y = y0.cwiseProduct(mask), y_bar = y, gx, gy;
  for (int it = 0; it < iterations; ++it) {
    gradient(y_bar, gx, gy);
    px += sigma * gx;
    py += sigma * gy;
    const RealMatrix mag = (px.array().square() + py.array().square()).sqrt().max(lambda) / lambda;
    px.array() /= mag.array();
    py.array() /= mag.array();
    const RealMatrix y_new = ((y + tau * divergence(px, py) + tau * z) / (1.0 + tau)).cwiseProduct(mask);
    const double theta = 1.0 / std::sqrt(1.0 + 2.0 * tau);
    tau *= theta;
    sigma /= theta;
    y_bar = y_new + theta * (y_new - y);
    y = y_new;
  }
  return y;
}

}  // namespace

TvResult tv_reconstruct(const Sinogram& sinogram, const TvOptions& opt) {
  check_sinogram(sinogram);
  if (!(opt.alpha > 0.0)) throw std::invalid_argument("tv_reconstruct: alpha must be positive");
  if (opt.iterations < 1) throw std::invalid_argument("tv_reconstruct: iterations must be >= 1");
  if (opt.n < 2) throw std::invalid_argument("tv_reconstruct: n must be >= 2");
  const int n = opt.n;
  const double h = 2.0 / n;
  const double w = sinogram.offset_step() * sinogram.angle_step();
  const double bound = opt.alpha * h;

  ImageGrid mask_img(RealMatrix::Constant(n, n, 1.0));
  mask_img.mask_to_disc();
  const RealMatrix& mask = mask_img.values;

  // Ray rows are r·M + q and pixel columns i·n + j, i.e. row-major flattening;
  // RealMatrix is column-major, so both are flattened through transposes.
  const SparseOperator r_op = std::sqrt(w) * radon_matrix(n, sinogram.offsets, sinogram.angles, opt.ray_samples);
  const SparseOperator r_adj = r_op.transpose();
  auto flat = [](const RealMatrix& m) {
    const RealMatrix t = m.transpose();
    return RealVector(Eigen::Map<const RealVector>(t.data(), t.size()));
  };
  auto image = [n](const RealVector& v) {
    return RealMatrix(Eigen::Map<const RealMatrix>(v.data(), n, n).transpose());
  };
  const RealVector target = std::sqrt(w) * flat(sinogram.values);
  const RealVector mask_flat = flat(mask);
  auto objective = [&](const RealVector& ru, const RealMatrix& u) {
    const double obj = 0.5 * (ru - target).squaredNorm() + bound * tv_sum(u);
    if (!std::isfinite(obj)) throw NumericalError("tv_reconstruct: non-finite objective");
    return obj;
  };

  // ‖√w·R‖² on disc-supported images by power iteration
  RealVector v = mask_flat;
  double norm_r2 = 0.0;
  for (int it = 0; it < opt.power_iterations; ++it) {
    v /= v.norm();
    RealVector next = (r_adj * (r_op * v)).cwiseProduct(mask_flat);
    norm_r2 = v.dot(next);
    v = next;
  }
  norm_r2 = std::max(1.05 * norm_r2, 1e-300);

  TvResult out;
  out.objective.reserve(static_cast<std::size_t>(opt.iterations));
  RealMatrix px = RealMatrix::Zero(n, n), py = RealMatrix::Zero(n, n);

  if (opt.solver == TvSolver::kMonotone) {
    const double lip = norm_r2;
    out.operator_norm = std::sqrt(lip);
    RealVector u = RealVector::Zero(n * n), ru = RealVector::Zero(target.size());
    RealMatrix u_img = RealMatrix::Zero(n, n);
    const double lambda = bound / lip;
    for (int it = 0; it < opt.iterations; ++it) {
      const RealMatrix z = image(u - r_adj * (ru - target) / lip);
      // prox objective ½‖y − z‖² + λ·TV(y); accept only if it beats y = u
      auto q = [&](const RealMatrix& y) { return 0.5 * (y - z).squaredNorm() + lambda * tv_sum(y); };
      const double q_current = q(u_img);
      RealMatrix y = rof_denoise(z, u_img, lambda, mask, px, py, opt.inner_iterations);
      for (int extra = 0; extra < 4 && q(y) > q_current; ++extra)
        y = rof_denoise(z, y, lambda, mask, px, py, 2 * opt.inner_iterations);
      if (q(y) <= q_current) {
        u_img = y;
        u = flat(u_img);
        ru = r_op * u;
      } else {
        ++out.rejected_steps;
      }
      out.objective.push_back(objective(ru, u_img));
    }
    out.image = ImageGrid(u_img);
    return out;
  }

  // K = [√w·R; β·∇], TV dual bound scaled to β·αh; β balances the two blocks
  const double beta = std::sqrt(norm_r2 / 8.0);
  const double lip = std::sqrt(norm_r2 + beta * beta * 8.0);
  const double tau = 0.99 / lip, sigma = 0.99 / lip;
  const double dual_bound = beta * bound;
  out.operator_norm = lip;

  RealVector u = RealVector::Zero(n * n), u_bar = u;
  RealVector ru = RealVector::Zero(target.size()), ru_bar = ru;
  RealVector p_data = RealVector::Zero(target.size());
  RealMatrix gx, gy;
  for (int it = 0; it < opt.iterations; ++it) {
    p_data = (p_data + sigma * (ru_bar - target)) / (1.0 + sigma);
    gradient(image(u_bar), gx, gy);
    px += sigma * beta * gx;
    py += sigma * beta * gy;
    const RealMatrix mag = (px.array().square() + py.array().square()).sqrt().max(dual_bound) / dual_bound;
    px.array() /= mag.array();
    py.array() /= mag.array();

    const RealVector grad = r_adj * p_data - beta * flat(divergence(px, py));
    RealVector u_new = (u - tau * grad).cwiseProduct(mask_flat);
    RealVector ru_new = r_op * u_new;
    u_bar = 2.0 * u_new - u;
    ru_bar = 2.0 * ru_new - ru;
    u = std::move(u_new);
    ru = std::move(ru_new);
    out.objective.push_back(objective(ru, image(u)));
  }
  out.image = ImageGrid(image(u));
  return out;
}

ImageGrid finalize_sigma(const ImageGrid& mu, double eps) {
  ImageGrid out(mu.n());
  for (int i = 0; i < mu.n(); ++i)
    for (int j = 0; j < mu.n(); ++j) {
      const double m = std::clamp(mu.values(i, j), -1.0 + eps, 1.0 - eps);
      out.values(i, j) = (1.0 - m) / (1.0 + m);
    }
  return out;
}

namespace {

Sinogram reflect_angles(const Sinogram& in) {
  check_sinogram(in);
  const int m = in.num_angles();
  if (m % 2 != 0) throw std::invalid_argument("angle adapter: angle count must be even");
  Sinogram out(in.offsets, periodic_grid(m));
  for (int q = 0; q < m; ++q) out.values.col(q) = in.values.col(((m / 2 - q) % m + m) % m);
  return out;
}

}  // namespace

Sinogram cgo_to_radon_angles(const Sinogram& cgo) { return reflect_angles(cgo); }
Sinogram radon_to_cgo_angles(const Sinogram& radon) { return reflect_angles(radon); }

}  // namespace vhpt::recon

namespace vhpt::serial {

Sinogram radon_transform(const ImageGrid& mu, const std::vector<double>& offsets,
                         const std::vector<double>& angles, int ray_samples) {
  recon::check_rays(ray_samples);
  Sinogram out(offsets, angles);
  for (std::size_t q = 0; q < angles.size(); ++q)
    recon::radon_column(mu, offsets, angles[q], ray_samples, out.values.col(static_cast<Eigen::Index>(q)));
  return out;
}

ImageGrid backprojection(const Sinogram& sinogram, int n, int ray_samples) {
  recon::check_rays(ray_samples);
  recon::check_sinogram(sinogram);
  RealMatrix img = RealMatrix::Zero(n, n);
  for (int q = 0; q < sinogram.num_angles(); ++q)
    recon::backproject_column(sinogram, q, ray_samples, img, 2.0 / n);
  return ImageGrid(std::move(img));
}

}  // namespace vhpt::serial
