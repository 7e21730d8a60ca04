#include "vhpt/pipeline.hpp"

#include "vhpt/deblur.hpp"
#include "vhpt/forward.hpp"
#include "vhpt/image_io.hpp"
#include "vhpt/pseudotime.hpp"
#include "vhpt/recon.hpp"
#include "vhpt/vht1.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>

namespace vhpt::pipeline {

namespace {

template <class E>
E enum_from(const nlohmann::json& j, const char* key, std::initializer_list<std::pair<const char*, E>> names,
            E fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::string>();
  for (const auto& [name, e] : names)
    if (v == name) return e;
  throw std::invalid_argument(std::string("config: unknown value '") + v + "' for " + key);
}

const char* name_of(DnSource s) { return s == DnSource::kCem ? "cem" : "continuum"; }
const char* name_of(DeblurMode m) { return m == DeblurMode::kTikhonov ? "tikhonov" : "external"; }
const char* name_of(ReconMethod m) { return m == ReconMethod::kTv ? "tv" : "fbp"; }

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

}  // namespace

void PipelineConfig::validate() const {
  require(electrodes >= 4 && electrodes % 2 == 0, "electrodes must be even and >= 4");
  require(mesh_rings >= 4, "mesh_rings must be >= 4");
  require(m_theta >= 3 && m_theta % 2 == 1, "m_theta must be odd and >= 3");
  require((m_theta - 1) / 2 >= (electrodes - 2) / 2, "m_theta too small for the DN basis order");
  require(m_tau >= 3 && m_tau % 2 == 1, "m_tau must be odd and >= 3");
  require(m_phi >= 2 && m_phi % 2 == 0, "m_phi must be even and >= 2");
  require(n_t >= 4, "n_t must be >= 4");
  require(image_n >= 8, "image_n must be >= 8");
  require(tank_sigma > 0.0, "tank_sigma must be positive");
  require(coverage > 0.0 && coverage < 1.0, "coverage must be in (0, 1)");
  require(contact_impedance > 0.0, "contact_impedance must be positive");
  require(current_amplitude > 0.0, "current_amplitude must be positive");
  require(noise_level >= 0.0, "noise_level must be >= 0");
  require(window_a > 0.0, "window_a must be positive");
  require(r_cut > 0.0 && r_cut <= 12.0, "r_cut must be in (0, 12]");
  require(scale != 0.0 && std::isfinite(scale), "scale must be finite and nonzero");
  require(lambda > 0.0, "lambda must be positive");
  require(alpha > 0.0, "alpha must be positive");
  require(tv_iterations >= 1, "tv_iterations must be >= 1");
  require(deblur != DeblurMode::kExternal || !deblur_command.empty(), "external deblur needs deblur_command");
  require(!output_dir.empty(), "output_dir must not be empty");
}

phantoms::Phantom PipelineConfig::make_phantom() const {
  if (phantom.is_null() || (phantom.is_object() && phantom.empty())) return phantoms::Phantom(1.0);
  return phantoms::phantom_from_json(phantom);
}

nlohmann::json to_json(const PipelineConfig& c) {
  return {
      {"phantom", c.phantom.is_null() ? nlohmann::json::object() : c.phantom},
      {"grids", {{"electrodes", c.electrodes}, {"mesh_rings", c.mesh_rings}, {"m_theta", c.m_theta},
                 {"m_tau", c.m_tau}, {"m_phi", c.m_phi}, {"n_t", c.n_t}, {"image_n", c.image_n}}},
      {"physics", {{"dn_source", name_of(c.dn_source)}, {"tank_sigma", c.tank_sigma},
                   {"coverage", c.coverage}, {"contact_impedance", c.contact_impedance},
                   {"current_amplitude", c.current_amplitude}, {"noise_level", c.noise_level},
                   {"window_a", c.window_a}, {"r_cut", c.r_cut}, {"scale", c.scale},
                   {"lambda", c.lambda}, {"alpha", c.alpha}, {"tv_iterations", c.tv_iterations}}},
      {"seed", c.seed},
      {"deblur", {{"mode", name_of(c.deblur)}, {"command", c.deblur_command}}},
      {"recon", name_of(c.recon)},
      {"output_dir", c.output_dir},
  };
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("phantom")) c.phantom = j.at("phantom");
  if (j.contains("grids")) {
    const auto& g = j.at("grids");
    c.electrodes = g.value("electrodes", c.electrodes);
    c.mesh_rings = g.value("mesh_rings", c.mesh_rings);
    c.m_theta = g.value("m_theta", c.m_theta);
    c.m_tau = g.value("m_tau", c.m_tau);
    c.m_phi = g.value("m_phi", c.m_phi);
    c.n_t = g.value("n_t", c.n_t);
    c.image_n = g.value("image_n", c.image_n);
  }
  if (j.contains("physics")) {
    const auto& p = j.at("physics");
    c.dn_source = enum_from(p, "dn_source", {{"cem", DnSource::kCem}, {"continuum", DnSource::kContinuum}}, c.dn_source);
    c.tank_sigma = p.value("tank_sigma", c.tank_sigma);
    c.coverage = p.value("coverage", c.coverage);
    c.contact_impedance = p.value("contact_impedance", c.contact_impedance);
    c.current_amplitude = p.value("current_amplitude", c.current_amplitude);
    c.noise_level = p.value("noise_level", c.noise_level);
    c.window_a = p.value("window_a", c.window_a);
    c.r_cut = p.value("r_cut", c.r_cut);
    c.scale = p.value("scale", c.scale);
    c.lambda = p.value("lambda", c.lambda);
    c.alpha = p.value("alpha", c.alpha);
    c.tv_iterations = p.value("tv_iterations", c.tv_iterations);
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("deblur")) {
    const auto& d = j.at("deblur");
    c.deblur = enum_from(d, "mode", {{"tikhonov", DeblurMode::kTikhonov}, {"external", DeblurMode::kExternal}}, c.deblur);
    c.deblur_command = d.value("command", c.deblur_command);
  }
  c.recon = enum_from(j, "recon", {{"tv", ReconMethod::kTv}, {"fbp", ReconMethod::kFbp}}, c.recon);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.validate();
  return c;
}

std::vector<double> tau_grid(const PipelineConfig& c) { return linspace(-c.r_cut, c.r_cut, c.m_tau); }
std::vector<double> t_grid(const PipelineConfig& c) { return centered_grid(2.0, c.n_t); }

Voltages stage_forward(const PipelineConfig& c, const phantoms::Phantom& phantom) {
  const auto mesh = forward::make_disc_mesh(c.mesh_rings);
  const auto layout = forward::ElectrodeLayout::uniform(c.electrodes, c.coverage, c.contact_impedance);
  const auto patterns = dnmap::trig_patterns(c.electrodes, c.current_amplitude);
  Voltages v;
  v.target = forward::add_noise(forward::solve_cem(phantom.scaled(c.tank_sigma), layout, patterns.currents, mesh),
                                c.noise_level, c.seed);
  v.calibration = forward::add_noise(
      forward::solve_cem(phantoms::Phantom(c.tank_sigma), layout, patterns.currents, mesh), c.noise_level,
      c.seed + 1);
  v.reference = forward::solve_cem(phantoms::Phantom(1.0), layout, patterns.currents, mesh);
  return v;
}

dnmap::DNMatrix stage_calibrate(const PipelineConfig& c, const Voltages& v) {
  return dnmap::assemble_dn_calibrated(v.target, v.calibration, v.reference,
                                       dnmap::trig_patterns(c.electrodes, c.current_amplitude));
}

dnmap::DNMatrix stage_continuum_dn(const PipelineConfig& c, const phantoms::Phantom& phantom) {
  const auto mesh = forward::make_disc_mesh(c.mesh_rings);
  const int order = (c.electrodes - 2) / 2;
  return dnmap::assemble_dn_continuum_relative(forward::solve_continuum_nd(phantom, order, mesh),
                                               forward::solve_continuum_nd(phantoms::Phantom(1.0), order, mesh));
}

cgo::ScatteringGrid stage_cgo(const PipelineConfig& c, const dnmap::DNMatrix& dn, nlohmann::json* meta) {
  cgo::BieOptions opt;
  opt.m_theta = c.m_theta;
  const auto traces = cgo::solve_bie(dn, tau_grid(c), periodic_grid(c.m_phi), opt);
  if (meta) *meta = traces.metadata();
  return cgo::scattering_trace(traces);
}

ComplexSinogram stage_pseudotime(const PipelineConfig& c, const cgo::ScatteringGrid& grid) {
  return pseudotime::windowed_ft(grid, c.window_a, t_grid(c));
}

Sinogram stage_phase(const PipelineConfig& c, const ComplexSinogram& t, nlohmann::json* meta) {
  pseudotime::PhaseOptions opt;
  opt.scale = c.scale;
  return pseudotime::phase_integrate(t, opt, meta);
}

Sinogram stage_deblur(const PipelineConfig& c, const Sinogram& r_odd) {
  const Sinogram radon = recon::cgo_to_radon_angles(r_odd);
  if (c.deblur == DeblurMode::kExternal) return deblur::external_deblur(radon, {c.deblur_command, {}});
  return deblur::deconvolve_columns(radon, c.window_a, c.lambda);
}

ImageGrid stage_recon(const PipelineConfig& c, const Sinogram& sharp, nlohmann::json* meta) {
  if (c.recon == ReconMethod::kFbp) return recon::fbp(sharp, {c.image_n});
  recon::TvOptions opt;
  opt.alpha = c.alpha;
  opt.iterations = c.tv_iterations;
  opt.n = c.image_n;
  auto res = recon::tv_reconstruct(sharp, opt);
  if (meta) {
    (*meta)["tv_objective_first"] = res.objective.front();
    (*meta)["tv_objective_last"] = res.objective.back();
    (*meta)["tv_rejected_steps"] = res.rejected_steps;
  }
  return res.image;
}

void write_scattering_grid(const std::filesystem::path& path, const cgo::ScatteringGrid& g, nlohmann::json meta) {
  if (meta.is_null()) meta = nlohmann::json::object();
  meta["tau"] = g.tau;
  meta["phi"] = g.phi;
  io::vht1_write(path, g.values, meta);
}

cgo::ScatteringGrid read_scattering_grid(const std::filesystem::path& path) {
  auto f = io::vht1_read(path);
  cgo::ScatteringGrid g;
  g.values = f.as_complex();
  g.tau = f.meta.value("tau", std::vector<double>{});
  g.phi = f.meta.value("phi", std::vector<double>{});
  if (g.tau.size() != static_cast<std::size_t>(g.values.rows()) ||
      g.phi.size() != static_cast<std::size_t>(g.values.cols()))
    throw std::runtime_error("scattering grid: metadata grids do not match " + path.string());
  return g;
}

void write_image(const std::filesystem::path& path, const ImageGrid& g, nlohmann::json meta) {
  if (meta.is_null()) meta = nlohmann::json::object();
  meta["extent"] = {-1.0, 1.0};
  meta["layout"] = "row i <-> y, column j <-> x";
  io::vht1_write(path, g.values, meta);
}

ImageGrid read_image(const std::filesystem::path& path) { return ImageGrid(io::vht1_read(path).as_real()); }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("sha256: cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest initialisation failed");
  std::vector<char> buf(1 << 16);
  while (f) {
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

Bundle run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "config.json");
    f << to_json(cfg).dump(2) << "\n";
  }

  Bundle b;
  nlohmann::json& m = b.manifest;
  m["config"] = to_json(cfg);
  m["artifacts"] = nlohmann::json::object();
  m["stages"] = nlohmann::json::array();
  m["scale"] = cfg.scale;
  auto record = [&](const std::string& file) {
    m["artifacts"][file] = {{"sha256", sha256_file(dir / file)}};
  };
  auto write_manifest = [&] {
    std::ofstream f(dir / "manifest.json");
    f << m.dump(2) << "\n";
  };
  auto stage = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      m["failed_stage"] = name;
      m["error"] = e.what();
      write_manifest();
      throw StageError(name, e.what());
    }
    m["stages"].push_back(name);
  };

  phantoms::Phantom phantom;
  stage("phantom", [&] {
    phantom = cfg.make_phantom();
    std::ofstream f(dir / "phantom.json");
    f << phantoms::to_json(phantom).dump(2) << "\n";
  });
  record("phantom.json");

  if (cfg.dn_source == DnSource::kCem) {
    Voltages v;
    stage("forward", [&] {
      v = stage_forward(cfg, phantom);
      io::vht1_write(dir / "v_trg.vht", v.target);
      io::vht1_write(dir / "v_clb.vht", v.calibration);
      io::vht1_write(dir / "v_1cem.vht", v.reference);
    });
    for (const char* f : {"v_trg.vht", "v_clb.vht", "v_1cem.vht"}) record(f);
    stage("calibrate", [&] { b.dn = stage_calibrate(cfg, v); });
  } else {
    stage("calibrate", [&] { b.dn = stage_continuum_dn(cfg, phantom); });
  }
  io::vht1_write(dir / "dn.vht", b.dn.lambda, {{"basis_order", b.dn.basis_order()}});
  record("dn.vht");

  stage("cgo", [&] {
    nlohmann::json meta;
    b.ttilde = stage_cgo(cfg, b.dn, &meta);
    m["residuals"]["bie_max_residual"] = meta["max_residual"];
    m["residuals"]["bie_residual_warnings"] = meta["residual_warnings"];
    write_scattering_grid(dir / "ttilde.vht", b.ttilde, meta);
  });
  record("ttilde.vht");

  stage("pseudotime", [&] {
    b.todd = stage_pseudotime(cfg, b.ttilde);
    io::write_complex_sinogram(dir / "todd.vht", b.todd);
    nlohmann::json meta;
    b.rodd = stage_phase(cfg, b.todd, &meta);
    m["residuals"]["imag_fraction"] = meta["imag_fraction"];
    m["residuals"]["imag_warning"] = meta["imag_warning"];
    io::write_sinogram(dir / "rodd.vht", b.rodd, meta);
  });
  record("todd.vht");
  record("rodd.vht");

  stage("deblur", [&] {
    b.sharp = stage_deblur(cfg, b.rodd);
    io::write_sinogram(dir / "sharp.vht", b.sharp, {{"angle_convention", "radon"}});
  });
  record("sharp.vht");

  stage("recon", [&] {
    nlohmann::json meta;
    b.mu = stage_recon(cfg, b.sharp, &meta);
    b.sigma = recon::finalize_sigma(b.mu);
    if (!meta.empty()) m["recon"] = meta;
    write_image(dir / "mu.vht", b.mu);
    write_image(dir / "sigma.vht", b.sigma);
  });
  record("mu.vht");
  record("sigma.vht");

  write_manifest();
  return b;
}

std::vector<std::filesystem::path> emit_figures(const std::filesystem::path& dir,
                                                const std::vector<double>& profile_angles) {
  auto need = [&](const char* name) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) throw std::runtime_error("figures: missing intermediate " + p.string());
    return p;
  };
  const Sinogram sharp = io::read_sinogram(need("sharp.vht"));
  const Sinogram rodd = io::read_sinogram(need("rodd.vht"));
  const ImageGrid sigma = read_image(need("sigma.vht"));

  std::vector<std::filesystem::path> out;
  nlohmann::json ranges;
  auto note = [&](const std::filesystem::path& p, io::Range r) {
    ranges[p.filename().string()] = {{"min", r.min}, {"max", r.max}};
    out.push_back(p);
  };
  note(dir / "sinogram.png", io::write_png_heatmap(dir / "sinogram.png", sharp.values));
  note(dir / "rodd.png", io::write_png_heatmap(dir / "rodd.png", rodd.values));
  note(dir / "sigma.png", io::write_png_gray(dir / "sigma.png", io::flip_rows(sigma.values)));
  note(dir / "sigma.pgm", io::write_pgm(dir / "sigma.pgm", io::flip_rows(sigma.values)));
  for (double psi : profile_angles) {
    const double step = sharp.angle_step();
    double wrapped = std::fmod(psi, kTwoPi);
    if (wrapped < 0.0) wrapped += kTwoPi;
    const int q = static_cast<int>(std::lround(wrapped / step)) % sharp.num_angles();
    std::vector<double> y(sharp.values.rows());
    for (Eigen::Index r = 0; r < sharp.values.rows(); ++r) y[r] = sharp.values(r, q);
    std::ostringstream name;
    name << "profile_" << std::fixed << std::setprecision(1) << sharp.angles[q] * 180.0 / kPi << "deg.png";
    note(dir / name.str(), io::write_png_profile(dir / name.str(), sharp.offsets, y));
    ranges["profiles"].push_back({{"file", name.str()}, {"angle", sharp.angles[q]}, {"values", y}});
  }
  ranges["offsets"] = sharp.offsets;
  std::ofstream f(dir / "figures.json");
  f << ranges.dump(2) << "\n";
  return out;
}

}  // namespace vhpt::pipeline
