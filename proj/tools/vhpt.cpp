#include "vhpt/deblur.hpp"
#include "vhpt/forward.hpp"
#include "vhpt/pipeline.hpp"
#include "vhpt/pseudotime.hpp"
#include "vhpt/recon.hpp"
#include "vhpt/vht1.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

using namespace vhpt;
using namespace vhpt::pipeline;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot open " + p.string());
  return nlohmann::json::parse(f);
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream f(p);
  f << j.dump(2) << "\n";
}

phantoms::Phantom preset(const std::string& name, std::uint64_t seed) {
  using namespace phantoms;
  if (name == "homogeneous") return Phantom(1.0);
  if (name == "concentric") return Phantom(1.0, {{Disc{{0.0, 0.0}, 0.5}, 2.0}});
  if (name == "two-disc")
    return Phantom(1.0, {{Disc{{-0.35, 0.2}, 0.25}, 1.0 / 1.1}, {Disc{{0.35, -0.15}, 0.25}, 1.1}});
  if (name == "pacman")
    return Phantom(1.0, {{PacMan{{0.0, 0.0}, 0.5, 0.5, 0.0}, 1.0 / 1.1}});
  if (name == "random") return random_phantom(seed);
  throw std::invalid_argument("unknown preset '" + name + "'");
}

// "--config" is applied first so explicit flags win over the file.
PipelineConfig initial_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return config_from_json(read_json(argv[i + 1]));
    if (arg.rfind("--config=", 0) == 0) return config_from_json(read_json(arg.substr(9)));
  }
  return {};
}

void add_config_flags(CLI::App* app, PipelineConfig& c, std::string& phantom_path) {
  app->add_option("--config", "JSON config; explicit flags override it");
  app->add_option("--phantom", phantom_path, "phantom JSON file");
  app->add_option("--out-dir", c.output_dir, "artifact directory");
  app->add_option("--electrodes", c.electrodes);
  app->add_option("--mesh-rings", c.mesh_rings);
  app->add_option("--m-theta", c.m_theta);
  app->add_option("--m-tau", c.m_tau);
  app->add_option("--m-phi", c.m_phi);
  app->add_option("--n-t", c.n_t);
  app->add_option("--image-n", c.image_n);
  app->add_option("--dn-source", c.dn_source)
      ->transform(CLI::CheckedTransformer(std::map<std::string, DnSource>{
          {"cem", DnSource::kCem}, {"continuum", DnSource::kContinuum}}));
  app->add_option("--tank-sigma", c.tank_sigma);
  app->add_option("--coverage", c.coverage);
  app->add_option("--contact-impedance", c.contact_impedance);
  app->add_option("--current-amplitude", c.current_amplitude);
  app->add_option("--noise", c.noise_level);
  app->add_option("--window-a", c.window_a);
  app->add_option("--r-cut", c.r_cut);
  app->add_option("--scale", c.scale);
  app->add_option("--lambda", c.lambda);
  app->add_option("--alpha", c.alpha);
  app->add_option("--tv-iterations", c.tv_iterations);
  app->add_option("--seed", c.seed);
  app->add_option("--deblur", c.deblur)
      ->transform(CLI::CheckedTransformer(std::map<std::string, DeblurMode>{
          {"tikhonov", DeblurMode::kTikhonov}, {"external", DeblurMode::kExternal}}));
  app->add_option("--deblur-command", c.deblur_command);
  app->add_option("--recon", c.recon)
      ->transform(CLI::CheckedTransformer(std::map<std::string, ReconMethod>{
          {"tv", ReconMethod::kTv}, {"fbp", ReconMethod::kFbp}}));
}

void apply_threads() {
  if (const char* env = std::getenv("VHPT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  apply_threads();
  CLI::App app{"Virtual hybrid parallel-beam tomography"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  try {
    cfg = initial_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  }
  std::string phantom_path;

  auto* ph = app.add_subcommand("phantom", "write a phantom JSON and optional rasters");
  std::string preset_name = "two-disc";
  std::string phantom_out = "phantom.json";
  int raster_n = 0;
  ph->add_option("--preset", preset_name, "homogeneous | concentric | two-disc | pacman | random");
  ph->add_option("--out", phantom_out);
  ph->add_option("--raster", raster_n, "also write sigma.vht and mu.vht at this resolution");
  ph->add_option("--seed", cfg.seed);

  auto* fw = app.add_subcommand("forward", "CEM voltages for target, calibration and σ ≡ 1");
  auto* cal = app.add_subcommand("calibrate", "DN matrix from voltages (or the continuum model)");
  auto* cg = app.add_subcommand("cgo", "boundary integral equation and scattering trace");
  auto* sg = app.add_subcommand("sinogram", "pseudo-time transform and phase integration");
  auto* db = app.add_subcommand("deblur", "deblur R_odd into a Radon-angle sinogram");
  auto* rc = app.add_subcommand("recon", "TV or FBP reconstruction of μ and σ");
  auto* pl = app.add_subcommand("pipeline", "run every stage");
  for (auto* sub : {fw, cal, cg, sg, db, rc, pl}) add_config_flags(sub, cfg, phantom_path);

  auto* fg = app.add_subcommand("figures", "heatmaps, profiles and σ image from a bundle");
  std::string fig_dir = "vhpt-out";
  std::vector<double> angles_deg{0.0, 45.0, 90.0};
  fg->add_option("--dir", fig_dir);
  fg->add_option("--angle", angles_deg, "Radon angle of a profile in degrees (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!phantom_path.empty()) cfg.phantom = read_json(phantom_path);
    const fs::path dir = cfg.output_dir;

    if (*ph) {
      const auto p = preset(preset_name, cfg.seed);
      write_json(phantom_out, phantoms::to_json(p));
      if (raster_n > 0) {
        const fs::path base = fs::path(phantom_out).parent_path();
        io::vht1_write(base / "sigma.vht", phantoms::rasterize(p, raster_n, phantoms::Field::kSigma, 4).values);
        io::vht1_write(base / "mu.vht", phantoms::rasterize(p, raster_n, phantoms::Field::kMu, 4).values);
      }
      return 0;
    }
    if (*fg) {
      std::vector<double> rad;
      for (double d : angles_deg) rad.push_back(d * kPi / 180.0);
      for (const auto& f : emit_figures(fig_dir, rad)) std::cout << f.string() << "\n";
      return 0;
    }

    cfg.validate();
    if (*pl) {
      const auto b = run_pipeline(cfg);
      std::cout << b.manifest["artifacts"].dump(2) << "\n";
      return 0;
    }

    fs::create_directories(dir);
    if (*fw) {
      const auto v = stage_forward(cfg, cfg.make_phantom());
      io::vht1_write(dir / "v_trg.vht", v.target);
      io::vht1_write(dir / "v_clb.vht", v.calibration);
      io::vht1_write(dir / "v_1cem.vht", v.reference);
    } else if (*cal) {
      dnmap::DNMatrix dn;
      if (cfg.dn_source == DnSource::kCem) {
        Voltages v{io::vht1_read(dir / "v_trg.vht").as_real(), io::vht1_read(dir / "v_clb.vht").as_real(),
                   io::vht1_read(dir / "v_1cem.vht").as_real()};
        dn = stage_calibrate(cfg, v);
      } else {
        dn = stage_continuum_dn(cfg, cfg.make_phantom());
      }
      io::vht1_write(dir / "dn.vht", dn.lambda, {{"basis_order", dn.basis_order()}});
    } else if (*cg) {
      nlohmann::json meta;
      const auto grid = stage_cgo(cfg, dnmap::DNMatrix(io::vht1_read(dir / "dn.vht").as_real()), &meta);
      write_scattering_grid(dir / "ttilde.vht", grid, meta);
      std::cout << "max residual " << meta["max_residual"] << ", warnings " << meta["residual_warnings"] << "\n";
    } else if (*sg) {
      const auto todd = stage_pseudotime(cfg, read_scattering_grid(dir / "ttilde.vht"));
      io::write_complex_sinogram(dir / "todd.vht", todd);
      nlohmann::json meta;
      const auto rodd = stage_phase(cfg, todd, &meta);
      io::write_sinogram(dir / "rodd.vht", rodd, meta);
      std::cout << "imag fraction " << meta["imag_fraction"] << "\n";
    } else if (*db) {
      io::write_sinogram(dir / "sharp.vht", stage_deblur(cfg, io::read_sinogram(dir / "rodd.vht")),
                         {{"angle_convention", "radon"}});
    } else if (*rc) {
      const auto mu = stage_recon(cfg, io::read_sinogram(dir / "sharp.vht"));
      write_image(dir / "mu.vht", mu);
      write_image(dir / "sigma.vht", recon::finalize_sigma(mu));
    }
  } catch (const StageError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
