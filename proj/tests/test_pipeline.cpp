#include "vhpt/pipeline.hpp"
#include "vhpt/recon.hpp"
#include "vhpt/vht1.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>

using namespace vhpt;
using namespace vhpt::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("vhpt-test-pipeline-" + name);
  fs::remove_all(dir);
  return dir;
}

PipelineConfig small_config(const std::string& name) {
  PipelineConfig c;
  c.electrodes = 16;
  c.mesh_rings = 24;
  c.m_theta = 33;
  c.m_tau = 17;
  c.m_phi = 40;
  c.n_t = 80;
  c.image_n = 48;
  c.tv_iterations = 20;
  c.output_dir = scratch(name).string();
  return c;
}

nlohmann::json two_discs() {
  return phantoms::to_json(phantoms::Phantom(
      1.0, {{phantoms::Disc{{-0.35, 0.2}, 0.25}, 1.0 / 1.1}, {phantoms::Disc{{0.35, -0.15}, 0.25}, 1.1}}));
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

void write_figure_inputs(const fs::path& dir, const Sinogram& sharp) {
  fs::create_directories(dir);
  io::write_sinogram(dir / "sharp.vht", sharp);
  io::write_sinogram(dir / "rodd.vht", sharp);
  write_image(dir / "sigma.vht", ImageGrid(16));
}

std::vector<double> profile(const nlohmann::json& figs, std::size_t k) {
  return figs["profiles"][k]["values"].get<std::vector<double>>();
}

}  // namespace

TEST_CASE("config json roundtrip and validation") {
  PipelineConfig c = small_config("cfg");
  c.phantom = two_discs();
  c.dn_source = DnSource::kContinuum;
  c.recon = ReconMethod::kFbp;
  c.seed = 99;
  const auto j = to_json(c);
  CHECK(to_json(config_from_json(j)) == j);
  CHECK(to_json(config_from_json(nlohmann::json::object())) == to_json(PipelineConfig{}));

  auto bad = [&](auto mutate) {
    PipelineConfig b = small_config("cfg");
    mutate(b);
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  };
  bad([](PipelineConfig& b) { b.electrodes = 15; });
  bad([](PipelineConfig& b) { b.m_theta = 32; });
  bad([](PipelineConfig& b) { b.m_tau = 16; });
  bad([](PipelineConfig& b) { b.m_phi = 41; });
  bad([](PipelineConfig& b) { b.r_cut = 13.0; });
  bad([](PipelineConfig& b) { b.window_a = 0.0; });
  bad([](PipelineConfig& b) { b.deblur = DeblurMode::kExternal; });
  CHECK_THROWS(config_from_json({{"recon", "art"}}));
}

TEST_CASE("homogeneous run yields zero intermediates") {
  PipelineConfig c = small_config("unit");
  const auto b = run_pipeline(c);
  CHECK(b.ttilde.values.cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(b.rodd.values.cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((b.sigma.values.array() - 1.0).abs().maxCoeff() <= 1e-3);
  const auto m = read_json(fs::path(c.output_dir) / "manifest.json");
  for (const char* f : {"config.json", "dn.vht", "ttilde.vht", "todd.vht", "rodd.vht", "sharp.vht", "mu.vht", "sigma.vht"})
    CHECK(fs::exists(fs::path(c.output_dir) / f));
  CHECK(m["stages"].size() == 7);
  CHECK(m["scale"].get<double>() == c.scale);
  CHECK(m["residuals"].contains("bie_max_residual"));
}

TEST_CASE("reruns are reproducible and stages rerun from disk") {
  PipelineConfig c = small_config("rerun");
  c.phantom = two_discs();
  c.noise_level = 1e-4;
  const auto first = run_pipeline(c);
  const auto second = run_pipeline(c);
  CHECK(first.manifest["artifacts"] == second.manifest["artifacts"]);
  CHECK(first.manifest.dump() == second.manifest.dump());

  const fs::path dir = c.output_dir;
  const auto ttilde = stage_cgo(c, dnmap::DNMatrix(io::vht1_read(dir / "dn.vht").as_real()));
  CHECK(ttilde.values == read_scattering_grid(dir / "ttilde.vht").values);
  const auto todd = stage_pseudotime(c, read_scattering_grid(dir / "ttilde.vht"));
  CHECK(todd.values == io::read_complex_sinogram(dir / "todd.vht").values);
  const auto rodd = stage_phase(c, io::read_complex_sinogram(dir / "todd.vht"));
  CHECK(rodd.values == io::read_sinogram(dir / "rodd.vht").values);
  const auto sharp = stage_deblur(c, io::read_sinogram(dir / "rodd.vht"));
  CHECK(sharp.values == io::read_sinogram(dir / "sharp.vht").values);
  const auto mu = stage_recon(c, io::read_sinogram(dir / "sharp.vht"));
  CHECK(mu.values == read_image(dir / "mu.vht").values);

  const auto v = stage_forward(c, c.make_phantom());
  CHECK(v.target == io::vht1_read(dir / "v_trg.vht").as_real());
  CHECK(stage_calibrate(c, v).lambda == first.dn.lambda);
}

TEST_CASE("failing stage is named and partial outputs persist") {
  PipelineConfig c = small_config("fail");
  c.deblur = DeblurMode::kExternal;
  c.deblur_command = "false";
  try {
    run_pipeline(c);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "deblur");
  }
  const fs::path dir = c.output_dir;
  const auto m = read_json(dir / "manifest.json");
  CHECK(m["failed_stage"] == "deblur");
  CHECK(m["artifacts"].contains("rodd.vht"));
  CHECK_FALSE(m["artifacts"].contains("sharp.vht"));
  CHECK(fs::exists(dir / "rodd.vht"));
}

TEST_CASE("figures") {
  const auto s = centered_grid(1.0, 200);
  const auto psi = periodic_grid(100);

  SUBCASE("flat profiles and one file per angle") {
    const auto dir = scratch("fig-empty");
    write_figure_inputs(dir, Sinogram(s, psi));
    const auto files = emit_figures(dir, {0.0, kPi / 4, kPi / 2});
    for (const auto& f : files) CHECK(fs::exists(f));
    const auto figs = read_json(dir / "figures.json");
    REQUIRE(figs["profiles"].size() == 3);
    for (std::size_t k = 0; k < 3; ++k)
      for (double v : profile(figs, k)) CHECK(v == 0.0);
    int profiles = 0;
    for (const auto& f : fs::directory_iterator(dir))
      if (f.path().filename().string().rfind("profile_", 0) == 0) ++profiles;
    CHECK(profiles == 3);
  }

  SUBCASE("missing intermediate") {
    const auto dir = scratch("fig-missing");
    write_figure_inputs(dir, Sinogram(s, psi));
    fs::remove(dir / "sigma.vht");
    CHECK_THROWS_WITH(emit_figures(dir, {0.0}), doctest::Contains("missing intermediate"));
  }

  SUBCASE("pac-man notch") {
    const phantoms::Phantom pac(1.0, {{phantoms::PacMan{{0.0, 0.0}, 0.6, 0.4, 0.0}, 0.5}});
    const auto dir = scratch("fig-pacman");
    write_figure_inputs(dir, recon::radon_transform(phantoms::rasterize(pac, 256, phantoms::Field::kMu, 2), s, psi));
    emit_figures(dir, {kPi / 2});
    const auto y = profile(read_json(dir / "figures.json"), 0);
    const double centre = 0.5 * (y[99] + y[100]);
    const double left = *std::max_element(y.begin() + 50, y.begin() + 99);
    const double right = *std::max_element(y.begin() + 101, y.begin() + 150);
    CHECK(centre < 0.8 * left);
    CHECK(centre < 0.8 * right);
    CHECK(centre > 0.0);
  }

  SUBCASE("two-disc peak and valley") {
    const auto ph = phantoms::phantom_from_json(two_discs());
    const auto dir = scratch("fig-two");
    write_figure_inputs(dir, recon::radon_transform(phantoms::rasterize(ph, 256, phantoms::Field::kMu, 2), s, psi));
    emit_figures(dir, {0.0});
    const auto y = profile(read_json(dir / "figures.json"), 0);
    const auto lo = std::min_element(y.begin(), y.end()) - y.begin();
    const auto hi = std::max_element(y.begin(), y.end()) - y.begin();
    CHECK(s[hi] == doctest::Approx(-0.35).epsilon(0.1));
    CHECK(s[lo] == doctest::Approx(0.35).epsilon(0.1));
    CHECK(y[hi] > 0.0);
    CHECK(y[lo] < 0.0);
  }
}
