#pragma once

#include "vhpt/cgo.hpp"
#include "vhpt/dnmap.hpp"
#include "vhpt/phantom.hpp"
#include "vhpt/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace vhpt::pipeline {

enum class DnSource { kCem, kContinuum };
enum class DeblurMode { kTikhonov, kExternal };
enum class ReconMethod { kTv, kFbp };

struct PipelineConfig {
  nlohmann::json phantom;  // phantom schema; empty object means σ ≡ 1

  // grids
  int electrodes = 32;
  int mesh_rings = 64;
  int m_theta = 65;
  int m_tau = 33;
  int m_phi = 100;
  int n_t = 200;
  int image_n = 128;

  // physics and regularisation
  DnSource dn_source = DnSource::kCem;
  double tank_sigma = 2.7;
  double coverage = 0.5;
  double contact_impedance = 1e-2;
  double current_amplitude = 0.35;
  double noise_level = 0.0;
  double window_a = 0.1;
  double r_cut = 6.0;
  double scale = 2.0 * kPi * kPi;
  double lambda = 1e-3;
  double alpha = 0.009;
  int tv_iterations = 400;

  std::uint64_t seed = 1;
  DeblurMode deblur = DeblurMode::kTikhonov;
  std::string deblur_command;
  ReconMethod recon = ReconMethod::kTv;
  std::string output_dir = "vhpt-out";

  void validate() const;
  [[nodiscard]] phantoms::Phantom make_phantom() const;
};

nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig config_from_json(const nlohmann::json& j);

struct Voltages {
  RealMatrix target;
  RealMatrix calibration;
  RealMatrix reference;  // σ ≡ 1 under the CEM
};

// Stages, each a pure function of its inputs and the config.
Voltages stage_forward(const PipelineConfig& c, const phantoms::Phantom& phantom);
dnmap::DNMatrix stage_calibrate(const PipelineConfig& c, const Voltages& v);
dnmap::DNMatrix stage_continuum_dn(const PipelineConfig& c, const phantoms::Phantom& phantom);
cgo::ScatteringGrid stage_cgo(const PipelineConfig& c, const dnmap::DNMatrix& dn, nlohmann::json* meta = nullptr);
ComplexSinogram stage_pseudotime(const PipelineConfig& c, const cgo::ScatteringGrid& grid);
Sinogram stage_phase(const PipelineConfig& c, const ComplexSinogram& t, nlohmann::json* meta = nullptr);
/// Deblurred sinogram in Radon angle convention.
Sinogram stage_deblur(const PipelineConfig& c, const Sinogram& r_odd);
ImageGrid stage_recon(const PipelineConfig& c, const Sinogram& sharp, nlohmann::json* meta = nullptr);

std::vector<double> tau_grid(const PipelineConfig& c);
std::vector<double> t_grid(const PipelineConfig& c);

struct Bundle {
  dnmap::DNMatrix dn;
  cgo::ScatteringGrid ttilde;
  ComplexSinogram todd;
  Sinogram rodd;
  Sinogram sharp;
  ImageGrid mu;
  ImageGrid sigma;
  nlohmann::json manifest;
};

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  [[nodiscard]] const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Runs every stage and writes dn, ttilde, todd, rodd, sharp, mu, sigma (.vht),
/// config.json and manifest.json into cfg.output_dir. A failing stage raises
/// StageError after the manifest of the completed stages has been written.
Bundle run_pipeline(const PipelineConfig& cfg);

void write_scattering_grid(const std::filesystem::path& path, const cgo::ScatteringGrid& g,
                           nlohmann::json meta = {});
cgo::ScatteringGrid read_scattering_grid(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const ImageGrid& g, nlohmann::json meta = {});
ImageGrid read_image(const std::filesystem::path& path);

/// Hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

/// Sinogram heatmap, R_odd heatmap, one profile plot per Radon angle (radians)
/// and the σ image, written next to the bundle in `dir`. Returns the files written.
std::vector<std::filesystem::path> emit_figures(const std::filesystem::path& dir,
                                                const std::vector<double>& profile_angles);

}  // namespace vhpt::pipeline
