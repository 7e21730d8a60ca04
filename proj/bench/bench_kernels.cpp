#include "vhpt/cgo.hpp"
#include "vhpt/dnmap.hpp"
#include "vhpt/phantom.hpp"
#include "vhpt/pseudotime.hpp"
#include "vhpt/recon.hpp"

#include <benchmark/benchmark.h>

using namespace vhpt;

namespace {

const phantoms::Phantom kPhantom(1.0, {{phantoms::Disc{{-0.35, 0.2}, 0.25}, 1.0 / 1.1},
                                       {phantoms::Disc{{0.35, -0.15}, 0.25}, 1.1}});

const ImageGrid& image() {
  static const ImageGrid mu = phantoms::rasterize(kPhantom, 128, phantoms::Field::kMu);
  return mu;
}

const Sinogram& sinogram() {
  static const Sinogram s = recon::radon_transform(image(), centered_grid(1.0, 200), periodic_grid(100));
  return s;
}

void BM_Radon(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(recon::radon_transform(image(), sinogram().offsets, sinogram().angles));
}

void BM_RadonSerial(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(serial::radon_transform(image(), sinogram().offsets, sinogram().angles));
}

void BM_Backprojection(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(recon::backprojection(sinogram(), 128));
}

void BM_BackprojectionSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::backprojection(sinogram(), 128));
}

void BM_DirectV1(benchmark::State& st) {
  const auto theta = periodic_grid(65);
  for (auto _ : st) benchmark::DoNotOptimize(pseudotime::direct_v1(image(), cplx(2.0, 1.0), theta));
}

void BM_DirectV1Serial(benchmark::State& st) {
  const auto theta = periodic_grid(65);
  for (auto _ : st) benchmark::DoNotOptimize(serial::direct_v1(image(), cplx(2.0, 1.0), theta));
}

struct Hilbert {
  RealMatrix plus, minus;
};

const Hilbert& hilbert() {
  static const Hilbert h = [] {
    const auto dn = dnmap::radial_dn_matrix(0.5, 1.2, 15);
    return Hilbert{cgo::hilbert_matrix(dn, 65), cgo::hilbert_matrix_neg(dn, 65)};
  }();
  return h;
}

void BM_SolveBie(benchmark::State& st) {
  const auto tau = linspace(-6.0, 6.0, 33);
  const auto phi = periodic_grid(8);
  for (auto _ : st) benchmark::DoNotOptimize(cgo::solve_bie(hilbert().plus, hilbert().minus, tau, phi));
}

void BM_SolveBieSerial(benchmark::State& st) {
  const auto tau = linspace(-6.0, 6.0, 33);
  const auto phi = periodic_grid(8);
  for (auto _ : st) benchmark::DoNotOptimize(serial::solve_bie(hilbert().plus, hilbert().minus, tau, phi));
}

}  // namespace

BENCHMARK(BM_Radon)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RadonSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Backprojection)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackprojectionSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DirectV1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DirectV1Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveBie)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveBieSerial)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  sinogram();
  hilbert();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
