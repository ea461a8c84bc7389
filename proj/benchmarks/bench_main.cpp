#include <benchmark/benchmark.h>

#include "fpsi/mms.hpp"

using namespace fpsi;

namespace {

Mesh2D verification_mesh(int level) {
  Mesh2D m = build_two_block_mesh({0, 0, 1, 1}, {0, 1, 1, 2}, 4, 8);
  for (int l = 0; l < level; ++l) m = refine_uniform(m);
  return m;
}

void BM_AssembleSystem(benchmark::State& state) {
  const Mesh2D mesh = verification_mesh(static_cast<int>(state.range(0)));
  std::vector<FunctionSpace> storage;
  const Spaces sp = build_spaces_storage(mesh, storage);
  const MaterialFields mats =
      ManufacturedCase::standard().materials(mesh);
  for (auto _ : state) {
    CoupledSystem sys = assemble_system(mesh, sp, mats, 0.0);
    benchmark::DoNotOptimize(sys.dim);
  }
  state.counters["dofs"] = static_cast<double>(sp.total_dim());
}
BENCHMARK(BM_AssembleSystem)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_FactorizeAndStep(benchmark::State& state) {
  const Mesh2D mesh = verification_mesh(static_cast<int>(state.range(0)));
  const ManufacturedCase mcase = ManufacturedCase::standard();
  std::vector<FunctionSpace> storage;
  const Spaces sp = build_spaces_storage(mesh, storage);
  const MaterialFields mats = mcase.materials(mesh);
  const SourceSet src = mcase.sources();
  const InterfaceCorrections corr = mcase.corrections();
  const CoupledSystem sys = assemble_system(mesh, sp, mats, 0.0, src, &corr);
  std::vector<GlobalBC> bcs;
  const std::vector<int> outer = {marker::kWallLeft, marker::kWallRight,
                                  marker::kWallTop, marker::kWallBottom};
  bcs.push_back({kUf, dirichlet_bcs(*sp.uf, outer,
                                    [mcase](Vec2 x, double t) { return mcase.uf(x, t); })});
  bcs.push_back({kUr, dirichlet_bcs(*sp.ur, outer,
                                    [mcase](Vec2 x, double t) { return mcase.ur(x, t); })});
  bcs.push_back({kYs, dirichlet_bcs(*sp.ys, outer,
                                    [mcase](Vec2 x, double t) { return mcase.ys(x, t); })});
  for (auto _ : state) {
    TimeStepper stepper(sys, bcs, 0.05, [&](double t) {
      return assemble_load(sp, mats, src, &corr, t);
    });
    TransientState st;
    st.X = mcase.exact_state(sp, 0.0);
    st = stepper.step(st);
    benchmark::DoNotOptimize(st.X.norm());
  }
  state.counters["dofs"] = static_cast<double>(sp.total_dim());
}
BENCHMARK(BM_FactorizeAndStep)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_BackwardEulerStep(benchmark::State& state) {
  const Mesh2D mesh = verification_mesh(static_cast<int>(state.range(0)));
  const ManufacturedCase mcase = ManufacturedCase::standard();
  std::vector<FunctionSpace> storage;
  const Spaces sp = build_spaces_storage(mesh, storage);
  const MaterialFields mats = mcase.materials(mesh);
  const SourceSet src = mcase.sources();
  const InterfaceCorrections corr = mcase.corrections();
  const CoupledSystem sys = assemble_system(mesh, sp, mats, 0.0, src, &corr);
  std::vector<GlobalBC> bcs;
  const std::vector<int> outer = {marker::kWallLeft, marker::kWallRight,
                                  marker::kWallTop, marker::kWallBottom};
  bcs.push_back({kUf, dirichlet_bcs(*sp.uf, outer,
                                    [mcase](Vec2 x, double t) { return mcase.uf(x, t); })});
  TimeStepper stepper(sys, bcs, 0.05, [&](double t) {
    return assemble_load(sp, mats, src, &corr, t);
  });
  TransientState st;
  st.X = mcase.exact_state(sp, 0.0);
  for (auto _ : state) {
    st = stepper.step(st);
    benchmark::DoNotOptimize(st.X.norm());
  }
  state.counters["dofs"] = static_cast<double>(sp.total_dim());
}
BENCHMARK(BM_BackwardEulerStep)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
