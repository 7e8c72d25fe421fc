// Copyright 2026 The ensemble-oc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The OpenMP kernels must reproduce the serial reference bit for bit: work
// items write disjoint slots and reductions run in a fixed block order.

#include <doctest.h>

#include "eoc/analysis.hpp"
#include "eoc/errors.hpp"
#include "eoc/optimality.hpp"
#include "fixtures.hpp"

using namespace eoc;
using namespace eoc::testing;

namespace {

Problem small_rotation() {
  Problem p = catalog_problem("rotation2d");
  p.grid = {24, 24};
  p.time_steps = 16;
  finalize_problem(p);
  return p;
}

void check_identical(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

}  // namespace

TEST_CASE("transport kernels: serial reference equals the OpenMP path") {
  for (int variant = 0; variant < 2; ++variant) {
    Problem p = variant == 0 ? catalog_problem("bang1d") : small_rotation();
    if (variant == 0) {
      p.grid = {64};
      p.time_steps = 16;
      finalize_problem(p);
    }
    ControlSignal sig = p.m > 0 ? default_control(p) : ControlSignal{};
    ControlView u = p.m > 0 ? ControlView(p, sig) : ControlView::uncontrolled(p);

    ValueField vs = apply_L(p, u, 0.0, 2, Exec::seq);
    ValueField vp = apply_L(p, u, 0.0, 2, Exec::par);
    check_identical(vs.values, vp.values);

    DensityGrid rs =
        apply_Lstar(p, u, DensitySource::from_spec(p.rho0), 0.0, 2, Exec::seq);
    DensityGrid rp =
        apply_Lstar(p, u, DensitySource::from_spec(p.rho0), 0.0, 2, Exec::par);
    check_identical(rs.values, rp.values);
    check_identical(rs.mass_per_time, rp.mass_per_time);

    std::vector<double> ss = value_slice(p, u, 0.0, 2, Exec::seq);
    std::vector<double> sp = value_slice(p, u, 0.0, 2, Exec::par);
    check_identical(ss, sp);
  }
}

TEST_CASE("monte carlo kernels: block substreams are schedule-independent") {
  Problem p = catalog_problem("bang1d");
  ControlSignal sig = default_control(p);
  ControlView u(p, sig);

  McCostReport ms = monte_carlo_cost(p, u, 30000, 9, 1, Exec::seq);
  McCostReport mp = monte_carlo_cost(p, u, 30000, 9, 1, Exec::par);
  CHECK(ms.estimate == mp.estimate);
  CHECK(ms.std_error == mp.std_error);

  DensityCheckReport ds =
      monte_carlo_density_check(p, u, 20000, 9, {0.5, 1.0}, 1, Exec::seq);
  DensityCheckReport dp =
      monte_carlo_density_check(p, u, 20000, 9, {0.5, 1.0}, 1, Exec::par);
  check_identical(ds.tv, dp.tv);
}

TEST_CASE("optimality scan: serial reference equals the OpenMP path") {
  Problem p = catalog_problem("bang1d");
  p.grid = {64};
  p.time_steps = 16;
  finalize_problem(p);
  ControlSignal sig = ControlSignal::constant(p, {0.0});
  ControlView u(p, sig);

  OptimalityReport cs = check_maximum_condition(p, u, 1e-2, 21, 1, Exec::seq);
  OptimalityReport cp = check_maximum_condition(p, u, 1e-2, 21, 1, Exec::par);
  check_identical(cs.eta_min, cp.eta_min);
  check_identical(cs.H_incumbent, cp.H_incumbent);
  CHECK(cs.worst == cp.worst);
}

TEST_CASE("thread cap setting round-trips") {
  int before = parallel::max_threads();
  parallel::set_max_threads(1);
  CHECK(parallel::max_threads() == 1);
  parallel::set_max_threads(0);
  CHECK(parallel::max_threads() == before);
}

TEST_CASE("parallel loop reports the lowest-index error deterministically") {
  for (Exec exec : {Exec::seq, Exec::par}) {
    try {
      parallel::for_each_index(exec, 64, [](std::ptrdiff_t i) {
        if (i >= 17) throw Error("boom at " + std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(std::string(e.what()) == "boom at 17");
    }
  }
}
