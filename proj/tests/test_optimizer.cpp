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

#include <doctest.h>

#include <cmath>

#include "eoc/errors.hpp"
#include "eoc/optimizer.hpp"
#include "fixtures.hpp"

using namespace eoc;
using namespace eoc::testing;

namespace {

bool weights_valid(const RelaxedControl& u) {
  for (const auto& iv : u.intervals) {
    double s = 0.0;
    for (double w : iv.weights) {
      if (w < 0.0 || w > 1.0) return false;
      s += w;
    }
    if (std::fabs(s - 1.0) > 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("improve_once keeps a control satisfying the condition") {
  Problem p = catalog_problem("bang1d");
  RelaxedControl star =
      RelaxedControl::from_ordinary(ControlSignal::constant(p, {1.0}));
  OptimizerOptions opts;
  RelaxedControl out = improve_once(p, star, 1.0, opts);
  REQUIRE(out.intervals.size() == star.intervals.size());
  for (int k = 0; k < p.time_steps; ++k) {
    CHECK(out.intervals[k].atoms == star.intervals[k].atoms);
    CHECK(out.intervals[k].weights == star.intervals[k].weights);
  }
}

TEST_CASE("improve_once replaces a suboptimal control at full blend") {
  Problem p = catalog_problem("bang1d");
  RelaxedControl u0 =
      RelaxedControl::from_ordinary(ControlSignal::constant(p, {0.0}));
  OptimizerOptions opts;
  RelaxedControl u1 = improve_once(p, u0, 1.0, opts);
  // The mass sits right of the slab centre, so pushing right wins everywhere.
  for (const auto& iv : u1.intervals) {
    REQUIRE(iv.atoms.size() == 1);
    CHECK(iv.atoms[0][0] == doctest::Approx(1.0));
    CHECK(iv.weights[0] == 1.0);
  }
}

TEST_CASE("improve_once blends measures at beta = 1/2") {
  // Mirror instance: mass left of the slab centre, so the maximizer is -1.
  Problem p = catalog_problem("bang1d");
  GaussianSpec g{{-0.3}, {0.5}};
  p.rho0.gaussian = g;
  p.rho0.expr = FieldExpr::parse("exp(-2*(x1 + 0.3)^2)", 1, 0);
  finalize_problem(p);

  RelaxedControl u0 =
      RelaxedControl::from_ordinary(ControlSignal::constant(p, {0.0}));
  OptimizerOptions opts;
  RelaxedControl u1 = improve_once(p, u0, 0.5, opts);
  const auto& iv = u1.intervals[0];
  REQUIRE(iv.atoms.size() == 2);
  CHECK(iv.atoms[0][0] == 0.0);
  CHECK(iv.weights[0] == doctest::Approx(0.5));
  CHECK(iv.atoms[1][0] == -1.0);
  CHECK(iv.weights[1] == doctest::Approx(0.5));
  CHECK(weights_valid(u1));
}

TEST_CASE("improve_once output weights are a probability vector") {
  Problem p = catalog_problem("bang1d");
  RelaxedControl u;
  u.intervals.assign(static_cast<std::size_t>(p.time_steps),
                     {{{-0.5}, {0.5}}, {0.3, 0.7}});
  OptimizerOptions opts;
  RelaxedControl out = improve_once(p, u, 0.3, opts);
  CHECK(weights_valid(out));
}

TEST_CASE("solve on an uncontrolled problem converges immediately") {
  Problem p = catalog_problem("linear1d");
  OptimizerOptions opts;
  OptimizationTrace trace = solve(p, default_control(p), opts);
  CHECK(trace.converged);
  CHECK(trace.final_report.satisfied);
  CHECK(trace.final_cost ==
        doctest::Approx(ensemble_cost(p, ControlView::uncontrolled(p)))
            .epsilon(1e-12));
}

TEST_CASE("solve on a single-point control set converges immediately") {
  Problem p = catalog_problem("bang1d");
  p.delta.kind = ControlSet::Kind::kFinite;
  p.delta.lo.clear();
  p.delta.hi.clear();
  p.delta.points = {{0.25}};
  finalize_problem(p);
  OptimizerOptions opts;
  OptimizationTrace trace = solve(p, default_control(p), opts);
  CHECK(trace.converged);
  CHECK(trace.iterations.size() == 1);
  CHECK(trace.final_report.satisfied);
}

TEST_CASE("solve drives bang1d from rest to the bang control") {
  Problem p = catalog_problem("bang1d");
  OptimizerOptions opts;
  opts.max_iters = 15;
  OptimizationTrace trace = solve(p, default_control(p), opts);
  CHECK(trace.converged);

  // Monotone acceptance.
  double prev = 1e300;
  for (const auto& it : trace.iterations) {
    if (it.accepted) CHECK(it.cost <= prev + 1e-12);
    prev = it.cost;
  }
  // The accepted control is the full right drift.
  for (const auto& iv : trace.final_control.intervals) {
    REQUIRE(iv.atoms.size() == 1);
    CHECK(iv.atoms[0][0] == doctest::Approx(1.0));
  }
  CHECK(trace.final_report.satisfied);
  double direct = ensemble_cost(
      p, ControlView(p, trace.final_control), opts.substeps);
  CHECK(trace.final_cost == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("solve on the smooth linear-quadratic instance") {
  Problem p = lq1d();
  OptimizerOptions opts;
  opts.max_iters = 25;
  opts.tol_violation = 1e-3;
  OptimizationTrace trace = solve(p, default_control(p), opts);

  // Strictly decreasing cost while improvements are accepted.
  for (std::size_t i = 1; i < trace.iterations.size(); ++i)
    if (trace.iterations[i].accepted &&
        trace.iterations[i].worst_violation < -opts.tol_violation)
      CHECK(trace.iterations[i].cost < trace.iterations[i - 1].cost + 1e-12);

  // Grid-search oracle over constant controls: the optimizer's time-varying
  // schedule must do at least as well (up to tolerance).
  double best_const = 1e300;
  for (const Vec& c : p.delta.lattice(21)) {
    ControlSignal u = ControlSignal::constant(p, c);
    best_const = std::min(best_const, ensemble_cost(p, ControlView(p, u)));
  }
  CHECK(trace.final_cost <= best_const + 2e-2);
}

TEST_CASE("projection to ordinary controls") {
  Problem p = catalog_problem("bang1d");

  SUBCASE("barycenter arithmetic") {
    RelaxedControl u;
    u.intervals.assign(static_cast<std::size_t>(p.time_steps),
                       {{{-1.0}, {1.0}}, {0.5, 0.5}});
    ControlSignal proj = project_relaxed_to_ordinary(p, u);
    for (const auto& v : proj.values) CHECK(v[0] == 0.0);
  }
  SUBCASE("single atom projects to itself") {
    RelaxedControl u =
        RelaxedControl::from_ordinary(ControlSignal::constant(p, {0.37}));
    ControlSignal proj = project_relaxed_to_ordinary(p, u);
    for (const auto& v : proj.values) CHECK(v[0] == 0.37);
  }
  SUBCASE("cost is preserved for control-affine dynamics") {
    RelaxedControl u;
    u.intervals.assign(static_cast<std::size_t>(p.time_steps),
                       {{{-1.0}, {0.25}}, {0.4, 0.6}});
    ControlSignal proj = project_relaxed_to_ordinary(p, u);
    double phi_rel = ensemble_cost(p, ControlView(p, u));
    double phi_ord = ensemble_cost(p, ControlView(p, proj));
    CHECK(std::fabs(phi_rel - phi_ord) <= 1e-3);
  }
  SUBCASE("non-affine dynamics are refused") {
    Problem q = catalog_problem("bang1d");
    q.f.components[0] = FieldExpr::parse("u1^2", 1, 1);
    q.f.divergence = FieldExpr::parse("0", 1, 1);
    finalize_problem(q);
    RelaxedControl u =
        RelaxedControl::from_ordinary(ControlSignal::constant(q, {0.5}));
    CHECK_THROWS_AS(project_relaxed_to_ordinary(q, u), ConfigError);
  }
  SUBCASE("finite control sets are refused") {
    Problem q = catalog_problem("bang1d");
    q.delta.kind = ControlSet::Kind::kFinite;
    q.delta.lo.clear();
    q.delta.hi.clear();
    q.delta.points = {{-1.0}, {1.0}};
    finalize_problem(q);
    RelaxedControl u =
        RelaxedControl::from_ordinary(ControlSignal::constant(q, {1.0}));
    CHECK_THROWS_AS(project_relaxed_to_ordinary(q, u), ConfigError);
  }
}

TEST_CASE("ordinary mode keeps single atoms and reports an ordinary control") {
  Problem p = catalog_problem("bang1d");
  OptimizerOptions opts;
  opts.mode = OptimizerOptions::Mode::kOrdinary;
  OptimizationTrace trace = solve(p, default_control(p), opts);
  REQUIRE(trace.final_ordinary.has_value());
  for (const auto& iv : trace.final_control.intervals)
    CHECK(iv.atoms.size() == 1);
  CHECK(trace.converged);
}
