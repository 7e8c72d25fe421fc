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
#include <sstream>

#include "eoc/analysis.hpp"
#include "eoc/errors.hpp"
#include "fixtures.hpp"

using namespace eoc;
using namespace eoc::testing;

TEST_CASE("delta_f on the catalog") {
  Problem lin = catalog_problem("linear1d");
  ControlView ul = ControlView::uncontrolled(lin);
  for (double t : {0.0, 0.25, 1.0})
    CHECK(delta_f(lin, ul, t) == doctest::Approx(0.5));

  Problem rot = catalog_problem("rotation2d");
  CHECK(delta_f(rot, ControlView::uncontrolled(rot), 0.5) == 0.0);

  Problem bang = catalog_problem("bang1d");
  ControlSignal u0 = default_control(bang);
  CHECK(delta_f(bang, ControlView(bang, u0), 0.5) == 0.0);
}

TEST_CASE("delta_f grid-max is monotone under grid refinement") {
  Problem p = catalog_problem("linear1d");
  p.f.components[0] = FieldExpr::parse("sin(x1)", 1, 0);
  p.f.divergence = FieldExpr::parse("cos(x1)", 1, 0);
  p.grid = {65};
  finalize_problem(p);
  double coarse = delta_f(p, ControlView::uncontrolled(p), 0.0);
  p.grid = {129};  // node superset of the 65-point grid
  finalize_problem(p);
  double fine = delta_f(p, ControlView::uncontrolled(p), 0.0);
  CHECK(fine >= coarse);
}

TEST_CASE("estimate constant") {
  Problem lin = catalog_problem("linear1d");
  ControlView u = ControlView::uncontrolled(lin);
  CHECK(estimate_constant(lin, u, 0.0) ==
        doctest::Approx(std::exp(0.5)).epsilon(1e-12));
  CHECK(estimate_constant(lin, u, 1.0) == 1.0);

  Problem rot = catalog_problem("rotation2d");
  CHECK(estimate_constant(rot, ControlView::uncontrolled(rot), 0.0) == 1.0);
}

TEST_CASE("estimate inequality reports") {
  SUBCASE("zero cost: both sides vanish") {
    Problem p = slab_static();
    p.phi.expr = FieldExpr::parse("0", 1, 0);
    EstimateReport rep = verify_estimate(p, ControlView::uncontrolled(p), 0.0);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.satisfied);
  }
  SUBCASE("linear1d with truncated linear cost") {
    Problem p = catalog_problem("linear1d");
    EstimateReport rep = verify_estimate(p, ControlView::uncontrolled(p), 0.0);
    CHECK(rep.satisfied);
    CHECK(rep.margin > 0.0);
    CHECK(rep.constant == doctest::Approx(std::exp(0.5)).epsilon(1e-10));
  }
  SUBCASE("bang1d under full drift") {
    Problem p = catalog_problem("bang1d");
    ControlSignal u = ControlSignal::constant(p, {1.0});
    EstimateReport rep = verify_estimate(p, ControlView(p, u), 0.0);
    CHECK(rep.satisfied);
    CHECK(rep.constant == 1.0);  // divergence-free
  }
}

TEST_CASE("duality identity") {
  SUBCASE("zero cost") {
    Problem p = slab_static();
    p.phi.expr = FieldExpr::parse("0", 1, 0);
    DualityReport rep = verify_duality(p, ControlView::uncontrolled(p), 0.0);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.rhs == 0.0);
  }
  SUBCASE("linear flow, linear cost: both sides are 1 - 1/e") {
    Problem p = catalog_problem("linear1d");
    DualityReport rep = verify_duality(p, ControlView::uncontrolled(p), 0.0);
    double expect = 1.0 - std::exp(-1.0);
    CHECK(std::fabs(rep.lhs - expect) <= 1e-2 * expect);
    CHECK(std::fabs(rep.rhs - expect) <= 1e-2 * expect);
    CHECK(rep.rel_gap <= 1e-2);
  }
  SUBCASE("static slab: both sides are the gaussian slab probability") {
    Problem p = slab_static();
    DualityReport rep = verify_duality(p, ControlView::uncontrolled(p), 0.0);
    double expect = gauss_interval_prob(0.0, 1.0, -0.5, 0.5);
    CHECK(expect == doctest::Approx(0.3829249225480263).epsilon(1e-12));
    CHECK(std::fabs(rep.lhs - expect) <= 2e-2);
    CHECK(std::fabs(rep.rhs - expect) <= 2e-2);
  }
}

TEST_CASE("monte carlo cost") {
  SUBCASE("zero cost is exactly zero") {
    Problem p = slab_static();
    p.phi.expr = FieldExpr::parse("0", 1, 0);
    McCostReport rep =
        monte_carlo_cost(p, ControlView::uncontrolled(p), 1000, 7);
    CHECK(rep.estimate == 0.0);
    CHECK(rep.std_error == 0.0);
  }
  SUBCASE("static slab occupancy") {
    Problem p = slab_static();
    McCostReport rep =
        monte_carlo_cost(p, ControlView::uncontrolled(p), 100000, 1);
    double expect = gauss_interval_prob(0.0, 1.0, -0.5, 0.5);
    CHECK(std::fabs(rep.estimate - expect) <= 3.0 * rep.std_error);
  }
  SUBCASE("linear flow expectation") {
    Problem p = catalog_problem("linear1d");
    McCostReport rep =
        monte_carlo_cost(p, ControlView::uncontrolled(p), 50000, 3);
    double expect = 1.0 - std::exp(-1.0);
    CHECK(std::fabs(rep.estimate - expect) <= 3.0 * rep.std_error + 1e-4);
  }
  SUBCASE("seeded determinism is bitwise") {
    Problem p = catalog_problem("bang1d");
    ControlSignal u = default_control(p);
    McCostReport a = monte_carlo_cost(p, ControlView(p, u), 20000, 42);
    McCostReport b = monte_carlo_cost(p, ControlView(p, u), 20000, 42);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
    McCostReport c = monte_carlo_cost(p, ControlView(p, u), 20000, 43);
    CHECK(a.estimate != c.estimate);
  }
}

TEST_CASE("rejection sampler for non-gaussian densities") {
  Problem p = slab_static();
  p.rho0.gaussian.reset();  // force the rejection path
  finalize_problem(p);
  McCostReport rep = monte_carlo_cost(p, ControlView::uncontrolled(p), 20000, 5);
  CHECK(rep.acceptance_rate > 0.0);
  CHECK(rep.acceptance_rate < 1.0);
  double expect = gauss_interval_prob(0.0, 1.0, -0.5, 0.5);
  // Truncation to D = [-8, 8] is ~1e-15 mass; 3 SE covers the rest.
  CHECK(std::fabs(rep.estimate - expect) <= 3.0 * rep.std_error);
}

TEST_CASE("ensemble cost against closed forms and the MC route") {
  SUBCASE("linear1d") {
    Problem p = catalog_problem("linear1d");
    double det = ensemble_cost(p, ControlView::uncontrolled(p));
    CHECK(std::fabs(det - (1.0 - std::exp(-1.0))) <= 1e-2);
  }
  SUBCASE("bang1d at the default control (route agreement)") {
    Problem p = catalog_problem("bang1d");
    ControlSignal u = default_control(p);
    ControlView view(p, u);
    double det = ensemble_cost(p, view);
    double expect = gauss_interval_prob(0.3, 0.5, -0.5, 0.5);
    CHECK(std::fabs(det - expect) <= 2e-2);
    McCostReport mc = monte_carlo_cost(p, view, 100000, 11);
    CHECK(std::fabs(det - mc.estimate) <= 3.0 * mc.std_error + 2e-2);
  }
}

TEST_CASE("duality gap shrinks under refinement") {
  double gaps[2];
  int idx = 0;
  for (int scale : {1, 2}) {
    Problem p = catalog_problem("linear1d");
    p.grid = {128 * scale};
    p.time_steps = 64 * scale;
    finalize_problem(p);
    DualityReport rep = verify_duality(p, ControlView::uncontrolled(p), 0.0);
    gaps[idx++] = rep.abs_gap;
  }
  CHECK(gaps[1] <= gaps[0] / 3.0 + 1e-12);
}

TEST_CASE("monte carlo density check") {
  SUBCASE("identity flow: TV is pure binning error") {
    Problem p = slab_static();
    DensityCheckReport rep = monte_carlo_density_check(
        p, ControlView::uncontrolled(p), 100000, 0, {0.5, 1.0});
    REQUIRE(rep.tv.size() == 2);
    CHECK(rep.tv[0] <= 0.02);
    CHECK(rep.tv[1] <= 0.02);
  }
  SUBCASE("linear contraction") {
    Problem p = linear1d_stdnormal();
    DensityCheckReport rep = monte_carlo_density_check(
        p, ControlView::uncontrolled(p), 50000, 0, {1.0});
    CHECK(rep.tv[0] <= 0.04);
  }
  SUBCASE("checkpoints must be on the mesh") {
    Problem p = slab_static();
    CHECK_THROWS_AS(monte_carlo_density_check(p, ControlView::uncontrolled(p),
                                              1000, 0, {0.3333}),
                    MeshError);
  }
}

TEST_CASE("schedule csv emits one row per mesh time") {
  Problem p = catalog_problem("bang1d");
  ControlSignal u = default_control(p);
  std::ostringstream os;
  write_schedule_csv(os, p, ControlView(p, u));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,phi_norm,delta_f");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == p.time_steps + 1);
}
