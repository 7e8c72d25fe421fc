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

#ifndef EOC_TESTS_FIXTURES_HPP_
#define EOC_TESTS_FIXTURES_HPP_

#include <cmath>

#include "eoc/problem.hpp"

namespace eoc::testing {

// Independent closed forms used as oracles.

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

inline double normal_pdf(double z) {
  return 0.3989422804014326779 * std::exp(-0.5 * z * z);
}

// P(lo < a < hi) for a ~ N(mean, sd^2).
inline double gauss_interval_prob(double mean, double sd, double lo, double hi) {
  return normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
}

// Gaussian density value at x for N(mean, sd^2).
inline double gauss_density(double mean, double sd, double x) {
  return normal_pdf((x - mean) / sd) / sd;
}

// Stationary problem: f = 0, phi the unit slab indicator, rho0 standard
// normal. Every quantity has a closed form.
inline Problem slab_static() {
  Problem p;
  p.name = "slab_static";
  p.n = 1;
  p.m = 0;
  p.f.components.push_back(FieldExpr::parse("0", 1, 0));
  p.f.divergence = FieldExpr::parse("0", 1, 0);
  p.phi.expr = FieldExpr::parse("step(0.5 - abs(x1))", 1, 0);
  p.phi.majorant = FieldExpr::parse("step(0.5 - abs(x1))", 1, 0);
  GaussianSpec g{{0.0}, {1.0}};
  p.rho0.gaussian = g;
  p.rho0.expr = FieldExpr::parse("exp(-0.5*x1^2)", 1, 0);
  p.horizon = 1.0;
  p.domain = {{-8.0}, {8.0}};
  p.grid = {256};
  p.time_steps = 64;
  finalize_problem(p);
  return p;
}

// Linear-quadratic smooth instance: f = u1, phi = x1^2 truncated.
inline Problem lq1d() {
  Problem p;
  p.name = "lq1d";
  p.n = 1;
  p.m = 1;
  p.f.components.push_back(FieldExpr::parse("u1", 1, 1));
  p.f.divergence = FieldExpr::parse("0", 1, 1);
  p.phi.expr = FieldExpr::parse("x1^2*step(5 - abs(x1))", 1, 1);
  p.phi.majorant = FieldExpr::parse("x1^2*step(5 - abs(x1))", 1, 1);
  GaussianSpec g{{0.5}, {0.5}};
  p.rho0.gaussian = g;
  p.rho0.expr = FieldExpr::parse("exp(-2*(x1 - 0.5)^2)", 1, 0);
  p.delta.kind = ControlSet::Kind::kBox;
  p.delta.lo = {-1.0};
  p.delta.hi = {1.0};
  p.horizon = 1.0;
  p.domain = {{-5.0}, {5.0}};
  p.grid = {128};
  p.time_steps = 32;
  finalize_problem(p);
  return p;
}

// Catalog bang1d with the Gaussian recentred on the slab: the first-order
// condition degenerates by symmetry, which some tie-break tests rely on.
inline Problem bang1d_symmetric() {
  Problem p = catalog_problem("bang1d");
  GaussianSpec g{{0.0}, {0.5}};
  p.rho0.gaussian = g;
  p.rho0.expr = FieldExpr::parse("exp(-2*x1^2)", 1, 0);
  finalize_problem(p);
  return p;
}

// linear1d with a standard-normal initial density (pushforward closed form).
inline Problem linear1d_stdnormal() {
  Problem p = catalog_problem("linear1d");
  GaussianSpec g{{0.0}, {1.0}};
  p.rho0.gaussian = g;
  p.rho0.expr = FieldExpr::parse("exp(-0.5*x1^2)", 1, 0);
  finalize_problem(p);
  return p;
}

}  // namespace eoc::testing

#endif  // EOC_TESTS_FIXTURES_HPP_
