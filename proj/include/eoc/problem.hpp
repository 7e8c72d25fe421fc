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

#ifndef EOC_PROBLEM_HPP_
#define EOC_PROBLEM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eoc/expr.hpp"
#include "eoc/grid.hpp"

namespace eoc {

// Admissible control values: an axis-aligned box in R^m or a finite list.
// m = 0 (uncontrolled problem) is represented as a box with no axes, whose
// only point is the empty tuple.
struct ControlSet {
  enum class Kind { kBox, kFinite };
  Kind kind = Kind::kBox;
  Vec lo, hi;               // kBox
  std::vector<Vec> points;  // kFinite, nonempty and duplicate-free

  int dim() const;
  bool contains(const Vec& u, double tol = 1e-9) const;
  // Midpoint of the box, or the first listed point.
  Vec default_point() const;
  // Scan lattice: uniform per-axis grid for a box (lexicographic order), or
  // the listed points. per_axis == 1 degenerates to the midpoint.
  std::vector<Vec> lattice(int per_axis) const;
};

struct VectorFieldSpec {
  std::vector<FieldExpr> components;
  std::optional<FieldExpr> divergence;            // analytic sum of d f_i / d x_i
  std::vector<std::vector<FieldExpr>> jacobian;   // optional, n x n

  bool uses_state() const;
  bool uses_time() const;
};

struct CostFieldSpec {
  FieldExpr expr;
  std::optional<FieldExpr> majorant;  // phi*(x, t) with |phi| <= phi* on Delta
};

struct GaussianSpec {
  Vec mean, sd;  // independent per-axis normals
};

// Initial density. `normalization` is fixed at problem build time so that
// the trapezoid integral over the problem grid equals one.
struct InitialDensitySpec {
  FieldExpr expr;
  std::optional<GaussianSpec> gaussian;  // set when the density is exactly sampleable
  double normalization = 1.0;

  double density(const double* x) const {
    return normalization * expr.eval(x, nullptr, 0.0);
  }
};

struct Problem {
  std::string name = "custom";
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  VectorFieldSpec f;
  CostFieldSpec phi;
  InitialDensitySpec rho0;
  ControlSet delta;
  double horizon = 1.0;
  Box domain;
  std::vector<int> grid;  // nodes per axis
  int time_steps = 0;

  TimeMesh mesh() const { return TimeMesh{horizon, time_steps}; }
  double dt() const { return horizon / time_steps; }
  // Default step for finite-difference divergence.
  double h_div() const { return 1e-4 * domain.diameter(); }
  SpatialGrid make_grid() const { return SpatialGrid(domain, grid); }
};

// Piecewise-constant control: one value per mesh interval.
struct ControlSignal {
  std::vector<Vec> values;

  static ControlSignal constant(const Problem& p, Vec value);
};

// Piecewise-constant relaxed control: one atomic probability measure on
// Delta per mesh interval.
struct RelaxedControl {
  struct Interval {
    std::vector<Vec> atoms;
    Vec weights;  // nonnegative, sum to 1 within 1e-12
  };
  std::vector<Interval> intervals;

  static RelaxedControl from_ordinary(const ControlSignal& u);
};

// Throw ConfigError when a control violates its invariants for problem p.
void validate_control(const Problem& p, const ControlSignal& u);
void validate_control(const Problem& p, const RelaxedControl& u);

ControlSignal default_control(const Problem& p);

// --- problem_model operations ---------------------------------------------

// parse_field_expression is FieldExpr::parse (expr.hpp).

Vec eval_vector_field(const Problem& p, const double* x, const double* u, double t);
// In-place variant used by the integrators; throws EvalError (naming the
// component) on a non-finite result.
void eval_vector_field_into(const Problem& p, const double* x, const double* u,
                            double t, double* out);

// Analytic divergence when supplied, otherwise central differences with step
// h_div (<= 0 selects the problem default).
double eval_divergence(const Problem& p, const double* x, const double* u,
                       double t, double h_div = 0.0);

// Mixture field of an atomic measure: sum_k w_k f(x, u_k, t).
void relax_vector_field_into(const Problem& p, const double* x,
                             const std::vector<Vec>& atoms, const Vec& weights,
                             double t, double* out);
Vec relax_vector_field(const Problem& p, const double* x,
                       const std::vector<Vec>& atoms, const Vec& weights,
                       double t);

struct ValidationReport {
  int samples = 0;
  std::uint64_t seed = 0;
  double lipschitz_x = 0.0;   // sampled estimate, not a certificate
  double lipschitz_u = 0.0;
  double sup_f = 0.0;
  std::optional<double> divergence_discrepancy;  // analytic vs central FD
  double k0_estimate = 0.0;   // max over sampled constant controls of int ||phi|| dt
  std::vector<std::string> warnings;
};

// Report-only: samples condition estimates, flags suspicious inputs, never
// mutates or rejects the problem.
ValidationReport validate_problem(const Problem& p, int samples, std::uint64_t seed);

// --- catalog and config ----------------------------------------------------

std::vector<std::string> catalog_names();
Problem catalog_problem(const std::string& name);

struct LoadedConfig {
  Problem problem;
  std::optional<ControlSignal> control;
  std::optional<RelaxedControl> relaxed;
};

// `source` is a catalog name or a path to a JSON config file.
LoadedConfig load_problem_source(const std::string& source);
LoadedConfig load_problem_json_text(const std::string& text);

// Validates invariants and computes the rho0 normalization. Must be called
// after assembling a Problem by hand; catalog/config loaders do it already.
void finalize_problem(Problem& p);

}  // namespace eoc

#endif  // EOC_PROBLEM_HPP_
