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

#ifndef EOC_TRANSPORT_HPP_
#define EOC_TRANSPORT_HPP_

#include <ostream>
#include <span>
#include <vector>

#include "eoc/flow.hpp"
#include "eoc/grid.hpp"
#include "eoc/problem.hpp"

namespace eoc {

// Backward value solution v(x, t): v(., T) = 0 identically and v(x, t_j) is
// the cost integral along the characteristic from (x, t_j) to T.
struct ValueField {
  SpatialGrid grid;
  TimeMesh mesh;
  int start_index = 0;
  std::vector<double> values;  // (steps+1) * nodes, time-major

  std::span<const double> slice(int j) const {
    return {values.data() + static_cast<std::size_t>(j) * grid.node_count(),
            grid.node_count()};
  }
  double at(int j, std::size_t k) const { return slice(j)[k]; }
};

// Forward density p(x, t) from start time s on, with per-time mass and
// outflow bookkeeping. Slices before start_index are zero.
struct DensityGrid {
  SpatialGrid grid;
  TimeMesh mesh;
  int start_index = 0;
  std::vector<double> values;
  std::vector<double> mass_per_time;      // trapezoid mass of each slice
  std::vector<long> outflow_per_time;     // nodes zeroed: backward char left D
  long negative_nodes = 0;                // nodes below -1e-9 (expected 0)

  std::span<const double> slice(int j) const {
    return {values.data() + static_cast<std::size_t>(j) * grid.node_count(),
            grid.node_count()};
  }
  // Multilinear interpolation within slice j; zero outside D.
  double value_at(int j, const double* x) const {
    return grid.interpolate(slice(j), x);
  }
};

// Density input for apply_Lstar: the problem's initial density expression
// (evaluated exactly) or a grid slice (interpolated multilinearly).
struct DensitySource {
  const InitialDensitySpec* spec = nullptr;
  const SpatialGrid* slice_grid = nullptr;
  std::span<const double> slice;

  static DensitySource from_spec(const InitialDensitySpec& s) {
    DensitySource d;
    d.spec = &s;
    return d;
  }
  static DensitySource from_slice(const SpatialGrid& g, std::span<const double> v) {
    DensitySource d;
    d.slice_grid = &g;
    d.slice = v;
    return d;
  }
  // Value at x; zero outside D (outflow is counted by the caller).
  double operator()(const double* x) const {
    if (spec) return spec->density(x);
    return slice_grid->interpolate(slice, x);
  }
};

// Backward value operator: method of characteristics to grid-aligned nodes,
// exact transport (no grid diffusion). Escape errors carry the node identity.
ValueField apply_L(const Problem& p, const ControlView& u, double s,
                   int substeps = 1, Exec exec = Exec::par);

// Single time slice v(., s) — the ensemble-cost fast path.
std::vector<double> value_slice(const Problem& p, const ControlView& u,
                                double s, int substeps = 1,
                                Exec exec = Exec::par);

// Forward density operator: for each node and mesh time trace the backward
// characteristic to s and push rho_s forward with the Liouville factor
// exp(-int div f). Characteristics leaving D zero the node and bump the
// outflow counter.
DensityGrid apply_Lstar(const Problem& p, const ControlView& u,
                        const DensitySource& rho_s, double s, int substeps = 1,
                        Exec exec = Exec::par);

inline double inner_product_H0(const SpatialGrid& g, std::span<const double> a,
                               std::span<const double> b) {
  return g.inner_product(a, b);
}
inline double l2_norm(const SpatialGrid& g, std::span<const double> a) {
  return g.l2_norm(a);
}
// Trapezoid mass of slice j.
double mass(const DensityGrid& rho, int j);

// Evaluate the normalized initial density on the grid nodes.
std::vector<double> rho0_on_grid(const Problem& p, const SpatialGrid& g);

// CSV export: header "t,x1..xn,value", rows time-major then lexicographic
// node order.
void write_field_csv(std::ostream& os, const SpatialGrid& g, const TimeMesh& mesh,
                     const std::vector<double>& values, int start_index = 0);

}  // namespace eoc

#endif  // EOC_TRANSPORT_HPP_
