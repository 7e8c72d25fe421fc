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

#ifndef EOC_OPTIMALITY_HPP_
#define EOC_OPTIMALITY_HPP_

#include <ostream>
#include <vector>

#include "eoc/analysis.hpp"
#include "eoc/transport.hpp"

namespace eoc {

// H(t, u) is the common integrand value of the maximum condition at control
// value u:
//
//   H(t, u) = int_D { v * sum_i d/dx_i [rho * f_i(x, u, t)] - phi(x, u, t) rho } dx
//
// evaluated in the integrated-by-parts form
//
//   H(t, u) = -int_D rho (f(x, u, t) . grad v) dx - int_D phi(x, u, t) rho dx,
//
// with grad v by central differences (one-sided at the boundary) and the
// boundary terms dropped (rho vanishes near dD by domain choice). The
// optimal control maximizes H pointwise in t; eta(t, u) = H(t, u_hat(t)) -
// H(t, u) is the needle-variation derivative of the ensemble cost, so a
// negative eta flags a violation.
struct HamiltonianSample {
  double t = 0.0;
  Vec u;
  double H = 0.0;
};

struct OptimalityReport {
  double tol = 0.0;
  int delta_grid = 0;
  std::vector<double> times;
  std::vector<double> H_incumbent;  // H(t, u_hat(t))
  std::vector<double> H_best;       // max over the Delta lattice
  std::vector<double> eta_min;      // H_incumbent - H_best (<= 0)
  double worst = 0.0;               // global min of eta_min
  double worst_time = 0.0;
  Vec worst_u;                      // maximizer at the worst time
  double violation_fraction = 0.0;  // mesh times with eta_min < -tol
  bool satisfied = false;
};

struct NeedleCheck {
  double t_bar = 0.0;
  Vec u_bar;
  std::vector<double> eps;        // strictly decreasing
  std::vector<double> quotients;  // (Phi[u_eps] - Phi[u_hat]) / eps
  double eta = 0.0;               // predicted limit
};

// Precomputes grad v, the incumbent field/cost slices, and the
// quadrature-weighted density, then evaluates H and eta per (time, control).
class HamiltonianEvaluator {
 public:
  HamiltonianEvaluator(const Problem& p, const ControlView& u,
                       const ValueField& v, const DensityGrid& rho);

  double H(int time_index, const double* ubar) const;
  double H_incumbent(int time_index) const;
  // eta as a single fused difference sum: exactly zero when ubar equals the
  // incumbent atom.
  double eta(int time_index, const double* ubar) const;

  const SpatialGrid& grid() const { return *grid_; }
  const TimeMesh& mesh() const { return mesh_; }

 private:
  const Problem* p_;
  const ControlView* u_;
  const SpatialGrid* grid_;
  const DensityGrid* rho_;
  TimeMesh mesh_;
  std::vector<double> grad_v_;   // points * nodes * n
  std::vector<double> wrho_;     // points * nodes: quadrature weight * rho
  std::vector<double> f_inc_;    // points * nodes * n: f(x, u_hat(t), t)
  std::vector<double> phi_inc_;  // points * nodes
};

// Central differences per axis (one-sided at the domain boundary); exact on
// affine data.
void gradient_slice(const SpatialGrid& g, std::span<const double> v, int axis,
                    std::vector<double>& out);

double hamiltonian_density(const Problem& p, const ValueField& v,
                           const DensityGrid& rho, double t, const Vec& ubar);

// Raw divergence form of the integrand: the x-derivative applied to the
// nodal product rho * f_i by central differences, paired with v. Equal to
// hamiltonian_density in the continuum; kept as a smooth-instance
// cross-check of the integrated-by-parts route.
double hamiltonian_density_raw(const Problem& p, const ValueField& v,
                               const DensityGrid& rho, double t,
                               const Vec& ubar);

// eta(t, ubar) = H(t, uhat_t) - H(t, ubar) as one fused difference sum:
// exactly zero when ubar equals uhat_t. The ControlView overload reads the
// incumbent (possibly a measure) off the control at time t.
double eta(const Problem& p, const ValueField& v, const DensityGrid& rho,
           double t, const Vec& ubar, const Vec& uhat_t);
double eta(const Problem& p, const ControlView& u, const ValueField& v,
           const DensityGrid& rho, double t, const Vec& ubar);

// Computes rho_hat and v_hat once, then scans a Delta lattice (box: uniform
// grid with delta_grid points per axis; finite: all elements) joined with
// the incumbent at every mesh time.
OptimalityReport check_maximum_condition(const Problem& p, const ControlView& u,
                                         double tol, int delta_grid = 21,
                                         int substeps = 1, Exec exec = Exec::par);

// Needle variation u_eps = u_hat overwritten by u_bar on [t_bar, t_bar+eps];
// finite-difference quotients of the ensemble cost against eta. t_bar and
// every eps must align with the integration mesh.
NeedleCheck needle_derivative_fd(const Problem& p, const ControlSignal& u_hat,
                                 double t_bar, const Vec& u_bar,
                                 const std::vector<double>& eps,
                                 int substeps = 1, Exec exec = Exec::par);

// psi = -grad v, the Pontryagin costate surrogate.
struct CostateField {
  SpatialGrid grid;
  TimeMesh mesh;
  int dim = 0;
  std::vector<double> components;  // layout: (time * nodes + node) * dim + axis

  double value(int time_index, std::size_t node, int axis) const {
    return components[(static_cast<std::size_t>(time_index) * grid.node_count() +
                       node) * dim + axis];
  }
  // Interpolated psi(x, t_j) into out[dim].
  void at(int time_index, const double* x, double* out) const;
};

CostateField adjoint_costate_field(const ValueField& v);

// Full (t, u1..um, H) table for heat-map plotting.
void write_h_table_csv(std::ostream& os, const Problem& p, const ControlView& u,
                       const ValueField& v, const DensityGrid& rho,
                       int delta_grid = 21);

}  // namespace eoc

#endif  // EOC_OPTIMALITY_HPP_
