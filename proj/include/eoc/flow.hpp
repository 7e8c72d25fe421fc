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

#ifndef EOC_FLOW_HPP_
#define EOC_FLOW_HPP_

#include <vector>

#include "eoc/parallel.hpp"
#include "eoc/problem.hpp"

namespace eoc {

// Non-owning view binding a problem to a control (ordinary, relaxed, or none
// for m = 0) and a running-cost field. Everything downstream — integrators,
// transport, analysis — evaluates f, phi and div f through this view so that
// relaxed controls (mixture fields) come for free.
class ControlView {
 public:
  ControlView(const Problem& p, const ControlSignal& u);
  ControlView(const Problem& p, const RelaxedControl& u);
  // Uncontrolled problems only (m == 0).
  static ControlView uncontrolled(const Problem& p);
  // Same control, different running cost.
  ControlView with_cost(const CostFieldSpec& phi) const;

  const Problem& problem() const { return *p_; }
  const CostFieldSpec& cost_spec() const { return *phi_; }
  bool is_relaxed() const { return relaxed_ != nullptr; }
  const RelaxedControl* relaxed() const { return relaxed_; }
  const ControlSignal* ordinary() const { return ordinary_; }

  int interval_of(double t) const { return mesh_.interval_of(t); }

  // f(x, u(t), t); `k` is the control interval.
  void field(int k, const double* x, double t, double* out) const;
  double running_cost(int k, const double* x, double t) const;
  double divergence(int k, const double* x, double t) const;

 private:
  ControlView() = default;
  const Problem* p_ = nullptr;
  const CostFieldSpec* phi_ = nullptr;
  const ControlSignal* ordinary_ = nullptr;
  const RelaxedControl* relaxed_ = nullptr;
  TimeMesh mesh_;
};

struct Trajectory {
  int dim = 0;
  std::vector<double> times;   // ascending, aligned to the integration mesh
  std::vector<double> states;  // times.size() * dim, row-major

  std::size_t size() const { return times.size(); }
  const double* state(std::size_t i) const { return states.data() + i * dim; }
  const double* back() const { return state(size() - 1); }
};

// Classical fixed-step RK4 with steps aligned to control-interval boundaries
// (`substeps` steps per interval, partial intervals included). Throws
// EscapeError when the state leaves the domain box inflated by a factor 2.
Trajectory integrate_trajectory(const Problem& p, const ControlView& u,
                                const Vec& x, double s, double t_end,
                                int substeps);

// Integrates from t down to s (negated step); the returned trajectory is
// normalized to ascending times on [s, t].
Trajectory integrate_backward(const Problem& p, const ControlView& u,
                              const Vec& x, double t, double s, int substeps);

// Trapezoid rule of div f along the trajectory, segment by segment so the
// control jump at interval boundaries is never smeared.
double divergence_integral(const Problem& p, const ControlView& u,
                           const Trajectory& traj);

// int phi(y(t), u(t), t) dt over the trajectory span: composite midpoint rule
// with 4x oversampling, midpoint states by cubic Hermite interpolation.
// Midpoint because phi may be an indicator; endpoint rules bias jump costs.
double value_along_trajectory(const Problem& p, const ControlView& u,
                              const Trajectory& traj);

// Fused integrate-and-accumulate version of the above from (x, s) to T; the
// Monte Carlo and apply_L hot path (no trajectory storage).
double trajectory_cost(const Problem& p, const ControlView& u, const double* x,
                       double s, int substeps);

// Backward characteristic from (x, t) to s with the divergence integral
// accumulated along the same path (ascending-time orientation). With a
// non-null `exited`, leaving the safety box sets the flag instead of
// throwing; the density transport treats such nodes as outflow.
void backward_characteristic(const Problem& p, const ControlView& u,
                             const double* x, double t, double s, int substeps,
                             double* endpoint, double* div_integral,
                             bool* exited = nullptr);

// Integrate from (x, 0) to T and record the state at the requested mesh
// times (ascending indices). Used by the Monte Carlo density check.
void integrate_record(const Problem& p, const ControlView& u, const double* x,
                      const std::vector<int>& record_indices, int substeps,
                      double* states_out /* record_indices.size() * n */);

struct FlowMapBatch {
  int dim = 0;
  std::vector<double> sources;       // count * dim
  std::vector<double> images;        // count * dim
  std::vector<double> div_integral;  // count

  std::size_t size() const { return div_integral.size(); }
};

// Flow map for a batch of points from time s to t_target (backward when
// t_target < s), with per-point divergence integrals. Point-parallel;
// results are assembled in input order.
FlowMapBatch flow_map_batch(const Problem& p, const ControlView& u,
                            const std::vector<Vec>& sources, double s,
                            double t_target, int substeps,
                            Exec exec = Exec::par);

}  // namespace eoc

#endif  // EOC_FLOW_HPP_
