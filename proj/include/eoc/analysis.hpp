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

#ifndef EOC_ANALYSIS_HPP_
#define EOC_ANALYSIS_HPP_

#include <cstdint>
#include <ostream>
#include <vector>

#include "eoc/rng.hpp"
#include "eoc/transport.hpp"

namespace eoc {

// L2 -> L2 bound check for the backward value operator:
//   ||v(., s)|| <= exp(int_s^T delta_f) * int_s^T ||phi(., u(t), t)|| dt.
struct EstimateReport {
  double s = 0.0;
  std::vector<double> delta_samples;  // delta_f at each mesh time in [s, T]
  double constant = 1.0;              // c(s)
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  double tol = 0.0;     // 1e-3 * rhs
  bool satisfied = false;
};

// Pairing identity (v(., s), rho_s) = int_s^T (phi(., t), p(., t)) dt.
struct DualityReport {
  double s = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;
};

struct DensityCheckReport {
  std::vector<double> checkpoints;
  std::vector<double> tv;  // total-variation distance per checkpoint
  long samples = 0;
  std::uint64_t seed = 0;
};

struct McCostReport {
  double estimate = 0.0;
  double std_error = 0.0;
  long samples = 0;
  std::uint64_t seed = 0;
  double acceptance_rate = 1.0;  // < 1 only for the rejection sampler
};

// Half the grid max of |div f(x, u(t), t)|. A documented under-approximation
// of the sup over R^n: the report label is "grid-max".
double delta_f(const Problem& p, const ControlView& u, double t);

// c(s) = exp of the time-trapezoid of delta_f over [s, T].
double estimate_constant(const Problem& p, const ControlView& u, double s);

EstimateReport verify_estimate(const Problem& p, const ControlView& u, double s,
                               int substeps = 1, Exec exec = Exec::par);

DualityReport verify_duality(const Problem& p, const ControlView& u, double s,
                             int substeps = 1, Exec exec = Exec::par);

// Deterministic route to Phi[u]: (v(., 0), rho0)_{H0}.
double ensemble_cost(const Problem& p, const ControlView& u, int substeps = 1,
                     Exec exec = Exec::par);

// Monte Carlo route: mean and standard error of the trajectory cost over N
// draws from rho0. Block substreams make the result independent of the
// thread count and bit-reproducible for a fixed seed.
McCostReport monte_carlo_cost(const Problem& p, const ControlView& u, long n,
                              std::uint64_t seed, int substeps = 1,
                              Exec exec = Exec::par);

// Simulate N trajectories, histogram them on the grid cells at each
// checkpoint (mesh-aligned), and compare with the transported density:
// TV = (1/2) sum_cells |hist - int_cell p| (plus the outside-D bucket).
DensityCheckReport monte_carlo_density_check(const Problem& p,
                                             const ControlView& u, long n,
                                             std::uint64_t seed,
                                             const std::vector<double>& checkpoints,
                                             int substeps = 1,
                                             Exec exec = Exec::par);

// ||phi(., u(t), t)||_{L2(D)} on the problem grid.
double phi_norm_at(const Problem& p, const SpatialGrid& g, const ControlView& u,
                   double t);

// Draws from rho0: per-axis inverse CDF for Gaussian specs, otherwise
// rejection against the density expression (bound precomputed from the grid
// maximum). `proposals` counts rejection proposals for the acceptance-rate
// report.
class Rho0Sampler {
 public:
  explicit Rho0Sampler(const Problem& p);
  void draw(Rng& rng, double* out, long* proposals) const;

 private:
  const Problem* p_;
  double bound_ = 0.0;
};

// CSV schedule "t,phi_norm,delta_f" for plotting.
void write_schedule_csv(std::ostream& os, const Problem& p, const ControlView& u);

}  // namespace eoc

#endif  // EOC_ANALYSIS_HPP_
