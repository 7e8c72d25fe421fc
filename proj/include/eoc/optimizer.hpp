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

#ifndef EOC_OPTIMIZER_HPP_
#define EOC_OPTIMIZER_HPP_

#include <optional>

#include "eoc/optimality.hpp"

namespace eoc {

struct OptimizerOptions {
  enum class Mode { kOrdinary, kRelaxed };

  int max_iters = 30;
  double tol_violation = 1e-3;
  double blend_init = 1.0;     // beta0 in (0, 1]
  double blend_shrink = 0.5;   // in (0, 1)
  int delta_grid = 21;
  Mode mode = Mode::kRelaxed;
  int max_shrinks = 8;
  int substeps = 1;
  Exec exec = Exec::par;
};

struct IterationRecord {
  double cost = 0.0;             // Phi after this iteration (unchanged if rejected)
  double worst_violation = 0.0;  // min eta over intervals for the incoming control
  bool accepted = false;
  double beta = 0.0;             // blend actually used
  int shrinks = 0;
};

struct OptimizationTrace {
  std::vector<IterationRecord> iterations;
  RelaxedControl final_control;
  std::optional<ControlSignal> final_ordinary;  // set in ordinary mode
  OptimalityReport final_report;
  double final_cost = 0.0;
  bool converged = false;  // stopped by tolerance, not by iteration/shrink cap
};

// One sweep of pointwise Hamiltonian maximization: computes rho_hat and
// v_hat for u_k, picks the lattice maximizer per interval (lexicographic
// tie-break; the incumbent is kept when it is within `tol` of the max), and
// blends (1-beta) u_k + beta delta_{u*}. Atoms below weight 1e-6 are pruned
// and weights renormalized.
RelaxedControl improve_once(const Problem& p, const RelaxedControl& u_k,
                            double beta, const OptimizerOptions& opts);

// Successive approximation with monotone acceptance: improve, accept iff the
// ensemble cost does not increase, shrink beta on rejection (up to
// max_shrinks, then stop), terminate when the worst violation clears
// -tol_violation or at max_iters.
OptimizationTrace solve(const Problem& p, const RelaxedControl& u0,
                        const OptimizerOptions& opts);
OptimizationTrace solve(const Problem& p, const ControlSignal& u0,
                        const OptimizerOptions& opts);

// Per-interval barycenter, valid when f is affine in u (checked by sampled
// three-point collinearity) and Delta is a box; throws ConfigError otherwise.
ControlSignal project_relaxed_to_ordinary(const Problem& p,
                                          const RelaxedControl& u);

}  // namespace eoc

#endif  // EOC_OPTIMIZER_HPP_
