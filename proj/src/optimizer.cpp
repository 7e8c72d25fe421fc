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

#include "eoc/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "eoc/errors.hpp"
#include "eoc/rng.hpp"

namespace eoc {

namespace {

constexpr double kAtomPrune = 1e-6;
constexpr double kAcceptTol = 1e-12;

struct Scan {
  // Per interval: the lattice maximizer (empty when the incumbent is kept)
  // and the improvement margin.
  std::vector<Vec> argmax;
  std::vector<double> improvement;  // H_best - H_incumbent (>= 0)
  double worst_violation = 0.0;     // min over intervals of -(improvement)
};

// Scan at the left mesh point of every control interval; within `tol` of the
// maximum the incumbent wins, otherwise ties go to the lexicographically
// smallest lattice point (the lattice is generated in that order).
Scan scan_improvements(const Problem& p, const RelaxedControl& u,
                       const OptimizerOptions& opts) {
  ControlView view(p, u);
  ValueField v = apply_L(p, view, 0.0, opts.substeps, opts.exec);
  DensityGrid rho = apply_Lstar(p, view, DensitySource::from_spec(p.rho0), 0.0,
                                opts.substeps, opts.exec);
  HamiltonianEvaluator ham(p, view, v, rho);
  std::vector<Vec> lattice = p.delta.lattice(opts.delta_grid);

  const int intervals = p.time_steps;
  Scan scan;
  scan.argmax.resize(intervals);
  scan.improvement.assign(intervals, 0.0);

  parallel::for_each_index(opts.exec, intervals, [&](std::ptrdiff_t k) {
    double h_inc = ham.H_incumbent(static_cast<int>(k));
    double h_best = h_inc;
    const Vec* arg = nullptr;
    for (const Vec& cand : lattice) {
      double h = ham.H(static_cast<int>(k), cand.data());
      if (h > h_best) {
        h_best = h;
        arg = &cand;
      }
    }
    if (arg != nullptr && h_best - h_inc > opts.tol_violation) {
      scan.argmax[k] = *arg;
      scan.improvement[k] = h_best - h_inc;
    }
  });

  for (int k = 0; k < intervals; ++k)
    scan.worst_violation = std::min(scan.worst_violation, -scan.improvement[k]);
  return scan;
}

RelaxedControl blend(const Problem& p, const RelaxedControl& u, const Scan& scan,
                     double beta, const OptimizerOptions& opts) {
  RelaxedControl out = u;
  for (int k = 0; k < p.time_steps; ++k) {
    if (scan.argmax[k].empty()) continue;  // incumbent kept
    auto& iv = out.intervals[k];
    if (opts.mode == OptimizerOptions::Mode::kOrdinary || beta >= 1.0) {
      iv.atoms = {scan.argmax[k]};
      iv.weights = {1.0};
      continue;
    }
    for (double& w : iv.weights) w *= 1.0 - beta;
    bool merged = false;
    for (std::size_t a = 0; a < iv.atoms.size(); ++a)
      if (iv.atoms[a] == scan.argmax[k]) {
        iv.weights[a] += beta;
        merged = true;
        break;
      }
    if (!merged) {
      iv.atoms.push_back(scan.argmax[k]);
      iv.weights.push_back(beta);
    }
    // Prune and renormalize.
    std::vector<Vec> atoms;
    Vec weights;
    double total = 0.0;
    for (std::size_t a = 0; a < iv.atoms.size(); ++a)
      if (iv.weights[a] >= kAtomPrune) {
        atoms.push_back(std::move(iv.atoms[a]));
        weights.push_back(iv.weights[a]);
        total += iv.weights[a];
      }
    for (double& w : weights) w /= total;
    iv.atoms = std::move(atoms);
    iv.weights = std::move(weights);
  }
  return out;
}

}  // namespace

RelaxedControl improve_once(const Problem& p, const RelaxedControl& u_k,
                            double beta, const OptimizerOptions& opts) {
  if (!(beta > 0.0 && beta <= 1.0)) throw Error("blend beta must be in (0, 1]");
  validate_control(p, u_k);
  Scan scan = scan_improvements(p, u_k, opts);
  return blend(p, u_k, scan, beta, opts);
}

OptimizationTrace solve(const Problem& p, const RelaxedControl& u0,
                        const OptimizerOptions& opts) {
  if (!(opts.blend_init > 0.0 && opts.blend_init <= 1.0))
    throw Error("blend_init must be in (0, 1]");
  if (!(opts.blend_shrink > 0.0 && opts.blend_shrink < 1.0))
    throw Error("blend_shrink must be in (0, 1)");
  if (opts.max_iters < 1) throw Error("max_iters must be >= 1");
  validate_control(p, u0);

  OptimizationTrace trace;
  RelaxedControl u = u0;
  double cost = ensemble_cost(p, ControlView(p, u), opts.substeps, opts.exec);

  for (int it = 0; it < opts.max_iters; ++it) {
    Scan scan = scan_improvements(p, u, opts);
    if (scan.worst_violation >= -opts.tol_violation) {
      trace.converged = true;
      IterationRecord rec;
      rec.cost = cost;
      rec.worst_violation = scan.worst_violation;
      rec.accepted = true;
      rec.beta = 0.0;
      trace.iterations.push_back(rec);
      break;
    }

    double beta = opts.blend_init;
    int shrinks = 0;
    bool accepted = false;
    double cand_cost = cost;
    RelaxedControl cand;
    while (true) {
      cand = blend(p, u, scan, beta, opts);
      cand_cost = ensemble_cost(p, ControlView(p, cand), opts.substeps, opts.exec);
      if (cand_cost <= cost + kAcceptTol) {
        accepted = true;
        break;
      }
      if (shrinks >= opts.max_shrinks ||
          opts.mode == OptimizerOptions::Mode::kOrdinary)
        break;
      beta *= opts.blend_shrink;
      ++shrinks;
    }

    IterationRecord rec;
    rec.worst_violation = scan.worst_violation;
    rec.accepted = accepted;
    rec.beta = beta;
    rec.shrinks = shrinks;
    if (accepted) {
      u = std::move(cand);
      cost = cand_cost;
    }
    rec.cost = cost;
    trace.iterations.push_back(rec);
    if (!accepted) break;  // line search exhausted
  }

  trace.final_control = u;
  trace.final_cost = cost;
  trace.final_report = check_maximum_condition(p, ControlView(p, u),
                                               opts.tol_violation, opts.delta_grid,
                                               opts.substeps, opts.exec);
  if (opts.mode == OptimizerOptions::Mode::kOrdinary) {
    ControlSignal sig;
    for (const auto& iv : u.intervals) sig.values.push_back(iv.atoms[0]);
    trace.final_ordinary = std::move(sig);
  }
  return trace;
}

OptimizationTrace solve(const Problem& p, const ControlSignal& u0,
                        const OptimizerOptions& opts) {
  return solve(p, RelaxedControl::from_ordinary(u0), opts);
}

ControlSignal project_relaxed_to_ordinary(const Problem& p,
                                          const RelaxedControl& u) {
  if (p.delta.kind != ControlSet::Kind::kBox)
    throw ConfigError("projection requires a box control set");
  validate_control(p, u);

  if (p.m > 0) {
    // Sampled three-point collinearity: f(x, (a+b)/2, t) must equal the
    // average of f(x, a, t) and f(x, b, t).
    Rng rng(mix_seed(0xaff1e, 17));
    double worst = 0.0, scale = 1.0;
    for (int trial = 0; trial < 16; ++trial) {
      double x[kMaxDim];
      for (int i = 0; i < p.n; ++i)
        x[i] = rng.uniform(p.domain.lo[i], p.domain.hi[i]);
      double t = rng.uniform(0.0, p.horizon);
      Vec a(p.m), b(p.m), mid(p.m);
      for (int i = 0; i < p.m; ++i) {
        a[i] = rng.uniform(p.delta.lo[i], p.delta.hi[i]);
        b[i] = rng.uniform(p.delta.lo[i], p.delta.hi[i]);
        mid[i] = 0.5 * (a[i] + b[i]);
      }
      Vec fa = eval_vector_field(p, x, a.data(), t);
      Vec fb = eval_vector_field(p, x, b.data(), t);
      Vec fm = eval_vector_field(p, x, mid.data(), t);
      for (int i = 0; i < p.n; ++i) {
        worst = std::max(worst, std::fabs(fm[i] - 0.5 * (fa[i] + fb[i])));
        scale = std::max({scale, std::fabs(fa[i]), std::fabs(fb[i])});
      }
    }
    if (worst > 1e-8 * scale)
      throw ConfigError(
          "projection refused: f is not affine in u (collinearity residual " +
          std::to_string(worst) + ")");
  }

  ControlSignal out;
  out.values.reserve(u.intervals.size());
  for (const auto& iv : u.intervals) {
    Vec bary(p.m, 0.0);
    for (std::size_t a = 0; a < iv.atoms.size(); ++a)
      for (int i = 0; i < p.m; ++i) bary[i] += iv.weights[a] * iv.atoms[a][i];
    for (int i = 0; i < p.m; ++i)
      bary[i] = std::clamp(bary[i], p.delta.lo[i], p.delta.hi[i]);
    out.values.push_back(std::move(bary));
  }
  return out;
}

}  // namespace eoc
