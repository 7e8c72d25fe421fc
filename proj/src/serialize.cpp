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

#include "eoc/serialize.hpp"

#include <cstdio>
#include <fstream>

#include "eoc/errors.hpp"

namespace eoc {

OrderedJson to_json(const ValidationReport& r) {
  OrderedJson j;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  j["lipschitz_x"] = r.lipschitz_x;
  j["lipschitz_u"] = r.lipschitz_u;
  j["sup_f"] = r.sup_f;
  if (r.divergence_discrepancy)
    j["divergence_discrepancy"] = *r.divergence_discrepancy;
  j["k0_estimate"] = r.k0_estimate;
  j["warnings"] = r.warnings;
  return j;
}

OrderedJson to_json(const EstimateReport& r) {
  OrderedJson j;
  j["s"] = r.s;
  j["constant"] = r.constant;
  j["constant_kind"] = "grid-max";  // delta_f maximized over D's grid, not R^n
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["margin"] = r.margin;
  j["tol"] = r.tol;
  j["satisfied"] = r.satisfied;
  j["delta_f"] = r.delta_samples;
  return j;
}

OrderedJson to_json(const DualityReport& r) {
  OrderedJson j;
  j["s"] = r.s;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["abs_gap"] = r.abs_gap;
  j["rel_gap"] = r.rel_gap;
  return j;
}

OrderedJson to_json(const DensityCheckReport& r) {
  OrderedJson j;
  j["checkpoints"] = r.checkpoints;
  j["tv"] = r.tv;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  return j;
}

OrderedJson to_json(const McCostReport& r) {
  OrderedJson j;
  j["estimate"] = r.estimate;
  j["std_error"] = r.std_error;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  j["acceptance_rate"] = r.acceptance_rate;
  return j;
}

OrderedJson to_json(const OptimalityReport& r) {
  OrderedJson j;
  j["tol"] = r.tol;
  j["delta_grid"] = r.delta_grid;
  j["satisfied"] = r.satisfied;
  j["worst_violation"] = r.worst;
  j["worst_time"] = r.worst_time;
  j["worst_u"] = r.worst_u;
  j["violation_fraction"] = r.violation_fraction;
  j["times"] = r.times;
  j["H_incumbent"] = r.H_incumbent;
  j["H_best"] = r.H_best;
  j["eta_min"] = r.eta_min;
  return j;
}

OrderedJson to_json(const NeedleCheck& r) {
  OrderedJson j;
  j["t_bar"] = r.t_bar;
  j["u_bar"] = r.u_bar;
  j["eps"] = r.eps;
  j["quotients"] = r.quotients;
  j["eta"] = r.eta;
  return j;
}

OrderedJson to_json(const OptimizationTrace& r) {
  OrderedJson j;
  OrderedJson iters = OrderedJson::array();
  for (const auto& it : r.iterations) {
    OrderedJson rec;
    rec["cost"] = it.cost;
    rec["worst_violation"] = it.worst_violation;
    rec["accepted"] = it.accepted;
    rec["beta"] = it.beta;
    rec["shrinks"] = it.shrinks;
    iters.push_back(rec);
  }
  j["iterations"] = iters;
  j["final_cost"] = r.final_cost;
  j["converged"] = r.converged;
  j["final_report"] = to_json(r.final_report);
  return j;
}

namespace {

void row_time(std::ostream& os, double lo, double hi) {
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g", lo, hi);
  os << buf;
}

}  // namespace

void write_control_csv(std::ostream& os, const Problem& p, const ControlSignal& u) {
  os << "t_lo,t_hi";
  for (int a = 0; a < p.m; ++a) os << ",u" << a + 1;
  os << "\n";
  TimeMesh mesh = p.mesh();
  char buf[40];
  for (int k = 0; k < p.time_steps; ++k) {
    row_time(os, mesh.time(k), mesh.time(k + 1));
    for (double v : u.values[k]) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

void write_control_csv(std::ostream& os, const Problem& p, const RelaxedControl& u) {
  os << "t_lo,t_hi,atom";
  for (int a = 0; a < p.m; ++a) os << ",u" << a + 1;
  os << ",weight\n";
  TimeMesh mesh = p.mesh();
  char buf[40];
  for (int k = 0; k < p.time_steps; ++k) {
    const auto& iv = u.intervals[k];
    for (std::size_t a = 0; a < iv.atoms.size(); ++a) {
      row_time(os, mesh.time(k), mesh.time(k + 1));
      os << ',' << a;
      for (double v : iv.atoms[a]) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << ',' << buf;
      }
      std::snprintf(buf, sizeof(buf), "%.17g", iv.weights[a]);
      os << ',' << buf << '\n';
    }
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file '" + path + "'");
  out << content;
  if (!out) throw Error("failed writing file '" + path + "'");
}

}  // namespace eoc
