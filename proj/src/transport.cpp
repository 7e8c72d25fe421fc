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

#include "eoc/transport.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "eoc/errors.hpp"

namespace eoc {

namespace {

std::string node_label(const SpatialGrid& g, std::size_t k) {
  double x[kMaxDim];
  g.node(k, x);
  std::string s = "node " + std::to_string(k) + " (";
  for (int a = 0; a < g.dim(); ++a) {
    if (a) s += ", ";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x[a]);
    s += buf;
  }
  s += ")";
  return s;
}

}  // namespace

ValueField apply_L(const Problem& p, const ControlView& u, double s,
                   int substeps, Exec exec) {
  ValueField v;
  v.grid = p.make_grid();
  v.mesh = p.mesh();
  v.start_index = v.mesh.index_of(s, "apply_L");
  const std::size_t nodes = v.grid.node_count();
  v.values.assign(static_cast<std::size_t>(v.mesh.points()) * nodes, 0.0);

  // v(., T) = 0 is the terminal condition; every earlier (time, node) pair
  // is an independent characteristic sweep, so the whole block runs in one
  // parallel region.
  const int sweeps = v.mesh.steps - v.start_index;
  parallel::for_each_index(
      exec, static_cast<std::ptrdiff_t>(sweeps) * nodes, [&](std::ptrdiff_t q) {
        int j = v.start_index + static_cast<int>(q / nodes);
        std::size_t k = static_cast<std::size_t>(q % nodes);
        double x[kMaxDim];
        v.grid.node(k, x);
        try {
          v.values[static_cast<std::size_t>(j) * nodes + k] =
              trajectory_cost(p, u, x, v.mesh.time(j), substeps);
        } catch (const EscapeError& e) {
          throw EscapeError(
              "apply_L: characteristic from " + node_label(v.grid, k) + " escaped",
              e.exit_time);
        }
      });
  return v;
}

std::vector<double> value_slice(const Problem& p, const ControlView& u,
                                double s, int substeps, Exec exec) {
  SpatialGrid grid = p.make_grid();
  TimeMesh mesh = p.mesh();
  mesh.index_of(s, "value_slice");
  std::vector<double> out(grid.node_count(), 0.0);
  parallel::for_each_index(exec, static_cast<std::ptrdiff_t>(grid.node_count()),
                           [&](std::ptrdiff_t k) {
    double x[kMaxDim];
    grid.node(static_cast<std::size_t>(k), x);
    out[k] = trajectory_cost(p, u, x, s, substeps);
  });
  return out;
}

DensityGrid apply_Lstar(const Problem& p, const ControlView& u,
                        const DensitySource& rho_s, double s, int substeps,
                        Exec exec) {
  DensityGrid rho;
  rho.grid = p.make_grid();
  rho.mesh = p.mesh();
  rho.start_index = rho.mesh.index_of(s, "apply_Lstar");
  const std::size_t nodes = rho.grid.node_count();
  const int points = rho.mesh.points();
  rho.values.assign(static_cast<std::size_t>(points) * nodes, 0.0);
  rho.mass_per_time.assign(points, 0.0);
  rho.outflow_per_time.assign(points, 0);

  const int slices = points - rho.start_index;
  std::vector<signed char> outflow_flag(
      static_cast<std::size_t>(slices) * nodes, 0);

  parallel::for_each_index(
      exec, static_cast<std::ptrdiff_t>(slices) * nodes, [&](std::ptrdiff_t q) {
        int j = rho.start_index + static_cast<int>(q / nodes);
        std::size_t k = static_cast<std::size_t>(q % nodes);
        double* out = rho.values.data() + static_cast<std::size_t>(j) * nodes;
        double x[kMaxDim];
        rho.grid.node(k, x);
        if (j == rho.start_index) {
          // Start slice: evaluate the source directly at the nodes.
          out[k] = rho_s(x);
          return;
        }
        double x0[kMaxDim];
        double div = 0.0;
        bool exited = false;
        backward_characteristic(p, u, x, rho.mesh.time(j), s, substeps, x0,
                                &div, &exited);
        if (exited || !p.domain.contains(x0)) {
          out[k] = 0.0;
          outflow_flag[q] = 1;
          return;
        }
        out[k] = rho_s(x0) * std::exp(-div);
      });

  for (int j = rho.start_index; j < points; ++j) {
    auto slice = rho.slice(j);
    long flow = 0;
    std::size_t base = static_cast<std::size_t>(j - rho.start_index) * nodes;
    for (std::size_t k = 0; k < nodes; ++k) {
      flow += outflow_flag[base + k];
      if (slice[k] < -1e-9) ++rho.negative_nodes;
    }
    rho.outflow_per_time[j] = flow;
    rho.mass_per_time[j] = rho.grid.integral(slice);
  }
  return rho;
}

double mass(const DensityGrid& rho, int j) {
  return rho.grid.integral(rho.slice(j));
}

std::vector<double> rho0_on_grid(const Problem& p, const SpatialGrid& g) {
  std::vector<double> out(g.node_count());
  double x[kMaxDim];
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    g.node(k, x);
    out[k] = p.rho0.density(x);
  }
  return out;
}

void write_field_csv(std::ostream& os, const SpatialGrid& g, const TimeMesh& mesh,
                     const std::vector<double>& values, int start_index) {
  os << "t";
  for (int a = 0; a < g.dim(); ++a) os << ",x" << a + 1;
  os << ",value\n";
  char buf[32];
  double x[kMaxDim];
  const std::size_t nodes = g.node_count();
  for (int j = start_index; j < mesh.points(); ++j) {
    double t = mesh.time(j);
    for (std::size_t k = 0; k < nodes; ++k) {
      g.node(k, x);
      std::snprintf(buf, sizeof(buf), "%.17g", t);
      os << buf;
      for (int a = 0; a < g.dim(); ++a) {
        std::snprintf(buf, sizeof(buf), "%.17g", x[a]);
        os << ',' << buf;
      }
      std::snprintf(buf, sizeof(buf), "%.17g",
                    values[static_cast<std::size_t>(j) * nodes + k]);
      os << ',' << buf << '\n';
    }
  }
}

}  // namespace eoc
