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

#include "eoc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eoc/errors.hpp"

namespace eoc {

namespace {

constexpr long kBlock = 2048;

double delta_f_on_grid(const Problem&, const SpatialGrid& g,
                       const ControlView& u, double t) {
  int k = u.interval_of(t);
  double x[kMaxDim];
  double worst = 0.0;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    g.node(i, x);
    worst = std::max(worst, std::fabs(u.divergence(k, x, t)));
  }
  return 0.5 * worst;
}

void build_phi_slice(const Problem&, const SpatialGrid& g, const ControlView& u,
                     double t, std::vector<double>& out) {
  int k = u.interval_of(t);
  out.resize(g.node_count());
  double x[kMaxDim];
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    g.node(i, x);
    out[i] = u.running_cost(k, x, t);
  }
}

struct BlockRange {
  long begin, count;
};

std::vector<BlockRange> split_blocks(long n) {
  std::vector<BlockRange> blocks;
  for (long b = 0; b * kBlock < n; ++b)
    blocks.push_back({b * kBlock, std::min(kBlock, n - b * kBlock)});
  return blocks;
}

}  // namespace

double delta_f(const Problem& p, const ControlView& u, double t) {
  SpatialGrid g = p.make_grid();
  return delta_f_on_grid(p, g, u, t);
}

double estimate_constant(const Problem& p, const ControlView& u, double s) {
  SpatialGrid g = p.make_grid();
  TimeMesh mesh = p.mesh();
  int js = mesh.index_of(s, "estimate_constant");
  double integral = 0.0;
  double prev = 0.0;
  for (int j = js; j <= mesh.steps; ++j) {
    double d = delta_f_on_grid(p, g, u, mesh.time(j));
    if (j > js) integral += 0.5 * (prev + d) * mesh.dt();
    prev = d;
  }
  return std::exp(integral);
}

double phi_norm_at(const Problem& p, const SpatialGrid& g, const ControlView& u,
                   double t) {
  std::vector<double> slice;
  build_phi_slice(p, g, u, t, slice);
  return g.l2_norm(slice);
}

EstimateReport verify_estimate(const Problem& p, const ControlView& u, double s,
                               int substeps, Exec exec) {
  EstimateReport rep;
  rep.s = s;
  ValueField v = apply_L(p, u, s, substeps, exec);
  const SpatialGrid& g = v.grid;
  TimeMesh mesh = v.mesh;
  int js = v.start_index;

  rep.lhs = g.l2_norm(v.slice(js));

  double delta_int = 0.0, phi_int = 0.0;
  double prev_delta = 0.0, prev_phi = 0.0;
  for (int j = js; j <= mesh.steps; ++j) {
    double t = mesh.time(j);
    double d = delta_f_on_grid(p, g, u, t);
    double pn = phi_norm_at(p, g, u, t);
    rep.delta_samples.push_back(d);
    if (j > js) {
      delta_int += 0.5 * (prev_delta + d) * mesh.dt();
      phi_int += 0.5 * (prev_phi + pn) * mesh.dt();
    }
    prev_delta = d;
    prev_phi = pn;
  }
  rep.constant = std::exp(delta_int);
  rep.rhs = rep.constant * phi_int;
  rep.margin = rep.rhs - rep.lhs;
  rep.tol = 1e-3 * rep.rhs;
  rep.satisfied = rep.margin >= -rep.tol;
  return rep;
}

DualityReport verify_duality(const Problem& p, const ControlView& u, double s,
                             int substeps, Exec exec) {
  DualityReport rep;
  rep.s = s;
  ValueField v = apply_L(p, u, s, substeps, exec);
  DensityGrid rho =
      apply_Lstar(p, u, DensitySource::from_spec(p.rho0), s, substeps, exec);
  const SpatialGrid& g = v.grid;
  TimeMesh mesh = v.mesh;
  int js = v.start_index;

  rep.lhs = g.inner_product(v.slice(js), rho.slice(js));

  std::vector<double> phi;
  double prev = 0.0;
  for (int j = js; j <= mesh.steps; ++j) {
    double t = mesh.time(j);
    build_phi_slice(p, g, u, t, phi);
    double pairing = g.inner_product(phi, rho.slice(j));
    if (j > js) rep.rhs += 0.5 * (prev + pairing) * mesh.dt();
    prev = pairing;
  }
  rep.abs_gap = std::fabs(rep.lhs - rep.rhs);
  double scale = std::max(std::fabs(rep.lhs), std::fabs(rep.rhs));
  rep.rel_gap = scale > 0.0 ? rep.abs_gap / scale : 0.0;
  return rep;
}

double ensemble_cost(const Problem& p, const ControlView& u, int substeps,
                     Exec exec) {
  SpatialGrid g = p.make_grid();
  std::vector<double> v0 = value_slice(p, u, 0.0, substeps, exec);
  std::vector<double> rho = rho0_on_grid(p, g);
  return g.inner_product(v0, rho);
}

Rho0Sampler::Rho0Sampler(const Problem& p) : p_(&p) {
  if (!p.rho0.gaussian) {
    // Rejection bound: inflated grid maximum of the unnormalized expression.
    SpatialGrid g = p.make_grid();
    double x[kMaxDim];
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      g.node(k, x);
      bound_ = std::max(bound_, p.rho0.expr.eval(x, nullptr, 0.0));
    }
    bound_ *= 1.2;
  }
}

void Rho0Sampler::draw(Rng& rng, double* out, long* proposals) const {
  const Problem& p = *p_;
  if (p.rho0.gaussian) {
    const GaussianSpec& gs = *p.rho0.gaussian;
    for (int a = 0; a < p.n; ++a)
      out[a] = gs.mean[a] + gs.sd[a] * rng.normal();
    return;
  }
  for (long attempt = 0; attempt < 100000; ++attempt) {
    for (int a = 0; a < p.n; ++a)
      out[a] = rng.uniform(p.domain.lo[a], p.domain.hi[a]);
    double accept = rng.uniform01() * bound_;
    ++*proposals;
    if (accept < p.rho0.expr.eval(out, nullptr, 0.0)) return;
  }
  throw SamplingError("rho0 rejection sampler acceptance rate below 1e-3");
}

McCostReport monte_carlo_cost(const Problem& p, const ControlView& u, long n,
                              std::uint64_t seed, int substeps, Exec exec) {
  if (n < 1) throw Error("monte_carlo_cost needs n >= 1");
  McCostReport rep;
  rep.samples = n;
  rep.seed = seed;

  Rho0Sampler sampler(p);
  std::vector<BlockRange> blocks = split_blocks(n);
  std::vector<double> sums(blocks.size(), 0.0), sumsqs(blocks.size(), 0.0);
  std::vector<long> proposals(blocks.size(), 0);

  parallel::for_each_index(exec, static_cast<std::ptrdiff_t>(blocks.size()),
                           [&](std::ptrdiff_t b) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(b)));
    double x[kMaxDim];
    double sum = 0.0, sumsq = 0.0;
    long prop = 0;
    for (long i = 0; i < blocks[b].count; ++i) {
      sampler.draw(rng, x, &prop);
      double c = trajectory_cost(p, u, x, 0.0, substeps);
      sum += c;
      sumsq += c * c;
    }
    sums[b] = sum;
    sumsqs[b] = sumsq;
    proposals[b] = prop;
  });

  double sum = 0.0, sumsq = 0.0;
  long prop = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    sum += sums[b];
    sumsq += sumsqs[b];
    prop += proposals[b];
  }
  rep.estimate = sum / static_cast<double>(n);
  double var = 0.0;
  if (n > 1)
    var = std::max(0.0, (sumsq - static_cast<double>(n) * rep.estimate * rep.estimate) /
                            static_cast<double>(n - 1));
  rep.std_error = std::sqrt(var / static_cast<double>(n));
  rep.acceptance_rate = prop > 0 ? static_cast<double>(n) / static_cast<double>(prop) : 1.0;
  if (rep.acceptance_rate < 1e-3)
    throw SamplingError("rho0 rejection sampler acceptance rate below 1e-3");
  return rep;
}

DensityCheckReport monte_carlo_density_check(const Problem& p,
                                             const ControlView& u, long n,
                                             std::uint64_t seed,
                                             const std::vector<double>& checkpoints,
                                             int substeps, Exec exec) {
  if (n < 1) throw Error("monte_carlo_density_check needs n >= 1");
  DensityCheckReport rep;
  rep.samples = n;
  rep.seed = seed;
  rep.checkpoints = checkpoints;

  TimeMesh mesh = p.mesh();
  std::vector<int> indices;
  for (double t : checkpoints)
    indices.push_back(mesh.index_of(t, "density check checkpoint"));
  if (!std::is_sorted(indices.begin(), indices.end()))
    throw MeshError("checkpoints must be ascending");

  DensityGrid rho =
      apply_Lstar(p, u, DensitySource::from_spec(p.rho0), 0.0, substeps, exec);
  const SpatialGrid& g = rho.grid;
  const std::size_t cells = g.cell_count();

  // Reference cell masses per checkpoint (multilinear cell integrals).
  std::vector<std::vector<double>> cell_mass(indices.size());
  for (std::size_t c = 0; c < indices.size(); ++c) {
    cell_mass[c].resize(cells);
    auto slice = rho.slice(indices[c]);
    for (std::size_t cell = 0; cell < cells; ++cell)
      cell_mass[c][cell] = g.cell_integral(slice, cell);
  }

  Rho0Sampler sampler(p);
  std::vector<BlockRange> blocks = split_blocks(n);
  // Per-block histograms; integer accumulation makes the reduction order
  // irrelevant.
  std::vector<std::vector<std::int64_t>> hist(
      blocks.size(), std::vector<std::int64_t>(indices.size() * (cells + 1), 0));

  parallel::for_each_index(exec, static_cast<std::ptrdiff_t>(blocks.size()),
                           [&](std::ptrdiff_t b) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(b)));
    double x[kMaxDim];
    std::vector<double> states(indices.size() * static_cast<std::size_t>(p.n));
    long prop = 0;
    auto& h = hist[b];
    for (long i = 0; i < blocks[b].count; ++i) {
      sampler.draw(rng, x, &prop);
      integrate_record(p, u, x, indices, substeps, states.data());
      for (std::size_t c = 0; c < indices.size(); ++c) {
        std::size_t cell;
        if (g.locate_cell(states.data() + c * p.n, &cell))
          ++h[c * (cells + 1) + cell];
        else
          ++h[c * (cells + 1) + cells];  // outside-D bucket
      }
    }
  });

  for (std::size_t c = 0; c < indices.size(); ++c) {
    std::vector<std::int64_t> total(cells + 1, 0);
    for (const auto& h : hist)
      for (std::size_t cell = 0; cell <= cells; ++cell)
        total[cell] += h[c * (cells + 1) + cell];
    double inside_mass = 0.0;
    for (std::size_t cell = 0; cell < cells; ++cell) inside_mass += cell_mass[c][cell];
    double tv = 0.0;
    for (std::size_t cell = 0; cell < cells; ++cell)
      tv += std::fabs(static_cast<double>(total[cell]) / static_cast<double>(n) -
                      cell_mass[c][cell]);
    tv += std::fabs(static_cast<double>(total[cells]) / static_cast<double>(n) -
                    std::max(0.0, 1.0 - inside_mass));
    rep.tv.push_back(0.5 * tv);
  }
  return rep;
}

void write_schedule_csv(std::ostream& os, const Problem& p, const ControlView& u) {
  SpatialGrid g = p.make_grid();
  TimeMesh mesh = p.mesh();
  os << "t,phi_norm,delta_f\n";
  char buf[96];
  for (int j = 0; j <= mesh.steps; ++j) {
    double t = mesh.time(j);
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", t,
                  phi_norm_at(p, g, u, t), delta_f_on_grid(p, g, u, t));
    os << buf;
  }
}

}  // namespace eoc
