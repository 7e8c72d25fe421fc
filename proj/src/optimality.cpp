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

#include "eoc/optimality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eoc/errors.hpp"

namespace eoc {

void gradient_slice(const SpatialGrid& g, std::span<const double> v, int axis,
                    std::vector<double>& out) {
  out.resize(g.node_count());
  const int d = g.dim();
  const double h = g.spacing(axis);
  int idx[kMaxDim];
  // Stride of one step along `axis` in the flattened node order.
  std::size_t stride = 1;
  for (int a = d - 1; a > axis; --a) stride *= static_cast<std::size_t>(g.count(a));
  const int count = g.count(axis);
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    g.unflatten(k, idx);
    int i = idx[axis];
    if (i == 0)
      out[k] = (v[k + stride] - v[k]) / h;
    else if (i == count - 1)
      out[k] = (v[k] - v[k - stride]) / h;
    else
      out[k] = (v[k + stride] - v[k - stride]) / (2.0 * h);
  }
}

HamiltonianEvaluator::HamiltonianEvaluator(const Problem& p, const ControlView& u,
                                           const ValueField& v,
                                           const DensityGrid& rho)
    : p_(&p), u_(&u), grid_(&v.grid), rho_(&rho), mesh_(v.mesh) {
  const std::size_t nodes = grid_->node_count();
  const int points = mesh_.points();
  const int n = p.n;

  grad_v_.resize(static_cast<std::size_t>(points) * nodes * n);
  wrho_.resize(static_cast<std::size_t>(points) * nodes);
  f_inc_.resize(static_cast<std::size_t>(points) * nodes * n);
  phi_inc_.resize(static_cast<std::size_t>(points) * nodes);

  std::vector<double> grad;
  double x[kMaxDim], fx[kMaxDim];
  for (int j = 0; j < points; ++j) {
    for (int a = 0; a < n; ++a) {
      gradient_slice(*grid_, v.slice(j), a, grad);
      for (std::size_t k = 0; k < nodes; ++k)
        grad_v_[(static_cast<std::size_t>(j) * nodes + k) * n + a] = grad[k];
    }
    double t = mesh_.time(j);
    int interval = u.interval_of(t);
    auto rho_slice = rho.slice(j);
    for (std::size_t k = 0; k < nodes; ++k) {
      std::size_t jk = static_cast<std::size_t>(j) * nodes + k;
      wrho_[jk] = grid_->weight(k) * rho_slice[k];
      grid_->node(k, x);
      u.field(interval, x, t, fx);
      for (int a = 0; a < n; ++a) f_inc_[jk * n + a] = fx[a];
      phi_inc_[jk] = u.running_cost(interval, x, t);
    }
  }
}

double HamiltonianEvaluator::H(int j, const double* ubar) const {
  const std::size_t nodes = grid_->node_count();
  const int n = p_->n;
  const double t = mesh_.time(j);
  double x[kMaxDim];
  double acc = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    std::size_t jk = static_cast<std::size_t>(j) * nodes + k;
    double w = wrho_[jk];
    if (w == 0.0) continue;
    grid_->node(k, x);
    double adv = 0.0;
    for (int a = 0; a < n; ++a)
      adv += p_->f.components[a].eval(x, ubar, t) * grad_v_[jk * n + a];
    acc += w * (-adv - p_->phi.expr.eval(x, ubar, t));
  }
  return acc;
}

double HamiltonianEvaluator::H_incumbent(int j) const {
  const std::size_t nodes = grid_->node_count();
  const int n = p_->n;
  double acc = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    std::size_t jk = static_cast<std::size_t>(j) * nodes + k;
    double adv = 0.0;
    for (int a = 0; a < n; ++a) adv += f_inc_[jk * n + a] * grad_v_[jk * n + a];
    acc += wrho_[jk] * (-adv - phi_inc_[jk]);
  }
  return acc;
}

double HamiltonianEvaluator::eta(int j, const double* ubar) const {
  const std::size_t nodes = grid_->node_count();
  const int n = p_->n;
  const double t = mesh_.time(j);
  double x[kMaxDim];
  double acc = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    std::size_t jk = static_cast<std::size_t>(j) * nodes + k;
    double w = wrho_[jk];
    if (w == 0.0) continue;
    grid_->node(k, x);
    double diff = 0.0;
    for (int a = 0; a < n; ++a)
      diff += (p_->f.components[a].eval(x, ubar, t) - f_inc_[jk * n + a]) *
              grad_v_[jk * n + a];
    diff += p_->phi.expr.eval(x, ubar, t) - phi_inc_[jk];
    acc += w * diff;
  }
  return acc;
}

double hamiltonian_density_raw(const Problem& p, const ValueField& v,
                               const DensityGrid& rho, double t,
                               const Vec& ubar) {
  int j = v.mesh.index_of(t, "hamiltonian_density_raw");
  const SpatialGrid& g = v.grid;
  const std::size_t nodes = g.node_count();
  auto v_slice = v.slice(j);
  auto rho_slice = rho.slice(j);

  std::vector<double> prod(nodes), deriv;
  std::vector<double> div_term(nodes, 0.0);
  double x[kMaxDim];
  for (int a = 0; a < p.n; ++a) {
    for (std::size_t k = 0; k < nodes; ++k) {
      g.node(k, x);
      prod[k] = rho_slice[k] * p.f.components[a].eval(x, ubar.data(), t);
    }
    gradient_slice(g, prod, a, deriv);
    for (std::size_t k = 0; k < nodes; ++k) div_term[k] += deriv[k];
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    g.node(k, x);
    acc += g.weight(k) * (v_slice[k] * div_term[k] -
                          p.phi.expr.eval(x, ubar.data(), t) * rho_slice[k]);
  }
  return acc;
}

namespace {

// Shared implementation for the one-off entry points.
struct SliceContext {
  const SpatialGrid& g;
  std::span<const double> v_slice;
  std::span<const double> rho_slice;
  std::vector<std::vector<double>> grad;  // per axis

  SliceContext(const SpatialGrid& grid, std::span<const double> v,
               std::span<const double> rho, int n)
      : g(grid), v_slice(v), rho_slice(rho), grad(n) {
    for (int a = 0; a < n; ++a) gradient_slice(g, v, a, grad[a]);
  }
};

}  // namespace

double hamiltonian_density(const Problem& p, const ValueField& v,
                           const DensityGrid& rho, double t, const Vec& ubar) {
  int j = v.mesh.index_of(t, "hamiltonian_density");
  SliceContext ctx(v.grid, v.slice(j), rho.slice(j), p.n);
  double x[kMaxDim];
  double acc = 0.0;
  for (std::size_t k = 0; k < ctx.g.node_count(); ++k) {
    double w = ctx.g.weight(k) * ctx.rho_slice[k];
    if (w == 0.0) continue;
    ctx.g.node(k, x);
    double adv = 0.0;
    for (int a = 0; a < p.n; ++a)
      adv += p.f.components[a].eval(x, ubar.data(), t) * ctx.grad[a][k];
    acc += w * (-adv - p.phi.expr.eval(x, ubar.data(), t));
  }
  return acc;
}

namespace {

template <typename IncumbentField, typename IncumbentCost>
double eta_impl(const Problem& p, const ValueField& v, const DensityGrid& rho,
                double t, const Vec& ubar, IncumbentField&& f_at,
                IncumbentCost&& phi_at) {
  int j = v.mesh.index_of(t, "eta");
  SliceContext ctx(v.grid, v.slice(j), rho.slice(j), p.n);
  double x[kMaxDim], f_inc[kMaxDim];
  double acc = 0.0;
  for (std::size_t k = 0; k < ctx.g.node_count(); ++k) {
    double w = ctx.g.weight(k) * ctx.rho_slice[k];
    if (w == 0.0) continue;
    ctx.g.node(k, x);
    f_at(x, f_inc);
    double diff = 0.0;
    for (int a = 0; a < p.n; ++a)
      diff += (p.f.components[a].eval(x, ubar.data(), t) - f_inc[a]) * ctx.grad[a][k];
    diff += p.phi.expr.eval(x, ubar.data(), t) - phi_at(x);
    acc += w * diff;
  }
  return acc;
}

}  // namespace

double eta(const Problem& p, const ValueField& v, const DensityGrid& rho,
           double t, const Vec& ubar, const Vec& uhat_t) {
  return eta_impl(
      p, v, rho, t, ubar,
      [&](const double* x, double* out) {
        eval_vector_field_into(p, x, uhat_t.data(), t, out);
      },
      [&](const double* x) { return p.phi.expr.eval(x, uhat_t.data(), t); });
}

double eta(const Problem& p, const ControlView& u, const ValueField& v,
           const DensityGrid& rho, double t, const Vec& ubar) {
  int interval = u.interval_of(t);
  return eta_impl(
      p, v, rho, t, ubar,
      [&](const double* x, double* out) { u.field(interval, x, t, out); },
      [&](const double* x) { return u.running_cost(interval, x, t); });
}

OptimalityReport check_maximum_condition(const Problem& p, const ControlView& u,
                                         double tol, int delta_grid,
                                         int substeps, Exec exec) {
  OptimalityReport rep;
  rep.tol = tol;
  rep.delta_grid = delta_grid;

  ValueField v = apply_L(p, u, 0.0, substeps, exec);
  DensityGrid rho =
      apply_Lstar(p, u, DensitySource::from_spec(p.rho0), 0.0, substeps, exec);
  HamiltonianEvaluator ham(p, u, v, rho);

  std::vector<Vec> lattice = p.delta.lattice(delta_grid);
  const int points = v.mesh.points();
  rep.times.resize(points);
  rep.H_incumbent.resize(points);
  rep.H_best.resize(points);
  rep.eta_min.resize(points);
  std::vector<Vec> best_u(points);

  parallel::for_each_index(exec, points, [&](std::ptrdiff_t j) {
    double h_inc = ham.H_incumbent(static_cast<int>(j));
    double h_best = h_inc;
    Vec arg;  // empty = incumbent itself
    for (const Vec& cand : lattice) {
      double h = ham.H(static_cast<int>(j), cand.data());
      if (h > h_best) {
        h_best = h;
        arg = cand;
      }
    }
    rep.times[j] = v.mesh.time(static_cast<int>(j));
    rep.H_incumbent[j] = h_inc;
    rep.H_best[j] = h_best;
    rep.eta_min[j] = h_inc - h_best;
    best_u[j] = std::move(arg);
  });

  rep.worst = 0.0;
  int violations = 0;
  for (int j = 0; j < points; ++j) {
    if (rep.eta_min[j] < rep.worst) {
      rep.worst = rep.eta_min[j];
      rep.worst_time = rep.times[j];
      rep.worst_u = best_u[j];
    }
    if (rep.eta_min[j] < -tol) ++violations;
  }
  rep.violation_fraction = static_cast<double>(violations) / points;
  rep.satisfied = violations == 0;
  return rep;
}

NeedleCheck needle_derivative_fd(const Problem& p, const ControlSignal& u_hat,
                                 double t_bar, const Vec& u_bar,
                                 const std::vector<double>& eps, int substeps,
                                 Exec exec) {
  NeedleCheck chk;
  chk.t_bar = t_bar;
  chk.u_bar = u_bar;
  chk.eps = eps;

  TimeMesh mesh = p.mesh();
  int js = mesh.index_of(t_bar, "needle t_bar");
  if (!p.delta.contains(u_bar))
    throw ConfigError("needle control value outside Delta");
  for (std::size_t i = 0; i + 1 < eps.size(); ++i)
    if (!(eps[i] > eps[i + 1]))
      throw ConfigError("needle eps values must be strictly decreasing");

  // A needle of width eps perturbs v(., 0) only in spatial bands of width
  // about eps * |f|, and for indicator costs the perturbed value field jumps
  // at the band edges. Node-sampling such a jump costs O(h) on Phi and
  // O(h / eps) on the quotient, so the ensemble costs are evaluated on a
  // refined grid copy with spacing <= min(eps)/256 per axis, subject to a
  // 2^21 total-node budget (higher dimensions get whatever the budget
  // allows).
  Problem fine = p;
  double eps_min = eps.back();
  for (int a = 0; a < p.n; ++a) {
    double h = p.domain.length(a) / (p.grid[a] - 1);
    int scale = 1;
    while (h / scale > eps_min / 256.0 && scale < 512) scale *= 2;
    while (scale > 1) {
      double nodes = 1.0;
      for (int b = 0; b < p.n; ++b)
        nodes *= b == a ? double(p.grid[a] - 1) * scale + 1 : fine.grid[b];
      if (nodes <= double(1 << 21)) break;
      scale /= 2;
    }
    fine.grid[a] = (p.grid[a] - 1) * scale + 1;
  }
  finalize_problem(fine);

  ControlView base(p, u_hat);
  ControlView base_fine(fine, u_hat);
  double phi_hat = ensemble_cost(fine, base_fine, substeps, exec);

  ValueField v = apply_L(p, base, 0.0, substeps, exec);
  DensityGrid rho =
      apply_Lstar(p, base, DensitySource::from_spec(p.rho0), 0.0, substeps, exec);
  chk.eta = eta(p, base, v, rho, t_bar, u_bar);

  for (double e : eps) {
    double kf = e / mesh.dt();
    int k = static_cast<int>(std::lround(kf));
    if (k < 1 || std::fabs(kf - k) > 1e-9)
      throw MeshError("needle eps is not a multiple of the mesh step");
    if (js + k > mesh.steps)
      throw MeshError("needle interval extends past the horizon");
    ControlSignal u_eps = u_hat;
    for (int i = js; i < js + k; ++i) u_eps.values[i] = u_bar;
    ControlView pert(fine, u_eps);
    double phi_eps = ensemble_cost(fine, pert, substeps, exec);
    chk.quotients.push_back((phi_eps - phi_hat) / e);
  }
  return chk;
}

void CostateField::at(int j, const double* x, double* out) const {
  const std::size_t nodes = grid.node_count();
  // components layout: ((j * nodes + k) * dim + a)
  // Interpolate each axis separately via a strided copy.
  std::vector<double> tmp(nodes);
  for (int a = 0; a < dim; ++a) {
    for (std::size_t k = 0; k < nodes; ++k)
      tmp[k] = components[(static_cast<std::size_t>(j) * nodes + k) * dim + a];
    out[a] = grid.interpolate(tmp, x);
  }
}

CostateField adjoint_costate_field(const ValueField& v) {
  CostateField psi;
  psi.grid = v.grid;
  psi.mesh = v.mesh;
  psi.dim = v.grid.dim();
  const std::size_t nodes = v.grid.node_count();
  psi.components.resize(static_cast<std::size_t>(v.mesh.points()) * nodes * psi.dim);
  std::vector<double> grad;
  for (int j = 0; j < v.mesh.points(); ++j)
    for (int a = 0; a < psi.dim; ++a) {
      gradient_slice(v.grid, v.slice(j), a, grad);
      for (std::size_t k = 0; k < nodes; ++k)
        psi.components[(static_cast<std::size_t>(j) * nodes + k) * psi.dim + a] =
            -grad[k];
    }
  return psi;
}

void write_h_table_csv(std::ostream& os, const Problem& p, const ControlView& u,
                       const ValueField& v, const DensityGrid& rho,
                       int delta_grid) {
  HamiltonianEvaluator ham(p, u, v, rho);
  std::vector<Vec> lattice = p.delta.lattice(delta_grid);
  os << "t";
  for (int a = 0; a < p.m; ++a) os << ",u" << a + 1;
  os << ",H\n";
  char buf[40];
  for (int j = 0; j < v.mesh.points(); ++j) {
    for (const Vec& cand : lattice) {
      std::snprintf(buf, sizeof(buf), "%.17g", v.mesh.time(j));
      os << buf;
      for (double c : cand) {
        std::snprintf(buf, sizeof(buf), "%.17g", c);
        os << ',' << buf;
      }
      std::snprintf(buf, sizeof(buf), "%.17g", ham.H(j, cand.data()));
      os << ',' << buf << '\n';
    }
  }
}

}  // namespace eoc
