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

#include "eoc/flow.hpp"

#include <algorithm>
#include <cmath>

#include "eoc/errors.hpp"

namespace eoc {

// --- ControlView ------------------------------------------------------------

ControlView::ControlView(const Problem& p, const ControlSignal& u)
    : p_(&p), phi_(&p.phi), ordinary_(&u), mesh_(p.mesh()) {}

ControlView::ControlView(const Problem& p, const RelaxedControl& u)
    : p_(&p), phi_(&p.phi), relaxed_(&u), mesh_(p.mesh()) {}

ControlView ControlView::uncontrolled(const Problem& p) {
  if (p.m != 0)
    throw ConfigError("problem has controls; an explicit control is required");
  ControlView v;
  v.p_ = &p;
  v.phi_ = &p.phi;
  v.mesh_ = p.mesh();
  return v;
}

ControlView ControlView::with_cost(const CostFieldSpec& phi) const {
  ControlView v = *this;
  v.phi_ = &phi;
  return v;
}

void ControlView::field(int k, const double* x, double t, double* out) const {
  if (relaxed_) {
    const auto& iv = relaxed_->intervals[k];
    relax_vector_field_into(*p_, x, iv.atoms, iv.weights, t, out);
    return;
  }
  const double* u = ordinary_ ? ordinary_->values[k].data() : nullptr;
  eval_vector_field_into(*p_, x, u, t, out);
}

double ControlView::running_cost(int k, const double* x, double t) const {
  if (relaxed_) {
    const auto& iv = relaxed_->intervals[k];
    double c = 0.0;
    for (std::size_t a = 0; a < iv.atoms.size(); ++a)
      c += iv.weights[a] * phi_->expr.eval(x, iv.atoms[a].data(), t);
    return c;
  }
  const double* u = ordinary_ ? ordinary_->values[k].data() : nullptr;
  return phi_->expr.eval(x, u, t);
}

double ControlView::divergence(int k, const double* x, double t) const {
  if (relaxed_) {
    const auto& iv = relaxed_->intervals[k];
    double d = 0.0;
    for (std::size_t a = 0; a < iv.atoms.size(); ++a)
      d += iv.weights[a] * eval_divergence(*p_, x, iv.atoms[a].data(), t);
    return d;
  }
  const double* u = ordinary_ ? ordinary_->values[k].data() : nullptr;
  return eval_divergence(*p_, x, u, t);
}

// --- stepping internals -----------------------------------------------------

namespace {

constexpr double kInflate = 2.0;

// One RK4 step; k1 must hold f(y, t) on entry. When the field depends on
// neither x nor t it is constant over the step and the stage evaluations
// collapse.
inline void rk4_step(const ControlView& u, int k, int n, bool field_static,
                     const double* y, double t, double h, const double* k1,
                     double* ynew) {
  if (field_static) {
    for (int i = 0; i < n; ++i) ynew[i] = y[i] + h * k1[i];
    return;
  }
  double k2[kMaxDim], k3[kMaxDim], k4[kMaxDim], yt[kMaxDim];
  double half = 0.5 * h;
  for (int i = 0; i < n; ++i) yt[i] = y[i] + half * k1[i];
  u.field(k, yt, t + half, k2);
  for (int i = 0; i < n; ++i) yt[i] = y[i] + half * k2[i];
  u.field(k, yt, t + half, k3);
  for (int i = 0; i < n; ++i) yt[i] = y[i] + h * k3[i];
  u.field(k, yt, t + h, k4);
  double sixth = h / 6.0;
  for (int i = 0; i < n; ++i)
    ynew[i] = y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

inline void check_inside(const Problem& p, const double* y, double t) {
  if (!p.domain.contains_inflated(y, kInflate))
    throw EscapeError("trajectory left the safety box", t);
}

// Midpoint-rule cost over one step [t0, t0+h] with 4x oversampling; midpoint
// states from the cubic Hermite interpolant through (y0, f0) and (y1, f1).
inline double segment_cost(const ControlView& u, int k, int n, const double* y0,
                           const double* f0, const double* y1, const double* f1,
                           double t0, double h) {
  double acc = 0.0;
  double ym[kMaxDim];
  for (int q = 0; q < 4; ++q) {
    double th = (q + 0.5) * 0.25;
    double t2 = th * th, t3 = t2 * th;
    double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    double h10 = t3 - 2.0 * t2 + th;
    double h01 = -2.0 * t3 + 3.0 * t2;
    double h11 = t3 - t2;
    for (int i = 0; i < n; ++i)
      ym[i] = h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i];
    acc += u.running_cost(k, ym, t0 + th * h);
  }
  return acc * (h * 0.25);
}

// Forward segment decomposition of [a, b]: pieces within single control
// intervals, boundaries exactly on the mesh.
template <typename F>
void for_each_segment_fwd(const TimeMesh& mesh, double a, double b, F&& fn) {
  const double eps = 1e-12 * std::max(1.0, mesh.horizon);
  while (a < b - eps) {
    int k = mesh.interval_of(a + eps);
    double end = std::min(b, mesh.time(k + 1));
    fn(a, end, k);
    a = end;
  }
}

template <typename F>
void for_each_segment_bwd(const TimeMesh& mesh, double top, double bottom, F&& fn) {
  const double eps = 1e-12 * std::max(1.0, mesh.horizon);
  while (top > bottom + eps) {
    // Interval whose left endpoint lies strictly below `top`; plain
    // interval_of would snap a mesh-aligned `top` back to its own interval
    // and stall the walk.
    int k = static_cast<int>(std::ceil(top / mesh.dt() - 1e-9)) - 1;
    if (k < 0) k = 0;
    if (k > mesh.steps - 1) k = mesh.steps - 1;
    double end = std::max(bottom, mesh.time(k));
    fn(top, end, k);
    top = end;
  }
}

void check_span(const Problem& p, double s, double t_end) {
  const double eps = 1e-9 * std::max(1.0, p.horizon);
  if (s < -eps || t_end > p.horizon + eps || s > t_end + eps)
    throw Error("integration span must satisfy 0 <= s <= t_end <= T");
}

}  // namespace

// --- public integrators -----------------------------------------------------

Trajectory integrate_trajectory(const Problem& p, const ControlView& u,
                                const Vec& x, double s, double t_end,
                                int substeps) {
  check_span(p, s, t_end);
  if (substeps < 1) throw Error("substeps must be >= 1");
  if (static_cast<int>(x.size()) != p.n) throw Error("state dimension mismatch");
  const bool field_static = !p.f.uses_state() && !p.f.uses_time();
  const TimeMesh mesh = p.mesh();

  Trajectory traj;
  traj.dim = p.n;
  traj.times.push_back(s);
  traj.states.insert(traj.states.end(), x.begin(), x.end());
  check_inside(p, x.data(), s);

  double y[kMaxDim], ynew[kMaxDim], k1[kMaxDim];
  std::copy(x.begin(), x.end(), y);
  for_each_segment_fwd(mesh, s, t_end, [&](double a, double b, int k) {
    double h = (b - a) / substeps;
    for (int q = 0; q < substeps; ++q) {
      double t0 = a + q * h;
      double t1 = q == substeps - 1 ? b : a + (q + 1) * h;
      u.field(k, y, t0, k1);
      rk4_step(u, k, p.n, field_static, y, t0, t1 - t0, k1, ynew);
      check_inside(p, ynew, t1);
      std::copy(ynew, ynew + p.n, y);
      traj.times.push_back(t1);
      traj.states.insert(traj.states.end(), y, y + p.n);
    }
  });
  return traj;
}

Trajectory integrate_backward(const Problem& p, const ControlView& u,
                              const Vec& x, double t, double s, int substeps) {
  check_span(p, s, t);
  if (substeps < 1) throw Error("substeps must be >= 1");
  const bool field_static = !p.f.uses_state() && !p.f.uses_time();
  const TimeMesh mesh = p.mesh();

  std::vector<double> times{t};
  std::vector<double> states(x.begin(), x.end());
  check_inside(p, x.data(), t);

  double y[kMaxDim], ynew[kMaxDim], k1[kMaxDim];
  std::copy(x.begin(), x.end(), y);
  for_each_segment_bwd(mesh, t, s, [&](double top, double bottom, int k) {
    double h = (top - bottom) / substeps;
    for (int q = 0; q < substeps; ++q) {
      double t0 = top - q * h;
      double t1 = q == substeps - 1 ? bottom : top - (q + 1) * h;
      u.field(k, y, t0, k1);
      rk4_step(u, k, p.n, field_static, y, t0, t1 - t0, k1, ynew);
      check_inside(p, ynew, t1);
      std::copy(ynew, ynew + p.n, y);
      times.push_back(t1);
      states.insert(states.end(), y, y + p.n);
    }
  });

  Trajectory traj;
  traj.dim = p.n;
  traj.times.assign(times.rbegin(), times.rend());
  traj.states.resize(states.size());
  std::size_t count = times.size();
  for (std::size_t i = 0; i < count; ++i)
    std::copy(states.begin() + (count - 1 - i) * p.n,
              states.begin() + (count - i) * p.n,
              traj.states.begin() + i * p.n);
  return traj;
}

double divergence_integral(const Problem& p, const ControlView& u,
                           const Trajectory& traj) {
  const TimeMesh mesh = p.mesh();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    double t0 = traj.times[i], t1 = traj.times[i + 1];
    int k = mesh.interval_of(0.5 * (t0 + t1));
    double g0 = u.divergence(k, traj.state(i), t0);
    double g1 = u.divergence(k, traj.state(i + 1), t1);
    acc += 0.5 * (g0 + g1) * (t1 - t0);
  }
  return acc;
}

double value_along_trajectory(const Problem& p, const ControlView& u,
                              const Trajectory& traj) {
  const TimeMesh mesh = p.mesh();
  double f0[kMaxDim], f1[kMaxDim];
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    double t0 = traj.times[i], t1 = traj.times[i + 1];
    int k = mesh.interval_of(0.5 * (t0 + t1));
    u.field(k, traj.state(i), t0, f0);
    u.field(k, traj.state(i + 1), t1, f1);
    acc += segment_cost(u, k, p.n, traj.state(i), f0, traj.state(i + 1), f1,
                        t0, t1 - t0);
  }
  if (!std::isfinite(acc))
    throw EvalError("running-cost integral is non-finite");
  return acc;
}

double trajectory_cost(const Problem& p, const ControlView& u, const double* x,
                       double s, int substeps) {
  const bool field_static = !p.f.uses_state() && !p.f.uses_time();
  const TimeMesh mesh = p.mesh();
  check_inside(p, x, s);

  double y[kMaxDim], ynew[kMaxDim], k1[kMaxDim], fend[kMaxDim];
  for (int i = 0; i < p.n; ++i) y[i] = x[i];
  double acc = 0.0;
  for_each_segment_fwd(mesh, s, p.horizon, [&](double a, double b, int k) {
    double h = (b - a) / substeps;
    bool have_k1 = false;
    for (int q = 0; q < substeps; ++q) {
      double t0 = a + q * h;
      double t1 = q == substeps - 1 ? b : a + (q + 1) * h;
      if (!have_k1) u.field(k, y, t0, k1);
      rk4_step(u, k, p.n, field_static, y, t0, t1 - t0, k1, ynew);
      check_inside(p, ynew, t1);
      if (field_static)
        std::copy(k1, k1 + p.n, fend);  // f constant over the step
      else
        u.field(k, ynew, t1, fend);
      acc += segment_cost(u, k, p.n, y, k1, ynew, fend, t0, t1 - t0);
      std::copy(ynew, ynew + p.n, y);
      std::copy(fend, fend + p.n, k1);  // next step's k1, same interval
      have_k1 = true;
    }
  });
  if (!std::isfinite(acc))
    throw EvalError("running-cost integral is non-finite");
  return acc;
}

void backward_characteristic(const Problem& p, const ControlView& u,
                             const double* x, double t, double s, int substeps,
                             double* endpoint, double* div_integral,
                             bool* exited) {
  const bool field_static = !p.f.uses_state() && !p.f.uses_time();
  const TimeMesh mesh = p.mesh();
  if (exited) *exited = false;

  double y[kMaxDim], ynew[kMaxDim], k1[kMaxDim];
  for (int i = 0; i < p.n; ++i) y[i] = x[i];
  double acc = 0.0;
  bool gone = false;
  for_each_segment_bwd(mesh, t, s, [&](double top, double bottom, int k) {
    if (gone) return;
    double h = (top - bottom) / substeps;
    bool have_g = false;
    double g_at_y = 0.0;
    for (int q = 0; q < substeps; ++q) {
      double t0 = top - q * h;
      double t1 = q == substeps - 1 ? bottom : top - (q + 1) * h;
      if (!have_g) g_at_y = u.divergence(k, y, t0);
      u.field(k, y, t0, k1);
      rk4_step(u, k, p.n, field_static, y, t0, t1 - t0, k1, ynew);
      if (!p.domain.contains_inflated(ynew, kInflate)) {
        if (!exited) throw EscapeError("backward characteristic left the safety box", t1);
        gone = true;
        return;
      }
      double g_new = u.divergence(k, ynew, t1);
      acc += 0.5 * (g_at_y + g_new) * (t0 - t1);
      g_at_y = g_new;
      have_g = true;
      std::copy(ynew, ynew + p.n, y);
    }
  });
  if (gone) {
    *exited = true;
    return;
  }
  for (int i = 0; i < p.n; ++i) endpoint[i] = y[i];
  *div_integral = acc;
}

void integrate_record(const Problem& p, const ControlView& u, const double* x,
                      const std::vector<int>& record_indices, int substeps,
                      double* states_out) {
  const bool field_static = !p.f.uses_state() && !p.f.uses_time();
  const TimeMesh mesh = p.mesh();
  check_inside(p, x, 0.0);

  double y[kMaxDim], ynew[kMaxDim], k1[kMaxDim];
  for (int i = 0; i < p.n; ++i) y[i] = x[i];
  std::size_t next = 0;
  if (next < record_indices.size() && record_indices[next] == 0) {
    std::copy(y, y + p.n, states_out);
    ++next;
  }
  for (int j = 0; j < mesh.steps && next < record_indices.size(); ++j) {
    double a = mesh.time(j), b = mesh.time(j + 1);
    double h = (b - a) / substeps;
    for (int q = 0; q < substeps; ++q) {
      double t0 = a + q * h;
      double t1 = q == substeps - 1 ? b : a + (q + 1) * h;
      u.field(j, y, t0, k1);
      rk4_step(u, j, p.n, field_static, y, t0, t1 - t0, k1, ynew);
      check_inside(p, ynew, t1);
      std::copy(ynew, ynew + p.n, y);
    }
    if (record_indices[next] == j + 1) {
      std::copy(y, y + p.n, states_out + next * p.n);
      ++next;
    }
  }
}

FlowMapBatch flow_map_batch(const Problem& p, const ControlView& u,
                            const std::vector<Vec>& sources, double s,
                            double t_target, int substeps, Exec exec) {
  FlowMapBatch batch;
  batch.dim = p.n;
  batch.sources.resize(sources.size() * p.n);
  batch.images.resize(sources.size() * p.n);
  batch.div_integral.resize(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i)
    std::copy(sources[i].begin(), sources[i].end(),
              batch.sources.begin() + i * p.n);

  const bool backward = t_target < s;
  parallel::for_each_index(exec, static_cast<std::ptrdiff_t>(sources.size()),
                           [&](std::ptrdiff_t i) {
    const double* x0 = batch.sources.data() + i * p.n;
    double* img = batch.images.data() + i * p.n;
    if (backward) {
      backward_characteristic(p, u, x0, s, t_target, substeps, img,
                              &batch.div_integral[i], nullptr);
    } else {
      // Forward characteristic with the divergence accumulated along it:
      // reuse the trajectory integrator at full storage cost (batch sizes
      // are small relative to the transport kernels).
      Trajectory traj = integrate_trajectory(p, u, Vec(x0, x0 + p.n), s,
                                             t_target, substeps);
      std::copy(traj.back(), traj.back() + p.n, img);
      batch.div_integral[i] = divergence_integral(p, u, traj);
    }
  });
  return batch;
}

}  // namespace eoc
