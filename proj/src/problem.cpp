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

#include "eoc/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eoc/errors.hpp"
#include "eoc/rng.hpp"

namespace eoc {

using nlohmann::json;

// --- ControlSet -------------------------------------------------------------

int ControlSet::dim() const {
  return kind == Kind::kBox ? static_cast<int>(lo.size())
                            : static_cast<int>(points.empty() ? 0 : points[0].size());
}

bool ControlSet::contains(const Vec& u, double tol) const {
  if (static_cast<int>(u.size()) != dim()) return false;
  if (kind == Kind::kBox) {
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u[i] < lo[i] - tol || u[i] > hi[i] + tol) return false;
    return true;
  }
  for (const Vec& p : points) {
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      d = std::max(d, std::fabs(u[i] - p[i]));
    if (d <= tol) return true;
  }
  return false;
}

Vec ControlSet::default_point() const {
  if (kind == Kind::kFinite) return points.at(0);
  Vec u(lo.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.5 * (lo[i] + hi[i]);
  return u;
}

std::vector<Vec> ControlSet::lattice(int per_axis) const {
  if (kind == Kind::kFinite) return points;
  int d = dim();
  if (d == 0) return {Vec{}};
  if (per_axis < 1) per_axis = 1;
  std::vector<Vec> out;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(per_axis);
  out.reserve(total);
  std::vector<int> idx(d, 0);
  Vec u(d);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t r = k;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(r % per_axis);
      r /= per_axis;
    }
    for (int a = 0; a < d; ++a)
      u[a] = per_axis == 1 ? 0.5 * (lo[a] + hi[a])
                           : lo[a] + idx[a] * (hi[a] - lo[a]) / (per_axis - 1);
    out.push_back(u);
  }
  return out;
}

// --- VectorFieldSpec --------------------------------------------------------

bool VectorFieldSpec::uses_state() const {
  for (const auto& c : components)
    if (c.uses_state()) return true;
  return false;
}

bool VectorFieldSpec::uses_time() const {
  for (const auto& c : components)
    if (c.uses_time()) return true;
  return false;
}

// --- controls ---------------------------------------------------------------

ControlSignal ControlSignal::constant(const Problem& p, Vec value) {
  ControlSignal u;
  u.values.assign(static_cast<std::size_t>(p.time_steps), std::move(value));
  return u;
}

RelaxedControl RelaxedControl::from_ordinary(const ControlSignal& u) {
  RelaxedControl r;
  r.intervals.reserve(u.values.size());
  for (const Vec& v : u.values)
    r.intervals.push_back({{v}, {1.0}});
  return r;
}

void validate_control(const Problem& p, const ControlSignal& u) {
  if (static_cast<int>(u.values.size()) != p.time_steps)
    throw ConfigError("control has " + std::to_string(u.values.size()) +
                      " intervals, expected " + std::to_string(p.time_steps));
  for (const Vec& v : u.values)
    if (!p.delta.contains(v))
      throw ConfigError("control value outside the admissible set Delta");
}

void validate_control(const Problem& p, const RelaxedControl& u) {
  if (static_cast<int>(u.intervals.size()) != p.time_steps)
    throw ConfigError("relaxed control has " + std::to_string(u.intervals.size()) +
                      " intervals, expected " + std::to_string(p.time_steps));
  for (const auto& iv : u.intervals) {
    if (iv.atoms.size() != iv.weights.size() || iv.atoms.empty())
      throw ConfigError("relaxed control interval with mismatched atoms/weights");
    double s = 0.0;
    for (double w : iv.weights) {
      if (w < 0.0) throw ConfigError("relaxed control has a negative weight");
      s += w;
    }
    if (std::fabs(s - 1.0) > 1e-12)
      throw ConfigError("relaxed control weights sum to " + std::to_string(s) +
                        ", expected 1");
    for (const Vec& a : iv.atoms)
      if (!p.delta.contains(a))
        throw ConfigError("relaxed control atom outside the admissible set Delta");
  }
}

ControlSignal default_control(const Problem& p) {
  return ControlSignal::constant(p, p.delta.default_point());
}

// --- field evaluation -------------------------------------------------------

void eval_vector_field_into(const Problem& p, const double* x, const double* u,
                            double t, double* out) {
  for (int i = 0; i < p.n; ++i) {
    out[i] = p.f.components[i].eval(x, u, t);
    if (!std::isfinite(out[i]))
      throw EvalError("vector field component " + std::to_string(i + 1) +
                      " evaluated to a non-finite value");
  }
}

Vec eval_vector_field(const Problem& p, const double* x, const double* u, double t) {
  Vec out(p.n);
  eval_vector_field_into(p, x, u, t, out.data());
  return out;
}

double eval_divergence(const Problem& p, const double* x, const double* u,
                       double t, double h_div) {
  if (p.f.divergence) {
    double d = p.f.divergence->eval(x, u, t);
    if (!std::isfinite(d))
      throw EvalError("divergence expression evaluated to a non-finite value");
    return d;
  }
  double h = h_div > 0.0 ? h_div : p.h_div();
  double xs[kMaxDim];
  for (int i = 0; i < p.n; ++i) xs[i] = x[i];
  double div = 0.0;
  for (int i = 0; i < p.n; ++i) {
    xs[i] = x[i] + h;
    double fp = p.f.components[i].eval(xs, u, t);
    xs[i] = x[i] - h;
    double fm = p.f.components[i].eval(xs, u, t);
    xs[i] = x[i];
    div += (fp - fm) / (2.0 * h);
  }
  if (!std::isfinite(div))
    throw EvalError("finite-difference divergence is non-finite");
  return div;
}

void relax_vector_field_into(const Problem& p, const double* x,
                             const std::vector<Vec>& atoms, const Vec& weights,
                             double t, double* out) {
  double tmp[kMaxDim];
  for (int i = 0; i < p.n; ++i) out[i] = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    eval_vector_field_into(p, x, atoms[k].data(), t, tmp);
    for (int i = 0; i < p.n; ++i) out[i] += weights[k] * tmp[i];
  }
}

Vec relax_vector_field(const Problem& p, const double* x,
                       const std::vector<Vec>& atoms, const Vec& weights,
                       double t) {
  Vec out(p.n);
  relax_vector_field_into(p, x, atoms, weights, t, out.data());
  return out;
}

// --- validation -------------------------------------------------------------

namespace {

bool expr_has_kink(const FieldExpr& e) {
  std::string s = e.print();
  return s.find("abs(") != std::string::npos ||
         s.find("sign(") != std::string::npos ||
         s.find("step(") != std::string::npos;
}

Vec sample_in_box(Rng& rng, const Box& b) {
  Vec x(b.dim());
  for (int i = 0; i < b.dim(); ++i) x[i] = rng.uniform(b.lo[i], b.hi[i]);
  return x;
}

Vec sample_in_delta(Rng& rng, const ControlSet& d) {
  if (d.kind == ControlSet::Kind::kFinite) {
    std::size_t i =
        static_cast<std::size_t>(rng.uniform01() * static_cast<double>(d.points.size()));
    if (i >= d.points.size()) i = d.points.size() - 1;
    return d.points[i];
  }
  Vec u(d.dim());
  for (int i = 0; i < d.dim(); ++i) u[i] = rng.uniform(d.lo[i], d.hi[i]);
  return u;
}

double inf_dist(const Vec& a, const Vec& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

}  // namespace

ValidationReport validate_problem(const Problem& p, int samples, std::uint64_t seed) {
  ValidationReport rep;
  rep.samples = samples;
  rep.seed = seed;
  Rng rng(mix_seed(seed, 0x7a11d0));

  double max_div_err = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec x = sample_in_box(rng, p.domain);
    Vec x2 = sample_in_box(rng, p.domain);
    Vec u = sample_in_delta(rng, p.delta);
    Vec u2 = sample_in_delta(rng, p.delta);
    double t = rng.uniform(0.0, p.horizon);

    Vec fx = eval_vector_field(p, x.data(), u.data(), t);
    Vec fx2 = eval_vector_field(p, x2.data(), u.data(), t);
    double dx = inf_dist(x, x2);
    if (dx > 1e-12)
      rep.lipschitz_x = std::max(rep.lipschitz_x, inf_dist(fx, fx2) / dx);
    for (double v : fx) rep.sup_f = std::max(rep.sup_f, std::fabs(v));

    if (p.m > 0) {
      Vec fu2 = eval_vector_field(p, x.data(), u2.data(), t);
      double du = inf_dist(u, u2);
      if (du > 1e-12)
        rep.lipschitz_u = std::max(rep.lipschitz_u, inf_dist(fx, fu2) / du);
    }

    if (p.f.divergence) {
      double da = p.f.divergence->eval(x.data(), u.data(), t);
      // Compare against the finite-difference route.
      Problem q = p;
      q.f.divergence.reset();
      double dn = eval_divergence(q, x.data(), u.data(), t);
      max_div_err = std::max(max_div_err, std::fabs(da - dn));
    }
  }
  if (p.f.divergence) {
    rep.divergence_discrepancy = max_div_err;
    double scale = std::max(1.0, rep.sup_f);
    if (max_div_err > 1e-4 * scale)
      rep.warnings.push_back("analytic divergence differs from finite differences by " +
                             std::to_string(max_div_err));
  }

  for (const auto& c : p.f.components)
    if (expr_has_kink(c)) {
      rep.warnings.push_back(
          "vector field uses abs/sign/step; second x-derivatives may not exist");
      break;
    }

  // K0: time integral of ||phi(., u, t)||_{L2(D)} for a few constant controls.
  SpatialGrid grid = p.make_grid();
  std::vector<Vec> probes = p.delta.lattice(p.m > 0 ? 3 : 1);
  if (probes.size() > 9) probes.resize(9);
  TimeMesh mesh = p.mesh();
  std::vector<double> slice(grid.node_count());
  for (const Vec& u : probes) {
    double integral = 0.0;
    double prev = 0.0;
    for (int j = 0; j <= mesh.steps; ++j) {
      double t = mesh.time(j);
      double xbuf[kMaxDim];
      for (std::size_t k = 0; k < grid.node_count(); ++k) {
        grid.node(k, xbuf);
        slice[k] = p.phi.expr.eval(xbuf, u.data(), t);
      }
      double nrm = grid.l2_norm(slice);
      if (j > 0) integral += 0.5 * (prev + nrm) * mesh.dt();
      prev = nrm;
    }
    rep.k0_estimate = std::max(rep.k0_estimate, integral);
  }

  // rho0 should be negligible near the domain boundary; otherwise transport
  // outflow will eat visible mass.
  {
    double boundary_max = 0.0, interior_max = 0.0;
    double xbuf[kMaxDim];
    int idx[kMaxDim];
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      grid.unflatten(k, idx);
      bool boundary = false;
      for (int a = 0; a < grid.dim(); ++a)
        if (idx[a] == 0 || idx[a] == grid.count(a) - 1) boundary = true;
      grid.node(k, xbuf);
      double v = p.rho0.density(xbuf);
      (boundary ? boundary_max : interior_max) = std::max(
          boundary ? boundary_max : interior_max, v);
    }
    if (boundary_max > 1e-8 * std::max(interior_max, 1e-300))
      rep.warnings.push_back("initial density is not negligible at the domain boundary");
  }

  return rep;
}

// --- finalize / invariants --------------------------------------------------

void finalize_problem(Problem& p) {
  if (p.n < 1 || p.n > kMaxDim)
    throw ConfigError("state dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (p.m < 0 || p.m > kMaxDim)
    throw ConfigError("control dimension must be in [0, " + std::to_string(kMaxDim) + "]");
  if (!(p.horizon > 0.0)) throw ConfigError("horizon T must be positive");
  if (p.time_steps < 4) throw ConfigError("time_steps must be at least 4");
  if (p.domain.dim() != p.n) throw ConfigError("domain dimension does not match n");
  for (int a = 0; a < p.n; ++a)
    if (!(p.domain.length(a) > 0.0)) throw ConfigError("domain box is degenerate");
  if (static_cast<int>(p.grid.size()) != p.n)
    throw ConfigError("grid spec does not match n");
  for (int g : p.grid)
    if (g < 8) throw ConfigError("grid needs at least 8 nodes per axis");
  if (static_cast<int>(p.f.components.size()) != p.n)
    throw ConfigError("vector field must have n components");
  if (p.delta.dim() != p.m)
    throw ConfigError("control set dimension does not match m");
  if (p.delta.kind == ControlSet::Kind::kBox) {
    for (std::size_t i = 0; i < p.delta.lo.size(); ++i)
      if (!(p.delta.lo[i] <= p.delta.hi[i]))
        throw ConfigError("control box has lo > hi");
  } else {
    if (p.delta.points.empty()) throw ConfigError("finite control set is empty");
    for (std::size_t i = 0; i < p.delta.points.size(); ++i)
      for (std::size_t j = i + 1; j < p.delta.points.size(); ++j)
        if (inf_dist(p.delta.points[i], p.delta.points[j]) == 0.0)
          throw ConfigError("finite control set has duplicate points");
  }
  if (!p.f.jacobian.empty()) {
    if (static_cast<int>(p.f.jacobian.size()) != p.n)
      throw ConfigError("jacobian must be an n x n matrix of expressions");
    for (const auto& row : p.f.jacobian)
      if (static_cast<int>(row.size()) != p.n)
        throw ConfigError("jacobian must be an n x n matrix of expressions");
  }

  // Normalize rho0 on the problem grid.
  SpatialGrid grid = p.make_grid();
  double xbuf[kMaxDim];
  double total = 0.0;
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    grid.node(k, xbuf);
    double v = p.rho0.expr.eval(xbuf, nullptr, 0.0);
    if (!std::isfinite(v) || v < 0.0)
      throw ConfigError("initial density is negative or non-finite at a grid node");
    total += grid.weight(k) * v;
  }
  if (!(total > 0.0)) throw ConfigError("initial density has zero mass on the grid");
  p.rho0.normalization = 1.0 / total;
}

// --- catalog ----------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// exp(-0.5*((x1-m1)/s1)^2 - ...) as an expression string.
std::string gaussian_expr(const GaussianSpec& g) {
  std::string s = "exp(";
  for (std::size_t i = 0; i < g.mean.size(); ++i) {
    if (i) s += " ";
    s += "-0.5*((x" + std::to_string(i + 1) + " - " + num(g.mean[i]) + ")/" +
         num(g.sd[i]) + ")^2";
  }
  s += ")";
  return s;
}

InitialDensitySpec gaussian_density(int n, const GaussianSpec& g) {
  InitialDensitySpec d;
  d.gaussian = g;
  d.expr = FieldExpr::parse(gaussian_expr(g), n, 0);
  return d;
}

}  // namespace

std::vector<std::string> catalog_names() {
  return {"linear1d", "bang1d", "rotation2d"};
}

Problem catalog_problem(const std::string& name) {
  Problem p;
  p.name = name;
  if (name == "linear1d") {
    p.n = 1;
    p.m = 0;
    p.f.components.push_back(FieldExpr::parse("-x1", 1, 0));
    p.f.divergence = FieldExpr::parse("-1", 1, 0);
    p.phi.expr = FieldExpr::parse("x1*step(5 - abs(x1))", 1, 0);
    p.phi.majorant = FieldExpr::parse("abs(x1)*step(5 - abs(x1))", 1, 0);
    p.rho0 = gaussian_density(1, {{1.0}, {0.25}});
    p.horizon = 1.0;
    p.domain = {{-5.0}, {5.0}};
    p.grid = {256};
    p.time_steps = 128;
  } else if (name == "bang1d") {
    p.n = 1;
    p.m = 1;
    p.f.components.push_back(FieldExpr::parse("u1", 1, 1));
    p.f.divergence = FieldExpr::parse("0", 1, 1);
    p.phi.expr = FieldExpr::parse("step(0.5 - abs(x1))", 1, 1);
    p.phi.majorant = FieldExpr::parse("step(0.5 - abs(x1))", 1, 1);
    // Mean offset from the slab center keeps the instance away from the
    // symmetric stationary point, so the necessary condition has teeth.
    p.rho0 = gaussian_density(1, {{0.3}, {0.5}});
    p.delta.kind = ControlSet::Kind::kBox;
    p.delta.lo = {-1.0};
    p.delta.hi = {1.0};
    p.horizon = 1.0;
    p.domain = {{-4.0}, {4.0}};
    p.grid = {256};
    p.time_steps = 64;
  } else if (name == "rotation2d") {
    p.n = 2;
    p.m = 0;
    p.f.components.push_back(FieldExpr::parse("-x2", 2, 0));
    p.f.components.push_back(FieldExpr::parse("x1", 2, 0));
    p.f.divergence = FieldExpr::parse("0", 2, 0);
    p.phi.expr = FieldExpr::parse("exp(-(x1 - 1)^2 - x2^2)", 2, 0);
    p.phi.majorant = FieldExpr::parse("exp(-(x1 - 1)^2 - x2^2)", 2, 0);
    p.rho0 = gaussian_density(2, {{1.0, 0.0}, {0.5, 0.5}});
    p.horizon = 1.5707963267948966;  // quarter turn
    p.domain = {{-4.0, -4.0}, {4.0, 4.0}};
    p.grid = {48, 48};
    p.time_steps = 64;
  } else {
    throw ConfigError("unknown catalog problem '" + name + "'");
  }
  finalize_problem(p);
  return p;
}

// --- JSON config ------------------------------------------------------------

namespace {

Vec to_vec(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Vec v;
  for (const auto& e : j) v.push_back(e.get<double>());
  return v;
}

ControlSignal control_signal_from_json(const Problem& p, const json& j) {
  ControlSignal u;
  if (j.contains("value")) {
    u = ControlSignal::constant(p, to_vec(j.at("value"), "control.value"));
  } else if (j.contains("values")) {
    for (const auto& e : j.at("values")) u.values.push_back(to_vec(e, "control.values[]"));
  } else {
    throw ConfigError("ordinary control needs 'value' or 'values'");
  }
  validate_control(p, u);
  return u;
}

RelaxedControl relaxed_from_json(const Problem& p, const json& j) {
  RelaxedControl u;
  for (const auto& e : j.at("intervals")) {
    RelaxedControl::Interval iv;
    for (const auto& a : e.at("atoms")) iv.atoms.push_back(to_vec(a, "atoms[]"));
    iv.weights = to_vec(e.at("weights"), "weights");
    u.intervals.push_back(std::move(iv));
  }
  validate_control(p, u);
  return u;
}

}  // namespace

LoadedConfig load_problem_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    Problem p;
    p.name = j.value("name", std::string("config"));
    p.n = j.at("n").get<int>();
    p.m = j.value("m", 0);
    p.horizon = j.at("T").get<double>();
    p.time_steps = j.at("time_steps").get<int>();
    p.domain.lo = to_vec(j.at("domain").at("lo"), "domain.lo");
    p.domain.hi = to_vec(j.at("domain").at("hi"), "domain.hi");
    for (const auto& g : j.at("grid")) p.grid.push_back(g.get<int>());

    const json& f = j.at("f");
    for (const auto& c : f.at("components"))
      p.f.components.push_back(FieldExpr::parse(c.get<std::string>(), p.n, p.m));
    if (f.contains("divergence"))
      p.f.divergence = FieldExpr::parse(f.at("divergence").get<std::string>(), p.n, p.m);
    if (f.contains("jacobian")) {
      for (const auto& row : f.at("jacobian")) {
        std::vector<FieldExpr> r;
        for (const auto& c : row)
          r.push_back(FieldExpr::parse(c.get<std::string>(), p.n, p.m));
        p.f.jacobian.push_back(std::move(r));
      }
    }

    const json& phi = j.at("phi");
    p.phi.expr = FieldExpr::parse(phi.at("expr").get<std::string>(), p.n, p.m);
    if (phi.contains("majorant"))
      p.phi.majorant = FieldExpr::parse(phi.at("majorant").get<std::string>(), p.n, 0);

    const json& rho = j.at("rho0");
    if (rho.contains("gaussian")) {
      GaussianSpec g;
      g.mean = to_vec(rho.at("gaussian").at("mean"), "rho0.gaussian.mean");
      g.sd = to_vec(rho.at("gaussian").at("sd"), "rho0.gaussian.sd");
      if (static_cast<int>(g.mean.size()) != p.n || g.mean.size() != g.sd.size())
        throw ConfigError("rho0.gaussian dimensions do not match n");
      p.rho0 = gaussian_density(p.n, g);
    } else {
      p.rho0.expr = FieldExpr::parse(rho.at("expr").get<std::string>(), p.n, 0);
    }

    if (p.m > 0 || j.contains("delta")) {
      const json& d = j.at("delta");
      std::string kind = d.at("kind").get<std::string>();
      if (kind == "box") {
        p.delta.kind = ControlSet::Kind::kBox;
        p.delta.lo = to_vec(d.at("lo"), "delta.lo");
        p.delta.hi = to_vec(d.at("hi"), "delta.hi");
      } else if (kind == "finite") {
        p.delta.kind = ControlSet::Kind::kFinite;
        for (const auto& e : d.at("points"))
          p.delta.points.push_back(to_vec(e, "delta.points[]"));
      } else {
        throw ConfigError("delta.kind must be 'box' or 'finite'");
      }
    }

    finalize_problem(p);

    LoadedConfig cfg;
    if (j.contains("control")) {
      const json& c = j.at("control");
      std::string kind = c.value("kind", std::string("constant"));
      if (kind == "relaxed")
        cfg.relaxed = relaxed_from_json(p, c);
      else
        cfg.control = control_signal_from_json(p, c);
    }
    cfg.problem = std::move(p);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
}

LoadedConfig load_problem_source(const std::string& source) {
  for (const std::string& name : catalog_names())
    if (source == name) {
      LoadedConfig cfg;
      cfg.problem = catalog_problem(name);
      return cfg;
    }
  std::ifstream in(source);
  if (!in) throw ConfigError("cannot open problem config '" + source + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_problem_json_text(ss.str());
}

}  // namespace eoc
