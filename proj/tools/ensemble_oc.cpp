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

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "eoc/errors.hpp"
#include "eoc/serialize.hpp"

namespace fs = std::filesystem;
using namespace eoc;

namespace {

struct CommonArgs {
  std::string problem;
  std::string out_dir = "out";
  double s = 0.0;
  long N = 100000;
  std::uint64_t seed = 0;
  double tol = 0.0;  // 0 = per-command default
  int threads = 0;
  int substeps = 1;
  std::vector<double> control;  // constant control override
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--problem", args->problem, "catalog name or config path")
      ->required();
  cmd->add_option("--out", args->out_dir, "output directory");
  cmd->add_option("--s", args->s, "start time (mesh-aligned)");
  cmd->add_option("--N", args->N, "Monte Carlo sample count");
  cmd->add_option("--seed", args->seed, "random seed");
  cmd->add_option("--tol", args->tol, "tolerance override");
  cmd->add_option("--threads", args->threads, "worker thread cap");
  cmd->add_option("--substeps", args->substeps, "RK4 steps per control interval");
  cmd->add_option("--control", args->control,
                  "constant control value (components)");
}

fs::path prepare_out(const CommonArgs& args) {
  fs::path dir(args.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + args.out_dir + "'");
  return dir;
}

void save_json(const fs::path& dir, const char* name, const OrderedJson& j) {
  write_text_file((dir / name).string(), j.dump(2) + "\n");
  std::printf("wrote %s\n", (dir / name).c_str());
}

// Builds the control view: --control beats the config's control; otherwise
// the problem default (midpoint of Delta / first finite point).
struct ControlHolder {
  ControlSignal signal;
  RelaxedControl relaxed;
  bool is_relaxed = false;

  static ControlHolder resolve(const LoadedConfig& cfg, const CommonArgs& args) {
    ControlHolder h;
    const Problem& p = cfg.problem;
    if (!args.control.empty()) {
      h.signal = ControlSignal::constant(p, args.control);
      validate_control(p, h.signal);
    } else if (cfg.relaxed) {
      h.relaxed = *cfg.relaxed;
      h.is_relaxed = true;
    } else if (cfg.control) {
      h.signal = *cfg.control;
    } else {
      h.signal = default_control(p);
    }
    return h;
  }

  ControlView view(const Problem& p) const {
    return is_relaxed ? ControlView(p, relaxed) : ControlView(p, signal);
  }
};

int cmd_validate(const CommonArgs& args) {
  LoadedConfig cfg = load_problem_source(args.problem);
  ValidationReport rep = validate_problem(cfg.problem, 512, args.seed);
  fs::path dir = prepare_out(args);
  save_json(dir, "validate.json", to_json(rep));
  std::printf("validate %s: %zu warning(s)\n", cfg.problem.name.c_str(),
              rep.warnings.size());
  for (const auto& w : rep.warnings) std::printf("  warning: %s\n", w.c_str());
  return 0;
}

int cmd_verify(const CommonArgs& args, const std::string& which,
               bool dump_fields) {
  LoadedConfig cfg = load_problem_source(args.problem);
  const Problem& p = cfg.problem;
  ControlHolder hold = ControlHolder::resolve(cfg, args);
  ControlView u = hold.view(p);
  fs::path dir = prepare_out(args);

  if (dump_fields) {
    ValueField v = apply_L(p, u, args.s, args.substeps);
    DensityGrid rho = apply_Lstar(p, u, DensitySource::from_spec(p.rho0), args.s,
                                  args.substeps);
    std::ostringstream vs, rs;
    write_field_csv(vs, v.grid, v.mesh, v.values, v.start_index);
    write_field_csv(rs, rho.grid, rho.mesh, rho.values, rho.start_index);
    write_text_file((dir / "value.csv").string(), vs.str());
    write_text_file((dir / "density.csv").string(), rs.str());
  }

  if (which == "duality") {
    DualityReport rep = verify_duality(p, u, args.s, args.substeps);
    save_json(dir, "duality.json", to_json(rep));
    double tol = args.tol > 0 ? args.tol : 1e-2;
    std::printf("duality: lhs=%.8g rhs=%.8g rel_gap=%.3g (tol %.3g)\n", rep.lhs,
                rep.rhs, rep.rel_gap, tol);
    return rep.rel_gap <= tol ? 0 : 1;
  }
  if (which == "estimate") {
    EstimateReport rep = verify_estimate(p, u, args.s, args.substeps);
    save_json(dir, "estimate.json", to_json(rep));
    std::printf("estimate: lhs=%.8g rhs=%.8g margin=%.3g satisfied=%s\n", rep.lhs,
                rep.rhs, rep.margin, rep.satisfied ? "yes" : "no");
    return rep.satisfied ? 0 : 1;
  }
  if (which == "density") {
    std::vector<double> checkpoints{0.5 * p.horizon, p.horizon};
    DensityCheckReport rep = monte_carlo_density_check(p, u, args.N, args.seed,
                                                       checkpoints, args.substeps);
    save_json(dir, "density.json", to_json(rep));
    double tol = args.tol > 0 ? args.tol : 0.05;
    bool ok = true;
    for (double tv : rep.tv) ok = ok && tv <= tol;
    std::printf("density: tv = [");
    for (std::size_t i = 0; i < rep.tv.size(); ++i)
      std::printf("%s%.4f", i ? ", " : "", rep.tv[i]);
    std::printf("] (tol %.3g)\n", tol);
    return ok ? 0 : 1;
  }
  throw ConfigError("--which must be duality, estimate, or density");
}

int cmd_cost(const CommonArgs& args) {
  LoadedConfig cfg = load_problem_source(args.problem);
  const Problem& p = cfg.problem;
  ControlHolder hold = ControlHolder::resolve(cfg, args);
  ControlView u = hold.view(p);

  double det = ensemble_cost(p, u, args.substeps);
  McCostReport mc = monte_carlo_cost(p, u, args.N, args.seed, args.substeps);
  double tol = args.tol > 0 ? args.tol : 2e-2;
  double bound = 3.0 * mc.std_error + tol;
  bool agree = std::fabs(det - mc.estimate) <= bound;

  OrderedJson j;
  j["ensemble_cost"] = det;
  j["monte_carlo"] = to_json(mc);
  j["difference"] = det - mc.estimate;
  j["agreement_bound"] = bound;
  j["agree"] = agree;
  fs::path dir = prepare_out(args);
  save_json(dir, "cost.json", j);
  std::printf("cost: ensemble=%.8g monte-carlo=%.8g +- %.3g agree=%s\n", det,
              mc.estimate, mc.std_error, agree ? "yes" : "no");
  return agree ? 0 : 1;
}

int cmd_check(const CommonArgs& args, int delta_grid) {
  LoadedConfig cfg = load_problem_source(args.problem);
  const Problem& p = cfg.problem;
  ControlHolder hold = ControlHolder::resolve(cfg, args);
  ControlView u = hold.view(p);
  double tol = args.tol > 0 ? args.tol : 1e-2;

  OptimalityReport rep = check_maximum_condition(p, u, tol, delta_grid, args.substeps);
  fs::path dir = prepare_out(args);
  save_json(dir, "check.json", to_json(rep));
  {
    ValueField v = apply_L(p, u, 0.0, args.substeps);
    DensityGrid rho =
        apply_Lstar(p, u, DensitySource::from_spec(p.rho0), 0.0, args.substeps);
    std::ostringstream hs;
    write_h_table_csv(hs, p, u, v, rho, delta_grid);
    write_text_file((dir / "h_table.csv").string(), hs.str());
  }
  std::printf("check: worst violation %.4g at t=%.4g, fraction %.3f, %s\n",
              rep.worst, rep.worst_time, rep.violation_fraction,
              rep.satisfied ? "satisfied" : "violated");
  return rep.satisfied ? 0 : 1;
}

int cmd_needle(const CommonArgs& args, double t_bar,
               const std::vector<double>& ubar, std::vector<double> eps) {
  LoadedConfig cfg = load_problem_source(args.problem);
  const Problem& p = cfg.problem;
  ControlHolder hold = ControlHolder::resolve(cfg, args);
  if (hold.is_relaxed)
    throw ConfigError("needle check requires an ordinary control");
  if (eps.empty()) {
    double dt = p.dt();
    for (int k = 8; k >= 1; k /= 2) eps.push_back(k * dt);
  }

  NeedleCheck chk = needle_derivative_fd(p, hold.signal, t_bar, ubar, eps,
                                         args.substeps);
  fs::path dir = prepare_out(args);
  save_json(dir, "needle.json", to_json(chk));
  double tol = args.tol > 0 ? args.tol : 5e-2;
  double last = chk.quotients.back();
  std::printf("needle: eta=%.6g quotient(last)=%.6g |diff|=%.3g (tol %.3g)\n",
              chk.eta, last, std::fabs(last - chk.eta), tol);
  return std::fabs(last - chk.eta) <= tol ? 0 : 1;
}

int cmd_optimize(const CommonArgs& args, int delta_grid, int max_iters,
                 double beta, double shrink, const std::string& mode) {
  LoadedConfig cfg = load_problem_source(args.problem);
  const Problem& p = cfg.problem;
  ControlHolder hold = ControlHolder::resolve(cfg, args);

  OptimizerOptions opts;
  opts.max_iters = max_iters;
  opts.tol_violation = args.tol > 0 ? args.tol : 1e-3;
  opts.blend_init = beta;
  opts.blend_shrink = shrink;
  opts.delta_grid = delta_grid;
  opts.substeps = args.substeps;
  opts.mode = mode == "ordinary" ? OptimizerOptions::Mode::kOrdinary
                                 : OptimizerOptions::Mode::kRelaxed;

  OptimizationTrace trace =
      hold.is_relaxed ? solve(p, hold.relaxed, opts) : solve(p, hold.signal, opts);

  fs::path dir = prepare_out(args);
  save_json(dir, "optimize_trace.json", to_json(trace));
  {
    std::ostringstream cs;
    write_control_csv(cs, p, trace.final_control);
    write_text_file((dir / "control_relaxed.csv").string(), cs.str());
  }
  if (trace.final_ordinary) {
    std::ostringstream cs;
    write_control_csv(cs, p, *trace.final_ordinary);
    write_text_file((dir / "control.csv").string(), cs.str());
  } else if (p.m > 0 && p.delta.kind == ControlSet::Kind::kBox) {
    try {
      ControlSignal proj = project_relaxed_to_ordinary(p, trace.final_control);
      std::ostringstream cs;
      write_control_csv(cs, p, proj);
      write_text_file((dir / "control.csv").string(), cs.str());
    } catch (const ConfigError&) {
      // f not affine in u; the relaxed schedule stands alone.
    }
  }
  std::printf("optimize: %d iteration(s), final cost %.8g, %s\n",
              static_cast<int>(trace.iterations.size()), trace.final_cost,
              trace.converged ? "converged" : "stopped early");
  return trace.converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble-oc: transport, verification and control optimization "
               "for ODE trajectory ensembles"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string which = "duality";
  bool dump_fields = false;
  int delta_grid = 21;
  int max_iters = 30;
  double beta = 1.0, shrink = 0.5;
  std::string mode = "relaxed";
  double t_bar = 0.0;
  std::vector<double> ubar;
  std::vector<double> eps;

  CLI::App* validate = app.add_subcommand("validate", "sample condition estimates");
  add_common(validate, &args);

  CLI::App* verify = app.add_subcommand("verify", "duality / estimate / density checks");
  add_common(verify, &args);
  verify->add_option("--which", which, "duality|estimate|density");
  verify->add_flag("--dump-fields", dump_fields, "export value/density CSV");

  CLI::App* cost = app.add_subcommand("cost", "ensemble cost by both routes");
  add_common(cost, &args);

  CLI::App* check = app.add_subcommand("check", "maximum-condition check");
  add_common(check, &args);
  check->add_option("--delta-grid", delta_grid, "lattice points per control axis");

  CLI::App* needle = app.add_subcommand("needle", "needle-variation derivative check");
  add_common(needle, &args);
  needle->add_option("--tbar", t_bar, "needle start time")->required();
  needle->add_option("--ubar", ubar, "needle control value")->required();
  needle->add_option("--eps", eps, "needle widths (descending)");

  CLI::App* optimize = app.add_subcommand("optimize", "successive maximization");
  add_common(optimize, &args);
  optimize->add_option("--delta-grid", delta_grid, "lattice points per control axis");
  optimize->add_option("--max-iters", max_iters, "iteration cap");
  optimize->add_option("--beta", beta, "initial blend");
  optimize->add_option("--shrink", shrink, "blend shrink factor");
  optimize->add_option("--mode", mode, "relaxed|ordinary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (args.threads > 0) parallel::set_max_threads(args.threads);
    if (validate->parsed()) return cmd_validate(args);
    if (verify->parsed()) return cmd_verify(args, which, dump_fields);
    if (cost->parsed()) return cmd_cost(args);
    if (check->parsed()) return cmd_check(args, delta_grid);
    if (needle->parsed()) return cmd_needle(args, t_bar, ubar, eps);
    if (optimize->parsed())
      return cmd_optimize(args, delta_grid, max_iters, beta, shrink, mode);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 2;
  }
  return 2;
}
