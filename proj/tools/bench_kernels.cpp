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

// Wall-clock comparison of the data-parallel kernels against their serial
// reference path (Exec::seq), including a bit-identity check: the parallel
// kernels must reproduce the serial results exactly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "eoc/analysis.hpp"
#include "eoc/optimality.hpp"
#include "eoc/serialize.hpp"

using namespace eoc;
using Clock = std::chrono::steady_clock;

namespace {

double time_of(const std::function<void()>& fn) {
  auto t0 = Clock::now();
  fn();
  auto t1 = Clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

void report(const char* name, double t_seq, double t_par, double diff) {
  std::printf("%-28s %9.3fs %9.3fs %7.2fx   max|diff| %.3g\n", name, t_seq,
              t_par, t_seq / t_par, diff);
}

}  // namespace

int main(int argc, char** argv) {
  long n_mc = argc > 1 ? std::atol(argv[1]) : 200000;
  std::printf("threads: %d, monte carlo samples: %ld\n", parallel::max_threads(),
              n_mc);
  std::printf("%-28s %10s %10s %8s\n", "kernel", "serial", "openmp", "speedup");

  {
    Problem p = catalog_problem("bang1d");
    ControlSignal u0 = default_control(p);
    ControlView u(p, u0);

    ValueField vs, vp;
    double t_seq = time_of([&] { vs = apply_L(p, u, 0.0, 1, Exec::seq); });
    double t_par = time_of([&] { vp = apply_L(p, u, 0.0, 1, Exec::par); });
    report("apply_L bang1d", t_seq, t_par, max_abs_diff(vs.values, vp.values));

    DensityGrid rs, rp;
    auto src = DensitySource::from_spec(p.rho0);
    t_seq = time_of([&] { rs = apply_Lstar(p, u, src, 0.0, 1, Exec::seq); });
    t_par = time_of([&] { rp = apply_Lstar(p, u, src, 0.0, 1, Exec::par); });
    report("apply_Lstar bang1d", t_seq, t_par, max_abs_diff(rs.values, rp.values));

    McCostReport ms, mp;
    t_seq = time_of([&] { ms = monte_carlo_cost(p, u, n_mc, 0, 1, Exec::seq); });
    t_par = time_of([&] { mp = monte_carlo_cost(p, u, n_mc, 0, 1, Exec::par); });
    report("monte_carlo_cost bang1d", t_seq, t_par,
           std::fabs(ms.estimate - mp.estimate));

    OptimalityReport cs, cp;
    t_seq = time_of([&] { cs = check_maximum_condition(p, u, 1e-2, 21, 1, Exec::seq); });
    t_par = time_of([&] { cp = check_maximum_condition(p, u, 1e-2, 21, 1, Exec::par); });
    report("check_maximum bang1d", t_seq, t_par,
           max_abs_diff(cs.eta_min, cp.eta_min));
  }

  {
    Problem p = catalog_problem("rotation2d");
    ControlView u = ControlView::uncontrolled(p);

    ValueField vs, vp;
    double t_seq = time_of([&] { vs = apply_L(p, u, 0.0, 1, Exec::seq); });
    double t_par = time_of([&] { vp = apply_L(p, u, 0.0, 1, Exec::par); });
    report("apply_L rotation2d", t_seq, t_par, max_abs_diff(vs.values, vp.values));

    DensityGrid rs, rp;
    auto src = DensitySource::from_spec(p.rho0);
    t_seq = time_of([&] { rs = apply_Lstar(p, u, src, 0.0, 1, Exec::seq); });
    t_par = time_of([&] { rp = apply_Lstar(p, u, src, 0.0, 1, Exec::par); });
    report("apply_Lstar rotation2d", t_seq, t_par,
           max_abs_diff(rs.values, rp.values));
  }

  return 0;
}
