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

#include "eoc/grid.hpp"

#include <cmath>
#include <string>

#include "eoc/errors.hpp"

namespace eoc {

double Box::diameter() const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += length(i) * length(i);
  return std::sqrt(s);
}

bool Box::contains(const double* x) const {
  for (int i = 0; i < dim(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

bool Box::contains_inflated(const double* x, double factor) const {
  for (int i = 0; i < dim(); ++i) {
    double c = 0.5 * (lo[i] + hi[i]);
    double half = 0.5 * factor * length(i);
    if (x[i] < c - half || x[i] > c + half) return false;
  }
  return true;
}

SpatialGrid::SpatialGrid(const Box& box, const std::vector<int>& counts)
    : box_(box), counts_(counts) {
  if (box.dim() != static_cast<int>(counts.size()))
    throw ConfigError("grid counts do not match domain dimension");
  int d = dim();
  coords_.resize(d);
  wts_.resize(d);
  spacing_.resize(d);
  nodes_ = 1;
  cells_ = 1;
  for (int a = 0; a < d; ++a) {
    int c = counts_[a];
    if (c < 2) throw ConfigError("grid needs at least 2 nodes per axis");
    double h = box.length(a) / (c - 1);
    spacing_[a] = h;
    coords_[a].resize(c);
    wts_[a].resize(c);
    for (int i = 0; i < c; ++i) {
      coords_[a][i] = i == c - 1 ? box.hi[a] : box.lo[a] + i * h;
      wts_[a][i] = (i == 0 || i == c - 1) ? 0.5 * h : h;
    }
    nodes_ *= static_cast<std::size_t>(c);
    cells_ *= static_cast<std::size_t>(c - 1);
  }
  strides_.assign(d, 1);
  cell_strides_.assign(d, 1);
  for (int a = d - 2; a >= 0; --a) {
    strides_[a] = strides_[a + 1] * counts_[a + 1];
    cell_strides_[a] = cell_strides_[a + 1] * (counts_[a + 1] - 1);
  }
}

void SpatialGrid::node(std::size_t k, double* out) const {
  for (int a = 0; a < dim(); ++a) {
    std::size_t i = k / strides_[a];
    k -= i * strides_[a];
    out[a] = coords_[a][i];
  }
}

double SpatialGrid::weight(std::size_t k) const {
  double w = 1.0;
  for (int a = 0; a < dim(); ++a) {
    std::size_t i = k / strides_[a];
    k -= i * strides_[a];
    w *= wts_[a][i];
  }
  return w;
}

std::size_t SpatialGrid::flatten(const int* idx) const {
  std::size_t k = 0;
  for (int a = 0; a < dim(); ++a) k += idx[a] * strides_[a];
  return k;
}

void SpatialGrid::unflatten(std::size_t k, int* idx) const {
  for (int a = 0; a < dim(); ++a) {
    idx[a] = static_cast<int>(k / strides_[a]);
    k -= idx[a] * strides_[a];
  }
}

double SpatialGrid::integral(std::span<const double> a) const {
  double s = 0.0;
  for (std::size_t k = 0; k < nodes_; ++k) s += weight(k) * a[k];
  return s;
}

double SpatialGrid::inner_product(std::span<const double> a,
                                  std::span<const double> b) const {
  if (a.size() != nodes_ || b.size() != nodes_)
    throw Error("inner_product: field size does not match grid");
  double s = 0.0;
  // w * (a * b): keeps (a, b) == (b, a) bitwise.
  for (std::size_t k = 0; k < nodes_; ++k) s += weight(k) * (a[k] * b[k]);
  return s;
}

double SpatialGrid::l2_norm(std::span<const double> a) const {
  return std::sqrt(inner_product(a, a));
}

double SpatialGrid::interpolate(std::span<const double> a,
                                const double* x) const {
  int d = dim();
  int base[kMaxDim];
  double frac[kMaxDim];
  for (int ax = 0; ax < d; ++ax) {
    if (x[ax] < box_.lo[ax] || x[ax] > box_.hi[ax]) return 0.0;
    double rel = (x[ax] - box_.lo[ax]) / spacing_[ax];
    int i = static_cast<int>(rel);
    if (i > counts_[ax] - 2) i = counts_[ax] - 2;
    base[ax] = i;
    frac[ax] = rel - i;
  }
  double acc = 0.0;
  int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t k = 0;
    for (int ax = 0; ax < d; ++ax) {
      int bit = (c >> ax) & 1;
      w *= bit ? frac[ax] : 1.0 - frac[ax];
      k += static_cast<std::size_t>(base[ax] + bit) * strides_[ax];
    }
    acc += w * a[k];
  }
  return acc;
}

double SpatialGrid::cell_integral(std::span<const double> a,
                                  std::size_t cell) const {
  int d = dim();
  int idx[kMaxDim];
  double vol = 1.0;
  std::size_t k0 = 0;
  for (int ax = 0; ax < d; ++ax) {
    idx[ax] = static_cast<int>(cell / cell_strides_[ax]);
    cell -= idx[ax] * cell_strides_[ax];
    k0 += static_cast<std::size_t>(idx[ax]) * strides_[ax];
    vol *= spacing_[ax];
  }
  double mean = 0.0;
  int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    std::size_t k = k0;
    for (int ax = 0; ax < d; ++ax)
      if ((c >> ax) & 1) k += strides_[ax];
    mean += a[k];
  }
  return vol * mean / corners;
}

bool SpatialGrid::locate_cell(const double* x, std::size_t* cell) const {
  std::size_t k = 0;
  for (int ax = 0; ax < dim(); ++ax) {
    if (x[ax] < box_.lo[ax] || x[ax] > box_.hi[ax]) return false;
    double rel = (x[ax] - box_.lo[ax]) / spacing_[ax];
    int i = static_cast<int>(rel);
    if (i > counts_[ax] - 2) i = counts_[ax] - 2;
    k += static_cast<std::size_t>(i) * cell_strides_[ax];
  }
  *cell = k;
  return true;
}

int TimeMesh::index_of(double t, const char* what) const {
  double j = std::round(t / dt());
  int ji = static_cast<int>(j);
  if (ji < 0 || ji > steps || std::fabs(t - time(ji)) > 1e-9 * std::max(1.0, horizon))
    throw MeshError(std::string(what) + ": time " + std::to_string(t) +
                    " is not on the mesh");
  return ji;
}

int TimeMesh::interval_of(double t) const {
  int k = static_cast<int>(std::floor(t / dt() + 1e-9));
  if (k < 0) k = 0;
  if (k >= steps) k = steps - 1;
  return k;
}

}  // namespace eoc
