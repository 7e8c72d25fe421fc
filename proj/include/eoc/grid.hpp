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

#ifndef EOC_GRID_HPP_
#define EOC_GRID_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace eoc {

// Hard cap on state/control dimension so hot paths can use stack buffers.
inline constexpr int kMaxDim = 16;

using Vec = std::vector<double>;

struct Box {
  Vec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double length(int axis) const { return hi[axis] - lo[axis]; }
  double diameter() const;  // Euclidean diagonal

  bool contains(const double* x) const;
  // Box scaled about its center by `factor` (the trajectory safety box).
  bool contains_inflated(const double* x, double factor) const;
};

// Uniform tensor grid over a box with trapezoid quadrature weights.
// Node order is lexicographic in (i1, .., in): the last axis varies fastest.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(const Box& box, const std::vector<int>& counts);

  int dim() const { return static_cast<int>(counts_.size()); }
  std::size_t node_count() const { return nodes_; }
  int count(int axis) const { return counts_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double coord(int axis, int i) const { return coords_[axis][i]; }
  const Box& box() const { return box_; }

  void node(std::size_t k, double* out) const;
  double weight(std::size_t k) const;
  std::size_t flatten(const int* idx) const;
  void unflatten(std::size_t k, int* idx) const;

  double integral(std::span<const double> a) const;
  double inner_product(std::span<const double> a, std::span<const double> b) const;
  double l2_norm(std::span<const double> a) const;

  // Multilinear interpolation; zero outside the box.
  double interpolate(std::span<const double> a, const double* x) const;

  // Cells of the grid (count-1 per axis), lexicographic order. cell_integral
  // is exact for the multilinear interpolant: cell volume times the mean of
  // the 2^n corner values. locate_cell returns false when x lies outside.
  std::size_t cell_count() const { return cells_; }
  double cell_integral(std::span<const double> a, std::size_t cell) const;
  bool locate_cell(const double* x, std::size_t* cell) const;

 private:
  Box box_;
  std::vector<int> counts_;
  std::vector<double> spacing_;
  std::vector<std::vector<double>> coords_;
  std::vector<std::vector<double>> wts_;
  std::vector<std::size_t> strides_;      // node strides
  std::vector<std::size_t> cell_strides_;
  std::size_t nodes_ = 0;
  std::size_t cells_ = 0;
};

// Uniform mesh of `steps` intervals on [0, horizon]. Piecewise-constant
// controls hold one value per interval; interval k covers [time(k),
// time(k+1)), and by convention time horizon belongs to the last interval.
struct TimeMesh {
  double horizon = 0.0;
  int steps = 0;

  double dt() const { return horizon / steps; }
  int points() const { return steps + 1; }
  double time(int j) const { return j == steps ? horizon : j * dt(); }

  // Index of a mesh-aligned time; throws MeshError when t is off the mesh.
  int index_of(double t, const char* what) const;
  // Interval containing t (clamped to [0, steps-1]).
  int interval_of(double t) const;
};

}  // namespace eoc

#endif  // EOC_GRID_HPP_
