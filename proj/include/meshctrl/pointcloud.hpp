// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <string>

namespace meshctrl {

/// Axis-aligned box domain in R^d.
struct DomainBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  DomainBox() = default;
  DomainBox(Eigen::VectorXd lo, Eigen::VectorXd hi);

  int dim() const { return static_cast<int>(lower.size()); }
  double diameter() const { return (upper - lower).norm(); }
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd half_width() const { return 0.5 * (upper - lower); }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const;

  /// [0,1]^dim
  static DomainBox unit(int dim);
};

/// Scattered spatial nodes over a box domain.
struct PointCloud {
  Eigen::MatrixXd points;  ///< M x dim, one node per row
  DomainBox box;
  std::optional<double> fill_distance;  ///< cached measurement, see measure_fill_distance
  int tensor_points_per_dim = 0;        ///< >0 when built by tensor_grid

  int dim() const { return static_cast<int>(points.cols()); }
  int size() const { return static_cast<int>(points.rows()); }
};

/// First `count` points of the d-dimensional Halton sequence (prime bases
/// 2,3,5,...), starting at index skip+1 so the all-zeros point never appears.
/// Supports dim <= 20. All coordinates lie in [0,1).
Eigen::MatrixXd halton_sequence(int count, int dim, long skip = 0);

/// Affine map of unit-cube points onto the box, coordinatewise
/// lower + u * (upper - lower).
PointCloud scale_to_box(const Eigen::MatrixXd& unit_points, const DomainBox& box);

/// Uniform tensor lattice with points_per_dim >= 2 nodes per coordinate,
/// box corners included; M = points_per_dim^dim. Row index runs with the
/// last coordinate fastest.
PointCloud tensor_grid(int points_per_dim, const DomainBox& box);

/// Approximate fill distance sup_x min_k |x - x_k| by probing: a uniform
/// lattice of about probe_count points for dim <= 3, plain Halton probes
/// otherwise. probe_count <= 0 selects the default 10^4 * dim. The probe
/// estimate never exceeds the true fill distance.
double measure_fill_distance(const PointCloud& cloud, int probe_count = 0);

/// Sets cloud.fill_distance if unset and returns it.
double ensure_fill_distance(PointCloud& cloud, int probe_count = 0);

/// CSV with header x1,...,xd, one row per point, 17 significant digits.
void write_csv(const PointCloud& cloud, std::ostream& os);
void write_csv(const PointCloud& cloud, const std::string& path);
PointCloud read_csv(std::istream& is, const DomainBox& box);

}  // namespace meshctrl
