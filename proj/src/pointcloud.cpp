// SPDX-License-Identifier: Apache-2.0
#include "meshctrl/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "meshctrl/errors.hpp"
#include "meshctrl/util.hpp"

namespace meshctrl {

namespace {

constexpr int kPrimes[20] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                             31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double radical_inverse(long index, int base) {
  double inv = 1.0 / base;
  double factor = inv;
  double result = 0.0;
  while (index > 0) {
    result += factor * static_cast<double>(index % base);
    index /= base;
    factor *= inv;
  }
  return result;
}

}  // namespace

DomainBox::DomainBox(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw DimensionError("DomainBox: lower/upper size mismatch");
  }
  for (int i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) {
      throw Error("DomainBox: lower[" + std::to_string(i) + "] must be < upper");
    }
  }
}

bool DomainBox::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  }
  return true;
}

DomainBox DomainBox::unit(int dim) {
  return DomainBox(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

Eigen::MatrixXd halton_sequence(int count, int dim, long skip) {
  if (dim < 1 || dim > 20) {
    throw DimensionError("halton_sequence: dim must be in [1, 20], got " + std::to_string(dim));
  }
  if (count < 0 || skip < 0) {
    throw Error("halton_sequence: count and skip must be nonnegative");
  }
  Eigen::MatrixXd out(count, dim);
  for (int m = 0; m < count; ++m) {
    const long index = skip + m + 1;
    for (int j = 0; j < dim; ++j) {
      out(m, j) = radical_inverse(index, kPrimes[j]);
    }
  }
  return out;
}

PointCloud scale_to_box(const Eigen::MatrixXd& unit_points, const DomainBox& box) {
  if (unit_points.cols() != box.dim()) {
    throw DimensionError("scale_to_box: points have dim " + std::to_string(unit_points.cols()) +
                         ", box has dim " + std::to_string(box.dim()));
  }
  PointCloud cloud;
  cloud.box = box;
  const Eigen::RowVectorXd lo = box.lower.transpose();
  const Eigen::RowVectorXd width = (box.upper - box.lower).transpose();
  cloud.points = (unit_points.array().rowwise() * width.array()).rowwise() + lo.array();
  return cloud;
}

PointCloud tensor_grid(int points_per_dim, const DomainBox& box) {
  if (points_per_dim < 2) {
    throw Error("tensor_grid: points_per_dim must be >= 2");
  }
  const int d = box.dim();
  long total = 1;
  for (int j = 0; j < d; ++j) {
    total *= points_per_dim;
    if (total > 20'000'000) throw TooManyNodesError("tensor_grid: lattice too large");
  }
  PointCloud cloud;
  cloud.box = box;
  cloud.tensor_points_per_dim = points_per_dim;
  cloud.points.resize(total, d);
  std::vector<int> idx(d, 0);
  for (long row = 0; row < total; ++row) {
    for (int j = 0; j < d; ++j) {
      const double t = static_cast<double>(idx[j]) / (points_per_dim - 1);
      cloud.points(row, j) = box.lower[j] + t * (box.upper[j] - box.lower[j]);
    }
    // last coordinate fastest
    for (int j = d - 1; j >= 0; --j) {
      if (++idx[j] < points_per_dim) break;
      idx[j] = 0;
    }
  }
  return cloud;
}

namespace {

Eigen::MatrixXd probe_points(const DomainBox& box, int probe_count) {
  const int d = box.dim();
  if (d <= 3) {
    int per_dim = static_cast<int>(std::floor(std::pow(static_cast<double>(probe_count), 1.0 / d)));
    per_dim = std::max(per_dim, 2);
    return tensor_grid(per_dim, box).points;
  }
  return scale_to_box(halton_sequence(probe_count, d), box).points;
}

}  // namespace

double measure_fill_distance(const PointCloud& cloud, int probe_count) {
  if (cloud.size() == 0) throw Error("fill distance of an empty cloud");
  if (probe_count <= 0) probe_count = 10'000 * cloud.dim();
  const Eigen::MatrixXd probes = probe_points(cloud.box, probe_count);

  // Blocked min-distance: |p - x|^2 = |p|^2 + |x|^2 - 2 p.x
  const Eigen::VectorXd node_sq = cloud.points.rowwise().squaredNorm();
  double h2 = 0.0;
  const long B = 1024;
  for (long start = 0; start < probes.rows(); start += B) {
    const long n = std::min(B, probes.rows() - start);
    const auto block = probes.middleRows(start, n);
    Eigen::MatrixXd d2 = (-2.0 * block * cloud.points.transpose()).rowwise() + node_sq.transpose();
    d2.colwise() += block.rowwise().squaredNorm();
    const double block_max = d2.rowwise().minCoeff().maxCoeff();
    h2 = std::max(h2, block_max);
  }
  return std::sqrt(std::max(h2, 0.0));
}

double ensure_fill_distance(PointCloud& cloud, int probe_count) {
  if (!cloud.fill_distance) {
    cloud.fill_distance = measure_fill_distance(cloud, probe_count);
  }
  return *cloud.fill_distance;
}

void write_csv(const PointCloud& cloud, std::ostream& os) {
  for (int j = 0; j < cloud.dim(); ++j) {
    os << (j ? ",x" : "x") << (j + 1);
  }
  os << "\n";
  for (int k = 0; k < cloud.size(); ++k) {
    for (int j = 0; j < cloud.dim(); ++j) {
      if (j) os << ',';
      os << format_g17(cloud.points(k, j));
    }
    os << "\n";
  }
}

void write_csv(const PointCloud& cloud, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  write_csv(cloud, os);
}

PointCloud read_csv(std::istream& is, const DomainBox& box) {
  PointCloud cloud;
  cloud.box = box;
  std::string line;
  if (!std::getline(is, line)) throw Error("point CSV: missing header");
  std::vector<Eigen::VectorXd> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    Eigen::VectorXd row(box.dim());
    std::string cell;
    for (int j = 0; j < box.dim(); ++j) {
      if (!std::getline(ss, cell, ',')) throw Error("point CSV: short row");
      row[j] = std::stod(cell);
    }
    rows.push_back(std::move(row));
  }
  cloud.points.resize(static_cast<long>(rows.size()), box.dim());
  for (size_t k = 0; k < rows.size(); ++k) cloud.points.row(static_cast<long>(k)) = rows[k].transpose();
  return cloud;
}

}  // namespace meshctrl
