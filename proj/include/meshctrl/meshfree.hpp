// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <memory>
#include <utility>
#include <vector>

#include "meshctrl/pointcloud.hpp"

namespace meshctrl {

enum class InterpBackend { Mls, Shepard, Rbf, MultilinearTensor };

const char* backend_name(InterpBackend backend);

/// Moving-least-squares parameters. The weight is the compactly supported
/// C^2 bump w(t) = (1-t)^4 (4t+1) on t = |x - x_i| / radius < 1.
struct MlsParams {
  int degree = 1;        ///< polynomial reproduction degree l
  double radius = 0.0;   ///< support radius; <= 0 selects 3 * fill distance
  int max_radius_doublings = 3;  ///< local enlargements tried before failing
};

struct ShepardParams {
  double radius = 0.0;  ///< <= 0 selects 3 * fill distance
};

/// Polyharmonic kernel, conditionally positive definite of order cpd_order
/// with a polynomial tail of degree cpd_order - 1.
struct RbfKernel {
  bool log_kernel = true;  ///< true: r^4 log r (even d); false: r^3 (odd d)
  int cpd_order = 3;

  int tail_degree() const { return cpd_order - 1; }
  double eval_r2(double r2) const;  ///< kernel value from squared radius

  /// r^4 log r with quadratic tail for even d, r^3 with linear tail for odd d.
  static RbfKernel for_dimension(int dim);
};

struct RbfParams {
  double ridge = -1.0;  ///< <0 selects 1e-10 * trace(A) / M; 0 disables
  bool kernel_set = false;
  RbfKernel kernel;  ///< used only when kernel_set; otherwise per-dimension default
};

struct MultilinearParams {};

/// Back-end selection plus per-back-end parameters.
struct InterpConfig {
  InterpBackend backend = InterpBackend::Mls;
  MlsParams mls;
  ShepardParams shepard;
  RbfParams rbf;
  MultilinearParams multilinear;

  static InterpConfig make(InterpBackend backend);
};

namespace detail {
struct FitterState;
}

/// An evaluable scalar- or vector-valued field built from nodal values on a
/// point cloud. Evaluation is pure and safe to call concurrently. Queries
/// outside the data support extrapolate: RBF evaluates its global basis,
/// MLS and Shepard fall back to the nearest node value, the tensor back-end
/// clamps to the box.
class Interpolant {
 public:
  Interpolant() = default;

  int components() const { return static_cast<int>(coeffs_.cols()); }
  InterpBackend backend() const;
  const PointCloud& cloud() const;

  /// All components at one query point.
  Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void eval_into(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const;

  /// All components at a batch of query points (rows of X); returns B x K.
  Eigen::MatrixXd eval_batch(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

 private:
  friend class FieldFitter;
  std::shared_ptr<const detail::FitterState> state_;
  Eigen::MatrixXd coeffs_;  ///< nodal values (MLS/Shepard/tensor) or RBF v
  Eigen::MatrixXd tail_;    ///< RBF polynomial tail coefficients z
};

/// Per-cloud fitting machinery shared by every field built on the same
/// cloud: the spatial index for MLS/Shepard and the factored saddle system
/// for RBF. Fit once per nodal value set; the factorization is reused.
class FieldFitter {
 public:
  FieldFitter(PointCloud cloud, InterpConfig config);

  /// values: M x K nodal data, one column per component.
  Interpolant fit(const Eigen::Ref<const Eigen::MatrixXd>& values) const;

  const PointCloud& cloud() const;
  const InterpConfig& config() const;

  /// RBF conditioning diagnostics (1/rcond of the saddle matrix); 0 for
  /// other back-ends.
  double condition_estimate() const;

 private:
  std::shared_ptr<const detail::FitterState> state_;
};

/// One-call facade over the back-ends.
Interpolant interp_field(const PointCloud& cloud, const Eigen::Ref<const Eigen::MatrixXd>& values,
                         const InterpConfig& config);

/// Result of a pointwise MLS solve: the value p*(x) and the nonzero Lagrange
/// coefficients a_i*(x) as (node index, coefficient) pairs.
struct MlsEvaluation {
  double value = 0.0;
  std::vector<std::pair<int, double>> coefficients;
};

/// Weighted local polynomial fit of degree params.degree around x. The
/// in-radius neighbor set must be unisolvent; the radius is enlarged at most
/// params.max_radius_doublings times before RadiusTooSmallError. Queries
/// with no node in range take the nearest node value.
MlsEvaluation mls_eval(const PointCloud& cloud, const Eigen::Ref<const Eigen::VectorXd>& values,
                       const Eigen::Ref<const Eigen::VectorXd>& x, const MlsParams& params);

/// Normalized nonnegative-weight average of in-radius nodal values; exact
/// hits return the nodal value, empty neighborhoods the nearest node value.
double shepard_eval(const PointCloud& cloud, const Eigen::Ref<const Eigen::VectorXd>& values,
                    const Eigen::Ref<const Eigen::VectorXd>& x, double radius);

/// Fitted RBF interpolant s(x) = sum_j v_j Phi(|x - x_j|) + tail(x).
struct RbfModel {
  PointCloud centers;
  RbfKernel kernel;
  Eigen::VectorXd coefficients;  ///< v, one per center
  Eigen::VectorXd tail;          ///< z, one per tail monomial
  double condition_estimate = 0.0;
  double residual = 0.0;  ///< max |A v + P z - f| over centers
};

/// Solve the symmetric saddle system [[A + ridge I, P], [P^T, 0]] [v; z] =
/// [f; 0]. Throws ConditioningError when the condition estimate exceeds
/// 1e14. ridge < 0 selects the default 1e-10 trace(A)/M.
RbfModel rbf_fit(const PointCloud& cloud, const Eigen::Ref<const Eigen::VectorXd>& values,
                 const RbfKernel& kernel, double ridge = -1.0);

double rbf_eval(const RbfModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Coordinatewise linear blend within the containing cell of a tensor grid
/// cloud; queries are clamped to the box. Exact for multilinear functions.
double multilinear_eval(const PointCloud& grid_cloud,
                        const Eigen::Ref<const Eigen::VectorXd>& values,
                        const Eigen::Ref<const Eigen::VectorXd>& x);

/// Number of monomials of total degree <= degree in dim variables.
int polynomial_space_dim(int dim, int degree);

}  // namespace meshctrl
