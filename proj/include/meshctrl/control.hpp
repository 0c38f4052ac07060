// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace meshctrl {

/// Piecewise-constant control on the uniform time grid: row m applies on
/// [t_m, t_{m+1}) with t_m = m * horizon / pieces.
struct ControlTrajectory {
  double horizon = 0.0;
  Eigen::MatrixXd values;  ///< pieces x control_dim

  int pieces() const { return static_cast<int>(values.rows()); }
  int control_dim() const { return static_cast<int>(values.cols()); }
  double dt() const { return horizon / pieces(); }

  int piece_index(double t) const {
    const int idx = static_cast<int>(t / dt());
    return idx < 0 ? 0 : (idx >= pieces() ? pieces() - 1 : idx);
  }

  Eigen::VectorXd at_time(double t) const { return values.row(piece_index(t)).transpose(); }

  /// Discrete L^2[0,T] norm sqrt(dt * sum |row|^2).
  double l2_norm() const { return std::sqrt(dt() * values.squaredNorm()); }

  static ControlTrajectory zeros(int pieces, int control_dim, double horizon) {
    ControlTrajectory u;
    u.horizon = horizon;
    u.values = Eigen::MatrixXd::Zero(pieces, control_dim);
    return u;
  }
};

}  // namespace meshctrl
