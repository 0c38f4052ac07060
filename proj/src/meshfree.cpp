// SPDX-License-Identifier: Apache-2.0
#include "meshctrl/meshfree.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "meshctrl/errors.hpp"

namespace meshctrl {

namespace {

/// C^2 compactly supported bump, w(t) = (1-t)^4 (4t+1) for t < 1, else 0.
double bump_weight(double t) {
  if (t >= 1.0) return 0.0;
  const double s = 1.0 - t;
  const double s2 = s * s;
  return s2 * s2 * (4.0 * t + 1.0);
}

/// Monomials of total degree <= degree in dim variables, constant first.
struct MonomialBasis {
  int dim = 0;
  int degree = 0;
  std::vector<std::vector<int>> exponents;

  MonomialBasis() = default;
  MonomialBasis(int dim, int degree) : dim(dim), degree(degree) {
    std::vector<int> exp(dim, 0);
    enumerate(exp, 0, degree);
  }

  int size() const { return static_cast<int>(exponents.size()); }

  void eval(const double* x, double* out) const {
    for (size_t q = 0; q < exponents.size(); ++q) {
      double v = 1.0;
      for (int j = 0; j < dim; ++j) {
        for (int e = 0; e < exponents[q][j]; ++e) v *= x[j];
      }
      out[q] = v;
    }
  }

 private:
  void enumerate(std::vector<int>& exp, int j, int left) {
    if (j == dim) {
      exponents.push_back(exp);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      exp[j] = e;
      enumerate(exp, j + 1, left - e);
    }
    exp[j] = 0;
  }
};

/// Uniform cell index over the cloud box for radius queries.
class GridIndex {
 public:
  GridIndex(const Eigen::MatrixXd& pts, const DomainBox& box, double cell) : dim_(static_cast<int>(pts.cols())) {
    origin_ = box.lower;
    counts_.resize(dim_);
    width_.resize(dim_);
    long total = 1;
    for (int j = 0; j < dim_; ++j) {
      const double range = box.upper[j] - box.lower[j];
      int n = static_cast<int>(std::ceil(range / std::max(cell, 1e-300)));
      n = std::clamp(n, 1, 256);
      counts_[j] = n;
      width_[j] = range / n;
      total *= n;
      if (total > 8'000'000) {  // degrade resolution rather than blow memory
        for (int k = 0; k <= j; ++k) counts_[k] = std::max(1, counts_[k] / 2);
        total = 1;
        for (int k = 0; k <= j; ++k) total *= counts_[k];
      }
    }
    cells_.resize(static_cast<size_t>(total));
    for (int i = 0; i < pts.rows(); ++i) {
      long flat = 0;
      for (int j = 0; j < dim_; ++j) flat = flat * counts_[j] + cell_coord(j, pts(i, j));
      cells_[static_cast<size_t>(flat)].push_back(i);
    }
  }

  /// Candidate node indices for a ball query; callers still filter by the
  /// exact distance. Order is deterministic (cell-lexicographic).
  void query(const double* x, double radius, std::vector<int>& out) const {
    out.clear();
    std::vector<int> lo(dim_), hi(dim_);
    for (int j = 0; j < dim_; ++j) {
      lo[j] = cell_coord(j, x[j] - radius);
      hi[j] = cell_coord(j, x[j] + radius);
    }
    std::vector<int> c(lo);
    while (true) {
      long flat = 0;
      for (int j = 0; j < dim_; ++j) flat = flat * counts_[j] + c[j];
      const auto& bucket = cells_[static_cast<size_t>(flat)];
      out.insert(out.end(), bucket.begin(), bucket.end());
      int j = dim_ - 1;
      while (j >= 0 && ++c[j] > hi[j]) {
        c[j] = lo[j];
        --j;
      }
      if (j < 0) break;
    }
  }

 private:
  int cell_coord(int j, double v) const {
    const double t = (v - origin_[j]) / width_[j];
    return std::clamp(static_cast<int>(std::floor(t)), 0, counts_[j] - 1);
  }

  int dim_;
  Eigen::VectorXd origin_;
  Eigen::VectorXd width_;
  std::vector<int> counts_;
  std::vector<std::vector<int>> cells_;
};

int nearest_node(const Eigen::MatrixXd& pts, const double* x) {
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < pts.rows(); ++i) {
    double d2 = 0.0;
    for (int j = 0; j < pts.cols(); ++j) {
      const double diff = x[j] - pts(i, j);
      d2 += diff * diff;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

struct Neighbor {
  int index;
  double dist;
  double weight;
};

}  // namespace

namespace detail {

struct RbfState {
  RbfKernel kernel;
  double ridge = 0.0;
  Eigen::MatrixXd A;  // kernel matrix, ridge not included
  Eigen::MatrixXd P;  // tail values at scaled coordinates
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  double rcond = 0.0;
  Eigen::VectorXd tail_center;
  Eigen::VectorXd tail_scale;
  MonomialBasis tail_basis;
};

struct FitterState {
  PointCloud cloud;
  InterpConfig config;  // radii resolved
  MonomialBasis mls_basis;
  std::unique_ptr<GridIndex> index;  // MLS / Shepard
  std::unique_ptr<RbfState> rbf;
};

}  // namespace detail

using detail::FitterState;
using detail::RbfState;

const char* backend_name(InterpBackend backend) {
  switch (backend) {
    case InterpBackend::Mls: return "mls";
    case InterpBackend::Shepard: return "shepard";
    case InterpBackend::Rbf: return "rbf";
    case InterpBackend::MultilinearTensor: return "multilinear";
  }
  return "?";
}

InterpConfig InterpConfig::make(InterpBackend backend) {
  InterpConfig cfg;
  cfg.backend = backend;
  return cfg;
}

double RbfKernel::eval_r2(double r2) const {
  if (r2 <= 0.0) return 0.0;
  if (log_kernel) return 0.5 * r2 * r2 * std::log(r2);  // r^4 log r
  return r2 * std::sqrt(r2);                            // r^3
}

RbfKernel RbfKernel::for_dimension(int dim) {
  RbfKernel k;
  if (dim % 2 == 0) {
    k.log_kernel = true;
    k.cpd_order = 3;
  } else {
    k.log_kernel = false;
    k.cpd_order = 2;
  }
  return k;
}

int polynomial_space_dim(int dim, int degree) {
  return MonomialBasis(dim, degree).size();
}

// ---------------------------------------------------------------------------
// MLS
// ---------------------------------------------------------------------------

namespace {

/// Gathers in-radius neighbors; enlarges the radius up to max_doublings
/// times until the weighted neighborhood is unisolvent for the basis.
/// Returns false when no node lies in the (final) radius; radius_used
/// reports the accepted radius.
bool gather_unisolvent(const Eigen::MatrixXd& pts, const GridIndex* index, const double* x,
                       double radius, int max_doublings, const MonomialBasis& basis,
                       std::vector<Neighbor>& nbrs, Eigen::MatrixXd& gram,
                       Eigen::LLT<Eigen::MatrixXd>& llt, double& radius_used) {
  const int d = static_cast<int>(pts.cols());
  const int Q = basis.size();
  thread_local std::vector<int> candidates;
  thread_local std::vector<double> bvals;
  thread_local std::vector<double> scaled;
  bvals.resize(static_cast<size_t>(Q));
  scaled.resize(static_cast<size_t>(d));
  double r = radius;
  for (int attempt = 0; attempt <= max_doublings; ++attempt, r *= 2.0) {
    radius_used = r;
    nbrs.clear();
    if (index) {
      index->query(x, r, candidates);
    } else {
      candidates.resize(static_cast<size_t>(pts.rows()));
      for (int i = 0; i < pts.rows(); ++i) candidates[static_cast<size_t>(i)] = i;
    }
    for (int i : candidates) {
      double d2 = 0.0;
      for (int j = 0; j < d; ++j) {
        const double diff = x[j] - pts(i, j);
        d2 += diff * diff;
      }
      const double dist = std::sqrt(d2);
      if (dist < r) nbrs.push_back({i, dist, bump_weight(dist / r)});
    }
    if (nbrs.empty()) continue;
    if (static_cast<int>(nbrs.size()) < Q) continue;

    gram.setZero(Q, Q);
    for (const Neighbor& nb : nbrs) {
      for (int j = 0; j < d; ++j) scaled[static_cast<size_t>(j)] = (pts(nb.index, j) - x[j]) / r;
      basis.eval(scaled.data(), bvals.data());
      for (int a = 0; a < Q; ++a) {
        for (int b = a; b < Q; ++b) gram(a, b) += nb.weight * bvals[static_cast<size_t>(a)] * bvals[static_cast<size_t>(b)];
      }
    }
    gram = gram.template selfadjointView<Eigen::Upper>();
    llt.compute(gram);
    if (llt.info() != Eigen::Success) continue;
    // guard against near-degenerate sets LLT still accepts
    const auto diag = llt.matrixLLT().diagonal();
    if (diag.minCoeff() <= 1e-9 * diag.maxCoeff()) continue;
    return true;
  }
  if (nbrs.empty()) return false;
  throw RadiusTooSmallError("mls: neighborhood of " + std::to_string(nbrs.size()) +
                                " nodes is not unisolvent for degree " + std::to_string(basis.degree),
                            static_cast<int>(nbrs.size()));
}

/// Solves the local weighted fit and accumulates out += a_i(x) * values.row(i)
/// for each component; optionally records the Lagrange coefficients.
void mls_apply(const Eigen::MatrixXd& pts, const Eigen::Ref<const Eigen::MatrixXd>& values,
               const std::vector<Neighbor>& nbrs, const MonomialBasis& basis, double radius_used,
               const double* x, const Eigen::LLT<Eigen::MatrixXd>& llt, double* out,
               std::vector<std::pair<int, double>>* coeffs) {
  const int d = static_cast<int>(pts.cols());
  const int Q = basis.size();
  const int K = static_cast<int>(values.cols());
  thread_local Eigen::VectorXd g0;
  g0.setZero(Q);
  g0[0] = 1.0;  // basis is centered at the query: b(x) = e0
  g0 = llt.solve(g0);

  for (int k = 0; k < K; ++k) out[k] = 0.0;
  thread_local std::vector<double> scaled;
  thread_local std::vector<double> bvals;
  scaled.resize(static_cast<size_t>(d));
  bvals.resize(static_cast<size_t>(Q));
  for (const Neighbor& nb : nbrs) {
    for (int j = 0; j < d; ++j) scaled[static_cast<size_t>(j)] = (pts(nb.index, j) - x[j]) / radius_used;
    basis.eval(scaled.data(), bvals.data());
    double a = 0.0;
    for (int q = 0; q < Q; ++q) a += g0[q] * bvals[static_cast<size_t>(q)];
    a *= nb.weight;
    for (int k = 0; k < K; ++k) out[k] += a * values(nb.index, k);
    if (coeffs) coeffs->emplace_back(nb.index, a);
  }
}

}  // namespace

MlsEvaluation mls_eval(const PointCloud& cloud, const Eigen::Ref<const Eigen::VectorXd>& values,
                       const Eigen::Ref<const Eigen::VectorXd>& x, const MlsParams& params) {
  if (cloud.size() == 0) throw Error("mls_eval: empty cloud");
  if (values.size() != cloud.size()) throw DimensionError("mls_eval: values/cloud size mismatch");
  if (x.size() != cloud.dim()) throw DimensionError("mls_eval: point dimension mismatch");

  double radius = params.radius;
  if (radius <= 0.0) {
    PointCloud copy = cloud;
    radius = 3.0 * ensure_fill_distance(copy);
  }
  MonomialBasis basis(cloud.dim(), params.degree);
  std::vector<Neighbor> nbrs;
  Eigen::MatrixXd gram;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double radius_used = radius;
  MlsEvaluation result;
  if (!gather_unisolvent(cloud.points, nullptr, x.data(), radius, params.max_radius_doublings,
                         basis, nbrs, gram, llt, radius_used)) {
    const int nearest = nearest_node(cloud.points, x.data());
    result.value = values[nearest];
    result.coefficients.emplace_back(nearest, 1.0);
    return result;
  }
  mls_apply(cloud.points, values, nbrs, basis, radius_used, x.data(), llt, &result.value,
            &result.coefficients);
  return result;
}

// ---------------------------------------------------------------------------
// Shepard
// ---------------------------------------------------------------------------

namespace {

void shepard_apply(const Eigen::MatrixXd& pts, const Eigen::Ref<const Eigen::MatrixXd>& values,
                   const GridIndex* index, const double* x, double radius, double* out) {
  const int d = static_cast<int>(pts.cols());
  const int K = static_cast<int>(values.cols());
  thread_local std::vector<int> candidates;
  if (index) {
    index->query(x, radius, candidates);
  } else {
    candidates.resize(static_cast<size_t>(pts.rows()));
    for (int i = 0; i < pts.rows(); ++i) candidates[static_cast<size_t>(i)] = i;
  }
  double wsum = 0.0;
  for (int k = 0; k < K; ++k) out[k] = 0.0;
  const double hit2 = 1e-24 * radius * radius;
  for (int i : candidates) {
    double d2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = x[j] - pts(i, j);
      d2 += diff * diff;
    }
    if (d2 <= hit2) {  // exact hit
      for (int k = 0; k < K; ++k) out[k] = values(i, k);
      return;
    }
    const double w = bump_weight(std::sqrt(d2) / radius);
    if (w > 0.0) {
      wsum += w;
      for (int k = 0; k < K; ++k) out[k] += w * values(i, k);
    }
  }
  if (wsum <= 0.0) {
    const int nearest = nearest_node(pts, x);
    for (int k = 0; k < K; ++k) out[k] = values(nearest, k);
    return;
  }
  for (int k = 0; k < K; ++k) out[k] /= wsum;
}

}  // namespace

double shepard_eval(const PointCloud& cloud, const Eigen::Ref<const Eigen::VectorXd>& values,
                    const Eigen::Ref<const Eigen::VectorXd>& x, double radius) {
  if (cloud.size() == 0) throw Error("shepard_eval: empty cloud");
  if (values.size() != cloud.size()) throw DimensionError("shepard_eval: values/cloud size mismatch");
  if (radius <= 0.0) throw Error("shepard_eval: radius must be positive");
  double out;
  shepard_apply(cloud.points, values, nullptr, x.data(), radius, &out);
  return out;
}

// ---------------------------------------------------------------------------
// RBF
// ---------------------------------------------------------------------------

namespace {

std::unique_ptr<RbfState> build_rbf_state(const PointCloud& cloud, const RbfParams& params) {
  auto state = std::make_unique<RbfState>();
  state->kernel = params.kernel_set ? params.kernel : RbfKernel::for_dimension(cloud.dim());
  const int M = cloud.size();
  const int d = cloud.dim();
  state->tail_basis = MonomialBasis(d, state->kernel.tail_degree());
  const int Q = state->tail_basis.size();
  if (M < Q) {
    throw Error("rbf: need at least " + std::to_string(Q) + " centers for the degree-" +
                std::to_string(state->kernel.tail_degree()) + " tail, got " + std::to_string(M));
  }
  state->tail_center = cloud.box.center();
  state->tail_scale = cloud.box.half_width();

  state->A.resize(M, M);
  for (int i = 0; i < M; ++i) {
    state->A(i, i) = 0.0;
    for (int j = i + 1; j < M; ++j) {
      const double r2 = (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
      const double v = state->kernel.eval_r2(r2);
      state->A(i, j) = v;
      state->A(j, i) = v;
    }
  }
  state->ridge = params.ridge;
  if (state->ridge < 0.0) state->ridge = 1e-10 * state->A.trace() / M;

  state->P.resize(M, Q);
  std::vector<double> scaled(static_cast<size_t>(d));
  std::vector<double> bvals(static_cast<size_t>(Q));
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < d; ++j) {
      scaled[static_cast<size_t>(j)] = (cloud.points(i, j) - state->tail_center[j]) / state->tail_scale[j];
    }
    state->tail_basis.eval(scaled.data(), bvals.data());
    for (int q = 0; q < Q; ++q) state->P(i, q) = bvals[static_cast<size_t>(q)];
  }

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(M + Q, M + Q);
  K.topLeftCorner(M, M) = state->A + state->ridge * Eigen::MatrixXd::Identity(M, M);
  K.topRightCorner(M, Q) = state->P;
  K.bottomLeftCorner(Q, M) = state->P.transpose();
  state->lu.compute(K);
  state->rcond = state->lu.rcond();
  if (!(state->rcond > 1e-14)) {
    throw ConditioningError(
        "rbf: saddle system condition estimate " + std::to_string(1.0 / std::max(state->rcond, 1e-300)) +
            " exceeds 1e14; increase the ridge or reduce the point count",
        1.0 / std::max(state->rcond, 1e-300));
  }
  return state;
}

/// v, z columns for each component of the nodal data.
void rbf_solve(const RbfState& state, const Eigen::Ref<const Eigen::MatrixXd>& values,
               Eigen::MatrixXd& v, Eigen::MatrixXd& z) {
  const int M = static_cast<int>(state.A.rows());
  const int Q = static_cast<int>(state.P.cols());
  const int K = static_cast<int>(values.cols());
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(M + Q, K);
  rhs.topRows(M) = values;
  Eigen::MatrixXd sol = state.lu.solve(rhs);
  v = sol.topRows(M);
  z = sol.bottomRows(Q);

  const double fmax = values.cwiseAbs().maxCoeff();
  const double resid = (state.A * v + state.P * z - values).cwiseAbs().maxCoeff();
  // the ridge perturbs the interpolation conditions by ridge * |v|
  const double budget = 1e-8 * (1.0 + fmax) + state.ridge * v.cwiseAbs().maxCoeff();
  if (!(resid <= budget)) {
    throw ConditioningError("rbf: interpolation residual " + std::to_string(resid) +
                                " exceeds tolerance; increase the ridge or reduce the point count",
                            1.0 / std::max(state.rcond, 1e-300));
  }
}

void rbf_tail_eval(const RbfState& state, const double* x, double* bvals) {
  const int d = static_cast<int>(state.tail_center.size());
  thread_local std::vector<double> scaled;
  scaled.resize(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) scaled[static_cast<size_t>(j)] = (x[j] - state.tail_center[j]) / state.tail_scale[j];
  state.tail_basis.eval(scaled.data(), bvals);
}

}  // namespace

RbfModel rbf_fit(const PointCloud& cloud, const Eigen::Ref<const Eigen::VectorXd>& values,
                 const RbfKernel& kernel, double ridge) {
  if (values.size() != cloud.size()) throw DimensionError("rbf_fit: values/cloud size mismatch");
  RbfParams params;
  params.kernel = kernel;
  params.kernel_set = true;
  params.ridge = ridge;
  auto state = build_rbf_state(cloud, params);
  Eigen::MatrixXd v, z;
  rbf_solve(*state, values, v, z);

  RbfModel model;
  model.centers = cloud;
  model.kernel = state->kernel;
  model.coefficients = v.col(0);
  model.tail = z.col(0);
  model.condition_estimate = 1.0 / std::max(state->rcond, 1e-300);
  model.residual = (state->A * v + state->P * z - values).cwiseAbs().maxCoeff();
  return model;
}

double rbf_eval(const RbfModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const int M = model.centers.size();
  double acc = 0.0;
  for (int j = 0; j < M; ++j) {
    const double r2 = (x.transpose() - model.centers.points.row(j)).squaredNorm();
    acc += model.coefficients[j] * model.kernel.eval_r2(r2);
  }
  MonomialBasis basis(model.centers.dim(), model.kernel.tail_degree());
  const Eigen::VectorXd center = model.centers.box.center();
  const Eigen::VectorXd scale = model.centers.box.half_width();
  std::vector<double> scaled(static_cast<size_t>(x.size()));
  for (int j = 0; j < x.size(); ++j) scaled[static_cast<size_t>(j)] = (x[j] - center[j]) / scale[j];
  std::vector<double> bvals(static_cast<size_t>(basis.size()));
  basis.eval(scaled.data(), bvals.data());
  for (int q = 0; q < basis.size(); ++q) acc += model.tail[q] * bvals[static_cast<size_t>(q)];
  return acc;
}

// ---------------------------------------------------------------------------
// Multilinear tensor grid
// ---------------------------------------------------------------------------

namespace {

struct TensorLayout {
  int per_dim;
  int dim;

  long row(const std::vector<int>& idx) const {
    long r = 0;
    for (int j = 0; j < dim; ++j) r = r * per_dim + idx[j];
    return r;
  }
};

void multilinear_apply(const PointCloud& cloud, const Eigen::Ref<const Eigen::MatrixXd>& values,
                       const double* x, double* out) {
  const int d = cloud.dim();
  const int n = cloud.tensor_points_per_dim;
  const int K = static_cast<int>(values.cols());
  const TensorLayout layout{n, d};

  thread_local std::vector<int> base;
  thread_local std::vector<double> t;
  thread_local std::vector<int> corner;
  base.resize(static_cast<size_t>(d));
  t.resize(static_cast<size_t>(d));
  corner.resize(static_cast<size_t>(d));

  for (int j = 0; j < d; ++j) {
    const double lo = cloud.box.lower[j];
    const double h = (cloud.box.upper[j] - lo) / (n - 1);
    double s = (std::clamp(x[j], lo, cloud.box.upper[j]) - lo) / h;
    int cell = std::clamp(static_cast<int>(std::floor(s)), 0, n - 2);
    base[static_cast<size_t>(j)] = cell;
    t[static_cast<size_t>(j)] = std::clamp(s - cell, 0.0, 1.0);
  }
  for (int k = 0; k < K; ++k) out[k] = 0.0;
  for (int mask = 0; mask < (1 << d); ++mask) {
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      const bool hi = mask & (1 << j);
      corner[static_cast<size_t>(j)] = base[static_cast<size_t>(j)] + (hi ? 1 : 0);
      w *= hi ? t[static_cast<size_t>(j)] : 1.0 - t[static_cast<size_t>(j)];
    }
    if (w == 0.0) continue;
    const long row = layout.row(corner);
    for (int k = 0; k < K; ++k) out[k] += w * values(row, k);
  }
}

void require_tensor(const PointCloud& cloud) {
  const int n = cloud.tensor_points_per_dim;
  if (n < 2) throw BackendMismatchError("multilinear: cloud was not built by tensor_grid");
  double expect = std::pow(static_cast<double>(n), cloud.dim());
  if (std::llround(expect) != cloud.size()) {
    throw BackendMismatchError("multilinear: cloud size does not match per-dim count");
  }
}

}  // namespace

double multilinear_eval(const PointCloud& grid_cloud,
                        const Eigen::Ref<const Eigen::VectorXd>& values,
                        const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_tensor(grid_cloud);
  if (values.size() != grid_cloud.size()) throw DimensionError("multilinear_eval: size mismatch");
  double out;
  multilinear_apply(grid_cloud, values, x.data(), &out);
  return out;
}

// ---------------------------------------------------------------------------
// FieldFitter / Interpolant
// ---------------------------------------------------------------------------

FieldFitter::FieldFitter(PointCloud cloud, InterpConfig config) {
  if (cloud.size() == 0) throw Error("FieldFitter: empty cloud");
  auto state = std::make_shared<FitterState>();

  switch (config.backend) {
    case InterpBackend::Mls: {
      if (config.mls.radius <= 0.0) config.mls.radius = 3.0 * ensure_fill_distance(cloud);
      state->mls_basis = MonomialBasis(cloud.dim(), config.mls.degree);
      state->index = std::make_unique<GridIndex>(cloud.points, cloud.box, config.mls.radius);
      break;
    }
    case InterpBackend::Shepard: {
      if (config.shepard.radius <= 0.0) config.shepard.radius = 3.0 * ensure_fill_distance(cloud);
      state->index = std::make_unique<GridIndex>(cloud.points, cloud.box, config.shepard.radius);
      break;
    }
    case InterpBackend::Rbf: {
      state->rbf = build_rbf_state(cloud, config.rbf);
      break;
    }
    case InterpBackend::MultilinearTensor: {
      require_tensor(cloud);
      break;
    }
  }
  state->cloud = std::move(cloud);
  state->config = config;
  state_ = std::move(state);
}

const PointCloud& FieldFitter::cloud() const { return state_->cloud; }
const InterpConfig& FieldFitter::config() const { return state_->config; }

double FieldFitter::condition_estimate() const {
  return state_->rbf ? 1.0 / std::max(state_->rbf->rcond, 1e-300) : 0.0;
}

Interpolant FieldFitter::fit(const Eigen::Ref<const Eigen::MatrixXd>& values) const {
  if (values.rows() != state_->cloud.size()) throw DimensionError("fit: values row count != cloud size");
  if (!values.allFinite()) throw NumericOverflowError("fit: nodal values contain non-finite entries");
  Interpolant f;
  f.state_ = state_;
  if (state_->rbf) {
    Eigen::MatrixXd v, z;
    rbf_solve(*state_->rbf, values, v, z);
    f.coeffs_ = std::move(v);
    f.tail_ = std::move(z);
  } else {
    f.coeffs_ = values;
  }
  return f;
}

Interpolant interp_field(const PointCloud& cloud, const Eigen::Ref<const Eigen::MatrixXd>& values,
                         const InterpConfig& config) {
  return FieldFitter(cloud, config).fit(values);
}

InterpBackend Interpolant::backend() const { return state_->config.backend; }
const PointCloud& Interpolant::cloud() const { return state_->cloud; }

void Interpolant::eval_into(const Eigen::Ref<const Eigen::VectorXd>& x,
                            Eigen::Ref<Eigen::VectorXd> out) const {
  const FitterState& s = *state_;
  switch (s.config.backend) {
    case InterpBackend::Mls: {
      thread_local std::vector<Neighbor> nbrs;
      thread_local Eigen::MatrixXd gram;
      thread_local Eigen::LLT<Eigen::MatrixXd> llt;
      const double r = s.config.mls.radius;
      double radius_used = r;
      if (!gather_unisolvent(s.cloud.points, s.index.get(), x.data(), r,
                             s.config.mls.max_radius_doublings, s.mls_basis, nbrs, gram, llt,
                             radius_used)) {
        out = coeffs_.row(nearest_node(s.cloud.points, x.data())).transpose();
        return;
      }
      mls_apply(s.cloud.points, coeffs_, nbrs, s.mls_basis, radius_used, x.data(), llt, out.data(),
                nullptr);
      return;
    }
    case InterpBackend::Shepard:
      shepard_apply(s.cloud.points, coeffs_, s.index.get(), x.data(), s.config.shepard.radius,
                    out.data());
      return;
    case InterpBackend::Rbf: {
      const RbfState& rbf = *s.rbf;
      const int M = s.cloud.size();
      const int Q = static_cast<int>(rbf.P.cols());
      const int K = components();
      for (int k = 0; k < K; ++k) out[k] = 0.0;
      for (int j = 0; j < M; ++j) {
        const double r2 = (x.transpose() - s.cloud.points.row(j)).squaredNorm();
        const double phi = rbf.kernel.eval_r2(r2);
        for (int k = 0; k < K; ++k) out[k] += phi * coeffs_(j, k);
      }
      thread_local std::vector<double> bvals;
      bvals.resize(static_cast<size_t>(Q));
      rbf_tail_eval(rbf, x.data(), bvals.data());
      for (int q = 0; q < Q; ++q) {
        for (int k = 0; k < K; ++k) out[k] += bvals[static_cast<size_t>(q)] * tail_(q, k);
      }
      return;
    }
    case InterpBackend::MultilinearTensor:
      multilinear_apply(s.cloud, coeffs_, x.data(), out.data());
      return;
  }
}

Eigen::VectorXd Interpolant::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd out(components());
  eval_into(x, out);
  return out;
}

Eigen::MatrixXd Interpolant::eval_batch(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  const FitterState& s = *state_;
  const long B = X.rows();
  const int K = components();
  Eigen::MatrixXd out(B, K);

  if (s.config.backend == InterpBackend::Rbf) {
    // Chunked kernel-matrix evaluation: |x-c|^2 via one GEMM per chunk, the
    // kernel applied as an array expression, then dense products with the
    // coefficient blocks.
    const RbfState& rbf = *s.rbf;
    const int M = s.cloud.size();
    const int Q = static_cast<int>(rbf.P.cols());
    const Eigen::VectorXd center_sq = s.cloud.points.rowwise().squaredNorm();
    const long chunk = std::max<long>(1, std::min<long>(B, (1 << 22) / std::max(M, 1)));
    Eigen::MatrixXd d2, tails;
    for (long start = 0; start < B; start += chunk) {
      const long n = std::min(chunk, B - start);
      const auto rows = X.middleRows(start, n);
      d2.noalias() = -2.0 * rows * s.cloud.points.transpose();
      d2.rowwise() += center_sq.transpose();
      d2.colwise() += rows.rowwise().squaredNorm();
      d2 = d2.cwiseMax(0.0);
      if (rbf.kernel.log_kernel) {
        // r^4 log r = 0.5 * (r^2)^2 * log(r^2); force the r = 0 limit
        d2 = (d2.array() > 0.0)
                 .select(0.5 * d2.array().square() * d2.array().max(1e-300).log(), 0.0);
      } else {
        d2 = d2.array() * d2.array().sqrt();
      }
      out.middleRows(start, n).noalias() = d2 * coeffs_;

      tails.resize(n, Q);
      for (long i = 0; i < n; ++i) {
        Eigen::VectorXd xi = rows.row(i).transpose();
        thread_local std::vector<double> bvals;
        bvals.resize(static_cast<size_t>(Q));
        rbf_tail_eval(rbf, xi.data(), bvals.data());
        for (int q = 0; q < Q; ++q) tails(i, q) = bvals[static_cast<size_t>(q)];
      }
      out.middleRows(start, n).noalias() += tails * tail_;
    }
    return out;
  }

  Eigen::VectorXd row(K);
  for (long i = 0; i < B; ++i) {
    eval_into(X.row(i).transpose(), row);
    out.row(i) = row.transpose();
  }
  return out;
}

}  // namespace meshctrl
