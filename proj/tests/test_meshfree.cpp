// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "meshctrl/errors.hpp"
#include "meshctrl/meshfree.hpp"
#include "meshctrl/util.hpp"

using namespace meshctrl;

namespace {

PointCloud halton_cloud(int count, int dim, long skip = 0) {
  return scale_to_box(halton_sequence(count, dim, skip), DomainBox::unit(dim));
}

Eigen::VectorXd sample(const PointCloud& cloud, const std::function<double(const Eigen::VectorXd&)>& f) {
  Eigen::VectorXd out(cloud.size());
  for (int k = 0; k < cloud.size(); ++k) out[k] = f(cloud.points.row(k).transpose());
  return out;
}

double probe_max_error(const Interpolant& field, const std::function<double(const Eigen::VectorXd&)>& f,
                       int per_dim) {
  const PointCloud probes = tensor_grid(per_dim, field.cloud().box);
  const Eigen::MatrixXd vals = field.eval_batch(probes.points);
  double worst = 0.0;
  for (int i = 0; i < probes.size(); ++i) {
    worst = std::max(worst, std::abs(vals(i, 0) - f(probes.points.row(i).transpose())));
  }
  return worst;
}

const auto sin_cos = [](const Eigen::VectorXd& x) { return std::sin(x[0]) * std::cos(x[1]); };

}  // namespace

// ---------------------------------------------------------------------------
// MLS
// ---------------------------------------------------------------------------

TEST_CASE("mls reproduces linear fields exactly") {
  const PointCloud cloud = halton_cloud(80, 2);
  auto f = [](const Eigen::VectorXd& x) { return 2.0 * x[0] - x[1] + 3.0; };
  const Eigen::VectorXd values = sample(cloud, f);
  MlsParams params;
  params.degree = 1;

  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(2);
    x << rng.next_double(), rng.next_double();
    const MlsEvaluation eval = mls_eval(cloud, values, x, params);
    CHECK(eval.value == doctest::Approx(f(x)).epsilon(1e-10));
  }
}

TEST_CASE("mls constant reproduction is a partition of unity") {
  const PointCloud cloud = halton_cloud(60, 2);
  const Eigen::VectorXd values = Eigen::VectorXd::Constant(60, 7.25);
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd x(2);
    x << rng.next_double(), rng.next_double();
    const MlsEvaluation eval = mls_eval(cloud, values, x, MlsParams{});
    CHECK(eval.value == doctest::Approx(7.25).epsilon(1e-12));
    double coeff_sum = 0.0;
    for (const auto& [idx, a] : eval.coefficients) coeff_sum += a;
    CHECK(coeff_sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("mls degree-l polynomial reproduction on random quadratics") {
  const PointCloud cloud = halton_cloud(200, 2);
  Rng rng(11);
  MlsParams params;
  params.degree = 2;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd c(6);
    for (int i = 0; i < 6; ++i) c[i] = 2.0 * rng.next_double() - 1.0;
    auto poly = [&c](const Eigen::VectorXd& x) {
      return c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] +
             c[5] * x[1] * x[1];
    };
    const Eigen::VectorXd values = sample(cloud, poly);
    for (int q = 0; q < 20; ++q) {
      Eigen::VectorXd x(2);
      x << rng.next_double(), rng.next_double();
      CHECK(mls_eval(cloud, values, x, params).value == doctest::Approx(poly(x)).epsilon(1e-8));
    }
  }
}

TEST_CASE("mls h-refinement: error shrinks 3x-5x per fill-distance halving") {
  // Halton counts cannot hit h/2 exactly, so the 3x..5x band per doubling is
  // asserted as the equivalent order band against the measured h ratio
  PointCloud coarse = halton_cloud(256, 2);
  PointCloud fine = halton_cloud(1024, 2);
  const double h_ratio = ensure_fill_distance(coarse) / ensure_fill_distance(fine);
  CHECK(h_ratio > 1.8);
  const Eigen::MatrixXd cv = sample(coarse, sin_cos);
  const Eigen::MatrixXd fv = sample(fine, sin_cos);
  const InterpConfig cfg = InterpConfig::make(InterpBackend::Mls);
  const double e_coarse = probe_max_error(interp_field(coarse, cv, cfg), sin_cos, 50);
  const double e_fine = probe_max_error(interp_field(fine, fv, cfg), sin_cos, 50);
  const double order = std::log(e_coarse / e_fine) / std::log(h_ratio);
  MESSAGE("mls errors ", e_coarse, " -> ", e_fine, " observed order ", order);
  CHECK(order >= std::log2(3.0));
  CHECK(order <= std::log2(5.0));
}

TEST_CASE("mls non-unisolvent neighborhood reports the neighbor count") {
  // two nodes cannot reproduce a 2-d linear polynomial
  PointCloud cloud;
  cloud.box = DomainBox::unit(2);
  cloud.points.resize(2, 2);
  cloud.points << 0.45, 0.5, 0.55, 0.5;
  cloud.fill_distance = 0.5;
  MlsParams params;
  params.radius = 10.0;  // everything in range, enlargement cannot help
  params.max_radius_doublings = 0;
  Eigen::VectorXd values(2);
  values << 1.0, 2.0;
  Eigen::VectorXd x(2);
  x << 0.5, 0.5;
  try {
    mls_eval(cloud, values, x, params);
    FAIL("expected RadiusTooSmallError");
  } catch (const RadiusTooSmallError& e) {
    CHECK(e.neighbor_count == 2);
  }
}

TEST_CASE("mls beyond-support queries take the nearest node value") {
  const PointCloud cloud = halton_cloud(40, 2);
  const Eigen::VectorXd values = sample(cloud, [](const Eigen::VectorXd& x) { return x[0]; });
  MlsParams params;
  params.radius = 0.05;
  params.max_radius_doublings = 0;
  Eigen::VectorXd far(2);
  far << 25.0, 25.0;
  const MlsEvaluation eval = mls_eval(cloud, values, far, params);
  REQUIRE(eval.coefficients.size() == 1);
  CHECK(eval.coefficients[0].second == 1.0);
  CHECK(eval.value == values[eval.coefficients[0].first]);
}

// ---------------------------------------------------------------------------
// Shepard
// ---------------------------------------------------------------------------

TEST_CASE("shepard basics: constants, exact hits, symmetry") {
  const PointCloud cloud = halton_cloud(50, 2);
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(50, -2.5);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x(2);
    x << rng.next_double(), rng.next_double();
    CHECK(shepard_eval(cloud, constant, x, 0.4) == doctest::Approx(-2.5).epsilon(1e-13));
  }

  const Eigen::VectorXd values = sample(cloud, [](const Eigen::VectorXd& x) { return x[0] * 3.0; });
  const Eigen::VectorXd hit = cloud.points.row(17).transpose();
  CHECK(shepard_eval(cloud, values, hit, 0.4) == values[17]);

  PointCloud pair;
  pair.box = DomainBox::unit(1);
  pair.points.resize(2, 1);
  pair.points << 0.0, 1.0;
  Eigen::VectorXd v(2);
  v << 0.0, 1.0;
  Eigen::VectorXd mid(1);
  mid << 0.5;
  CHECK(shepard_eval(pair, v, mid, 2.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("shepard output stays within the data range") {
  const PointCloud cloud = halton_cloud(100, 2);
  Rng rng(5);
  Eigen::VectorXd values(100);
  for (int i = 0; i < 100; ++i) values[i] = 10.0 * rng.next_double() - 5.0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd x(2);
    x << 1.4 * rng.next_double() - 0.2, 1.4 * rng.next_double() - 0.2;
    const double v = shepard_eval(cloud, values, x, 0.3);
    CHECK(v >= values.minCoeff() - 1e-12);
    CHECK(v <= values.maxCoeff() + 1e-12);
  }
}

TEST_CASE("shepard lagrange basis is nonnegative and sums to one") {
  // evaluate the basis through unit nodal vectors; discrete Jensen follows
  const int M = 30;
  const PointCloud cloud = halton_cloud(M, 2);
  const InterpConfig cfg = InterpConfig::make(InterpBackend::Shepard);
  const FieldFitter fitter(cloud, cfg);
  const Interpolant identity = fitter.fit(Eigen::MatrixXd::Identity(M, M));
  Rng rng(19);
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd x(2);
    x << rng.next_double(), rng.next_double();
    const Eigen::VectorXd basis = identity(x);
    CHECK(basis.minCoeff() >= 0.0);
    CHECK(basis.sum() == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXd data(M, 2);
    for (int i = 0; i < M; ++i) {
      data(i, 0) = 4.0 * rng.next_double() - 2.0;
      data(i, 1) = data(i, 0) * data(i, 0);
    }
    const Interpolant f = fitter.fit(data);
    const Eigen::VectorXd out = f(x);
    CHECK(out[0] * out[0] <= out[1] + 1e-14 * std::max(1.0, std::abs(out[1])));
  }
}

// ---------------------------------------------------------------------------
// RBF
// ---------------------------------------------------------------------------

TEST_CASE("rbf fit on polynomial data needs no kernel part") {
  const PointCloud cloud = halton_cloud(120, 2);
  auto poly = [](const Eigen::VectorXd& x) {
    return 1.5 - 0.5 * x[0] + x[1] + 0.25 * x[0] * x[0] - x[0] * x[1];
  };
  const Eigen::VectorXd values = sample(cloud, poly);
  const RbfModel model = rbf_fit(cloud, values, RbfKernel::for_dimension(2), 0.0);
  CHECK(model.coefficients.cwiseAbs().maxCoeff() < 1e-8);
  Rng rng(23);
  for (int t = 0; t < 40; ++t) {
    Eigen::VectorXd x(2);
    x << rng.next_double(), rng.next_double();
    CHECK(rbf_eval(model, x) == doctest::Approx(poly(x)).epsilon(1e-8));
  }
}

TEST_CASE("rbf with exactly unisolvent centers interpolates polynomial data") {
  // six nodes, six tail monomials: the tail alone carries the fit
  PointCloud cloud;
  cloud.box = DomainBox::unit(2);
  cloud.points.resize(6, 2);
  cloud.points << 0.1, 0.1, 0.9, 0.15, 0.2, 0.85, 0.5, 0.4, 0.75, 0.75, 0.35, 0.6;
  auto poly = [](const Eigen::VectorXd& x) { return 2.0 + x[0] - 3.0 * x[1] + x[0] * x[1]; };
  const Eigen::VectorXd values = sample(cloud, poly);
  const RbfModel model = rbf_fit(cloud, values, RbfKernel::for_dimension(2), 0.0);
  for (int k = 0; k < 6; ++k) {
    CHECK(rbf_eval(model, cloud.points.row(k).transpose()) ==
          doctest::Approx(values[k]).epsilon(1e-8));
  }
}

TEST_CASE("rbf interpolation and moment conditions hold at solver tolerance") {
  const PointCloud cloud = halton_cloud(150, 2);
  const Eigen::VectorXd values = sample(cloud, sin_cos);
  const RbfModel model = rbf_fit(cloud, values, RbfKernel::for_dimension(2));
  CHECK(model.residual <= 1e-8 * (1.0 + values.cwiseAbs().maxCoeff()));
  for (int k = 0; k < cloud.size(); ++k) {
    CHECK(rbf_eval(model, cloud.points.row(k).transpose()) ==
          doctest::Approx(values[k]).epsilon(1e-7));
  }
  // moment conditions P^T v = 0
  const int Q = polynomial_space_dim(2, model.kernel.tail_degree());
  Eigen::MatrixXd P(cloud.size(), Q);
  const Eigen::VectorXd center = cloud.box.center();
  const Eigen::VectorXd scale = cloud.box.half_width();
  for (int k = 0; k < cloud.size(); ++k) {
    const double sx = (cloud.points(k, 0) - center[0]) / scale[0];
    const double sy = (cloud.points(k, 1) - center[1]) / scale[1];
    P.row(k) << 1.0, sy, sy * sy, sx, sx * sy, sx * sx;  // any basis of pi_2 works
  }
  CHECK((P.transpose() * model.coefficients).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("rbf pure tail evaluation") {
  // v = 0 and a tail encoding x^2 must evaluate to exactly x^2
  const PointCloud cloud = halton_cloud(30, 2);
  auto f = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  const RbfModel model = rbf_fit(cloud, sample(cloud, f), RbfKernel::for_dimension(2), 0.0);
  CHECK(model.coefficients.cwiseAbs().maxCoeff() < 1e-8);
  Eigen::VectorXd x(2);
  x << 0.31, 0.77;
  CHECK(rbf_eval(model, x) == doctest::Approx(f(x)).epsilon(1e-9));
}

TEST_CASE("rbf h-refinement: error shrinks 3x-6x per fill-distance halving") {
  PointCloud coarse = halton_cloud(256, 2);
  PointCloud fine = halton_cloud(1024, 2);
  const double h_ratio = ensure_fill_distance(coarse) / ensure_fill_distance(fine);
  const InterpConfig cfg = InterpConfig::make(InterpBackend::Rbf);
  const double e_coarse =
      probe_max_error(interp_field(coarse, sample(coarse, sin_cos), cfg), sin_cos, 50);
  const double e_fine = probe_max_error(interp_field(fine, sample(fine, sin_cos), cfg), sin_cos, 50);
  const double order = std::log(e_coarse / e_fine) / std::log(h_ratio);
  MESSAGE("rbf errors ", e_coarse, " -> ", e_fine, " observed order ", order);
  CHECK(order >= std::log2(3.0));
  CHECK(order <= std::log2(6.0));
}

TEST_CASE("rbf flags a singular system") {
  // duplicated centers with no ridge make the saddle system singular
  PointCloud cloud;
  cloud.box = DomainBox::unit(2);
  cloud.points.resize(8, 2);
  cloud.points << 0.1, 0.1, 0.1, 0.1, 0.9, 0.2, 0.3, 0.8, 0.5, 0.5, 0.7, 0.7, 0.2, 0.6, 0.8, 0.9;
  Eigen::VectorXd values = Eigen::VectorXd::LinSpaced(8, 0.0, 1.0);
  CHECK_THROWS_AS(rbf_fit(cloud, values, RbfKernel::for_dimension(2), 0.0), ConditioningError);
}

TEST_CASE("rbf kernel limits and defaults") {
  const RbfKernel even = RbfKernel::for_dimension(2);
  CHECK(even.log_kernel);
  CHECK(even.cpd_order == 3);
  CHECK(even.eval_r2(0.0) == 0.0);  // r^4 log r -> 0
  const RbfKernel odd = RbfKernel::for_dimension(3);
  CHECK(!odd.log_kernel);
  CHECK(odd.cpd_order == 2);
  CHECK(odd.eval_r2(4.0) == doctest::Approx(8.0));  // r^3 at r=2
}

TEST_CASE("rbf vector fit shares the factorization and matches scalar fits") {
  const PointCloud cloud = halton_cloud(90, 2);
  Eigen::MatrixXd values(90, 2);
  values.col(0) = sample(cloud, sin_cos);
  values.col(1) = sample(cloud, [](const Eigen::VectorXd& x) { return x[0] - x[1] * x[1]; });
  const Interpolant both = interp_field(cloud, values, InterpConfig::make(InterpBackend::Rbf));
  const RbfModel first = rbf_fit(cloud, values.col(0), RbfKernel::for_dimension(2));
  Eigen::VectorXd x(2);
  x << 0.62, 0.18;
  const Eigen::VectorXd out = both(x);
  CHECK(out[0] == doctest::Approx(rbf_eval(first, x)).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// Multilinear tensor
// ---------------------------------------------------------------------------

TEST_CASE("multilinear is exact for multilinear functions") {
  const PointCloud grid = tensor_grid(5, DomainBox::unit(2));
  auto f = [](const Eigen::VectorXd& x) { return x[0] * x[1]; };
  const Eigen::VectorXd values = sample(grid, f);
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd x(2);
    x << rng.next_double(), rng.next_double();
    CHECK(multilinear_eval(grid, values, x) == doctest::Approx(f(x)).epsilon(1e-13));
  }
  // grid nodes give back nodal values
  for (int k = 0; k < grid.size(); ++k) {
    CHECK(multilinear_eval(grid, values, grid.points.row(k).transpose()) ==
          doctest::Approx(values[k]).epsilon(1e-13));
  }
}

TEST_CASE("multilinear 1-d blend and backend mismatch") {
  const PointCloud grid = tensor_grid(2, DomainBox::unit(1));
  Eigen::VectorXd values(2);
  values << 0.0, 10.0;
  Eigen::VectorXd x(1);
  x << 0.3;
  CHECK(multilinear_eval(grid, values, x) == doctest::Approx(3.0).epsilon(1e-14));

  const PointCloud scattered = halton_cloud(4, 1);
  CHECK_THROWS_AS(multilinear_eval(scattered, values.head(4), x), BackendMismatchError);
}

TEST_CASE("multilinear clamps out-of-box queries") {
  const PointCloud grid = tensor_grid(3, DomainBox::unit(1));
  Eigen::VectorXd values(3);
  values << 1.0, 2.0, 5.0;
  Eigen::VectorXd x(1);
  x << 1.7;
  CHECK(multilinear_eval(grid, values, x) == doctest::Approx(5.0));
}

// ---------------------------------------------------------------------------
// facade
// ---------------------------------------------------------------------------

TEST_CASE("interp_field dispatch honors each back-end contract") {
  const PointCloud cloud = halton_cloud(64, 2);
  auto linear = [](const Eigen::VectorXd& x) { return 4.0 * x[0] + x[1] - 2.0; };
  const Eigen::MatrixXd values = sample(cloud, linear);

  const Interpolant mls = interp_field(cloud, values, InterpConfig::make(InterpBackend::Mls));
  Eigen::VectorXd x(2);
  x << 0.37, 0.58;
  CHECK(mls(x)[0] == doctest::Approx(linear(x)).epsilon(1e-10));

  const Interpolant rbf = interp_field(cloud, values, InterpConfig::make(InterpBackend::Rbf));
  for (int k = 0; k < cloud.size(); ++k) {
    CHECK(rbf(cloud.points.row(k).transpose())[0] == doctest::Approx(values(k, 0)).epsilon(1e-7));
  }

  const Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(64, 1, 9.5);
  const Interpolant shepard = interp_field(cloud, constant, InterpConfig::make(InterpBackend::Shepard));
  CHECK(shepard(x)[0] == doctest::Approx(9.5).epsilon(1e-13));
}

TEST_CASE("batch evaluation agrees with pointwise evaluation") {
  const PointCloud cloud = halton_cloud(128, 2);
  const Eigen::MatrixXd values = sample(cloud, sin_cos);
  const Eigen::MatrixXd queries = halton_sequence(200, 2, 1000);
  for (InterpBackend backend : {InterpBackend::Mls, InterpBackend::Shepard, InterpBackend::Rbf}) {
    const Interpolant field = interp_field(cloud, values, InterpConfig::make(backend));
    const Eigen::MatrixXd batch = field.eval_batch(queries);
    for (int i = 0; i < queries.rows(); i += 17) {
      const double single = field(queries.row(i).transpose())[0];
      CHECK(batch(i, 0) == doctest::Approx(single).epsilon(1e-9));
    }
  }
}
