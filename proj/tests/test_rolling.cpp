#include "rollkit/rolling.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace rollkit;

namespace {

ConfigPoint start(const ManifoldPair& pair, bool extended = false) {
  ConfigPoint q{pair.M.base_point, pair.M_hat.base_point, Matrix::Identity(pair.n(), pair.n()), std::nullopt};
  if (extended) q.B = Matrix::Identity(pair.nu(), pair.nu());
  return q;
}

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

ManifoldPair sphere_plane() { return ManifoldPair(sphere(2), euclidean(2)); }

}  // namespace

TEST(Rolling, ConfigurationDimensions) {
  EXPECT_EQ(config_dim(sphere_plane(), false), 5);
  EXPECT_EQ(config_dim(ManifoldPair(se3(), se3_flat()), false), 27);
  EXPECT_EQ(config_dim(ManifoldPair(se3(), se3_flat()), true), 72);
  EXPECT_EQ(config_dim(ManifoldPair(circle(), line()), false), 2);
  EXPECT_EQ(config_dim(ManifoldPair(circle(), line()), true), 3);
  EXPECT_THROW(config_dim(sphere_plane(), true), std::invalid_argument);
  EXPECT_THROW(ManifoldPair(sphere(2), euclidean(3)), std::invalid_argument);
}

TEST(Rolling, PackRoundTrip) {
  const ManifoldPair pair(se3(), se3_flat());
  ConfigPoint q = start(pair, true);
  q.x_hat = vec({0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  q.A = exp_skew(0.3 * skew_basis(6, {1, 4}));
  q.B = exp_skew(0.2 * skew_basis(10, {2, 7}));
  const Vector p = pack_state(pair, q);
  EXPECT_EQ(p.size(), 12 + 6 + 36 + 100);
  const ConfigPoint r = unpack_state(pair, p, true);
  EXPECT_EQ(r.x, q.x);
  EXPECT_EQ(r.x_hat, q.x_hat);
  EXPECT_EQ(r.A, q.A);
  EXPECT_EQ(*r.B, *q.B);
}

TEST(Rolling, InvalidStatesAreRejected) {
  const ManifoldPair pair = sphere_plane();
  ConfigPoint q = start(pair);
  q.A(0, 0) = -1.0;
  EXPECT_THROW(require_valid(pair, q), std::invalid_argument);
  q = start(pair);
  q.x = vec({0.0, 0.0, -1.0});
  EXPECT_THROW(require_valid(pair, q), DomainError);
  q = start(pair);
  q.A = Matrix::Identity(3, 3);
  EXPECT_THROW(require_valid(pair, q), std::invalid_argument);
}

TEST(TwistCoefficients, IdenticalManifoldsCancel) {
  const ManifoldPair pair(sphere(3), sphere(3));
  ConfigPoint q = start(pair);
  q.x = q.x_hat = vec({0.2, -0.3, 0.4, 0.8}).normalized();
  for (int k = 0; k < 3; ++k) EXPECT_LT(v_coefficients(pair, q, k).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TwistCoefficients, SphereOnPlane) {
  const int n = 3;
  const ManifoldPair pair(sphere(n), euclidean(n));
  ConfigPoint q = start(pair);
  q.x = vec({0.2, -0.3, 0.4, 0.8}).normalized();
  q.A = exp_skew(0.4 * skew_basis(n, {1, 3}) - 0.2 * skew_basis(n, {2, 3}));
  std::vector<double> s(n + 2, 0.0);
  for (int j = n; j >= 0; --j) s[j] = s[j + 1] + q.x[j] * q.x[j];
  for (int k = 1; k <= n; ++k) {
    Matrix expected = Matrix::Zero(n, n);
    for (int i = 1; i < k; ++i) {
      expected(i - 1, k - 1) = -q.x[i - 1] / std::sqrt(s[i - 1] * s[i]);
      expected(k - 1, i - 1) = -expected(i - 1, k - 1);
    }
    EXPECT_LT((v_coefficients(pair, q, k - 1) - expected).cwiseAbs().maxCoeff(), 1e-15) << "k=" << k;
  }
  EXPECT_THROW(v_coefficients(pair, q, n), std::invalid_argument);
}

TEST(TwistCoefficients, Se3OnFlatFirstDirection) {
  const ManifoldPair pair(se3(), se3_flat());
  const Matrix expected = skew_basis(6, {2, 3}) / (2 * std::sqrt(2.0)) + skew_basis(6, {4, 5}) / std::sqrt(2.0);
  EXPECT_LT((v_coefficients(pair, start(pair), 0) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TwistCoefficients, NormalPartCodimensionOne) {
  const ManifoldPair pair(sphere(2), sphere(2));
  const Matrix w = vperp_coefficients(pair, start(pair, true), 0);
  EXPECT_EQ(w.rows(), 1);
  EXPECT_EQ(w(0, 0), 0.0);
  EXPECT_THROW(vperp_coefficients(pair, start(pair), 0), std::invalid_argument);
}

TEST(TwistCoefficients, CircleOnLineNormalPartVanishes) {
  const ManifoldPair pair(circle(), line());
  EXPECT_LT(vperp_coefficients(pair, start(pair, true), 0).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Controls, PiecewiseConstantBreakpoints) {
  const Control c = Control::piecewise_constant({0.0, 0.5}, {vec({1, 0}), vec({0, 1})});
  EXPECT_EQ(c.breakpoints(), std::vector<double>{0.5});
  EXPECT_EQ(c(0.2), vec({1, 0}));
  EXPECT_EQ(c(0.5), vec({0, 1}));
  EXPECT_EQ(c(0.5, true), vec({1, 0}));
  EXPECT_TRUE(c.is_piecewise_constant());
  EXPECT_FALSE(Control::smooth([](double t) { return vec({t, 0}); }).is_piecewise_constant());
  EXPECT_THROW(Control::piecewise_constant({0.0, 0.0}, {vec({1}), vec({2})}), std::invalid_argument);
  EXPECT_THROW(Control::piecewise_constant({0.0}, {}), std::invalid_argument);
}

TEST(Integration, ZeroControlStaysPut) {
  const ManifoldPair pair = sphere_plane();
  const ConfigPoint q0 = start(pair);
  const RollingTrajectory tr = integrate_rolling(pair, q0, Control::constant(Vector::Zero(2)), 1.0, 0.1);
  for (const auto& q : tr.states) {
    EXPECT_EQ(q.x, q0.x);
    EXPECT_EQ(q.x_hat, q0.x_hat);
    EXPECT_LT((q.A - q0.A).norm(), 1e-15);
  }
}

TEST(Integration, BallRollsAlongGreatCircle) {
  const ManifoldPair pair = sphere_plane();
  const ConfigPoint q0 = start(pair);
  const Vector u = vec({1.0, 0.0});
  const RollingTrajectory tr = integrate_rolling(pair, q0, Control::constant(u), 1.0, 1e-3);
  const Vector w = pair.M.frame(q0.x) * u;
  for (std::size_t i = 0; i < tr.size(); i += 100) {
    const double t = tr.t[i];
    EXPECT_LT((tr.states[i].x - (std::cos(t) * q0.x + std::sin(t) * w)).norm(), 1e-10);
    EXPECT_LT((tr.states[i].x_hat - t * u).norm(), 1e-10);
  }
  const RollingReport rep = verify_rolling_conditions(pair, tr);
  EXPECT_TRUE(rep.passes(1e-6));
  EXPECT_EQ(rep.normal_status, "vacuous");
}

TEST(Integration, ContactCurvesHaveEqualLength) {
  const ManifoldPair pair = sphere_plane();
  const Vector u = vec({0.6, 0.8});
  const RollingTrajectory tr = integrate_rolling(pair, start(pair), Control::constant(u), 1.0, 1e-3);
  std::vector<Vector> xs;
  for (const auto& q : tr.states) xs.push_back(q.x);
  EXPECT_NEAR(curve_length(tr.t, xs), 1.0, 1e-9);
  EXPECT_NEAR(curve_length(tr.t, detail::contact_points(tr)), 1.0, 1e-9);
  EXPECT_TRUE(verify_rolling_conditions(pair, tr).passes(1e-6));
}

TEST(Integration, StaysOnConstraints) {
  const ManifoldPair pair(sphere(3), sphere(3));
  ConfigPoint q0 = start(pair);
  q0.x = vec({0.3, 0.1, -0.2, 0.9}).normalized();
  const Control c = Control::smooth([](double t) { return vec({std::cos(t), 0.5, std::sin(2 * t)}); });
  for (Stepper s : {Stepper::rk4, Stepper::exponential}) {
    IntegrateOptions opt;
    opt.stepper = s;
    const RollingTrajectory tr = integrate_rolling(pair, q0, c, 0.8, 1e-3, opt);
    const ConfigPoint& q = tr.states.back();
    EXPECT_LT(std::abs(q.x.norm() - 1.0), 1e-9);
    EXPECT_LT(std::abs(q.x_hat.norm() - 1.0), 1e-9);
    EXPECT_LT(orthogonality_defect(q.A), 1e-9);
    EXPECT_GT(q.A.determinant(), 0.0);
    EXPECT_LT(distribution_residual(pair, tr), 1e-6);
  }
}

TEST(Integration, ReversingTheControlReturnsHome) {
  const ManifoldPair pair(sphere(2), sphere(2));
  ConfigPoint q0 = start(pair);
  q0.x = vec({0.2, 0.1, 0.9}).normalized();
  const Control fwd = Control::smooth([](double t) { return vec({1.0, std::sin(3 * t)}); });
  const double T = 0.7;
  const Control bwd = Control::smooth([&fwd, T](double t) -> Vector { return -fwd(T - t); });
  const RollingTrajectory a = integrate_rolling(pair, q0, fwd, T, 1e-3);
  const RollingTrajectory b = integrate_rolling(pair, a.states.back(), bwd, T, 1e-3);
  const ConfigPoint& q = b.states.back();
  EXPECT_LT((q.x - q0.x).norm(), 1e-6);
  EXPECT_LT((q.x_hat - q0.x_hat).norm(), 1e-6);
  EXPECT_LT((q.A - q0.A).norm(), 1e-6);
}

TEST(Integration, PiecewiseControlKeepsBreakpoints) {
  const ManifoldPair pair = sphere_plane();
  const Control c = Control::piecewise_constant({0.0, 0.35}, {vec({1, 0}), vec({0, 1})});
  const RollingTrajectory tr = integrate_rolling(pair, start(pair), c, 0.8, 1e-2);
  EXPECT_EQ(tr.breakpoints, std::vector<double>{0.35});
  EXPECT_EQ(std::count(tr.t.begin(), tr.t.end(), 0.35), 1);
  EXPECT_TRUE(verify_rolling_conditions(pair, tr).passes(1e-6));
}

TEST(Integration, ChartExitCarriesPartialTrajectory) {
  const ManifoldPair pair = sphere_plane();
  try {
    integrate_rolling(pair, start(pair), Control::constant(vec({1, 0})), M_PI, 1e-2);
    FAIL() << "expected ChartExit";
  } catch (const ChartExit& e) {
    EXPECT_GT(e.t, 1.4);
    EXPECT_LT(e.t, M_PI / 2 + 1e-2);
    EXPECT_FALSE(e.partial.states.empty());
    EXPECT_LE(e.partial.t.back(), e.t);
  }
}

TEST(Residuals, ConstructedViolationsAreDetected) {
  const ManifoldPair pair = sphere_plane();
  const RollingTrajectory good = integrate_rolling(pair, start(pair), Control::constant(vec({1, 0})), 1.0, 1e-2);

  RollingTrajectory frozen = good;
  for (auto& q : frozen.states) q.x_hat = good.states.front().x_hat;
  EXPECT_GT(noslip_residual(pair, frozen), 0.5);

  RollingTrajectory twisted = good;
  for (std::size_t i = 0; i < twisted.size(); ++i)
    twisted.states[i].A = good.states[i].A * exp_skew(twisted.t[i] * skew_basis(2, {1, 2}));
  EXPECT_GT(frame_coefficient_drift(pair, twisted).tangential, 0.5);
  EXPECT_GT(distribution_residual(pair, twisted), 0.5);

  RollingTrajectory flipped = good;
  for (auto& q : flipped.states) q.A.col(1) *= -1.0;
  const RollingReport rep = verify_rolling_conditions(pair, flipped);
  EXPECT_FALSE(rep.orientation);
  EXPECT_FALSE(rep.passes());
}

TEST(Residuals, NormalStatus) {
  const ManifoldPair pair(se3(), se3_flat());
  const Control c = Control::constant(vec({std::sqrt(2.0), 0, 0, 0, 0, 1}));
  const RollingTrajectory tr = integrate_rolling(pair, start(pair), c, 0.3, 1e-2);
  const RollingReport intrinsic = verify_rolling_conditions(pair, tr);
  EXPECT_EQ(intrinsic.normal_status, "intrinsic");
  EXPECT_FALSE(intrinsic.notwist_normal);
  const RollingTrajectory ext = integrate_rolling(pair, start(pair, true), c, 0.3, 1e-2);
  const RollingReport checked = verify_rolling_conditions(pair, ext);
  EXPECT_EQ(checked.normal_status, "checked");
  ASSERT_TRUE(checked.notwist_normal);
  EXPECT_LT(*checked.notwist_normal, 1e-6);
  EXPECT_TRUE(checked.passes(1e-6));
}

TEST(Extension, Se3IdentityStaysConstantInParallelFrames) {
  const ManifoldPair pair(se3(), se3_flat());
  const Control c = Control::constant(vec({std::sqrt(2.0), 0, 0, 0, 0, 1}));
  const RollingTrajectory tr = integrate_rolling(pair, start(pair), c, 1.0, 1e-2);
  const RollingTrajectory ext = extend_to_extrinsic(pair, tr, Matrix::Identity(10, 10));
  ASSERT_TRUE(ext.extended());
  EXPECT_LT(distribution_residual(pair, ext), 1e-6);
  const FrameDrift d = frame_coefficient_drift(pair, ext);
  ASSERT_TRUE(d.normal);
  EXPECT_LT(*d.normal, 1e-7);
  EXPECT_THROW(extend_to_extrinsic(pair, tr, Matrix::Identity(9, 9)), std::invalid_argument);
}

TEST(Extension, CodimensionZeroGivesEmptyB) {
  const ManifoldPair pair(euclidean(2), euclidean(2));
  const RollingTrajectory tr = integrate_rolling(pair, start(pair), Control::constant(vec({1, 1})), 0.2, 0.1);
  const RollingTrajectory ext = extend_to_extrinsic(pair, tr, Matrix(0, 0));
  for (const auto& q : ext.states) EXPECT_EQ(q.B->size(), 0);
}

TEST(AmbientIsometry, IdentityConfiguration) {
  const ManifoldPair pair(se3(), se3());
  const AmbientIsometry g = reconstruct_ambient_isometry(pair, start(pair, true));
  EXPECT_LT((g.A_bar - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(g.r_bar.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AmbientIsometry, MapsContactPointAndFrames) {
  const ManifoldPair pair(sphere(2), sphere(2, -1));
  ConfigPoint q{vec({0.3, 0.1, 0.9}).normalized(), vec({-0.2, 0.4, -0.8}).normalized(),
                exp_skew(0.7 * skew_basis(2, {1, 2})), Matrix::Identity(1, 1)};
  const AmbientIsometry g = reconstruct_ambient_isometry(pair, q);
  EXPECT_LT((g.A_bar.transpose() * g.A_bar - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((g.A_bar * q.x + g.r_bar - q.x_hat).norm(), 1e-14);
  EXPECT_LT((g.A_bar * pair.M.frame(q.x) - pair.M_hat.frame(q.x_hat) * q.A).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Freedom, StraightLineInPlane) {
  const FramedChart plane = euclidean(3);
  const Curve line = Curve::from_function(0.0, 1.0, [](double t) {
    return CurvePoint{vec({t, 0, 0}), vec({1, 0, 0})};
  });
  EXPECT_EQ(rolling_freedom(plane, line, 1e-2), 2);
  const Curve bent = Curve::from_function(0.0, 1.0, [](double t) {
    return CurvePoint{vec({std::cos(t), std::sin(t), 0}), vec({-std::sin(t), std::cos(t), 0})};
  });
  EXPECT_EQ(rolling_freedom(plane, bent, 1e-2), 1);
  const Curve circle2 = Curve::from_function(0.0, 1.0, [](double t) {
    return CurvePoint{vec({std::cos(t), std::sin(t)}), vec({-std::sin(t), std::cos(t)})};
  });
  EXPECT_EQ(rolling_freedom(euclidean(2), circle2, 1e-2), 0);
  const Curve screw_image = Curve::from_function(0.0, 1.0, [](double t) {
    return CurvePoint{vec({std::sqrt(2.0) * t, 0, 0, 0, 0, t}), vec({std::sqrt(2.0), 0, 0, 0, 0, 1})};
  });
  EXPECT_EQ(rolling_freedom(se3_flat(), screw_image, 1e-2), 5);
}
