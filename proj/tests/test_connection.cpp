#include "rollkit/connection.hpp"
#include "rollkit/manifold.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rollkit;

namespace {

const double kC = 1.0 / (2.0 * std::sqrt(2.0));

Curve latitude(double phi, double T = 2.0 * M_PI) {
  return Curve::from_function(0.0, T, [phi](double t) {
    CurvePoint p;
    p.x = Eigen::Vector3d(std::sin(phi) * std::cos(t), std::sin(phi) * std::sin(t), std::cos(phi));
    p.xdot = Eigen::Vector3d(-std::sin(phi) * std::sin(t), std::sin(phi) * std::cos(t), 0.0);
    return p;
  });
}

// Parallel transport on the unit sphere as an ODE in R^3: v' = -<v, x'> x.
Vector ambient_sphere_transport(const Curve& c, Vector v, int steps) {
  const double h = (c.t1() - c.t0()) / steps;
  auto rhs = [&c](double t, const Vector& w) -> Vector {
    const CurvePoint p = c.at(t);
    return -w.dot(p.xdot) * p.x;
  };
  for (int s = 0; s < steps; ++s) {
    const double t = c.t0() + s * h;
    const Vector k1 = rhs(t, v);
    const Vector k2 = rhs(t + h / 2, v + h / 2 * k1);
    const Vector k3 = rhs(t + h / 2, v + h / 2 * k2);
    const Vector k4 = rhs(t + h, v + h * k3);
    v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return v;
}

// Sphere of radius R in R^3, upper hemisphere, with the unit-sphere frame (which
// is scale invariant) and no closed-form connection.
FramedChart scaled_sphere(double R) {
  FramedChart M;
  M.name = "sphere_R";
  M.n = 2;
  M.m = 3;
  M.frame = [](const Vector& x) -> Matrix { return charts::sphere_frame<double>(x, 1); };
  M.domain_violation = [R](const Vector& x) -> std::optional<std::string> {
    if (std::abs(x.norm() - R) > kDomainTolerance) return "off the sphere";
    if (x[2] <= 0.0) return "lower hemisphere";
    return std::nullopt;
  };
  M.retraction = [R](const Vector& x) -> Vector { return R * x / x.norm(); };
  AmbientData amb;
  amb.N = 3;
  amb.nu = 1;
  amb.embedding = [](const Vector& x) { return x; };
  amb.frame = M.frame;
  amb.normal_frame = [](const Vector& x) -> Matrix { return x / x.norm(); };
  M.ambient = amb;
  return M;
}

// Unit cylinder x0^2 + x1^2 = 1 in R^3.
FramedChart cylinder() {
  FramedChart M;
  M.name = "cylinder";
  M.n = 2;
  M.m = 3;
  M.frame = [](const Vector& x) -> Matrix {
    Matrix e = Matrix::Zero(3, 2);
    e(0, 0) = -x[1];
    e(1, 0) = x[0];
    e(2, 1) = 1.0;
    return e;
  };
  M.domain_violation = [](const Vector& x) -> std::optional<std::string> {
    if (std::abs(x.head(2).norm() - 1.0) > kDomainTolerance) return "off the cylinder";
    return std::nullopt;
  };
  M.retraction = [](const Vector& x) -> Vector {
    Vector y = x;
    y.head(2) /= x.head(2).norm();
    return y;
  };
  AmbientData amb;
  amb.N = 3;
  amb.nu = 1;
  amb.embedding = [](const Vector& x) { return x; };
  amb.frame = M.frame;
  amb.normal_frame = [](const Vector& x) -> Matrix { return Eigen::Vector3d(x[0], x[1], 0.0); };
  M.ambient = amb;
  return M;
}

// det of the second fundamental form <D_{e_i} e_j, N> of a surface in R^3.
double shape_determinant(const FramedChart& M, const Vector& x) {
  const Matrix e = M.frame(x);
  const Vector nrm = M.ambient->normal_frame(x).col(0);
  const double h = 1e-5;
  Matrix ii(2, 2);
  for (int i = 0; i < 2; ++i) {
    const Matrix d = (M.frame(M.retraction(x + h * e.col(i))) - M.frame(M.retraction(x - h * e.col(i)))) / (2 * h);
    for (int j = 0; j < 2; ++j) ii(i, j) = d.col(j).dot(nrm);
  }
  return ii.determinant();
}

Vector se3_point(const Matrix& c, const Eigen::Vector3d& r) {
  Vector x(12);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) x[3 * i + j] = c(i, j);
  x.segment(9, 3) = r;
  return x;
}

}  // namespace

TEST(Transport, LatitudeHolonomyMatchesAmbientOracle) {
  const FramedChart M = sphere(2);
  for (double phi : {M_PI / 6, M_PI / 3}) {
    const Curve c = latitude(phi);
    const Vector x0 = c.at(0.0).x;
    const Vector z0 = Eigen::Vector2d(1.0, 0.0);
    const CoefficientPath path = parallel_transport(M, c, z0, 1e-3);
    const Vector zT = path.z.back().col(0);
    const Vector v = ambient_sphere_transport(c, M.frame(x0) * z0, 8000);
    const Vector zo = M.frame(c.at(c.t1()).x).transpose() * v;
    EXPECT_LT((zT - zo).norm(), 1e-9) << "phi=" << phi;
    // Rotation by the enclosed area 2 pi (1 - cos phi).
    EXPECT_NEAR(zT.dot(z0), std::cos(2 * M_PI * (1 - std::cos(phi))), 1e-9) << "phi=" << phi;
  }
}

TEST(Transport, PreservesNormAndIsReversible) {
  const FramedChart M = sphere(2);
  const Curve c = latitude(0.7, 2.5);
  const Curve back = Curve::from_function(0.0, 2.5, [&c](double t) {
    CurvePoint p = c.at(2.5 - t);
    p.xdot = -p.xdot;
    return p;
  });
  const Vector z0 = Eigen::Vector2d(0.3, -1.1);
  const Matrix zT = parallel_transport(M, c, z0, 1e-3).z.back();
  EXPECT_NEAR(zT.norm(), z0.norm(), 1e-12);
  const Matrix zb = parallel_transport(M, back, zT, 1e-3).z.back();
  EXPECT_LT((zb - z0).norm(), 1e-10);
}

TEST(Transport, CodimensionOneNormalTransportIsTrivial) {
  const FramedChart M = sphere(2);
  const CoefficientPath p = normal_parallel_transport(M, latitude(0.5), Matrix::Ones(1, 1), 1e-2);
  for (const Matrix& w : p.z) EXPECT_NEAR(w(0, 0), 1.0, 1e-9);
}

TEST(Transport, SizeChecks) {
  const FramedChart M = sphere(2);
  EXPECT_THROW(parallel_transport(M, latitude(0.5), Matrix::Ones(3, 1)), std::invalid_argument);
  EXPECT_THROW(normal_parallel_transport(M, latitude(0.5), Matrix::Ones(2, 1)), std::invalid_argument);
  EXPECT_THROW(parallel_transport(M, latitude(0.5), Matrix::Ones(2, 1), 0.0), std::invalid_argument);
  EXPECT_THROW(parallel_transport(M, latitude(1.7), Matrix::Ones(2, 1)), DomainError);
}

TEST(Curvature, SphereOfRadiusR) {
  for (double R : {0.5, 1.0, 3.0}) {
    const FramedChart M = scaled_sphere(R);
    const Vector x = R * Eigen::Vector3d(0.3, -0.4, 0.8).normalized();
    EXPECT_NEAR(gaussian_curvature(M, x), 1.0 / (R * R), 1e-5 / (R * R)) << "R=" << R;
    EXPECT_NEAR(shape_determinant(M, x), 1.0 / (R * R), 1e-7 / (R * R)) << "R=" << R;
  }
  EXPECT_NEAR(gaussian_curvature(sphere(2), Eigen::Vector3d(0.1, 0.2, 0.9).normalized()), 1.0, 1e-7);
}

TEST(Curvature, CylinderIsFlat) {
  const FramedChart M = cylinder();
  const Vector x = Eigen::Vector3d(std::cos(0.4), std::sin(0.4), 2.0);
  EXPECT_NEAR(gaussian_curvature(M, x), 0.0, 1e-6);
  EXPECT_NEAR(shape_determinant(M, x), 0.0, 1e-8);
}

TEST(Curvature, StructuralConstantsMatchFrameCommutator) {
  const FramedChart M = sphere(2);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 10; ++i) {
    const Vector x = M.sample(rng);
    const double h = 1e-5;
    auto col = [&M](const Vector& y, int j) -> Vector { return M.frame(y).col(j); };
    const Vector e1 = col(x, 0), e2 = col(x, 1);
    const Vector br = (col(x + h * e1, 1) - col(x - h * e1, 1)) / (2 * h) -
                      (col(x + h * e2, 0) - col(x - h * e2, 0)) / (2 * h);
    const auto [c1, c2] = structural_constants_2d(M, x);
    EXPECT_NEAR(c1, br.dot(e1), 1e-8);
    EXPECT_NEAR(c2, br.dot(e2), 1e-8);
  }
}

TEST(Christoffel, ClosedFormMatchesNumericOnSphere) {
  std::mt19937_64 rng(2);
  for (int n : {2, 3, 5}) {
    const FramedChart M = sphere(n);
    NumericDiffOptions opt;
    opt.richardson = true;
    for (int i = 0; i < 10; ++i) {
      const Vector x = M.sample(rng);
      EXPECT_LT(christoffel_numeric(M, x, opt).max_abs_difference(christoffel(M, x)), 1e-8);
    }
  }
}

TEST(Geodesic, SphereGeodesicIsGreatCircle) {
  const FramedChart M = sphere(2);
  const Vector v0 = Eigen::Vector2d(0.6, 0.8);
  const GeodesicPath g = geodesic(M, M.base_point, v0, 1.2, 1e-3);
  const Vector w = M.frame(M.base_point) * v0;
  for (std::size_t i = 0; i < g.t.size(); i += 100) {
    const Vector expected = std::cos(g.t[i]) * M.base_point + std::sin(g.t[i]) * w;
    EXPECT_LT((g.x[i] - expected).norm(), 1e-10);
    EXPECT_NEAR(g.u[i].norm(), 1.0, 1e-10);
  }
  EXPECT_LT(geodesic_residual(M, g.t, g.x), 1e-6);
}

TEST(Geodesic, LatitudeIsNotGeodesic) {
  const Curve c = latitude(M_PI / 3, 1.0);
  std::vector<double> t;
  std::vector<Vector> x;
  for (int i = 0; i <= 200; ++i) {
    t.push_back(i / 200.0);
    x.push_back(c.at(t.back()).x);
  }
  EXPECT_GT(geodesic_residual(sphere(2), t, x), 0.1);
}

TEST(Geodesic, LeavingTheChartThrows) {
  const FramedChart M = sphere(2);
  EXPECT_THROW(geodesic(M, M.base_point, Eigen::Vector2d(1.0, 0.0), 2.0, 1e-2), DomainError);
}

TEST(NormalConnection, Se3Entries) {
  const FramedChart M = se3();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 3; ++i) {
    const Vector x = M.sample(rng);
    NumericDiffOptions opt;
    opt.richardson = true;
    const NormalChristoffel g = normal_christoffel(M, x, opt);
    EXPECT_NEAR(g(0, 1, 2), -kC, 1e-8);  // nabla_Y1 Upsilon2 = -c Upsilon3
    EXPECT_NEAR(g(0, 2, 1), kC, 1e-8);
    EXPECT_NEAR(g(0, 0, 3), 0.5, 1e-8);   // nabla_Y1 Upsilon1 = (Psi1 - Psi2) / 2
    EXPECT_NEAR(g(0, 0, 4), -0.5, 1e-8);
    EXPECT_NEAR(g(1, 1, 5), -0.5, 1e-8);  // nabla_Y2 Upsilon2 = (Psi1 - Psi3) / 2
    EXPECT_NEAR(g(2, 2, 4), 0.5, 1e-8);   // nabla_Y3 Upsilon3 = (Psi2 - Psi3) / 2
    EXPECT_LT(g.antisymmetry_residual(), 1e-8);
    for (int k = 3; k < 6; ++k)
      for (int a = 0; a < 10; ++a)
        for (int b = 0; b < 10; ++b) EXPECT_NEAR(g(k, a, b), 0.0, 1e-8);
    for (int k = 0; k < 6; ++k)
      for (int a = 6; a < 10; ++a)
        for (int b = 0; b < 10; ++b) EXPECT_NEAR(g(k, a, b), 0.0, 1e-8);
  }
}

TEST(NormalConnection, Se3ScrewCurveFrame) {
  // x(t) = (exp(t W12), (0, 0, t)) has velocity sqrt2 Y1 + X3.
  const FramedChart M = se3();
  const Curve c = Curve::from_function(0.0, 1.0, [](double t) {
    const Matrix w = skew_basis(3, {1, 2});
    const Matrix rot = exp_skew(t * w);
    CurvePoint p;
    p.x = se3_point(rot, Eigen::Vector3d(0, 0, t));
    p.xdot = se3_point(rot * w, Eigen::Vector3d(0, 0, 1));
    return p;
  });
  EXPECT_LT((frame_coordinates(M, c.at(0.3).x, c.at(0.3).xdot) -
             (Vector(6) << std::sqrt(2.0), 0, 0, 0, 0, 1).finished())
                .norm(),
            1e-14);
  const double th = 1.0;
  const double s = std::sin(th), co = std::cos(th), r = 1.0 / std::sqrt(2.0);
  Matrix eps = Matrix::Identity(10, 10);  // column lambda: coefficients of eps_lambda
  eps.block(0, 0, 6, 6).setZero();
  eps.col(0).head(6) << co, 0, 0, -r * s, r * s, 0;
  eps.col(1).head(6) << 0, std::cos(th / 2), std::sin(th / 2), 0, 0, 0;
  eps.col(2).head(6) << 0, -std::sin(th / 2), std::cos(th / 2), 0, 0, 0;
  eps.col(3).head(6) << r * s, 0, 0, (co + 1) / 2, (1 - co) / 2, 0;
  eps.col(4).head(6) << -r * s, 0, 0, (1 - co) / 2, (1 + co) / 2, 0;
  eps.col(5).head(6) << 0, 0, 0, 0, 0, 1;
  const Matrix w = normal_parallel_transport(M, c, Matrix::Identity(10, 10), 1e-3).z.back();
  EXPECT_LT((w - eps).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(NormalConnection, CircleInR3IsFlat) {
  const FramedChart M = circle(3);
  const NormalChristoffel g = normal_christoffel(M, Eigen::Vector2d(std::cos(0.9), std::sin(0.9)));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) EXPECT_NEAR(g(0, a, b), 0.0, 1e-9);
}

TEST(NormalConnection, SpiralTwists) {
  const NormalChristoffel g = normal_christoffel(spiral(), Vector::Constant(1, 0.4));
  EXPECT_NEAR(std::abs(g(0, 0, 1)), 1.0 / std::sqrt(2.0), 1e-8);
  EXPECT_NEAR(g(0, 0, 1), -g(0, 1, 0), 1e-12);
}
