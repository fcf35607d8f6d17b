#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "cmc_tubes/cmc_solver.hpp"
#include "cmc_tubes/measure_limits.hpp"
#include "test_support.hpp"

using namespace cmc;
using cmc::testing::loglog_slope;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

const ModelMetric& toy() {
  static const ModelMetric m = load_model("curved_toy");
  return m;
}

double one(const Eigen::VectorXd&) { return 1.0; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ConfigParse;  // nothing thrown
}

// Converged leaves at a few gap midpoints, shared by the leaf tests.
struct Leaves {
  CmcSolver solver{toy()};
  std::vector<SolveResult> leaves;
  Leaves() {
    for (int k : {4, 8, 16}) leaves.push_back(solver.solve(gap_intervals(toy(), k, k, solver.config().c1)[0].midpoint()));
  }
};

const Leaves& leaves() {
  static const Leaves l;
  return l;
}

}  // namespace

TEST(Quadrature, SphereVolumes) {
  EXPECT_NEAR(sphere_volume(0), 2.0, 1e-15);
  EXPECT_NEAR(sphere_volume(1), kTwoPi, 1e-14);
  EXPECT_NEAR(sphere_volume(2), 4.0 * kPi, 1e-14);
  EXPECT_NEAR(sphere_volume(3), 2.0 * kPi * kPi, 1e-13);
  EXPECT_NEAR(sphere_volume(4), 8.0 * kPi * kPi / 3.0, 1e-13);
  for (int d = 0; d <= 4; ++d) {
    const SphereQuadrature sq = sphere_quadrature(d, 12);
    EXPECT_NEAR(sq.weights.sum(), sphere_volume(d), 1e-12) << "d " << d;
    // second moments: int x_i^2 = |S^d| / (d + 1)
    double xx = 0.0;
    for (int i = 0; i < sq.weights.size(); ++i) xx += sq.weights[i] * sq.points(0, i) * sq.points(0, i);
    EXPECT_NEAR(xx, sphere_volume(d) / (d + 1), 1e-12) << "d " << d;
  }
}

TEST(FlatTubes, AreaAndVolumeOfConstantFunction) {
  const QuadratureConfig q{8, 10, 8};
  for (int n : {2, 3})
    for (int ell = 0; ell < n; ++ell) {
      const FlatTube tube{n, ell, kTwoPi};
      const int m = n - ell;
      const double om = sphere_volume(m), len = std::pow(kTwoPi, ell);
      for (double rho : {0.2, 0.05}) {
        const MeasureTriple t = scaled_measures(tube, rho, one, q);
        EXPECT_NEAR(t.area_scaled, om * len, 1e-12 * om * len) << n << " " << ell;
        EXPECT_NEAR(t.vol_scaled, om / (m + 1) * len, 1e-12 * om * len) << n << " " << ell;
        // a round tube of radius rho has n H = m / rho, so mu = area - m vol in the limit
        EXPECT_NEAR(t.nH, m / rho, 1e-12 / rho);
        EXPECT_NEAR(t.mu_scaled, om / (m + 1) * len, 1e-12 * om * len);
      }
    }
}

TEST(FlatTubes, QuadraticWeightHasClosedFormMoments) {
  // n = 2, ell = 1: f = 1 + y_1^2 on the circle of radius rho gives
  // area: Lambda (2 pi + pi rho^2), volume (disc): Lambda (pi + pi rho^2 / 4)
  const FlatTube tube{2, 1, 5.0};
  const auto f = [](const Eigen::VectorXd& p) { return 1.0 + p[1] * p[1]; };
  for (double rho : {0.3, 0.1}) {
    const MeasureTriple t = scaled_measures(tube, rho, f, {8, 16, 8});
    EXPECT_NEAR(t.area_scaled, 5.0 * (kTwoPi + kPi * rho * rho), 1e-12);
    EXPECT_NEAR(t.vol_scaled, 5.0 * (kPi + kPi * rho * rho / 4.0), 1e-12);
  }
}

TEST(FlatTubes, RoundTubesHaveNoFirstVariation) {
  const QuadratureConfig q{8, 10, 8};
  // constant field on a small round sphere (ell = 0)
  for (int n : {2, 3}) {
    const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(n + 1, 0.3, -0.7);
    EXPECT_LE(std::abs(first_variation(FlatTube{n, 0, kTwoPi}, 0.1, TestVectorField::constant(v), q)), 1e-12);
  }
  for (int n : {2, 3, 4})
    for (int ell = 0; ell < n; ++ell) {
      const TestVectorField X = TestVectorField::band_limited(n + 1, ell, kTwoPi, 2, 7 + n + ell);
      EXPECT_LE(std::abs(first_variation(FlatTube{n, ell, kTwoPi}, 0.1, X, q)), 1e-8) << n << " " << ell;
    }
}

TEST(FlatTubes, NormalGradientOfLinearField) {
  // X = A y: the sphere average of <A N, N> is tr(A) / (m + 1)
  for (int n : {2, 3})
    for (int ell = 0; ell < n; ++ell) {
      const int m = n - ell;
      Eigen::MatrixXd A(m + 1, m + 1);
      for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j) A(i, j) = 0.1 * (i + 1) - 0.05 * j * j;
      const double expect = sphere_volume(m) / (m + 1) * A.trace() * std::pow(kTwoPi, ell);
      const NormalGradientLimit g = normal_gradient_limit(FlatTube{n, ell, kTwoPi}, 0.1,
                                                          TestVectorField::linear_normal(n + 1, A), {6, 12, 8});
      EXPECT_NEAR(g.scaled, expect, 1e-12 * std::max(1.0, std::abs(expect))) << n << " " << ell;
      EXPECT_NEAR(g.limit, expect, 1e-12 * std::max(1.0, std::abs(expect))) << n << " " << ell;
    }
}

TEST(FlatTubes, InvalidInputsAreRejected) {
  EXPECT_EQ(code_of([] { scaled_measures(FlatTube{2, 2, kTwoPi}, 0.1, one); }), ErrorCode::ContractViolation);
  EXPECT_EQ(code_of([] { scaled_measures(FlatTube{2, 1, kTwoPi}, 0.1, [](const Eigen::VectorXd&) { return NAN; }); }),
            ErrorCode::QuadratureFailure);
}

TEST(CurvedLeaves, MeasuresConvergeAtOrderRhoSquared) {
  const Leaves& L = leaves();
  const double lambda = toy().lambda();
  std::vector<double> rhos, area, vol, mu;
  for (const SolveResult& r : L.leaves) {
    const MeasureTriple t = scaled_measures(L.solver.geometry(), r.tube, one);
    rhos.push_back(r.tube.rho);
    area.push_back(std::abs(t.area_scaled / (kTwoPi * lambda) - 1.0));
    vol.push_back(std::abs(t.vol_scaled / (kPi * lambda) - 1.0));
    mu.push_back(std::abs(t.mu_scaled / (kPi * lambda) - 1.0));
  }
  EXPECT_NEAR(loglog_slope(rhos, area), 2.0, 0.15);
  EXPECT_NEAR(loglog_slope(rhos, vol), 2.0, 0.15);
  EXPECT_NEAR(loglog_slope(rhos, mu), 2.0, 0.15);
  EXPECT_LT(area.back(), 1e-2);
}

TEST(CurvedLeaves, FirstVariationVanishesOnCmcLeaves) {
  const Leaves& L = leaves();
  for (unsigned seed : {11u, 12u}) {
    const TestVectorField X = TestVectorField::band_limited(3, 1, toy().lambda(), 2, seed);
    for (const SolveResult& r : L.leaves)
      EXPECT_LE(std::abs(first_variation(L.solver.geometry(), r.tube, X)), 1e-8) << "rho " << r.tube.rho;
  }
}

TEST(CurvedLeaves, NormalGradientApproachesTheAxisIntegral) {
  const Leaves& L = leaves();
  const double c = 0.7;
  const TestVectorField lin = TestVectorField::linear_normal(3, c * Eigen::Matrix2d::Identity());
  const TestVectorField X = TestVectorField::band_limited(3, 1, toy().lambda(), 2, 13);
  std::vector<double> rhos, err_lin, err_x;
  for (const SolveResult& r : L.leaves) {
    const NormalGradientLimit g = normal_gradient_limit(L.solver.geometry(), r.tube, lin);
    // on the axis the metric is Euclidean, so the limit is (|S^1| / 2) tr(c I) Lambda
    EXPECT_NEAR(g.limit, kTwoPi * c * toy().lambda(), 1e-12);
    const NormalGradientLimit gx = normal_gradient_limit(L.solver.geometry(), r.tube, X);
    rhos.push_back(r.tube.rho);
    err_lin.push_back(std::abs(g.scaled - g.limit));
    err_x.push_back(std::abs(gx.scaled - gx.limit));
  }
  EXPECT_NEAR(loglog_slope(rhos, err_lin), 2.0, 0.2);
  EXPECT_GT(loglog_slope(rhos, err_x), 1.8);
}

TEST(CurvedLeaves, HypothesesAreEnforced) {
  const Leaves& L = leaves();
  const TubeGeometry& geo = L.solver.geometry();
  // the round tube is not CMC in the curved model
  const TubeConfiguration round = TubeConfiguration::round(L.solver.grid(), 0.2);
  EXPECT_EQ(code_of([&] { scaled_measures(geo, round, one); }), ErrorCode::HypothesisViolation);
  // a converged leaf fails a bound tighter than its actual perturbation size
  LeafOptions tight;
  tight.c_hyp = 1e-3;
  EXPECT_EQ(code_of([&] { scaled_measures(geo, L.leaves[0].tube, one, tight); }), ErrorCode::HypothesisViolation);
  EXPECT_NO_THROW(scaled_measures(geo, L.leaves[0].tube, one));
}

TEST(Curves, DivergenceSplitsAlongTheAdaptedFrame) {
  Eigen::MatrixXd gamma(32, 2);
  for (int i = 0; i < 32; ++i) gamma.row(i) << 0.1 * std::cos(kTwoPi * i / 32), 0.05 * std::sin(2 * kTwoPi * i / 32);
  const ClosedCurve curve = ClosedCurve::normal_graph(toy(), gamma);
  const TestVectorField X = TestVectorField::band_limited(3, 1, toy().lambda(), 2, 21);
  for (int i = 0; i < 32; i += 5) {
    const DivergenceSplit s = divergence_split(toy(), curve, i, X);
    EXPECT_NEAR(s.tangential + s.normal, s.divergence, 1e-10 * std::max(1.0, std::abs(s.divergence)));
  }
}

TEST(Curves, FlatGraphCurvatureMatchesTheClosedForm) {
  // plane curve (t, y(t)), y = a cos t: kappa = y'' / (1 + y'^2)^2 (-y', 1)
  const ModelMetric flat = flat_torus_model();
  const double a = 0.3;
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(64, 2);
  for (int i = 0; i < 64; ++i) gamma(i, 0) = a * std::cos(kTwoPi * i / 64);
  const ClosedCurve curve = ClosedCurve::normal_graph(flat, gamma);
  const MinimalityReport rep = minimality_detector(flat, curve);
  EXPECT_FALSE(rep.minimal);
  for (int i = 0; i < 64; ++i) {
    const double t = curve.t(i), y1 = -a * std::sin(t), y2 = -a * std::cos(t), q = 1.0 + y1 * y1;
    EXPECT_NEAR(rep.curvature(i, 0), -y1 * y2 / (q * q), 1e-9);
    EXPECT_NEAR(rep.curvature(i, 1), y2 / (q * q), 1e-9);
    EXPECT_NEAR(rep.curvature(i, 2), 0.0, 1e-12);
  }
}

TEST(Curves, DetectorSeparatesGeodesicsFromCircles) {
  EXPECT_TRUE(minimality_detector(toy(), ClosedCurve::fermi_axis(toy(), 32)).minimal);
  const ModelMetric flat = flat_torus_model();
  for (double r : {0.3, 0.1}) {
    const auto c = ClosedCurve::normal_circle(flat, 1.0, Eigen::Vector2d(0.2, 0.1), r, 1, 2, 32);
    EXPECT_NEAR(minimality_detector(flat, c).sup_norm, 1.0 / r, 1e-10);
  }
  // small circles in the curved model are nearly Euclidean
  for (double r : {0.05, 0.02}) {
    const auto c = ClosedCurve::normal_circle(toy(), 1.0, Eigen::Vector2d(0.1, 0.05), r, 1, 2, 32);
    const MinimalityReport rep = minimality_detector(toy(), c);
    EXPECT_FALSE(rep.minimal);
    EXPECT_NEAR(rep.sup_norm * r, 1.0, 1e-2);
  }
}

TEST(Curves, PerturbedAxisCurvatureIsTheJacobiOperator) {
  // kappa = Phi'' - B Phi + O(eps^2) for the graph eps Phi over the axis
  std::vector<double> eps, err, size;
  for (double e : {1e-2, 5e-3, 2.5e-3}) {
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(32, 2);
    for (int i = 0; i < 32; ++i) gamma(i, 0) = e * std::cos(kTwoPi * i / 32);
    const ClosedCurve curve = ClosedCurve::normal_graph(toy(), gamma);
    const MinimalityReport rep = minimality_detector(toy(), curve);
    double d = 0.0;
    for (int i = 0; i < 32; ++i) {
      const Eigen::Matrix2d B = toy().curvature_at(curve.t(i)).B;
      const Eigen::Vector2d phi(gamma(i, 0), 0.0), jac = -phi - B * phi;
      d = std::max(d, (rep.curvature.row(i).tail(2).transpose() - jac).norm());
    }
    eps.push_back(e);
    err.push_back(d);
    size.push_back(rep.sup_norm);
  }
  EXPECT_NEAR(loglog_slope(eps, size), 1.0, 0.02);
  EXPECT_NEAR(loglog_slope(eps, err), 2.0, 0.2);
}

TEST(Curves, DetectorContract) {
  EXPECT_EQ(code_of([] { minimality_detector(toy(), ClosedCurve::fermi_axis(toy(), 6)); }), ErrorCode::ContractViolation);
  EXPECT_EQ(code_of([] { minimality_detector(toy(), ClosedCurve::fermi_axis(toy(), 15)); }), ErrorCode::ContractViolation);
}
