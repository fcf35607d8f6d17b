#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cmc_tubes/jacobi_solvers.hpp"
#include "cmc_tubes/model_metric.hpp"
#include "test_support.hpp"

using namespace cmc;
using cmc::testing::loglog_slope;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::VectorXd trig_profile(const LineGrid& line, unsigned seed, int modes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(line.size());
  for (int m = 0; m <= modes; ++m) {
    const double a = U(rng), b = U(rng);
    for (int i = 0; i < line.size(); ++i) {
      const double x = line.wavenumber(m) * line.x0(i);
      f[i] += a * std::cos(x) + b * std::sin(x);
    }
  }
  return f;
}

ModelMetric constant_b_model(double b11, double b22) {
  ModelMetric m(2, 1, kTwoPi, ModelKind::Truncated);
  m.add_r0i0j(0, 0, 0, b11, 0.0);
  m.add_r0i0j(1, 1, 0, b22, 0.0);
  m.finalize();
  return m;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ConfigParse;  // nothing thrown
}

}  // namespace

TEST(ZeroModeSolver, SubstitutionOracle) {
  const LineGrid line(kTwoPi, 64);
  const Eigen::VectorXd f = trig_profile(line, 1, 20);
  for (double rho : {0.11, 0.23, 0.37}) {
    const Eigen::VectorXd v = solve_L0(line, f, rho, 2);
    const Eigen::VectorXd back = rho * rho * line.derivative(v, 2) + v;
    EXPECT_LE((back - f).cwiseAbs().maxCoeff(), 1e-10) << "rho " << rho;
  }
}

TEST(ZeroModeSolver, ClosedFormAgreesWithFourierSolve) {
  const LineGrid line(5.0, 64);
  const Eigen::VectorXd f = trig_profile(line, 2, 12);
  for (int n : {2, 3}) {
    const double rho = 0.29;
    const L0Solution cf = solve_L0_closed_form(line, f, rho, n);
    const Eigen::VectorXd fs = solve_L0(line, f, rho, n);
    EXPECT_LE((cf.v - fs).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, fs.cwiseAbs().maxCoeff())) << "n " << n;
    const Eigen::VectorXd back = rho * rho * line.derivative(cf.v, 2) + (n - 1.0) * cf.v;
    EXPECT_LE((back - f).cwiseAbs().maxCoeff(), 1e-10) << "n " << n;
  }
}

TEST(ZeroModeSolver, ResonantExactlyAtTheCriticalRadii) {
  const LineGrid line(kTwoPi, 64);
  const Eigen::VectorXd f = trig_profile(line, 3, 4);
  for (int n : {2, 3})
    for (int k = 1; k <= 10; ++k) {
      const double rho = std::sqrt(n - 1.0) * kTwoPi / (kTwoPi * k);
      EXPECT_EQ(code_of([&] { solve_L0(line, f, rho, n); }), ErrorCode::Resonant) << n << " " << k;
      EXPECT_EQ(code_of([&] { solve_L0_closed_form(line, f, rho, n); }), ErrorCode::Resonant);
      // one percent away the solve goes through
      EXPECT_NO_THROW(solve_L0(line, f, rho * 1.01, n));
    }
}

TEST(ZeroModeSolver, InverseNormIsTheMaxRowSumOfTheDenseInverse) {
  const LineGrid line(kTwoPi, 32);
  const double rho = 0.27;
  Eigen::MatrixXd inv(32, 32);
  for (int j = 0; j < 32; ++j) inv.col(j) = solve_L0(line, Eigen::VectorXd::Unit(32, j), rho, 2);
  const double brute = inv.cwiseAbs().rowwise().sum().maxCoeff();
  EXPECT_NEAR(estimate_inverse_norm(line, rho, 2, InverseNorm::L0_sup), brute, 1e-12 * brute);
}

TEST(ZeroModeSolver, InverseNormGrowsLikeTheInverseDistance) {
  // near rho_k the Green's function blows up like 1 / sin(Lambda / (2 rho)), i.e. like
  // (1 - cos)^{-1/2}; the reference profile 1 / (rho (1 - cos)) is an upper envelope
  const LineGrid line(kTwoPi, 256);
  const double rk = 1.0 / 6.0;
  std::vector<double> div, norm;
  for (double d : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
    const double rho = rk * (1.0 + d);
    div.push_back(resonance_info(2, kTwoPi, rho).small_divisor);
    norm.push_back(estimate_inverse_norm(line, rho, 2, InverseNorm::L0_sup, 1e-12));
    EXPECT_LE(norm.back(), resonance_profile(2, kTwoPi, rho));
  }
  EXPECT_NEAR(loglog_slope(div, norm), -0.5, 0.05);
}

TEST(TildeSolver, SubstitutionOracle) {
  const TorusGrid g(kTwoPi, 32, 32);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(32, 32);
  for (int m = 0; m <= 6; ++m)
    for (int j = 2; j <= 6; ++j) {
      const double a = U(rng), b = U(rng);
      for (int p = 0; p < 32; ++p)
        for (int q = 0; q < 32; ++q) f(p, q) += a * std::cos(m * g.x0(p) + j * g.theta(q)) + b * std::sin(m * g.x0(p) - j * g.theta(q));
    }
  const double rho = 0.19;
  const Eigen::MatrixXd v = solve_tilde(g, f, rho);
  const Eigen::MatrixXd back = rho * rho * g.derivative(v, 2, 0) + g.derivative(v, 0, 2) + v;
  EXPECT_LE((back - f).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TildeSolver, RejectsLowSphereModes) {
  const TorusGrid g(kTwoPi, 16, 16);
  Eigen::MatrixXd f(16, 16);
  for (int p = 0; p < 16; ++p)
    for (int q = 0; q < 16; ++q) f(p, q) = std::cos(g.theta(q)) + std::cos(2 * g.theta(q));
  EXPECT_EQ(code_of([&] { solve_tilde(g, f, 0.2); }), ErrorCode::BlockViolation);
}

TEST(GeodesicJacobi, SubstitutionOracle) {
  const ModelMetric m = load_model("curved_toy");
  const LineGrid line(m.lambda(), 64);
  NormalSection psi = NormalSection::zero(64, 2);
  psi.phi.col(0) = trig_profile(line, 7, 8);
  psi.phi.col(1) = trig_profile(line, 8, 8);
  const NormalSection phi = solve_geodesic_jacobi(m, line, psi);
  // Phi'' - B Phi evaluated pointwise from the curvature tables
  for (int a = 0; a < 64; ++a) {
    const CurvatureAt cv = m.curvature_at(line.x0(a));
    const Eigen::Vector2d p = phi.phi.row(a).transpose();
    const Eigen::Vector2d d2(line.derivative(phi.phi.col(0), 2)[a], line.derivative(phi.phi.col(1), 2)[a]);
    EXPECT_LE((d2 - cv.B * p - psi.phi.row(a).transpose()).norm(), 1e-10);
  }
}

TEST(GeodesicJacobi, FlatGeodesicIsDegenerate) {
  const ModelMetric flat = flat_torus_model();
  const LineGrid line(flat.lambda(), 32);
  const NormalSection psi = NormalSection::zero(32, 2);
  EXPECT_EQ(code_of([&] { solve_geodesic_jacobi(flat, line, psi); }), ErrorCode::DegenerateGeodesic);
  const auto [neg, null] = JacobiOperator(flat, line).negative_and_null(1e-9);
  EXPECT_EQ(neg, 0);
  EXPECT_EQ(null, 2);  // the two parallel translations
}

TEST(GeodesicJacobi, NegativeCountMatchesConstantCoefficientFormula) {
  // -J = -d^2 + B with constant diagonal B has eigenvalues m^2 + b_i, m in Z
  const LineGrid line(kTwoPi, 64);
  for (auto [b1, b2] : {std::pair{0.5, 0.8}, {-0.5, 0.8}, {-1.5, 0.3}, {-2.5, -0.2}, {-4.5, -1.5}}) {
    int expect = 0;
    for (double b : {b1, b2})
      for (int m = -31; m <= 31; ++m) expect += m * m + b < 0.0;
    const auto [neg, null] = JacobiOperator(constant_b_model(b1, b2), line).negative_and_null(1e-9);
    EXPECT_EQ(neg, expect) << b1 << " " << b2;
    EXPECT_EQ(null, 0);
  }
}

TEST(GeodesicJacobi, ToyModelsHaveTheEngineeredIndex) {
  const LineGrid line(kTwoPi, 64);
  EXPECT_EQ(JacobiOperator(load_model("curved_toy"), line).negative_and_null(1e-9).first, 0);
  EXPECT_EQ(JacobiOperator(load_model("unstable_toy"), line).negative_and_null(1e-9).first, 1);
}
