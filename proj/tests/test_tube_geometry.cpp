#include <chrono>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cmc_tubes/model_metric.hpp"
#include "cmc_tubes/tube_geometry.hpp"
#include "test_support.hpp"

using namespace cmc;
using cmc::testing::loglog_slope;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Smooth test perturbation of size O(amp) with x0 and theta dependence.
TubeConfiguration perturbed(const TorusGrid& g, double rho, double amp_w, double amp_phi) {
  TubeConfiguration t = TubeConfiguration::round(g, rho);
  for (int a = 0; a < g.n_s(); ++a) {
    const double x = g.x0(a);
    for (int b = 0; b < g.n_theta(); ++b) {
      const double th = g.theta(b);
      t.w(a, b) = amp_w * (0.5 + std::cos(x) * std::cos(2 * th) + 0.3 * std::sin(2 * x + th));
    }
    t.Phi.phi.row(a) << amp_phi * (1.0 + 0.5 * std::sin(x)), amp_phi * std::cos(2 * x);
  }
  return t;
}

double sup(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(TubeGeometry, FlatRoundTubeHasExactMeanCurvature) {
  const ModelMetric flat = flat_torus_model();
  const TorusGrid g(kTwoPi, 64, 64);
  const TubeGeometry geo(flat, g);
  for (double rho : {0.1, 0.2, 0.3}) {
    const auto start = std::chrono::steady_clock::now();
    const Eigen::MatrixXd H = geo.mean_curvature_oracle(TubeConfiguration::round(g, rho));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double exact = 1.0 / (2.0 * rho);  // (n - 1) / (n rho) with n = 2
    EXPECT_LE(sup(H.array() - exact) / exact, 1e-8) << "rho " << rho;
    EXPECT_LT(secs, 1.0);
  }
}

TEST(TubeGeometry, FlatTranslatedTubeIsStillRound) {
  const ModelMetric flat = flat_torus_model();
  const TorusGrid g(kTwoPi, 32, 32);
  const TubeGeometry geo(flat, g);
  TubeConfiguration t = TubeConfiguration::round(g, 0.2);
  t.Phi.phi.col(0).setConstant(0.05);
  t.Phi.phi.col(1).setConstant(-0.02);
  EXPECT_LT(sup(geo.residual(t)), 1e-13);
}

TEST(TubeGeometry, FlatSurfaceOfRevolutionMatchesClosedForm) {
  const ModelMetric flat = flat_torus_model();
  const TorusGrid g(kTwoPi, 64, 16);
  const TubeGeometry geo(flat, g);
  const double rho = 0.2, eps = 0.1;
  TubeConfiguration t = TubeConfiguration::round(g, rho);
  for (int a = 0; a < g.n_s(); ++a) t.w.row(a).setConstant(eps * std::cos(g.x0(a)));
  const Eigen::MatrixXd F = geo.residual(t);
  for (int a = 0; a < g.n_s(); ++a) {
    const double x = g.x0(a);
    const double r = rho * (1 + eps * std::cos(x)), r1 = -rho * eps * std::sin(x), r2 = -rho * eps * std::cos(x);
    const double q = 1 + r1 * r1;
    const double trace = 1.0 / (r * std::sqrt(q)) - r2 / std::pow(q, 1.5);
    for (int b = 0; b < g.n_theta(); ++b) EXPECT_NEAR(F(a, b), rho * trace - 1.0, 1e-12);
  }
}

TEST(TubeGeometry, UnitNormalIsOrthonormalInTheMetric) {
  const ModelMetric m = load_model("curved_toy");
  const TorusGrid g(kTwoPi, 16, 16);
  const TubeGeometry geo(m, g);
  const TubeConfiguration t = perturbed(g, 0.2, 0.05, 0.03);
  for (int a = 0; a < g.n_s(); a += 3)
    for (int b = 0; b < g.n_theta(); b += 3) {
      const TubeFrame f = geo.unit_normal(t, a, b);
      const Eigen::MatrixXd G = metric_at(m, geo.embed(t, a, b));
      EXPECT_NEAR(f.N.dot(G * f.N), 1.0, 1e-10);
      EXPECT_NEAR(f.N.dot(G * f.Z0), 0.0, 1e-12);
      EXPECT_NEAR(f.N.dot(G * f.Zt), 0.0, 1e-12);
    }
}

TEST(TubeGeometry, FirstFundamentalFormExpansionIsAccurateToOrderRhoSquared) {
  const ModelMetric m = load_model("curved_toy");
  const TorusGrid g(kTwoPi, 16, 16);
  const TubeGeometry geo(m, g);
  std::vector<double> rhos, errs;
  for (double rho : {0.2, 0.1, 0.05, 0.025}) {
    const TubeConfiguration t = TubeConfiguration::round(g, rho);
    double err = 0.0;
    for (int a = 0; a < g.n_s(); a += 2)
      for (int b = 0; b < g.n_theta(); b += 2)
        err = std::max(err, (geo.first_fundamental_form(t, a, b) - geo.first_fundamental_form_expansion(t, a, b)).norm());
    rhos.push_back(rho);
    errs.push_back(err / (rho * rho));
  }
  EXPECT_NEAR(loglog_slope(rhos, errs), 2.0, 0.1);
}

TEST(TubeGeometry, AlphaExpansionTracksTheOracle) {
  const ModelMetric m = load_model("curved_toy");
  const TorusGrid g(kTwoPi, 16, 16);
  const TubeGeometry geo(m, g);
  std::vector<double> rhos, errs;
  for (double rho : {0.2, 0.1, 0.05, 0.025}) {
    const TubeConfiguration t = perturbed(g, rho, rho * rho, rho * rho);
    double err = 0.0;
    for (int a = 0; a < g.n_s(); a += 2)
      for (int b = 0; b < g.n_theta(); b += 2)
        err = std::max(err, std::abs(geo.unit_normal(t, a, b).alpha - geo.alpha_expansion(t, a, b)));
    rhos.push_back(rho);
    errs.push_back(err);
  }
  // alpha itself is O(rho^2); the neglected terms are at least one order smaller
  EXPECT_GT(loglog_slope(rhos, errs), 2.8);
}

TEST(TubeGeometry, ResidualOrdersOnCurvedModel) {
  const ModelMetric m = load_model("curved_toy");
  const TorusGrid g(kTwoPi, 32, 32);
  const TubeGeometry geo(m, g);
  std::vector<double> rhos, full, rem, hat;
  for (double rho : {0.16, 0.08, 0.04, 0.02}) {
    const ResidualReport r = geo.mean_curvature_residual(TubeConfiguration::round(g, rho));
    rhos.push_back(rho);
    full.push_back(sup(r.full));
    rem.push_back(sup(r.full - r.f_term));
    hat.push_back(sup(section_to_linear_mode(g, r.split.w_hat)));
  }
  EXPECT_NEAR(loglog_slope(rhos, full), 2.0, 0.1);
  EXPECT_NEAR(loglog_slope(rhos, rem), 3.0, 0.15);
  EXPECT_NEAR(loglog_slope(rhos, hat), 3.0, 0.15);
}

TEST(TubeGeometry, FlatLinearBlockIsTheLinearization) {
  const ModelMetric flat = flat_torus_model();
  const TorusGrid g(kTwoPi, 32, 32);
  const TubeGeometry geo(flat, g);
  std::vector<double> eps, errs;
  for (double e : {4e-3, 2e-3, 1e-3, 5e-4}) {
    const TubeConfiguration t = perturbed(g, 0.15, e, e);
    eps.push_back(e);
    errs.push_back(sup(geo.residual(t) - geo.linear_block(t)));
  }
  EXPECT_NEAR(loglog_slope(eps, errs), 2.0, 0.1);
}

TEST(TubeGeometry, ComplexStepMatchesFiniteDifferences) {
  const ModelMetric m = load_model("curved_toy");
  const TorusGrid g(kTwoPi, 32, 16);
  const TubeGeometry geo(m, g);
  const TubeConfiguration base = perturbed(g, 0.15, 0.02, 0.01);
  TubeConfiguration dir = perturbed(g, 0.15, 1.0, 0.7);
  dir.w = g.derivative(dir.w, 1, 1);  // a different shape than the base point
  const Eigen::MatrixXd lin = geo.apply_linearization(geo.linearize(base), dir);
  const double h = 1e-6;
  TubeConfiguration plus = base, minus = base;
  plus.w += h * dir.w, minus.w -= h * dir.w;
  plus.Phi.phi += h * dir.Phi.phi, minus.Phi.phi -= h * dir.Phi.phi;
  const Eigen::MatrixXd fd = (geo.residual(plus) - geo.residual(minus)) / (2.0 * h);
  EXPECT_LT(sup(lin - fd), 1e-7 * sup(fd));
}

TEST(TubeGeometry, QuadraticRemainderVanishesQuadratically) {
  const ModelMetric m = load_model("curved_toy");
  const TorusGrid g(kTwoPi, 32, 16);
  const TubeGeometry geo(m, g);
  const TubeConfiguration base = TubeConfiguration::round(g, 0.15);
  const TubeConfiguration dir = perturbed(g, 0.15, 1.0, 1.0);
  const Eigen::MatrixXd R0 = geo.residual(base);
  const Eigen::MatrixXd DR = geo.apply_linearization(geo.linearize(base), dir);
  std::vector<double> amps, q;
  for (double e : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
    TubeConfiguration t = base;
    t.w += e * dir.w;
    t.Phi.phi += e * dir.Phi.phi;
    amps.push_back(e);
    q.push_back(sup(geo.residual(t) - R0 - e * DR));
  }
  EXPECT_NEAR(loglog_slope(amps, q), 2.0, 0.2);
}

TEST(TubeGeometry, ContractViolationsAreReported) {
  const ModelMetric m = load_model("curved_toy");
  const TorusGrid g(kTwoPi, 16, 16);
  const TubeGeometry geo(m, g);
  auto code_of = [&](const TubeConfiguration& t) {
    try {
      geo.residual(t);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigParse;  // nothing thrown
  };
  EXPECT_EQ(code_of(TubeConfiguration::round(g, 1.5 * m.r_max())), ErrorCode::OutOfChart);
  TubeConfiguration bad = TubeConfiguration::round(g, 0.1);
  bad.w = Eigen::MatrixXd::Zero(16, 8);
  EXPECT_EQ(code_of(bad), ErrorCode::GridMismatch);
  TubeConfiguration folded = TubeConfiguration::round(g, 0.1);
  folded.w.setConstant(-1.5);
  EXPECT_EQ(code_of(folded), ErrorCode::ContractViolation);
}
