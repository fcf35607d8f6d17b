#include <chrono>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cmc_tubes/cmc_solver.hpp"
#include "test_support.hpp"

using namespace cmc;
using cmc::testing::loglog_slope;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ConfigParse;  // nothing thrown
}

const ModelMetric& toy() {
  static const ModelMetric m = load_model("curved_toy");
  return m;
}

}  // namespace

TEST(GapIntervals, EndpointsWithoutMargin) {
  for (auto [n, lambda] : {std::pair{2, kTwoPi}, {3, 5.0}, {4, 1.7}}) {
    const auto gaps = gap_intervals(n, lambda, 2, 20, 0.0);
    ASSERT_EQ(gaps.size(), 19u);
    for (const auto& g : gaps) {
      const double scale = std::sqrt(n - 1.0) * lambda / (2.0 * std::numbers::pi);
      EXPECT_DOUBLE_EQ(g.rho_lo, scale / (g.k + 1));
      EXPECT_DOUBLE_EQ(g.rho_hi, scale / g.k);
    }
  }
  // n = 2, Lambda = 2 pi: I_k = [1/(k+1), 1/k]
  for (const auto& g : gap_intervals(2, kTwoPi, 2, 20, 0.0)) {
    EXPECT_EQ(g.rho_lo, 1.0 / (g.k + 1));
    EXPECT_EQ(g.rho_hi, 1.0 / g.k);
  }
}

TEST(GapIntervals, MarginShrinksWindowsAndKeepsMidpointsAwayFromResonance) {
  const auto bare = gap_intervals(2, kTwoPi, 2, 20, 0.0);
  const auto cut = gap_intervals(2, kTwoPi, 2, 20, 0.2);
  ASSERT_EQ(cut.size(), bare.size());
  for (size_t i = 0; i < cut.size(); ++i) {
    EXPECT_GT(cut[i].rho_lo, bare[i].rho_lo);
    EXPECT_LT(cut[i].rho_hi, bare[i].rho_hi);
    EXPECT_TRUE(cut[i].contains(cut[i].midpoint()));
    EXPECT_GT(resonance_info(2, kTwoPi, cut[i].midpoint()).small_divisor, 0.1);
  }
  // a margin of 1 closes every window until the width 1/(k(k+1)) beats 2 k^{-9/4}, first at k = 20
  const auto wide = gap_intervals(2, kTwoPi, 2, 24, 1.0);
  ASSERT_EQ(wide.size(), 5u);
  EXPECT_EQ(wide.front().k, 20);
}

TEST(CmcSolver, FlatModelReturnsTheRoundTube) {
  const ModelMetric flat = flat_torus_model();
  const SolveResult r = CmcSolver(flat).solve(0.23);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_LT(r.residual_sup, 1e-12);
  EXPECT_EQ(r.tube.w.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CmcSolver, ConvergesAtGapMidpoints) {
  const CmcSolver solver(toy());
  std::vector<double> rhos, sizes;
  for (const auto& g : gap_intervals(toy(), 3, 12, solver.config().c1)) {
    const auto start = std::chrono::steady_clock::now();
    const SolveResult r = solver.solve(g.midpoint());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(r.contraction_factor, 1.0) << "k " << g.k;
    EXPECT_LE(r.residual_sup, 1e-9) << "k " << g.k;
    EXPECT_LT(secs, 10.0);
    // independent check of the leaf on a finer grid
    EXPECT_LE(solver.refined_residual(r), 1e-8) << "k " << g.k;
    EXPECT_LE(r.e_norm, solver.config().c0 * g.midpoint() * g.midpoint());
    rhos.push_back(g.midpoint());
    sizes.push_back(std::max(r.tube.w.cwiseAbs().maxCoeff(), r.tube.Phi.sup_norm()));
  }
  EXPECT_NEAR(loglog_slope(rhos, sizes), 2.0, 0.2);
}

TEST(CmcSolver, SolutionIsAFixedPointOfTheMap) {
  const CmcSolver solver(toy());
  const double rho = gap_intervals(toy(), 6, 6, 0.2)[0].midpoint();
  const SolveResult r = solver.solve(rho);
  const Unknowns again = solver.apply_N(rho, r.xi);
  // the solve stops at residual 1e-9, so the map moves the leaf by a comparable relative amount
  EXPECT_LE(solver.e_norm(rho, CmcSolver::difference(again, r.xi)), 1e-6 * r.e_norm);
}

TEST(CmcSolver, UnstableModelAlsoSolves) {
  const ModelMetric m = load_model("unstable_toy");
  const CmcSolver solver(m);
  for (const auto& g : gap_intervals(m, 4, 8, 0.2)) {
    const SolveResult r = solver.solve(g.midpoint());
    EXPECT_LE(r.residual_sup, 1e-9);
    EXPECT_LT(r.contraction_factor, 1.0);
  }
}

TEST(CmcSolver, FailureModes) {
  const CmcSolver solver(toy());
  EXPECT_EQ(code_of([&] { solver.solve(0.25); }), ErrorCode::Resonant);
  SolverConfig tight;
  tight.c0 = 1e-4;
  EXPECT_EQ(code_of([&] { CmcSolver(toy(), tight).solve(0.29); }), ErrorCode::BallEscape);
  SolverConfig short_run;
  short_run.max_iter = 1;
  EXPECT_EQ(code_of([&] { CmcSolver(toy(), short_run).solve(0.29); }), ErrorCode::NoConvergence);
  SolverConfig bad;
  bad.tol = 0.0;
  EXPECT_EQ(code_of([&] { CmcSolver(toy(), bad); }), ErrorCode::ContractViolation);
}

TEST(CmcSolver, WarmStartNeedsFewerIterations) {
  const CmcSolver solver(toy());
  const SolveResult a = solver.solve(0.21);
  const SolveResult b = solver.solve(0.2101, a.xi);
  EXPECT_LT(b.iterations, a.iterations);
  EXPECT_LE(b.residual_sup, 1e-9);
}

TEST(CmcSolver, DefaultMarginContractsOnAllWindows) {
  const CmcSolver solver(toy());
  EXPECT_TRUE(contracts_on_gaps(solver, 3, 12, solver.config().c1));
}

TEST(Foliation, LeavesMoveOutwardInsideAWindow) {
  const GapInterval I = gap_intervals(toy(), 5, 5, 0.2)[0];
  const FoliationReport rep = foliation_check(toy(), I, 4);
  EXPECT_EQ(rep.rhos.size(), 4u);
  EXPECT_GT(rep.min_radial_derivative, 0.5);
  EXPECT_GT(rep.min_leaf_gap, 0.0);
  // d_rho w and d_rho Phi are O(rho)
  EXPECT_LT(rep.max_dw_over_rho, 10.0);
  EXPECT_LT(rep.max_dphi_over_rho, 10.0);
}

TEST(CmcSolver, MarginCalibrationBracketsTheContractionThreshold) {
  const CmcSolver solver(toy());
  const double step = 0.4 / 64.0;
  const double c1 = calibrate_c1(solver, 3, 12, 0.0, 0.4, 6);
  // the default sits at or above the calibrated threshold
  EXPECT_LE(c1, solver.config().c1);
  EXPECT_TRUE(contracts_on_gaps(solver, 3, 12, c1));
  EXPECT_FALSE(contracts_on_gaps(solver, 3, 12, c1 - step));
}
