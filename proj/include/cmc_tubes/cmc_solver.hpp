#pragma once

// Fixed-point construction of CMC perturbations of geodesic tubes.
//
// Unknowns Xi = (w0, Phi, w~). With G = F + L w + rho <J Phi, U>, where F is the oracle residual
// n rho H - (n - 1), the map is
//   N(Xi) = (L0^{-1} Pi_0 G,  J^{-1}(Pi_hat G / rho),  L~^{-1} Pi~ G),
// so a fixed point is exactly a zero of F. The iteration is collocated on the full grid
// (the Nyquist row and column are dropped).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmc_tubes/error.hpp"
#include "cmc_tubes/fourier.hpp"
#include "cmc_tubes/jacobi_solvers.hpp"
#include "cmc_tubes/mode_decomposition.hpp"
#include "cmc_tubes/model_metric.hpp"
#include "cmc_tubes/tube_geometry.hpp"

namespace cmc {

struct GapInterval {
  int k = 0;
  double rho_lo = 0.0, rho_hi = 0.0;
  double c1 = 0.0;

  double midpoint() const { return 0.5 * (rho_lo + rho_hi); }
  bool contains(double rho) const { return rho > rho_lo && rho < rho_hi; }
};

/// I_k: 1/(k+1) + c1 k^{-9/4} <= (2 pi / (sqrt(n-1) Lambda)) rho <= 1/k - c1 k^{-9/4}.
inline std::vector<GapInterval> gap_intervals(int n, double lambda, int k_min, int k_max, double c1) {
  require(k_min >= 2, ErrorCode::ContractViolation, "k_min must be at least 2");
  require(n >= 2 && lambda > 0.0 && c1 >= 0.0, ErrorCode::ContractViolation, "invalid gap interval query");
  const double scale = std::sqrt(n - 1.0) * lambda / (2.0 * std::numbers::pi);
  std::vector<GapInterval> out;
  for (int k = k_min; k <= k_max; ++k) {
    const double margin = c1 * std::pow(static_cast<double>(k), -2.25);
    GapInterval g{k, scale / (k + 1.0), scale / k, c1};
    if (margin > 0.0) {
      g.rho_lo = scale * (1.0 / (k + 1.0) + margin);
      g.rho_hi = scale * (1.0 / k - margin);
    }
    if (g.rho_lo < g.rho_hi) out.push_back(g);
  }
  return out;
}

inline std::vector<GapInterval> gap_intervals(const ModelMetric& model, int k_min, int k_max, double c1) {
  return gap_intervals(model.n(), model.lambda(), k_min, k_max, c1);
}

struct SolverConfig {
  int n_s = 64;
  int n_theta = 32;
  double tol = 1e-9;
  int max_iter = 50;
  double delta_res = 1e-6;
  double delta_j = 1e-8;
  double c0 = 20.0;  // ball radius c0 rho^2 in the E-norm
  double c1 = 0.2;   // gap margin; calibrated on the toy model, see calibrate_c1
};

/// Unknowns of the fixed-point problem.
struct Unknowns {
  Eigen::VectorXd w0;
  NormalSection Phi;
  Eigen::MatrixXd w_tilde;

  static Unknowns zero(const TorusGrid& g) {
    return {Eigen::VectorXd::Zero(g.n_s()), NormalSection::zero(g.n_s(), 2),
            Eigen::MatrixXd::Zero(g.n_s(), g.n_theta())};
  }
};

struct SolveResult {
  TubeConfiguration tube;
  Unknowns xi;
  double residual_sup = 0.0;
  int iterations = 0;
  double contraction_factor = 0.0;
  double e_norm = 0.0;
  std::vector<double> residual_history;
};

class CmcSolver {
 public:
  CmcSolver(const ModelMetric& model, SolverConfig cfg = {})
      : model_(&model),
        cfg_(cfg),
        grid_(model.lambda(), cfg.n_s, cfg.n_theta),
        geom_(model, grid_),
        jacobi_(model, grid_.line()) {
    require(cfg.tol > 0.0 && cfg.delta_res > 0.0 && cfg.delta_j > 0.0 && cfg.c0 > 0.0 && cfg.max_iter > 0,
            ErrorCode::ContractViolation, "solver tolerances must be positive");
  }

  const TorusGrid& grid() const { return grid_; }
  const TubeGeometry& geometry() const { return geom_; }
  const SolverConfig& config() const { return cfg_; }
  const ModelMetric& model() const { return *model_; }

  TubeConfiguration tube(double rho, const Unknowns& xi) const {
    return {rho, xi.w0.replicate(1, grid_.n_theta()) + xi.w_tilde, xi.Phi};
  }

  /// Weighted norm: (1 - cos(sqrt(n-1) Lambda / rho)) |w0| + |Phi| + |w~| (graded spectral norms).
  double e_norm(double rho, const Unknowns& xi) const {
    const double wgt = resonance_info(model_->n(), model_->lambda(), rho).small_divisor;
    return wgt * graded_norm(grid_.line(), xi.w0, rho) + section_norm(xi.Phi) + graded_norm(grid_, xi.w_tilde, rho);
  }

  double section_norm(const NormalSection& s) const {
    double v = 0.0;
    for (int i = 0; i < s.n(); ++i) v += graded_norm(grid_.line(), Eigen::VectorXd(s.phi.col(i)), 1.0);
    return v;
  }

  Unknowns apply_N(double rho, const Unknowns& xi) const {
    return apply_N(rho, xi, geom_.residual(tube(rho, xi)));
  }

  /// One sweep of the map given the residual F of the input.
  Unknowns apply_N(double rho, const Unknowns& xi, const Eigen::MatrixXd& F) const {
    const TubeConfiguration t = tube(rho, xi);
    const Eigen::MatrixXd G =
        F + geom_.apply_L(rho, t.w) + rho * section_to_linear_mode(grid_, geom_.apply_jacobi(t.Phi));
    const ModeSplit sp = decompose(grid_, G);
    Unknowns out;
    out.w0 = drop_nyquist(solve_L0(grid_.line(), sp.w0, rho, model_->n(), cfg_.delta_res));
    NormalSection psi = sp.w_hat;
    psi.phi /= rho;
    if (psi.sup_norm() <= 1e-15) {
      out.Phi = NormalSection::zero(grid_.n_s(), 2);
    } else {
      out.Phi = jacobi().solve(psi, cfg_.delta_j);
    }
    out.w_tilde = grid_.truncate(solve_tilde(grid_, sp.w_tilde, rho), grid_.n_s() / 2 - 1, grid_.n_theta() / 2 - 1);
    return out;
  }

  SolveResult solve(double rho) const { return solve(rho, Unknowns::zero(grid_)); }

  SolveResult solve(double rho, const Unknowns& start) const {
    const ResonanceInfo ri = resonance_info(model_->n(), model_->lambda(), rho);
    require(ri.small_divisor > cfg_.delta_res, ErrorCode::Resonant,
            "rho = " + std::to_string(rho) + " is at a resonance of the zero-mode operator");
    const double ball = cfg_.c0 * rho * rho;
    SolveResult res;
    Unknowns xi = start;
    double prev_step = -1.0;
    for (int it = 0;; ++it) {
      const TubeConfiguration t = tube(rho, xi);
      require((1.0 + t.w.array()).minCoeff() > 0.0, ErrorCode::BallEscape,
              "iterate leaves the tubular chart (1 + w <= 0) at rho = " + std::to_string(rho));
      const Eigen::MatrixXd F = geom_.residual(t);
      res.residual_sup = F.cwiseAbs().maxCoeff();
      res.residual_history.push_back(res.residual_sup);
      if (res.residual_sup <= cfg_.tol) {
        res.iterations = it;
        break;
      }
      if (it >= cfg_.max_iter)
        throw Error(ErrorCode::NoConvergence, "residual " + std::to_string(res.residual_sup) + " after " +
                                                  std::to_string(it) + " iterations at rho = " + std::to_string(rho));
      const Unknowns next = apply_N(rho, xi, F);
      const double nrm = e_norm(rho, next);
      require(std::isfinite(nrm) && nrm <= ball, ErrorCode::BallEscape,
              "iterate norm " + std::to_string(nrm) + " exceeds c0 rho^2 = " + std::to_string(ball));
      const double step = e_norm(rho, difference(next, xi));
      // ratios below the roundoff floor carry no information
      if (prev_step > 0.0 && prev_step > 1e3 * std::numeric_limits<double>::epsilon() * std::max(nrm, 1e-300))
        res.contraction_factor = std::max(res.contraction_factor, step / prev_step);
      prev_step = step;
      xi = next;
    }
    res.xi = xi;
    res.tube = tube(rho, xi);
    res.e_norm = e_norm(rho, xi);
    return res;
  }

  /// Oracle residual of a solved leaf on a grid refined by `factor` in both directions.
  double refined_residual(const SolveResult& r, int factor = 2) const {
    const TorusGrid fine(model_->lambda(), grid_.n_s() * factor, grid_.n_theta() * factor);
    const TubeGeometry fg(*model_, fine);
    TubeConfiguration t{r.tube.rho, grid_.resample(r.tube.w, fine), NormalSection::zero(fine.n_s(), 2)};
    for (int i = 0; i < 2; ++i) {
      const Eigen::MatrixXd col = r.tube.Phi.phi.col(i).replicate(1, grid_.n_theta());
      t.Phi.phi.col(i) = grid_.resample(col, fine).col(0);
    }
    return fg.residual(t).cwiseAbs().maxCoeff();
  }

  static Unknowns difference(const Unknowns& a, const Unknowns& b) {
    return {a.w0 - b.w0, {a.Phi.phi - b.Phi.phi}, a.w_tilde - b.w_tilde};
  }

 private:
  Eigen::VectorXd drop_nyquist(const Eigen::VectorXd& v) const { return grid_.line().truncate(v, grid_.n_s() / 2 - 1); }

  const JacobiOperator& jacobi() const { return jacobi_; }

  const ModelMetric* model_;
  SolverConfig cfg_;
  TorusGrid grid_;
  TubeGeometry geom_;
  JacobiOperator jacobi_;  // built up front so concurrent solves share it read-only
};

inline SolveResult fixed_point_solve(const ModelMetric& model, double rho, const SolverConfig& cfg = {}) {
  return CmcSolver(model, cfg).solve(rho);
}

/// True if the solver converges with contraction factor < 1 at both endpoints of every
/// I_k, k in [k_min, k_max], for margin constant c1. A closed window counts as failure.
inline bool contracts_on_gaps(const CmcSolver& solver, int k_min, int k_max, double c1) {
  const auto gaps = gap_intervals(solver.model(), k_min, k_max, c1);
  if (static_cast<int>(gaps.size()) != k_max - k_min + 1) return false;
  for (const auto& g : gaps)
    for (double rho : {g.rho_lo, g.rho_hi}) {
      try {
        if (solver.solve(rho).contraction_factor >= 1.0) return false;
      } catch (const Error&) {
        return false;
      }
    }
  return true;
}

/// Bisection for the smallest c1 in [lo, hi] with contraction at all gap endpoints.
/// Returns the smallest passing value found.
inline double calibrate_c1(const CmcSolver& solver, int k_min, int k_max, double lo, double hi, int steps) {
  require(contracts_on_gaps(solver, k_min, k_max, hi), ErrorCode::NoConvergence,
          "no contraction at the upper calibration bound c1 = " + std::to_string(hi));
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    (contracts_on_gaps(solver, k_min, k_max, mid) ? hi : lo) = mid;
  }
  return hi;
}

struct FoliationReport {
  std::vector<double> rhos;
  double min_radial_derivative = 0.0;  // min over samples and grid of d_rho (rho (1+w) + <Phi, U>)
  double max_dw_over_rho = 0.0;        // max |d_rho w|_inf / rho
  double max_dphi_over_rho = 0.0;      // max |d_rho Phi|_inf / rho
  double min_leaf_gap = 0.0;           // min over adjacent samples of the support-function gap
};

/// Solves at interior samples of the interval and checks the leaves move outward monotonically.
inline FoliationReport foliation_check(const ModelMetric& model, const GapInterval& interval, int samples,
                                       const SolverConfig& cfg = {}) {
  require(samples >= 3, ErrorCode::ContractViolation, "foliation check needs at least 3 samples");
  const CmcSolver solver(model, cfg);
  const TorusGrid& g = solver.grid();
  FoliationReport rep;
  rep.min_radial_derivative = std::numeric_limits<double>::infinity();
  rep.min_leaf_gap = std::numeric_limits<double>::infinity();
  auto support = [&](const SolveResult& r) {
    Eigen::MatrixXd h(g.n_s(), g.n_theta());
    for (int a = 0; a < g.n_s(); ++a)
      for (int b = 0; b < g.n_theta(); ++b) {
        const double th = g.theta(b);
        h(a, b) = r.tube.rho * (1.0 + r.tube.w(a, b)) + r.tube.Phi.phi(a, 0) * std::cos(th) + r.tube.Phi.phi(a, 1) * std::sin(th);
      }
    return h;
  };
  std::optional<Eigen::MatrixXd> prev_h;
  double prev_rho = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double rho = interval.rho_lo + (i + 1.0) * (interval.rho_hi - interval.rho_lo) / (samples + 1.0);
    const double h = 1e-4 * rho;
    const SolveResult mid = solver.solve(rho);
    const SolveResult lo = solver.solve(rho - h, mid.xi), hi = solver.solve(rho + h, mid.xi);
    const Eigen::MatrixXd dw = (hi.tube.w - lo.tube.w) / (2.0 * h);
    const Eigen::MatrixXd dphi = (hi.tube.Phi.phi - lo.tube.Phi.phi) / (2.0 * h);
    const Eigen::MatrixXd dh = (support(hi) - support(lo)) / (2.0 * h);
    rep.rhos.push_back(rho);
    rep.min_radial_derivative = std::min(rep.min_radial_derivative, dh.minCoeff());
    rep.max_dw_over_rho = std::max(rep.max_dw_over_rho, dw.cwiseAbs().maxCoeff() / rho);
    rep.max_dphi_over_rho = std::max(rep.max_dphi_over_rho, dphi.rowwise().norm().maxCoeff() / rho);
    const Eigen::MatrixXd hm = support(mid);
    require(dh.minCoeff() > 0.0, ErrorCode::FoliationViolation,
            "radial derivative of the leaf map is not positive at rho = " + std::to_string(rho));
    if (prev_h) {
      const double gap = (hm - *prev_h).minCoeff();
      rep.min_leaf_gap = std::min(rep.min_leaf_gap, gap);
      require(gap > 0.0, ErrorCode::FoliationViolation,
              "leaves at rho = " + std::to_string(prev_rho) + " and " + std::to_string(rho) + " are not nested");
    }
    prev_h = hm;
    prev_rho = rho;
  }
  return rep;
}

}  // namespace cmc
