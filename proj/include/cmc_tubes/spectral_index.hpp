#pragma once

// Morse index of the constructed leaves. The second variation is assembled from the
// linearized oracle residual: for a variation V = (0, rho dw U + dPhi) with normal speed
// nu = g(V, N), DF[V] = rho L_J nu where L_J = Delta + |A|^2 + Ric(N, N). The form
//   S(a, b) = -rho * int nu_a DF[V_b] dA,   M(a, b) = int nu_a nu_b dA
// is the rho^2-scaled Jacobi form; its generalized eigenvalues on the round flat cylinder
// are rho^2 m^2 + j^2 - 1.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmc_tubes/cmc_solver.hpp"
#include "cmc_tubes/error.hpp"
#include "cmc_tubes/jacobi_solvers.hpp"
#include "cmc_tubes/mode_decomposition.hpp"
#include "cmc_tubes/model_metric.hpp"
#include "cmc_tubes/tube_geometry.hpp"

namespace cmc {

enum class Block { W0 = 0, Phi = 1, WTilde = 2 };

inline const char* block_name(Block b) {
  switch (b) {
    case Block::W0: return "w0";
    case Block::Phi: return "Phi";
    case Block::WTilde: return "w_tilde";
  }
  return "?";
}

struct IndexConfig {
  int max_x0_mode = 12;     // retained x0 modes |m| of the variation basis
  int max_theta_mode = 6;   // retained sphere modes j of the w~ block
  bool g_invariant = false; // keep only modes even under x' -> -x' (drops Phi and odd j)
  double delta_null = 1e-7; // relative null threshold
};

struct SpectrumReport {
  double rho = 0.0;
  std::vector<double> eigenvalues;  // ascending
  int index = 0;
  int nullity = 0;
  std::vector<Block> block_tags;
  double asymmetry = 0.0;        // |S - S^T| / |S| before symmetrization
  double coupling_norm = 0.0;    // |off-block part of S| / |S|
  int decoupled_index = 0;       // sum of negative counts of the diagonal blocks
  int decoupled_nullity = 0;
};

struct BasisFunction {
  Block block;
  int component;  // Phi component for the Phi block
  int m;          // x0 mode, with sx selecting cos (0) / sin (1)
  int sx;
  int j;          // theta mode, with st selecting cos (0) / sin (1)
  int st;
};

inline std::vector<BasisFunction> variation_basis(const IndexConfig& cfg) {
  std::vector<BasisFunction> out;
  auto x0_modes = [&](auto&& f) {
    for (int m = 0; m <= cfg.max_x0_mode; ++m)
      for (int sx = 0; sx < (m == 0 ? 1 : 2); ++sx) f(m, sx);
  };
  x0_modes([&](int m, int sx) { out.push_back({Block::W0, 0, m, sx, 0, 0}); });
  if (!cfg.g_invariant)
    for (int i = 0; i < 2; ++i) x0_modes([&](int m, int sx) { out.push_back({Block::Phi, i, m, sx, 1, 0}); });
  for (int j = 2; j <= cfg.max_theta_mode; ++j) {
    if (cfg.g_invariant && j % 2 == 1) continue;
    for (int st = 0; st < 2; ++st) x0_modes([&](int m, int sx) { out.push_back({Block::WTilde, 0, m, sx, j, st}); });
  }
  return out;
}

/// Round-tube leaf on a flat model; valid at every rho, including resonant ones.
inline SolveResult round_tube_leaf(const TorusGrid& grid, double rho) {
  SolveResult r;
  r.xi = Unknowns::zero(grid);
  r.tube = TubeConfiguration::round(grid, rho);
  return r;
}

struct JacobiAssembly {
  Eigen::MatrixXd S, M;  // symmetrized form and Gram matrix
  std::vector<BasisFunction> basis;
  double asymmetry = 0.0;
};

/// Assembles the second-variation form about a converged leaf.
inline JacobiAssembly assemble_jacobi(const CmcSolver& solver, const SolveResult& leaf, const IndexConfig& cfg = {},
                                      double converged_tol = -1.0) {
  const TorusGrid& g = solver.grid();
  const TubeGeometry& geom = solver.geometry();
  const double tol = converged_tol > 0.0 ? converged_tol : 10.0 * solver.config().tol;
  const double rho = leaf.tube.rho;
  const TubeGeometry::JetField J = geom.jets(leaf.tube);
  // normal covector and area element per point
  const int ns = g.n_s(), nt = g.n_theta(), P = ns * nt;
  Eigen::MatrixXd nflat(P, 2);
  Eigen::VectorXd dA(P);
  double res = 0.0;
  for (int a = 0; a < ns; ++a)
    for (int b = 0; b < nt; ++b) {
      const auto pg = geom.point(leaf.tube, J, a, b);
      res = std::max(res, std::abs(pg.residual));
      const Eigen::Vector3d nl = pg.g * pg.N;
      nflat.row(a * nt + b) = nl.tail<2>().transpose();
      dA[a * nt + b] = std::sqrt(pg.I.determinant()) * g.weight();
    }
  require(res <= tol, ErrorCode::NotConverged, "leaf residual " + std::to_string(res) + " exceeds " + std::to_string(tol));
  const Linearization lin = geom.linearize(leaf.tube);

  JacobiAssembly out;
  out.basis = variation_basis(cfg);
  const int K = static_cast<int>(out.basis.size());
  Eigen::MatrixXd nu(P, K), dF(P, K);
  for (int c = 0; c < K; ++c) {
    const BasisFunction& e = out.basis[static_cast<size_t>(c)];
    TubeConfiguration dir = TubeConfiguration::round(g, rho);
    for (int a = 0; a < ns; ++a) {
      const double ax = g.wavenumber(e.m) * g.x0(a);
      const double fx = e.sx == 0 ? std::cos(ax) : std::sin(ax);
      if (e.block == Block::Phi) {
        dir.Phi.phi(a, e.component) = fx;
      } else {
        for (int b = 0; b < nt; ++b) {
          const double at = e.j * g.theta(b);
          dir.w(a, b) = fx * (e.st == 0 ? std::cos(at) : std::sin(at));
        }
      }
    }
    const Eigen::MatrixXd df = geom.apply_linearization(lin, dir);
    for (int a = 0; a < ns; ++a)
      for (int b = 0; b < nt; ++b) {
        const double th = g.theta(b);
        const Eigen::Vector2d U(std::cos(th), std::sin(th));
        const Eigen::Vector2d V = rho * dir.w(a, b) * U + dir.Phi.phi.row(a).transpose();
        nu(a * nt + b, c) = nflat.row(a * nt + b).dot(V);
        dF(a * nt + b, c) = df(a, b);
      }
  }
  const Eigen::MatrixXd S = -rho * nu.transpose() * dA.asDiagonal() * dF;
  out.M = nu.transpose() * dA.asDiagonal() * nu;
  out.asymmetry = (S - S.transpose()).norm() / std::max(S.norm(), 1e-300);
  out.S = 0.5 * (S + S.transpose());
  out.M = 0.5 * (out.M + out.M.transpose());
  return out;
}

namespace detail {

inline void count_signs(const Eigen::VectorXd& ev, double delta_null, int& neg, int& null) {
  const double scale = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  neg = null = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i]) <= delta_null * scale) ++null;
    else if (ev[i] < 0.0) ++neg;
  }
}

}  // namespace detail

inline SpectrumReport spectrum(const JacobiAssembly& A, double rho, const IndexConfig& cfg = {}) {
  SpectrumReport rep;
  rep.rho = rho;
  rep.asymmetry = A.asymmetry;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A.S, A.M);
  require(es.info() == Eigen::Success, ErrorCode::Degenerate, "generalized eigensolve failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  detail::count_signs(ev, cfg.delta_null, rep.index, rep.nullity);

  const int K = static_cast<int>(A.basis.size());
  const Eigen::MatrixXd MV = A.M * es.eigenvectors();
  for (int c = 0; c < K; ++c) {
    double w[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < K; ++a)
      w[static_cast<int>(A.basis[static_cast<size_t>(a)].block)] += es.eigenvectors()(a, c) * MV(a, c);
    rep.block_tags.push_back(static_cast<Block>(std::max_element(w, w + 3) - w));
  }

  // diagonal blocks and coupling
  Eigen::MatrixXd off = A.S;
  double scale = 0.0;
  for (int blk = 0; blk < 3; ++blk) {
    std::vector<int> ids;
    for (int a = 0; a < K; ++a)
      if (static_cast<int>(A.basis[static_cast<size_t>(a)].block) == blk) ids.push_back(a);
    if (ids.empty()) continue;
    const int k = static_cast<int>(ids.size());
    Eigen::MatrixXd Sb(k, k), Mb(k, k);
    for (int x = 0; x < k; ++x)
      for (int y = 0; y < k; ++y) {
        Sb(x, y) = A.S(ids[x], ids[y]);
        Mb(x, y) = A.M(ids[x], ids[y]);
        off(ids[x], ids[y]) = 0.0;
      }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eb(Sb, Mb, Eigen::EigenvaluesOnly);
    scale = std::max(scale, eb.eigenvalues().cwiseAbs().maxCoeff());
    int neg = 0, null = 0;
    detail::count_signs(eb.eigenvalues(), cfg.delta_null, neg, null);
    rep.decoupled_index += neg;
    rep.decoupled_nullity += null;
  }
  rep.coupling_norm = off.norm() / std::max(A.S.norm(), 1e-300);
  return rep;
}

inline SpectrumReport leaf_spectrum(const CmcSolver& solver, const SolveResult& leaf, const IndexConfig& cfg = {}) {
  return spectrum(assemble_jacobi(solver, leaf, cfg), leaf.tube.rho, cfg);
}

/// Index of a report; rejects spectra with a null direction.
inline int index_count(const SpectrumReport& rep) {
  require(rep.nullity == 0, ErrorCode::NullityPresent,
          std::to_string(rep.nullity) + " eigenvalues within the null threshold at rho = " + std::to_string(rep.rho));
  return rep.index;
}

struct GeodesicIndex {
  int index = 0;
  int nullity = 0;
};

/// Negative count of -J over its Fourier blocks (band |m| <= max_mode).
inline GeodesicIndex geodesic_index(const ModelMetric& model, int max_mode = 24, double delta_null = 1e-7) {
  const LineGrid line(model.lambda(), 4 * (max_mode + 1));
  const JacobiOperator J(model, line, max_mode);
  const double scale = std::max(1.0, J.matrix().cwiseAbs().maxCoeff());
  const auto [neg, null] = J.negative_and_null(delta_null * scale);
  return {neg, null};
}

/// True if the leaf index equals Index(Gamma) + 2k + 1.
inline bool compare_to_formula(const ModelMetric& model, int k, const SpectrumReport& rep) {
  return index_count(rep) == geodesic_index(model).index + 2 * k + 1;
}

/// B(k, l, rho) = -(2 pi k / Lambda)^2 + rho^{-2} (n - 1 - l (n - 2 + l)).
inline double flat_torus_symbol(int k, int l_mode, double rho, int n, double lambda = 2.0 * std::numbers::pi) {
  require(rho > 0.0 && n >= 2 && l_mode >= 0, ErrorCode::ContractViolation, "invalid symbol query");
  const double q = 2.0 * std::numbers::pi * k / lambda;
  const double lam_sq = static_cast<double>(l_mode) * (n - 2 + l_mode);
  return -q * q + (n - 1.0 - lam_sq) / (rho * rho);
}

/// Radii sqrt(n-1) Lambda / (2 pi k), k = 1..k_max, where the j = 0 symbol vanishes.
inline std::vector<double> degenerate_radii(int n, int k_max, double lambda = 2.0 * std::numbers::pi) {
  std::vector<double> out;
  for (int k = 1; k <= k_max; ++k) out.push_back(std::sqrt(n - 1.0) * lambda / (2.0 * std::numbers::pi * k));
  return out;
}

}  // namespace cmc
