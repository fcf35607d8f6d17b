#pragma once

// Fields on the unit normal bundle SN(Gamma) = S^1(Lambda) x S^{n-1} and their split into
// the fiberwise constant part w0, the linear part (a normal section) and the rest.
// Explicit harmonics are only used for n = 2; for n > 2 only the eigenvalue table is provided.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "cmc_tubes/error.hpp"
#include "cmc_tubes/fourier.hpp"

namespace cmc {

struct SphereMode {
  int j;
  double lambda_sq;  // eigenvalue of the sphere Laplacian, j (n - 2 + j)
  long multiplicity;
};

/// Eigenvalue table of the Laplacian on S^{n-1} for degrees 0..jmax.
inline std::vector<SphereMode> sphere_basis(int n, int jmax) {
  require(n >= 2, ErrorCode::ContractViolation, "sphere basis needs n >= 2");
  auto binom = [](long a, long b) -> long {
    if (b < 0 || a < b) return 0;
    long r = 1;
    for (long i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  std::vector<SphereMode> out;
  for (int j = 0; j <= jmax; ++j) {
    // dimension of degree-j harmonic polynomials in n variables
    const long mult = binom(n + j - 1, j) - binom(n + j - 3, j - 2);
    out.push_back({j, static_cast<double>(j) * (n - 2 + j), mult});
  }
  return out;
}

/// Normal section Phi = sum_j phi_j X_j sampled on the x0 grid: column j holds phi_j.
struct NormalSection {
  Eigen::MatrixXd phi;

  static NormalSection zero(int n_s, int n) { return {Eigen::MatrixXd::Zero(n_s, n)}; }
  int n() const { return static_cast<int>(phi.cols()); }
  double sup_norm() const {
    return phi.size() ? phi.rowwise().norm().maxCoeff() : 0.0;
  }
};

struct ModeSplit {
  Eigen::VectorXd w0;       // fiber average, function of x0
  NormalSection w_hat;      // linear part as a section
  Eigen::MatrixXd w_tilde;  // remaining sphere modes, sampled on the grid
};

/// Evaluates the linear fiber function sum_j phi_j(x0) theta_j on the grid (n = 2).
inline Eigen::MatrixXd section_to_linear_mode(const TorusGrid& grid, const NormalSection& s) {
  require(s.phi.rows() == grid.n_s(), ErrorCode::GridMismatch, "section sampled on wrong x0 grid");
  require(s.n() == 2, ErrorCode::ContractViolation, "explicit harmonics are implemented for n = 2");
  Eigen::MatrixXd out(grid.n_s(), grid.n_theta());
  for (int b = 0; b < grid.n_theta(); ++b) {
    const double t = grid.theta(b);
    out.col(b) = s.phi.col(0) * std::cos(t) + s.phi.col(1) * std::sin(t);
  }
  return out;
}

inline ModeSplit decompose(const TorusGrid& grid, const Eigen::MatrixXd& w) {
  grid.check(w);
  const int ns = grid.n_s(), nt = grid.n_theta();
  ModeSplit out;
  out.w0.resize(ns);
  out.w_hat = NormalSection::zero(ns, 2);
  for (int a = 0; a < ns; ++a) {
    const Eigen::VectorXcd c = dft_forward(w.row(a).transpose().cast<cplx>());
    out.w0[a] = c[0].real();
    // a cos + b sin has c_1 = (a - i b) / 2
    out.w_hat.phi(a, 0) = 2.0 * c[1].real();
    out.w_hat.phi(a, 1) = -2.0 * c[1].imag();
  }
  out.w_tilde = w - out.w0.replicate(1, nt) - section_to_linear_mode(grid, out.w_hat);
  return out;
}

inline Eigen::MatrixXd reassemble(const TorusGrid& grid, const ModeSplit& s) {
  return s.w0.replicate(1, grid.n_theta()) + section_to_linear_mode(grid, s.w_hat) + s.w_tilde;
}

/// Discrete L^2 norm on SN(Gamma) for the product grid.
inline double l2_norm(const TorusGrid& grid, const Eigen::MatrixXd& f) {
  return std::sqrt(f.squaredNorm() * grid.weight());
}

}  // namespace cmc
