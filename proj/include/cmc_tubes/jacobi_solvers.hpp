#pragma once

// Linear inverses used by the fixed-point scheme:
//   - the zero-mode operator  rho^2 d^2/dx0^2 + (n - 1)   (= d^2/ds^2 + (n - 1), s = x0 / rho),
//   - the high-mode operator  rho^2 d^2/dx0^2 + Delta_theta + (n - 1)  on sphere modes j >= 2,
//   - the geodesic Jacobi operator  Phi'' + R(Phi, X0) X0 = Phi'' - B Phi.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "cmc_tubes/error.hpp"
#include "cmc_tubes/fourier.hpp"
#include "cmc_tubes/mode_decomposition.hpp"
#include "cmc_tubes/model_metric.hpp"

namespace cmc {

struct ResonanceInfo {
  double rho = 0.0;
  double phase = 0.0;                  // sqrt(n-1) Lambda / rho mod 2 pi
  double distance_to_resonance = 0.0;  // min(phase, 2 pi - phase)
  double small_divisor = 0.0;          // 1 - cos(sqrt(n-1) Lambda / rho)
};

inline ResonanceInfo resonance_info(int n, double lambda, double rho) {
  require(n >= 2 && rho > 0.0 && lambda > 0.0, ErrorCode::ContractViolation, "invalid resonance query");
  const double x = std::sqrt(n - 1.0) * lambda / rho;
  ResonanceInfo r;
  r.rho = rho;
  r.phase = std::fmod(x, 2.0 * std::numbers::pi);
  r.distance_to_resonance = std::min(r.phase, 2.0 * std::numbers::pi - r.phase);
  // 1 - cos x = 2 sin^2(x/2) avoids cancellation near resonance
  const double sh = std::sin(0.5 * r.distance_to_resonance);
  r.small_divisor = 2.0 * sh * sh;
  return r;
}

struct L0Solution {
  Eigen::VectorXd v;
  double alpha = 0.0, beta = 0.0;  // homogeneous constants of the sine/cosine formula
};

/// Fourier solve of rho^2 v'' + (n - 1) v = f on the x0 grid.
inline Eigen::VectorXd solve_L0(const LineGrid& line, const Eigen::VectorXd& f, double rho, int n,
                                double delta_res = 1e-6) {
  const ResonanceInfo ri = resonance_info(n, line.period(), rho);
  require(ri.small_divisor > delta_res, ErrorCode::Resonant,
          "rho = " + std::to_string(rho) + " is within the resonance zone (1 - cos = " +
              std::to_string(ri.small_divisor) + ")");
  Eigen::VectorXcd c = line.analyze(f);
  for (int p = 0; p < line.size(); ++p) {
    const double om = rho * line.wavenumber(fft_frequency(p, line.size()));
    c[p] /= (n - 1.0) - om * om;
  }
  return line.synthesize(c);
}

/// Closed-form variation of parameters in s = x0 / rho:
///   c v(s) = sin(cs) (alpha + int_0^s cos(c t) f dt) - cos(cs) (beta + int_0^s sin(c t) f dt),
/// c = sqrt(n-1), with alpha, beta fixed by periodicity. f is treated as the trigonometric
/// polynomial interpolating the samples, so the integrals are exact.
inline L0Solution solve_L0_closed_form(const LineGrid& line, const Eigen::VectorXd& f, double rho, int n,
                                       double delta_res = 1e-6) {
  const ResonanceInfo ri = resonance_info(n, line.period(), rho);
  require(ri.small_divisor > delta_res, ErrorCode::Resonant, "rho is within the resonance zone");
  const double c = std::sqrt(n - 1.0);
  const double P = line.period() / rho;
  const Eigen::VectorXcd fh = line.analyze(f);
  const int N = line.size();
  // int_0^s exp(i k t) dt
  auto prim = [](double k, double s) -> cplx {
    if (std::abs(k) < 1e-14) return cplx(s, 0.0);
    return (std::exp(cplx(0.0, k * s)) - 1.0) / cplx(0.0, k);
  };
  // A(s) = int_0^s cos(ct) f, S(s) = int_0^s sin(ct) f
  auto integrals = [&](double s, double& A, double& S) {
    cplx a(0.0), b(0.0);
    for (int p = 0; p < N; ++p) {
      if (2 * p == N) continue;
      const double om = rho * line.wavenumber(fft_frequency(p, N));
      const cplx ip = prim(om + c, s), im = prim(om - c, s);
      a += fh[p] * 0.5 * (ip + im);
      b += fh[p] * (ip - im) / cplx(0.0, 2.0);
    }
    A = a.real();
    S = b.real();
  };
  double AP = 0.0, SP = 0.0;
  integrals(P, AP, SP);
  const double sP = std::sin(c * P), cP = std::cos(c * P);
  // periodicity of v and v'
  Eigen::Matrix2d M;
  M << sP, 1.0 - cP, cP - 1.0, sP;
  const Eigen::Vector2d rhs(-AP * sP + SP * cP, -AP * cP - SP * sP);
  const Eigen::Vector2d ab = M.lu().solve(rhs);
  L0Solution out;
  out.alpha = ab[0];
  out.beta = ab[1];
  out.v.resize(N);
  for (int a = 0; a < N; ++a) {
    const double s = line.x0(a) / rho;
    double A = 0.0, S = 0.0;
    integrals(s, A, S);
    out.v[a] = (std::sin(c * s) * (out.alpha + A) - std::cos(c * s) * (out.beta + S)) / c;
  }
  return out;
}

/// Fourier-diagonal matrix of the zero-mode operator on retained modes |m| <= max_mode.
inline Eigen::VectorXd L0_symbol(const LineGrid& line, double rho, int n, int max_mode) {
  Eigen::VectorXd ev(2 * max_mode + 1);
  for (int m = -max_mode; m <= max_mode; ++m) {
    const double om = rho * line.wavenumber(m);
    ev[m + max_mode] = (n - 1.0) - om * om;
  }
  return ev;
}

enum class InverseNorm { L0_sup, L0_derivative };

/// Exact sup-norm operator norm of the discrete zero-mode inverse (L0_sup), or of
/// g -> L0^{-1} d_s g (L0_derivative, the map in the derivative form of the estimate).
/// Both are circulant, so the norm is the l1 norm of the discrete Green's function.
inline double estimate_inverse_norm(const LineGrid& line, double rho, int n, InverseNorm which,
                                    double delta_res = 1e-6) {
  const ResonanceInfo ri = resonance_info(n, line.period(), rho);
  require(ri.small_divisor > delta_res, ErrorCode::Resonant, "rho is within the resonance zone");
  const int N = line.size();
  Eigen::VectorXcd g(N);
  for (int p = 0; p < N; ++p) {
    const double om = rho * line.wavenumber(fft_frequency(p, N));
    const cplx mult = which == InverseNorm::L0_sup ? cplx(1.0) : (2 * p == N ? cplx(0.0) : cplx(0.0, om));
    g[p] = mult / ((n - 1.0) - om * om) / static_cast<double>(N);
  }
  return line.synthesize(g).cwiseAbs().sum();
}

/// Reference growth profile 1 / (rho (1 - cos(sqrt(n-1) Lambda / rho))).
inline double resonance_profile(int n, double lambda, double rho) {
  return 1.0 / (rho * resonance_info(n, lambda, rho).small_divisor);
}

/// Solves rho^2 w_x0x0 + w_thth + (n - 1) w = f for f supported on sphere modes j >= 2.
inline Eigen::MatrixXd solve_tilde(const TorusGrid& grid, const Eigen::MatrixXd& f, double rho,
                                   double block_tol = 1e-10) {
  Eigen::MatrixXcd c = grid.analyze(f);
  const int ns = grid.n_s(), nt = grid.n_theta();
  double low = 0.0, total = 0.0;
  for (int p = 0; p < ns; ++p)
    for (int q = 0; q < nt; ++q) {
      const double a = std::abs(c(p, q));
      total = std::max(total, a);
      if (std::abs(fft_frequency(q, nt)) <= 1) low = std::max(low, a);
    }
  require(low <= block_tol * std::max(total, 1.0), ErrorCode::BlockViolation,
          "input to the high-mode solve has sphere-mode 0/1 content " + std::to_string(low));
  for (int p = 0; p < ns; ++p) {
    const double om = rho * grid.wavenumber(fft_frequency(p, ns));
    for (int q = 0; q < nt; ++q) {
      const int j = fft_frequency(q, nt);
      if (std::abs(j) <= 1) {
        c(p, q) = 0.0;
        continue;
      }
      c(p, q) /= 1.0 - om * om - static_cast<double>(j * j);
    }
  }
  return grid.synthesize(c);
}

/// Galerkin form of the geodesic Jacobi operator on Fourier modes |m| <= M of each
/// normal component. Built once per model and grid.
class JacobiOperator {
 public:
  JacobiOperator(const ModelMetric& model, const LineGrid& line, int max_mode = -1)
      : n_(model.n()), line_(line), M_(max_mode < 0 ? line.size() / 2 - 1 : max_mode) {
    require(2 * M_ < line.size(), ErrorCode::ContractViolation, "Jacobi band exceeds the grid");
    require(std::abs(line.period() - model.lambda()) <= 1e-12 * model.lambda(), ErrorCode::GridMismatch,
            "grid period differs from the model's Lambda");
    const int K = 2 * M_ + 1;
    A_ = Eigen::MatrixXcd::Zero(n_ * K, n_ * K);
    for (int i = 0; i < n_; ++i)
      for (int m = -M_; m <= M_; ++m) A_(idx(i, m), idx(i, m)) -= line.wavenumber(m) * line.wavenumber(m);
    // -B Phi, with B_ij(x0) = sum_h c_h cos + s_h sin
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const TrigSeries& ts = model.r0i0j_series(i, j);
        for (int h = 0; h < static_cast<int>(ts.c.size()); ++h) {
          if (ts.c[h] == 0.0 && ts.s[h] == 0.0) continue;
          // coefficient of exp(+i h q x) and exp(-i h q x)
          const cplx plus = h == 0 ? cplx(ts.c[0]) : cplx(0.5 * ts.c[h], -0.5 * ts.s[h]);
          const cplx minus = h == 0 ? cplx(0.0) : std::conj(plus);
          for (int m = -M_; m <= M_; ++m) {
            if (m - h >= -M_ && m - h <= M_) A_(idx(i, m), idx(j, m - h)) -= plus;
            if (h > 0 && m + h >= -M_ && m + h <= M_) A_(idx(i, m), idx(j, m + h)) -= minus;
          }
        }
      }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A_);
    min_sv_ = svd.singularValues().minCoeff();
    lu_ = A_.partialPivLu();
  }

  int band() const { return M_; }
  double min_singular_value() const { return min_sv_; }
  const Eigen::MatrixXcd& matrix() const { return A_; }
  int idx(int i, int m) const { return i * (2 * M_ + 1) + (m + M_); }

  /// Negative, zero (|ev| <= tol) counts of -J on the retained band.
  std::pair<int, int> negative_and_null(double tol) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(-0.5 * (A_ + A_.adjoint()), Eigen::EigenvaluesOnly);
    int neg = 0, null = 0;
    for (int k = 0; k < es.eigenvalues().size(); ++k) {
      const double ev = es.eigenvalues()[k];
      if (std::abs(ev) <= tol) ++null;
      else if (ev < 0.0) ++neg;
    }
    return {neg, null};
  }

  Eigen::VectorXcd coefficients(const NormalSection& s) const {
    require(s.phi.rows() == line_.size() && s.n() == n_, ErrorCode::GridMismatch, "section on wrong grid");
    Eigen::VectorXcd x(n_ * (2 * M_ + 1));
    for (int i = 0; i < n_; ++i) {
      const Eigen::VectorXcd c = line_.analyze(s.phi.col(i));
      for (int m = -M_; m <= M_; ++m) x[idx(i, m)] = c[(m + line_.size()) % line_.size()];
    }
    return x;
  }

  NormalSection section(const Eigen::VectorXcd& x) const {
    NormalSection s = NormalSection::zero(line_.size(), n_);
    for (int i = 0; i < n_; ++i) {
      Eigen::VectorXcd c = Eigen::VectorXcd::Zero(line_.size());
      for (int m = -M_; m <= M_; ++m) c[(m + line_.size()) % line_.size()] = x[idx(i, m)];
      s.phi.col(i) = line_.synthesize(c);
    }
    return s;
  }

  NormalSection solve(const NormalSection& psi, double delta_j = 1e-8) const {
    require(min_sv_ > delta_j, ErrorCode::DegenerateGeodesic,
            "Jacobi operator has singular value " + std::to_string(min_sv_));
    return section(lu_.solve(coefficients(psi)));
  }

 private:
  int n_;
  LineGrid line_;
  int M_;
  Eigen::MatrixXcd A_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  double min_sv_ = 0.0;
};

inline NormalSection solve_geodesic_jacobi(const ModelMetric& model, const LineGrid& line, const NormalSection& psi,
                                           double delta_j = 1e-8) {
  return JacobiOperator(model, line).solve(psi, delta_j);
}

}  // namespace cmc
