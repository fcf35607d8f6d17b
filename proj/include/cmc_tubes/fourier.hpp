#pragma once

// Spectral helpers on the product grid S^1(Lambda) x S^1 used for fields on SN(Gamma)
// when n = 2, and on S^1(Lambda) alone for normal sections.
//
// Coefficients are normalized so that f(x0, theta) = sum_{m,j} c(m,j) exp(i (q m x0 + j theta))
// with q = 2 pi / Lambda. Row index p of a coefficient matrix is the FFT index; the
// signed frequency is fft_frequency(p, N).

#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "cmc_tubes/error.hpp"

namespace cmc {

using cplx = std::complex<double>;

inline int fft_frequency(int p, int n) { return p <= n / 2 ? p : p - n; }

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

/// Forward DFT of a complex vector, normalized to Fourier-series coefficients.
inline Eigen::VectorXcd dft_forward(const Eigen::VectorXcd& values) {
  const auto n = values.size();
  std::vector<cplx> in(values.data(), values.data() + n), out;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  Eigen::VectorXcd c(n);
  for (Eigen::Index i = 0; i < n; ++i) c[i] = out[static_cast<size_t>(i)] / static_cast<double>(n);
  return c;
}

/// Inverse of dft_forward: evaluates the Fourier series on the grid.
inline Eigen::VectorXcd dft_inverse(const Eigen::VectorXcd& coeffs) {
  const auto n = coeffs.size();
  std::vector<cplx> in(n), out;
  for (Eigen::Index i = 0; i < n; ++i) in[static_cast<size_t>(i)] = coeffs[i] * static_cast<double>(n);
  Eigen::FFT<double> fft;
  fft.inv(out, in);
  return Eigen::Map<Eigen::VectorXcd>(out.data(), n);
}

/// Periodic grid in x0 of period Lambda (one-dimensional; normal sections and w0).
class LineGrid {
 public:
  LineGrid() = default;
  LineGrid(double lambda, int n) : lambda_(lambda), n_(n) {
    require(lambda > 0.0, ErrorCode::ContractViolation, "grid period must be positive");
    require(n >= 4 && n % 2 == 0, ErrorCode::ContractViolation, "grid size must be even and >= 4");
  }

  double period() const { return lambda_; }
  int size() const { return n_; }
  double x0(int a) const { return lambda_ * a / n_; }
  double wavenumber(int m) const { return 2.0 * std::numbers::pi * m / lambda_; }
  double weight() const { return lambda_ / n_; }

  Eigen::VectorXcd analyze(const Eigen::VectorXd& values) const {
    require(values.size() == n_, ErrorCode::GridMismatch, "line field has wrong number of samples");
    return dft_forward(values.cast<cplx>());
  }

  Eigen::VectorXd synthesize(const Eigen::VectorXcd& coeffs) const {
    require(coeffs.size() == n_, ErrorCode::GridMismatch, "line coefficients have wrong size");
    return dft_inverse(coeffs).real();
  }

  /// order-th x0 derivative, spectrally. The Nyquist mode is dropped for odd orders.
  Eigen::VectorXd derivative(const Eigen::VectorXd& values, int order) const {
    Eigen::VectorXcd c = analyze(values);
    for (int p = 0; p < n_; ++p) {
      const int m = fft_frequency(p, n_);
      if (order % 2 == 1 && 2 * p == n_) {
        c[p] = 0.0;
        continue;
      }
      c[p] *= std::pow(cplx(0.0, wavenumber(m)), order);
    }
    return synthesize(c);
  }

  /// Zero all modes with |m| > max_mode (and the Nyquist mode).
  Eigen::VectorXd truncate(const Eigen::VectorXd& values, int max_mode) const {
    Eigen::VectorXcd c = analyze(values);
    for (int p = 0; p < n_; ++p) {
      const int m = fft_frequency(p, n_);
      if (std::abs(m) > max_mode || 2 * p == n_) c[p] = 0.0;
    }
    return synthesize(c);
  }

 private:
  double lambda_ = 2.0 * std::numbers::pi;
  int n_ = 16;
};

/// Product grid on S^1(Lambda) x S^1: rows are x0 samples, columns are theta samples.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(double lambda, int n_s, int n_theta) : line_(lambda, n_s), n_theta_(n_theta) {
    require(n_theta >= 4 && n_theta % 2 == 0, ErrorCode::ContractViolation,
            "theta grid size must be even and >= 4");
  }

  const LineGrid& line() const { return line_; }
  double period() const { return line_.period(); }
  int n_s() const { return line_.size(); }
  int n_theta() const { return n_theta_; }
  double x0(int a) const { return line_.x0(a); }
  double theta(int b) const { return 2.0 * std::numbers::pi * b / n_theta_; }
  double wavenumber(int m) const { return line_.wavenumber(m); }
  /// Quadrature weight of one cell in (x0, theta).
  double weight() const { return line_.weight() * 2.0 * std::numbers::pi / n_theta_; }

  /// Default retained modes: the grid is twice the size the retained band needs.
  int retained_s() const { return n_s() / 4; }
  int retained_theta() const { return n_theta_ / 4; }

  void check(const Eigen::MatrixXd& f) const {
    require(f.rows() == n_s() && f.cols() == n_theta_, ErrorCode::GridMismatch,
            "field sampled on " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                ", grid is " + std::to_string(n_s()) + "x" + std::to_string(n_theta_));
  }

  Eigen::MatrixXcd analyze(const Eigen::MatrixXd& f) const {
    check(f);
    Eigen::MatrixXcd c = f.cast<cplx>();
    for (int a = 0; a < n_s(); ++a) c.row(a) = dft_forward(c.row(a).transpose()).transpose();
    for (int b = 0; b < n_theta_; ++b) c.col(b) = dft_forward(c.col(b));
    return c;
  }

  Eigen::MatrixXd synthesize(const Eigen::MatrixXcd& coeffs) const {
    Eigen::MatrixXcd v = coeffs;
    for (int b = 0; b < n_theta_; ++b) v.col(b) = dft_inverse(v.col(b));
    for (int a = 0; a < n_s(); ++a) v.row(a) = dft_inverse(v.row(a).transpose()).transpose();
    return v.real();
  }

  /// Mixed spectral derivative d^{ds}/dx0^{ds} d^{dt}/dtheta^{dt} applied to coefficients.
  Eigen::MatrixXcd differentiate(const Eigen::MatrixXcd& c, int ds, int dt) const {
    Eigen::MatrixXcd out = c;
    for (int p = 0; p < n_s(); ++p) {
      const int m = fft_frequency(p, n_s());
      const bool drop_s = (ds % 2 == 1) && 2 * p == n_s();
      const cplx fs = std::pow(cplx(0.0, wavenumber(m)), ds);
      for (int q = 0; q < n_theta_; ++q) {
        const int j = fft_frequency(q, n_theta_);
        const bool drop_t = (dt % 2 == 1) && 2 * q == n_theta_;
        if (drop_s || drop_t) {
          out(p, q) = 0.0;
          continue;
        }
        out(p, q) *= fs * std::pow(cplx(0.0, static_cast<double>(j)), dt);
      }
    }
    return out;
  }

  Eigen::MatrixXd derivative(const Eigen::MatrixXd& f, int ds, int dt) const {
    return synthesize(differentiate(analyze(f), ds, dt));
  }

  /// Keep |m| <= max_s and |j| <= max_theta; Nyquist rows/columns are dropped.
  Eigen::MatrixXd truncate(const Eigen::MatrixXd& f, int max_s, int max_theta) const {
    Eigen::MatrixXcd c = analyze(f);
    for (int p = 0; p < n_s(); ++p) {
      for (int q = 0; q < n_theta_; ++q) {
        const int m = fft_frequency(p, n_s()), j = fft_frequency(q, n_theta_);
        if (std::abs(m) > max_s || std::abs(j) > max_theta || 2 * p == n_s() || 2 * q == n_theta_)
          c(p, q) = 0.0;
      }
    }
    return synthesize(c);
  }

  /// Spectral interpolation onto another grid of the same period (zero padding / truncation).
  Eigen::MatrixXd resample(const Eigen::MatrixXd& f, const TorusGrid& target) const {
    const Eigen::MatrixXcd c = analyze(f);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(target.n_s(), target.n_theta());
    for (int p = 0; p < n_s(); ++p) {
      for (int q = 0; q < n_theta_; ++q) {
        if (2 * p == n_s() || 2 * q == n_theta_) continue;
        const int m = fft_frequency(p, n_s()), j = fft_frequency(q, n_theta_);
        if (2 * std::abs(m) >= target.n_s() || 2 * std::abs(j) >= target.n_theta()) continue;
        out((m + target.n_s()) % target.n_s(), (j + target.n_theta()) % target.n_theta()) = c(p, q);
      }
    }
    return target.synthesize(out);
  }

 private:
  LineGrid line_;
  int n_theta_ = 16;
};

/// Graded spectral norm sum (1 + |omega_s| + |omega_theta|)^2 |c|, the stand-in for the
/// rho-scaled C^{2,alpha} norm. `s_scale` converts x0 wavenumbers to the measured variable
/// (rho for the scaled variable s = x0 / rho, 1 for plain x0).
inline double graded_norm(const TorusGrid& grid, const Eigen::MatrixXd& f, double s_scale) {
  const Eigen::MatrixXcd c = grid.analyze(f);
  double sum = 0.0;
  for (int p = 0; p < grid.n_s(); ++p) {
    const double ws = std::abs(grid.wavenumber(fft_frequency(p, grid.n_s()))) * s_scale;
    for (int q = 0; q < grid.n_theta(); ++q) {
      const double wt = std::abs(fft_frequency(q, grid.n_theta()));
      sum += (1.0 + ws + wt) * (1.0 + ws + wt) * std::abs(c(p, q));
    }
  }
  return sum;
}

inline double graded_norm(const LineGrid& grid, const Eigen::VectorXd& f, double s_scale) {
  const Eigen::VectorXcd c = grid.analyze(f);
  double sum = 0.0;
  for (int p = 0; p < grid.size(); ++p) {
    const double ws = std::abs(grid.wavenumber(fft_frequency(p, grid.size()))) * s_scale;
    sum += (1.0 + ws) * (1.0 + ws) * std::abs(c[p]);
  }
  return sum;
}

}  // namespace cmc
