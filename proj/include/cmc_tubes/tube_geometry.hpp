#pragma once

// Perturbed tubes T_rho(w, Phi) = { (x0, rho (1 + w) U(theta) + Phi(x0)) } around the x0 axis
// for n = 2, where U = (cos theta, sin theta) and Y = dU/dtheta.
//
// Two evaluators of the mean curvature are provided: the oracle, which computes the
// fundamental forms exactly under the truncated metric (its derivatives are polynomial
// in x' and trigonometric in x0, so they are evaluated analytically), and the leading-order
// expansion (f-term plus linear block). Their difference is the measured remainder.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cmc_tubes/error.hpp"
#include "cmc_tubes/fourier.hpp"
#include "cmc_tubes/mode_decomposition.hpp"
#include "cmc_tubes/model_metric.hpp"

namespace cmc {

struct TubeConfiguration {
  double rho = 0.1;
  Eigen::MatrixXd w;   // N_s x N_theta samples
  NormalSection Phi;   // N_s x 2 samples

  static TubeConfiguration round(const TorusGrid& grid, double rho) {
    return {rho, Eigen::MatrixXd::Zero(grid.n_s(), grid.n_theta()), NormalSection::zero(grid.n_s(), 2)};
  }
};

/// Jet of (w, Phi) at one grid point, in x0 (not s) derivatives.
enum JetIndex { kW, kWx, kWt, kWxx, kWxt, kWtt, kP1, kP2, kP1x, kP2x, kP1xx, kP2xx, kJetSize };

template <class S>
using Jet = std::array<S, kJetSize>;

template <class S>
struct PointGeometry {
  Eigen::Matrix<S, 3, 1> X, Xx, Xt;  // position and tangents (coordinate components)
  Eigen::Matrix<S, 3, 3> g;
  Eigen::Matrix<S, 2, 2> I, II;      // in (x0, theta) coordinates
  Eigen::Matrix<S, 3, 1> N;          // unit normal, contravariant components
  S residual;                        // n rho H - (n - 1)
};

/// Bilinear dot and cross products. Eigen's dot() and cross() conjugate for complex
/// scalars, which would break complex-step differentiation.
template <class A, class B>
auto bdot(const A& a, const B& b) {
  return (a.transpose() * b).value();
}

template <class S>
Eigen::Matrix<S, 3, 1> bcross(const Eigen::Matrix<S, 3, 1>& a, const Eigen::Matrix<S, 3, 1>& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0)};
}

/// Pointwise oracle. Scalar may be complex for complex-step derivatives.
template <class S>
PointGeometry<S> point_geometry(const CurvatureAt& cv, double rho, double theta, const Jet<S>& j) {
  using V3 = Eigen::Matrix<S, 3, 1>;
  const double ct = std::cos(theta), st = std::sin(theta);
  auto normal_vec = [](S a, S b) { return V3(S(0.0), a, b); };
  const S r = rho * (S(1.0) + j[kW]);
  PointGeometry<S> p;
  p.X = V3(S(0.0), r * ct + j[kP1], r * st + j[kP2]);
  // U_t = Y, Y_t = -U
  p.Xx = normal_vec(rho * j[kWx] * ct + j[kP1x], rho * j[kWx] * st + j[kP2x]);
  p.Xx(0) = S(1.0);
  p.Xt = normal_vec(rho * j[kWt] * ct - r * st, rho * j[kWt] * st + r * ct);
  const V3 Xxx = normal_vec(rho * j[kWxx] * ct + j[kP1xx], rho * j[kWxx] * st + j[kP2xx]);
  const V3 Xxt = normal_vec(rho * (j[kWxt] * ct - j[kWx] * st), rho * (j[kWxt] * st + j[kWx] * ct));
  const V3 Xtt = normal_vec(rho * j[kWtt] * ct - 2.0 * rho * j[kWt] * st - r * ct,
                            rho * j[kWtt] * st + 2.0 * rho * j[kWt] * ct - r * st);

  const S xp[2] = {p.X(1), p.X(2)};
  const MetricJet<S> mj = metric_jet<S>(cv, xp, true);
  p.g = mj.g;
  Eigen::Matrix<S, 3, 3> dg[3];
  for (int a = 0; a < 3; ++a) dg[a] = mj.dg[static_cast<size_t>(a)];

  // covector annihilating both tangents
  const V3 nu = bcross<S>(p.Xx, p.Xt);
  const Eigen::Matrix<S, 3, 3> ginv = p.g.inverse();
  const V3 u = ginv * nu;
  const S nu_norm = std::sqrt(bdot(nu, u));
  p.N = u / nu_norm;

  // lowered Christoffel symbols contracted with u: u^d Gamma_{d ab} X_a^a X_b^b
  auto christoffel_term = [&](const V3& A, const V3& Bv) {
    S acc(0.0);
    for (int d = 0; d < 3; ++d) {
      S t(0.0);
      for (int al = 0; al < 3; ++al) {
        t += A(al) * bdot(dg[al].row(d).transpose(), Bv);
        t += Bv(al) * bdot(dg[al].row(d).transpose(), A);
      }
      t -= bdot(A, dg[d] * Bv);
      acc += u(d) * 0.5 * t;
    }
    return acc;
  };
  const V3* T[2] = {&p.Xx, &p.Xt};
  const V3* H2[2][2] = {{&Xxx, &Xxt}, {&Xxt, &Xtt}};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      p.I(a, b) = bdot(*T[a], p.g * *T[b]);
      p.II(a, b) = (bdot(nu, *H2[a][b]) + christoffel_term(*T[a], *T[b])) / nu_norm;
    }
  const S det = p.I(0, 0) * p.I(1, 1) - p.I(0, 1) * p.I(1, 0);
  const S trace = (p.I(1, 1) * p.II(0, 0) - p.I(0, 1) * p.II(1, 0) - p.I(1, 0) * p.II(0, 1) +
                   p.I(0, 0) * p.II(1, 1)) / det;
  p.residual = rho * trace - 1.0;
  return p;
}

/// Frame data at a grid point. Z0, Zt are in (s, theta) coordinates (Z0 = rho d/dx0).
struct TubeFrame {
  Eigen::Vector3d Z0, Zt, N;
  double alpha = 0.0;  // <N, Y> in the Euclidean frame sense: N = -U + alpha Y + ...
};

/// Leading-order pieces of the residual n rho H - (n - 1) and its projections.
struct ResidualReport {
  Eigen::MatrixXd full;          // oracle residual
  Eigen::MatrixXd f_term;        // rho^2 ((2/3) <R(U,X0)U,X0> - (1/3) Ric(U,U))
  Eigen::MatrixXd linear_block;  // -(L w) - rho <Phi'' + R(Phi,X0)X0, U>
  Eigen::MatrixXd remainder;     // full - f_term - linear_block
  ModeSplit split;               // split of the full residual
  NormalSection Psi;             // linear-mode projection divided by rho
};

/// Per-point partial derivatives of the residual with respect to the jet components.
struct Linearization {
  std::array<Eigen::MatrixXd, kJetSize> partial;
};

class TubeGeometry {
 public:
  TubeGeometry(const ModelMetric& model, const TorusGrid& grid) : model_(&model), grid_(grid) {
    require(model.n() == 2, ErrorCode::ContractViolation, "tube geometry is implemented for n = 2");
    require(model.ell() == 1, ErrorCode::ContractViolation, "tube geometry needs a curve");
    require(std::abs(grid.period() - model.lambda()) <= 1e-12 * model.lambda(), ErrorCode::GridMismatch,
            "grid period differs from the model's Lambda");
    rows_.reserve(static_cast<size_t>(grid.n_s()));
    for (int a = 0; a < grid.n_s(); ++a) rows_.push_back(model.curvature_at(grid.x0(a)));
  }

  const ModelMetric& model() const { return *model_; }
  const TorusGrid& grid() const { return grid_; }
  const CurvatureAt& curvature_row(int a) const { return rows_[static_cast<size_t>(a)]; }

  /// All jets of (w, Phi) on the grid.
  struct JetField {
    std::array<Eigen::MatrixXd, kJetSize> c;
  };

  /// `validate` is off for variation directions, which need not satisfy 1 + w > 0.
  JetField jets(const TubeConfiguration& t, bool validate = true) const {
    if (validate) check(t);
    else grid_.check(t.w);
    JetField J;
    const Eigen::MatrixXcd wc = grid_.analyze(t.w);
    auto d = [&](int ds, int dt) { return grid_.synthesize(grid_.differentiate(wc, ds, dt)); };
    J.c[kW] = t.w;
    J.c[kWx] = d(1, 0);
    J.c[kWt] = d(0, 1);
    J.c[kWxx] = d(2, 0);
    J.c[kWxt] = d(1, 1);
    J.c[kWtt] = d(0, 2);
    const int nt = grid_.n_theta();
    const LineGrid& line = grid_.line();
    for (int i = 0; i < 2; ++i) {
      const Eigen::VectorXd ph = t.Phi.phi.col(i);
      J.c[kP1 + i] = ph.replicate(1, nt);
      J.c[kP1x + i] = line.derivative(ph, 1).replicate(1, nt);
      J.c[kP1xx + i] = line.derivative(ph, 2).replicate(1, nt);
    }
    return J;
  }

  template <class S>
  static Jet<S> jet_at(const JetField& J, int a, int b) {
    Jet<S> j;
    for (int c = 0; c < kJetSize; ++c) j[static_cast<size_t>(c)] = S(J.c[static_cast<size_t>(c)](a, b));
    return j;
  }

  FermiPoint embed(const TubeConfiguration& t, int a, int b) const {
    check(t);
    const double th = grid_.theta(b);
    const double r = t.rho * (1.0 + t.w(a, b));
    FermiPoint p{grid_.x0(a), Eigen::Vector2d(r * std::cos(th) + t.Phi.phi(a, 0), r * std::sin(th) + t.Phi.phi(a, 1))};
    require(p.r() < model_->r_max(), ErrorCode::OutOfChart,
            "surface point at r = " + std::to_string(p.r()) + " beyond r_max = " + std::to_string(model_->r_max()));
    return p;
  }

  PointGeometry<double> point(const TubeConfiguration& t, const JetField& J, int a, int b) const {
    embed(t, a, b);
    auto pg = point_geometry<double>(rows_[static_cast<size_t>(a)], t.rho, grid_.theta(b), jet_at<double>(J, a, b));
    const double det = pg.I.determinant();
    require(std::isfinite(det) && det > 1e-14 * pg.I.squaredNorm(), ErrorCode::Degenerate,
            "first fundamental form is singular");
    return pg;
  }

  /// First fundamental form in (s, theta) coordinates from the exact metric.
  Eigen::Matrix2d first_fundamental_form(const TubeConfiguration& t, int a, int b) const {
    const auto pg = point(t, jets(t), a, b);
    Eigen::Matrix2d I = pg.I;
    I(0, 0) *= t.rho * t.rho;
    I(0, 1) *= t.rho;
    I(1, 0) *= t.rho;
    return I;
  }

  /// Leading terms of the first fundamental form in (s, theta):
  /// rho^2 [1, 0; 0, 1 + 2w + (rho^2/3) <R(U,Y)U,Y> + (2 rho/3) <R(U,Y)Phi,Y>].
  Eigen::Matrix2d first_fundamental_form_expansion(const TubeConfiguration& t, int a, int b) const {
    check(t);
    const CurvatureAt& cv = rows_[static_cast<size_t>(a)];
    const double th = grid_.theta(b);
    const Eigen::Vector2d U(std::cos(th), std::sin(th)), Y(-std::sin(th), std::cos(th));
    const Eigen::Vector2d Phi = t.Phi.phi.row(a).transpose();
    const double rho = t.rho;
    Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    I(1, 1) += 2.0 * t.w(a, b) + rho * rho / 3.0 * curv4(cv, U, Y, U, Y) + 2.0 * rho / 3.0 * curv4(cv, U, Y, Phi, Y);
    return rho * rho * I;
  }

  /// Oracle unit normal and frame. alpha is the Y component of N relative to the frame.
  TubeFrame unit_normal(const TubeConfiguration& t, int a, int b) const {
    const auto pg = point(t, jets(t), a, b);
    TubeFrame f;
    f.Z0 = t.rho * pg.Xx;
    f.Zt = pg.Xt;
    f.N = pg.N;
    const double th = grid_.theta(b);
    f.alpha = -std::sin(th) * pg.N(1) + std::cos(th) * pg.N(2);
    return f;
  }

  /// alpha from the leading-order system alpha <Y,Y> = d_theta w + (rho/3) <R(Phi,U)U,Y>.
  double alpha_expansion(const TubeConfiguration& t, int a, int b) const {
    check(t);
    const CurvatureAt& cv = rows_[static_cast<size_t>(a)];
    const double th = grid_.theta(b);
    const Eigen::Vector2d U(std::cos(th), std::sin(th)), Y(-std::sin(th), std::cos(th));
    const Eigen::Vector2d Phi = t.Phi.phi.row(a).transpose();
    const Eigen::MatrixXd wt = grid_.derivative(t.w, 0, 1);
    return wt(a, b) + t.rho / 3.0 * curv4(cv, Phi, U, U, Y);
  }

  /// Oracle residual n rho H - (n - 1) on the grid.
  Eigen::MatrixXd residual(const TubeConfiguration& t) const {
    const JetField J = jets(t);
    Eigen::MatrixXd F(grid_.n_s(), grid_.n_theta());
    for (int a = 0; a < grid_.n_s(); ++a)
      for (int b = 0; b < grid_.n_theta(); ++b) F(a, b) = point(t, J, a, b).residual;
    return F;
  }

  /// Oracle mean curvature H = (1/n) tr(I^{-1} II).
  Eigen::MatrixXd mean_curvature_oracle(const TubeConfiguration& t) const {
    return (residual(t).array() + 1.0) / (2.0 * t.rho);
  }

  Eigen::MatrixXd f_term(double rho) const {
    Eigen::MatrixXd f(grid_.n_s(), grid_.n_theta());
    for (int a = 0; a < grid_.n_s(); ++a)
      for (int b = 0; b < grid_.n_theta(); ++b) {
        const double th = grid_.theta(b);
        const Eigen::Vector2d U(std::cos(th), std::sin(th));
        f(a, b) = rho * rho * (2.0 / 3.0 * r0u0u(rows_[static_cast<size_t>(a)], U) - ricci_normal(*model_, grid_.x0(a), U) / 3.0);
      }
    return f;
  }

  /// L w = rho^2 w_x0x0 + w_thth + (n - 1) w.
  Eigen::MatrixXd apply_L(double rho, const Eigen::MatrixXd& w) const {
    return rho * rho * grid_.derivative(w, 2, 0) + grid_.derivative(w, 0, 2) + w;
  }

  /// Geodesic Jacobi operator Phi'' + R(Phi, X0) X0 = Phi'' - B Phi.
  NormalSection apply_jacobi(const NormalSection& Phi) const {
    const LineGrid& line = grid_.line();
    NormalSection out = NormalSection::zero(grid_.n_s(), 2);
    for (int i = 0; i < 2; ++i) out.phi.col(i) = line.derivative(Phi.phi.col(i), 2);
    for (int a = 0; a < grid_.n_s(); ++a)
      out.phi.row(a) -= (rows_[static_cast<size_t>(a)].B * Phi.phi.row(a).transpose()).transpose();
    return out;
  }

  Eigen::MatrixXd linear_block(const TubeConfiguration& t) const {
    return -apply_L(t.rho, t.w) - t.rho * section_to_linear_mode(grid_, apply_jacobi(t.Phi));
  }

  ResidualReport mean_curvature_residual(const TubeConfiguration& t) const {
    ResidualReport r;
    r.full = residual(t);
    r.f_term = model_->flat() ? Eigen::MatrixXd::Zero(grid_.n_s(), grid_.n_theta()) : f_term(t.rho);
    r.linear_block = linear_block(t);
    r.remainder = r.full - r.f_term - r.linear_block;
    r.split = decompose(grid_, r.full);
    r.Psi = r.split.w_hat;
    r.Psi.phi /= t.rho;
    return r;
  }

  /// Complex-step partials of the residual with respect to each jet component.
  Linearization linearize(const TubeConfiguration& t) const {
    const JetField J = jets(t);
    Linearization L;
    for (auto& m : L.partial) m.resize(grid_.n_s(), grid_.n_theta());
    constexpr double h = 1e-30;
    for (int a = 0; a < grid_.n_s(); ++a)
      for (int b = 0; b < grid_.n_theta(); ++b) {
        embed(t, a, b);
        const Jet<cplx> base = jet_at<cplx>(J, a, b);
        for (int c = 0; c < kJetSize; ++c) {
          Jet<cplx> j = base;
          j[static_cast<size_t>(c)] += cplx(0.0, h);
          const auto pg = point_geometry<cplx>(rows_[static_cast<size_t>(a)], t.rho, grid_.theta(b), j);
          L.partial[static_cast<size_t>(c)](a, b) = pg.residual.imag() / h;
        }
      }
    return L;
  }

  /// Directional derivative of the residual along (dw, dPhi), from the partials.
  Eigen::MatrixXd apply_linearization(const Linearization& L, const TubeConfiguration& dir) const {
    const JetField J = jets(dir, false);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grid_.n_s(), grid_.n_theta());
    for (int c = 0; c < kJetSize; ++c)
      out.array() += L.partial[static_cast<size_t>(c)].array() * J.c[static_cast<size_t>(c)].array();
    return out;
  }

 private:
  void check(const TubeConfiguration& t) const {
    grid_.check(t.w);
    require(t.Phi.phi.rows() == grid_.n_s() && t.Phi.phi.cols() == 2, ErrorCode::GridMismatch,
            "normal section sampled on wrong grid");
    require(t.rho > 0.0, ErrorCode::ContractViolation, "rho must be positive");
    require((1.0 + t.w.array()).minCoeff() > 0.0, ErrorCode::ContractViolation, "1 + w must stay positive");
  }

  /// <R(A,B)C,D> for normal vectors.
  static double curv4(const CurvatureAt& cv, const Eigen::Vector2d& A, const Eigen::Vector2d& Bv,
                      const Eigen::Vector2d& C, const Eigen::Vector2d& D) {
    double v = 0.0;
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int l = 0; l < 2; ++l)
          for (int j = 0; j < 2; ++j) v += cv.t(k, i, l, j) * A[k] * Bv[i] * C[l] * D[j];
    return v;
  }

  const ModelMetric* model_;
  TorusGrid grid_;
  std::vector<CurvatureAt> rows_;
};

}  // namespace cmc
