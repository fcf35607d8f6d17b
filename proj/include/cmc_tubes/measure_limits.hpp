#pragma once

// Scaled area, volume and mu = A - nH V measures of shrinking tubes, the first variation
// of mu, the weak limits as rho -> 0, and a detector for the mean curvature of the core.
// Flat tubes around a flat ell-torus work for any (n, ell); curved leaves need ell = 1, n = 2.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cmc_tubes/error.hpp"
#include "cmc_tubes/fourier.hpp"
#include "cmc_tubes/model_metric.hpp"
#include "cmc_tubes/tube_geometry.hpp"

namespace cmc {

// ---------------------------------------------------------------- quadrature

struct Quadrature1d {
  Eigen::VectorXd nodes, weights;
};

/// Gauss rule for the weight (1 - u^2)^a on [-1, 1] (Golub-Welsch).
inline Quadrature1d gauss_gegenbauer(int npts, double a) {
  require(npts >= 1 && a > -1.0, ErrorCode::ContractViolation, "bad Gauss rule request");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(npts, npts);
  for (int k = 1; k < npts; ++k) {
    const double b = std::sqrt(k * (k + 2.0 * a) / ((2.0 * k + 2.0 * a - 1.0) * (2.0 * k + 2.0 * a + 1.0)));
    J(k, k - 1) = J(k - 1, k) = b;
  }
  // a = 0 with k = 1 gives 1 / (1 * 3); the formula above has a removable 0/0 only for a = -1/2
  if (npts > 1 && std::abs(a + 0.5) < 1e-14) J(1, 0) = J(0, 1) = std::sqrt(0.5);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::sqrt(std::numbers::pi) * std::exp(std::lgamma(a + 1.0) - std::lgamma(a + 1.5));
  Quadrature1d q;
  q.nodes = es.eigenvalues();
  q.weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
  return q;
}

/// Gauss-Legendre on [0, 1].
inline Quadrature1d gauss_unit_interval(int npts) {
  Quadrature1d q = gauss_gegenbauer(npts, 0.0);
  q.nodes = 0.5 * (q.nodes.array() + 1.0);
  q.weights *= 0.5;
  return q;
}

/// Volume of the unit sphere S^d, from the recursion omega_d = 2 pi omega_{d-2} / (d - 1).
inline double sphere_volume(int d) {
  require(d >= 0, ErrorCode::ContractViolation, "sphere dimension must be >= 0");
  if (d == 0) return 2.0;
  if (d == 1) return 2.0 * std::numbers::pi;
  return 2.0 * std::numbers::pi * sphere_volume(d - 2) / (d - 1);
}

/// Points on S^d in R^{d+1} with weights. Columns of `points` are unit vectors.
struct SphereQuadrature {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;
};

/// Product rule: uniform in the last angle, Gauss-Gegenbauer in each polar height.
/// Exact for polynomials of degree < npts.
inline SphereQuadrature sphere_quadrature(int d, int npts) {
  require(d >= 0 && npts >= 2, ErrorCode::ContractViolation, "bad sphere quadrature request");
  SphereQuadrature q;
  if (d == 0) {
    q.points = Eigen::MatrixXd(1, 2);
    q.points << 1.0, -1.0;
    q.weights = Eigen::VectorXd::Ones(2);
    return q;
  }
  if (d == 1) {
    q.points.resize(2, npts);
    q.weights = Eigen::VectorXd::Constant(npts, 2.0 * std::numbers::pi / npts);
    for (int b = 0; b < npts; ++b) {
      const double t = 2.0 * std::numbers::pi * b / npts;
      q.points.col(b) << std::cos(t), std::sin(t);
    }
    return q;
  }
  const SphereQuadrature lower = sphere_quadrature(d - 1, npts);
  const Quadrature1d h = gauss_gegenbauer(npts, 0.5 * (d - 2));
  const int nl = static_cast<int>(lower.weights.size());
  q.points.resize(d + 1, npts * nl);
  q.weights.resize(npts * nl);
  for (int i = 0; i < npts; ++i) {
    const double u = h.nodes[i], s = std::sqrt(std::max(0.0, 1.0 - u * u));
    for (int k = 0; k < nl; ++k) {
      q.points.col(i * nl + k) << s * lower.points.col(k), u;
      q.weights[i * nl + k] = h.weights[i] * lower.weights[k];
    }
  }
  return q;
}

// ---------------------------------------------------------------- test fields

/// Scalar test function of a chart point p = (tangential coords, normal coords).
using TestFunction = std::function<double(const Eigen::VectorXd&)>;

/// Vector field on the chart with its coordinate Jacobian, J(a, b) = d X^a / d p^b.
struct TestVectorField {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> value;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;

  static TestVectorField constant(const Eigen::VectorXd& v) {
    const long dim = v.size();
    return {[v](const Eigen::VectorXd&) { return v; },
            [dim](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(dim, dim).eval(); }};
  }

  /// Normal components A y, where y are the last rows(A) coordinates; tangential part zero.
  static TestVectorField linear_normal(int dim, const Eigen::MatrixXd& A) {
    const int m = static_cast<int>(A.rows()), off = dim - m;
    require(A.cols() == m && off >= 0, ErrorCode::ContractViolation, "normal block has wrong shape");
    return {[=](const Eigen::VectorXd& p) {
              Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
              x.tail(m) = A * p.tail(m);
              return x;
            },
            [=](const Eigen::VectorXd&) {
              Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
              J.bottomRightCorner(m, m) = A;
              return J;
            }};
  }

  /// Random field, each component a trig polynomial in every tangential coordinate
  /// (period lambda, modes <= max_mode) times a quadratic in the normal coordinates.
  static TestVectorField band_limited(int dim, int ell, double lambda, int max_mode, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int m = dim - ell;
    struct Comp {
      std::vector<Eigen::VectorXd> cs, sn;  // per tangential coordinate, modes 0..max_mode
      double c0;
      Eigen::VectorXd lin;
      Eigen::MatrixXd quad;
    };
    std::vector<Comp> comps(static_cast<size_t>(dim));
    for (auto& c : comps) {
      for (int t = 0; t < ell; ++t) {
        Eigen::VectorXd a(max_mode + 1), b(max_mode + 1);
        for (int k = 0; k <= max_mode; ++k) a[k] = U(rng), b[k] = k ? U(rng) : 0.0;
        c.cs.push_back(a);
        c.sn.push_back(b);
      }
      c.c0 = U(rng);
      c.lin = Eigen::VectorXd::NullaryExpr(m, [&] { return U(rng); });
      Eigen::MatrixXd q = Eigen::MatrixXd::NullaryExpr(m, m, [&] { return U(rng); });
      c.quad = 0.5 * (q + q.transpose());
    }
    const double kw = 2.0 * std::numbers::pi / lambda;
    // value and gradient of one component
    auto eval = [=](const Comp& c, const Eigen::VectorXd& p, Eigen::VectorXd* grad) {
      std::vector<double> tv(static_cast<size_t>(ell)), td(static_cast<size_t>(ell));
      for (int t = 0; t < ell; ++t) {
        double v = 0.0, dv = 0.0;
        for (int k = 0; k <= max_mode; ++k) {
          const double ph = kw * k * p[t];
          v += c.cs[t][k] * std::cos(ph) + c.sn[t][k] * std::sin(ph);
          dv += kw * k * (-c.cs[t][k] * std::sin(ph) + c.sn[t][k] * std::cos(ph));
        }
        tv[t] = v, td[t] = dv;
      }
      double tang = 1.0;
      for (int t = 0; t < ell; ++t) tang *= tv[t];
      const Eigen::VectorXd y = p.tail(m);
      const double poly = c.c0 + c.lin.dot(y) + y.dot(c.quad * y);
      if (grad) {
        grad->resize(dim);
        for (int t = 0; t < ell; ++t) {
          double o = td[t];
          for (int s = 0; s < ell; ++s)
            if (s != t) o *= tv[s];
          (*grad)[t] = o * poly;
        }
        grad->tail(m) = tang * (c.lin + 2.0 * c.quad * y);
      }
      return tang * poly;
    };
    return {[=](const Eigen::VectorXd& p) {
              Eigen::VectorXd x(dim);
              for (int a = 0; a < dim; ++a) x[a] = eval(comps[a], p, nullptr);
              return x;
            },
            [=](const Eigen::VectorXd& p) {
              Eigen::MatrixXd J(dim, dim);
              Eigen::VectorXd g;
              for (int a = 0; a < dim; ++a) {
                eval(comps[a], p, &g);
                J.row(a) = g.transpose();
              }
              return J;
            }};
  }
};

// ---------------------------------------------------------------- local metric

/// Metric, inverse, Christoffel symbols (gamma[a](b, c) = Gamma^a_{bc}) and volume density.
struct LocalMetric {
  Eigen::MatrixXd g, ginv;
  std::vector<Eigen::MatrixXd> gamma;
  double sqrt_det = 1.0;

  static LocalMetric euclidean(int dim) {
    return {Eigen::MatrixXd::Identity(dim, dim), Eigen::MatrixXd::Identity(dim, dim),
            std::vector<Eigen::MatrixXd>(static_cast<size_t>(dim), Eigen::MatrixXd::Zero(dim, dim)), 1.0};
  }

  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const { return a.dot(g * b); }

  Eigen::VectorXd covariant(const TestVectorField& X, const Eigen::VectorXd& p, const Eigen::VectorXd& V) const {
    const Eigen::VectorXd x = X.value(p);
    Eigen::VectorXd out = X.jacobian(p) * V;
    for (size_t a = 0; a < gamma.size(); ++a) out[static_cast<long>(a)] += V.dot(gamma[a] * x);
    return out;
  }

  double divergence(const TestVectorField& X, const Eigen::VectorXd& p) const {
    const Eigen::VectorXd x = X.value(p);
    double d = X.jacobian(p).trace();
    for (size_t a = 0; a < gamma.size(); ++a) d += gamma[a].row(static_cast<long>(a)).dot(x);
    return d;
  }
};

/// Model metric at chart point p = (x0, x').
inline LocalMetric local_metric(const ModelMetric& model, const Eigen::VectorXd& p) {
  const int n = model.n();
  require(p.size() == n + 1, ErrorCode::ContractViolation, "chart point has wrong dimension");
  require(p.tail(n).norm() < model.r_max(), ErrorCode::OutOfChart, "point beyond r_max");
  const CurvatureAt cv = model.curvature_at(p[0]);
  const MetricJet<double> mj = metric_jet<double>(cv, p.data() + 1, true);
  LocalMetric lm;
  lm.g = mj.g;
  Eigen::LLT<Eigen::MatrixXd> llt(lm.g);
  require(llt.info() == Eigen::Success, ErrorCode::NonPositiveDefinite, "metric not positive definite");
  lm.ginv = llt.solve(Eigen::MatrixXd::Identity(n + 1, n + 1));
  lm.sqrt_det = std::sqrt(lm.g.determinant());
  // lowered symbols Gamma_{d bc} = (d_b g_dc + d_c g_db - d_d g_bc) / 2
  std::vector<Eigen::MatrixXd> low(static_cast<size_t>(n + 1), Eigen::MatrixXd::Zero(n + 1, n + 1));
  for (int d = 0; d <= n; ++d)
    for (int b = 0; b <= n; ++b)
      for (int c = 0; c <= n; ++c)
        low[d](b, c) = 0.5 * (mj.dg[b](d, c) + mj.dg[c](d, b) - mj.dg[d](b, c));
  lm.gamma.assign(static_cast<size_t>(n + 1), Eigen::MatrixXd::Zero(n + 1, n + 1));
  for (int a = 0; a <= n; ++a)
    for (int d = 0; d <= n; ++d) lm.gamma[a] += lm.ginv(a, d) * low[d];
  return lm;
}

// ---------------------------------------------------------------- measures

struct MeasureTriple {
  double area_scaled = 0.0;  // rho^{ell-n} int f dA
  double vol_scaled = 0.0;   // rho^{ell-n-1} int f dV
  double mu_scaled = 0.0;    // rho^{ell-n} int f (dA - nH dV)
  double nH = 0.0;           // n times the mean curvature used in mu
};

/// Round tube of radius rho around the flat torus T^ell (period lambda in each direction)
/// inside flat R^ell x R^{n+1-ell}. ell = 0 is a round sphere.
struct FlatTube {
  int n = 2;
  int ell = 1;
  double lambda = 2.0 * std::numbers::pi;

  int dim() const { return n + 1; }
  int fiber_dim() const { return n - ell; }  // the cross-section is S^{n-ell}

  void check() const {
    require(n >= 1 && ell >= 0 && ell < n, ErrorCode::ContractViolation, "flat tube needs 0 <= ell < n");
    require(lambda > 0.0, ErrorCode::ContractViolation, "period must be positive");
  }
};

struct QuadratureConfig {
  int n_tangent = 16;  // trapezoid points per tangential direction
  int n_sphere = 16;   // points per angular direction on the cross-section
  int n_radial = 10;   // Gauss points in the radial direction
};

namespace detail {

/// Trapezoid nodes on T^ell. Calls fn(x, weight) for every node.
inline void for_each_torus_node(int ell, double lambda, int npts, const std::function<void(const Eigen::VectorXd&, double)>& fn) {
  long total = 1;
  for (int t = 0; t < ell; ++t) total *= npts;
  const double w = std::pow(lambda / npts, ell);
  Eigen::VectorXd x(ell);
  for (long idx = 0; idx < total; ++idx) {
    long r = idx;
    for (int t = 0; t < ell; ++t) x[t] = lambda * static_cast<double>(r % npts) / npts, r /= npts;
    fn(x, w);
  }
}

inline double checked(double v, const char* what) {
  require(std::isfinite(v), ErrorCode::QuadratureFailure, std::string("non-finite value in ") + what);
  return v;
}

inline SphereQuadrature checked_sphere(int d, int npts) {
  SphereQuadrature sq = sphere_quadrature(d, npts);
  const double om = sphere_volume(d);
  require(std::abs(sq.weights.sum() - om) <= 1e-12 * om, ErrorCode::QuadratureFailure,
          "sphere quadrature weights do not sum to the sphere volume");
  return sq;
}

}  // namespace detail

/// Sum over the flat tube of radius rho: fn(p, N, w_area) on the surface and, if vol_fn is
/// given, vol_fn(p, w_vol) inside, with the rho powers of the scaled measures already removed.
inline void flat_tube_quadrature(const FlatTube& tube, double rho, const QuadratureConfig& q,
                                 const std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, double)>& surf_fn,
                                 const std::function<void(const Eigen::VectorXd&, double)>& vol_fn) {
  tube.check();
  require(rho > 0.0, ErrorCode::ContractViolation, "rho must be positive");
  const int m = tube.fiber_dim();
  const SphereQuadrature sq = detail::checked_sphere(m, q.n_sphere);
  const Quadrature1d rad = gauss_unit_interval(q.n_radial);
  Eigen::VectorXd p(tube.dim());
  detail::for_each_torus_node(tube.ell, tube.lambda, q.n_tangent, [&](const Eigen::VectorXd& x, double wx) {
    p.head(tube.ell) = x;
    for (long k = 0; k < sq.weights.size(); ++k) {
      const Eigen::VectorXd N = [&] {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(tube.dim());
        v.tail(m + 1) = sq.points.col(k);
        return v;
      }();
      p.tail(m + 1) = rho * sq.points.col(k);
      if (surf_fn) surf_fn(p, N, wx * sq.weights[k]);
      if (vol_fn)
        for (int i = 0; i < rad.nodes.size(); ++i) {
          const double tau = rad.nodes[i];
          p.tail(m + 1) = rho * tau * sq.points.col(k);
          vol_fn(p, wx * sq.weights[k] * rad.weights[i] * std::pow(tau, m));
        }
    }
  });
}

inline MeasureTriple scaled_measures(const FlatTube& tube, double rho, const TestFunction& f,
                                     const QuadratureConfig& q = {}) {
  MeasureTriple out;
  flat_tube_quadrature(
      tube, rho, q, [&](const Eigen::VectorXd& p, const Eigen::VectorXd&, double w) { out.area_scaled += w * f(p); },
      [&](const Eigen::VectorXd& p, double w) { out.vol_scaled += w * f(p); });
  out.nH = tube.fiber_dim() / rho;
  out.mu_scaled = out.area_scaled - out.nH * rho * out.vol_scaled;
  detail::checked(out.mu_scaled, "scaled_measures");
  return out;
}

/// int div X d mu - int <nabla_N X, N> dA for the flat tube (unscaled).
inline double first_variation(const FlatTube& tube, double rho, const TestVectorField& X,
                              const QuadratureConfig& q = {}) {
  const double sa = std::pow(rho, tube.fiber_dim()), sv = sa * rho;
  const double nH = tube.fiber_dim() / rho;
  double area = 0.0, vol = 0.0, normal = 0.0;
  flat_tube_quadrature(
      tube, rho, q,
      [&](const Eigen::VectorXd& p, const Eigen::VectorXd& N, double w) {
        area += w * X.jacobian(p).trace();
        normal += w * N.dot(X.jacobian(p) * N);
      },
      [&](const Eigen::VectorXd& p, double w) { vol += w * X.jacobian(p).trace(); });
  return detail::checked(sa * area - nH * sv * vol - sa * normal, "first_variation");
}

struct NormalGradientLimit {
  double scaled = 0.0;  // rho^{ell-n} int <nabla_N X, N> dA
  double limit = 0.0;   // omega/(n+1-ell) int sum_i <nabla_{E_i} X, E_i> dL
};

inline NormalGradientLimit normal_gradient_limit(const FlatTube& tube, double rho, const TestVectorField& X,
                                                 const QuadratureConfig& q = {}) {
  NormalGradientLimit out;
  flat_tube_quadrature(
      tube, rho, q,
      [&](const Eigen::VectorXd& p, const Eigen::VectorXd& N, double w) { out.scaled += w * N.dot(X.jacobian(p) * N); },
      nullptr);
  const int m = tube.fiber_dim();
  const double c = sphere_volume(m) / (m + 1);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(tube.dim());
  detail::for_each_torus_node(tube.ell, tube.lambda, q.n_tangent, [&](const Eigen::VectorXd& x, double wx) {
    p.head(tube.ell) = x;
    out.limit += wx * c * X.jacobian(p).bottomRightCorner(m + 1, m + 1).trace();
  });
  detail::checked(out.scaled, "normal_gradient_limit");
  return out;
}


// ---------------------------------------------------------------- curved leaves (ell = 1)

struct LeafOptions {
  double c_hyp = 50.0;         // size bound: graded ||w|| + ||Phi|| <= c_hyp rho^2
  double residual_tol = 1e-6;  // the leaf must be CMC to this tolerance
  int n_radial = 10;
};

/// Rejects leaves outside the regime where the limit theorem applies.
inline void enforce_leaf_hypotheses(const TubeGeometry& geo, const TubeConfiguration& t, const LeafOptions& opt) {
  const TorusGrid& grid = geo.grid();
  double norm = graded_norm(grid, t.w, 1.0);
  for (int j = 0; j < t.Phi.n(); ++j) norm += graded_norm(grid.line(), Eigen::VectorXd(t.Phi.phi.col(j)), 1.0);
  require(norm <= opt.c_hyp * t.rho * t.rho, ErrorCode::HypothesisViolation,
          "leaf perturbation " + std::to_string(norm) + " exceeds c rho^2 = " + std::to_string(opt.c_hyp * t.rho * t.rho));
  const double res = geo.residual(t).cwiseAbs().maxCoeff();
  require(res <= opt.residual_tol, ErrorCode::HypothesisViolation,
          "leaf is not CMC: residual " + std::to_string(res));
}

/// Sum over a leaf: surf_fn(p, N, dA weight) at grid points and vol_fn(p, dV weight) on
/// radial segments x' = Phi + tau rho (1 + w) U, tau in [0, 1]. Weights are unscaled.
inline void leaf_quadrature(const TubeGeometry& geo, const TubeConfiguration& t, int n_radial,
                            const std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, double)>& surf_fn,
                            const std::function<void(const Eigen::VectorXd&, double)>& vol_fn) {
  const TorusGrid& grid = geo.grid();
  const ModelMetric& model = geo.model();
  const auto J = geo.jets(t);
  const Quadrature1d rad = gauss_unit_interval(n_radial);
  const double cell = grid.line().weight() * 2.0 * std::numbers::pi / grid.n_theta();
  Eigen::VectorXd p(3);
  for (int a = 0; a < grid.n_s(); ++a)
    for (int b = 0; b < grid.n_theta(); ++b) {
      const auto pg = geo.point(t, J, a, b);
      p << grid.x0(a), pg.X(1), pg.X(2);
      if (surf_fn) surf_fn(p, pg.N, cell * std::sqrt(pg.I.determinant()));
      if (!vol_fn) continue;
      const double th = grid.theta(b), R = t.rho * (1.0 + t.w(a, b));
      const Eigen::Vector2d U(std::cos(th), std::sin(th)), Phi = t.Phi.phi.row(a).transpose();
      for (int i = 0; i < rad.nodes.size(); ++i) {
        const double tau = rad.nodes[i];
        p.tail(2) = Phi + tau * R * U;
        const double dens = local_metric(model, p).sqrt_det;
        vol_fn(p, detail::checked(cell * rad.weights[i] * dens * tau * R * R, "leaf volume"));
      }
    }
}

inline MeasureTriple scaled_measures(const TubeGeometry& geo, const TubeConfiguration& t, const TestFunction& f,
                                     const LeafOptions& opt = {}) {
  enforce_leaf_hypotheses(geo, t, opt);
  MeasureTriple out;
  leaf_quadrature(
      geo, t, opt.n_radial, [&](const Eigen::VectorXd& p, const Eigen::VectorXd&, double w) { out.area_scaled += w * f(p); },
      [&](const Eigen::VectorXd& p, double w) { out.vol_scaled += w * f(p); });
  const double rho = t.rho;
  out.area_scaled /= rho;
  out.vol_scaled /= rho * rho;
  out.nH = 1.0 / rho;  // the solver prescribes n rho H = n - 1 with n = 2
  out.mu_scaled = out.area_scaled - out.nH * rho * out.vol_scaled;
  detail::checked(out.mu_scaled, "scaled_measures");
  return out;
}

inline double first_variation(const TubeGeometry& geo, const TubeConfiguration& t, const TestVectorField& X,
                              const LeafOptions& opt = {}) {
  enforce_leaf_hypotheses(geo, t, opt);
  const ModelMetric& model = geo.model();
  const double nH = 1.0 / t.rho;
  double area = 0.0, vol = 0.0, normal = 0.0;
  leaf_quadrature(
      geo, t, opt.n_radial,
      [&](const Eigen::VectorXd& p, const Eigen::VectorXd& N, double w) {
        const LocalMetric lm = local_metric(model, p);
        area += w * lm.divergence(X, p);
        normal += w * lm.inner(lm.covariant(X, p, N), N);
      },
      [&](const Eigen::VectorXd& p, double w) { vol += w * local_metric(model, p).divergence(X, p); });
  return detail::checked(area - nH * vol - normal, "first_variation");
}

inline NormalGradientLimit normal_gradient_limit(const TubeGeometry& geo, const TubeConfiguration& t,
                                                 const TestVectorField& X, const LeafOptions& opt = {}) {
  enforce_leaf_hypotheses(geo, t, opt);
  const ModelMetric& model = geo.model();
  NormalGradientLimit out;
  leaf_quadrature(
      geo, t, opt.n_radial,
      [&](const Eigen::VectorXd& p, const Eigen::VectorXd& N, double w) {
        const LocalMetric lm = local_metric(model, p);
        out.scaled += w * lm.inner(lm.covariant(X, p, N), N);
      },
      nullptr);
  out.scaled /= t.rho;
  // on Gamma the metric is the identity, so the coordinate fields X_1, X_2 are orthonormal
  const LineGrid line = geo.grid().line();
  const double c = sphere_volume(1) / 2.0;
  for (int a = 0; a < line.size(); ++a) {
    const Eigen::Vector3d p(line.x0(a), 0.0, 0.0);
    const LocalMetric lm = local_metric(model, p);
    for (int i = 1; i <= 2; ++i) {
      const Eigen::VectorXd E = Eigen::Vector3d::Unit(i);
      out.limit += line.weight() * c * lm.inner(lm.covariant(X, p, E), E);
    }
  }
  return out;
}

// ---------------------------------------------------------------- closed curves in the chart

/// Closed curve c(t) = q(t) + drift t, t in [0, period), with q periodic and sampled on a
/// uniform grid. drift = (Lambda / period) e_0 for curves winding once around x0.
struct ClosedCurve {
  double period = 2.0 * std::numbers::pi;
  Eigen::MatrixXd q;  // samples x (n + 1)
  Eigen::VectorXd drift;

  int size() const { return static_cast<int>(q.rows()); }
  int dim() const { return static_cast<int>(q.cols()); }
  LineGrid grid() const { return LineGrid(period, size()); }
  double t(int i) const { return period * i / size(); }

  Eigen::VectorXd position(int i) const { return q.row(i).transpose() + drift * t(i); }

  Eigen::MatrixXd velocity() const {
    const LineGrid g = grid();
    Eigen::MatrixXd v(size(), dim());
    for (int a = 0; a < dim(); ++a) v.col(a) = g.derivative(Eigen::VectorXd(q.col(a)), 1);
    return v.rowwise() + drift.transpose();
  }

  /// Graph x' = gamma(x0) over the Fermi axis; gamma is samples x n.
  static ClosedCurve normal_graph(const ModelMetric& model, const Eigen::MatrixXd& gamma) {
    require(gamma.cols() == model.n(), ErrorCode::ContractViolation, "graph needs n normal components");
    ClosedCurve c;
    c.period = model.lambda();
    c.q = Eigen::MatrixXd::Zero(gamma.rows(), model.n() + 1);
    c.q.rightCols(model.n()) = gamma;
    c.drift = Eigen::VectorXd::Unit(model.n() + 1, 0);
    return c;
  }

  static ClosedCurve fermi_axis(const ModelMetric& model, int samples) {
    return normal_graph(model, Eigen::MatrixXd::Zero(samples, model.n()));
  }

  /// Circle of the given radius in the normal plane spanned by X_i, X_j at height x0,
  /// centred at `center` (normal coordinates).
  static ClosedCurve normal_circle(const ModelMetric& model, double x0, const Eigen::VectorXd& center, double radius,
                                   int i, int j, int samples) {
    const int n = model.n();
    require(center.size() == n && i != j && i >= 1 && j >= 1 && i <= n && j <= n, ErrorCode::ContractViolation,
            "bad normal circle");
    ClosedCurve c;
    c.q.resize(samples, n + 1);
    c.drift = Eigen::VectorXd::Zero(n + 1);
    for (int s = 0; s < samples; ++s) {
      const double th = c.t(s);
      Eigen::VectorXd p(n + 1);
      p << x0, center;
      p[i] += radius * std::cos(th);  // i, j are 1-based normal indices, p[0] is x0
      p[j] += radius * std::sin(th);
      c.q.row(s) = p.transpose();
    }
    return c;
  }
};

/// Orthonormal frame at p with first vector along V (Gram-Schmidt in the metric).
inline Eigen::MatrixXd adapted_frame(const LocalMetric& lm, const Eigen::VectorXd& V) {
  const long dim = V.size();
  Eigen::MatrixXd F(dim, dim);
  F.col(0) = V / std::sqrt(lm.inner(V, V));
  int filled = 1;
  for (long k = 0; k < dim && filled < dim; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(dim, k);
    for (int c = 0; c < filled; ++c) e -= lm.inner(e, F.col(c)) * F.col(c);
    const double nn = std::sqrt(std::max(0.0, lm.inner(e, e)));
    if (nn > 1e-8) F.col(filled++) = e / nn;
  }
  require(filled == dim, ErrorCode::Degenerate, "could not complete the frame");
  return F;
}

struct DivergenceSplit {
  double divergence = 0.0;
  double tangential = 0.0;  // <nabla_T X, T>
  double normal = 0.0;      // sum over the normal frame
};

/// Splits div X at sample i of the curve along the adapted frame.
inline DivergenceSplit divergence_split(const ModelMetric& model, const ClosedCurve& curve, int i,
                                        const TestVectorField& X) {
  const Eigen::VectorXd p = curve.position(i);
  const LocalMetric lm = local_metric(model, p);
  const Eigen::MatrixXd F = adapted_frame(lm, curve.velocity().row(i).transpose());
  DivergenceSplit out;
  out.divergence = lm.divergence(X, p);
  for (long c = 0; c < F.cols(); ++c) {
    const double v = lm.inner(lm.covariant(X, p, F.col(c)), F.col(c));
    (c == 0 ? out.tangential : out.normal) += v;
  }
  return out;
}

struct MinimalityReport {
  Eigen::MatrixXd curvature;  // mean curvature vector of the curve, samples x (n + 1)
  double sup_norm = 0.0;      // max metric norm of the curvature vector
  bool minimal = false;
};

/// Recovers the mean curvature vector kappa of a closed curve from the limiting identity
/// int <nabla_T X, T> ds = -int <X, kappa> ds, tested against X = phi_k(t) X_a for the
/// real trig basis phi_k (Galerkin, Nyquist mode dropped).
inline MinimalityReport minimality_detector(const ModelMetric& model, const ClosedCurve& curve, double tol = 1e-6) {
  const int N = curve.size(), dim = curve.dim();
  require(N >= 8 && N % 2 == 0, ErrorCode::ContractViolation, "curve needs an even number >= 8 of samples");
  const int M = N / 2 - 1, K = 2 * M + 1;
  const double dt = curve.period / N, kw = 2.0 * std::numbers::pi / curve.period;
  const Eigen::MatrixXd V = curve.velocity();

  Eigen::MatrixXd phi(N, K), dphi(N, K);
  for (int i = 0; i < N; ++i) {
    const double t = curve.t(i);
    phi(i, 0) = 1.0, dphi(i, 0) = 0.0;
    for (int m = 1; m <= M; ++m) {
      phi(i, 2 * m - 1) = std::cos(kw * m * t), dphi(i, 2 * m - 1) = -kw * m * std::sin(kw * m * t);
      phi(i, 2 * m) = std::sin(kw * m * t), dphi(i, 2 * m) = kw * m * std::cos(kw * m * t);
    }
  }

  const int U = K * dim;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(U, U);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(U);
  std::vector<Eigen::MatrixXd> gs(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd p = curve.position(i), v = V.row(i).transpose();
    const LocalMetric lm = local_metric(model, p);
    gs[i] = lm.g;
    const double speed = std::sqrt(lm.inner(v, v));
    const Eigen::VectorXd gv = lm.g * v;
    // <nabla_V (phi e_a), V> = phi' (g v)_a + phi sum_d (g v)_d (v^T Gamma^d)_a
    Eigen::VectorXd chris = Eigen::VectorXd::Zero(dim);
    for (int d = 0; d < dim; ++d) chris += gv[d] * (lm.gamma[d].transpose() * v);
    const double w = dt / speed;  // ds / |V|^2 = dt / |V|
    for (int k = 0; k < K; ++k)
      for (int a = 0; a < dim; ++a) rhs[k * dim + a] -= w * (dphi(i, k) * gv[a] + phi(i, k) * chris[a]);
    const double ds = dt * speed;
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l) G.block(k * dim, l * dim, dim, dim) += ds * phi(i, k) * phi(i, l) * lm.g;
  }
  const Eigen::VectorXd c = G.ldlt().solve(rhs);
  require(c.allFinite(), ErrorCode::QuadratureFailure, "curvature projection failed");

  MinimalityReport out;
  out.curvature = Eigen::MatrixXd::Zero(N, dim);
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < dim; ++a) out.curvature.col(a) += c[k * dim + a] * phi.col(k);
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd kv = out.curvature.row(i).transpose();
    out.sup_norm = std::max(out.sup_norm, std::sqrt(kv.dot(gs[i] * kv)));
  }
  out.minimal = out.sup_norm <= tol;
  return out;
}

}  // namespace cmc
