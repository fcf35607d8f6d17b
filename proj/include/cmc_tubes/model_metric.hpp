#pragma once

// Ambient data along a closed geodesic Gamma, given in Fermi coordinates (x0, x') with Gamma
// the x0 axis. Curvature components are read in a parallel orthonormal frame:
//
//   B(i, j)          = <R(X_i, X_0) X_j, X_0>
//   T[k][i][l][j]    = <R(X_k, X_i) X_l, X_j>
//
// with the sign convention <R(X, Y) X, Y> = -K. The TRUNCATED metric is
//
//   g_00 = 1 + B_kl x_k x_l + C_klm x_k x_l x_m,   g_0i = 0,
//   g_ij = delta_ij + (1/3) T[k][i][l][j] x_k x_l,
//
// where the optional cubic coefficients C only break the x' -> -x' symmetry of the
// quadratic model (so that the linear-mode forcing does not vanish identically).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmc_tubes/error.hpp"

namespace cmc {

enum class ModelKind { FlatTorus, Truncated };

inline std::string kind_name(ModelKind k) { return k == ModelKind::FlatTorus ? "FLAT_TORUS" : "TRUNCATED"; }

/// Real trigonometric polynomial in x0 with harmonics 0..M.
struct TrigSeries {
  std::vector<double> c;  // cosine coefficients
  std::vector<double> s;  // sine coefficients

  bool empty() const {
    return std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; }) &&
           std::all_of(s.begin(), s.end(), [](double v) { return v == 0.0; });
  }

  /// order-th derivative at x0 for period lambda.
  double eval(double x0, double lambda, int order = 0) const {
    const double q = 2.0 * std::numbers::pi / lambda;
    double v = 0.0;
    for (size_t h = 0; h < c.size(); ++h) {
      if (c[h] == 0.0 && s[h] == 0.0) continue;
      const double a = q * static_cast<double>(h) * x0;
      const double k = std::pow(q * static_cast<double>(h), order);
      // d^o/dx cos = cos(x + o pi/2), same shift for sin
      const double shift = order * std::numbers::pi / 2.0;
      v += k * (c[h] * std::cos(a + shift) + s[h] * std::sin(a + shift));
    }
    return v;
  }
};

struct FermiPoint {
  double x0 = 0.0;
  Eigen::VectorXd xprime;

  double r() const { return xprime.norm(); }
};

/// Curvature tables evaluated at one x0 together with their x0 derivatives.
struct CurvatureAt {
  int n = 0;
  Eigen::MatrixXd B, dB;
  std::vector<double> T, dT;  // index ((k*n + i)*n + l)*n + j
  std::vector<double> C, dC;  // index (k*n + l)*n + m
  bool has_cubic = false;

  double t(int k, int i, int l, int j) const { return T[((k * n + i) * n + l) * n + j]; }
  double dt(int k, int i, int l, int j) const { return dT[((k * n + i) * n + l) * n + j]; }
  double c(int k, int l, int m) const { return C[(k * n + l) * n + m]; }
  double dc(int k, int l, int m) const { return dC[(k * n + l) * n + m]; }
};

/// Metric and its coordinate derivatives at one point. dg[a] = d g / dx^a, a = 0..n.
template <class S>
struct MetricJet {
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> g;
  std::vector<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>> dg;
};

/// Truncated metric at normal coordinates xp (length n); Scalar may be complex for
/// complex-step linearization.
template <class S>
MetricJet<S> metric_jet(const CurvatureAt& cv, const S* xp, bool derivatives) {
  const int n = cv.n;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  MetricJet<S> out;
  out.g = Mat::Identity(n + 1, n + 1);
  if (derivatives) out.dg.assign(static_cast<size_t>(n + 1), Mat::Zero(n + 1, n + 1));

  S g00(0.0), d0g00(0.0);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      g00 += cv.B(k, l) * xp[k] * xp[l];
      if (derivatives) d0g00 += cv.dB(k, l) * xp[k] * xp[l];
    }
  if (cv.has_cubic) {
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
          g00 += cv.c(k, l, m) * xp[k] * xp[l] * xp[m];
          if (derivatives) d0g00 += cv.dc(k, l, m) * xp[k] * xp[l] * xp[m];
        }
  }
  out.g(0, 0) += g00;

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      S gij(0.0), d0(0.0);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          gij += cv.t(k, i, l, j) * xp[k] * xp[l];
          if (derivatives) d0 += cv.dt(k, i, l, j) * xp[k] * xp[l];
        }
      out.g(i + 1, j + 1) += gij / 3.0;
      if (derivatives) out.dg[0](i + 1, j + 1) = d0 / 3.0;
    }
  if (!derivatives) return out;

  out.dg[0](0, 0) = d0g00;
  for (int p = 0; p < n; ++p) {
    Mat& d = out.dg[static_cast<size_t>(p + 1)];
    S v(0.0);
    for (int l = 0; l < n; ++l) v += 2.0 * cv.B(p, l) * xp[l];
    if (cv.has_cubic)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) v += 3.0 * cv.c(p, l, m) * xp[l] * xp[m];
    d(0, 0) = v;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        S w(0.0);
        for (int l = 0; l < n; ++l) w += (cv.t(p, i, l, j) + cv.t(l, i, p, j)) * xp[l];
        d(i + 1, j + 1) = w / 3.0;
      }
  }
  return out;
}

class ModelMetric {
 public:
  ModelMetric() = default;

  /// Builds a model with all curvature zero. Call the add_* functions, then finalize().
  ModelMetric(int n, int ell, double lambda, ModelKind kind, int mode_cutoff = 8)
      : n_(n), ell_(ell), lambda_(lambda), kind_(kind), cutoff_(mode_cutoff) {
    require(n >= 1, ErrorCode::ModelParse, "n must be positive");
    require(ell >= 1, ErrorCode::ModelParse, "ell must be positive");
    require(lambda > 0.0 && std::isfinite(lambda), ErrorCode::ModelParse, "Lambda must be positive");
    require(mode_cutoff >= 0, ErrorCode::ModelParse, "mode cutoff must be nonnegative");
    require(kind == ModelKind::FlatTorus || ell == 1, ErrorCode::ModelParse,
            "TRUNCATED models are only defined around a curve (ell = 1)");
    const auto h = static_cast<size_t>(cutoff_ + 1);
    const TrigSeries zero{std::vector<double>(h, 0.0), std::vector<double>(h, 0.0)};
    B_.assign(static_cast<size_t>(n * n), zero);
    T_.assign(static_cast<size_t>(n * n * n * n), zero);
    C_.assign(static_cast<size_t>(n * n * n), zero);
    finalize();
  }

  int n() const { return n_; }
  int ell() const { return ell_; }
  double lambda() const { return lambda_; }
  ModelKind kind() const { return kind_; }
  int mode_cutoff() const { return cutoff_; }
  bool flat() const { return flat_; }
  bool has_cubic() const { return has_cubic_; }
  /// Radius below which the truncated metric is used (0.45 of the positivity radius).
  double r_max() const { return r_max_; }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  /// Sets <R(X_i,X_0)X_j,X_0> for one harmonic (0-based i, j) and its symmetric image.
  void add_r0i0j(int i, int j, int harmonic, double cc, double cs) {
    check_index(i), check_index(j), check_harmonic(harmonic);
    set_entry(B_, i * n_ + j, harmonic, cc, cs, "R0i0j");
    set_entry(B_, j * n_ + i, harmonic, cc, cs, "R0i0j");
  }

  /// Sets <R(X_k,X_i)X_l,X_j> for one harmonic (0-based) and all images under the
  /// antisymmetries in (k,i), (l,j) and the pair symmetry.
  void add_rikjl(int k, int i, int l, int j, int harmonic, double cc, double cs) {
    check_index(k), check_index(i), check_index(l), check_index(j), check_harmonic(harmonic);
    if (k == i || l == j) {
      require(cc == 0.0 && cs == 0.0, ErrorCode::ModelParse,
              "Rikjl entry with repeated antisymmetric index must vanish");
      return;
    }
    auto put = [&](int a, int b, int c, int d, double sign) {
      set_entry(T_, ((a * n_ + b) * n_ + c) * n_ + d, harmonic, sign * cc, sign * cs, "Rikjl");
    };
    for (int pair = 0; pair < 2; ++pair) {
      const int a = pair ? l : k, b = pair ? j : i, c = pair ? k : l, d = pair ? i : j;
      put(a, b, c, d, 1.0);
      put(b, a, c, d, -1.0);
      put(a, b, d, c, -1.0);
      put(b, a, d, c, 1.0);
    }
  }

  /// Sets the symmetric cubic g_00 coefficient C_klm (0-based) for one harmonic.
  void add_g00_cubic(int k, int l, int m, int harmonic, double cc, double cs) {
    check_index(k), check_index(l), check_index(m), check_harmonic(harmonic);
    int idx[3] = {k, l, m};
    std::sort(idx, idx + 3);
    do {
      set_entry(C_, (idx[0] * n_ + idx[1]) * n_ + idx[2], harmonic, cc, cs, "G00cubic");
    } while (std::next_permutation(idx, idx + 3));
  }

  /// Recomputes flags and the regularity radius. Called after the tables are filled.
  void finalize() {
    auto all_empty = [](const std::vector<TrigSeries>& v) {
      return std::all_of(v.begin(), v.end(), [](const TrigSeries& t) { return t.empty(); });
    };
    has_cubic_ = !all_empty(C_);
    flat_ = all_empty(B_) && all_empty(T_) && !has_cubic_;
    require(kind_ != ModelKind::FlatTorus || flat_, ErrorCode::ModelParse,
            "FLAT_TORUS model must have all curvature tables zero");
    r_max_ = flat_ ? std::numeric_limits<double>::infinity() : 0.45 * positivity_radius();
  }

  CurvatureAt curvature_at(double x0) const {
    CurvatureAt cv;
    cv.n = n_;
    cv.has_cubic = has_cubic_;
    cv.B.resize(n_, n_), cv.dB.resize(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        cv.B(i, j) = B_[static_cast<size_t>(i * n_ + j)].eval(x0, lambda_);
        cv.dB(i, j) = B_[static_cast<size_t>(i * n_ + j)].eval(x0, lambda_, 1);
      }
    cv.T.resize(T_.size()), cv.dT.resize(T_.size());
    for (size_t a = 0; a < T_.size(); ++a) {
      cv.T[a] = T_[a].eval(x0, lambda_);
      cv.dT[a] = T_[a].eval(x0, lambda_, 1);
    }
    cv.C.resize(C_.size()), cv.dC.resize(C_.size());
    for (size_t a = 0; a < C_.size(); ++a) {
      cv.C[a] = C_[a].eval(x0, lambda_);
      cv.dC[a] = C_[a].eval(x0, lambda_, 1);
    }
    return cv;
  }

  /// Fourier data of <R(X_i,X_0)X_j,X_0> (0-based).
  const TrigSeries& r0i0j_series(int i, int j) const { return B_[static_cast<size_t>(i * n_ + j)]; }
  const TrigSeries& rikjl_series(int k, int i, int l, int j) const {
    return T_[static_cast<size_t>(((k * n_ + i) * n_ + l) * n_ + j)];
  }

  /// Minimal eigenvalue of g over sampled x0 and unit directions at radius r.
  double min_eigenvalue_at_radius(double r) const {
    double lo = std::numeric_limits<double>::infinity();
    const int nx = 4 * cutoff_ + 8;
    const auto dirs = sample_directions();
    for (int a = 0; a < nx; ++a) {
      const CurvatureAt cv = curvature_at(lambda_ * a / nx);
      for (const auto& d : dirs) {
        const Eigen::VectorXd x = r * d;
        const auto jet = metric_jet<double>(cv, x.data(), false);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jet.g, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
      }
    }
    return lo;
  }

 private:
  void check_index(int i) const {
    require(i >= 0 && i < n_, ErrorCode::ModelParse, "frame index " + std::to_string(i + 1) + " out of range");
  }
  void check_harmonic(int h) const {
    require(h >= 0 && h <= cutoff_, ErrorCode::ModelParse,
            "harmonic " + std::to_string(h) + " exceeds mode cutoff " + std::to_string(cutoff_));
  }

  static void set_entry(std::vector<TrigSeries>& table, int idx, int h, double cc, double cs,
                        const char* what) {
    TrigSeries& t = table[static_cast<size_t>(idx)];
    const auto hh = static_cast<size_t>(h);
    const bool set = t.c[hh] != 0.0 || t.s[hh] != 0.0;
    require(!set || (t.c[hh] == cc && t.s[hh] == cs), ErrorCode::ModelParse,
            std::string(what) + " entry conflicts with an earlier symmetric image");
    t.c[hh] = cc;
    t.s[hh] = cs;
  }

  std::vector<Eigen::VectorXd> sample_directions() const {
    std::vector<Eigen::VectorXd> dirs;
    if (n_ == 1) {
      dirs.push_back(Eigen::VectorXd::Constant(1, 1.0));
      dirs.push_back(Eigen::VectorXd::Constant(1, -1.0));
    } else if (n_ == 2) {
      for (int b = 0; b < 48; ++b) {
        const double t = 2.0 * std::numbers::pi * b / 48;
        dirs.push_back((Eigen::VectorXd(2) << std::cos(t), std::sin(t)).finished());
      }
    } else {
      // axes, diagonals and a fixed quasi-random set
      for (int i = 0; i < n_; ++i)
        for (double sg : {1.0, -1.0}) dirs.push_back(sg * Eigen::VectorXd::Unit(n_, i));
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
          for (double sg : {1.0, -1.0}) {
            Eigen::VectorXd v = Eigen::VectorXd::Unit(n_, i) + sg * Eigen::VectorXd::Unit(n_, j);
            dirs.push_back(v.normalized());
            dirs.push_back(-v.normalized());
          }
      for (int a = 1; a <= 64; ++a) {
        Eigen::VectorXd v(n_);
        for (int i = 0; i < n_; ++i) v[i] = std::sin(12.9898 * a + 78.233 * (i + 1)) * 43758.5453;
        for (int i = 0; i < n_; ++i) v[i] = 2.0 * (v[i] - std::floor(v[i])) - 1.0;
        if (v.norm() > 1e-3) dirs.push_back(v.normalized());
      }
    }
    return dirs;
  }

  double positivity_radius() const {
    constexpr double cap = 1e3;
    double lo = 0.0, hi = 0.05;
    while (hi < cap && min_eigenvalue_at_radius(hi) > 0.0) lo = hi, hi *= 1.5;
    if (hi >= cap) return cap;
    for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (min_eigenvalue_at_radius(mid) > 0.0 ? lo : hi) = mid;
    }
    return lo;
  }

  int n_ = 2, ell_ = 1;
  double lambda_ = 2.0 * std::numbers::pi;
  ModelKind kind_ = ModelKind::FlatTorus;
  int cutoff_ = 8;
  std::vector<TrigSeries> B_, T_, C_;
  bool flat_ = true, has_cubic_ = false;
  double r_max_ = std::numeric_limits<double>::infinity();
  std::string name_ = "model";
};

/// Metric matrix at a Fermi point. Throws NonPositiveDefinite if the truncation has
/// lost positivity there.
inline Eigen::MatrixXd metric_at(const ModelMetric& model, const FermiPoint& p) {
  require(p.xprime.size() == model.n(), ErrorCode::ContractViolation, "normal coordinate vector has wrong length");
  if (model.flat()) return Eigen::MatrixXd::Identity(model.n() + 1, model.n() + 1);
  const CurvatureAt cv = model.curvature_at(p.x0);
  Eigen::MatrixXd g = metric_jet<double>(cv, p.xprime.data(), false).g;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  require(llt.info() == Eigen::Success, ErrorCode::NonPositiveDefinite,
          "metric not positive definite at r = " + std::to_string(p.r()));
  return g;
}

/// Ric(U,U) = -sum_a <R(U,E_a)U,E_a> for a unit normal vector U at x0.
inline double ricci_normal(const ModelMetric& model, double x0, const Eigen::VectorXd& upsilon) {
  const int n = model.n();
  require(upsilon.size() == n, ErrorCode::ContractViolation, "direction has wrong length");
  require(std::abs(upsilon.norm() - 1.0) <= 1e-12, ErrorCode::ContractViolation, "direction must be a unit vector");
  if (model.flat()) return 0.0;
  const CurvatureAt cv = model.curvature_at(x0);
  double v = -upsilon.dot(cv.B * upsilon);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) v -= cv.t(k, i, l, i) * upsilon[k] * upsilon[l];
  return v;
}

/// <R(U,X_0)U,X_0> for a normal vector U.
inline double r0u0u(const CurvatureAt& cv, const Eigen::VectorXd& u) { return u.dot(cv.B * u); }

// ---------------------------------------------------------------------------------------
// Model files

/// Parses the key-value model format. Frame indices in the file are 1-based.
inline ModelMetric parse_model(std::istream& in, const std::string& source = "<model>") {
  struct Line {
    std::string key;
    std::vector<double> v;
    int lineno;
  };
  std::map<std::string, std::string> header;
  std::vector<Line> entries;
  std::string raw;
  int lineno = 0;
  auto fail = [&](const std::string& msg) { throw Error(ErrorCode::ModelParse, source + ":" + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    std::istringstream ls(raw);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "R0i0j" || key == "Rikjl" || key == "G00cubic") {
      const size_t want = key == "R0i0j" ? 5 : key == "Rikjl" ? 7 : 6;
      Line l{key, {}, lineno};
      std::string tok;
      while (ls >> tok) {
        try {
          size_t used = 0;
          l.v.push_back(std::stod(tok, &used));
          if (used != tok.size()) fail("malformed number '" + tok + "'");
        } catch (const std::logic_error&) {
          fail("malformed number '" + tok + "'");
        }
      }
      if (l.v.size() != want) fail(key + " expects " + std::to_string(want) + " fields");
      entries.push_back(l);
    } else if (key == "n" || key == "ell" || key == "Lambda" || key == "exact_model" || key == "mode_cutoff") {
      std::string value, extra;
      if (!(ls >> value) || (ls >> extra)) fail("key '" + key + "' expects exactly one value");
      if (header.count(key)) fail("duplicate key '" + key + "'");
      header[key] = value;
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  lineno = 0;
  for (const char* k : {"n", "Lambda", "exact_model"})
    if (!header.count(k)) fail(std::string("missing key '") + k + "'");
  auto to_int = [&](const std::string& s, const char* what) {
    size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::logic_error&) {
      fail(std::string("malformed ") + what);
    }
    if (used != s.size()) fail(std::string("malformed ") + what);
    return v;
  };
  const int n = to_int(header["n"], "n");
  const int ell = header.count("ell") ? to_int(header["ell"], "ell") : 1;
  const int cutoff = header.count("mode_cutoff") ? to_int(header["mode_cutoff"], "mode_cutoff") : 8;
  double lambda = 0.0;
  try {
    size_t used = 0;
    lambda = std::stod(header["Lambda"], &used);
    if (used != header["Lambda"].size()) fail("malformed Lambda");
  } catch (const std::logic_error&) {
    fail("malformed Lambda");
  }
  ModelKind kind;
  if (header["exact_model"] == "FLAT_TORUS") kind = ModelKind::FlatTorus;
  else if (header["exact_model"] == "TRUNCATED") kind = ModelKind::Truncated;
  else fail("exact_model must be FLAT_TORUS or TRUNCATED");

  ModelMetric m(n, ell, lambda, kind, cutoff);
  for (const auto& e : entries) {
    lineno = e.lineno;
    std::vector<int> idx;
    const size_t nidx = e.v.size() - 3;
    for (size_t a = 0; a < nidx + 1; ++a) {
      if (e.v[a] != std::floor(e.v[a])) fail("index fields must be integers");
      idx.push_back(static_cast<int>(e.v[a]));
    }
    const int harmonic = idx.back();
    const double cc = e.v[nidx + 1], cs = e.v[nidx + 2];
    try {
      if (e.key == "R0i0j") m.add_r0i0j(idx[0] - 1, idx[1] - 1, harmonic, cc, cs);
      else if (e.key == "Rikjl") m.add_rikjl(idx[0] - 1, idx[1] - 1, idx[2] - 1, idx[3] - 1, harmonic, cc, cs);
      else m.add_g00_cubic(idx[0] - 1, idx[1] - 1, idx[2] - 1, harmonic, cc, cs);
    } catch (const Error& err) {
      fail(err.what());
    }
  }
  m.finalize();
  m.set_name(source);
  return m;
}

inline ModelMetric parse_model_string(const std::string& text, const std::string& source = "<model>") {
  std::istringstream in(text);
  return parse_model(in, source);
}

inline ModelMetric flat_torus_model(int n = 2, double lambda = 2.0 * std::numbers::pi, int ell = 1) {
  ModelMetric m(n, ell, lambda, ModelKind::FlatTorus);
  m.set_name("flat_torus");
  return m;
}

/// Toy curved model: nondegenerate geodesic with positive-definite B (Index(Gamma) = 0).
inline const char* curved_toy_text() {
  return "n 2\nell 1\nLambda 6.283185307179586\nexact_model TRUNCATED\n"
         "R0i0j 1 1 0 0.5 0\nR0i0j 2 2 0 0.8 0\nR0i0j 1 1 1 0.1 0.05\nR0i0j 1 2 2 0.05 0\n"
         "Rikjl 1 2 1 2 0 -0.3 0\nRikjl 1 2 1 2 1 0.1 0\n"
         "G00cubic 1 1 1 0 0.2 0\nG00cubic 1 2 2 1 0.1 0.05\nG00cubic 2 2 2 0 -0.15 0\n";
}

/// Same as the toy model except one normal direction is unstable: -J has one negative block.
inline const char* unstable_toy_text() {
  return "n 2\nell 1\nLambda 6.283185307179586\nexact_model TRUNCATED\n"
         "R0i0j 1 1 0 -0.5 0\nR0i0j 2 2 0 0.8 0\nR0i0j 1 1 1 0.1 0.05\nR0i0j 1 2 2 0.05 0\n"
         "Rikjl 1 2 1 2 0 -0.3 0\nRikjl 1 2 1 2 1 0.1 0\n"
         "G00cubic 1 1 1 0 0.2 0\nG00cubic 1 2 2 1 0.1 0.05\nG00cubic 2 2 2 0 -0.15 0\n";
}

/// Built-in names (flat_torus, curved_toy, unstable_toy) or a path to a model file.
inline ModelMetric load_model(const std::string& name_or_path) {
  if (name_or_path == "flat_torus") return flat_torus_model();
  if (name_or_path == "curved_toy") {
    auto m = parse_model_string(curved_toy_text(), "curved_toy");
    return m;
  }
  if (name_or_path == "unstable_toy") return parse_model_string(unstable_toy_text(), "unstable_toy");
  std::ifstream in(name_or_path);
  require(in.good(), ErrorCode::ModelParse, "cannot open model file '" + name_or_path + "'");
  return parse_model(in, name_or_path);
}

}  // namespace cmc
