// Batch front end: gap tables, solves, sweeps, index counts, degenerate radii, measure
// limits and an invariant self-check. CSV for tables, JSON for single solves.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmc_tubes/cmc_tubes.hpp"

using json = nlohmann::json;

namespace {

struct RunConfig {
  std::string command;
  std::string model = "curved_toy";
  std::string out;
  int n = 2;
  int ell = 1;
  double lambda = 2.0 * std::numbers::pi;
  int k_min = 3, k_max = 12;
  double rho = 0.0;
  std::vector<double> rhos;
  double tol = 1e-9, delta_res = 1e-6, delta_j = 1e-8, delta_null = 1e-7, c1 = 0.2;
  int n_s = 64, n_theta = 32;
  unsigned seed = 12345;

  json to_json() const {
    return {{"command", command}, {"model", model},         {"n", n},
            {"ell", ell},         {"Lambda", lambda},       {"k_min", k_min},
            {"k_max", k_max},     {"rho", rho},             {"rhos", rhos},
            {"tol", tol},         {"delta_res", delta_res}, {"delta_J", delta_j},
            {"delta_null", delta_null}, {"c1", c1},         {"N_s", n_s},
            {"N_theta", n_theta}, {"seed", seed}};
  }

  cmc::SolverConfig solver() const {
    cmc::SolverConfig s;
    s.n_s = n_s, s.n_theta = n_theta, s.tol = tol, s.delta_res = delta_res, s.delta_j = delta_j, s.c1 = c1;
    return s;
  }

  void validate() const {
    using cmc::ErrorCode;
    auto pow2 = [](int v) { return v >= 16 && cmc::is_power_of_two(v); };
    cmc::require(pow2(n_s) && pow2(n_theta), ErrorCode::ConfigParse, "grid sizes must be powers of two >= 16");
    cmc::require(tol > 0 && delta_res > 0 && delta_j > 0 && delta_null > 0 && c1 >= 0, ErrorCode::ConfigParse,
                 "tolerances must be positive");
    cmc::require(k_min >= 2 && k_max >= k_min, ErrorCode::ConfigParse, "k range must satisfy 2 <= kmin <= kmax");
    cmc::require(lambda > 0 && n >= 2, ErrorCode::ConfigParse, "need n >= 2 and Lambda > 0");
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int worker_count() {
  if (const char* e = std::getenv("CMC_TUBES_WORKERS")) {
    const int v = std::atoi(e);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, count) on the pool; rows come back in index order.
std::vector<std::string> parallel_rows(int count, const std::function<std::string(int)>& job) {
  std::vector<std::string> rows(static_cast<size_t>(count));
  std::vector<std::string> errors(static_cast<size_t>(count));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i; (i = next++) < count;) {
      try {
        rows[i] = job(i);
      } catch (const cmc::Error& e) {
        errors[i] = e.what();  // already prefixed with the error name
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(worker_count(), count); ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  return rows;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      cmc::require(file_.good(), cmc::ErrorCode::ConfigParse, "cannot open output '" + path + "'");
    }
  }
  std::ostream& operator()() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_rows(Output& out, const std::string& header, const std::vector<std::string>& rows) {
  out() << header << "\n";
  for (const auto& r : rows) out() << r << "\n";
}

int cmd_gaps(const RunConfig& rc, Output& out) {
  std::vector<std::string> rows;
  for (const auto& g : cmc::gap_intervals(rc.n, rc.lambda, rc.k_min, rc.k_max, rc.c1))
    rows.push_back(std::to_string(g.k) + "," + fmt(g.rho_lo) + "," + fmt(g.rho_hi));
  write_rows(out, "k,rho_lo,rho_hi", rows);
  return 0;
}

json solve_json(const cmc::SolveResult& r) {
  return {{"rho", r.tube.rho},
          {"iterations", r.iterations},
          {"residual_sup", r.residual_sup},
          {"contraction_factor", r.contraction_factor},
          {"e_norm", r.e_norm},
          {"w_sup", r.tube.w.cwiseAbs().maxCoeff()},
          {"phi_sup", r.tube.Phi.sup_norm()},
          {"residual_history", r.residual_history}};
}

int cmd_solve(const RunConfig& rc, Output& out) {
  const cmc::ModelMetric model = cmc::load_model(rc.model);
  const cmc::SolveResult r = cmc::CmcSolver(model, rc.solver()).solve(rc.rho);
  json j = solve_json(r);
  j["config"] = rc.to_json();
  out() << j.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& rc, Output& out) {
  const cmc::ModelMetric model = cmc::load_model(rc.model);
  const cmc::CmcSolver solver(model, rc.solver());
  const auto gaps = cmc::gap_intervals(model, rc.k_min, rc.k_max, rc.c1);
  auto rows = parallel_rows(static_cast<int>(gaps.size()), [&](int i) {
    const auto r = solver.solve(gaps[i].midpoint());
    return std::to_string(gaps[i].k) + "," + fmt(r.tube.rho) + "," + std::to_string(r.iterations) + "," +
           fmt(r.contraction_factor) + "," + fmt(r.residual_sup) + "," + fmt(r.tube.w.cwiseAbs().maxCoeff()) + "," +
           fmt(r.tube.Phi.sup_norm()) + "," + fmt(r.e_norm);
  });
  write_rows(out, "k,rho,iterations,contraction_factor,residual_sup,w_sup,phi_sup,e_norm", rows);
  return 0;
}

int cmd_index(const RunConfig& rc, Output& out) {
  const cmc::ModelMetric model = cmc::load_model(rc.model);
  const cmc::CmcSolver solver(model, rc.solver());
  const int geo = cmc::geodesic_index(model).index;
  cmc::IndexConfig ic;
  ic.delta_null = rc.delta_null;
  const auto gaps = cmc::gap_intervals(model, rc.k_min, rc.k_max, rc.c1);
  auto rows = parallel_rows(static_cast<int>(gaps.size()), [&](int i) {
    const auto leaf = solver.solve(gaps[i].midpoint());
    const auto rep = cmc::leaf_spectrum(solver, leaf, ic);
    const int expect = geo + 2 * gaps[i].k + 1;
    return std::to_string(gaps[i].k) + "," + fmt(rep.rho) + "," + std::to_string(rep.index) + "," +
           std::to_string(rep.nullity) + "," + std::to_string(expect) + "," + (rep.index == expect ? "1" : "0");
  });
  write_rows(out, "k,rho,index,nullity,expected,match", rows);
  return 0;
}

int cmd_bifurcation(const RunConfig& rc, Output& out) {
  int n = rc.n;
  double lambda = rc.lambda;
  if (!rc.model.empty() && rc.model != "none") {
    const cmc::ModelMetric model = cmc::load_model(rc.model);
    n = model.n(), lambda = model.lambda();
  }
  std::vector<std::string> rows;
  const auto radii = cmc::degenerate_radii(n, rc.k_max, lambda);
  for (size_t i = 0; i < radii.size(); ++i)
    rows.push_back(std::to_string(i + 1) + "," + fmt(radii[i]) + "," +
                   fmt(cmc::flat_torus_symbol(static_cast<int>(i + 1), 0, radii[i], n, lambda)));
  write_rows(out, "k,rho,symbol_at_rho", rows);
  return 0;
}

int cmd_limits(const RunConfig& rc, Output& out) {
  const cmc::FlatTube tube{rc.n, rc.ell, rc.lambda};
  tube.check();
  const auto X = cmc::TestVectorField::band_limited(rc.n + 1, rc.ell, rc.lambda, 2, rc.seed);
  const double om = cmc::sphere_volume(rc.n - rc.ell), L = std::pow(rc.lambda, rc.ell);
  const std::vector<double> rhos = rc.rhos.empty() ? std::vector<double>{0.2, 0.1, 0.05, 0.025} : rc.rhos;
  auto rows = parallel_rows(static_cast<int>(rhos.size()), [&](int i) {
    const double rho = rhos[i];
    const auto m = cmc::scaled_measures(tube, rho, [](const Eigen::VectorXd&) { return 1.0; });
    const auto ng = cmc::normal_gradient_limit(tube, rho, X);
    return fmt(rho) + "," + fmt(m.area_scaled) + "," + fmt(m.vol_scaled) + "," + fmt(m.mu_scaled) + "," +
           fmt(om * L) + "," + fmt(om / (rc.n + 1 - rc.ell) * L) + "," + fmt(cmc::first_variation(tube, rho, X)) +
           "," + fmt(ng.scaled) + "," + fmt(ng.limit);
  });
  write_rows(out, "rho,area_scaled,vol_scaled,mu_scaled,area_limit,vol_limit,first_variation,normal_gradient,normal_gradient_limit",
             rows);
  return 0;
}

/// Quick invariant suite; one line per check, nonzero exit if any fails.
int cmd_check(const RunConfig& rc, Output& out) {
  const cmc::ModelMetric model = cmc::load_model(rc.model);
  int failed = 0;
  auto line = [&](const std::string& name, bool ok, const std::string& detail) {
    out() << (ok ? "PASS " : "FAIL ") << name << " " << detail << "\n";
    failed += !ok;
  };
  auto guarded = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& f) {
    try {
      const auto [ok, d] = f();
      line(name, ok, d);
    } catch (const cmc::Error& e) {
      line(name, false, e.what());
    }
  };

  guarded("metric_identity_on_axis", [&] {
    double dev = 0.0;
    for (int a = 0; a < 16; ++a) {
      const cmc::FermiPoint p{model.lambda() * a / 16, Eigen::VectorXd::Zero(model.n())};
      dev = std::max(dev, (cmc::metric_at(model, p) - Eigen::MatrixXd::Identity(model.n() + 1, model.n() + 1)).norm());
    }
    return std::pair{dev < 1e-14, "max |g - I| = " + fmt(dev)};
  });
  const cmc::CmcSolver solver(model, rc.solver());
  guarded("mode_round_trip", [&] {
    std::mt19937_64 rng(rc.seed);
    std::uniform_real_distribution<double> U(-1, 1);
    const auto& g = solver.grid();
    const Eigen::MatrixXd w = g.truncate(Eigen::MatrixXd::NullaryExpr(g.n_s(), g.n_theta(), [&] { return U(rng); }), g.n_s() / 4, g.n_theta() / 4);
    const double err = (cmc::reassemble(g, cmc::decompose(g, w)) - w).cwiseAbs().maxCoeff();
    return std::pair{err <= 1e-12, "max error " + fmt(err)};
  });
  const auto gaps = cmc::gap_intervals(model, rc.k_min, rc.k_max, rc.c1);
  guarded("gap_windows_nonempty", [&] {
    return std::pair{static_cast<int>(gaps.size()) == rc.k_max - rc.k_min + 1, std::to_string(gaps.size()) + " windows"};
  });
  auto rows = parallel_rows(static_cast<int>(gaps.size()), [&](int i) {
    std::ostringstream s;
    try {
      const auto r = solver.solve(gaps[i].midpoint());
      const bool ok = r.contraction_factor < 1.0 && r.residual_sup <= rc.tol;
      s << (ok ? "PASS " : "FAIL ") << "solve_k" << gaps[i].k << " q = " << fmt(r.contraction_factor)
        << " residual = " << fmt(r.residual_sup);
    } catch (const cmc::Error& e) {
      s << "FAIL solve_k" << gaps[i].k << " " << e.what();
    }
    return s.str();
  });
  for (const auto& r : rows) {
    out() << r << "\n";
    failed += r.rfind("FAIL", 0) == 0;
  }
  out() << (failed ? "FAILED " : "OK ") << failed << "\n";
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CMC tube foliation toolkit"};
  app.require_subcommand(1);
  RunConfig rc;

  auto common = [&](CLI::App* s) {
    s->add_option("--model", rc.model, "built-in model name or model file");
    s->add_option("--out", rc.out, "output file (default stdout)");
    s->add_option("--n", rc.n, "normal dimension");
    s->add_option("--Lambda", rc.lambda, "length of the core curve");
    s->add_option("--kmin", rc.k_min);
    s->add_option("--kmax", rc.k_max);
    s->add_option("--c1", rc.c1, "gap margin constant");
    s->add_option("--tol", rc.tol);
    s->add_option("--delta-res", rc.delta_res);
    s->add_option("--delta-j", rc.delta_j);
    s->add_option("--delta-null", rc.delta_null);
    s->add_option("--ns", rc.n_s, "x0 grid size");
    s->add_option("--ntheta", rc.n_theta, "theta grid size");
    s->add_option("--seed", rc.seed);
  };
  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&, Output&);
  };
  const Cmd cmds[] = {{"gaps", "gap intervals I_k as CSV", cmd_gaps},
                      {"solve", "solve one leaf, JSON result", cmd_solve},
                      {"sweep", "solve at every gap midpoint, CSV", cmd_sweep},
                      {"index", "leaf index at gap midpoints, CSV", cmd_index},
                      {"bifurcation", "degenerate radii of the flat cylinder, CSV", cmd_bifurcation},
                      {"limits", "scaled measures of shrinking flat tubes, CSV", cmd_limits},
                      {"check", "invariant self-check", cmd_check}};
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const auto& c : cmds) {
    CLI::App* s = app.add_subcommand(c.name, c.help);
    common(s);
    subs.emplace_back(s, &c);
  }
  app.get_subcommand("solve")->add_option("--rho", rc.rho, "tube radius")->required();
  app.get_subcommand("limits")->add_option("--ell", rc.ell, "dimension of the core");
  app.get_subcommand("limits")->add_option("--rhos", rc.rhos, "radii to sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ConfigParse: " << e.what() << "\n";
    return 2;
  }

  try {
    for (const auto& [s, c] : subs)
      if (s->parsed()) {
        rc.command = c->name;
        rc.validate();
        Output out(rc.out);
        return c->fn(rc, out);
      }
  } catch (const cmc::Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == cmc::ErrorCode::ConfigParse ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 0;
}
