#include "kaclab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "kaclab/boltzmann_coupling.hpp"
#include "kaclab/csv.hpp"
#include "kaclab/errors.hpp"
#include "kaclab/particle_system.hpp"
#include "kaclab/random.hpp"
#include "kaclab/replicas.hpp"
#include "kaclab/wasserstein.hpp"

namespace kaclab {

namespace {

RandomStream replica_stream(const ExperimentConfig& c, const std::string& name, std::size_t r) {
  return RandomStream(c.seed, replica_stream_id(name, r));
}

std::string tagged(const char* name, std::size_t n) { return std::string(name) + "/N=" + std::to_string(n); }

std::string tagged(const char* name, std::size_t n, std::size_t k) {
  return tagged(name, n) + "/k=" + std::to_string(k);
}

/// Appends the metadata line and returns the file.
CsvFile finish(const char* name, std::ostringstream& body, const ExperimentConfig& c) {
  body << metadata_comment(c.seed, config_hash(c)) << '\n';
  return {name, body.str()};
}

/// Per-time mean and stderr of replica-by-time values.
std::vector<MeanStderr> column_stats(const std::vector<std::vector<double>>& per_replica, std::size_t times) {
  std::vector<MeanStderr> out;
  for (std::size_t s = 0; s < times; ++s) {
    std::vector<double> col;
    col.reserve(per_replica.size());
    for (const auto& r : per_replica) col.push_back(r[s]);
    out.push_back(mean_stderr(col));
  }
  return out;
}

void require_list(const std::vector<std::size_t>& v, const char* key, const char* command) {
  if (v.empty()) throw ConfigError(std::string("config: ") + command + " needs a nonempty " + key);
}

bool within(double value, double target, double se, double floor_tol) {
  return std::abs(value - target) <= std::max(3.0 * se, floor_tol);
}

std::string describe(const char* what, double t, double value, double limit) {
  std::ostringstream o;
  o << what << " at t=" << format_number(t) << ": " << format_number(value) << " vs " << format_number(limit);
  return o.str();
}

}  // namespace

bool same_law(const InitialCondition& a, const InitialCondition& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case InitialCondition::Kind::Gaussian: return a.variance == b.variance;
    case InitialCondition::Kind::TwoPoint: return a.level == b.level;
    case InitialCondition::Kind::Uniform: return a.lo == b.lo && a.hi == b.hi;
    case InitialCondition::Kind::File: return a.path == b.path;
  }
  return false;
}

std::vector<EnergyRow> run_energy(const ExperimentConfig& c, int threads) {
  const auto times = c.times();
  const double e0 = c.initial.second_moment();
  const auto per = run_replicas(c.replicas, threads, [&](std::size_t r) {
    RandomStream s = replica_stream(c, "simulate", r);
    VelocityEnsemble v0{0.0, c.initial.sample(c.n_particles, s)};
    std::vector<double> e(times.size());
    SimulationHooks hooks;
    hooks.sample_times = times;
    hooks.on_sample = [&](std::size_t i, const VelocityEnsemble& ens) { e[i] = moment(ens, 2.0); };
    simulate(std::move(v0), c.params, c.t_end, s, hooks);
    return e;
  });
  const auto stats = column_stats(per, times.size());
  std::vector<EnergyRow> out;
  for (std::size_t i = 0; i < times.size(); ++i)
    out.push_back({times[i], stats[i].mean, stats[i].stderr_, second_moment_exact(e0, c.params, times[i])});
  return out;
}

std::vector<ContractionRow> run_contraction(const ExperimentConfig& c, int threads) {
  const auto times = c.times();
  const bool shared = same_law(c.initial, c.reference);
  const auto per = run_replicas(c.replicas, threads, [&](std::size_t r) {
    RandomStream s = replica_stream(c, "contraction", r);
    RandomStream init_a = s.derive(1), init_b = s.derive(2);
    VelocityEnsemble a{0.0, c.initial.sample(c.n_particles, init_a)};
    VelocityEnsemble b = shared ? a : VelocityEnsemble{0.0, c.reference.sample(c.n_particles, init_b)};
    double h0 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) h0 += (a.velocities[i] - b.velocities[i]) * (a.velocities[i] - b.velocities[i]);
    h0 /= static_cast<double>(a.size());
    auto traj = simulate_synchronous_pair(std::move(a), std::move(b), c.params, c.t_end, s, times);
    traj.h.push_back(h0);
    return traj.h;
  });
  std::vector<ContractionRow> out;
  const auto stats = column_stats(per, times.size());
  const double h0_mean = mean_stderr([&] {
                           std::vector<double> v;
                           for (const auto& p : per) v.push_back(p.back());
                           return v;
                         }()).mean;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double decay = std::exp(-0.5 * c.params.mu * times[i]);
    std::vector<double> ratios;
    for (const auto& p : per)
      if (p.back() > 0.0) ratios.push_back(p[i] / (p.back() * decay));
    const MeanStderr rs = mean_stderr(ratios);
    out.push_back({times[i], stats[i].mean, stats[i].stderr_, h0_mean * decay, rs.mean, rs.stderr_, rs.n});
  }
  return out;
}

KineticSolution solve_initial(const ExperimentConfig& c, const InitialCondition& ic, int threads) {
  const SolverSettings settings = c.solver_settings(threads);
  const VelocityGrid grid = solver_grid(ic.second_moment(), ic.support_radius(), c.params, settings);
  return solve(ic.law(grid), c.params, c.t_end, settings);
}

SlopeFit fit_loglog(double t, const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("fit_loglog: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {t, slope, (sy - slope * sx) / n};
}

DecouplingFit fit_proportional(double t, const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("fit_proportional: need data");
  double sxy = 0, sxx = 0, mean = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
    mean += y[i];
  }
  mean /= static_cast<double>(y.size());
  const double cst = sxy / sxx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += (y[i] - cst * x[i]) * (y[i] - cst * x[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return {t, cst, ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0)};
}

ChaosScan run_chaos_scan(const ExperimentConfig& c, const KineticSolution& solution, int threads) {
  require_list(c.n_list, "n_list", "chaos-scan");
  const auto times = c.times();
  ChaosScan scan;
  for (std::size_t n : c.n_list) {
    struct Rep {
      std::vector<double> chaos, h, a;
    };
    const auto per = run_replicas(c.replicas, threads, [&](std::size_t r) {
      RandomStream s = replica_stream(c, tagged("chaos-scan", n).c_str(), r);
      RandomStream init = s.derive(1);
      std::vector<double> v0 = c.initial.sample(n, init);
      Rep rep;
      rep.chaos.resize(times.size());
      auto traj = simulate_coupled(v0, v0, c.params, solution, c.t_end, s, times,
                                   [&](std::size_t i, double t, const std::vector<double>& V,
                                       const std::vector<double>&) {
                                     rep.chaos[i] = w2_empirical_quantile(V, solution.quantile_fn(t));
                                   });
      rep.h = std::move(traj.h);
      rep.a = std::move(traj.a);
      return rep;
    });
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<double> ch, h, a;
      for (const auto& p : per) {
        ch.push_back(p.chaos[i]);
        h.push_back(p.h[i]);
        a.push_back(p.a[i]);
      }
      const MeanStderr m = mean_stderr(ch);
      scan.rows.push_back({n, times[i], m.mean, m.stderr_, mean_stderr(h).mean, mean_stderr(a).mean});
    }
  }
  if (c.n_list.size() >= 2) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<double> x, y;
      for (const auto& row : scan.rows)
        if (row.t == times[i]) {
          x.push_back(static_cast<double>(row.n));
          y.push_back(row.chaos);
        }
      scan.fits.push_back(fit_loglog(times[i], x, y));
    }
  }
  return scan;
}

DecouplingScan run_decoupling(const ExperimentConfig& c, const KineticSolution& solution, int threads) {
  require_list(c.n_list, "n_list", "decoupling");
  require_list(c.k_list, "k_list", "decoupling");
  const auto times = c.times();
  DecouplingScan scan;
  for (std::size_t n : c.n_list) {
    for (std::size_t k : c.k_list) {
      if (k > n) throw ConfigError("config: k_list entry " + std::to_string(k) + " exceeds N=" + std::to_string(n));
      const auto per = run_replicas(c.replicas, threads, [&](std::size_t r) {
        RandomStream s = replica_stream(c, tagged("decoupling", n, k).c_str(), r);
        RandomStream init = s.derive(1), extra = s.derive(2);
        auto traj = simulate_independent_copies(c.initial.sample(n, init), k, c.params, solution, c.t_end, s,
                                                extra, times);
        return traj.h_dec;
      });
      const auto stats = column_stats(per, times.size());
      for (std::size_t i = 0; i < times.size(); ++i)
        scan.rows.push_back({k, n, times[i], stats[i].mean, stats[i].stderr_});
    }
  }
  for (double t : times) {
    if (!(t > 0.0)) continue;
    std::vector<double> x, y;
    for (const auto& row : scan.rows)
      if (row.t == t) {
        x.push_back(static_cast<double>(row.k) / static_cast<double>(row.n));
        y.push_back(row.h_dec);
      }
    scan.fits.push_back(fit_proportional(t, x, y));
  }
  return scan;
}

std::vector<MomentRow> run_moments(const ExperimentConfig& c, const KineticSolution& solution) {
  const double r = c.moment_order;
  const auto times = c.times();
  const Measure1D& f0 = solution.initial();
  const double e0 = f0.abs_moment(2.0);
  std::vector<double> env;
  try {
    env = moment_envelope(r, f0.abs_moment(r), c.params, e0, times);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const bool integral = r == std::floor(r) && r <= 4.0;
  std::vector<MomentRow> out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    double m;
    if (integral) {
      m = solution.moment(times[i], static_cast<int>(r));
    } else {
      const OutputSlice& o = solution.output_at(times[i]);
      m = o.continuous.abs_moment(r) + o.atom_mass * f0.abs_moment(r);
    }
    out.push_back({times[i], m, env[i], m > env[i]});
  }
  return out;
}

CommandResult cmd_simulate(const ExperimentConfig& c, const RunOptions& opt) {
  const auto rows = run_energy(c, opt.threads);
  CommandResult res;
  std::ostringstream o;
  CsvWriter w(o, {"t", "mean_energy", "stderr", "predicted"});
  for (const auto& r : rows) {
    w.row({r.t, r.mean, r.stderr_, r.predicted});
    if (opt.check && !within(r.mean, r.predicted, r.stderr_, 1e-9 * r.predicted))
      res.gate_failures.push_back(describe("mean energy beyond 3 stderr", r.t, r.mean, r.predicted));
  }
  res.files.push_back(finish("simulate.csv", o, c));
  return res;
}

CommandResult cmd_contraction(const ExperimentConfig& c, const RunOptions& opt) {
  const auto rows = run_contraction(c, opt.threads);
  CommandResult res;
  std::ostringstream o;
  CsvWriter w(o, {"t", "h", "stderr", "h0_exp_decay"});
  for (const auto& r : rows) {
    w.row({r.t, r.h, r.stderr_, r.h0_decay});
    if (!opt.check) continue;
    if (r.ratio_replicas == 0) {
      if (r.h != 0.0) res.gate_failures.push_back(describe("identical initials but h != 0", r.t, r.h, 0.0));
    } else if (!within(r.ratio, 1.0, r.ratio_stderr, 1e-12)) {
      res.gate_failures.push_back(describe("h(t)/(h(0)exp(-mu t/2)) beyond 3 stderr of 1", r.t, r.ratio, 1.0));
    }
  }
  res.files.push_back(finish("contraction.csv", o, c));
  return res;
}

CommandResult cmd_solve(const ExperimentConfig& c, const RunOptions& opt) {
  const KineticSolution sol = solve_initial(c, c.initial, opt.threads);
  const StaticQuantile gamma(Measure1D::gaussian(c.params.temperature, sol.grid()).quantile());
  const double w0 = w2_squared(sol.initial().quantile(), gamma.quantile_fn(0.0));
  std::optional<KineticSolution> ref;
  double p0 = 0.0;
  if (!same_law(c.initial, c.reference)) {
    ref.emplace(solve_initial(c, c.reference, opt.threads));
    p0 = w2_squared(sol.initial().quantile(), ref->initial().quantile());
  }
  CommandResult res;
  std::ostringstream dens, mom, diag;
  sol.write_density_csv(dens);
  sol.write_moment_csv(mom);
  CsvWriter d(diag, {"t", "stat", "value"});
  // stat names are text, so rows bypass CsvWriter::row
  auto stat = [&](double t, const char* name, double v) {
    diag << format_number(t) << "," << name << "," << format_number(v) << "\n";
  };
  const double e0 = sol.initial().abs_moment(2.0);
  for (const auto& out : sol.outputs()) {
    const double t = out.t;
    const double decay = std::exp(-0.5 * c.params.mu * t);
    const double wt = kinetic_w2(sol, gamma, t);
    const double m2err = std::abs(sol.moment(t, 2) / second_moment_exact(e0, c.params, t) - 1.0);
    stat(t, "w2sq_gamma", wt);
    stat(t, "w2sq_gamma_bound", decay * w0);
    stat(t, "m2_relative_error", m2err);
    stat(t, "clipped_mass", out.clipped_mass);
    if (opt.check) {
      if (w0 > 0.0 && t > 0.0 && wt > 1.05 * decay * w0)
        res.gate_failures.push_back(describe("W2^2(f_t, gamma) above 1.05 exp(-mu t/2) W2^2(f_0, gamma)", t, wt,
                                             1.05 * decay * w0));
      if (m2err > 1e-4) res.gate_failures.push_back(describe("second moment relative error", t, m2err, 1e-4));
    }
    if (ref) {
      const double wp = kinetic_w2(sol, *ref, t);
      stat(t, "w2sq_pair", wp);
      stat(t, "w2sq_pair_bound", decay * p0);
      if (opt.check && p0 > 0.0 && t > 0.0 && wp > 1.05 * decay * p0)
        res.gate_failures.push_back(describe("pair contraction", t, wp, 1.05 * decay * p0));
    }
  }
  const auto& dg = sol.diagnostics();
  stat(c.t_end, "max_clipped_mass", dg.max_clipped_mass);
  stat(c.t_end, "sup_gamma_deviation", dg.sup_gamma_deviation);
  stat(c.t_end, "steps", static_cast<double>(dg.steps));
  if (opt.check) {
    if (dg.max_clipped_mass > 1e-6)
      res.gate_failures.push_back(describe("clipped mass", c.t_end, dg.max_clipped_mass, 1e-6));
    const bool stationary = c.initial.kind == InitialCondition::Kind::Gaussian &&
                            c.initial.variance == c.params.temperature;
    if (stationary && dg.sup_gamma_deviation > 1e-6)
      res.gate_failures.push_back(describe("stationarity sup deviation", c.t_end, dg.sup_gamma_deviation, 1e-6));
  }
  res.files.push_back(finish("solve_density.csv", dens, c));
  res.files.push_back(finish("solve_moments.csv", mom, c));
  res.files.push_back(finish("solve_diagnostics.csv", diag, c));
  return res;
}

CommandResult cmd_chaos_scan(const ExperimentConfig& c, const RunOptions& opt) {
  require_list(c.n_list, "n_list", "chaos-scan");
  const KineticSolution sol = solve_initial(c, c.initial, opt.threads);
  const ChaosScan scan = run_chaos_scan(c, sol, opt.threads);
  CommandResult res;
  std::ostringstream o, f;
  CsvWriter w(o, {"N", "t", "chaos_w2sq", "stderr", "h", "a"});
  for (const auto& r : scan.rows) w.row({static_cast<double>(r.n), r.t, r.chaos, r.stderr_, r.h, r.a});
  CsvWriter fw(f, {"t", "slope", "intercept"});
  for (const auto& s : scan.fits) {
    fw.row({s.t, s.slope, s.intercept});
    if (opt.check && s.t > 0.0 && s.slope > -1.0 / 3.0)
      res.gate_failures.push_back(describe("log-log slope in N above -1/3", s.t, s.slope, -1.0 / 3.0));
  }
  if (opt.check) {
    for (std::size_t n : c.n_list) {
      const ChaosRow* first = nullptr;
      for (const auto& r : scan.rows) {
        if (r.n != n) continue;
        if (!first) {
          first = &r;
          continue;
        }
        const double limit = first->chaos + 3.0 * std::hypot(first->stderr_, r.stderr_);
        if (r.chaos > limit)
          res.gate_failures.push_back(describe(("chaos grew in time, N=" + std::to_string(n)).c_str(), r.t, r.chaos, limit));
      }
    }
  }
  res.files.push_back(finish("chaos_scan.csv", o, c));
  res.files.push_back(finish("chaos_scan_fit.csv", f, c));
  return res;
}

CommandResult cmd_decoupling(const ExperimentConfig& c, const RunOptions& opt) {
  require_list(c.n_list, "n_list", "decoupling");
  require_list(c.k_list, "k_list", "decoupling");
  const KineticSolution sol = solve_initial(c, c.initial, opt.threads);
  const DecouplingScan scan = run_decoupling(c, sol, opt.threads);
  CommandResult res;
  std::ostringstream o, f;
  CsvWriter w(o, {"k", "N", "t", "h_dec", "stderr"});
  for (const auto& r : scan.rows)
    w.row({static_cast<double>(r.k), static_cast<double>(r.n), r.t, r.h_dec, r.stderr_});
  CsvWriter fw(f, {"t", "C", "r2"});
  for (const auto& s : scan.fits) {
    fw.row({s.t, s.c, s.r2});
    if (!opt.check) continue;
    if (s.r2 < 0.9) res.gate_failures.push_back(describe("R^2 of h_dec = C k/N", s.t, s.r2, 0.9));
    for (const auto& r : scan.rows) {
      if (r.t != s.t) continue;
      const double bound = 1.5 * s.c * static_cast<double>(r.k) / static_cast<double>(r.n);
      if (r.h_dec > bound)
        res.gate_failures.push_back(describe(
            ("h_dec above 1.5 C k/N for k=" + std::to_string(r.k) + ", N=" + std::to_string(r.n)).c_str(), r.t,
            r.h_dec, bound));
    }
  }
  res.files.push_back(finish("decoupling.csv", o, c));
  res.files.push_back(finish("decoupling_fit.csv", f, c));
  return res;
}

CommandResult cmd_moments(const ExperimentConfig& c, const RunOptions& opt) {
  const KineticSolution sol = solve_initial(c, c.initial, opt.threads);
  const auto rows = run_moments(c, sol);
  CommandResult res;
  std::ostringstream o;
  CsvWriter w(o, {"t", "moment", "envelope", "violation"});
  for (const auto& r : rows) {
    w.row({r.t, r.moment, r.envelope, r.violation ? 1.0 : 0.0});
    if (opt.check && r.violation)
      res.gate_failures.push_back(describe("moment above envelope", r.t, r.moment, r.envelope));
  }
  res.files.push_back(finish("moments.csv", o, c));
  return res;
}

CommandResult run_command(const std::string& name, const ExperimentConfig& c, const RunOptions& opt) {
  if (name == "simulate") return cmd_simulate(c, opt);
  if (name == "solve") return cmd_solve(c, opt);
  if (name == "contraction") return cmd_contraction(c, opt);
  if (name == "chaos-scan") return cmd_chaos_scan(c, opt);
  if (name == "decoupling") return cmd_decoupling(c, opt);
  if (name == "moments") return cmd_moments(c, opt);
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace kaclab
