#include "gammacell/xp.hpp"

#include "gammacell/envelope.hpp"
#include "gammacell/error.hpp"
#include "gammacell/rigidity.hpp"
#include "gammacell/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace gammacell {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const DensitySpec& need_density(const Config& c) {
  if (!c.density) throw ValidationError("config has no [density] section");
  return *c.density;
}

const std::vector<Mat>& need_X(const Config& c) {
  require(!c.cell.X.empty(), "config has no [cell].X list");
  return c.cell.X;
}

SolveOptions solve_options(const Config& c) {
  SolveOptions o = c.solve;
  o.seed = c.seed;
  return o;
}

RunContext inner(const RunContext& ctx) {
  RunContext r = ctx;
  r.workers = 1;
  return r;
}

void and_check(SweepReport& r, const std::string& name, bool ok) {
  auto [it, inserted] = r.checks.emplace(name, ok);
  if (!inserted) it->second = it->second && ok;
}

ReportRow make_row(const Config& c, std::string experiment, const Mat& X, double delta, int k, int res,
                   std::string kind, double value, bool converged, double wall) {
  return {std::move(experiment), X, delta, k, res, std::move(kind), value, converged, wall, c.seed};
}

std::string x_tag(std::size_t i) { return "X" + std::to_string(i); }

void record_cell(SweepReport& r, const CellResult& cell) {
  and_check(r, "invariant/upper_bound", cell.m_value <= cell.upper_bound + 1e-10);
}

void record_estimate(SweepReport& r, const HomEstimate& est, const std::string& label) {
  for (const auto& cell : est.cells) record_cell(r, cell);
  and_check(r, "invariant/tiling", est.monotone_ok);
  if (est.partial) r.notes.push_back(label + ": " + est.error);
}

// Rows of one k schedule; failed tail entries become NaN rows.
void emit_schedule(SweepReport& r, const Config& c, const std::string& experiment, const Mat& X, double delta,
                   const std::vector<int>& ks, const HomEstimate& est, const std::string& kind) {
  for (std::size_t j = 0; j < ks.size(); ++j) {
    if (j < est.cells.size()) {
      const auto& cell = est.cells[j];
      r.append(make_row(c, experiment, X, delta, ks[j], c.cell.res, kind, cell.m_value, cell.converged,
                        cell.wall_time));
    } else {
      r.append(make_row(c, experiment, X, delta, ks[j], c.cell.res, kind, kNaN, false, 0.0));
    }
  }
}

double estimate_or_nan(const HomEstimate& est, std::size_t expected) {
  return est.cells.size() == expected ? est.estimate : kNaN;
}

bool all_converged(const HomEstimate& est, std::size_t expected) {
  if (est.cells.size() != expected) return false;
  for (const auto& cell : est.cells)
    if (!cell.converged) return false;
  return true;
}

DensitySpec with_delta(DensitySpec s, double delta) {
  s.delta = delta;
  return s;
}

std::vector<double> sorted_descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

void validate_jobs(const std::vector<CellJob>& jobs) {
  for (const auto& j : jobs) validate(j);
}

std::string describe(const std::string& what, const CellJob& job) {
  std::ostringstream s;
  s << what << " X=" << format_row_major(job.X) << " k=" << job.k << " res=" << job.res
    << " delta=" << format_double(job.delta) << " lambda=" << format_double(job.lambda)
    << " symmetrized=" << (job.symmetrized ? "true" : "false");
  if (auto fp = job_fingerprint(job)) s << " fingerprint=" << *fp;
  return s.str();
}

DensitySpec commute_linear(const Config& c) {
  const DensitySpec& W = need_density(c);
  require(W.is_nonlinear_elastic(), "this command needs a single-well or multi-well [density]");
  DensitySpec V = c.linear ? *c.linear : linearization_of(W);
  require(V.is_linearized(), "[linear] must be a linearized-multi-well density");
  return V;
}

std::vector<Field> rigidity_samples(const Grid& g, const std::vector<double>& angles) {
  const int n = g.dim();
  std::vector<Field> out;
  for (double t : angles) {
    Mat R = identity(n);
    R(0, 0) = std::cos(t);
    R(0, 1) = -std::sin(t);
    R(1, 0) = std::sin(t);
    R(1, 1) = std::cos(t);
    out.push_back(interpolate(
        g,
        [&](const Point& x) {
          Point y = x;
          y(1) += t * std::sin(2.0 * std::numbers::pi * x(0));
          return y;
        },
        true));
    out.push_back(interpolate(
        g,
        [&](const Point& x) {
          Point u = x;
          u(0) += t * x(0) * x(1);
          u(1) -= 0.5 * t * x(0) * x(0);
          return Point(R * u);
        },
        true));
    out.push_back(interpolate(g, [&](const Point& x) { return Point(R * x); }, true));
  }
  return out;
}

int rigidity_dim(const Config& c) { return c.density && c.density->n >= 2 ? c.density->n : 2; }

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Cell: return "cell";
    case Command::Homog: return "homog";
    case Command::Envelope: return "envelope";
    case Command::Korn: return "korn";
    case Command::Rigidity: return "rigidity";
    case Command::Commute: return "commute";
    case Command::Equiv: return "equiv";
    case Command::Diagonal: return "diagonal";
    case Command::Addition: return "addition";
  }
  return "?";
}

Command command_from_string(const std::string& name) {
  for (Command c : {Command::Cell, Command::Homog, Command::Envelope, Command::Korn, Command::Rigidity,
                    Command::Commute, Command::Equiv, Command::Diagonal, Command::Addition})
    if (to_string(c) == name) return c;
  throw ValidationError("unknown command '" + name + "'");
}

double rel_err(double w, double v) { return std::abs(w - v) / (std::abs(v) + 1e-12); }

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "loglog_slope: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return kNaN;
  const double m = static_cast<double>(lx.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

DensitySpec linearization_of(const DensitySpec& W) {
  require(W.is_nonlinear_elastic(), "linearization_of needs a single-well or multi-well density");
  DensitySpec V = W;
  V.kind = DensityKind::LinearizedMultiWell;
  V.delta = 0.0;
  V.beta = V.c_low = V.C_low = 0.0;
  if (W.kind == DensityKind::SingleWell) V.wells = {zeros(W.n)};
  return V;
}

SweepReport new_report(const Config& c) {
  SweepReport r;
  r.config_hash = config_hash(c);
  r.version = kVersion;
  r.seed = c.seed;
  return r;
}

SweepReport run_cell(const Config& c, const RunContext& ctx) {
  const DensitySpec spec = with_delta(need_density(c), c.cell.delta > 0.0 ? c.cell.delta : need_density(c).delta);
  const auto& Xs = need_X(c);
  std::vector<CellJob> jobs;
  for (const auto& X : Xs)
    for (int k : c.cell.k) jobs.push_back({spec, X, k, c.cell.res, c.cell.symmetrized, c.cell.delta, 0.0, solve_options(c)});
  validate_jobs(jobs);
  std::vector<CellResult> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  parallel_for(jobs.size(), ctx.workers, [&](std::size_t i) {
    try {
      results[i] = cell_energy(jobs[i], inner(ctx));
    } catch (const ComputeError& e) {
      errors[i] = e.what();
    }
  });
  SweepReport r = new_report(c);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    if (!errors[i].empty()) {
      r.notes.push_back(describe("cell", j) + ": " + errors[i]);
      r.append(make_row(c, "cell", j.X, j.delta, j.k, j.res, "cell", kNaN, false, 0.0));
      and_check(r, "cell/complete", false);
      continue;
    }
    record_cell(r, results[i]);
    r.append(make_row(c, "cell", j.X, j.delta, j.k, j.res, "cell", results[i].m_value, results[i].converged,
                      results[i].wall_time));
    r.append(make_row(c, "cell", j.X, j.delta, j.k, j.res, "cell_upper_bound", results[i].upper_bound, true, 0.0));
  }
  return r;
}

SweepReport run_homog(const Config& c, const RunContext& ctx) {
  const DensitySpec& base = need_density(c);
  const auto& Xs = need_X(c);
  const bool linear = base.is_linearized() && c.cell.symmetrized;
  const double delta = c.cell.delta;
  const std::string kind = delta > 0.0 ? "w_hom_delta" : (linear ? "v_hom" : "f_hom");
  const DensitySpec spec = delta > 0.0 ? with_delta(base, delta) : base;
  for (const auto& X : Xs) validate(CellJob{spec, X, c.cell.k.front(), c.cell.res, c.cell.symmetrized, delta, 0.0, solve_options(c)});

  std::vector<HomEstimate> est(Xs.size());
  parallel_for(Xs.size(), ctx.workers, [&](std::size_t i) {
    est[i] = hom_estimate(CellJob{spec, Xs[i], 1, c.cell.res, c.cell.symmetrized, delta, 0.0, solve_options(c)},
                          c.cell.k, inner(ctx));
  });

  SweepReport r = new_report(c);
  const bool has_oracle = spec.n == 1 && delta == 0.0 &&
                          (spec.kind == DensityKind::ConstantPNorm || spec.kind == DensityKind::TwoPhasePNorm);
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    const Mat& X = Xs[i];
    record_estimate(r, est[i], "homog " + x_tag(i));
    emit_schedule(r, c, "homog", X, delta, c.cell.k, est[i], kind);
    const double value = estimate_or_nan(est[i], c.cell.k.size());
    r.append(make_row(c, "homog", X, delta, c.cell.k.back(), c.cell.res, "estimate", value,
                      all_converged(est[i], c.cell.k.size()), 0.0));
    and_check(r, "homog/complete", !est[i].partial);
    if (has_oracle) {
      const auto fr = phase_fractions_1d(spec);
      const double oracle = oracle_1d_homog(fr.a, fr.theta, spec.p, X(0, 0));
      r.append(make_row(c, "homog", X, 0.0, 0, 0, "oracle_1d", oracle, true, 0.0));
      r.metrics["homog/" + x_tag(i) + "/oracle_rel_err"] = rel_err(value, oracle);
    }
  }
  return r;
}

SweepReport run_envelope(const Config& c, const RunContext& ctx) {
  const DensitySpec& spec = need_density(c);
  require(spec.x_independent(), "envelope needs an x-independent density");
  const auto& Xs = need_X(c);
  const auto& e = c.envelope;
  const auto lambdas = e.lambdas.empty() ? default_lambda_net() : e.lambdas;
  const auto net = rank_one_net(spec.n, e.n_dirs, e.amplitudes);

  std::optional<PiecewiseLinear> hull;
  if (spec.n == 1) {
    const auto count = static_cast<std::size_t>(std::llround((e.hi - e.lo) / e.step)) + 1;
    std::vector<double> xs(count), ys(count);
    for (std::size_t i = 0; i < count; ++i) {
      xs[i] = e.lo + static_cast<double>(i) * e.step;
      ys[i] = eval(spec, Point::Zero(1), Mat::Constant(1, 1, xs[i]));
    }
    hull = convexify_1d(xs, ys);
  }

  std::vector<EnvelopeResult> qc(Xs.size()), lam(Xs.size());
  parallel_for(Xs.size(), ctx.workers, [&](std::size_t i) {
    qc[i] = qc_cell(spec, Xs[i], c.cell.res, solve_options(c), inner(ctx));
    lam[i] = laminate(spec, Xs[i], e.depth, net, lambdas);
  });

  SweepReport r = new_report(c);
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    const Mat& X = Xs[i];
    const double f = eval(spec, Point::Zero(spec.n), X);
    r.append(make_row(c, "envelope", X, 0.0, 0, 0, "density", f, true, 0.0));
    r.append(make_row(c, "envelope", X, 0.0, 1, c.cell.res, "qc_bound", qc[i].value, true, 0.0));
    r.append(make_row(c, "envelope", X, 0.0, e.depth, 0, "laminate", lam[i].value, true, 0.0));
    and_check(r, "envelope/below_density", qc[i].value <= f + 1e-10 && lam[i].value <= f + 1e-12);
    const double x = X(0, 0);
    if (hull && x >= e.lo && x <= e.hi) {
      const double conv = (*hull)(x);
      r.append(make_row(c, "envelope", X, 0.0, 0, 0, "convex_1d", conv, true, 0.0));
      and_check(r, "envelope/above_convex", conv <= qc[i].value + 1e-9 && conv <= lam[i].value + 1e-9);
    }
  }
  return r;
}

SweepReport run_korn(const Config& c, const RunContext& ctx) {
  const auto& kc = c.korn;
  std::vector<ConstantEstimate> est(kc.res.size());
  parallel_for(kc.res.size(), ctx.workers, [&](std::size_t i) {
    const Grid g = Grid::build(kc.n, 1, kc.res[i], ctx.max_nodes, false);
    est[i] = korn_constant(g, kc.p, KornOptions{kc.n_starts, kc.max_iter, 64, c.seed});
  });
  SweepReport r = new_report(c);
  for (std::size_t i = 0; i < est.size(); ++i) {
    r.append(make_row(c, "korn", zeros(kc.n), 0.0, 1, kc.res[i], "korn", est[i].value, true, 0.0));
    r.notes.push_back("korn res=" + std::to_string(kc.res[i]) + ": " + est[i].method + ", " + est[i].certified_side);
    if (i > 0) {
      const double change = rel_err(est[i].value, est[i - 1].value);
      r.metrics["korn/change@res=" + std::to_string(kc.res[i])] = change;
      and_check(r, "korn/stable_15pct", change <= 0.15);
    }
  }
  return r;
}

SweepReport run_rigidity(const Config& c, const RunContext& ctx) {
  const auto& rc = c.rigidity;
  const int n = rigidity_dim(c);
  const Grid g = Grid::build(n, 1, rc.res, ctx.max_nodes, false);
  const auto samples = rigidity_samples(g, rc.angles);
  const ConstantEstimate est = rigidity_ratio(g, samples, rc.p);

  SweepReport r = new_report(c);
  const char* names[] = {"shear", "bend", "rigid"};
  bool ge1 = true;
  for (std::size_t s = 0; s < est.per_sample.size(); ++s) {
    const double theta = rc.angles[s / 3];
    if (std::isnan(est.per_sample[s])) {
      r.notes.push_back(std::string("rigidity/") + names[s % 3] + " theta=" + format_double(theta) +
                        ": skipped, dist to SO(n) vanishes");
      continue;
    }
    r.append(make_row(c, std::string("rigidity/") + names[s % 3], zeros(n), theta, 1, rc.res, "rigidity_sample",
                      est.per_sample[s], true, 0.0));
    ge1 = ge1 && est.per_sample[s] >= 1.0 - 1e-12;
  }
  r.append(make_row(c, "rigidity", zeros(n), 0.0, 1, rc.res, "rigidity", est.value, true, 0.0));
  r.checks["rigidity/ratio_ge_1"] = ge1;
  r.metrics["rigidity/skipped"] = est.skipped;
  r.notes.push_back("rigidity: " + est.method + ", " + est.certified_side);

  if (!rc.zhang_X.empty()) {
    DensitySpec spec;
    spec.kind = DensityKind::SingleWell;
    spec.n = n;
    spec.p = rc.p;
    const ZhangReport z = zhang_check(spec, rc.zhang_X, est.value, rc.slack, rc.zhang_res, solve_options(c), ctx);
    for (const auto& row : z.rows) {
      r.append(make_row(c, "zhang", row.X, 0.0, 1, rc.zhang_res, "qc_bound", row.lhs, true, 0.0));
      r.append(make_row(c, "zhang", row.X, 0.0, 1, rc.zhang_res, "zhang_margin", row.margin, true, 0.0));
    }
    r.checks["zhang/margins_nonnegative"] = z.all_pass();
  }
  return r;
}

SweepReport run_commutability(const Config& c, const RunContext& ctx) {
  const DensitySpec& W = need_density(c);
  const DensitySpec V = commute_linear(c);
  const auto& Xs = need_X(c);
  require(!c.sweep.delta.empty(), "commute needs a sweep.delta schedule");
  const auto deltas = sorted_descending(c.sweep.delta);
  const auto& ks = c.cell.k;

  struct Task {
    std::size_t xi;
    double delta;  // 0: the linear side
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    tasks.push_back({i, 0.0});
    for (double d : deltas) tasks.push_back({i, d});
  }
  for (const auto& t : tasks) {
    if (t.delta == 0.0)
      validate(CellJob{V, Xs[t.xi], ks.front(), c.cell.res, true, 0.0, 0.0, solve_options(c)});
    else
      validate(CellJob{with_delta(W, t.delta), Xs[t.xi], ks.front(), c.cell.res, false, t.delta, 0.0, solve_options(c)});
  }

  std::vector<HomEstimate> est(tasks.size());
  parallel_for(tasks.size(), ctx.workers, [&](std::size_t i) {
    const auto& t = tasks[i];
    est[i] = t.delta == 0.0 ? v_hom_estimate(V, Xs[t.xi], ks, c.cell.res, solve_options(c), inner(ctx))
                            : w_hom_delta(W, Xs[t.xi], t.delta, ks, c.cell.res, solve_options(c), inner(ctx));
  });

  SweepReport r = new_report(c);
  std::size_t ti = 0;
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    const Mat& X = Xs[i];
    const std::string tag = "commute/" + x_tag(i);
    const HomEstimate& v = est[ti++];
    record_estimate(r, v, tag + " v_hom");
    emit_schedule(r, c, "commute", X, 0.0, ks, v, "v_hom");
    const double v_value = estimate_or_nan(v, ks.size());
    std::vector<double> errs;
    for (double d : deltas) {
      const HomEstimate& w = est[ti++];
      record_estimate(r, w, tag + " w_hom_delta(" + format_double(d) + ")");
      emit_schedule(r, c, "commute", X, d, ks, w, "w_hom_delta");
      const double e = rel_err(estimate_or_nan(w, ks.size()), v_value);
      errs.push_back(e);
      r.append(make_row(c, "commute", X, d, ks.back(), c.cell.res, "rel_err", e,
                        all_converged(v, ks.size()) && all_converged(w, ks.size()), 0.0));
      r.metrics[tag + "/rel_err@" + format_double(d)] = e;
    }
    bool monotone = true;
    for (std::size_t j = 1; j < errs.size(); ++j)
      monotone = monotone && errs[j] <= (1.0 + c.sweep.slack) * errs[j - 1] + 1e-9;
    r.checks[tag + "/monotone"] = monotone && std::isfinite(errs.back());
    r.checks[tag + "/final_within_tol"] = errs.back() <= c.sweep.tol;
  }
  return r;
}

SweepReport run_equivalence_profile(const Config& c, const RunContext& ctx) {
  const DensitySpec& W = need_density(c);
  const DensitySpec V = commute_linear(c);
  require(!c.sweep.delta.empty(), "equiv needs a sweep.delta schedule");
  require(!c.sweep.T.empty(), "equiv needs a sweep.T list");
  for (double T : c.sweep.T) require(T == std::round(T), "equiv needs integer T values");
  const auto deltas = sorted_descending(c.sweep.delta);
  const auto& Ts = c.sweep.T;

  std::vector<double> values(deltas.size() * Ts.size());
  parallel_for(values.size(), ctx.workers, [&](std::size_t i) {
    const double d = deltas[i / Ts.size()];
    const double T = Ts[i % Ts.size()];
    const EquivalenceOptions opts{c.sweep.R, T, c.sweep.nx, c.sweep.nX, c.sweep.sym_only};
    values[i] = equivalence_metric(linearized_function(with_delta(W, d)), as_function(V), W.n, opts);
  });

  SweepReport r = new_report(c);
  const Mat X0 = zeros(W.n);
  std::vector<double> tmax(deltas.size(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t di = i / Ts.size();
    const double T = Ts[i % Ts.size()];
    r.append(make_row(c, "equiv", X0, deltas[di], static_cast<int>(T), 0, "equivalence_metric", values[i], true, 0.0));
    tmax[di] = std::max(tmax[di], values[i]);
  }
  bool monotone = true;
  for (std::size_t di = 0; di < deltas.size(); ++di) {
    r.append(make_row(c, "equiv", X0, deltas[di], 0, 0, "equivalence_tmax", tmax[di], true, 0.0));
    if (di > 0) monotone = monotone && tmax[di] <= tmax[di - 1];
  }
  r.checks["equiv/tmax_monotone"] = monotone;
  r.metrics["equiv/slope"] = loglog_slope(deltas, tmax);
  return r;
}

SweepReport run_diagonal(const Config& c, const RunContext& ctx) {
  const DensitySpec& W = need_density(c);
  const DensitySpec V = commute_linear(c);
  const auto& Xs = need_X(c);
  const auto& sched = c.sweep.diagonal;
  require(!sched.empty(), "diagonal needs a sweep.diagonal schedule");
  for (std::size_t j = 0; j < sched.size(); ++j) {
    require(sched[j].first >= 1 && sched[j].second > 0.0, "diagonal entries need k >= 1 and delta > 0");
    if (j > 0)
      require(sched[j].first >= sched[j - 1].first && sched[j].second <= sched[j - 1].second,
              "diagonal schedule needs nondecreasing k and nonincreasing delta");
  }
  const int k_max = sched.back().first;
  for (const auto& X : Xs) {
    validate(CellJob{V, X, k_max, c.cell.res, true, 0.0, 0.0, solve_options(c)});
    for (const auto& [k, d] : sched) validate(CellJob{with_delta(W, d), X, k, c.cell.res, false, d, 0.0, solve_options(c)});
  }

  // Task 2i: the diagonal chain for X_i (sequential, tiled warm starts); 2i+1: the reference.
  std::vector<std::vector<CellResult>> chains(Xs.size());
  std::vector<CellResult> refs(Xs.size());
  std::vector<std::string> errors(2 * Xs.size());
  parallel_for(2 * Xs.size(), ctx.workers, [&](std::size_t t) {
    const std::size_t i = t / 2;
    try {
      if (t % 2 == 1) {
        refs[i] = cell_energy(CellJob{V, Xs[i], k_max, c.cell.res, true, 0.0, 0.0, solve_options(c)}, inner(ctx));
        return;
      }
      for (const auto& [k, d] : sched) {
        std::vector<std::vector<double>> warm;
        if (!chains[i].empty() && k % chains[i].back().field.k == 0)
          warm.push_back(tile(chains[i].back().field, k / chains[i].back().field.k).values);
        chains[i].push_back(
            cell_energy(CellJob{with_delta(W, d), Xs[i], k, c.cell.res, false, d, 0.0, solve_options(c)}, inner(ctx), warm));
      }
    } catch (const ComputeError& e) {
      errors[t] = e.what();
    }
  });

  SweepReport r = new_report(c);
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    const Mat& X = Xs[i];
    const std::string tag = "diagonal/" + x_tag(i);
    for (std::size_t t : {2 * i, 2 * i + 1})
      if (!errors[t].empty()) r.notes.push_back(tag + ": " + errors[t]);
    const bool ref_ok = errors[2 * i + 1].empty();
    const double ref = ref_ok ? refs[i].m_value : kNaN;
    if (ref_ok) record_cell(r, refs[i]);
    r.append(make_row(c, "diagonal", X, 0.0, k_max, c.cell.res, "v_hom", ref, ref_ok && refs[i].converged,
                      ref_ok ? refs[i].wall_time : 0.0));
    double last = kNaN;
    for (std::size_t j = 0; j < sched.size(); ++j) {
      const auto [k, d] = sched[j];
      if (j < chains[i].size()) {
        const auto& cell = chains[i][j];
        record_cell(r, cell);
        r.append(make_row(c, "diagonal", X, d, k, c.cell.res, "w_hom_delta", cell.m_value, cell.converged, cell.wall_time));
        last = rel_err(cell.m_value, ref);
      } else {
        r.append(make_row(c, "diagonal", X, d, k, c.cell.res, "w_hom_delta", kNaN, false, 0.0));
        last = kNaN;
      }
      r.append(make_row(c, "diagonal", X, d, k, c.cell.res, "rel_err", last, true, 0.0));
    }
    r.metrics[tag + "/final_rel_err"] = last;
    r.checks[tag + "/final_within_tol"] = last <= c.sweep.tol;
  }
  return r;
}

SweepReport run_addition(const Config& c, const RunContext& ctx) {
  const DensitySpec& spec = need_density(c);
  const auto& Xs = need_X(c);
  const auto lambdas = c.sweep.lambda.empty() ? std::vector<double>{1.0, 0.3, 0.1, 0.03, 0.0} : c.sweep.lambda;
  const int k = c.cell.k.back();
  for (const auto& X : Xs)
    for (double lam : lambdas) validate(CellJob{spec, X, k, c.cell.res, false, 0.0, lam, solve_options(c)});

  std::vector<std::vector<AdditionTrickEntry>> entries(Xs.size());
  std::vector<CellResult> plain(Xs.size());
  parallel_for(Xs.size(), ctx.workers, [&](std::size_t i) {
    entries[i] = addition_trick(spec, Xs[i], lambdas, k, c.cell.res, solve_options(c), inner(ctx));
    plain[i] = cell_energy(CellJob{spec, Xs[i], k, c.cell.res, false, 0.0, 0.0, solve_options(c)}, inner(ctx));
  });

  SweepReport r = new_report(c);
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    const std::string tag = "addition/" + x_tag(i);
    bool nonincreasing = true;
    for (std::size_t j = 0; j < entries[i].size(); ++j) {
      const auto& e = entries[i][j];
      record_cell(r, e.cell);
      // The delta column carries lambda for addition_trick rows.
      r.append(make_row(c, "addition", Xs[i], e.lambda, k, c.cell.res, "addition_trick", e.cell.m_value,
                        e.cell.converged, e.cell.wall_time));
      if (j > 0) {
        const double prev = entries[i][j - 1].cell.m_value;
        nonincreasing = nonincreasing && e.cell.m_value <= prev + 10.0 * c.solve.g_tol * (1.0 + std::abs(prev));
      }
    }
    r.checks[tag + "/nonincreasing"] = nonincreasing;
    r.checks[tag + "/lambda0_equals_cell"] = entries[i].back().cell.m_value == plain[i].m_value;
  }
  return r;
}

SweepReport run(Command cmd, const Config& c, const RunContext& ctx) {
  switch (cmd) {
    case Command::Cell: return run_cell(c, ctx);
    case Command::Homog: return run_homog(c, ctx);
    case Command::Envelope: return run_envelope(c, ctx);
    case Command::Korn: return run_korn(c, ctx);
    case Command::Rigidity: return run_rigidity(c, ctx);
    case Command::Commute: return run_commutability(c, ctx);
    case Command::Equiv: return run_equivalence_profile(c, ctx);
    case Command::Diagonal: return run_diagonal(c, ctx);
    case Command::Addition: return run_addition(c, ctx);
  }
  throw ValidationError("unknown command");
}

std::vector<std::string> describe_jobs(Command cmd, const Config& c) {
  std::vector<std::string> out;
  const auto opts = solve_options(c);
  switch (cmd) {
    case Command::Cell:
    case Command::Homog: {
      const DensitySpec spec = with_delta(need_density(c), c.cell.delta > 0.0 ? c.cell.delta : need_density(c).delta);
      for (const auto& X : need_X(c))
        for (int k : c.cell.k) {
          CellJob j{spec, X, k, c.cell.res, c.cell.symmetrized, c.cell.delta, 0.0, opts};
          validate(j);
          out.push_back(describe(to_string(cmd), j));
        }
      break;
    }
    case Command::Envelope: {
      const DensitySpec& spec = need_density(c);
      require(spec.x_independent(), "envelope needs an x-independent density");
      for (const auto& X : need_X(c)) {
        CellJob j{spec, X, 1, c.cell.res, false, 0.0, 0.0, opts};
        validate(j);
        out.push_back(describe("qc_cell", j));
        out.push_back("laminate X=" + format_row_major(X) + " depth=" + std::to_string(c.envelope.depth));
      }
      break;
    }
    case Command::Korn:
      for (int res : c.korn.res)
        out.push_back("korn n=" + std::to_string(c.korn.n) + " res=" + std::to_string(res) + " p=" +
                      format_double(c.korn.p));
      break;
    case Command::Rigidity:
      out.push_back("rigidity n=" + std::to_string(rigidity_dim(c)) + " res=" + std::to_string(c.rigidity.res) +
                    " samples=" + std::to_string(3 * c.rigidity.angles.size()));
      for (const auto& X : c.rigidity.zhang_X)
        out.push_back("zhang qc_cell X=" + format_row_major(X) + " res=" + std::to_string(c.rigidity.zhang_res));
      break;
    case Command::Commute: {
      const DensitySpec V = commute_linear(c);
      for (const auto& X : need_X(c)) {
        for (int k : c.cell.k) {
          CellJob j{V, X, k, c.cell.res, true, 0.0, 0.0, opts};
          validate(j);
          out.push_back(describe("v_hom", j));
        }
        for (double d : sorted_descending(c.sweep.delta))
          for (int k : c.cell.k) {
            CellJob j{with_delta(need_density(c), d), X, k, c.cell.res, false, d, 0.0, opts};
            validate(j);
            out.push_back(describe("w_hom_delta", j));
          }
      }
      break;
    }
    case Command::Equiv:
      commute_linear(c);
      for (double d : sorted_descending(c.sweep.delta))
        for (double T : c.sweep.T)
          out.push_back("equivalence_metric delta=" + format_double(d) + " T=" + format_double(T) +
                        " R=" + format_double(c.sweep.R) + " sym_only=" + (c.sweep.sym_only ? "true" : "false"));
      break;
    case Command::Diagonal: {
      const DensitySpec V = commute_linear(c);
      require(!c.sweep.diagonal.empty(), "diagonal needs a sweep.diagonal schedule");
      for (const auto& X : need_X(c)) {
        for (const auto& [k, d] : c.sweep.diagonal) {
          CellJob j{with_delta(need_density(c), d), X, k, c.cell.res, false, d, 0.0, opts};
          validate(j);
          out.push_back(describe("w_hom_delta", j));
        }
        CellJob ref{V, X, c.sweep.diagonal.back().first, c.cell.res, true, 0.0, 0.0, opts};
        validate(ref);
        out.push_back(describe("v_hom", ref));
      }
      break;
    }
    case Command::Addition: {
      const auto lambdas = c.sweep.lambda.empty() ? std::vector<double>{1.0, 0.3, 0.1, 0.03, 0.0} : c.sweep.lambda;
      for (const auto& X : need_X(c))
        for (double lam : lambdas) {
          CellJob j{need_density(c), X, c.cell.k.back(), c.cell.res, false, 0.0, lam, opts};
          validate(j);
          out.push_back(describe("addition", j));
        }
      break;
    }
  }
  return out;
}

}  // namespace gammacell
