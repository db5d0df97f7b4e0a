#include "gammacell/cell.hpp"

#include "gammacell/error.hpp"
#include "gammacell/field_io.hpp"
#include "gammacell/support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>

namespace gammacell {

namespace {

std::string hexfloat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void append_matrix(std::string& s, const Mat& M) {
  s += "[";
  for (double v : to_row_major(M)) s += hexfloat(v) + ",";
  s += "]";
}

std::mutex& fingerprint_lock(const std::string& fp) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::mutex> locks;
  std::lock_guard<std::mutex> guard(registry_mutex);
  return locks[fp];
}

nlohmann::json result_record(const CellResult& r) {
  return {{"m_value", r.m_value},
          {"upper_bound", r.upper_bound},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"start_index", r.start_index},
          {"grad_norm", r.grad_norm},
          {"diagnostic", r.diagnostic},
          {"wall_time", r.wall_time},
          {"fingerprint", r.fingerprint},
          {"field", {{"n", r.field.n}, {"k", r.field.k}, {"res", r.field.res}, {"layout", "node-major"}}}};
}

std::optional<CellResult> cache_load(const std::filesystem::path& dir) {
  std::ifstream js(dir / "result.json");
  if (!js) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(js);
    CellResult r;
    r.m_value = j.at("m_value").get<double>();
    r.upper_bound = j.at("upper_bound").get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.start_index = j.at("start_index").get<int>();
    r.grad_norm = j.at("grad_norm").get<double>();
    r.diagnostic = j.at("diagnostic").get<std::string>();
    r.wall_time = j.at("wall_time").get<double>();
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.field = read_field(dir / "field.bin");
    r.cache_hit = true;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;  // stale or partial entry, recompute
  }
}

void cache_store(const std::filesystem::path& dir, const CellResult& r) {
  std::filesystem::create_directories(dir);
  write_field(dir / "field.bin", r.field);
  const auto tmp = dir / "result.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry in " + dir.string());
    out << result_record(r).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, dir / "result.json");
}

}  // namespace

void validate(const CellJob& job) {
  validate(job.spec);
  validate(job.opts);
  require(job.X.rows() == job.spec.n && job.X.cols() == job.spec.n, "X dimension does not match density");
  require(job.X.allFinite(), "X must be finite");
  require(job.k >= 1, "k must be >= 1");
  require(job.res >= 2, "res must be >= 2");
  require(std::isfinite(job.delta) && job.delta >= 0.0, "delta must be >= 0");
  require(std::isfinite(job.lambda) && job.lambda >= 0.0, "lambda must be >= 0");
}

std::optional<std::string> job_fingerprint(const CellJob& job,
                                           const std::vector<std::vector<double>>& warm_starts) {
  const auto& s = job.spec;
  if (s.custom) return std::nullopt;
  std::string c = "cell/v1|" + to_string(s.kind) + "|n=" + std::to_string(s.n) + "|p=" + hexfloat(s.p) +
                  "|beta=" + hexfloat(s.beta) + "|c=" + hexfloat(s.c_low) + "|C=" + hexfloat(s.C_low) +
                  "|sd=" + hexfloat(s.delta) + "|a0=" + hexfloat(s.a_default) + "|wells=";
  for (const auto& U : s.wells) append_matrix(c, U);
  c += "|phases=";
  for (const auto& b : s.phases) {
    c += "{";
    for (std::size_t i = 0; i < b.lo.size(); ++i) c += hexfloat(b.lo[i]) + ":" + hexfloat(b.hi[i]) + ",";
    c += hexfloat(b.a) + "}";
  }
  c += "|profile=";
  for (std::size_t i = 0; i < s.profile.xs.size(); ++i)
    c += hexfloat(s.profile.xs[i]) + ":" + hexfloat(s.profile.ys[i]) + ",";
  c += "|X=";
  append_matrix(c, job.X);
  c += "|k=" + std::to_string(job.k) + "|res=" + std::to_string(job.res) +
       "|sym=" + std::to_string(job.symmetrized) + "|delta=" + hexfloat(job.delta) +
       "|lambda=" + hexfloat(job.lambda);
  const auto& o = job.opts;
  c += "|opts=" + std::to_string(o.max_iter) + "," + hexfloat(o.g_tol) + "," + hexfloat(o.f_tol) + "," +
       std::to_string(o.memory) + "," + std::to_string(o.n_starts) + "," + std::to_string(o.seed) + "," +
       hexfloat(o.initial_step) + ",amp=";
  for (double a : o.amp) c += hexfloat(a) + ",";
  c += "|warm=";
  for (const auto& w : warm_starts) {
    std::string bytes(reinterpret_cast<const char*>(w.data()), w.size() * sizeof(double));
    c += to_hex(fnv1a64(bytes)) + ",";
  }
  return to_hex(fnv1a64(c));
}

CellResult cell_energy(const CellJob& job, const RunContext& ctx,
                       const std::vector<std::vector<double>>& warm_starts) {
  validate(job);
  const auto fp = job_fingerprint(job, warm_starts);
  std::unique_lock<std::mutex> cache_guard;
  std::optional<std::filesystem::path> entry;
  if (fp && ctx.cache_dir) {
    entry = *ctx.cache_dir / *fp;
    cache_guard = std::unique_lock<std::mutex>(fingerprint_lock(*fp));
    if (auto hit = cache_load(*entry)) return std::move(*hit);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const Grid grid = Grid::build(job.spec.n, job.k, job.res, ctx.max_nodes);
  const CellIntegrand integrand{job.spec, job.X, job.symmetrized, job.delta, job.lambda};
  const EnergyFn energy = [&](std::span<const double> v) { return assemble_energy(grid, integrand, v); };
  const GradientFn gradient = [&](std::span<const double> v, std::span<double> g) {
    assemble_gradient(grid, integrand, v, g);
  };

  SolveOptions opts = job.opts;
  // Per-job seed: the global seed mixed with the job content.
  opts.seed = hash_combine(job.opts.seed, fnv1a64(fp.value_or("uncacheable")));

  CellResult r;
  r.upper_bound = energy(std::vector<double>(grid.dof_count(), 0.0));
  SolveResult sr;
  try {
    sr = multistart(energy, gradient, grid, opts, std::max(1.0, job.X.norm()), warm_starts, ctx.workers);
  } catch (const ComputeError& e) {
    throw ComputeError("cell problem (k=" + std::to_string(job.k) + ", res=" + std::to_string(job.res) +
                       ") failed: " + e.what());
  }
  r.m_value = sr.value;
  r.iterations = sr.iterations;
  r.converged = sr.converged;
  r.start_index = sr.start_index;
  r.grad_norm = sr.grad_norm;
  r.diagnostic = sr.diagnostic;
  r.field = Field{grid.dim(), grid.k(), grid.res(), std::move(sr.x)};
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.fingerprint = fp.value_or("");
  if (entry) cache_store(*entry, r);
  return r;
}

std::vector<double> HomEstimate::values() const {
  std::vector<double> v;
  for (const auto& c : cells) v.push_back(c.m_value);
  return v;
}

HomEstimate hom_estimate(const CellJob& base, const std::vector<int>& ks, const RunContext& ctx) {
  require(!ks.empty(), "k schedule must not be empty");
  for (std::size_t i = 1; i < ks.size(); ++i)
    require(ks[i] > ks[i - 1], "k schedule must be strictly increasing");
  HomEstimate est;
  const CellResult* prev = nullptr;
  for (int k : ks) {
    CellJob job = base;
    job.k = k;
    std::vector<std::vector<double>> warm;
    if (prev && k % prev->field.k == 0) warm.push_back(tile(prev->field, k / prev->field.k).values);
    try {
      est.cells.push_back(cell_energy(job, ctx, warm));
    } catch (const std::exception& e) {
      est.partial = true;
      est.error = e.what();
      break;
    }
    est.ks.push_back(k);
    prev = &est.cells.back();
  }
  for (std::size_t i = 1; i < est.cells.size(); ++i) {
    const double mk = est.cells[i - 1].m_value;
    const double tol = 10.0 * base.opts.g_tol * (1.0 + std::abs(mk));
    if (est.cells[i].m_value > mk + tol) est.monotone_ok = false;
  }
  if (!est.cells.empty()) est.estimate = est.cells.back().m_value;
  return est;
}

HomEstimate f_hom_estimate(const DensitySpec& spec, const Mat& X, const std::vector<int>& ks, int res,
                           const SolveOptions& opts, const RunContext& ctx) {
  return hom_estimate(CellJob{spec, X, 1, res, false, 0.0, 0.0, opts}, ks, ctx);
}

HomEstimate v_hom_estimate(const DensitySpec& spec, const Mat& X, const std::vector<int>& ks, int res,
                           const SolveOptions& opts, const RunContext& ctx) {
  require(spec.is_linearized(), "v_hom_estimate needs a linearized density");
  return hom_estimate(CellJob{spec, X, 1, res, true, 0.0, 0.0, opts}, ks, ctx);
}

HomEstimate w_hom_delta(const DensitySpec& spec, const Mat& X, double delta, const std::vector<int>& ks,
                        int res, const SolveOptions& opts, const RunContext& ctx) {
  require(delta > 0.0, "w_hom_delta needs delta > 0");
  DensitySpec s = spec;
  s.delta = delta;
  return hom_estimate(CellJob{s, X, 1, res, false, delta, 0.0, opts}, ks, ctx);
}

std::vector<AdditionTrickEntry> addition_trick(const DensitySpec& spec, const Mat& X,
                                               const std::vector<double>& lambdas, int k, int res,
                                               const SolveOptions& opts, const RunContext& ctx) {
  require(!lambdas.empty() && lambdas.back() == 0.0, "lambda schedule must end with 0");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    require(lambdas[i] < lambdas[i - 1], "lambda schedule must be strictly decreasing");
  std::vector<AdditionTrickEntry> out;
  for (double lam : lambdas) {
    CellJob job{spec, X, k, res, false, 0.0, lam, opts};
    out.push_back({lam, cell_energy(job, ctx)});
  }
  return out;
}

double oracle_1d_homog(const std::vector<double>& a, const std::vector<double>& theta, double p, double X) {
  require(!a.empty() && a.size() == theta.size(), "oracle_1d_homog: need matching a and theta");
  require(p > 1.0, "oracle_1d_homog: need p > 1");
  double total = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(a[i] > 0.0 && theta[i] >= 0.0, "oracle_1d_homog: need a > 0 and theta >= 0");
    total += theta[i];
    s += theta[i] * std::pow(a[i], -1.0 / (p - 1.0));
  }
  require(std::abs(total - 1.0) <= 1e-12, "oracle_1d_homog: volume fractions must sum to 1");
  return std::pow(s, -(p - 1.0)) * std::pow(std::abs(X), p);
}

PhaseFractions phase_fractions_1d(const DensitySpec& spec) {
  require(spec.n == 1, "phase_fractions_1d needs n = 1");
  std::vector<double> cuts{0.0, 1.0};
  for (const auto& b : spec.phases) {
    for (double e : {b.lo[0], b.hi[0]}) {
      const double r = e - std::floor(e);
      cuts.push_back(r);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  PhaseFractions out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    if (len <= 0.0) continue;
    const double a = phase_coefficient(spec, Point::Constant(1, 0.5 * (cuts[i] + cuts[i + 1])));
    auto it = std::find(out.a.begin(), out.a.end(), a);
    if (it == out.a.end()) {
      out.a.push_back(a);
      out.theta.push_back(len);
    } else {
      out.theta[static_cast<std::size_t>(it - out.a.begin())] += len;
    }
  }
  return out;
}

}  // namespace gammacell
