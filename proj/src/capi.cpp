#include "gammacell/gammacell.h"

#include "gammacell/cell.hpp"
#include "gammacell/config.hpp"
#include "gammacell/error.hpp"
#include "gammacell/report.hpp"
#include "gammacell/support.hpp"
#include "gammacell/xp.hpp"

#include <cstring>
#include <new>
#include <string>

struct gc_config {
  gammacell::Config config;
  gammacell::RunContext ctx;
};

struct gc_report {
  gammacell::SweepReport report;
  std::vector<std::pair<std::string, bool>> checks;
  std::vector<std::pair<std::string, double>> metrics;

  void index() {
    checks.assign(report.checks.begin(), report.checks.end());
    metrics.assign(report.metrics.begin(), report.metrics.end());
  }
};

struct gc_density {
  gammacell::DensitySpec spec;
};

namespace {

thread_local std::string last_error;

template <class Fn>
gc_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return GC_OK;
  } catch (const gammacell::ValidationError& e) {
    last_error = e.what();
    return GC_INVALID;
  } catch (const gammacell::ComputeError& e) {
    last_error = e.what();
    return GC_COMPUTE;
  } catch (const gammacell::IoError& e) {
    last_error = e.what();
    return GC_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GC_COMPUTE;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GC_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return GC_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw gammacell::ValidationError(std::string(what) + " must not be null");
}

void copy_out(const std::string& s, char* buf, std::size_t cap, std::size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf && cap == 0) return;
  need(buf, "buffer");
  if (cap < s.size() + 1) throw gammacell::ValidationError("buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
}

gammacell::Mat matrix_in(int n, const double* X) {
  need(X, "X");
  gammacell::require(n >= 1 && n <= 3, "dimension must be 1, 2 or 3");
  return gammacell::from_row_major(std::span<const double>(X, static_cast<std::size_t>(n * n)));
}

gammacell::ReportFormat format_in(const char* format) {
  need(format, "format");
  return gammacell::report_format_from_string(format);
}

}  // namespace

extern "C" {

const char* gc_version(void) { return gammacell::kVersion; }
const char* gc_last_error(void) { return last_error.c_str(); }

gc_status gc_config_load(const char* path, gc_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto* c = new gc_config{gammacell::load_config(path), {}};
    c->ctx.workers = gammacell::default_workers();
    if (c->config.io.cache) c->ctx.cache_dir = *c->config.io.cache;
    *out = c;
  });
}

gc_status gc_config_parse(const char* text, gc_config** out) {
  return guarded([&] {
    need(text, "toml_text");
    need(out, "out");
    auto* c = new gc_config{gammacell::parse_config(text), {}};
    c->ctx.workers = gammacell::default_workers();
    if (c->config.io.cache) c->ctx.cache_dir = *c->config.io.cache;
    *out = c;
  });
}

void gc_config_free(gc_config* c) { delete c; }

gc_status gc_config_set_seed(gc_config* c, uint64_t seed) {
  return guarded([&] {
    need(c, "config");
    c->config.seed = seed;
  });
}

gc_status gc_config_get_seed(const gc_config* c, uint64_t* seed) {
  return guarded([&] {
    need(c, "config");
    need(seed, "seed");
    *seed = c->config.seed;
  });
}

gc_status gc_config_set_workers(gc_config* c, int workers) {
  return guarded([&] {
    need(c, "config");
    gammacell::require(workers >= 1, "workers must be >= 1");
    c->ctx.workers = workers;
  });
}

gc_status gc_config_set_cache_dir(gc_config* c, const char* dir) {
  return guarded([&] {
    need(c, "config");
    if (dir && *dir)
      c->ctx.cache_dir = dir;
    else
      c->ctx.cache_dir.reset();
  });
}

gc_status gc_config_set_out_dir(gc_config* c, const char* dir) {
  return guarded([&] {
    need(c, "config");
    need(dir, "dir");
    c->config.io.out = dir;
  });
}

gc_status gc_config_get_out_dir(const gc_config* c, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(c, "config");
    copy_out(c->config.io.out, buf, cap, needed);
  });
}

gc_status gc_config_get_formats(const gc_config* c, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(c, "config");
    std::string s;
    for (const auto& f : c->config.io.formats) s += (s.empty() ? "" : ",") + f;
    copy_out(s, buf, cap, needed);
  });
}

gc_status gc_config_hash(const gc_config* c, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(c, "config");
    copy_out(gammacell::config_hash(c->config), buf, cap, needed);
  });
}

gc_status gc_config_describe_jobs(const gc_config* c, const char* command, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(c, "config");
    need(command, "command");
    std::string s;
    for (const auto& line : gammacell::describe_jobs(gammacell::command_from_string(command), c->config))
      s += line + "\n";
    copy_out(s, buf, cap, needed);
  });
}

gc_status gc_run(const gc_config* c, const char* command, gc_report** out) {
  return guarded([&] {
    need(c, "config");
    need(command, "command");
    need(out, "out");
    auto rep = gammacell::run(gammacell::command_from_string(command), c->config, c->ctx);
    auto* r = new gc_report{std::move(rep), {}, {}};
    r->index();
    *out = r;
  });
}

gc_status gc_report_load(const char* path, gc_report** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto* r = new gc_report{gammacell::read_report(path), {}, {}};
    r->index();
    *out = r;
  });
}

void gc_report_free(gc_report* r) { delete r; }

gc_status gc_report_write(const gc_report* r, const char* format, const char* path) {
  return guarded([&] {
    need(r, "report");
    need(path, "path");
    gammacell::write_report(r->report, format_in(format), path);
  });
}

gc_status gc_report_to_string(const gc_report* r, const char* format, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(r, "report");
    const auto f = format_in(format);
    copy_out(f == gammacell::ReportFormat::Csv ? gammacell::to_csv(r->report) : gammacell::to_json(r->report), buf,
             cap, needed);
  });
}

gc_status gc_report_plot(const gc_report* r, const char* kind, const char* path, int log_scale) {
  return guarded([&] {
    need(r, "report");
    need(kind, "kind");
    need(path, "path");
    gammacell::plot(r->report, kind, path, log_scale != 0);
  });
}

size_t gc_report_row_count(const gc_report* r) { return r ? r->report.rows.size() : 0; }

gc_status gc_report_row(const gc_report* r, size_t i, gc_row* out) {
  return guarded([&] {
    need(r, "report");
    need(out, "out");
    gammacell::require(i < r->report.rows.size(), "row index out of range");
    const auto& row = r->report.rows[i];
    out->experiment = row.experiment.c_str();
    out->kind = row.kind.c_str();
    out->n = static_cast<int>(row.X.rows());
    const auto flat = gammacell::to_row_major(row.X);
    std::fill(std::begin(out->X), std::end(out->X), 0.0);
    std::copy(flat.begin(), flat.end(), out->X);
    out->delta = row.delta;
    out->k = row.k;
    out->res = row.res;
    out->value = row.value;
    out->converged = row.converged ? 1 : 0;
    out->wall_time = row.wall_time;
    out->seed = row.seed;
  });
}

size_t gc_report_check_count(const gc_report* r) { return r ? r->checks.size() : 0; }

gc_status gc_report_check(const gc_report* r, size_t i, const char** name, int* pass) {
  return guarded([&] {
    need(r, "report");
    gammacell::require(i < r->checks.size(), "check index out of range");
    if (name) *name = r->checks[i].first.c_str();
    if (pass) *pass = r->checks[i].second ? 1 : 0;
  });
}

size_t gc_report_metric_count(const gc_report* r) { return r ? r->metrics.size() : 0; }

gc_status gc_report_metric(const gc_report* r, size_t i, const char** name, double* value) {
  return guarded([&] {
    need(r, "report");
    gammacell::require(i < r->metrics.size(), "metric index out of range");
    if (name) *name = r->metrics[i].first.c_str();
    if (value) *value = r->metrics[i].second;
  });
}

size_t gc_report_note_count(const gc_report* r) { return r ? r->report.notes.size() : 0; }

const char* gc_report_note(const gc_report* r, size_t i) {
  if (!r || i >= r->report.notes.size()) return nullptr;
  return r->report.notes[i].c_str();
}

const char* gc_report_config_hash(const gc_report* r) { return r ? r->report.config_hash.c_str() : nullptr; }
uint64_t gc_report_seed(const gc_report* r) { return r ? r->report.seed : 0; }
int gc_report_all_checks_pass(const gc_report* r) { return r && r->report.all_checks_pass() ? 1 : 0; }

gc_status gc_density_parse(const char* text, gc_density** out) {
  return guarded([&] {
    need(text, "toml_text");
    need(out, "out");
    *out = new gc_density{gammacell::parse_density(text)};
  });
}

void gc_density_free(gc_density* d) { delete d; }

int gc_density_dim(const gc_density* d) { return d ? d->spec.n : 0; }

gc_status gc_density_eval(const gc_density* d, const double* x, const double* X, double* out) {
  return guarded([&] {
    need(d, "density");
    need(x, "x");
    need(out, "out");
    const int n = d->spec.n;
    *out = gammacell::eval(d->spec, Eigen::Map<const gammacell::Point>(x, n), matrix_in(n, X));
  });
}

gc_status gc_density_grad(const gc_density* d, const double* x, const double* X, double* out) {
  return guarded([&] {
    need(d, "density");
    need(x, "x");
    need(out, "out");
    const int n = d->spec.n;
    const auto G = gammacell::eval_grad_X(d->spec, Eigen::Map<const gammacell::Point>(x, n), matrix_in(n, X));
    const auto flat = gammacell::to_row_major(G);
    std::copy(flat.begin(), flat.end(), out);
  });
}

gc_status gc_dist_so(int n, const double* X, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = gammacell::dist_SO(matrix_in(n, X));
  });
}

gc_status gc_cell_energy(const gc_density* d, const double* X, int k, int res, int symmetrized, double delta,
                         uint64_t seed, double* m_value, int* converged) {
  return guarded([&] {
    need(d, "density");
    need(m_value, "m_value");
    gammacell::DensitySpec spec = d->spec;
    if (delta > 0.0) spec.delta = delta;
    gammacell::SolveOptions opts;
    opts.seed = seed;
    const auto r = gammacell::cell_energy(
        gammacell::CellJob{spec, matrix_in(spec.n, X), k, res, symmetrized != 0, delta, 0.0, opts});
    *m_value = r.m_value;
    if (converged) *converged = r.converged ? 1 : 0;
  });
}

gc_status gc_oracle_1d_homog(const double* a, const double* theta, size_t count, double p, double X, double* out) {
  return guarded([&] {
    need(a, "a");
    need(theta, "theta");
    need(out, "out");
    *out = gammacell::oracle_1d_homog(std::vector<double>(a, a + count), std::vector<double>(theta, theta + count), p, X);
  });
}

}  // extern "C"
