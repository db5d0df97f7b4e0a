// gammacell command-line front end. Talks to the library only through gammacell.h.
#include "gammacell/gammacell.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitCompute = 2;

struct ConfigDeleter {
  void operator()(gc_config* c) const { gc_config_free(c); }
};
struct ReportDeleter {
  void operator()(gc_report* r) const { gc_report_free(r); }
};
using ConfigPtr = std::unique_ptr<gc_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<gc_report, ReportDeleter>;

struct Options {
  std::string config;
  std::string out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  bool plot = false;
  bool dry_run = false;
  std::string cache;
  // report subcommand
  std::string input;
  std::string kind;
  bool log_scale = false;
};

int exit_code(gc_status s) { return s == GC_INVALID ? kExitInvalid : kExitCompute; }

int fail(gc_status s, const std::string& what) {
  std::cerr << "gammacell: " << what << ": " << gc_last_error() << "\n";
  return exit_code(s);
}

template <class Fn>
std::string read_string(Fn&& fn) {
  std::size_t needed = 0;
  if (fn(nullptr, 0, &needed) != GC_OK) return {};
  std::string s(needed, '\0');
  if (fn(s.data(), s.size(), &needed) != GC_OK) return {};
  s.resize(needed - 1);
  return s;
}

// Kind plotted by --plot and whether it is drawn log-log.
std::pair<std::string, bool> plot_kind(const std::string& command) {
  static const std::map<std::string, std::pair<std::string, bool>> kinds{
      {"cell", {"cell", false}},           {"homog", {"estimate", false}},
      {"envelope", {"qc_bound", false}},   {"korn", {"korn", false}},
      {"rigidity", {"rigidity_sample", false}}, {"commute", {"rel_err", true}},
      {"equiv", {"equivalence_tmax", true}},    {"diagonal", {"rel_err", false}},
      {"addition", {"addition_trick", false}}};
  return kinds.at(command);
}

void print_summary(const gc_report* r) {
  std::cout << "config_hash " << gc_report_config_hash(r) << "\n";
  std::cout << "seed " << gc_report_seed(r) << "\n";
  std::cout << "rows " << gc_report_row_count(r) << "\n";
  for (std::size_t i = 0; i < gc_report_check_count(r); ++i) {
    const char* name = nullptr;
    int pass = 0;
    gc_report_check(r, i, &name, &pass);
    std::cout << "check " << name << " " << (pass ? "PASS" : "FAIL") << "\n";
  }
  for (std::size_t i = 0; i < gc_report_metric_count(r); ++i) {
    const char* name = nullptr;
    double value = 0.0;
    gc_report_metric(r, i, &name, &value);
    std::cout << "metric " << name << " " << value << "\n";
  }
  for (std::size_t i = 0; i < gc_report_note_count(r); ++i) std::cout << "note " << gc_report_note(r, i) << "\n";
}

int run_command(const std::string& command, const Options& o, const CLI::App& sub) {
  if (o.config.empty()) {
    std::cerr << "gammacell " << command << ": missing --config\n\n" << sub.help();
    return kExitInvalid;
  }
  gc_config* raw = nullptr;
  if (auto s = gc_config_load(o.config.c_str(), &raw); s != GC_OK) return fail(s, "cannot load " + o.config);
  ConfigPtr cfg(raw);

  if (o.seed) gc_config_set_seed(cfg.get(), *o.seed);
  if (o.workers) {
    if (auto s = gc_config_set_workers(cfg.get(), *o.workers); s != GC_OK) return fail(s, "--workers");
  }
  // Cache precedence: --cache, then GAMMACELL_CACHE, then [io].cache.
  if (!o.cache.empty()) {
    gc_config_set_cache_dir(cfg.get(), o.cache.c_str());
  } else if (const char* env = std::getenv("GAMMACELL_CACHE"); env && *env) {
    gc_config_set_cache_dir(cfg.get(), env);
  }
  if (!o.out.empty()) gc_config_set_out_dir(cfg.get(), o.out.c_str());

  const std::string hash = read_string([&](char* b, std::size_t c, std::size_t* n) { return gc_config_hash(cfg.get(), b, c, n); });
  std::uint64_t seed = 0;
  gc_config_get_seed(cfg.get(), &seed);

  if (o.dry_run) {
    std::size_t needed = 0;
    if (auto s = gc_config_describe_jobs(cfg.get(), command.c_str(), nullptr, 0, &needed); s != GC_OK)
      return fail(s, "invalid job list");
    std::string jobs(needed, '\0');
    gc_config_describe_jobs(cfg.get(), command.c_str(), jobs.data(), jobs.size(), &needed);
    jobs.resize(needed - 1);
    std::cout << "config_hash " << hash << "\nseed " << seed << "\n" << jobs;
    return kExitOk;
  }

  gc_report* rep_raw = nullptr;
  if (auto s = gc_run(cfg.get(), command.c_str(), &rep_raw); s != GC_OK) return fail(s, command + " failed");
  ReportPtr rep(rep_raw);

  const fs::path out = read_string([&](char* b, std::size_t c, std::size_t* n) { return gc_config_get_out_dir(cfg.get(), b, c, n); });
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::cerr << "gammacell: cannot create " << out << ": " << ec.message() << "\n";
    return kExitCompute;
  }
  const std::string formats = read_string([&](char* b, std::size_t c, std::size_t* n) { return gc_config_get_formats(cfg.get(), b, c, n); });
  std::size_t start = 0;
  while (start < formats.size()) {
    const std::size_t comma = formats.find(',', start);
    const std::string fmt = formats.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const fs::path path = out / (command + "." + fmt);
    if (auto s = gc_report_write(rep.get(), fmt.c_str(), path.c_str()); s != GC_OK) return fail(s, "writing " + path.string());
    std::cout << "wrote " << path.string() << "\n";
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (o.plot) {
    const auto [kind, log_scale] = plot_kind(command);
    const fs::path path = out / (command + "_" + kind + ".svg");
    if (auto s = gc_report_plot(rep.get(), kind.c_str(), path.c_str(), log_scale ? 1 : 0); s != GC_OK)
      return fail(s, "plotting " + path.string());
    std::cout << "wrote " << path.string() << "\n";
  }
  print_summary(rep.get());
  std::size_t failed = 0;
  for (std::size_t i = 0; i < gc_report_row_count(rep.get()); ++i) {
    gc_row row{};
    gc_report_row(rep.get(), i, &row);
    if (std::isnan(row.value)) ++failed;
  }
  if (failed > 0) {
    std::cerr << "gammacell: " << failed << " report rows failed to compute (see notes)\n";
    return kExitCompute;
  }
  return kExitOk;
}

int run_report(const Options& o, const CLI::App& sub) {
  if (o.input.empty()) {
    std::cerr << "gammacell report: missing --input\n\n" << sub.help();
    return kExitInvalid;
  }
  gc_report* raw = nullptr;
  if (auto s = gc_report_load(o.input.c_str(), &raw); s != GC_OK) return fail(s, "cannot read " + o.input);
  ReportPtr rep(raw);
  print_summary(rep.get());
  if (o.plot) {
    std::set<std::string> kinds;
    if (!o.kind.empty()) {
      kinds.insert(o.kind);
    } else {
      for (std::size_t i = 0; i < gc_report_row_count(rep.get()); ++i) {
        gc_row row{};
        gc_report_row(rep.get(), i, &row);
        kinds.insert(row.kind);
      }
    }
    const fs::path out = o.out.empty() ? fs::path(o.input).parent_path() : fs::path(o.out);
    std::error_code ec;
    if (!out.empty()) fs::create_directories(out, ec);
    const std::string stem = fs::path(o.input).stem().string();
    for (const auto& kind : kinds) {
      const fs::path path = out / (stem + "_" + kind + ".svg");
      if (auto s = gc_report_plot(rep.get(), kind.c_str(), path.c_str(), o.log_scale ? 1 : 0); s != GC_OK)
        return fail(s, "plotting " + path.string());
      std::cout << "wrote " << path.string() << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic homogenization and geometric linearization experiments", "gammacell"};
  app.set_version_flag("--version", std::string(gc_version()));
  app.require_subcommand(1);
  Options o;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"cell", "single cell problem m_k(X) per X and k"},
      {"homog", "homogenized density estimate over the k schedule"},
      {"envelope", "quasiconvex envelope bounds (cell, lamination, 1D hull)"},
      {"korn", "discrete Korn constant on the unit cube"},
      {"rigidity", "rigidity ratio samples and the Zhang margin check"},
      {"commute", "w_hom_delta against v_hom along the delta schedule"},
      {"equiv", "equivalence metric profile over delta and T"},
      {"diagonal", "simultaneous (k, delta) schedule against the v_hom reference"},
      {"addition", "addition-trick regularization in lambda"}};

  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "TOML experiment config");
    sub->add_option("--out", o.out, "output directory (overrides [io].out)");
    sub->add_option("--workers", o.workers, "worker threads (default: available parallelism)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "global seed (overrides the config)");
    sub->add_flag("--plot", o.plot, "also write an SVG plot");
    sub->add_flag("--dry-run", o.dry_run, "validate and list jobs without computing");
    sub->add_option("--cache", o.cache, "disk cache directory (overrides GAMMACELL_CACHE)");
    subs[name] = sub;
  }
  auto* report = app.add_subcommand("report", "summarize or plot a saved CSV/JSON report");
  report->add_option("--input", o.input, "report file (.csv or .json)");
  report->add_option("--out", o.out, "directory for plots (default: next to the input)");
  report->add_flag("--plot", o.plot, "write one SVG per quantity kind");
  report->add_option("--kind", o.kind, "plot only this kind");
  report->add_flag("--log", o.log_scale, "log-log axes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kExitInvalid;
  }

  if (report->parsed()) return run_report(o, *report);
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) return run_command(name, o, *sub);
  std::cerr << app.help();
  return kExitInvalid;
}
