#pragma once

#include "gammacell/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gammacell {

struct ReportRow {
  std::string experiment;
  Mat X;
  double delta = 0.0;
  int k = 0;
  int res = 0;
  std::string kind;
  double value = 0.0;
  bool converged = true;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
};

struct SweepReport {
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;  // append-only
  std::map<std::string, bool> checks;
  std::map<std::string, double> metrics;
  std::vector<std::string> notes;

  void append(ReportRow row) { rows.push_back(std::move(row)); }
  bool all_checks_pass() const;
};

enum class ReportFormat { Csv, Json };
ReportFormat report_format_from_string(const std::string& s);

inline constexpr const char* kCsvHeader = "experiment,X,delta,k,res,kind,value,converged,wall_time_s,seed";

std::string to_csv(const SweepReport& r);
std::string to_json(const SweepReport& r);
SweepReport report_from_csv(const std::string& text);
SweepReport report_from_json(const std::string& text);

void write_report(const SweepReport& r, ReportFormat format, const std::filesystem::path& path);
SweepReport read_report(const std::filesystem::path& path);

// Self-contained SVG line plot of the rows of one kind, one polyline per
// (experiment, X) series; abscissa is delta when it varies, k otherwise.
std::string plot_svg(const SweepReport& r, const std::string& kind, bool log_scale);
void plot(const SweepReport& r, const std::string& kind, const std::filesystem::path& path, bool log_scale);

}  // namespace gammacell
