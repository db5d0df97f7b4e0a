#include "gammacell/report.hpp"

#include "gammacell/error.hpp"
#include "gammacell/support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

namespace gammacell {

bool SweepReport::all_checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw ValidationError("unknown report format '" + s + "' (expected csv or json)");
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Mat parse_row_major(const std::string& s, char sep) {
  std::vector<double> v;
  for (const auto& t : split(s, sep)) v.push_back(parse_double(t));
  return from_row_major(v);
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);  // JSON has no NaN/inf
}

double to_number(const nlohmann::json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  return j.get<double>();
}

}  // namespace

std::string to_csv(const SweepReport& r) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& row : r.rows) {
    require(row.experiment.find_first_of(",\n") == std::string::npos, "experiment ids may not contain ',' or newline");
    out += row.experiment + "," + format_row_major(row.X) + "," + format_double(row.delta) + "," +
           std::to_string(row.k) + "," + std::to_string(row.res) + "," + row.kind + "," + format_double(row.value) +
           "," + (row.converged ? "true" : "false") + "," + format_double(row.wall_time) + "," +
           std::to_string(row.seed) + "\n";
  }
  return out;
}

SweepReport report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ValidationError("CSV report header mismatch");
  SweepReport r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) throw ValidationError("CSV report row needs 10 fields: " + line);
    ReportRow row;
    row.experiment = f[0];
    row.X = parse_row_major(f[1], ';');
    row.delta = parse_double(f[2]);
    row.k = std::stoi(f[3]);
    row.res = std::stoi(f[4]);
    row.kind = f[5];
    row.value = parse_double(f[6]);
    row.converged = f[7] == "true";
    row.wall_time = parse_double(f[8]);
    row.seed = std::stoull(f[9]);
    r.rows.push_back(std::move(row));
  }
  return r;
}

std::string to_json(const SweepReport& r) {
  nlohmann::json j;
  j["metadata"] = {{"config_hash", r.config_hash}, {"version", r.version}, {"seed", r.seed}};
  j["metadata"]["checks"] = nlohmann::json::object();
  for (const auto& [k, v] : r.checks) j["metadata"]["checks"][k] = v;
  j["metadata"]["metrics"] = nlohmann::json::object();
  for (const auto& [k, v] : r.metrics) j["metadata"]["metrics"][k] = number(v);
  j["metadata"]["notes"] = r.notes;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json x = nlohmann::json::array();
    for (double v : to_row_major(row.X)) x.push_back(number(v));
    j["rows"].push_back({{"experiment", row.experiment},
                         {"X", x},
                         {"delta", number(row.delta)},
                         {"k", row.k},
                         {"res", row.res},
                         {"kind", row.kind},
                         {"value", number(row.value)},
                         {"converged", row.converged},
                         {"wall_time_s", number(row.wall_time)},
                         {"seed", row.seed}});
  }
  return j.dump(2) + "\n";
}

SweepReport report_from_json(const std::string& text) {
  SweepReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& m = j.at("metadata");
    r.config_hash = m.value("config_hash", "");
    r.version = m.value("version", "");
    r.seed = m.value("seed", std::uint64_t{0});
    if (m.contains("checks"))
      for (const auto& [k, v] : m["checks"].items()) r.checks[k] = v.get<bool>();
    if (m.contains("metrics"))
      for (const auto& [k, v] : m["metrics"].items()) r.metrics[k] = to_number(v);
    if (m.contains("notes")) r.notes = m["notes"].get<std::vector<std::string>>();
    for (const auto& jr : j.at("rows")) {
      ReportRow row;
      row.experiment = jr.at("experiment").get<std::string>();
      std::vector<double> x;
      for (const auto& v : jr.at("X")) x.push_back(to_number(v));
      row.X = from_row_major(x);
      row.delta = to_number(jr.at("delta"));
      row.k = jr.at("k").get<int>();
      row.res = jr.at("res").get<int>();
      row.kind = jr.at("kind").get<std::string>();
      row.value = to_number(jr.at("value"));
      row.converged = jr.at("converged").get<bool>();
      row.wall_time = to_number(jr.at("wall_time_s"));
      row.seed = jr.at("seed").get<std::uint64_t>();
      r.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed JSON report: ") + e.what());
  }
  return r;
}

void write_report(const SweepReport& r, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report to " + path.string());
  out << (format == ReportFormat::Csv ? to_csv(r) : to_json(r));
  if (!out) throw IoError("short write to " + path.string());
}

SweepReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read report " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".csv") return report_from_csv(ss.str());
  return report_from_json(ss.str());
}

std::string plot_svg(const SweepReport& r, const std::string& kind, bool log_scale) {
  struct Series {
    std::string label;
    std::vector<std::pair<double, double>> pts;
  };
  std::vector<const ReportRow*> rows;
  for (const auto& row : r.rows)
    if (row.kind == kind) rows.push_back(&row);
  require(!rows.empty(), "plot: report has no rows of kind '" + kind + "'");
  const bool by_delta = std::any_of(rows.begin(), rows.end(), [&](const ReportRow* x) { return x->delta != rows[0]->delta; });

  std::vector<Series> series;
  for (const ReportRow* row : rows) {
    const std::string label = row->experiment + " X=" + format_row_major(row->X);
    auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) { return s.label == label; });
    if (it == series.end()) {
      series.push_back({label, {}});
      it = series.end() - 1;
    }
    const double x = by_delta ? row->delta : row->k;
    if (log_scale && (x <= 0.0 || row->value <= 0.0)) continue;
    if (!std::isfinite(row->value)) continue;
    it->pts.emplace_back(log_scale ? std::log10(x) : x, log_scale ? std::log10(row->value) : row->value);
  }
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (auto& s : series) {
    std::sort(s.pts.begin(), s.pts.end());
    for (auto [x, y] : s.pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  constexpr double W = 640, H = 420, L = 70, Rm = 20, T = 30, B = 50;
  auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - Rm); };
  auto sy = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  auto tick = [&](double v) { return log_scale ? "1e" + format_double(std::round(v * 100) / 100) : format_double(v); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\">" << kind << (log_scale ? " (log-log)" : "")
      << "</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0, yv = ymin + (ymax - ymin) * i / 4.0;
    svg << "<text x=\"" << sx(xv) << "\" y=\"" << H - B + 15 << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    svg << "<text x=\"" << L - 5 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
  }
  svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << (by_delta ? "delta" : "k")
      << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* c = colors[i % 7];
    svg << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : series[i].pts) svg << sx(x) << "," << sy(y) << " ";
    svg << "\"/>\n";
    for (auto [x, y] : series[i].pts)
      svg << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
    svg << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 * (i + 1) << "\" fill=\"" << c << "\">" << series[i].label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void plot(const SweepReport& r, const std::string& kind, const std::filesystem::path& path, bool log_scale) {
  const std::string svg = plot_svg(r, kind, log_scale);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write plot to " + path.string());
  out << svg;
}

}  // namespace gammacell
