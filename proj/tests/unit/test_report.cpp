#include <doctest.h>

#include "gammacell/error.hpp"
#include "gammacell/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace gammacell;

namespace {

SweepReport sample() {
  SweepReport r;
  r.config_hash = "0123456789abcdef";
  r.version = "test";
  r.seed = 42;
  Mat X(2, 2);
  X << 1.0 / 3.0, -2.5e-17, 1e300, 0.1;
  r.append(ReportRow{"homog", X, 0.1, 2, 16, "w_hom_delta", 1.0 / 7.0, false, 0.25, 42});
  r.append(ReportRow{"homog", X, 0.05, 4, 16, "w_hom_delta", 0.1 + 0.2, true, 1.5, 42});
  r.append(ReportRow{"homog", X, 0.0, 4, 16, "v_hom", std::numeric_limits<double>::quiet_NaN(), true, 0.0, 42});
  r.checks["a"] = true;
  r.metrics["m"] = 0.125;
  r.notes.push_back("note, with comma");
  return r;
}

void same_rows(const SweepReport& a, const SweepReport& b) {
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& x = a.rows[i];
    const auto& y = b.rows[i];
    CHECK(x.experiment == y.experiment);
    CHECK(x.X == y.X);
    CHECK(x.delta == y.delta);
    CHECK(x.k == y.k);
    CHECK(x.res == y.res);
    CHECK(x.kind == y.kind);
    CHECK((x.value == y.value || (std::isnan(x.value) && std::isnan(y.value))));
    CHECK(x.converged == y.converged);
    CHECK(x.wall_time == y.wall_time);
    CHECK(x.seed == y.seed);
  }
}

}  // namespace

TEST_CASE("CSV round trip is bit exact") {
  const auto r = sample();
  const auto csv = to_csv(r);
  CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  same_rows(r, report_from_csv(csv));
  CHECK(to_csv(report_from_csv(csv)) == csv);
}

TEST_CASE("JSON round trip keeps rows, checks, metrics and notes") {
  const auto r = sample();
  const auto back = report_from_json(to_json(r));
  same_rows(r, back);
  CHECK(back.config_hash == r.config_hash);
  CHECK(back.seed == 42);
  CHECK(back.checks == r.checks);
  CHECK(back.metrics == r.metrics);
  CHECK(back.notes == r.notes);
  CHECK(to_json(back) == to_json(r));
}

TEST_CASE("malformed reports are rejected") {
  CHECK_THROWS_AS(report_from_csv("bogus\n"), ValidationError);
  CHECK_THROWS_AS(report_from_csv(std::string(kCsvHeader) + "\na,b\n"), ValidationError);
  CHECK_THROWS_AS(report_from_json("{"), ValidationError);
  CHECK_THROWS_AS(report_format_from_string("xml"), ValidationError);
  auto r = sample();
  r.rows[0].experiment = "a,b";
  CHECK_THROWS_AS(to_csv(r), ValidationError);
}

TEST_CASE("all_checks_pass") {
  auto r = sample();
  CHECK(r.all_checks_pass());
  r.checks["b"] = false;
  CHECK_FALSE(r.all_checks_pass());
  CHECK(SweepReport{}.all_checks_pass());
}

TEST_CASE("files and plots") {
  const auto dir = std::filesystem::temp_directory_path() / "gammacell_report_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto r = sample();
  write_report(r, ReportFormat::Csv, dir / "r.csv");
  write_report(r, ReportFormat::Json, dir / "r.json");
  same_rows(r, read_report(dir / "r.csv"));
  same_rows(r, read_report(dir / "r.json"));
  CHECK_THROWS_AS(read_report(dir / "missing.csv"), IoError);

  const auto svg = plot_svg(r, "w_hom_delta", true);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  plot(r, "w_hom_delta", dir / "p.svg", false);
  CHECK(std::filesystem::file_size(dir / "p.svg") > 0);
  std::filesystem::remove_all(dir);
}
