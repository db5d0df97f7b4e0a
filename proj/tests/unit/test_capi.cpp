#include <doctest.h>

#include "gammacell/gammacell.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

extern "C" int gc_c_smoke(void);

namespace {

const char* kConfig = R"(
seed = 11
[density]
kind = "two-phase-p-norm"
n = 1
a_default = 4.0
phases = [{ box = [0.0, 0.5], a = 1.0 }]
[cell]
X = [[1.0]]
k = [1, 2]
res = 16
)";

std::string read_string(gc_status (*fn)(const gc_config*, char*, size_t, size_t*), const gc_config* c) {
  size_t need = 0;
  REQUIRE(fn(c, nullptr, 0, &need) == GC_OK);
  std::string s(need, '\0');
  REQUIRE(fn(c, s.data(), s.size(), &need) == GC_OK);
  s.resize(need - 1);
  return s;
}

}  // namespace

TEST_CASE("C header compiles as C") { CHECK(gc_c_smoke() == 0); }

TEST_CASE("version and errors") {
  CHECK(std::string(gc_version()).size() > 0);
  gc_config* c = nullptr;
  CHECK(gc_config_parse("bogus = = 1", &c) == GC_INVALID);
  CHECK(c == nullptr);
  CHECK(std::string(gc_last_error()).size() > 0);
  CHECK(gc_config_parse(nullptr, &c) == GC_INVALID);
  CHECK(gc_config_load("/nonexistent.toml", &c) == GC_INVALID);
  gc_config_free(nullptr);
  gc_report_free(nullptr);
  gc_density_free(nullptr);
}

TEST_CASE("config handle") {
  gc_config* c = nullptr;
  REQUIRE(gc_config_parse(kConfig, &c) == GC_OK);
  uint64_t seed = 0;
  CHECK(gc_config_get_seed(c, &seed) == GC_OK);
  CHECK(seed == 11);
  const auto hash = read_string(gc_config_hash, c);
  CHECK(hash.size() == 16);
  CHECK(gc_config_set_seed(c, 12) == GC_OK);
  CHECK(read_string(gc_config_hash, c) != hash);
  CHECK(read_string(gc_config_get_formats, c) == "csv,json");
  CHECK(gc_config_set_out_dir(c, "elsewhere") == GC_OK);
  CHECK(read_string(gc_config_get_out_dir, c) == "elsewhere");
  CHECK(gc_config_set_workers(c, 0) == GC_INVALID);
  CHECK(gc_config_set_workers(c, 2) == GC_OK);
  char small[4];
  size_t need = 0;
  CHECK(gc_config_hash(c, small, sizeof small, &need) == GC_INVALID);
  CHECK(need == 17);
  size_t jobs_need = 0;
  CHECK(gc_config_describe_jobs(c, "cell", nullptr, 0, &jobs_need) == GC_OK);
  CHECK(jobs_need > 1);
  CHECK(gc_config_describe_jobs(c, "nope", nullptr, 0, &jobs_need) == GC_INVALID);
  gc_config_free(c);
}

TEST_CASE("run and inspect a report") {
  gc_config* c = nullptr;
  REQUIRE(gc_config_parse(kConfig, &c) == GC_OK);
  gc_report* r = nullptr;
  REQUIRE(gc_run(c, "homog", &r) == GC_OK);
  CHECK(gc_report_seed(r) == 11);
  CHECK(std::string(gc_report_config_hash(r)) == read_string(gc_config_hash, c));
  REQUIRE(gc_report_row_count(r) > 0);
  bool saw_oracle = false;
  for (size_t i = 0; i < gc_report_row_count(r); ++i) {
    gc_row row{};
    REQUIRE(gc_report_row(r, i, &row) == GC_OK);
    CHECK(row.n == 1);
    if (std::string(row.kind) == "oracle_1d") {
      saw_oracle = true;
      CHECK(row.value == doctest::Approx(1.6));
    }
  }
  CHECK(saw_oracle);
  gc_row row{};
  CHECK(gc_report_row(r, 1000, &row) == GC_INVALID);
  CHECK(gc_report_all_checks_pass(r) == 1);
  for (size_t i = 0; i < gc_report_check_count(r); ++i) {
    const char* name = nullptr;
    int pass = 0;
    CHECK(gc_report_check(r, i, &name, &pass) == GC_OK);
    CHECK(name != nullptr);
  }
  CHECK(gc_report_metric_count(r) == 1);
  const char* name = nullptr;
  double v = 0;
  CHECK(gc_report_metric(r, 0, &name, &v) == GC_OK);
  CHECK(v <= 0.1);

  const auto dir = std::filesystem::temp_directory_path() / "gammacell_capi_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto json = (dir / "r.json").string();
  CHECK(gc_report_write(r, "json", json.c_str()) == GC_OK);
  CHECK(gc_report_write(r, "xml", json.c_str()) == GC_INVALID);
  CHECK(gc_report_plot(r, "f_hom", (dir / "p.svg").c_str(), 0) == GC_OK);
  gc_report* back = nullptr;
  REQUIRE(gc_report_load(json.c_str(), &back) == GC_OK);
  CHECK(gc_report_row_count(back) == gc_report_row_count(r));
  size_t n1 = 0, n2 = 0;
  gc_report_to_string(r, "csv", nullptr, 0, &n1);
  gc_report_to_string(back, "csv", nullptr, 0, &n2);
  std::string s1(n1, '\0'), s2(n2, '\0');
  gc_report_to_string(r, "csv", s1.data(), n1, &n1);
  gc_report_to_string(back, "csv", s2.data(), n2, &n2);
  CHECK(s1 == s2);
  CHECK(gc_report_load((dir / "missing.json").c_str(), &back) != GC_OK);
  gc_report_free(back);
  gc_report_free(r);
  std::filesystem::remove_all(dir);

  CHECK(gc_run(c, "commute", &r) == GC_INVALID);
  gc_config_free(c);
}

TEST_CASE("density handle and numerics") {
  gc_density* d = nullptr;
  REQUIRE(gc_density_parse("kind = \"single-well\"\nn = 2\n", &d) == GC_OK);
  CHECK(gc_density_dim(d) == 2);
  const double x[2] = {0.1, 0.2};
  const double X[4] = {0.0, 0.0, 0.0, 0.0};
  double v = 0;
  CHECK(gc_density_eval(d, x, X, &v) == GC_OK);
  CHECK(v == doctest::Approx(2.0));
  double g[4];
  CHECK(gc_density_grad(d, x, X, g) == GC_OK);
  const double bad[4] = {NAN, 0, 0, 0};
  CHECK(gc_density_eval(d, x, bad, &v) == GC_INVALID);
  double m = 0;
  int conv = 0;
  const double S[4] = {0.5, 0.0, 0.0, 0.2};
  CHECK(gc_cell_energy(d, S, 1, 4, 0, 0.1, 0, &m, &conv) == GC_OK);
  CHECK(m == doctest::Approx(0.29).epsilon(0.03));
  CHECK(gc_cell_energy(d, S, 0, 4, 0, 0.1, 0, &m, &conv) == GC_INVALID);
  gc_density_free(d);

  double dist = -1;
  const double I[4] = {1, 0, 0, 1};
  CHECK(gc_dist_so(2, I, &dist) == GC_OK);
  CHECK(dist == 0.0);
  CHECK(gc_dist_so(4, I, &dist) == GC_INVALID);
  const double a[2] = {1, 4}, th[2] = {0.5, 0.5};
  double o = 0;
  CHECK(gc_oracle_1d_homog(a, th, 2, 2.0, 1.0, &o) == GC_OK);
  CHECK(o == doctest::Approx(1.6));
  CHECK(gc_density_parse("kind = \"nope\"", &d) == GC_INVALID);
}
