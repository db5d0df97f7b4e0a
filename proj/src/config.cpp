#include "gammacell/config.hpp"

#include "gammacell/error.hpp"
#include "gammacell/support.hpp"

#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace gammacell {

namespace {

using Keys = std::set<std::string, std::less<>>;

void check_keys(const toml::table& t, const Keys& allowed, const std::string& where) {
  for (const auto& [k, v] : t) {
    if (!allowed.contains(k.str()))
      throw ValidationError("unknown key '" + std::string(k.str()) + "' in " + where);
  }
}

const toml::table& table_at(const toml::table& t, std::string_view key, const std::string& where) {
  const auto* sub = t.get_as<toml::table>(key);
  if (!sub) throw ValidationError(where + "." + std::string(key) + " must be a table");
  return *sub;
}

double as_double(const toml::node& n, const std::string& what) {
  if (auto v = n.value<double>()) return *v;
  throw ValidationError(what + " must be a number");
}

long long as_int(const toml::node& n, const std::string& what) {
  if (auto v = n.value_exact<int64_t>()) return *v;
  throw ValidationError(what + " must be an integer");
}

std::vector<double> as_doubles(const toml::node& n, const std::string& what) {
  const auto* arr = n.as_array();
  if (!arr) throw ValidationError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : *arr) out.push_back(as_double(e, what));
  return out;
}

std::vector<int> as_ints(const toml::node& n, const std::string& what) {
  const auto* arr = n.as_array();
  if (!arr) throw ValidationError(what + " must be an array of integers");
  std::vector<int> out;
  for (const auto& e : *arr) out.push_back(static_cast<int>(as_int(e, what)));
  return out;
}

std::vector<Mat> as_matrices(const toml::node& n, const std::string& what) {
  const auto* arr = n.as_array();
  if (!arr) throw ValidationError(what + " must be an array of row-major matrices");
  std::vector<Mat> out;
  for (const auto& e : *arr) out.push_back(from_row_major(as_doubles(e, what)));
  return out;
}

bool as_bool(const toml::node& n, const std::string& what) {
  if (auto v = n.value<bool>()) return *v;
  throw ValidationError(what + " must be a boolean");
}

std::string as_string(const toml::node& n, const std::string& what) {
  if (auto v = n.value<std::string>()) return *v;
  throw ValidationError(what + " must be a string");
}

DensitySpec density_from_table(const toml::table& t, const std::string& where, std::optional<int> n_hint) {
  check_keys(t, {"kind", "n", "p", "beta", "c_low", "C_low", "delta", "wells", "phases", "a_default", "samples"},
             "[" + where + "]");
  DensitySpec s;
  const auto* kind = t.get("kind");
  if (!kind) throw ValidationError("[" + where + "] needs a 'kind'");
  s.kind = density_kind_from_string(as_string(*kind, where + ".kind"));
  if (auto* v = t.get("p")) s.p = as_double(*v, where + ".p");
  if (auto* v = t.get("beta")) s.beta = as_double(*v, where + ".beta");
  if (auto* v = t.get("c_low")) s.c_low = as_double(*v, where + ".c_low");
  if (auto* v = t.get("C_low")) s.C_low = as_double(*v, where + ".C_low");
  if (auto* v = t.get("delta")) s.delta = as_double(*v, where + ".delta");
  if (auto* v = t.get("a_default")) s.a_default = as_double(*v, where + ".a_default");
  if (auto* v = t.get("wells")) s.wells = as_matrices(*v, where + ".wells");
  if (auto* v = t.get("samples")) {
    const auto* st = v->as_table();
    if (!st) throw ValidationError(where + ".samples must be a table {xs, ys}");
    check_keys(*st, {"xs", "ys"}, where + ".samples");
    if (!st->get("xs") || !st->get("ys")) throw ValidationError(where + ".samples needs xs and ys");
    s.profile.xs = as_doubles(*st->get("xs"), where + ".samples.xs");
    s.profile.ys = as_doubles(*st->get("ys"), where + ".samples.ys");
  }
  if (auto* v = t.get("phases")) {
    const auto* arr = v->as_array();
    if (!arr) throw ValidationError(where + ".phases must be an array of {box, a}");
    for (const auto& e : *arr) {
      const auto* pt = e.as_table();
      if (!pt) throw ValidationError(where + ".phases entries must be tables {box, a}");
      check_keys(*pt, {"box", "a"}, where + ".phases");
      if (!pt->get("box") || !pt->get("a")) throw ValidationError(where + ".phases entries need box and a");
      const auto box = as_doubles(*pt->get("box"), where + ".phases.box");
      if (box.empty() || box.size() % 2 != 0)
        throw ValidationError(where + ".phases.box must list lo, hi per axis");
      PhaseBox b;
      for (std::size_t i = 0; i < box.size(); i += 2) {
        b.lo.push_back(box[i]);
        b.hi.push_back(box[i + 1]);
      }
      b.a = as_double(*pt->get("a"), where + ".phases.a");
      s.phases.push_back(std::move(b));
    }
  }
  if (auto* v = t.get("n")) {
    s.n = static_cast<int>(as_int(*v, where + ".n"));
  } else if (!s.wells.empty()) {
    s.n = static_cast<int>(s.wells.front().rows());
  } else if (!s.phases.empty()) {
    s.n = static_cast<int>(s.phases.front().lo.size());
  } else if (n_hint) {
    s.n = *n_hint;
  }
  validate(s);
  return s;
}

std::optional<int> dimension_hint(const toml::table& root) {
  if (const auto* cell = root.get_as<toml::table>("cell"))
    if (const auto* xs = cell->get_as<toml::array>("X"))
      if (!xs->empty())
        if (const auto* first = xs->get(0)->as_array()) {
          switch (first->size()) {
            case 1: return 1;
            case 4: return 2;
            case 9: return 3;
            default: break;
          }
        }
  return std::nullopt;
}

}  // namespace

DensitySpec parse_density(std::string_view toml_text) {
  try {
    const toml::table t = toml::parse(toml_text);
    return density_from_table(t, "density", std::nullopt);
  } catch (const toml::parse_error& e) {
    throw ValidationError(std::string("TOML parse error: ") + std::string(e.description()));
  }
}

Config parse_config(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error: " << e.description() << " at line " << e.source().begin.line;
    throw ValidationError(msg.str());
  }
  check_keys(root,
             {"schema_version", "seed", "density", "linear", "cell", "solve", "sweep", "envelope", "korn", "rigidity", "io"},
             "config");
  Config c;
  if (auto* v = root.get("schema_version")) c.schema_version = static_cast<int>(as_int(*v, "schema_version"));
  if (c.schema_version != kSchemaVersion)
    throw ValidationError("unsupported schema_version " + std::to_string(c.schema_version));
  if (auto* v = root.get("seed")) {
    const long long s = as_int(*v, "seed");
    require(s >= 0, "seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  const auto hint = dimension_hint(root);
  if (root.contains("density")) c.density = density_from_table(table_at(root, "density", "config"), "density", hint);
  if (root.contains("linear")) c.linear = density_from_table(table_at(root, "linear", "config"), "linear", hint);

  if (root.contains("cell")) {
    const auto& t = table_at(root, "cell", "config");
    check_keys(t, {"X", "k", "res", "symmetrized", "delta"}, "[cell]");
    if (auto* v = t.get("X")) c.cell.X = as_matrices(*v, "cell.X");
    if (auto* v = t.get("k")) c.cell.k = as_ints(*v, "cell.k");
    if (auto* v = t.get("res")) c.cell.res = static_cast<int>(as_int(*v, "cell.res"));
    if (auto* v = t.get("symmetrized")) c.cell.symmetrized = as_bool(*v, "cell.symmetrized");
    if (auto* v = t.get("delta")) c.cell.delta = as_double(*v, "cell.delta");
    require(!c.cell.k.empty(), "cell.k must not be empty");
    for (std::size_t i = 0; i < c.cell.k.size(); ++i) {
      require(c.cell.k[i] >= 1, "cell.k entries must be >= 1");
      if (i > 0) require(c.cell.k[i] > c.cell.k[i - 1], "cell.k must be strictly increasing");
    }
    require(c.cell.res >= 2, "cell.res must be >= 2");
    require(c.cell.delta >= 0.0, "cell.delta must be >= 0");
  }
  if (root.contains("solve")) {
    const auto& t = table_at(root, "solve", "config");
    check_keys(t, {"max_iter", "g_tol", "f_tol", "memory", "n_starts", "amp", "initial_step"}, "[solve]");
    if (auto* v = t.get("max_iter")) c.solve.max_iter = static_cast<int>(as_int(*v, "solve.max_iter"));
    if (auto* v = t.get("g_tol")) c.solve.g_tol = as_double(*v, "solve.g_tol");
    if (auto* v = t.get("f_tol")) c.solve.f_tol = as_double(*v, "solve.f_tol");
    if (auto* v = t.get("memory")) c.solve.memory = static_cast<int>(as_int(*v, "solve.memory"));
    if (auto* v = t.get("n_starts")) c.solve.n_starts = static_cast<int>(as_int(*v, "solve.n_starts"));
    if (auto* v = t.get("amp")) c.solve.amp = as_doubles(*v, "solve.amp");
    if (auto* v = t.get("initial_step")) c.solve.initial_step = as_double(*v, "solve.initial_step");
  }
  validate(c.solve);
  if (root.contains("sweep")) {
    const auto& t = table_at(root, "sweep", "config");
    check_keys(t, {"delta", "T", "R", "slack", "tol", "lambda", "diagonal", "nx", "nX", "sym_only"}, "[sweep]");
    if (auto* v = t.get("delta")) c.sweep.delta = as_doubles(*v, "sweep.delta");
    if (auto* v = t.get("T")) c.sweep.T = as_doubles(*v, "sweep.T");
    if (auto* v = t.get("R")) c.sweep.R = as_double(*v, "sweep.R");
    if (auto* v = t.get("slack")) c.sweep.slack = as_double(*v, "sweep.slack");
    if (auto* v = t.get("tol")) c.sweep.tol = as_double(*v, "sweep.tol");
    if (auto* v = t.get("lambda")) c.sweep.lambda = as_doubles(*v, "sweep.lambda");
    if (auto* v = t.get("nx")) c.sweep.nx = static_cast<int>(as_int(*v, "sweep.nx"));
    if (auto* v = t.get("nX")) c.sweep.nX = static_cast<int>(as_int(*v, "sweep.nX"));
    if (auto* v = t.get("sym_only")) c.sweep.sym_only = as_bool(*v, "sweep.sym_only");
    if (auto* v = t.get("diagonal")) {
      const auto* arr = v->as_array();
      if (!arr) throw ValidationError("sweep.diagonal must be an array of [k, delta] pairs");
      for (const auto& e : *arr) {
        const auto* pair = e.as_array();
        if (!pair || pair->size() != 2) throw ValidationError("sweep.diagonal entries must be [k, delta]");
        c.sweep.diagonal.emplace_back(static_cast<int>(as_int(*pair->get(0), "sweep.diagonal k")),
                                      as_double(*pair->get(1), "sweep.diagonal delta"));
      }
    }
    for (double d : c.sweep.delta) require(d > 0.0, "sweep.delta entries must be > 0");
    for (double T : c.sweep.T) require(T > 0.0, "sweep.T entries must be > 0");
    require(c.sweep.R > 0.0, "sweep.R must be > 0");
    require(c.sweep.slack >= 0.0 && c.sweep.tol > 0.0, "sweep.slack >= 0 and sweep.tol > 0 required");
  }
  if (root.contains("envelope")) {
    const auto& t = table_at(root, "envelope", "config");
    check_keys(t, {"depth", "n_dirs", "amplitudes", "lambdas", "lo", "hi", "step"}, "[envelope]");
    if (auto* v = t.get("depth")) c.envelope.depth = static_cast<int>(as_int(*v, "envelope.depth"));
    if (auto* v = t.get("n_dirs")) c.envelope.n_dirs = static_cast<int>(as_int(*v, "envelope.n_dirs"));
    if (auto* v = t.get("amplitudes")) c.envelope.amplitudes = as_doubles(*v, "envelope.amplitudes");
    if (auto* v = t.get("lambdas")) c.envelope.lambdas = as_doubles(*v, "envelope.lambdas");
    if (auto* v = t.get("lo")) c.envelope.lo = as_double(*v, "envelope.lo");
    if (auto* v = t.get("hi")) c.envelope.hi = as_double(*v, "envelope.hi");
    if (auto* v = t.get("step")) c.envelope.step = as_double(*v, "envelope.step");
    require(c.envelope.depth >= 1, "envelope.depth must be >= 1");
    require(c.envelope.hi > c.envelope.lo && c.envelope.step > 0.0, "envelope sampling range is empty");
  }
  if (root.contains("korn")) {
    const auto& t = table_at(root, "korn", "config");
    check_keys(t, {"n", "res", "n_starts", "max_iter", "p"}, "[korn]");
    if (auto* v = t.get("n")) c.korn.n = static_cast<int>(as_int(*v, "korn.n"));
    if (auto* v = t.get("res")) c.korn.res = as_ints(*v, "korn.res");
    if (auto* v = t.get("n_starts")) c.korn.n_starts = static_cast<int>(as_int(*v, "korn.n_starts"));
    if (auto* v = t.get("max_iter")) c.korn.max_iter = static_cast<int>(as_int(*v, "korn.max_iter"));
    if (auto* v = t.get("p")) c.korn.p = as_double(*v, "korn.p");
    require(c.korn.n == 2 || c.korn.n == 3, "korn.n must be 2 or 3");
    require(!c.korn.res.empty(), "korn.res must not be empty");
  }
  if (root.contains("rigidity")) {
    const auto& t = table_at(root, "rigidity", "config");
    check_keys(t, {"res", "p", "angles", "slack", "zhang_X", "zhang_res"}, "[rigidity]");
    if (auto* v = t.get("res")) c.rigidity.res = static_cast<int>(as_int(*v, "rigidity.res"));
    if (auto* v = t.get("p")) c.rigidity.p = as_double(*v, "rigidity.p");
    if (auto* v = t.get("angles")) c.rigidity.angles = as_doubles(*v, "rigidity.angles");
    if (auto* v = t.get("slack")) c.rigidity.slack = as_double(*v, "rigidity.slack");
    if (auto* v = t.get("zhang_X")) c.rigidity.zhang_X = as_matrices(*v, "rigidity.zhang_X");
    if (auto* v = t.get("zhang_res")) c.rigidity.zhang_res = static_cast<int>(as_int(*v, "rigidity.zhang_res"));
  }
  if (root.contains("io")) {
    const auto& t = table_at(root, "io", "config");
    check_keys(t, {"out", "formats", "cache", "input"}, "[io]");
    if (auto* v = t.get("out")) c.io.out = as_string(*v, "io.out");
    if (auto* v = t.get("cache")) c.io.cache = as_string(*v, "io.cache");
    if (auto* v = t.get("input")) c.io.input = as_string(*v, "io.input");
    if (auto* v = t.get("formats")) {
      const auto* arr = v->as_array();
      if (!arr) throw ValidationError("io.formats must be an array of strings");
      c.io.formats.clear();
      for (const auto& e : *arr) {
        auto f = as_string(e, "io.formats");
        require(f == "csv" || f == "json", "io.formats entries must be csv or json");
        c.io.formats.push_back(f);
      }
    }
  }
  for (const auto& X : c.cell.X) {
    if (c.density) require(X.rows() == c.density->n, "cell.X dimension does not match [density]");
  }
  if (c.density && c.linear) require(c.density->n == c.linear->n, "[density] and [linear] dimensions differ");

  toml::table normalized = root;
  normalized.erase("seed");  // folded in by config_hash, so overrides count
  std::ostringstream canon;
  canon << toml::toml_formatter{normalized};
  c.canonical = canon.str();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_hash(const Config& c) {
  return to_hex(fnv1a64(c.canonical + "\nseed = " + std::to_string(c.seed) + "\n"));
}

}  // namespace gammacell
