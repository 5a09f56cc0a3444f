#include "pmvf/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pmvf {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where,
                         std::vector<std::string>& errors) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) errors.push_back(where + ": unknown key '" + key + "'");
  }
}

SpaceTimePoint parse_point(const json& j, const std::string& where, std::vector<std::string>& errors) {
  SpaceTimePoint p;
  if (!j.is_object() || !j.contains("x") || !j.contains("t")) {
    errors.push_back(where + ": expected {\"x\": [..], \"t\": number}");
    return p;
  }
  reject_unknown_keys(j, {"x", "t"}, where, errors);
  const auto& xs = j.at("x");
  if (!xs.is_array() || xs.empty() || xs.size() > 3) {
    errors.push_back(where + ": x must be an array of 1..3 numbers");
    return p;
  }
  p.x = Vec(static_cast<int>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) p.x[static_cast<int>(i)] = xs[i].get<double>();
  p.t = j.at("t").get<double>();
  return p;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scenario parse error: ") + e.what());
  }
  std::vector<std::string> errors;
  Scenario sc;

  reject_unknown_keys(j,
                      {"name", "operator", "solution", "pole", "radii", "m", "field", "grid", "tolerances", "seed",
                       "output"},
                      "scenario", errors);

  if (j.contains("name"))
    sc.name = j.at("name").get<std::string>();
  else
    errors.push_back("scenario: missing 'name'");

  if (j.contains("operator")) {
    const auto& op = j.at("operator");
    reject_unknown_keys(op,
                        {"family", "dim", "lambda", "Lambda", "holder_M", "holder_alpha", "a", "diag", "epsilon", "b",
                         "b_linear", "c"},
                        "operator", errors);
    sc.op_family = op.value("family", "heat");
    sc.dim = op.value("dim", 1);
    sc.lambda = op.value("lambda", 1.0);
    sc.Lambda = op.value("Lambda", 1.5);
    sc.holder_M = op.value("holder_M", 0.0);
    sc.holder_alpha = op.value("holder_alpha", 1.0);
    sc.scale_a = op.value("a", 1.0);
    if (op.contains("diag")) sc.diag = op.at("diag").get<std::vector<double>>();
    sc.epsilon = op.value("epsilon", 0.1);
    if (op.contains("b")) {
      sc.b_const = op.at("b").get<std::vector<double>>();
      sc.has_b = true;
    }
    if (op.contains("b_linear")) {
      sc.b_linear = op.at("b_linear").get<double>();
      sc.has_b = true;
    }
    if (op.contains("c")) {
      sc.c_const = op.at("c").get<double>();
      sc.has_c = true;
    }
    static const std::set<std::string> families{"heat", "scaled_heat", "diagonal", "trig_perturbed"};
    if (!families.count(sc.op_family)) errors.push_back("operator: unknown family '" + sc.op_family + "'");
    if (sc.dim < 1 || sc.dim > 3) errors.push_back("operator: dim must be 1, 2 or 3");
    if (!(sc.lambda > 0.0)) errors.push_back("operator: lambda must be positive");
    if (!(sc.Lambda > sc.lambda)) errors.push_back("operator: Lambda must exceed lambda");
    if (sc.op_family == "trig_perturbed" && sc.dim != 1)
      errors.push_back("operator: trig_perturbed requires dim = 1");
    if (sc.op_family == "trig_perturbed" && !(sc.epsilon > 0.0 && sc.epsilon < 1.0))
      errors.push_back("operator: epsilon must lie in (0,1)");
  } else {
    errors.push_back("scenario: missing 'operator'");
  }

  if (j.contains("solution")) {
    const auto& sol = j.at("solution");
    reject_unknown_keys(sol, {"catalog", "value", "index", "pole", "poles", "weights", "id"}, "solution", errors);
    sc.solution_catalog = sol.value("catalog", "constant");
    sc.solution_value = sol.value("value", 1.0);
    sc.solution_index = sol.value("index", 0);
    if (sol.contains("pole")) sc.solution_poles.push_back(parse_point(sol.at("pole"), "solution.pole", errors));
    if (sol.contains("poles"))
      for (const auto& p : sol.at("poles")) sc.solution_poles.push_back(parse_point(p, "solution.poles[]", errors));
    if (sol.contains("weights")) sc.solution_weights = sol.at("weights").get<std::vector<double>>();
    sc.manufactured_id = sol.value("id", "");
    static const std::set<std::string> catalogs{"constant", "coordinate", "caloric_poly", "gaussian", "gaussian_sum",
                                                "manufactured"};
    if (!catalogs.count(sc.solution_catalog))
      errors.push_back("solution: unknown catalog '" + sc.solution_catalog + "'");
  }

  if (j.contains("pole"))
    sc.pole = parse_point(j.at("pole"), "pole", errors);
  else
    errors.push_back("scenario: missing 'pole'");

  if (j.contains("radii")) {
    sc.radii = j.at("radii").get<std::vector<double>>();
    for (double r : sc.radii)
      if (!(r > 0.0)) errors.push_back("radii: entries must be positive");
    std::sort(sc.radii.begin(), sc.radii.end());
    const auto last = std::unique(sc.radii.begin(), sc.radii.end());
    if (last != sc.radii.end()) {
      sc.radii.erase(last, sc.radii.end());
      sc.warnings.push_back("duplicate radii deduplicated");
    }
    if (sc.radii.empty()) errors.push_back("radii: list must not be empty");
  } else {
    errors.push_back("scenario: missing 'radii'");
  }

  sc.m = j.value("m", 3);
  if (sc.m < 0) errors.push_back("m: must be >= 0");
  sc.field_kind = j.value("field", "auto");
  if (sc.field_kind != "auto" && sc.field_kind != "exact" && sc.field_kind != "series")
    errors.push_back("field: must be auto, exact or series");

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    reject_unknown_keys(g,
                        {"sphere_resolution", "ball_resolution", "rho_nodes", "time_slabs", "series_k_max",
                         "series_time_nodes", "series_space_nodes", "series_horizon"},
                        "grid", errors);
    sc.sphere_resolution = g.value("sphere_resolution", sc.sphere_resolution);
    sc.ball_resolution = g.value("ball_resolution", sc.ball_resolution);
    sc.rho_nodes = g.value("rho_nodes", sc.rho_nodes);
    sc.time_slabs = g.value("time_slabs", sc.time_slabs);
    sc.series.k_max = g.value("series_k_max", sc.series.k_max);
    sc.series.time_nodes = g.value("series_time_nodes", sc.series.time_nodes);
    sc.series.space_nodes = g.value("series_space_nodes", sc.series.space_nodes);
    sc.series.horizon = g.value("series_horizon", sc.series.horizon);
  }

  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    reject_unknown_keys(t, {"mvf", "reproduction", "coarea"}, "tolerances", errors);
    sc.mvf_tolerance = t.value("mvf", sc.mvf_tolerance);
    sc.reproduction_tolerance = t.value("reproduction", sc.reproduction_tolerance);
    sc.coarea_tolerance = t.value("coarea", sc.coarea_tolerance);
    if (!(sc.mvf_tolerance > 0.0 && sc.reproduction_tolerance > 0.0 && sc.coarea_tolerance > 0.0))
      errors.push_back("tolerances: must be positive");
  }

  sc.seed = j.value("seed", sc.seed);
  if (j.contains("output")) {
    reject_unknown_keys(j.at("output"), {"dir", "diagnostics"}, "output", errors);
    sc.out_dir = j.at("output").value("dir", ".");
    sc.emit_diagnostics = j.at("output").value("diagnostics", false);
  }

  if (j.contains("pole") && j.contains("operator") && sc.pole.dim() != sc.dim)
    errors.push_back("pole: dimension does not match the operator");

  if (!errors.empty()) {
    std::string msg = "scenario validation failed:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw std::runtime_error(msg);
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json_text(ss.str());
}

// ---------------------------------------------------------------------------
// Catalogs
// ---------------------------------------------------------------------------

ParabolicOperator make_operator(const Scenario& sc) {
  ParabolicOperator op;
  op.dim = sc.dim;
  op.family = sc.op_family;
  op.lambda = sc.lambda;
  op.Lambda = sc.Lambda;
  op.holder_M = sc.holder_M;
  op.holder_alpha = sc.holder_alpha;
  const int n = sc.dim;

  if (sc.op_family == "heat") {
    op.a = [n](const SpaceTimePoint&) { return Mat::identity(n); };
    op.da = [n](const SpaceTimePoint&) { return Vec(n); };
  } else if (sc.op_family == "scaled_heat") {
    const double a = sc.scale_a;
    op.a = [n, a](const SpaceTimePoint&) { return a * Mat::identity(n); };
    op.da = [n](const SpaceTimePoint&) { return Vec(n); };
  } else if (sc.op_family == "diagonal") {
    Vec d(n);
    for (int i = 0; i < n && i < static_cast<int>(sc.diag.size()); ++i) d[i] = sc.diag[i];
    op.a = [d](const SpaceTimePoint&) { return Mat::diagonal(d); };
    op.da = [n](const SpaceTimePoint&) { return Vec(n); };
  } else if (sc.op_family == "trig_perturbed") {
    const double eps = sc.epsilon;
    op.a = [n, eps](const SpaceTimePoint& z) { return (1.0 + eps * std::sin(z.x[0])) * Mat::identity(n); };
    op.da = [n, eps](const SpaceTimePoint& z) {
      Vec d(n);
      d[0] = eps * std::cos(z.x[0]);  // d a_11 / d x_1; off-diagonal rows vanish
      return d;
    };
  } else {
    throw std::invalid_argument("make_operator: unknown family " + sc.op_family);
  }

  if (sc.has_b) {
    const Vec b0 = [&] {
      Vec b(n);
      for (int i = 0; i < n && i < static_cast<int>(sc.b_const.size()); ++i) b[i] = sc.b_const[i];
      return b;
    }();
    const double beta = sc.b_linear;
    op.b = [b0, beta](const SpaceTimePoint& z) {
      Vec b = b0;
      for (int i = 0; i < z.dim(); ++i) b[i] += beta * z.x[i];
      return b;
    };
    op.div_b = [beta, n](const SpaceTimePoint&) { return beta * n; };
  }
  if (sc.has_c) {
    const double c0 = sc.c_const;
    op.c = [c0](const SpaceTimePoint&) { return c0; };
  }
  return op;
}

namespace {

SolutionField gaussian_solution(const ParabolicOperator& op, const std::vector<SpaceTimePoint>& poles,
                                std::vector<double> weights) {
  if (poles.empty()) throw std::invalid_argument("gaussian solution: needs at least one pole");
  if (weights.empty()) weights.assign(poles.size(), 1.0);
  if (weights.size() != poles.size()) throw std::invalid_argument("gaussian solution: weights/poles mismatch");
  auto spec = std::make_shared<GaussianKernelSpec>(op.a(poles.front()));
  SolutionField u;
  u.name = "gaussian";
  u.value = [spec, poles, weights](const SpaceTimePoint& z) {
    double acc = 0.0;
    for (std::size_t i = 0; i < poles.size(); ++i) acc += weights[i] * spec->value(z, poles[i]);
    return acc;
  };
  u.grad = [spec, poles, weights](const SpaceTimePoint& z) {
    Vec g(z.dim());
    for (std::size_t i = 0; i < poles.size(); ++i) {
      Vec gi = spec->grad_x(z, poles[i]);
      gi *= weights[i];
      g += gi;
    }
    return g;
  };
  u.hess = [spec, poles, weights](const SpaceTimePoint& z) {
    Mat h(z.dim());
    for (std::size_t i = 0; i < poles.size(); ++i) {
      Mat hi = spec->hess_x(z, poles[i]);
      for (int a = 0; a < z.dim(); ++a)
        for (int b = 0; b < z.dim(); ++b) h(a, b) += weights[i] * hi(a, b);
    }
    return h;
  };
  u.dt = [spec, poles, weights](const SpaceTimePoint& z) {
    double acc = 0.0;
    for (std::size_t i = 0; i < poles.size(); ++i) acc += weights[i] * spec->dt(z, poles[i]);
    return acc;
  };
  return u;
}

SolutionField manufactured_solution(const std::string& id) {
  SolutionField u;
  u.name = "manufactured:" + id;
  if (id == "exp_sheet") {
    u.value = [](const SpaceTimePoint& z) { return std::exp(0.3 * z.x[0] + z.t); };
    u.grad = [](const SpaceTimePoint& z) {
      Vec g(z.dim());
      g[0] = 0.3 * std::exp(0.3 * z.x[0] + z.t);
      return g;
    };
    u.hess = [](const SpaceTimePoint& z) {
      Mat h(z.dim());
      h(0, 0) = 0.09 * std::exp(0.3 * z.x[0] + z.t);
      return h;
    };
    u.dt = [](const SpaceTimePoint& z) { return std::exp(0.3 * z.x[0] + z.t); };
  } else if (id == "sin_decay") {
    u.value = [](const SpaceTimePoint& z) { return std::sin(z.x[0]) * std::exp(-z.t); };
    u.grad = [](const SpaceTimePoint& z) {
      Vec g(z.dim());
      g[0] = std::cos(z.x[0]) * std::exp(-z.t);
      return g;
    };
    u.hess = [](const SpaceTimePoint& z) {
      Mat h(z.dim());
      h(0, 0) = -std::sin(z.x[0]) * std::exp(-z.t);
      return h;
    };
    u.dt = [](const SpaceTimePoint& z) { return -std::sin(z.x[0]) * std::exp(-z.t); };
  } else if (id == "quadratic_t") {
    u.value = [](const SpaceTimePoint& z) { return 1.0 + z.x[0] * z.x[0] + z.t * z.t; };
    u.grad = [](const SpaceTimePoint& z) {
      Vec g(z.dim());
      g[0] = 2.0 * z.x[0];
      return g;
    };
    u.hess = [](const SpaceTimePoint& z) {
      Mat h(z.dim());
      h(0, 0) = 2.0;
      return h;
    };
    u.dt = [](const SpaceTimePoint& z) { return 2.0 * z.t; };
  } else {
    throw std::invalid_argument("manufactured_solution: unknown id " + id);
  }
  return u;
}

bool constant_coefficient_family(const std::string& family) {
  return family == "heat" || family == "scaled_heat" || family == "diagonal";
}

}  // namespace

SolutionField make_solution(const Scenario& sc, const ParabolicOperator& op) {
  const int n = sc.dim;
  if (sc.solution_catalog == "constant") {
    SolutionField u;
    u.name = "constant";
    const double v = sc.solution_value;
    u.value = [v](const SpaceTimePoint&) { return v; };
    u.grad = [n](const SpaceTimePoint&) { return Vec(n); };
    u.hess = [n](const SpaceTimePoint&) { return Mat(n); };
    u.dt = [](const SpaceTimePoint&) { return 0.0; };
    return u;
  }
  if (sc.solution_catalog == "coordinate") {
    SolutionField u;
    u.name = "coordinate";
    const int i = sc.solution_index;
    if (i < 0 || i >= n) throw std::invalid_argument("coordinate solution: index out of range");
    u.value = [i](const SpaceTimePoint& z) { return z.x[i]; };
    u.grad = [i, n](const SpaceTimePoint&) {
      Vec g(n);
      g[i] = 1.0;
      return g;
    };
    u.hess = [n](const SpaceTimePoint&) { return Mat(n); };
    u.dt = [](const SpaceTimePoint&) { return 0.0; };
    return u;
  }
  if (sc.solution_catalog == "caloric_poly") {
    if (!constant_coefficient_family(sc.op_family))
      throw std::invalid_argument("caloric_poly requires a constant-coefficient family");
    SolutionField u;
    u.name = "caloric_poly";
    const int i = sc.solution_index;
    if (i < 0 || i >= n) throw std::invalid_argument("caloric_poly: index out of range");
    const double aii = op.a(sc.pole)(i, i);
    u.value = [i, aii](const SpaceTimePoint& z) { return z.x[i] * z.x[i] + 2.0 * aii * z.t; };
    u.grad = [i, n](const SpaceTimePoint& z) {
      Vec g(n);
      g[i] = 2.0 * z.x[i];
      return g;
    };
    u.hess = [i, n](const SpaceTimePoint&) {
      Mat h(n);
      h(i, i) = 2.0;
      return h;
    };
    u.dt = [aii](const SpaceTimePoint&) { return 2.0 * aii; };
    return u;
  }
  if (sc.solution_catalog == "gaussian" || sc.solution_catalog == "gaussian_sum") {
    if (!constant_coefficient_family(sc.op_family))
      throw std::invalid_argument("gaussian solutions require a constant-coefficient family");
    if (sc.has_b || sc.has_c) throw std::invalid_argument("gaussian solutions require b = c = 0");
    return gaussian_solution(op, sc.solution_poles, sc.solution_weights);
  }
  if (sc.solution_catalog == "manufactured") return manufactured_solution(sc.manufactured_id);
  throw std::invalid_argument("make_solution: unknown catalog " + sc.solution_catalog);
}

std::unique_ptr<SolutionField> make_forcing(const Scenario& sc, const ParabolicOperator& op) {
  const bool exact_caloric = constant_coefficient_family(sc.op_family) && !sc.has_b && !sc.has_c &&
                             (sc.solution_catalog == "constant" || sc.solution_catalog == "coordinate" ||
                              sc.solution_catalog == "caloric_poly" || sc.solution_catalog == "gaussian" ||
                              sc.solution_catalog == "gaussian_sum");
  if (exact_caloric) return nullptr;

  auto u = std::make_shared<SolutionField>(make_solution(sc, op));
  auto f = std::make_unique<SolutionField>();
  f->name = "forcing(L u)";
  const ParabolicOperator op_copy = op;
  f->value = [u, op_copy](const SpaceTimePoint& z) { return apply_operator(op_copy, *u, z); };
  return f;
}

std::unique_ptr<GammaField> make_field(const Scenario& sc, const ParabolicOperator& op, const SpaceTimePoint& pole) {
  std::string kind = sc.field_kind;
  if (kind == "auto") kind = constant_coefficient_family(sc.op_family) ? "exact" : "series";
  if (kind == "exact") {
    if (!constant_coefficient_family(sc.op_family))
      throw std::invalid_argument("make_field: exact fields require constant coefficients");
    if (sc.b_linear != 0.0)
      throw std::invalid_argument("make_field: exact fields support constant drift only");
    Vec drift(sc.dim);
    for (int i = 0; i < sc.dim && i < static_cast<int>(sc.b_const.size()); ++i) drift[i] = sc.b_const[i];
    const double rate = sc.has_c ? sc.c_const : 0.0;
    return std::make_unique<ConstantGammaField>(op.a(pole), drift, rate, pole);
  }
  return std::make_unique<SeriesGammaField>(op, pole, sc.series);
}

FieldFactory make_field_factory(const Scenario& sc, const ParabolicOperator& op) {
  return [sc, op](const SpaceTimePoint& pole) { return make_field(sc, op, pole); };
}

// ---------------------------------------------------------------------------
// Run report
// ---------------------------------------------------------------------------

bool RunReport::any_failure() const {
  for (const auto& c : checks)
    if (c.status == "fail" || c.status == "error") return true;
  return false;
}

std::string RunReport::to_json() const {
  json j;
  j["scenario"] = scenario_name;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["grid_sizes"] = grid_sizes;
  j["wall_seconds"] = wall_seconds;
  j["checks"] = json::array();
  for (const auto& c : checks) {
    json jc;
    jc["check"] = c.check;
    jc["name"] = c.name;
    jc["status"] = c.status;
    if (!c.message.empty()) jc["message"] = c.message;
    jc["metrics"] = c.metrics;
    j["checks"].push_back(jc);
  }
  return j.dump(2);
}

std::string RunReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "check,name,status,metric,value\n";
  for (const auto& c : checks) {
    if (c.metrics.empty()) {
      os << c.check << "," << c.name << "," << c.status << ",,\n";
      continue;
    }
    for (const auto& [k, v] : c.metrics) os << c.check << "," << c.name << "," << c.status << "," << k << "," << v << "\n";
  }
  return os.str();
}

std::uint64_t config_hash(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["family"] = sc.op_family;
  j["dim"] = sc.dim;
  j["lambda"] = sc.lambda;
  j["Lambda"] = sc.Lambda;
  j["holder"] = {sc.holder_M, sc.holder_alpha};
  j["a"] = sc.scale_a;
  j["diag"] = sc.diag;
  j["epsilon"] = sc.epsilon;
  j["b"] = sc.b_const;
  j["b_linear"] = sc.b_linear;
  j["c"] = sc.c_const;
  j["catalog"] = sc.solution_catalog;
  j["value"] = sc.solution_value;
  j["index"] = sc.solution_index;
  j["id"] = sc.manufactured_id;
  j["pole_t"] = sc.pole.t;
  std::vector<double> px;
  for (int i = 0; i < sc.pole.dim(); ++i) px.push_back(sc.pole.x[i]);
  j["pole_x"] = px;
  j["radii"] = sc.radii;
  j["m"] = sc.m;
  j["field"] = sc.field_kind;
  j["grids"] = {sc.sphere_resolution, sc.ball_resolution, sc.rho_nodes, sc.time_slabs};
  j["tols"] = {sc.mvf_tolerance, sc.reproduction_tolerance, sc.coarea_tolerance};
  j["seed"] = sc.seed;
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::vector<std::string>& valid_selectors() {
  static const std::vector<std::string> selectors{"hypotheses", "gamma",   "geometry",     "mvf",
                                                  "extended-mvf", "harnack", "chain",        "coarea",
                                                  "maxprinciple", "all"};
  return selectors;
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

namespace {

void add_check(RunReport& rep, CheckResult c) { rep.checks.push_back(std::move(c)); }

template <typename Fn>
void guarded(RunReport& rep, const std::string& check, const std::string& name, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    CheckResult c;
    c.check = check;
    c.name = name;
    c.status = "error";
    c.message = e.what();
    add_check(rep, std::move(c));
  }
}

void run_hypotheses(const Scenario& sc, const ParabolicOperator& op, RunReport& rep) {
  std::vector<SpaceTimePoint> samples;
  const int n = sc.dim;
  for (int i = -2; i <= 2; ++i)
    for (int k = 0; k <= 4; ++k) {
      SpaceTimePoint z = sc.pole;
      z.x[0] = sc.pole.x[0] + i;
      if (n >= 2) z.x[1] = sc.pole.x[1] + (i % 2);
      z.t = sc.pole.t - 0.25 * k;
      samples.push_back(z);
    }
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) {
    Vec e(n);
    e[i] = 1.0;
    dirs.push_back(e);
  }
  dirs.push_back(Vec(n, 1.0));
  const HypothesisReport hr = verify_hypotheses(op, samples, dirs);
  CheckResult c;
  c.check = "hypotheses";
  c.name = sc.op_family;
  c.status = hr.all_ok() ? "pass" : "fail";
  c.metrics["worst_asymmetry"] = hr.worst_asymmetry;
  c.metrics["worst_lower_violation"] = hr.worst_lower_violation;
  c.metrics["worst_upper_violation"] = hr.worst_upper_violation;
  c.metrics["worst_coeff_bound_violation"] = hr.worst_coeff_bound_violation;
  for (const auto& hq : hr.holder) c.metrics["holder_" + hq.field] = hq.worst;
  add_check(rep, std::move(c));
}

void run_gamma(const Scenario& sc, const ParabolicOperator& op, RunReport& rep) {
  const auto field = make_field(sc, op, sc.pole);

  if (dynamic_cast<const ConstantGammaField*>(field.get())) {
    const auto& cf = static_cast<const ConstantGammaField&>(*field);
    const double t0 = sc.pole.t;
    const struct {
      double t, s, tau;
    } configs[3] = {{t0, t0 - 0.5, t0 - 1.0}, {t0, t0 - 0.05, t0 - 0.15}, {t0 + 0.3, t0, t0 - 1.3}};
    int idx = 0;
    for (const auto& cfg3 : configs) {
      SpaceTimePoint z = sc.pole, zeta = sc.pole;
      z.t = cfg3.t;
      zeta.t = cfg3.tau;
      const ReproductionResult rr = check_reproduction(cf.spec(), z, zeta, cfg3.s);
      CheckResult c;
      c.check = "gamma";
      c.name = "reproduction_" + std::to_string(idx++);
      c.status = rr.residual < sc.reproduction_tolerance ? "pass" : "fail";
      c.metrics["residual"] = rr.residual;
      c.metrics["tail_bound"] = rr.tail_bound;
      add_check(rep, std::move(c));
    }
  } else if (auto* sf = dynamic_cast<const SeriesGammaField*>(field.get())) {
    std::vector<SpaceTimePoint> samples;
    for (int i = 0; i <= 8; ++i)
      for (int k = 1; k <= 6; ++k)
        samples.push_back(SpaceTimePoint{Vec{sc.pole.x[0] - 1.0 + 0.25 * i}, sc.pole.t - 0.05 - 0.12 * k});
    const PdeResidualReport pr = check_pde_residual(*sf, op, samples);
    CheckResult c;
    c.check = "gamma";
    c.name = "pde_residual_decay";
    c.status = pr.monotone_decreasing ? "pass" : "fail";
    for (std::size_t k = 0; k < pr.max_residual_by_k.size(); ++k)
      c.metrics["residual_k" + std::to_string(k)] = pr.max_residual_by_k[k];
    add_check(rep, std::move(c));

    if (sc.emit_diagnostics) {
      std::ofstream csv(sc.out_dir + "/series_diagnostics.csv");
      csv.precision(17);
      csv << "k,sup_bound,empirical_max,residual\n";
      const double c_tilde = sf->fitted_c_tilde();
      for (std::size_t k = 0; k < pr.max_residual_by_k.size(); ++k) {
        const double sup_bound = k == 0 ? 0.0 : tail_bound(static_cast<int>(k), 0.5, op.holder_alpha, c_tilde) -
                                                    tail_bound(static_cast<int>(k) + 1, 0.5, op.holder_alpha, c_tilde);
        double emp = 0.0;
        for (const auto& z : samples)
          emp = std::max(emp, std::abs(sf->value_truncated(z, static_cast<int>(k)) -
                                       (k == 0 ? 0.0 : sf->value_truncated(z, static_cast<int>(k) - 1))));
        csv << k << "," << sup_bound << "," << emp << "," << pr.max_residual_by_k[k] << "\n";
      }
    }

    const DiagonalRatioReport dr = check_diagonal_ratio(*field, op, 0.5, samples);
    CheckResult c2;
    c2.check = "gamma";
    c2.name = "diagonal_ratio";
    c2.status = dr.found ? "report" : "fail";
    c2.metrics["c_eta"] = dr.c_eta;
    c2.metrics["worst_low"] = dr.worst_ratio_low;
    c2.metrics["worst_high"] = dr.worst_ratio_high;
    c2.metrics["fitted_c_tilde"] = sf->fitted_c_tilde();
    add_check(rep, std::move(c2));
  }

  const GlobalBoundsReport gb = check_global_bounds(*field, op, {}, {0.1, 0.5});
  CheckResult c;
  c.check = "gamma";
  c.name = "mass_bounds";
  c.status = gb.mass_ok ? "pass" : "fail";
  for (const auto& row : gb.mass) c.metrics["mass_gap_" + std::to_string(row.gap)] = row.mass;
  add_check(rep, std::move(c));
}

void run_geometry(const Scenario& sc, const ParabolicOperator& op, RunReport& rep) {
  const auto field = make_field(sc, op, sc.pole);
  for (double r : sc.radii) {
    const ParabolicBall ball = extract_ball(*field, r, std::min(sc.ball_resolution, 200), 0);
    CheckResult c;
    c.check = "geometry";
    c.name = "ball_r" + std::to_string(r);
    c.status = "report";
    c.metrics["depth"] = ball.region().depth;
    c.metrics["interior_nodes"] = static_cast<double>(ball.interior_count());
    add_check(rep, std::move(c));
  }
  if (sc.dim == 1) {
    const InclusionReport ir = check_inclusion_lemma(op, *field, sc.radii, 160);
    CheckResult c;
    c.check = "geometry";
    c.name = "inclusion_lemma";
    c.status = ir.r_hat > 0.0 ? "pass" : "fail";
    c.metrics["r_hat"] = ir.r_hat;
    for (const auto& row : ir.rows) {
      c.metrics["inner_ok_r" + std::to_string(row.r)] = row.inner_ok ? 1.0 : 0.0;
      c.metrics["outer_ok_r" + std::to_string(row.r)] = row.outer_ok ? 1.0 : 0.0;
    }
    add_check(rep, std::move(c));
  }
  // Gradient estimate over interior samples of the smallest ball.
  const double r = sc.radii.front();
  const ParabolicBall ball = extract_ball(*field, r, 120, 0);
  std::vector<SpaceTimePoint> samples;
  for (int it = 1; it <= ball.nt(); it += 7)
    for (int ix = 0; ix <= ball.nx(); ix += 7)
      if (ball.interior(it, ix)) samples.push_back(ball.node(it, ix));
  const GradientEstimateReport gr = check_gradient_estimate(*field, r, samples);
  CheckResult c;
  c.check = "geometry";
  c.name = "gradient_estimate";
  c.status = "report";
  c.metrics["fitted_c"] = gr.fitted_c;
  c.metrics["samples"] = static_cast<double>(gr.samples);
  add_check(rep, std::move(c));
}

void run_mvf(const Scenario& sc, const ParabolicOperator& op, RunReport& rep, bool extended) {
  const auto field = make_field(sc, op, sc.pole);
  const SolutionField u = make_solution(sc, op);
  const auto f = make_forcing(sc, op);
  KernelEvaluator ev(*field, op);
  MeanValueConfig cfg;
  cfg.sphere_resolution = sc.sphere_resolution;
  cfg.ball_resolution = sc.ball_resolution;
  cfg.rho_nodes = sc.rho_nodes;
  cfg.quad.time_slabs = sc.time_slabs;
  std::ofstream results;
  if (sc.emit_diagnostics) {
    results.open(sc.out_dir + (extended ? "/extended_mvf_results.csv" : "/mvf_results.csv"));
    results.precision(17);
    results << "formula,r,m,u0,kernel_term,f_term,drift_term,residual\n";
  }
  if (sc.emit_diagnostics) {
    // eps-cut trace of the kernel-mass integral at the first radius.
    const double r0 = sc.radii.front();
    const BallRegion reg = make_ball_region(*field, r0, extended ? sc.m : 0);
    const Integrand probe = extended ? Integrand([&](const SpaceTimePoint& z) {
      return ev.kernel_extended(z, r0, sc.m).m_rm;
    })
                                     : Integrand([&](const SpaceTimePoint& z) { return ev.kernel_M(z); });
    const VolumeResult vr = volume_integral(reg, probe, cfg.quad);
    std::ofstream csv(sc.out_dir + "/volume_diagnostics.csv");
    csv.precision(17);
    csv << "epsilon_k,I_k,increment,extrapolated\n";
    for (std::size_t i = 0; i < vr.eps.size(); ++i) {
      const double inc = i == 0 ? 0.0 : std::abs(vr.i_eps[i] - vr.i_eps[i - 1]);
      csv << vr.eps[i] << "," << vr.i_eps[i] << "," << inc << "," << vr.value << "\n";
    }
  }
  for (double r : sc.radii) {
    const auto push = [&](const MeanValueReport& mr) {
      CheckResult c;
      c.check = extended ? "extended-mvf" : "mvf";
      c.name = mr.formula + "_r" + std::to_string(r);
      const double tol = sc.mvf_tolerance * std::max(1.0, std::abs(mr.u0));
      c.status = std::abs(mr.residual) <= tol ? "pass" : "fail";
      c.metrics["u0"] = mr.u0;
      c.metrics["kernel_term"] = mr.kernel_term;
      c.metrics["f_term"] = mr.f_term;
      c.metrics["drift_term"] = mr.drift_term;
      c.metrics["residual"] = mr.residual;
      add_check(rep, c);
      if (results.is_open())
        results << mr.formula << "," << mr.r << "," << mr.m << "," << mr.u0 << "," << mr.kernel_term << ","
                << mr.f_term << "," << mr.drift_term << "," << mr.residual << "\n";
    };
    if (extended) {
      push(extended_mean_value(u, f.get(), op, ev, r, sc.m, cfg));
      CheckResult c;
      c.check = "extended-mvf";
      c.name = "kernel_sup_r" + std::to_string(r);
      c.status = "report";
      c.metrics["sup_M_rm"] = extended_kernel_sup(ev, r, sc.m, 200);
      add_check(rep, std::move(c));
    } else {
      push(surface_mean_value(u, f.get(), op, ev, r, cfg));
      push(volume_mean_value(u, f.get(), op, ev, r, cfg));
    }
  }
}

void run_harnack(const Scenario& sc, const ParabolicOperator& op, RunReport& rep, bool chains_only) {
  const auto factory = make_field_factory(sc, op);
  const auto field = make_field(sc, op, sc.pole);

  // The Harnack statements need a nonnegative solution that is positive at
  // the pole; skip (with reason) when the scenario's solution is not.
  {
    const SolutionField probe = make_solution(sc, op);
    if (!(probe.value(sc.pole) > 0.0)) {
      CheckResult c;
      c.check = chains_only ? "chain" : "harnack";
      c.name = "suite";
      c.status = "skipped";
      c.message = "scenario solution is not positive at the pole; Harnack checks need u >= 0 with u(z0) > 0";
      add_check(rep, std::move(c));
      return;
    }
  }

  HarnackConstants hc = compute_constants(op, factory, sc.pole, sc.m, sc.radii, 220);
  fit_slice_constants(op, factory, sc.pole, sc.radii.front(), 160, hc);
  hc.r1 = 0.5;

  if (!chains_only) {
    CheckResult c;
    c.check = "harnack";
    c.name = "constants";
    c.status = "report";
    c.metrics["M_plus"] = hc.m_plus;
    c.metrics["m_minus"] = hc.m_minus;
    c.metrics["theta"] = hc.theta;
    c.metrics["C_K"] = hc.c_k;
    c.metrics["kappa1"] = hc.kappa1;
    c.metrics["theta1"] = hc.theta1;
    c.metrics["C_D"] = hc.c_d;
    add_check(rep, std::move(c));

    const SolutionField u = make_solution(sc, op);
    for (double r : sc.radii) {
      const BallHarnackReport br = harnack_ball_check(u, *field, r, sc.m, op.lambda, hc, 260);
      CheckResult cb;
      cb.check = "harnack";
      cb.name = "ball_r" + std::to_string(r);
      cb.status = br.within ? "pass" : "fail";
      cb.metrics["ratio"] = br.ratio;
      cb.metrics["C_K"] = br.c_k;
      cb.metrics["points"] = static_cast<double>(br.points);
      add_check(rep, std::move(cb));
    }
  }

  // Seeded endpoint pairs in normalized Q^- x Q^+ coordinates.
  Cylinder lower{sc.pole, sc.radii.back(), CylinderKind::Lower};
  Cylinder upper{sc.pole, sc.radii.back(), CylinderKind::Upper};
  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>> pairs;
  for (int i = 0; i < 20; ++i) {
    SpaceTimePoint zp{Vec(sc.dim), 0.0}, zm{Vec(sc.dim), 0.0};
    zp.x[0] = upper.theta * uni(rng);
    zm.x[0] = lower.theta * uni(rng);
    zp.t = -upper.iota * 0.5 * (uni(rng) + 1.0) * 0.98 - 1e-3;
    zm.t = -lower.kappa - (lower.mu - lower.kappa) * 0.5 * (uni(rng) + 1.0) * 0.98 - 1e-6;
    pairs.emplace_back(zp, zm);
  }
  if (sc.emit_diagnostics) {
    std::ofstream csv(sc.out_dir + "/chains.csv");
    csv.precision(17);
    csv << "chain,j,x1,t\n";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const HarnackChain chain = build_chain(pairs[i].first, pairs[i].second, 0.5, hc.kappa1, hc.theta1);
      for (std::size_t jj = 0; jj < chain.points.size(); ++jj)
        csv << i << "," << jj << "," << chain.points[jj].x[0] << "," << chain.points[jj].t << "\n";
    }
  }
  const SolutionField u = make_solution(sc, op);
  const InvariantHarnackReport ir =
      invariant_harnack_check(u, sc.pole, sc.radii.back(), lower, upper, hc, pairs, 60);
  CheckResult c;
  c.check = chains_only ? "chain" : "harnack";
  c.name = "invariant";
  c.status = (ir.within && ir.all_chains_ok) ? "pass" : "fail";
  c.metrics["log_ratio"] = ir.log_ratio;
  c.metrics["log_C_H"] = ir.log_c_h;
  c.metrics["chains"] = static_cast<double>(ir.chains.size());
  c.metrics["r0"] = ir.r0;
  add_check(rep, std::move(c));
}

void run_coarea(const Scenario& sc, const ParabolicOperator& op, RunReport& rep) {
  if (sc.dim != 1) return;
  const auto field = make_field(sc, op, sc.pole);
  Box box;
  box.x_lo = Vec{sc.pole.x[0] - 0.6};
  box.x_hi = Vec{sc.pole.x[0] + 0.6};
  box.t_hi = sc.pole.t - 0.05;
  box.t_lo = sc.pole.t - 0.45;
  std::vector<double> levels;
  double gmin = 1e300, gmax = -1e300;
  for (int i = 0; i <= 40; ++i)
    for (int k = 0; k <= 40; ++k) {
      SpaceTimePoint z{Vec{box.x_lo[0] + 1.2 * i / 40.0}, box.t_lo + (box.t_hi - box.t_lo) * k / 40.0};
      const double v = field->value(z);
      gmin = std::min(gmin, v);
      gmax = std::max(gmax, v);
    }
  for (int i = 0; i <= 400; ++i) levels.push_back(gmin + (gmax - gmin) * i / 400.0);
  QuadratureConfig qc;
  const CoareaReport cr = coarea_check([&](const SpaceTimePoint& z) { return field->value(z); },
                                       [&](const SpaceTimePoint& z) { return field->grad_xt_norm(z); },
                                       [](const SpaceTimePoint&) { return 1.0; }, box, levels, qc);
  CheckResult c;
  c.check = "coarea";
  c.name = "two_route";
  c.status = cr.relative_discrepancy <= sc.coarea_tolerance ? "pass" : "fail";
  c.metrics["lhs"] = cr.lhs;
  c.metrics["rhs"] = cr.rhs;
  c.metrics["discrepancy"] = cr.relative_discrepancy;
  add_check(rep, std::move(c));
}

void run_maxprinciple(const Scenario& sc, const ParabolicOperator& op, RunReport& rep) {
  if (sc.dim != 1) return;
  // Dumbbell: two boxes joined by a thin neck at one time level.
  DomainGrid dumbbell;
  dumbbell.box = Box{Vec{-1.0}, Vec{1.0}, -1.0, 0.0};
  dumbbell.nx = 120;
  dumbbell.inside = [](const SpaceTimePoint& z) {
    if (z.t > -0.45 || z.t < -0.55) return true;
    return std::abs(z.x[0]) < 0.08;  // neck
  };
  const SpaceTimePoint src{Vec{0.0}, 0.0};
  const AttainableRegion base = reachable_set(dumbbell, src, 1.0, 0.05);
  const AttainableRegion faster = reachable_set(dumbbell, src, 2.0, 0.05);
  const AttainableRegion finer = reachable_set(dumbbell, src, 1.0, 0.025);
  CheckResult c;
  c.check = "maxprinciple";
  c.name = "reachable_monotonicity";
  const bool mono_v = base.subset_of(faster);
  std::size_t finer_count = 0;
  for (int row = 0; row < base.rows; ++row)
    for (int ix = 0; ix <= base.nx; ++ix)
      if (base.reachable(row, ix) && finer.reachable(2 * row, ix)) ++finer_count;
  const bool mono_d = finer_count == base.count();
  c.status = (mono_v && mono_d) ? "pass" : "fail";
  c.metrics["base_count"] = static_cast<double>(base.count());
  c.metrics["faster_count"] = static_cast<double>(faster.count());
  add_check(rep, std::move(c));

  // Constant solution: exact SMP equality case.
  Scenario cs = sc;
  cs.solution_catalog = "constant";
  cs.solution_value = 5.0;
  const SolutionField u = make_solution(cs, op);
  const MaxPrincipleReport mp = check_strong_max_principle(u, nullptr, op, base, dumbbell,
                                                           MaxPrincipleMode::InteriorMax, 1e-12);
  CheckResult c2;
  c2.check = "maxprinciple";
  c2.name = "constant_solution";
  c2.status = (mp.preconditions_hold && mp.conclusion_holds) ? "pass" : "fail";
  c2.metrics["worst_u_deviation"] = mp.worst_u_deviation;
  add_check(rep, std::move(c2));

  // Propagation-step deficit for the constant solution.
  const auto field = make_field(sc, op, sc.pole);
  KernelEvaluator ev(*field, op);
  MeanValueConfig mcfg;
  mcfg.quad.time_slabs = 80;
  const PropagationStepReport pr = mvf_propagation_step(u, nullptr, op, ev, sc.radii.front(), mcfg);
  CheckResult c3;
  c3.check = "maxprinciple";
  c3.name = "constant_deficit";
  c3.status = std::abs(pr.deficit) < 1e-10 ? "pass" : "fail";
  c3.metrics["deficit"] = pr.deficit;
  add_check(rep, std::move(c3));
}

}  // namespace

RunReport run(const Scenario& sc, const std::string& selector) {
  const auto& sels = valid_selectors();
  if (std::find(sels.begin(), sels.end(), selector) == sels.end()) {
    std::string msg = "unknown selector '" + selector + "'; valid selectors:";
    for (const auto& s : sels) msg += " " + s;
    throw std::invalid_argument(msg);
  }
  const auto t_start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.scenario_name = sc.name;
  rep.config_hash = config_hash(sc);
  rep.seed = sc.seed;
  rep.grid_sizes = {{"sphere_resolution", sc.sphere_resolution},
                    {"ball_resolution", sc.ball_resolution},
                    {"rho_nodes", sc.rho_nodes},
                    {"time_slabs", sc.time_slabs}};
  const ParabolicOperator op = make_operator(sc);

  const auto want = [&](const std::string& s) { return selector == "all" || selector == s; };
  if (want("hypotheses")) guarded(rep, "hypotheses", sc.op_family, [&] { run_hypotheses(sc, op, rep); });
  if (want("gamma")) guarded(rep, "gamma", "field", [&] { run_gamma(sc, op, rep); });
  if (want("geometry")) guarded(rep, "geometry", "levelsets", [&] { run_geometry(sc, op, rep); });
  if (want("mvf")) guarded(rep, "mvf", "formulas", [&] { run_mvf(sc, op, rep, false); });
  if (want("extended-mvf")) guarded(rep, "extended-mvf", "formulas", [&] { run_mvf(sc, op, rep, true); });
  if (want("harnack")) guarded(rep, "harnack", "suite", [&] { run_harnack(sc, op, rep, false); });
  if (selector == "chain") guarded(rep, "chain", "suite", [&] { run_harnack(sc, op, rep, true); });
  if (want("coarea")) guarded(rep, "coarea", "two_route", [&] { run_coarea(sc, op, rep); });
  if (want("maxprinciple")) guarded(rep, "maxprinciple", "suite", [&] { run_maxprinciple(sc, op, rep); });

  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

void emit_levelset_plot(const Scenario& sc, const std::vector<double>& r_list, const std::string& path_prefix) {
  if (sc.dim != 1) throw std::invalid_argument("emit_levelset_plot: N = 1 only");
  if (r_list.empty()) throw std::invalid_argument("emit_levelset_plot: empty radius list");
  const ParabolicOperator op = make_operator(sc);
  const auto field = make_field(sc, op, sc.pole);

  // Ordered profiles by slicing: left branch down, right branch up.
  struct Profile {
    std::vector<std::pair<double, double>> pts;  // (x, t)
  };
  std::vector<Profile> profiles;
  double x_span = 0.0, t_span = 0.0;
  for (double r : r_list) {
    const BallRegion reg = make_ball_region(*field, r, 0);
    Profile prof;
    const int ns = 220;
    std::vector<std::pair<double, double>> left, right;
    for (int i = 1; i < ns; ++i) {
      const double s = reg.depth * i / ns;
      const double t = sc.pole.t - s;
      // Scan for the interior interval on this slice.
      const double half = reg.x_hi[0] - sc.pole.x[0];
      const int scan = 160;
      double a = 0, b = 0;
      bool found = false;
      for (int k = 0; k <= scan; ++k) {
        const double x = sc.pole.x[0] - half + 2.0 * half * k / scan;
        if (reg.interior(SpaceTimePoint{Vec{x}, t})) {
          if (!found) a = x;
          b = x;
          found = true;
        }
      }
      if (!found) continue;
      left.emplace_back(a, t);
      right.emplace_back(b, t);
    }
    prof.pts.emplace_back(sc.pole.x[0], sc.pole.t);
    for (const auto& p : left) prof.pts.push_back(p);
    for (auto it = right.rbegin(); it != right.rend(); ++it) prof.pts.push_back(*it);
    prof.pts.emplace_back(sc.pole.x[0], sc.pole.t);
    profiles.push_back(prof);
    x_span = std::max(x_span, reg.x_hi[0] - reg.x_lo[0]);
    t_span = std::max(t_span, reg.depth);

    // Mesh CSV with normals and weights.
    const LevelSurfaceMesh mesh = extract_sphere(*field, r, 300);
    std::ofstream csv(path_prefix + "_r" + std::to_string(r) + ".csv");
    csv.precision(17);
    csv << "t,x1,nu_t,nu_x1,weight,critical_flag\n";
    for (const auto& p : mesh.points)
      csv << p.p.t << "," << p.p.x[0] << "," << p.normal_t << "," << p.normal_x[0] << "," << p.weight << ","
          << (p.near_critical ? 1 : 0) << "\n";
  }

  // Minimal SVG, pole at the top.
  const double w = 640.0, h = 480.0, pad = 30.0;
  std::ofstream svg(path_prefix + ".svg");
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "' viewBox='0 0 " << w << " "
      << h << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  const char* colors[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    svg << "<polyline fill='none' stroke='" << colors[i % 5] << "' stroke-width='1.5' points='";
    for (const auto& [x, t] : profiles[i].pts) {
      const double sx = pad + (x - (sc.pole.x[0] - 0.5 * x_span)) / x_span * (w - 2 * pad);
      const double sy = pad + (sc.pole.t - t) / t_span * (h - 2 * pad);
      svg << sx << "," << sy << " ";
    }
    svg << "'/>\n";
  }
  svg << "<circle cx='" << (pad + 0.5 * (w - 2 * pad)) << "' cy='" << pad << "' r='3' fill='black'/>\n</svg>\n";
}

}  // namespace pmvf
