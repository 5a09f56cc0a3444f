#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pmvf/harnack.hpp"
#include "pmvf/parametrix_series.hpp"
#include "pmvf/propagation.hpp"

namespace pmvf {

// Parsed scenario file: operator family + parameters, solution catalog
// entry, pole, radius list, grids, tolerances, seed, output paths.
struct Scenario {
  std::string name;

  std::string op_family;  // heat | scaled_heat | diagonal | trig_perturbed
  int dim = 1;
  double lambda = 1.0, Lambda = 1.5;
  double holder_M = 0.0, holder_alpha = 1.0;
  double scale_a = 1.0;             // scaled_heat
  std::vector<double> diag;         // diagonal
  double epsilon = 0.1;             // trig_perturbed
  std::vector<double> b_const;      // optional constant drift
  double b_linear = 0.0;            // optional b(x) = beta x
  double c_const = 0.0;             // optional zero-order coefficient
  bool has_b = false, has_c = false;

  std::string solution_catalog = "constant";  // constant | coordinate |
                                              // caloric_poly | gaussian |
                                              // gaussian_sum | manufactured
  double solution_value = 1.0;
  int solution_index = 0;
  std::vector<SpaceTimePoint> solution_poles;
  std::vector<double> solution_weights;
  std::string manufactured_id;  // exp_sheet | sin_decay | quadratic_t

  SpaceTimePoint pole;
  std::vector<double> radii;
  int m = 3;
  std::string field_kind = "auto";  // exact | series | auto

  int sphere_resolution = 420;
  int ball_resolution = 300;
  int rho_nodes = 48;
  int time_slabs = 160;
  SeriesConfig series;

  double mvf_tolerance = 1e-3;
  double reproduction_tolerance = 1e-8;
  double coarea_tolerance = 1e-2;

  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  std::string out_dir = ".";
  bool emit_diagnostics = false;  // per-module CSV side outputs under out_dir
  std::vector<std::string> warnings;  // e.g. deduplicated radii
};

// Strict parse: unknown keys rejected, all validation violations listed.
Scenario load_scenario(const std::string& path);
Scenario scenario_from_json_text(const std::string& text);

ParabolicOperator make_operator(const Scenario& sc);
// u from the catalog; for "manufactured" the forcing f := L u is derived.
SolutionField make_solution(const Scenario& sc, const ParabolicOperator& op);
// f such that L u = f (null when u is exactly caloric for the operator).
std::unique_ptr<SolutionField> make_forcing(const Scenario& sc, const ParabolicOperator& op);

std::unique_ptr<GammaField> make_field(const Scenario& sc, const ParabolicOperator& op, const SpaceTimePoint& pole);
FieldFactory make_field_factory(const Scenario& sc, const ParabolicOperator& op);

struct CheckResult {
  std::string check;
  std::string name;
  std::string status;  // pass | fail | report | error
  std::map<std::string, double> metrics;
  std::string message;
};

struct RunReport {
  std::string scenario_name;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> grid_sizes;
  std::vector<CheckResult> checks;
  double wall_seconds = 0.0;

  bool any_failure() const;
  std::string to_json() const;  // includes wall clock
  std::string to_csv() const;   // clock-free, byte-stable for fixed seed
};

// Valid selectors: hypotheses, gamma, geometry, mvf, extended-mvf, harnack,
// chain, maxprinciple, coarea, all.
const std::vector<std::string>& valid_selectors();

RunReport run(const Scenario& sc, const std::string& selector);

// Fig.-style SVG of nested sphere profiles (N = 1) plus one CSV per radius.
void emit_levelset_plot(const Scenario& sc, const std::vector<double>& r_list, const std::string& path_prefix);

std::uint64_t config_hash(const Scenario& sc);

}  // namespace pmvf
