// Command-line front end: runs scenario checks and emits reports/plots.
//
//   pmvf <subcommand> --scenario <path> [--out <dir>] [--seed <u64>]
//                     [--threads <n>] [--check <selector>]
//
// Exit codes: 0 all checks pass, 1 at least one check failed, 2 bad
// configuration (unparsable scenario, unknown selector, ...).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "pmvf/scenario.hpp"

namespace {

struct CliOptions {
  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  std::string check_selector;
};

int run_selector(const CliOptions& opt, const std::string& selector) {
  pmvf::Scenario sc = pmvf::load_scenario(opt.scenario_path);
  if (opt.seed_set) sc.seed = opt.seed;
  if (!opt.out_dir.empty()) sc.out_dir = opt.out_dir;
  for (const auto& w : sc.warnings) std::cerr << "warning: " << w << "\n";

  const pmvf::RunReport rep = pmvf::run(sc, selector);
  std::filesystem::create_directories(sc.out_dir);
  {
    std::ofstream js(sc.out_dir + "/report.json");
    js << rep.to_json() << "\n";
  }
  {
    std::ofstream cs(sc.out_dir + "/report.csv");
    cs << rep.to_csv();
  }
  for (const auto& c : rep.checks)
    std::cout << "[" << c.status << "] " << c.check << "/" << c.name
              << (c.message.empty() ? "" : ": " + c.message) << "\n";
  return rep.any_failure() ? 1 : 0;
}

int run_plot(const CliOptions& opt) {
  pmvf::Scenario sc = pmvf::load_scenario(opt.scenario_path);
  if (!opt.out_dir.empty()) sc.out_dir = opt.out_dir;
  std::filesystem::create_directories(sc.out_dir);
  pmvf::emit_levelset_plot(sc, sc.radii, sc.out_dir + "/levelset");
  std::cout << "wrote " << sc.out_dir << "/levelset.svg\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parabolic mean value formula verification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  CliOptions opt;
  app.add_option("--scenario", opt.scenario_path, "scenario file (JSON)")->required();
  app.add_option("--out", opt.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", opt.seed, "override the scenario seed");
  app.add_option("--threads", opt.threads, "worker threads (reserved; checks are deterministic)");
  app.add_option("--check", opt.check_selector, "check selector for 'all'");

  const std::map<std::string, std::string> subcommands = {
      {"verify-hypotheses", "hypotheses"}, {"build-gamma", "gamma"},
      {"plot-ball", "plot"},               {"verify-mvf", "mvf"},
      {"verify-extended-mvf", "extended-mvf"}, {"verify-harnack", "harnack"},
      {"build-chain", "chain"},            {"verify-maxprinciple", "maxprinciple"},
      {"coarea-check", "coarea"},          {"all", "all"}};
  for (const auto& [name, selector] : subcommands) {
    auto* sub = app.add_subcommand(name);
    sub->callback([&, selector] {
      opt.seed_set = seed_opt->count() > 0;
      std::string sel = selector;
      if (sel == "all" && !opt.check_selector.empty()) sel = opt.check_selector;
      int rc;
      if (sel == "plot")
        rc = run_plot(opt);
      else
        rc = run_selector(opt, sel);
      if (rc != 0) throw CLI::RuntimeError(rc);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
