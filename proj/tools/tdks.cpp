// Command-line front end: tdks <subcommand> [--config PATH] [--out DIR] [--seed N] [--quiet]

#include "tdks/tdks.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

enum Exit { ok = 0, check_failed = 1, usage = 2, config_error = 3, solver_error = 4 };

tdks::RunConfig load(const std::string& path) {
  if (path.empty()) return tdks::parse_config(nlohmann::json::object());
  std::ifstream in(path);
  if (!in) throw tdks::ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return tdks::parse_config(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kohn-Sham Galerkin solver, estimate verifier and control toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  for (const auto& name : tdks::subcommands()) {
    static const std::map<std::string, std::string> about = {
        {"simulate", "forward run: trajectory, diagnostics, densities"},
        {"adjoint", "forward run, then the backward adjoint run for the objective"},
        {"verify", "run every estimate check and write report.json"},
        {"converge", "Galerkin refinement study over verify.convergence_modes"},
        {"optimize", "steepest descent on the control in H1"}};
    CLI::App* sub = app.add_subcommand(name, about.count(name) ? about.at(name) : "");
    sub->add_option("--config", config_path, "JSON configuration (defaults if omitted)");
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
    sub->add_option("--seed", seed, "RNG seed (overrides seed)");
    sub->add_flag("--quiet", quiet, "suppress the summary");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();

  tdks::RunConfig config;
  try {
    config = load(config_path);
    if (sub->count("--seed")) config.seed = seed;
    if (sub->count("--out")) config.output.directory = out_dir;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  }

  tdks::RunResult result;
  try {
    result = tdks::run(config, command);
  } catch (const tdks::SolverError& e) {
    std::cerr << "solver error at t = " << e.last_good_time() << " (step " << e.last_good_step() << "): " << e.what()
              << '\n';
    return solver_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return solver_error;
  }

  try {
    tdks::write_artifacts(config.output.directory, config, result.artifacts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage;
  }
  if (!quiet) {
    std::cout << result.summary;
    std::cout << command << ": " << (result.status == 0 ? "ok" : "asserted checks failed") << ", wrote "
              << result.artifacts.size() + 1 << " files to " << config.output.directory << '\n';
  }
  return result.status == 0 ? ok : check_failed;
}
