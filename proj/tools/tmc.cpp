#include "tmc/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int cmd_run(const std::string& config_path, const std::string& preset,
            const std::vector<std::string>& overrides, const std::string& out_dir) {
  tmc::RunConfig config;
  try {
    tmc::ConfigDoc doc;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "validation error: cannot open config '" << config_path << "'\n";
        return tmc::exit_code::validation;
      }
      std::stringstream buf;
      buf << in.rdbuf();
      doc = tmc::parse_config_doc(buf.str(), config_path);
    } else {
      doc = tmc::parse_config_doc(tmc::preset_config_text(preset), "<preset:" + preset + ">");
    }
    for (const auto& o : overrides) tmc::apply_override(doc, o);
    if (!out_dir.empty()) tmc::apply_override(doc, "output.directory=" + out_dir);
    config = tmc::interpret_config(doc);
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return tmc::exit_code::validation;
  }
  const tmc::RunOutcome outcome = tmc::run_problem(config, std::cout);
  if (outcome.exit == tmc::exit_code::ok)
    std::cout << "done: steps " << outcome.history.steps.size() << " iterations "
              << outcome.history.total_iterations << " gap " << outcome.final_gap << "\n";
  return outcome.exit;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled thermo-mechanical third-medium contact solver"};
  app.require_subcommand(1);

  // run
  std::string config_path, preset, out_dir;
  std::vector<std::string> overrides;
  int layers = -1;
  double uz = 0.0;
  bool uz_set = false;
  auto* run = app.add_subcommand("run", "run a benchmark preset or a config file");
  auto* cfg_opt = run->add_option("--config", config_path, "config file path");
  auto* preset_opt = run->add_option("--preset", preset, "bundled benchmark name");
  run->add_option("--set", overrides, "override: section.key=value")->take_all();
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--layers", layers, "third-medium layer count override");
  run->add_option("--uz", uz, "prescribed patch displacement override (3D preset)")
      ->each([&](const std::string&) { uz_set = true; });
  cfg_opt->excludes(preset_opt);

  // verify
  std::string only;
  auto* verify = app.add_subcommand("verify", "run the independent property suites");
  verify->add_option("--only", only, "restrict to one property group");

  // export
  std::string snap_path, vtk_path;
  bool keep_medium = false;
  auto* exp = app.add_subcommand("export", "write a VTK file from a state snapshot");
  exp->add_option("--state", snap_path, "snapshot file")->required();
  exp->add_option("--vtk", vtk_path, "output VTK path")->required();
  exp->add_flag("--keep-medium", keep_medium, "include third-medium cells");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (config_path.empty() && preset.empty()) {
      std::cerr << "validation error: run needs --config or --preset\n";
      return tmc::exit_code::validation;
    }
    if (layers > 0) overrides.push_back("problem.medium_layers=" + std::to_string(layers));
    if (uz_set) {
      std::ostringstream os;
      os << "loads.dirichlet=loaded_patch uz " << uz;
      overrides.push_back(os.str());
    }
    return cmd_run(config_path, preset, overrides, out_dir);
  }
  if (verify->parsed()) return tmc::verify_properties(only, std::cout);
  if (exp->parsed()) return tmc::export_snapshot_vtk(snap_path, vtk_path, !keep_medium, std::cerr);
  return tmc::exit_code::validation;
}
