// Command-line front end.
//
//   switchstate synth <config>
//   switchstate sim <config | --preset NAME> [key.path=value ...]
//   switchstate sweep-beta <config> --values a,b,c
//   switchstate oracle-compare <config> --horizon N --samples M
//
// Exit codes: 0 success, 2 configuration error, 3 numeric error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "switchstate/switchstate.hpp"

namespace fs = std::filesystem;
using namespace switchstate;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("", "malformed JSON in '" + path + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("", "cannot write '" + path.string() + "'");
  out << text;
}

fs::path output_path(const std::optional<std::string>& out_dir, const std::string& file) {
  return out_dir ? fs::path(*out_dir) / fs::path(file).filename() : fs::path(file);
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("values", "not a number: '" + item + "'");
    }
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switch-state optimal on-off controller for discrete LTI plants"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::optional<std::uint64_t> seed;
  bool paper_literal = false;
  std::optional<std::string> out_dir;
  app.add_option("--seed", seed, "override sim.seed")->check(CLI::NonNegativeNumber);
  app.add_flag("--paper-literal", paper_literal, "use the as-printed +1/L model entry (fails the stability gate)");
  app.add_option("--out", out_dir, "output directory (created if absent)");

  std::string config_path;
  auto* synth = app.add_subcommand("synth", "synthesize gains and print them as JSON");
  synth->add_option("config", config_path, "run configuration (JSON)")->required();

  std::vector<std::string> sim_args;
  std::string preset;
  auto* sim = app.add_subcommand("sim", "run a closed-loop simulation, write trace CSV and summary JSON");
  sim->add_option("args", sim_args, "config path and/or key.path=value overrides");
  sim->add_option("--preset", preset, "built-in scenario")->check(CLI::IsMember(preset_names()));

  std::string sweep_config;
  std::string sweep_values;
  auto* sweep = app.add_subcommand("sweep-beta", "steady-window metrics across switching penalties");
  sweep->add_option("config", sweep_config, "run configuration (JSON)")->required();
  sweep->add_option("--values", sweep_values, "comma-separated beta values")->required();

  std::string oracle_config;
  std::size_t horizon = 12;
  std::size_t samples = 200;
  auto* oracle = app.add_subcommand("oracle-compare", "compare the affine policy with exhaustive search");
  oracle->add_option("config", oracle_config, "run configuration (JSON)")->required();
  oracle->add_option("--horizon", horizon, "enumeration horizon (<= 20)")->required();
  oracle->add_option("--samples", samples, "random states for first-action agreement")->required();

  // Options after the subcommand belong to the app as well.
  for (auto* sub : {synth, sim, sweep, oracle}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const RunOptions opts{paper_literal ? SignConvention::AsPrinted : SignConvention::Physical};
  std::vector<std::string> seed_override;
  if (seed) seed_override.push_back("sim.seed=" + std::to_string(*seed));

  auto load = [&](const std::string& path, std::vector<std::string> overrides) {
    json doc = read_json_file(path);
    overrides.insert(overrides.end(), seed_override.begin(), seed_override.end());
    apply_overrides(doc, overrides);
    return parse_config(doc);
  };

  try {
    if (*synth) {
      const std::string text = synth_report(load(config_path, {}), opts).dump(2);
      std::cout << text << '\n';
      if (out_dir) write_text(fs::path(*out_dir) / "synth.json", text + "\n");
    } else if (*sim) {
      std::optional<std::string> path;
      std::vector<std::string> overrides;
      for (const std::string& a : sim_args) {
        if (a.find('=') != std::string::npos) {
          overrides.push_back(a);
        } else if (!path) {
          path = a;
        } else {
          throw ConfigError("", "more than one config path given");
        }
      }
      if (path.has_value() == !preset.empty()) {
        throw ConfigError("", "sim needs exactly one of a config path or --preset");
      }
      overrides.insert(overrides.end(), seed_override.begin(), seed_override.end());
      const RunOutcome run = path ? run_config(load(*path, overrides), opts) : run_preset(preset, overrides, opts);

      std::ostringstream csv;
      write_csv(csv, run.trace);
      const fs::path csv_path = output_path(out_dir, run.config.output.csv_path);
      const fs::path summary_path = output_path(out_dir, run.config.output.summary_path);
      write_text(csv_path, csv.str());
      write_text(summary_path, run.summary.dump(2) + "\n");
      std::cerr << "wrote " << csv_path.string() << " and " << summary_path.string() << '\n';
      if (run.summary.contains("metrics_error")) {
        std::cerr << "metrics: " << run.summary["metrics_error"].get<std::string>() << '\n';
      }
    } else if (*sweep) {
      const std::string text = sweep_json(sweep_beta(parse_values(sweep_values), load(sweep_config, {}), opts)).dump(2);
      std::cout << text << '\n';
      if (out_dir) write_text(fs::path(*out_dir) / "sweep.json", text + "\n");
    } else if (*oracle) {
      const RunConfig cfg = load(oracle_config, {});
      OracleOptions o;
      o.horizon = horizon;
      o.samples = samples;
      o.seed = cfg.sim.seed;
      const std::string text = oracle_compare(cfg, o, opts).dump(2);
      std::cout << text << '\n';
      if (out_dir) write_text(fs::path(*out_dir) / "oracle.json", text + "\n");
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
