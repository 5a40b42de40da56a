#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "nsdde/config.hpp"
#include "nsdde/errors.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw nsdde::SchemaError("cannot read config file '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NSDDE tamed theta scheme experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  bool workers_set = false;
  std::string out_dir;
  bool out_set = false;

  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--seed", seed, "master seed (overrides the config)")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--workers", workers, "worker thread budget; results are identical for any value")
      ->each([&](const std::string&) { workers_set = true; });
  app.add_option("--out", out_dir, "output directory (overrides the config)")
      ->each([&](const std::string&) { out_set = true; });

  std::map<std::string, nsdde::ExperimentKind> commands = {
      {"simulate", nsdde::ExperimentKind::Simulate},
      {"converge", nsdde::ExperimentKind::Converge},
      {"moments", nsdde::ExperimentKind::Moments},
      {"modulus", nsdde::ExperimentKind::Modulus},
      {"check-assumptions", nsdde::ExperimentKind::CheckAssumptions},
  };
  for (const auto& [name, kind] : commands) {
    app.add_subcommand(name, std::string("run the ") + name + " driver")->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  const auto* sub = app.get_subcommands().front();
  const nsdde::ExperimentKind kind = commands.at(sub->get_name());

  try {
    const nsdde::RunConfig cfg = nsdde::parse_config(read_file(config_path));
    nsdde::DispatchOptions opts;
    if (seed_set) opts.seed = seed;
    if (workers_set) opts.workers = workers;
    if (out_set) opts.out_dir = out_dir;
    const nsdde::DispatchResult result = nsdde::dispatch(kind, cfg, opts);
    for (const auto& file : result.files) std::cout << "wrote " << file << "\n";
    return 0;
  } catch (const nsdde::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return static_cast<int>(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return static_cast<int>(nsdde::ExitCode::Failure);
  }
}
