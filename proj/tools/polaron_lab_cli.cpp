// polaron-lab: command-line front end.

#include <cstdio>
#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "polaron/commands.hpp"
#include "polaron/config.hpp"

int main(int argc, char** argv) {
  using namespace polaron;
  CLI::App app{"Polaron effective mass and diffusion lab"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string format = "json";

  app.add_option("--config", config_path, "JSON configuration file (defaults apply when omitted)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the configuration)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "json"}));

  const std::map<std::string, std::string> help{
      {"kernel", "Continuum and discrete kernel tables on a cutoff ladder"},
      {"spectrum", "Fiber ground energies, characteristic function and essential edge"},
      {"mass", "Effective mass and diffusion constant from the spectral route"},
      {"mc", "Path-integral Monte Carlo estimates"},
      {"clt-toy", "Toy-model pinned limits and CLT classification"},
      {"verify", "Acceptance suite"}};
  for (const auto& name : subcommands()) app.add_subcommand(name, help.at(name));

  CLI11_PARSE(app, argc, argv);

  try {
    Config config = config_path.empty() ? config_from_json(Json::object()) : load_config(config_path);
    if (*seed_opt) {
      config.seed = seed;
      config.mc.seed = seed;
    }
    RunOptions options;
    options.threads = threads;
    options.format = format == "csv" ? OutputFormat::Csv : OutputFormat::Json;
    const std::string name = app.get_subcommands().front()->get_name();

    options.progress = [](const std::string& line) { std::cout << line << std::endl; };
    const RunResult result = run_command(name, config, options);
    const auto files = write_result(result, out_dir, options.format);
    for (const auto& f : files) std::cerr << "wrote " << f.string() << "\n";
    std::fprintf(stderr, "wall-clock %.3f s\n", result.wall_clock);
    return result.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
