#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "sdgnn/scenario.hpp"

namespace {

struct Source {
  std::string file;
  std::string preset;
};

std::filesystem::path resolve(const Source& src) {
  if (!src.preset.empty()) return sdgnn::preset_path(src.preset);
  return src.file;
}

std::optional<sdgnn::ParsedScenario> load(const Source& src) {
  if (src.file.empty() == src.preset.empty()) {
    std::cerr << "error: give a scenario file or --preset, not both\n";
    return std::nullopt;
  }
  auto parsed = sdgnn::load_scenario(resolve(src));
  for (const auto& d : parsed.diagnostics) std::cerr << "error: " << d << '\n';
  if (!parsed.diagnostics.empty()) return std::nullopt;
  return parsed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latency and prediction experiments for GNN inference over taxi fleets"};
  app.require_subcommand(1);

  Source run_src;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
  run->add_option("file", run_src.file, "Scenario JSON file");
  run->add_option("--preset", run_src.preset, "Bundled scenario")->check(CLI::IsMember({"fig4", "fig6", "fig7", "gen"}));
  run->add_option("--out", out_dir, "Output directory (defaults to the scenario's output field)");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--trials", trials, "Override the trial count")->check(CLI::PositiveNumber);
  run->add_option("--threads", threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);

  Source val_src;
  auto* validate = app.add_subcommand("validate", "Check a scenario and print its effective configuration");
  validate->add_option("file", val_src.file, "Scenario JSON file");
  validate->add_option("--preset", val_src.preset, "Bundled scenario")->check(CLI::IsMember({"fig4", "fig6", "fig7", "gen"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) {
      auto parsed = load(val_src);
      if (!parsed) return 2;
      std::cout << sdgnn::to_json(parsed->file).dump(2) << '\n';
      return 0;
    }
    auto parsed = load(run_src);
    if (!parsed) return 2;
    sdgnn::ScenarioFile file = parsed->file;
    if (seed) file.seed = *seed;
    if (trials) file.trials = *trials;
    if (threads) file.threads = *threads;
    std::filesystem::path out = out_dir.empty() ? std::filesystem::path(file.output) : std::filesystem::path(out_dir);
    auto artifacts = sdgnn::run_scenario(file, out);
    for (const auto& p : artifacts.written) std::cout << p.string() << '\n';
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
