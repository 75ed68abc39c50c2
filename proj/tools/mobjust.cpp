#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mobjust/mobjust.hpp"

namespace {

void print_summary(const mobjust::Summary& s) {
  for (const auto& [k, v] : s) std::cout << k << ": " << v << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mobility-data representativeness pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--workers", workers, "worker threads for device-level work")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "generator seed (synth)");

  using Stage = std::function<void(const mobjust::PipelineConfig&)>;
  const std::map<std::string, std::pair<std::string, Stage>> stages = {
      {"validate", {"parse inputs and write the rejection report",
                    [](const auto& c) { print_summary(mobjust::stage_validate(c)); }}},
      {"staypoints", {"detect stay points", [](const auto& c) { print_summary(mobjust::stage_staypoints(c)); }}},
      {"homes", {"infer weekly homes", [](const auto& c) { print_summary(mobjust::stage_homes(c)); }}},
      {"metrics", {"compute device and block-group metrics",
                   [](const auto& c) { print_summary(mobjust::stage_metrics(c)); }}},
      {"report", {"write class tables, tests and plot data",
                  [](const auto& c) { print_summary(mobjust::stage_report(c)); }}},
      {"synth", {"generate a synthetic scenario", [](const auto& c) { print_summary(mobjust::stage_synth(c)); }}},
      {"all", {"run every stage", [](const auto& c) { mobjust::stage_all(c); }}},
  };
  for (const auto& [name, entry] : stages) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = mobjust::load_config(config_path);
    if (workers) cfg.workers = *workers;
    if (seed) cfg.synth.seed = *seed;
    for (const auto* sub : app.get_subcommands()) stages.at(sub->get_name()).second(cfg);
  } catch (const mobjust::Error& e) {
    std::cerr << "error[" << mobjust::to_string(e.kind()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[" << mobjust::to_string(mobjust::ErrorKind::Io) << "]: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
