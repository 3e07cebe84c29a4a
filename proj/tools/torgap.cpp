#include "torgap/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int run_command(const std::string &config_path, const std::optional<std::string> &out,
                const std::optional<std::uint64_t> &seed,
                const std::optional<std::string> &precision, bool plots) {
  using namespace torgap;
  ScenarioConfig cfg = load_config(config_path);
  if (out) cfg.out_dir = *out;
  if (seed) cfg.seed = *seed;
  if (precision) cfg.precision = parse_precision(*precision);
  if (plots) cfg.emit_plots = true;

  RunRecord rec = execute(cfg);
  auto files = write_record(rec, cfg.out_dir, cfg.emit_plots);
  std::cerr << cfg.kind << ": " << rec.rows.size() << " rows in "
            << rec.wall_time_seconds << " s (digest " << rec.input_digest << ")\n";
  for (const auto &f : files) std::cerr << "  wrote " << f.string() << "\n";
  if (!rec.falsified.empty()) {
    for (const auto &msg : rec.falsified) std::cerr << "falsified: " << msg << "\n";
    return kExitFalsified;
  }
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"torsion growth and spectral gap experiments"};
  app.set_version_flag("--version", std::string(torgap::library_version()));
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "run a scenario config");
  std::string config;
  std::optional<std::string> out, precision;
  std::optional<std::uint64_t> seed;
  bool plots = false;
  run->add_option("config", config, "scenario JSON")->required();
  run->add_option("--out", out, "output directory (overrides the config)");
  run->add_option("--seed", seed, "random seed (overrides the config)");
  run->add_option("--precision", precision, "double or extended")
      ->check(CLI::IsMember({"double", "extended"}));
  run->add_flag("--emit-plots", plots, "also write long-format plot data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : torgap::kExitConfig;
  }

  try {
    return run_command(config, out, seed, precision, plots);
  } catch (const torgap::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return torgap::kExitConfig;
  } catch (const torgap::PreconditionError &e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return torgap::kExitPrecondition;
  } catch (const torgap::DimensionError &e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return torgap::kExitPrecondition;
  } catch (const torgap::FalsifiedInvariant &e) {
    std::cerr << "falsified: " << e.what() << "\n";
    return torgap::kExitFalsified;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return torgap::kExitOther;
  }
}
