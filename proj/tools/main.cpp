#include <CLI11.hpp>
#include <riwtl/io.hpp>

namespace {

void add_common(CLI::App* cmd, riwtl::RunConfig& cfg, std::string& out,
                std::uint64_t& seed, bool& seed_set) {
  cmd->add_option("--out", out, "Output directory")->required();
  cmd->add_option("--seed", seed, "Random seed (overrides config file)")
      ->each([&seed_set](const std::string&) { seed_set = true; });
  cmd->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual importance weighted transfer learning for sparse linear models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("riwtl ") + riwtl::kToolVersion);

  riwtl::RunConfig cfg;
  std::string config_path, target_path, out_dir;
  std::vector<std::string> source_paths;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double lambda = -1.0;
  bool lambda_set = false;

  auto* simulate = app.add_subcommand("simulate", "Run a simulation sweep from a config file");
  simulate->add_option("--config", config_path, "Key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(simulate, cfg, out_dir, seed, seed_set);

  auto* fit = app.add_subcommand("fit", "Fit one method on CSV datasets");
  fit->add_option("--target", target_path, "Target CSV")->required();
  fit->add_option("--source", source_paths, "Source CSVs");
  fit->add_option("--method", cfg.method,
                  "lasso | riw-tl | riw-tl-u | riw-tl-p | trans-lasso")
      ->required();
  fit->add_option("--informative", cfg.informative,
                  "Informative source indices (trans-lasso), 1-based");
  fit->add_option("--lambda", lambda, "Skip tuning and use this lambda")
      ->each([&lambda_set](const std::string&) { lambda_set = true; });
  fit->add_flag("--center", cfg.center, "Center predictor columns and response");
  add_common(fit, cfg, out_dir, seed, seed_set);

  auto* tune = app.add_subcommand("tune", "Cross-validate thresholds and penalties");
  tune->add_option("--target", target_path, "Target CSV")->required();
  tune->add_option("--source", source_paths, "Source CSVs");
  tune->add_option("--method", cfg.method,
                   "lasso | riw-tl | riw-tl-u | riw-tl-p | trans-lasso")
      ->required();
  tune->add_option("--informative", cfg.informative,
                   "Informative source indices (trans-lasso), 1-based");
  tune->add_flag("--center", cfg.center, "Center predictor columns and response");
  add_common(tune, cfg, out_dir, seed, seed_set);

  auto* fig1 = app.add_subcommand("fig1", "Inclusion-probability grid experiment");
  fig1->add_option("--config", config_path, "Key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(fig1, cfg, out_dir, seed, seed_set);

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) cfg.command = riwtl::RunConfig::Command::simulate;
  if (fit->parsed()) cfg.command = riwtl::RunConfig::Command::fit;
  if (tune->parsed()) cfg.command = riwtl::RunConfig::Command::tune;
  if (fig1->parsed()) cfg.command = riwtl::RunConfig::Command::fig1;

  cfg.config_path = config_path;
  cfg.target_path = target_path;
  for (const auto& s : source_paths) cfg.source_paths.emplace_back(s);
  cfg.out_dir = out_dir;
  if (seed_set) cfg.seed = seed;
  if (lambda_set) cfg.lambda_override = lambda;

  return riwtl::run(cfg);
}
