#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "deft/cli/commands.hpp"
#include "deft/core/autograd.hpp"
#include "deft/core/errors.hpp"

using namespace deft;

int main(int argc, char** argv) {
  CLI::App app{"DefT surface defect segmentation: synth, train, eval, gradcheck, params, ablate"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<double> threshold;
  std::optional<int> input_size;
  std::string scope = "op";
  std::optional<std::string> toggles;
  std::string checkpoint, corrupt_op;

  app.add_option("--config", config_path, "Run config (key = value text); defaults apply when omitted");
  app.add_option("--seed", seed, "Overrides train.seed (synth: data.synth.seed)");
  app.add_option("--output-dir", output_dir, "Overrides output_dir");
  app.add_option("--threshold", threshold, "Overrides eval.threshold");
  app.add_option("--input-size", input_size, "params: FLOPs input size; eval: evaluation size");
  app.add_option("--scope", scope, "gradcheck scope: op, block, model or all");
  app.add_option("--toggles", toggles,
                 "ablate: toggle list such as csb,lpb; otherwise overrides such as use_lpb=false");
  app.add_option("--checkpoint", checkpoint, "eval: checkpoint path (overrides eval.checkpoint)");
  app.add_option("--corrupt-grad", corrupt_op)->group("");  // test hook

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset into <output_dir>/images, masks");
  auto* train_cmd = app.add_subcommand("train", "Train and write model.ckpt and loss.csv");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint, write metrics.json and curves.csv");
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  auto* params = app.add_subcommand("params", "Parameter count, per-module breakdown and FLOPs");
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate the cumulative toggle configurations");
  auto* dump = app.add_subcommand("config", "Print the canonical config with all defaults filled in");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (output_dir) cfg.output_dir = *output_dir;
    if (threshold) cfg.eval.threshold = *threshold;
    if (!checkpoint.empty()) cfg.eval_checkpoint = checkpoint;
    if (seed) {
      if (synth->parsed()) cfg.data.synth.seed = *seed;
      else cfg.train.seed = *seed;
    }
    if (input_size) {
      if (params->parsed()) cfg.flops_input_size = *input_size;
      else if (eval_cmd->parsed()) cfg.eval.eval_size = *input_size;
      else throw UsageError("--input-size applies to params and eval only");
    }
    if (toggles) {
      if (ablate->parsed()) cfg.ablate_toggles = *toggles;
      else apply_toggle_overrides(cfg.model.toggles, *toggles);
    }

    if (synth->parsed()) {
      cmd_synth(cfg.data.synth, cfg.output_dir);
      std::cout << "wrote " << cfg.data.synth.count << " samples to " << cfg.output_dir << '\n';
    } else if (train_cmd->parsed()) {
      const auto art = cmd_train(cfg, &std::cout);
      std::cout << "checkpoint " << art.checkpoint.string() << "\nloss log " << art.loss_csv.string() << '\n';
    } else if (eval_cmd->parsed()) {
      const auto r = cmd_eval(cfg);
      std::cout << report_json(r) << '\n';
    } else if (grad->parsed()) {
      if (!corrupt_op.empty()) testing::set_gradient_corruption(corrupt_op);
      const auto cases = cmd_gradcheck(scope, seed.value_or(1), std::cout, cfg.output_dir);
      for (const auto& c : cases)
        if (!c.passed()) return kExitCheckFailed;
    } else if (params->parsed()) {
      cmd_params(cfg.model, cfg.flops_input_size, std::cout, cfg.output_dir);
    } else if (ablate->parsed()) {
      cmd_ablate(cfg, &std::cout);
      std::cout << "wrote " << (std::filesystem::path(cfg.output_dir) / "ablation.csv").string() << '\n';
    } else if (dump->parsed()) {
      cfg.validate();
      std::cout << cfg.to_text();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}
