#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "deft/cli/gradcheck_suite.hpp"
#include "deft/cli/run_config.hpp"
#include "deft/metrics/metrics.hpp"
#include "deft/train/trainer.hpp"

namespace deft {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNumeric = 4,
  kExitCheckFailed = 5,
};

// Maps the library's error types onto process exit codes.
int exit_code_for(const std::exception& e);

std::vector<Sample> load_train_data(const DataConfig& data);
std::vector<Sample> load_eval_data(const DataConfig& data);

// Writes images/ and masks/ under out_dir.
void cmd_synth(const SynthSpec& spec, const std::filesystem::path& out_dir);

struct TrainArtifacts {
  std::filesystem::path checkpoint, loss_csv;
  TrainResult result;
};

// Writes model.ckpt, loss.csv and the canonical run_config.txt to output_dir,
// plus checkpoints/iter_<n>.ckpt when train.checkpoint_every is set.
// `progress` (may be null) gets a line every `log_every` iterations.
TrainArtifacts cmd_train(const RunConfig& cfg, std::ostream* progress = nullptr, int log_every = 10);

// Writes metrics.json and, when curves are requested, curves.csv.
MetricsReport cmd_eval(const std::filesystem::path& checkpoint, const std::vector<Sample>& data,
                       const EvalOptions& opt, const std::filesystem::path& out_dir);
MetricsReport cmd_eval(const RunConfig& cfg);

// Prints a table and writes gradcheck.csv when out_dir is non-empty.
std::vector<GradCheckCase> cmd_gradcheck(const std::string& scope, std::uint64_t seed, std::ostream& out,
                                         const std::filesystem::path& out_dir = {});

struct ParamsReport {
  std::int64_t total = 0;
  std::vector<std::pair<std::string, std::int64_t>> breakdown;
  int flops_input_size = 0;
  std::int64_t flops = 0;  // 0 when skipped
};

// flops_input_size 0 skips the FLOPs pass. Writes params.csv when out_dir is
// non-empty.
ParamsReport cmd_params(const ModelConfig& model, int flops_input_size, std::ostream& out,
                        const std::filesystem::path& out_dir = {});

struct AblationRow {
  std::string name;
  BlockToggles toggles;
  std::int64_t params = 0;
  MetricsReport report;
  std::filesystem::path checkpoint;
};

// Configurations in ablation order: the baseline with every listed toggle off,
// then each toggle switched on cumulatively (csb, pab, lpb, lmps, cffn).
// Toggles outside the list keep the model section's value.
std::vector<std::pair<std::string, BlockToggles>> ablation_variants(const BlockToggles& base,
                                                                    const std::string& toggle_list);

// Trains and evaluates every variant with the run's train/eval settings.
// Writes ablation.csv and ablate/<k>.ckpt under output_dir.
std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, std::ostream* progress = nullptr);

}  // namespace deft
