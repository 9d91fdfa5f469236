#pragma once

#include <filesystem>
#include <string>

#include "deft/core/kv_text.hpp"
#include "deft/data/synth.hpp"
#include "deft/metrics/evaluate.hpp"
#include "deft/model/config.hpp"
#include "deft/train/train_config.hpp"

namespace deft {

inline constexpr int kRunConfigVersion = 1;

// An empty directory means "generate with the matching synth spec".
struct DataConfig {
  std::string train_dir;
  std::string eval_dir;
  SynthSpec synth;
  SynthSpec eval_synth = [] {
    SynthSpec s;
    s.seed = 8;
    return s;
  }();
  bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  std::string output_dir = "run";
  // Weights to start training from; must match the model section.
  std::string init_checkpoint;
  // Checkpoint used by eval; empty means <output_dir>/model.ckpt.
  std::string eval_checkpoint;
  EvalOptions eval;
  int flops_input_size = 256;
  // Ablation toggles added cumulatively, in this order.
  std::string ablate_toggles = "csb,pab,lpb,lmps,cffn";

  void validate() const;
  void write(KeyValueText& kv) const;
  void read(KeyValueText& kv);
  // Canonical text; parse_run_config(to_text(c)) == c.
  std::string to_text() const;
  bool operator==(const RunConfig&) const = default;
};

// Unknown keys and unsupported versions raise ConfigError. A missing version
// key is read as the current one so hand-written partial configs work.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace deft
