#include "deft/cli/run_config.hpp"

#include <fstream>
#include <sstream>

#include "deft/core/errors.hpp"

namespace deft {

void RunConfig::validate() const {
  model.validate();
  train.validate();
  data.synth.validate();
  data.eval_synth.validate();
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (eval.threshold < 0 || eval.threshold > 1) throw ConfigError("eval.threshold must be in [0, 1]");
  if (eval.n_thresholds == 1 || eval.n_thresholds < 0) throw ConfigError("eval.n_thresholds must be 0 or >= 2");
  if (eval.eval_size < 32 || eval.eval_size % 32) throw ConfigError("eval.eval_size must be a positive multiple of 32");
  if (flops_input_size < 32 || flops_input_size % 32) {
    throw ConfigError("params.flops_input_size must be a positive multiple of 32");
  }
}

void RunConfig::write(KeyValueText& kv) const {
  kv.set("version", std::to_string(kRunConfigVersion));
  kv.set("output_dir", output_dir);
  kv.set("init_checkpoint", init_checkpoint);
  model.write(kv, "model.");
  train.write(kv, "train.");
  kv.set("data.train_dir", data.train_dir);
  kv.set("data.eval_dir", data.eval_dir);
  data.synth.write(kv, "data.synth.");
  data.eval_synth.write(kv, "data.eval_synth.");
  kv.set("eval.checkpoint", eval_checkpoint);
  kv.set("eval.threshold", format_double(eval.threshold));
  kv.set("eval.n_thresholds", std::to_string(eval.n_thresholds));
  kv.set("eval.eval_size", std::to_string(eval.eval_size));
  kv.set("params.flops_input_size", std::to_string(flops_input_size));
  kv.set("ablate.toggles", ablate_toggles);
}

void RunConfig::read(KeyValueText& kv) {
  int version = kRunConfigVersion;
  kv.read("version", version);
  if (version != kRunConfigVersion) {
    throw ConfigError("unsupported config version " + std::to_string(version));
  }
  kv.read("output_dir", output_dir);
  kv.read("init_checkpoint", init_checkpoint);
  model.read(kv, "model.");
  train.read(kv, "train.");
  kv.read("data.train_dir", data.train_dir);
  kv.read("data.eval_dir", data.eval_dir);
  data.synth.read(kv, "data.synth.");
  data.eval_synth.read(kv, "data.eval_synth.");
  kv.read("eval.checkpoint", eval_checkpoint);
  kv.read("eval.threshold", eval.threshold);
  kv.read("eval.n_thresholds", eval.n_thresholds);
  kv.read("eval.eval_size", eval.eval_size);
  kv.read("params.flops_input_size", flops_input_size);
  kv.read("ablate.toggles", ablate_toggles);
}

std::string RunConfig::to_text() const {
  KeyValueText kv;
  write(kv);
  return kv.str();
}

RunConfig parse_run_config(const std::string& text) {
  auto kv = KeyValueText::parse(text);
  RunConfig cfg;
  cfg.read(kv);
  kv.reject_unconsumed();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str());
}

void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  os << cfg.to_text();
  if (!os) throw IoError("cannot write config " + path.string());
}

}  // namespace deft
