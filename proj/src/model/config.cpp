#include "deft/model/config.hpp"

#include "deft/core/errors.hpp"

namespace deft {

namespace {

std::string stage_key(const std::string& prefix, const char* name, int stage) {
  return prefix + "stage" + std::to_string(stage + 1) + "." + name;
}

struct ToggleField {
  const char* name;
  bool BlockToggles::*member;
};

constexpr ToggleField kToggleFields[] = {
    {"use_csb", &BlockToggles::use_csb},   {"use_pab", &BlockToggles::use_pab},
    {"use_lpb", &BlockToggles::use_lpb},   {"use_lmps", &BlockToggles::use_lmps},
    {"use_cffn", &BlockToggles::use_cffn},
};

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (base_channels < 1) fail("base_channels must be >= 1");
  if (expansion < 1) fail("expansion must be >= 1");
  if (in_channels < 1) fail("in_channels must be >= 1");
  if (input_size < 32 || input_size % 32 != 0) fail("input_size must be a positive multiple of 32");
  for (int s = 0; s < 4; ++s) {
    const std::string tag = "stage " + std::to_string(s + 1);
    if (depths[s] < 1) fail(tag + ": depth must be >= 1");
    if (heads[s] < 1) fail(tag + ": heads must be >= 1");
    if (stage_channels(s) % heads[s] != 0) {
      fail(tag + ": " + std::to_string(stage_channels(s)) + " channels not divisible by " +
           std::to_string(heads[s]) + " heads");
    }
    if (pool_ratios[s].empty()) fail(tag + ": no pool ratios");
    for (int r : pool_ratios[s]) {
      if (r < 1) fail(tag + ": pool ratios must be >= 1");
    }
    if (sr_ratios[s] < 1) fail(tag + ": sr ratio must be >= 1");
  }
}

void ModelConfig::write(KeyValueText& kv, const std::string& prefix) const {
  kv.set(prefix + "base_channels", std::to_string(base_channels));
  kv.set(prefix + "expansion", std::to_string(expansion));
  kv.set(prefix + "in_channels", std::to_string(in_channels));
  kv.set(prefix + "input_size", std::to_string(input_size));
  kv.set(prefix + "stem_norm", stem_norm ? "true" : "false");
  for (const auto& f : kToggleFields) kv.set(prefix + f.name, toggles.*f.member ? "true" : "false");
  for (int s = 0; s < 4; ++s) {
    kv.set(stage_key(prefix, "depth", s), std::to_string(depths[s]));
    kv.set(stage_key(prefix, "heads", s), std::to_string(heads[s]));
    kv.set(stage_key(prefix, "pool_ratios", s), format_int_list(pool_ratios[s]));
    kv.set(stage_key(prefix, "sr_ratio", s), std::to_string(sr_ratios[s]));
  }
}

void ModelConfig::read(KeyValueText& kv, const std::string& prefix) {
  kv.read(prefix + "base_channels", base_channels);
  kv.read(prefix + "expansion", expansion);
  kv.read(prefix + "in_channels", in_channels);
  kv.read(prefix + "input_size", input_size);
  kv.read(prefix + "stem_norm", stem_norm);
  for (const auto& f : kToggleFields) kv.read(prefix + f.name, toggles.*f.member);
  for (int s = 0; s < 4; ++s) {
    kv.read(stage_key(prefix, "depth", s), depths[s]);
    kv.read(stage_key(prefix, "heads", s), heads[s]);
    kv.read(stage_key(prefix, "pool_ratios", s), pool_ratios[s]);
    kv.read(stage_key(prefix, "sr_ratio", s), sr_ratios[s]);
  }
}

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.base_channels = 8;
  c.depths = {1, 1, 1, 1};
  c.heads = {1, 2, 4, 8};
  c.pool_ratios = {std::vector<int>{2, 4}, std::vector<int>{2, 4}, std::vector<int>{1, 2},
                   std::vector<int>{1, 2}};
  c.expansion = 2;
  c.input_size = 32;
  return c;
}

void apply_toggle_overrides(BlockToggles& toggles, const std::string& spec) {
  std::string text = spec;
  for (auto& ch : text) {
    if (ch == ',') ch = '\n';
  }
  auto kv = KeyValueText::parse(text);
  for (const auto& f : kToggleFields) kv.read(f.name, toggles.*f.member);
  kv.reject_unconsumed();
}

}  // namespace deft
