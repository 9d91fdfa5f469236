#pragma once

#include <array>
#include <string>
#include <vector>

#include "deft/core/kv_text.hpp"

namespace deft {

struct BlockToggles {
  bool use_csb = true;   // conv stem; off = 4x4 patchify
  bool use_pab = true;   // overlapping 3x3/s2 embedding; off = 2x2/s2 patches
  bool use_lpb = true;   // depthwise conv position block
  bool use_lmps = true;  // multi-pooling attention; off = spatial-reduction attention
  bool use_cffn = true;  // depthwise conv inside the FFN

  bool operator==(const BlockToggles&) const = default;
};

struct ModelConfig {
  int base_channels = 64;
  std::array<int, 4> depths{3, 3, 18, 3};
  std::array<int, 4> heads{1, 2, 4, 8};
  std::array<std::vector<int>, 4> pool_ratios{
      std::vector<int>{12, 16, 20, 24}, std::vector<int>{6, 8, 10, 12},
      std::vector<int>{3, 4, 5, 6}, std::vector<int>{1, 2, 3, 4}};
  int expansion = 4;
  int in_channels = 3;
  int input_size = 224;
  BlockToggles toggles;
  // BatchNorm + ReLU after each stem conv.
  bool stem_norm = true;
  // Key/value reduction of the baseline attention used when use_lmps is off.
  std::array<int, 4> sr_ratios{8, 4, 2, 1};

  int stage_channels(int stage) const { return base_channels << stage; }

  // Throws ConfigError on the first violated invariant.
  void validate() const;

  // Keys are written under `prefix` (e.g. "model.").
  void write(KeyValueText& kv, const std::string& prefix) const;
  void read(KeyValueText& kv, const std::string& prefix);

  bool operator==(const ModelConfig&) const = default;
};

// Small configuration used by gradient checks and quick tests:
// C=8, depths 1,1,1,1, 32x32 input.
ModelConfig tiny_model_config();

// Parses "use_lpb=false,use_cffn=0" style overrides onto `toggles`.
void apply_toggle_overrides(BlockToggles& toggles, const std::string& spec);

}  // namespace deft
