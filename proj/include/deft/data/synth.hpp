#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deft/core/kv_text.hpp"
#include "deft/data/sample.hpp"

namespace deft {

// Textured surface images with genuine defects (in the mask) and faint
// pseudo-defect smudges (not in the mask).
struct SynthSpec {
  int count = 8;
  int image_size = 224;
  int min_defects = 1;
  int max_defects = 3;
  bool blobs = true;
  bool scratches = true;
  // Mean number of pseudo-defects per image.
  double pseudo_defect_density = 2.0;
  double noise_sigma = 0.02;
  // Lattice spacing in pixels of the coarsest noise octave.
  double texture_scale = 32.0;
  // Blob semi-axes and scratch geometry as fractions of image_size.
  double blob_radius_min = 0.04, blob_radius_max = 0.10;
  double scratch_length_min = 0.25, scratch_length_max = 0.55;
  double scratch_width_min = 0.012, scratch_width_max = 0.025;
  std::uint64_t seed = 7;

  void validate() const;
  void write(KeyValueText& kv, const std::string& prefix) const;
  void read(KeyValueText& kv, const std::string& prefix);
  bool operator==(const SynthSpec&) const = default;
};

// Radial perturbation amplitude of blob outlines.
inline constexpr double kBlobWobble = 0.15;

// Sample i depends only on (seed, i), so subsets can be regenerated.
std::vector<Sample> synth_generate(const SynthSpec& spec);
Sample synth_sample(const SynthSpec& spec, int index);

}  // namespace deft
