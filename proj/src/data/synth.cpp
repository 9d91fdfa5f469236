#include "deft/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

#include "deft/core/errors.hpp"
#include "deft/core/rng.hpp"

namespace deft {

namespace {

constexpr double kPi = std::numbers::pi;

// Smoothly interpolated lattice noise with `octaves` halving spacings.
class ValueNoise {
 public:
  ValueNoise(Rng& rng, int size, double spacing, int octaves) : size_(size) {
    for (int o = 0; o < octaves; ++o) {
      Layer layer;
      layer.spacing = std::max(2.0, spacing / (1 << o));
      layer.n = static_cast<int>(std::ceil(size / layer.spacing)) + 2;
      layer.values.resize(static_cast<std::size_t>(layer.n) * layer.n);
      for (auto& v : layer.values) v = rng.uniform(-1.0, 1.0);
      layer.weight = 1.0 / (1 << o);
      layers_.push_back(std::move(layer));
    }
  }

  double at(int y, int x) const {
    double acc = 0, norm = 0;
    for (const auto& l : layers_) {
      const double fy = y / l.spacing, fx = x / l.spacing;
      const int iy = static_cast<int>(fy), ix = static_cast<int>(fx);
      const double ty = smooth(fy - iy), tx = smooth(fx - ix);
      auto v = [&](int a, int b) { return l.values[static_cast<std::size_t>(a) * l.n + b]; };
      const double top = v(iy, ix) * (1 - tx) + v(iy, ix + 1) * tx;
      const double bot = v(iy + 1, ix) * (1 - tx) + v(iy + 1, ix + 1) * tx;
      acc += l.weight * (top * (1 - ty) + bot * ty);
      norm += l.weight;
    }
    return acc / norm;
  }

 private:
  struct Layer {
    double spacing, weight;
    int n;
    std::vector<double> values;
  };
  static double smooth(double t) { return t * t * (3 - 2 * t); }
  int size_;
  std::vector<Layer> layers_;
};

struct Blob {
  double cy, cx, a, b, angle, phase;
  int lobes;
  bool contains(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = c * dx + s * dy, v = -s * dx + c * dy;
    const double theta = std::atan2(v / b, u / a);
    const double r = std::sqrt((u / a) * (u / a) + (v / b) * (v / b));
    return r <= 1.0 + kBlobWobble * std::sin(lobes * theta + phase);
  }
};

struct Scratch {
  double y0, x0, y1, x1, half_width;
  double distance(double y, double x) const {
    const double vy = y1 - y0, vx = x1 - x0;
    const double t = std::clamp(((y - y0) * vy + (x - x0) * vx) / (vy * vy + vx * vx), 0.0, 1.0);
    const double py = y0 + t * vy - y, px = x0 + t * vx - x;
    return std::sqrt(py * py + px * px);
  }
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

void SynthSpec::validate() const {
  auto fail = [](const std::string& m) { throw UsageError("synth spec: " + m); };
  if (image_size < 1) fail("image_size must be >= 1");
  if (count < 0) fail("count must be >= 0");
  if (min_defects < 0 || max_defects < min_defects) fail("need 0 <= min_defects <= max_defects");
  if (max_defects > 0 && !blobs && !scratches) fail("no defect kinds enabled");
  if (pseudo_defect_density < 0 || noise_sigma < 0 || texture_scale <= 0) fail("negative rate");
  if (blob_radius_min <= 0 || blob_radius_max < blob_radius_min) fail("bad blob radius range");
  if (scratch_length_min <= 0 || scratch_length_max < scratch_length_min) fail("bad scratch length range");
  if (scratch_width_min <= 0 || scratch_width_max < scratch_width_min) fail("bad scratch width range");
}

void SynthSpec::write(KeyValueText& kv, const std::string& p) const {
  kv.set(p + "count", std::to_string(count));
  kv.set(p + "image_size", std::to_string(image_size));
  kv.set(p + "min_defects", std::to_string(min_defects));
  kv.set(p + "max_defects", std::to_string(max_defects));
  kv.set(p + "blobs", blobs ? "true" : "false");
  kv.set(p + "scratches", scratches ? "true" : "false");
  kv.set(p + "pseudo_defect_density", format_double(pseudo_defect_density));
  kv.set(p + "noise_sigma", format_double(noise_sigma));
  kv.set(p + "texture_scale", format_double(texture_scale));
  kv.set(p + "blob_radius_min", format_double(blob_radius_min));
  kv.set(p + "blob_radius_max", format_double(blob_radius_max));
  kv.set(p + "scratch_length_min", format_double(scratch_length_min));
  kv.set(p + "scratch_length_max", format_double(scratch_length_max));
  kv.set(p + "scratch_width_min", format_double(scratch_width_min));
  kv.set(p + "scratch_width_max", format_double(scratch_width_max));
  kv.set(p + "seed", std::to_string(seed));
}

void SynthSpec::read(KeyValueText& kv, const std::string& p) {
  kv.read(p + "count", count);
  kv.read(p + "image_size", image_size);
  kv.read(p + "min_defects", min_defects);
  kv.read(p + "max_defects", max_defects);
  kv.read(p + "blobs", blobs);
  kv.read(p + "scratches", scratches);
  kv.read(p + "pseudo_defect_density", pseudo_defect_density);
  kv.read(p + "noise_sigma", noise_sigma);
  kv.read(p + "texture_scale", texture_scale);
  kv.read(p + "blob_radius_min", blob_radius_min);
  kv.read(p + "blob_radius_max", blob_radius_max);
  kv.read(p + "scratch_length_min", scratch_length_min);
  kv.read(p + "scratch_length_max", scratch_length_max);
  kv.read(p + "scratch_width_min", scratch_width_min);
  kv.read(p + "scratch_width_max", scratch_width_max);
  kv.read(p + "seed", seed);
}

Sample synth_sample(const SynthSpec& spec, int index) {
  spec.validate();
  const int S = spec.image_size;
  Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(index)));

  // background: gray base, slight tint, octave noise texture
  const double base = rng.uniform(0.35, 0.65);
  double tint[3];
  for (double& t : tint) t = rng.uniform(-0.04, 0.04);
  ValueNoise texture(rng, S, spec.texture_scale, 3);
  const double tex_amp = rng.uniform(0.08, 0.16);

  std::vector<double> gray(static_cast<std::size_t>(S) * S);
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) gray[y * S + x] = base + tex_amp * texture.at(y, x);

  // pseudo-defects: soft low-contrast gaussian smudges, never in the mask
  const int n_pseudo = [&] {
    // Poisson via inversion
    const double l = std::exp(-spec.pseudo_defect_density);
    int k = 0;
    for (double p = rng.uniform(); p > l; p *= rng.uniform()) ++k;
    return k;
  }();
  for (int i = 0; i < n_pseudo; ++i) {
    const double cy = rng.uniform(0, S), cx = rng.uniform(0, S);
    const double sigma = rng.uniform(0.04, 0.10) * S;
    const double amp = rng.uniform(0.05, 0.10) * (rng.uniform() < 0.5 ? -1 : 1);
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        gray[y * S + x] += amp * std::exp(-d2 / (2 * sigma * sigma));
      }
  }

  // genuine defects: sharp, higher contrast, recorded in the mask
  std::vector<float> mask(static_cast<std::size_t>(S) * S, 0.0f);
  const int n_defects = static_cast<int>(rng.uniform_int(spec.min_defects, spec.max_defects));
  for (int i = 0; i < n_defects; ++i) {
    bool blob = spec.blobs;
    if (spec.blobs && spec.scratches) blob = rng.uniform() < 0.5;
    const double contrast = rng.uniform(0.22, 0.38) * (rng.uniform() < 0.75 ? -1 : 1);
    std::function<bool(double, double)> inside;
    if (blob) {
      Blob b;
      b.a = rng.uniform(spec.blob_radius_min, spec.blob_radius_max) * S;
      b.b = rng.uniform(spec.blob_radius_min, spec.blob_radius_max) * S;
      const double reach = std::max(b.a, b.b) * (1 + kBlobWobble);
      b.cy = rng.uniform(std::min(reach, S / 2.0), std::max(S - reach, S / 2.0));
      b.cx = rng.uniform(std::min(reach, S / 2.0), std::max(S - reach, S / 2.0));
      b.angle = rng.uniform(0, kPi);
      b.phase = rng.uniform(0, 2 * kPi);
      b.lobes = static_cast<int>(rng.uniform_int(2, 5));
      inside = [b](double y, double x) { return b.contains(y, x); };
    } else {
      Scratch s;
      const double len = rng.uniform(spec.scratch_length_min, spec.scratch_length_max) * S;
      s.half_width = std::max(1.0, rng.uniform(spec.scratch_width_min, spec.scratch_width_max) * S / 2);
      const double ang = rng.uniform(0, kPi);
      const double dy = std::sin(ang) * len / 2, dx = std::cos(ang) * len / 2;
      const double my = std::abs(dy) + s.half_width, mx = std::abs(dx) + s.half_width;
      const double cy = rng.uniform(std::min(my, S / 2.0), std::max(S - my, S / 2.0));
      const double cx = rng.uniform(std::min(mx, S / 2.0), std::max(S - mx, S / 2.0));
      s.y0 = cy - dy;
      s.x0 = cx - dx;
      s.y1 = cy + dy;
      s.x1 = cx + dx;
      inside = [s](double y, double x) { return s.distance(y, x) <= s.half_width; };
    }
    for (int y = 0; y < S; ++y)
      for (int x = 0; x < S; ++x) {
        if (!inside(y + 0.5, x + 0.5)) continue;
        if (mask[y * S + x] == 0.0f) gray[y * S + x] += contrast;
        mask[y * S + x] = 1.0f;
      }
  }

  std::vector<float> image(static_cast<std::size_t>(3) * S * S);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < S * S; ++i) {
      const double v = gray[i] + tint[c] + (spec.noise_sigma > 0 ? rng.normal(0, spec.noise_sigma) : 0.0);
      // on the 8-bit grid, computed as the loader does, so PNG round trips are exact
      const auto q = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      image[c * S * S + i] = static_cast<float>(q) / 255.0f;
    }

  Sample s;
  s.image = Tensor::from_buffer<float>({3, S, S}, std::move(image));
  s.mask = Tensor::from_buffer<float>({1, S, S}, std::move(mask));
  char id[32];
  std::snprintf(id, sizeof(id), "synth_%05d", index);
  s.id = id;
  return s;
}

std::vector<Sample> synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) out.push_back(synth_sample(spec, i));
  return out;
}

}  // namespace deft
