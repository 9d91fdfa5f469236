#include "deft/data/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "deft/core/errors.hpp"

namespace deft {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

Image8 read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image8 out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.channels = color ? 3 : 1;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG '" + path.string() + "': " + img.message);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Image8& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + img.message);
  }
}

// Next header token of a PNM file, skipping comments.
std::string pnm_token(std::istream& is) {
  std::string tok;
  char c;
  while (is.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(is, skip);
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
    } else {
      tok += c;
    }
  }
  return tok;
}

Image8 read_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  const std::string magic = pnm_token(is);
  if (magic != "P5" && magic != "P6") {
    throw IoError("'" + path.string() + "': only binary PGM (P5) / PPM (P6) are supported");
  }
  Image8 out;
  out.channels = magic == "P6" ? 3 : 1;
  try {
    out.width = std::stoi(pnm_token(is));
    out.height = std::stoi(pnm_token(is));
    if (std::stoi(pnm_token(is)) != 255) throw IoError("'" + path.string() + "': maxval must be 255");
  } catch (const std::logic_error&) {
    throw IoError("'" + path.string() + "': malformed PNM header");
  }
  if (out.width < 1 || out.height < 1) throw IoError("'" + path.string() + "': empty image");
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  if (!is.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(out.pixels.size()))) {
    throw IoError("'" + path.string() + "': truncated pixel data");
  }
  return out;
}

void write_pnm(const std::filesystem::path& path, const Image8& image) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << (image.channels == 3 ? "P6" : "P5") << "\n" << image.width << " " << image.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

bool is_supported_image(const std::filesystem::path& path) {
  const auto e = lower_ext(path);
  return e == ".png" || e == ".pgm" || e == ".ppm";
}

Image8 read_image(const std::filesystem::path& path) {
  const auto e = lower_ext(path);
  if (e == ".png") return read_png(path);
  if (e == ".pgm" || e == ".ppm") return read_pnm(path);
  throw IoError("unsupported image format '" + path.string() + "'");
}

void write_image(const std::filesystem::path& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3) throw UsageError("write_image: 1 or 3 channels");
  const auto e = lower_ext(path);
  if (e == ".png") return write_png(path, image);
  if (e == ".pgm" || e == ".ppm") {
    if ((e == ".pgm") != (image.channels == 1)) {
      throw UsageError("write_image: channel count does not match '" + e + "'");
    }
    return write_pnm(path, image);
  }
  throw IoError("unsupported image format '" + path.string() + "'");
}

Tensor image_to_tensor(const Image8& image, int channels) {
  if (channels != 1 && channels != 3) throw UsageError("image_to_tensor: 1 or 3 channels");
  const std::size_t hw = static_cast<std::size_t>(image.width) * image.height;
  std::vector<float> v(hw * channels);
  for (std::size_t i = 0; i < hw; ++i) {
    const std::uint8_t* px = &image.pixels[i * image.channels];
    if (channels == 1) {
      int acc = 0;
      for (int c = 0; c < image.channels; ++c) acc += px[c];
      v[i] = static_cast<float>((acc + image.channels / 2) / image.channels) / 255.0f;
    } else {
      for (int c = 0; c < 3; ++c) v[c * hw + i] = px[image.channels == 3 ? c : 0] / 255.0f;
    }
  }
  return Tensor::from_buffer<float>({channels, image.height, image.width}, std::move(v));
}

Image8 tensor_to_image(const Tensor& chw) {
  if (chw.rank() != 3 || (chw.dim(0) != 1 && chw.dim(0) != 3)) {
    throw DimensionError("tensor_to_image: expected [1 or 3, H, W], got " + shape_str(chw.shape()));
  }
  Image8 out;
  out.channels = static_cast<int>(chw.dim(0));
  out.height = static_cast<int>(chw.dim(1));
  out.width = static_cast<int>(chw.dim(2));
  const std::size_t hw = static_cast<std::size_t>(out.width) * out.height;
  auto v = chw.to_vector();
  out.pixels.resize(hw * out.channels);
  for (std::size_t i = 0; i < hw; ++i)
    for (int c = 0; c < out.channels; ++c) {
      const double x = std::clamp(v[c * hw + i], 0.0, 1.0);
      out.pixels[i * out.channels + c] = static_cast<std::uint8_t>(std::lround(x * 255.0));
    }
  return out;
}

}  // namespace deft
