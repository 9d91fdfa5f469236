#include "deft/data/folder.hpp"

#include <fstream>
#include <map>

#include "json.hpp"

#include "deft/core/errors.hpp"
#include "deft/data/image_io.hpp"

namespace deft {

namespace fs = std::filesystem;

namespace {

std::map<std::string, fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_supported_image(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    if (!out.emplace(stem, entry.path()).second) {
      throw IoError("two files share the stem '" + stem + "' in '" + dir.string() + "'");
    }
  }
  return out;
}

Tensor binarize_mask(const Image8& m) {
  const std::size_t hw = static_cast<std::size_t>(m.width) * m.height;
  std::vector<float> v(hw);
  for (std::size_t i = 0; i < hw; ++i) {
    int acc = 0;
    for (int c = 0; c < m.channels; ++c) acc += m.pixels[i * m.channels + c];
    v[i] = (acc + m.channels / 2) / m.channels >= 128 ? 1.0f : 0.0f;
  }
  return Tensor::from_buffer<float>({1, m.height, m.width}, std::move(v));
}

}  // namespace

FolderDataset load_folder(const fs::path& images_dir, const fs::path& masks_dir) {
  const auto images = list_images(images_dir);
  const auto masks = list_images(masks_dir);
  FolderDataset ds;
  for (const auto& [stem, path] : images) {
    auto m = masks.find(stem);
    if (m == masks.end()) {
      ds.report.push_back({stem, "missing_mask"});
      continue;
    }
    const Image8 img = read_image(path);
    const Image8 mask = read_image(m->second);
    if (img.width != mask.width || img.height != mask.height) {
      ds.report.push_back({stem, "size_mismatch"});
      continue;
    }
    ds.samples.push_back({image_to_tensor(img, 3), binarize_mask(mask), stem});
    ds.report.push_back({stem, "ok"});
  }
  for (const auto& [stem, path] : masks) {
    if (!images.count(stem)) ds.report.push_back({stem, "missing_image"});
  }
  return ds;
}

FolderDataset load_dataset_dir(const fs::path& root) {
  return load_folder(root / "images", root / "masks");
}

void write_ingest_report(const fs::path& path, const std::vector<IngestEntry>& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& e : report) os << nlohmann::json{{"stem", e.stem}, {"status", e.status}}.dump() << "\n";
}

void save_dataset(const fs::path& root, const std::vector<Sample>& samples) {
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "masks", ec);
  if (ec) throw IoError("cannot create dataset directories under '" + root.string() + "': " + ec.message());
  for (const auto& s : samples) {
    write_image(root / "images" / (s.id + ".png"), tensor_to_image(s.image));
    write_image(root / "masks" / (s.id + ".png"), tensor_to_image(s.mask));
  }
}

}  // namespace deft
