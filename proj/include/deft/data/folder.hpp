#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deft/data/sample.hpp"

namespace deft {

struct IngestEntry {
  std::string stem;
  // "ok", "missing_mask", "missing_image" or "size_mismatch"
  std::string status;
};

struct FolderDataset {
  std::vector<Sample> samples;  // sorted by stem
  std::vector<IngestEntry> report;
};

// Pairs images and masks by filename stem. Images are normalized to [0, 1]
// (gray replicated to 3 channels); masks are binarized at 128/255. Unpaired
// files are reported and skipped; unreadable files throw IoError.
FolderDataset load_folder(const std::filesystem::path& images_dir,
                          const std::filesystem::path& masks_dir);

// <root>/images and <root>/masks.
FolderDataset load_dataset_dir(const std::filesystem::path& root);

// JSON lines: {"stem": ..., "status": ...}
void write_ingest_report(const std::filesystem::path& path, const std::vector<IngestEntry>& report);

// Writes <root>/images/<id>.png (RGB) and <root>/masks/<id>.png (gray 0/255).
void save_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples);

}  // namespace deft
