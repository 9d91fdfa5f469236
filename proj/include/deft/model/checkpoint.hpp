#pragma once

#include <filesystem>
#include <string>

#include "deft/model/deft_model.hpp"

namespace deft {

inline constexpr std::uint16_t kCheckpointVersion = 1;

// Canonical text form of a model config as stored in checkpoints.
std::string model_config_blob(const ModelConfig& cfg);
ModelConfig parse_model_config_blob(const std::string& blob);

// Layout: "DEFT", u16 version, u32 config length, config text, then one record
// per parameter and buffer: u16 name length, name, u8 dtype, u8 rank,
// u32 dims, raw little-endian values. Throws IoError on failure.
void save_checkpoint(const std::filesystem::path& path, const DefTModel& model);
DefTModel load_checkpoint(const std::filesystem::path& path);

}  // namespace deft
