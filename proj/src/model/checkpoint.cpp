#include "deft/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "deft/core/errors.hpp"

namespace deft {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian");

namespace {

constexpr char kMagic[4] = {'D', 'E', 'F', 'T'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw IoError("checkpoint truncated while reading " + what);
  }
  return v;
}

struct Record {
  DType dtype;
  Shape shape;
  std::string bytes;
};

void write_record(std::ostream& os, const NamedTensor& nt) {
  const Tensor& t = nt.tensor;
  put<std::uint16_t>(os, static_cast<std::uint16_t>(nt.name.size()));
  os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(t.dtype()));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  dispatch(t.dtype(), [&]<typename T>() {
    auto v = t.data<T>();
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(T)));
  });
}

}  // namespace

std::string model_config_blob(const ModelConfig& cfg) {
  KeyValueText kv;
  kv.set("format", "deft-model");
  kv.set("version", std::to_string(kCheckpointVersion));
  cfg.write(kv, "model.");
  return kv.str();
}

ModelConfig parse_model_config_blob(const std::string& blob) {
  auto kv = KeyValueText::parse(blob);
  std::string format;
  int version = 0;
  kv.read("format", format);
  kv.read("version", version);
  if (format != "deft-model") throw ConfigError("config blob: unexpected format '" + format + "'");
  if (version != kCheckpointVersion) {
    throw ConfigError("config blob: unsupported version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.read(kv, "model.");
  kv.reject_unconsumed();
  cfg.validate();
  return cfg;
}

void save_checkpoint(const std::filesystem::path& path, const DefTModel& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string blob = model_config_blob(model.config());
  os.write(kMagic, 4);
  put<std::uint16_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(blob.size()));
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  for (const auto& p : model.store().params()) write_record(os, p);
  for (const auto& b : model.store().buffers()) write_record(os, b);
  os.flush();
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

DefTModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint '" + path.string() + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("'" + path.string() + "' is not a DEFT checkpoint");
  }
  const auto version = get<std::uint16_t>(is, "version");
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto blob_len = get<std::uint32_t>(is, "config length");
  std::string blob(blob_len, '\0');
  if (!is.read(blob.data(), blob_len)) throw IoError("checkpoint truncated in config blob");
  ModelConfig cfg;
  try {
    cfg = parse_model_config_blob(blob);
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint config: ") + e.what());
  }

  std::map<std::string, Record> records;
  DType dtype = DType::kFloat32;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto name_len = get<std::uint16_t>(is, "record name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw IoError("checkpoint truncated in record name");
    Record rec;
    const auto tag = get<std::uint8_t>(is, name + " dtype");
    if (tag > 1) throw IoError("checkpoint record '" + name + "' has unknown dtype");
    rec.dtype = static_cast<DType>(tag);
    const auto rank = get<std::uint8_t>(is, name + " rank");
    for (int i = 0; i < rank; ++i) rec.shape.push_back(get<std::uint32_t>(is, name + " dims"));
    const std::size_t elem = rec.dtype == DType::kFloat32 ? 4 : 8;
    rec.bytes.resize(static_cast<std::size_t>(numel_of(rec.shape)) * elem);
    if (!is.read(rec.bytes.data(), static_cast<std::streamsize>(rec.bytes.size()))) {
      throw IoError("checkpoint truncated in values of '" + name + "'");
    }
    if (records.empty()) dtype = rec.dtype;
    if (!records.emplace(name, std::move(rec)).second) {
      throw IoError("checkpoint has duplicate record '" + name + "'");
    }
  }

  DefTModel model(cfg, 0, dtype);
  std::size_t used = 0;
  for (const auto* list : {&model.store().params(), &model.store().buffers()}) {
    for (const auto& nt : *list) {
      auto it = records.find(nt.name);
      if (it == records.end()) throw IoError("checkpoint is missing '" + nt.name + "'");
      const Record& rec = it->second;
      if (rec.dtype != nt.tensor.dtype() || rec.shape != nt.tensor.shape()) {
        throw IoError("checkpoint record '" + nt.name + "' has shape " + shape_str(rec.shape) +
                      ", model expects " + shape_str(nt.tensor.shape()));
      }
      Tensor t = nt.tensor;
      dispatch(t.dtype(), [&]<typename T>() {
        auto dst = t.mutable_data<T>();
        std::memcpy(dst.data(), rec.bytes.data(), rec.bytes.size());
      });
      ++used;
    }
  }
  if (used != records.size()) throw IoError("checkpoint has records the model does not use");
  return model;
}

}  // namespace deft
