#include "deft/core/kv_text.hpp"

#include <charconv>
#include <cstdint>

#include "deft/core/errors.hpp"

namespace deft {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

KeyValueText KeyValueText::parse(std::string_view text) {
  KeyValueText kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (kv.contains(key)) throw ConfigError("config key '" + key + "' given twice");
    kv.set(key, std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

void KeyValueText::set(const std::string& key, std::string value) {
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second].second = std::move(value);
    return;
  }
  index_[key] = entries_.size();
  entries_.emplace_back(key, std::move(value));
}

bool KeyValueText::contains(const std::string& key) const { return index_.count(key) > 0; }

const std::string* KeyValueText::lookup(const std::string& key) {
  auto it = index_.find(key);
  if (it == index_.end()) return nullptr;
  consumed_.insert(key);
  return &entries_[it->second].second;
}

void KeyValueText::read(const std::string& key, int& out) {
  if (auto* v = lookup(key)) out = parse_number<int>(key, *v);
}

void KeyValueText::read(const std::string& key, std::int64_t& out) {
  if (auto* v = lookup(key)) out = parse_number<std::int64_t>(key, *v);
}

void KeyValueText::read(const std::string& key, std::uint64_t& out) {
  if (auto* v = lookup(key)) out = parse_number<std::uint64_t>(key, *v);
}

void KeyValueText::read(const std::string& key, double& out) {
  if (auto* v = lookup(key)) out = parse_number<double>(key, *v);
}

void KeyValueText::read(const std::string& key, bool& out) {
  auto* v = lookup(key);
  if (v == nullptr) return;
  if (*v == "true" || *v == "1") {
    out = true;
  } else if (*v == "false" || *v == "0") {
    out = false;
  } else {
    throw ConfigError("config key '" + key + "': expected true/false, got '" + *v + "'");
  }
}

void KeyValueText::read(const std::string& key, std::string& out) {
  if (auto* v = lookup(key)) out = *v;
}

void KeyValueText::read(const std::string& key, std::vector<int>& out) {
  auto* v = lookup(key);
  if (v == nullptr) return;
  std::vector<int> values;
  std::string_view rest = *v;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    std::string item(trim(rest.substr(0, comma)));
    values.push_back(parse_number<int>(key, item));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  out = std::move(values);
}

void KeyValueText::reject_unconsumed() const {
  for (const auto& [key, value] : entries_) {
    if (!consumed_.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string KeyValueText::str() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace deft
