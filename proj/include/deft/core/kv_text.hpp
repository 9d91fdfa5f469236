#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace deft {

// Ordered `key = value` text with `#` comments. Used for every persisted
// configuration so files stay human-editable and diffable.
class KeyValueText {
 public:
  static KeyValueText parse(std::string_view text);

  void set(const std::string& key, std::string value);
  bool contains(const std::string& key) const;

  // Typed readers mark keys as consumed and leave `out` untouched when the key
  // is absent. Malformed values raise ConfigError.
  void read(const std::string& key, int& out);
  void read(const std::string& key, std::int64_t& out);
  void read(const std::string& key, std::uint64_t& out);
  void read(const std::string& key, double& out);
  void read(const std::string& key, bool& out);
  void read(const std::string& key, std::string& out);
  void read(const std::string& key, std::vector<int>& out);

  // Throws ConfigError naming the first key nobody read.
  void reject_unconsumed() const;

  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
  std::set<std::string> consumed_;

  const std::string* lookup(const std::string& key);
};

std::string format_double(double v);
std::string format_int_list(const std::vector<int>& v);

}  // namespace deft
