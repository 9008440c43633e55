#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sbi {

// Sectioned key = value text format used for run configs and manifests.
//
//   [section]
//   key = value        # comment
//
// Keys are addressed as "section.key"; keys before any section header have no
// prefix. Insertion order is preserved so a rewrite round-trips cleanly.
class KvFile {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);

  bool has(const std::string& key) const { return map_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  const std::vector<std::string>& keys() const { return order_; }

  std::string to_string() const;
  void save(const std::string& path) const;
  static KvFile parse(const std::string& text);
  static KvFile load(const std::string& path);

 private:
  std::map<std::string, std::string> map_;
  std::vector<std::string> order_;
};

}  // namespace sbi
