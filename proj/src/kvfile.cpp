#include "sbi/kvfile.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sbi/common.hpp"

namespace sbi {

namespace {
std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

void KvFile::set(const std::string& key, const std::string& value) {
  if (!map_.count(key)) order_.push_back(key);
  map_[key] = value;
}

void KvFile::set(const std::string& key, double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  set(key, std::string(buf));
}

void KvFile::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }

const std::string& KvFile::get(const std::string& key) const {
  auto it = map_.find(key);
  if (it == map_.end()) throw UsageError("missing config key '" + key + "'");
  return it->second;
}

std::string KvFile::get_or(const std::string& key, const std::string& fallback) const {
  auto it = map_.find(key);
  return it == map_.end() ? fallback : it->second;
}

double KvFile::get_double(const std::string& key) const { return std::strtod(get(key).c_str(), nullptr); }

double KvFile::get_double_or(const std::string& key, double fallback) const {
  auto it = map_.find(key);
  return it == map_.end() ? fallback : std::strtod(it->second.c_str(), nullptr);
}

std::int64_t KvFile::get_int(const std::string& key) const { return std::strtoll(get(key).c_str(), nullptr, 10); }

std::int64_t KvFile::get_int_or(const std::string& key, std::int64_t fallback) const {
  auto it = map_.find(key);
  return it == map_.end() ? fallback : std::strtoll(it->second.c_str(), nullptr, 10);
}

bool KvFile::get_bool_or(const std::string& key, bool fallback) const {
  auto it = map_.find(key);
  if (it == map_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key '" + key + "' is not a boolean: " + v);
}

std::string KvFile::to_string() const {
  // Group keys by section prefix, preserving first-seen section order.
  std::vector<std::string> sections;
  auto section_of = [](const std::string& key) {
    auto dot = key.find('.');
    return dot == std::string::npos ? std::string() : key.substr(0, dot);
  };
  for (const auto& k : order_) {
    const std::string s = section_of(k);
    bool seen = false;
    for (const auto& x : sections) seen = seen || x == s;
    if (!seen) sections.push_back(s);
  }
  std::ostringstream os;
  for (const auto& s : sections) {
    if (!s.empty()) os << "[" << s << "]\n";
    for (const auto& k : order_) {
      if (section_of(k) != s) continue;
      const std::string local = s.empty() ? k : k.substr(s.size() + 1);
      os << local << " = " << map_.at(k) << "\n";
    }
    os << "\n";
  }
  return os.str();
}

void KvFile::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot open " + path + " for writing");
  os << to_string();
}

KvFile KvFile::parse(const std::string& text) {
  KvFile kv;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError("bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("empty key at line " + std::to_string(lineno));
    kv.set(section.empty() ? key : section + "." + key, value);
  }
  return kv;
}

KvFile KvFile::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

}  // namespace sbi
