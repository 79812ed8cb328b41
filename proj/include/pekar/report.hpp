#pragma once

#include <map>
#include <string>
#include <vector>

#include "pekar/util.hpp"

namespace pekar {

// flat key=value configuration with typed access and the scaling-exponent
// constraints checked up front
class Config {
 public:
  Config();  // defaults
  static Config from_file(const std::string& path);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  void validate() const;  // throws ComputeError on constraint violations
  std::string canonical_dump() const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string metrics;  // short JSON fragment with the numbers behind it
};

struct RunReport {
  std::string command;
  std::string config_hash;
  std::string artifact_version;
  std::vector<CheckResult> checks;
  std::map<std::string, double> metrics;
  double wall_seconds = 0.0;
  std::string timestamp;  // excluded from the hash

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void write_json(const std::string& path, const Config& cfg) const;
};

uint64_t fnv1a(const std::string& s);
std::string hex64(uint64_t v);

// advisory lock on a cache directory; released on destruction
class CacheLock {
 public:
  explicit CacheLock(const std::string& dir);
  ~CacheLock();

 private:
  int fd_ = -1;
  std::string path_;
};

}  // namespace pekar
