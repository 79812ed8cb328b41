#include "pekar/report.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pekar {

Config::Config() {
  kv_ = {
      {"alpha", "4.0"},       {"sigma", "0.2"},        {"h", "0.1"},
      {"h_prime", "0.05"},    {"s", "0.04"},           {"q", "0.1"},
      {"grid.r_max", "30"},   {"grid.n", "4096"},      {"tall.r_max", "45"},
      {"tall.n", "6144"},     {"basis.lambda", "0.9"}, {"basis.ell", "0.08"},
      {"hessian.l_max", "8"}, {"hessian.M", "60"},     {"seed", "1"},
      {"jobs", "0"},          {"tol", "1e-9"},         {"mixing", "0.5"},
      {"samples", "580"},     {"trials", "1000"},      {"out_dir", "out"},
  };
}

Config Config::from_file(const std::string& path) {
  Config cfg;
  std::ifstream f(path);
  if (!f) throw ComputeError("Config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank)
        throw ComputeError("Config: line " + std::to_string(lineno) + " is not key=value");
      continue;
    }
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty()) throw ComputeError("Config: empty key at line " + std::to_string(lineno));
    cfg.kv_[key] = val;
  }
  cfg.validate();
  return cfg;
}

double Config::get_double(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ComputeError("Config: missing key " + key);
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ComputeError("Config: key " + key + " is not a number: " + it->second);
  }
}

int Config::get_int(const std::string& key) const {
  double v = get_double(key);
  int i = static_cast<int>(v);
  if (i != v) throw ComputeError("Config: key " + key + " is not an integer");
  return i;
}

std::string Config::get_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ComputeError("Config: missing key " + key);
  return it->second;
}

void Config::validate() const {
  double sigma = get_double("sigma"), h = get_double("h"), hp = get_double("h_prime");
  double s = get_double("s"), q = get_double("q");
  if (!(sigma > 0 && sigma <= 0.25))
    throw ComputeError("Config: sigma must be in (0, 1/4]");
  if (!(hp > 0 && hp < h)) throw ComputeError("Config: need 0 < h_prime < h");
  if (!(2 * s < h)) throw ComputeError("Config: need 2 s < h");
  if (!(q > 0 && q < 0.5)) throw ComputeError("Config: q must be in (0, 1/2)");
  if (!(get_double("tol") > 0)) throw ComputeError("Config: tol must be positive");
  double mix = get_double("mixing");
  if (!(mix > 0 && mix <= 1)) throw ComputeError("Config: mixing must be in (0, 1]");
}

std::string Config::canonical_dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : kv_) os << k << '=' << v << '\n';
  return os.str();
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void RunReport::write_json(const std::string& path, const Config& cfg) const {
  nlohmann::json j;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["artifact_version"] = artifact_version;
  j["wall_seconds"] = wall_seconds;
  j["timestamp"] = timestamp;  // not part of the hash
  for (const auto& [k, v] : cfg.entries()) j["config"][k] = v;
  for (const auto& [k, v] : metrics) j["metrics"][k] = v;
  for (const auto& c : checks) {
    nlohmann::json cj;
    cj["name"] = c.name;
    cj["pass"] = c.pass;
    if (!c.metrics.empty()) cj["metrics"] = nlohmann::json::parse(c.metrics, nullptr, false);
    j["checks"].push_back(cj);
  }
  j["all_pass"] = all_pass();
  std::ofstream f(path);
  if (!f) throw ComputeError("RunReport: cannot open " + path);
  f << j.dump(1) << '\n';
}

CacheLock::CacheLock(const std::string& dir) {
  path_ = dir + "/.lock";
  fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
  if (fd_ < 0) throw ComputeError("CacheLock: cannot open " + path_);
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw ComputeError("CacheLock: cache directory is in use: " + dir);
  }
}

CacheLock::~CacheLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace pekar
