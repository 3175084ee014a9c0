// Run manifests: config echo, timings, and SHA-256 digests of every output file.
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

namespace sphgd::expcli {

inline constexpr const char* kArtifactVersion = "0.1.0";

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("SHA-256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline std::string file_sha256(const std::filesystem::path& p) { return sha256_hex(read_file(p)); }

struct PhaseTiming {
  std::string name;
  double seconds = 0.0;
};

/// Output files of one run, relative to the output directory, in write order.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path(name).string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed for " + path(name).string());
    add(name);
  }

  /// Registers a file written by someone else.
  void add(const std::string& name) {
    for (const auto& n : names_)
      if (n == name) return;
    names_.push_back(name);
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

class PhaseClock {
 public:
  PhaseClock() : start_(clock::now()), phase_start_(start_) {}

  void mark(std::string name) {
    const auto now = clock::now();
    phases_.push_back({std::move(name), seconds(phase_start_, now)});
    phase_start_ = now;
  }
  double total() const { return seconds(start_, clock::now()); }
  const std::vector<PhaseTiming>& phases() const { return phases_; }

 private:
  using clock = std::chrono::steady_clock;
  static double seconds(clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); }
  clock::time_point start_, phase_start_;
  std::vector<PhaseTiming> phases_;
};

/// Manifest JSON. Outputs carry their size and SHA-256 digest at the time of writing.
inline nlohmann::json build_manifest(const std::string& kind, std::uint64_t seed, unsigned threads,
                                     const nlohmann::json& config, const std::string& config_toml,
                                     const OutputSet& outputs, const PhaseClock& clock,
                                     const std::vector<std::string>& flags) {
  nlohmann::json m;
  m["artifact"] = "sphgd";
  m["version"] = kArtifactVersion;
  m["kind"] = kind;
  m["seed"] = seed;
  m["threads"] = threads;
  m["config"] = config;
  m["config_toml"] = config_toml;
  nlohmann::json phases = nlohmann::json::array();
  for (const auto& p : clock.phases()) phases.push_back({{"name", p.name}, {"seconds", p.seconds}});
  m["timings"] = {{"total_seconds", clock.total()}, {"phases", phases}};
  nlohmann::json files = nlohmann::json::array();
  for (const auto& name : outputs.names()) {
    const auto bytes = read_file(outputs.path(name));
    files.push_back({{"path", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }
  m["outputs"] = files;
  m["flags"] = flags;
  m["status"] = flags.empty() ? "ok" : "flagged";
  return m;
}

/// Checks that every listed output exists with the recorded digest; returns problems.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest) {
  std::vector<std::string> problems;
  for (const auto& f : manifest.at("outputs")) {
    const auto p = dir / f.at("path").get<std::string>();
    if (!std::filesystem::exists(p)) {
      problems.push_back("missing " + p.string());
      continue;
    }
    if (file_sha256(p) != f.at("sha256").get<std::string>()) problems.push_back("digest mismatch " + p.string());
  }
  return problems;
}

}  // namespace sphgd::expcli
