#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace metacal {

struct FileRef {
  std::string path;
  std::string digest; // fnv1a-64 hex of the file content
  std::string role;   // e.g. "scenario", "schedule", "report"
};

/// Reproducibility record written next to every CLI artifact: command,
/// fully resolved configuration, seeds and content digests of all files
/// read and written.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<FileRef> inputs;
  std::vector<FileRef> outputs;
  double wall_clock_s = 0.0;
  std::string tool = "metacal";

  void add_input(const std::filesystem::path& file, const std::string& role);
  void add_output(const std::filesystem::path& file, const std::string& role);
};

void save_manifest(const RunManifest& manifest, const std::filesystem::path& file);
RunManifest load_manifest(const std::filesystem::path& file);

} // namespace metacal
