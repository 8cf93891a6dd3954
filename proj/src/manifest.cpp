#include "metacal/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "metacal/textio.hpp"

namespace metacal {

using nlohmann::json;

void RunManifest::add_input(const std::filesystem::path& file, const std::string& role) {
  inputs.push_back({file.string(), file_digest_hex(file), role});
}

void RunManifest::add_output(const std::filesystem::path& file, const std::string& role) {
  outputs.push_back({file.string(), file_digest_hex(file), role});
}

namespace {
json refs_to_json(const std::vector<FileRef>& refs) {
  json arr = json::array();
  for (const FileRef& r : refs)
    arr.push_back({{"path", r.path}, {"digest", r.digest}, {"role", r.role}});
  return arr;
}

std::vector<FileRef> refs_from_json(const json& arr) {
  std::vector<FileRef> refs;
  for (const auto& item : arr)
    refs.push_back({item.at("path").get<std::string>(),
                    item.at("digest").get<std::string>(),
                    item.value("role", std::string{})});
  return refs;
}
} // namespace

void save_manifest(const RunManifest& manifest, const std::filesystem::path& file) {
  json j;
  j["tool"] = manifest.tool;
  j["command"] = manifest.command;
  j["argv"] = manifest.argv;
  j["config"] = manifest.config;
  j["seed"] = manifest.seed;
  j["inputs"] = refs_to_json(manifest.inputs);
  j["outputs"] = refs_to_json(manifest.outputs);
  j["wall_clock_s"] = manifest.wall_clock_s;
  std::ofstream out(file);
  if (!out) throw DataError(file, "cannot open for writing");
  out << j.dump(2) << "\n";
}

RunManifest load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError(file, "cannot open for reading");
  json j;
  in >> j;
  RunManifest m;
  m.tool = j.value("tool", std::string{"metacal"});
  m.command = j.at("command").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  m.config = j.at("config").get<std::map<std::string, std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.inputs = refs_from_json(j.at("inputs"));
  m.outputs = refs_from_json(j.at("outputs"));
  m.wall_clock_s = j.value("wall_clock_s", 0.0);
  return m;
}

} // namespace metacal
