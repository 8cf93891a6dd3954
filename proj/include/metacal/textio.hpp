#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "metacal/grid.hpp"
#include "metacal/params.hpp"
#include "metacal/types.hpp"

namespace metacal {

/// Parse/validation failure with file (and line, when known) context.
class DataError : public std::runtime_error {
 public:
  DataError(const std::filesystem::path& file, const std::string& message, int line = -1);
};

/// Shortest round-trip-exact decimal form of a double.
std::string format_double(double v);
double parse_double(const std::string& s, const std::filesystem::path& file, int line);

// Grids: one header row with segment indices, then one row per time step.
void write_grid_tsv(const std::filesystem::path& file, const Grid& grid);
Grid read_grid_tsv(const std::filesystem::path& file);

void write_boundary_tsv(const std::filesystem::path& file, const BoundaryConditions& bc);
BoundaryConditions read_boundary_tsv(const std::filesystem::path& file);

void write_state_tsv(const std::filesystem::path& file, const TrafficState& state);
TrafficState read_state_tsv(const std::filesystem::path& file);

void write_schedule_tsv(const std::filesystem::path& file, const ParameterSchedule& schedule);
ParameterSchedule read_schedule_tsv(const std::filesystem::path& file);

// Ordered key = value configuration files; '#' starts a comment.
using KvPairs = std::vector<std::pair<std::string, std::string>>;
void write_kv(const std::filesystem::path& file, const KvPairs& pairs);
std::map<std::string, std::string> read_kv(const std::filesystem::path& file);

std::vector<int> parse_int_list(const std::string& csv);
std::vector<double> parse_double_list(const std::string& csv);

/// FNV-1a content digest used by run manifests.
std::uint64_t fnv1a_file(const std::filesystem::path& file);
std::string file_digest_hex(const std::filesystem::path& file);

} // namespace metacal
