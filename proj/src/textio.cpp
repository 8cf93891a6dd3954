#include "metacal/textio.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace metacal {

namespace {

std::string err_prefix(const std::filesystem::path& file, int line) {
  std::string s = file.string();
  if (line >= 0) s += ":" + std::to_string(line);
  return s;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw DataError(file, "cannot open for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError(file, "cannot open for reading");
  return in;
}

} // namespace

DataError::DataError(const std::filesystem::path& file, const std::string& message, int line)
    : std::runtime_error(err_prefix(file, line) + ": " + message) {}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::filesystem::path& file, int line) {
  char* end = nullptr;
  const std::string t = trim(s);
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw DataError(file, "cannot parse number '" + s + "'", line);
  return v;
}

void write_grid_tsv(const std::filesystem::path& file, const Grid& grid) {
  auto out = open_out(file);
  for (int s = 0; s < grid.cols; ++s) out << (s ? "\t" : "") << s;
  out << "\n";
  for (int t = 0; t < grid.rows; ++t) {
    for (int s = 0; s < grid.cols; ++s)
      out << (s ? "\t" : "") << format_double(grid.at(t, s));
    out << "\n";
  }
}

Grid read_grid_tsv(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line)) throw DataError(file, "empty grid file");
  const std::size_t cols = split_tabs(trim(line)).size();
  Grid grid;
  grid.cols = static_cast<int>(cols);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != cols)
      throw DataError(file,
                      "expected " + std::to_string(cols) + " columns, got " +
                          std::to_string(fields.size()),
                      lineno);
    for (const auto& f : fields) grid.data.push_back(parse_double(f, file, lineno));
    ++grid.rows;
  }
  if (grid.rows == 0) throw DataError(file, "grid has a header but no data rows");
  return grid;
}

void write_boundary_tsv(const std::filesystem::path& file, const BoundaryConditions& bc) {
  auto out = open_out(file);
  out << "t\tupstream_flow_vph\tupstream_speed_kmh\tdownstream_density_vpkpl\n";
  for (int t = 0; t < bc.horizon(); ++t) {
    out << t << '\t' << format_double(bc.upstream_flow[t]) << '\t'
        << format_double(bc.upstream_speed[t]) << '\t'
        << format_double(bc.downstream_density[t]) << "\n";
  }
}

BoundaryConditions read_boundary_tsv(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line)) throw DataError(file, "empty boundary file");
  BoundaryConditions bc;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw DataError(file, "expected 4 columns (t, flow, speed, density)", lineno);
    bc.upstream_flow.push_back(parse_double(fields[1], file, lineno));
    bc.upstream_speed.push_back(parse_double(fields[2], file, lineno));
    bc.downstream_density.push_back(parse_double(fields[3], file, lineno));
  }
  return bc;
}

void write_state_tsv(const std::filesystem::path& file, const TrafficState& state) {
  auto out = open_out(file);
  out << "segment\tdensity_vpkpl\tspeed_kmh\tflow_vph\n";
  for (int s = 0; s < state.size(); ++s) {
    out << s << '\t' << format_double(state.density[s]) << '\t'
        << format_double(state.speed[s]) << '\t' << format_double(state.flow[s]) << "\n";
  }
}

TrafficState read_state_tsv(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line)) throw DataError(file, "empty state file");
  TrafficState st;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw DataError(file, "expected 4 columns (segment, density, speed, flow)", lineno);
    st.density.push_back(parse_double(fields[1], file, lineno));
    st.speed.push_back(parse_double(fields[2], file, lineno));
    st.flow.push_back(parse_double(fields[3], file, lineno));
  }
  return st;
}

void write_schedule_tsv(const std::filesystem::path& file, const ParameterSchedule& schedule) {
  auto out = open_out(file);
  out << "# horizon=" << schedule.horizon << "\n";
  out << "block\tt_start\tsegment\ttau_h\teta\tkappa\ta\tv_free_kmh\trho_cr\tbeta\tr_vph\n";
  for (int k = 0; k < schedule.num_blocks(); ++k) {
    for (std::size_t s = 0; s < schedule.blocks[k].size(); ++s) {
      const SegmentParameters& p = schedule.blocks[k][s];
      out << k << '\t' << schedule.block_starts[k] << '\t' << s << '\t'
          << format_double(p.tau_h) << '\t' << format_double(p.eta) << '\t'
          << format_double(p.kappa) << '\t' << format_double(p.a) << '\t'
          << format_double(p.v_free_kmh) << '\t' << format_double(p.rho_cr) << '\t'
          << format_double(p.beta) << '\t' << format_double(p.r_vph) << "\n";
    }
  }
}

ParameterSchedule read_schedule_tsv(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line)) throw DataError(file, "empty schedule file");
  ParameterSchedule sched;
  sched.block_starts.clear();
  const std::string horizon_tag = "# horizon=";
  if (line.rfind(horizon_tag, 0) != 0)
    throw DataError(file, "missing '# horizon=' header", 1);
  sched.horizon = std::atoi(line.substr(horizon_tag.size()).c_str());
  std::getline(in, line); // column header
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 11) throw DataError(file, "expected 11 columns", lineno);
    const int block = std::atoi(fields[0].c_str());
    const int t_start = std::atoi(fields[1].c_str());
    const int segment = std::atoi(fields[2].c_str());
    if (block == static_cast<int>(sched.blocks.size())) {
      sched.blocks.emplace_back();
      sched.block_starts.push_back(t_start);
    } else if (block != static_cast<int>(sched.blocks.size()) - 1) {
      throw DataError(file, "block indices must be contiguous", lineno);
    }
    if (segment != static_cast<int>(sched.blocks.back().size()))
      throw DataError(file, "segment indices must be contiguous within a block", lineno);
    SegmentParameters p;
    p.tau_h = parse_double(fields[3], file, lineno);
    p.eta = parse_double(fields[4], file, lineno);
    p.kappa = parse_double(fields[5], file, lineno);
    p.a = parse_double(fields[6], file, lineno);
    p.v_free_kmh = parse_double(fields[7], file, lineno);
    p.rho_cr = parse_double(fields[8], file, lineno);
    p.beta = parse_double(fields[9], file, lineno);
    p.r_vph = parse_double(fields[10], file, lineno);
    sched.blocks.back().push_back(p);
  }
  if (sched.blocks.empty()) throw DataError(file, "schedule has no blocks");
  return sched;
}

void write_kv(const std::filesystem::path& file, const KvPairs& pairs) {
  auto out = open_out(file);
  for (const auto& [key, value] : pairs) out << key << " = " << value << "\n";
}

std::map<std::string, std::string> read_kv(const std::filesystem::path& file) {
  auto in = open_in(file);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) throw DataError(file, "expected 'key = value'", lineno);
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(std::atoi(t.c_str()));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(std::strtod(t.c_str(), nullptr));
  }
  return out;
}

std::uint64_t fnv1a_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError(file, "cannot open for digest");
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

std::string file_digest_hex(const std::filesystem::path& file) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_file(file)));
  return buf;
}

} // namespace metacal
