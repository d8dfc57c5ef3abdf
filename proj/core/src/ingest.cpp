#include "cmlrain/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmlrain/errors.hpp"
#include "json.hpp"

namespace cmlrain {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_cell(const std::string& s) {
  if (s.empty() || s == "nan" || s == "NaN" || s == "NA") return std::nullopt;
  const char* begin = s.data();
  const char* end = begin + s.size();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

struct ParsedFile {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

ParsedFile read_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingInput("cannot open: " + path);
  ParsedFile out;
  std::string line;
  bool header_seen = false;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen && line[0] == '#') {
      std::string body = trim(line.substr(1));
      size_t eq = body.find('=');
      if (eq != std::string::npos) {
        out.meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      }
      continue;
    }
    if (!header_seen) {
      out.header = split_csv(line);
      header_seen = true;
      continue;
    }
    out.rows.push_back(split_csv(line));
  }
  if (!header_seen) throw EmptyFile(path + " has no header row");
  if (out.rows.empty()) throw EmptyFile(path + " has a header but no data rows");
  return out;
}

int find_column(const ParsedFile& pf, const ColumnMap& cols,
                const std::string& canonical, const std::string& path) {
  std::string wanted = canonical;
  auto it = cols.find(canonical);
  if (it != cols.end()) wanted = it->second;
  for (size_t i = 0; i < pf.header.size(); ++i) {
    if (pf.header[i] == wanted) return static_cast<int>(i);
  }
  throw MalformedHeader(path + ": missing column '" + wanted + "' (for " +
                        canonical + ")");
}

double meta_number(const ParsedFile& pf, const std::string& key,
                   const std::string& path) {
  auto it = pf.meta.find(key);
  if (it == pf.meta.end()) {
    throw MalformedHeader(path + ": missing metadata '# " + key + " = ...'");
  }
  auto v = parse_cell(it->second);
  if (!v) throw MalformedHeader(path + ": bad numeric metadata for " + key);
  return *v;
}

// Reads timestamp + value columns onto the uniform grid implied by the
// first two rows. Grid gaps become missing samples; a timestamp that moves
// backwards or off-grid is an error.
struct GridSeries {
  int64_t start;
  int step_s;
  std::vector<std::vector<std::optional<double>>> columns;
};

GridSeries read_grid(const ParsedFile& pf, int time_col,
                     const std::vector<int>& value_cols, int declared_step,
                     const std::string& path) {
  std::vector<int64_t> times;
  times.reserve(pf.rows.size());
  for (const auto& row : pf.rows) {
    if (time_col >= static_cast<int>(row.size())) {
      throw MalformedHeader(path + ": short row");
    }
    times.push_back(parse_iso8601(row[time_col]));
  }
  for (size_t i = 1; i < times.size(); ++i) {
    if (times[i] <= times[i - 1]) {
      throw NonMonotonicTimestamps(path + " row " + std::to_string(i + 1));
    }
  }
  int step = declared_step;
  if (step <= 0) {
    step = times.size() > 1 ? static_cast<int>(times[1] - times[0]) : 60;
  }
  for (size_t i = 1; i < times.size(); ++i) {
    if ((times[i] - times[0]) % step != 0) {
      throw MalformedHeader(path + ": timestamp off the " + std::to_string(step) +
                            "s grid at row " + std::to_string(i + 1));
    }
  }
  GridSeries out;
  out.start = times[0];
  out.step_s = step;
  size_t n = static_cast<size_t>((times.back() - times.front()) / step) + 1;
  out.columns.assign(value_cols.size(), std::vector<std::optional<double>>(n));
  for (size_t r = 0; r < pf.rows.size(); ++r) {
    size_t slot = static_cast<size_t>((times[r] - times[0]) / step);
    for (size_t c = 0; c < value_cols.size(); ++c) {
      int col = value_cols[c];
      if (col < static_cast<int>(pf.rows[r].size())) {
        out.columns[c][slot] = parse_cell(pf.rows[r][col]);
      }
    }
  }
  return out;
}

std::string format_value(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", *v);
  return buf;
}

}  // namespace

ColumnMap load_column_map(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingInput("cannot open column map: " + path);
  nlohmann::json j = nlohmann::json::parse(f, nullptr, true, true);
  ColumnMap out;
  for (auto& [k, v] : j.items()) out[k] = v.get<std::string>();
  return out;
}

LinkRecord parse_link_csv(const std::string& path, const ColumnMap& cols) {
  ParsedFile pf = read_csv_file(path);
  LinkRecord rec;
  rec.meta.link_id = pf.meta.count("link_id") ? pf.meta.at("link_id") : path;
  rec.meta.length_km = meta_number(pf, "length_km", path);
  rec.meta.frequency_ghz = meta_number(pf, "frequency_ghz", path);
  rec.meta.sampling_interval_s =
      pf.meta.count("sampling_interval_s")
          ? static_cast<int>(meta_number(pf, "sampling_interval_s", path))
          : 10;
  if (pf.meta.count("polarization")) rec.meta.polarization = pf.meta.at("polarization");
  for (auto [field, key] : {std::pair<double*, const char*>{&rec.meta.near_lat, "near_lat"},
                            {&rec.meta.near_lon, "near_lon"},
                            {&rec.meta.far_lat, "far_lat"},
                            {&rec.meta.far_lon, "far_lon"}}) {
    if (pf.meta.count(key)) *field = meta_number(pf, key, path);
  }
  rec.meta.validate();

  int tc = find_column(pf, cols, "time", path);
  int rc = find_column(pf, cols, "rsl", path);
  int sc = find_column(pf, cols, "tsl", path);
  GridSeries grid = read_grid(pf, tc, {rc, sc}, rec.meta.sampling_interval_s, path);

  rec.rsl.start = grid.start;
  rec.rsl.step_s = grid.step_s;
  rec.rsl.unit = Unit::dBm;
  rec.rsl.values = std::move(grid.columns[0]);
  rec.tsl.start = grid.start;
  rec.tsl.step_s = grid.step_s;
  rec.tsl.unit = Unit::dBm;
  rec.tsl.values = std::move(grid.columns[1]);
  return rec;
}

GaugeRecord parse_gauge_csv(const std::string& path, const ColumnMap& cols) {
  ParsedFile pf = read_csv_file(path);
  GaugeRecord rec;
  rec.gauge_id = pf.meta.count("gauge_id") ? pf.meta.at("gauge_id") : path;
  rec.resolution_mm =
      pf.meta.count("resolution_mm") ? meta_number(pf, "resolution_mm", path) : 0.1;
  if (pf.meta.count("gauge_type")) rec.gauge_type = pf.meta.at("gauge_type");

  int tc = find_column(pf, cols, "time", path);
  int ac = find_column(pf, cols, "accum_mm", path);
  GridSeries grid = read_grid(pf, tc, {ac}, 0, path);

  rec.series.start = grid.start;
  rec.series.step_s = grid.step_s;
  rec.series.unit = Unit::mm_accum;
  rec.series.values = std::move(grid.columns[0]);
  rec.validate();
  return rec;
}

void write_link_csv(const std::string& path, const LinkRecord& link) {
  std::ofstream f(path);
  if (!f) throw IoFailure("cannot open for write: " + path);
  f << "# link_id = " << link.meta.link_id << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", link.meta.length_km);
  f << "# length_km = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", link.meta.frequency_ghz);
  f << "# frequency_ghz = " << buf << "\n";
  f << "# sampling_interval_s = " << link.meta.sampling_interval_s << "\n";
  f << "# polarization = " << link.meta.polarization << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", link.meta.near_lat);
  f << "# near_lat = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", link.meta.near_lon);
  f << "# near_lon = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", link.meta.far_lat);
  f << "# far_lat = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", link.meta.far_lon);
  f << "# far_lon = " << buf << "\n";
  f << "time,rsl,tsl\n";
  for (size_t i = 0; i < link.rsl.size(); ++i) {
    f << format_iso8601(link.rsl.time_at(i)) << ","
      << format_value(link.rsl.values[i]) << ","
      << format_value(i < link.tsl.size() ? link.tsl.values[i] : std::nullopt)
      << "\n";
  }
  if (!f) throw IoFailure("write failed: " + path);
}

void write_gauge_csv(const std::string& path, const GaugeRecord& gauge) {
  std::ofstream f(path);
  if (!f) throw IoFailure("cannot open for write: " + path);
  f << "# gauge_id = " << gauge.gauge_id << "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", gauge.resolution_mm);
  f << "# resolution_mm = " << buf << "\n";
  f << "# gauge_type = " << gauge.gauge_type << "\n";
  f << "time,accum_mm\n";
  for (size_t i = 0; i < gauge.series.size(); ++i) {
    f << format_iso8601(gauge.series.time_at(i)) << ","
      << format_value(gauge.series.values[i]) << "\n";
  }
  if (!f) throw IoFailure("write failed: " + path);
}

}  // namespace cmlrain
