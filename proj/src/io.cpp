#include "cloudlead/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cloudlead {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError("unparseable number '" + s + "' at " + context);
  return v;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw DataError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string format_timestamp(const Date& start, int step_minutes, Eigen::Index step) {
  const int per_day = 1440 / step_minutes;
  const Date day = add_days(start, static_cast<int>(step / per_day));
  const int minute_of_day = static_cast<int>(step % per_day) * step_minutes;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:00Z", format_date(day).c_str(),
                minute_of_day / 60, minute_of_day % 60);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void save_dataset(const Dataset& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);

  json sites = json::array();
  for (const auto& s : ds.sites) {
    json j{{"id", s.id}, {"x_km", s.x_km}, {"y_km", s.y_km}};
    if (s.capacity_kw) j["capacity_kw"] = *s.capacity_kw;
    sites.push_back(j);
  }
  write_text_atomic(dir / "sites.json", sites.dump(2) + "\n");

  json manifest{{"granularity_minutes", ds.step_minutes},
                {"normalized", ds.normalized},
                {"site_max", ds.site_max}};
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

  std::string csv;
  csv.reserve(static_cast<std::size_t>(ds.total_steps()) * (ds.n_sites() * 12 + 24));
  csv += "timestamp";
  for (const auto& s : ds.sites) csv += "," + s.id;
  csv += "\n";
  for (Eigen::Index t = 0; t < ds.total_steps(); ++t) {
    csv += format_timestamp(ds.start_date, ds.step_minutes, t);
    for (int i = 0; i < ds.n_sites(); ++i) {
      csv += ',';
      csv += format_double(ds.values(i, t));
    }
    csv += '\n';
  }
  write_text_atomic(dir / "irradiance.csv", csv);
}

Dataset load_dataset(const fs::path& dir) {
  Dataset ds;

  json sites;
  try {
    sites = json::parse(read_text(dir / "sites.json"));
  } catch (const json::exception& e) {
    throw DataError("sites.json: " + std::string(e.what()));
  }
  for (const auto& j : sites) {
    SiteMeta s;
    s.id = j.at("id").get<std::string>();
    s.x_km = j.at("x_km").get<double>();
    s.y_km = j.at("y_km").get<double>();
    if (j.contains("capacity_kw") && !j["capacity_kw"].is_null())
      s.capacity_kw = j["capacity_kw"].get<double>();
    ds.sites.push_back(std::move(s));
  }

  json manifest;
  try {
    manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  ds.step_minutes = manifest.at("granularity_minutes").get<int>();
  ds.normalized = manifest.at("normalized").get<bool>();
  if (manifest.contains("site_max"))
    ds.site_max = manifest["site_max"].get<std::map<std::string, double>>();
  if (ds.step_minutes <= 0 || 1440 % ds.step_minutes != 0)
    throw DataError("manifest granularity_minutes must divide 1440");

  std::ifstream in(dir / "irradiance.csv");
  if (!in) throw DataError("cannot open '" + (dir / "irradiance.csv").string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("irradiance.csv is empty");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "timestamp")
    throw DataError("irradiance.csv header must start with 'timestamp'");
  if (static_cast<int>(header.size()) - 1 != ds.n_sites())
    throw DataError("irradiance.csv has " + std::to_string(header.size() - 1) +
                    " value columns but sites.json lists " + std::to_string(ds.n_sites()));
  for (int i = 0; i < ds.n_sites(); ++i)
    if (header[static_cast<std::size_t>(i) + 1] != ds.sites[i].id)
      throw DataError("irradiance.csv column '" + header[i + 1] +
                      "' does not match site '" + ds.sites[i].id + "'");

  std::vector<double> flat;
  Eigen::Index row = 0;
  bool have_start = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != ds.n_sites() + 1)
      throw DataError("irradiance.csv row " + std::to_string(row + 2) + " has " +
                      std::to_string(cells.size()) + " cells");
    if (!have_start) {
      ds.start_date = parse_date(cells[0].substr(0, 10));
      if (cells[0].substr(10, 10) != std::string("T00:00:00Z"))
        throw DataError("irradiance.csv must start at midnight, got '" + cells[0] + "'");
      have_start = true;
    }
    const std::string expected = format_timestamp(ds.start_date, ds.step_minutes, row);
    if (cells[0] != expected)
      throw DataError("timestamp gap or misalignment at row " + std::to_string(row + 2) +
                      ": expected '" + expected + "', got '" + cells[0] + "'");
    for (int i = 0; i < ds.n_sites(); ++i) {
      const std::string ctx = "row " + std::to_string(row + 2) + ", column '" +
                              ds.sites[i].id + "'";
      const double v = parse_double(cells[static_cast<std::size_t>(i) + 1], ctx);
      if (std::isnan(v)) throw DataError("NaN cell at " + ctx);
      if (v < 0.0) throw DataError("negative irradiance at " + ctx);
      flat.push_back(v);
    }
    ++row;
  }
  const int per_day = 1440 / ds.step_minutes;
  if (row == 0 || row % per_day != 0)
    throw DataError("irradiance.csv has " + std::to_string(row) +
                    " rows, not a whole number of days");
  ds.n_days = static_cast<int>(row / per_day);
  ds.values.resize(ds.n_sites(), row);
  for (Eigen::Index t = 0; t < row; ++t)
    for (int i = 0; i < ds.n_sites(); ++i)
      ds.values(i, t) = flat[static_cast<std::size_t>(t) * ds.n_sites() + i];
  ds.validate();
  return ds;
}

}  // namespace cloudlead
