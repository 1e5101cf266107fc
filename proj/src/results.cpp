#include "ppe/results.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ppe {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size())
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": bad number '" +
                             text + "'");
  return v;
}

// Calls on_row(fields, line_number) for every data row after checking the header.
template <typename OnRow>
void read_csv(const std::filesystem::path& path, const char* header, std::size_t columns,
              OnRow on_row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw std::runtime_error(path.string() + ": expected header '" + header + "'");
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != columns)
      throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": expected " +
                               std::to_string(columns) + " fields");
    on_row(fields, number);
  }
}

}  // namespace

void write_profiles_csv(const std::filesystem::path& path, const std::vector<ProfileRow>& rows) {
  auto out = open_for_write(path);
  out << kProfilesHeader << '\n';
  for (const auto& r : rows)
    out << r.run_id << ',' << format_double(r.position_km) << ','
        << format_double(r.gamma_prime_ref) << ',' << format_double(r.est_tx) << ','
        << format_double(r.est_hd) << ',' << format_double(r.est_corrected) << '\n';
  finish(out, path);
}

void write_offsets_csv(const std::filesystem::path& path, const std::vector<OffsetRow>& rows) {
  auto out = open_for_write(path);
  out << kOffsetsHeader << '\n';
  for (const auto& r : rows)
    out << r.run_id << ',' << format_double(r.position_km) << ',' << format_double(r.ser) << ','
        << format_double(r.power_dbm) << ',' << r.modulation << ',' << format_double(r.po_linear)
        << ',' << format_double(r.po_db) << '\n';
  finish(out, path);
}

void write_fits_csv(const std::filesystem::path& path, const std::vector<FitRow>& rows) {
  auto out = open_for_write(path);
  out << kFitsHeader << '\n';
  for (const auto& r : rows)
    out << r.run_id << ',' << format_double(r.z_km) << ',' << format_double(r.k) << ','
        << format_double(r.p) << ',' << format_double(r.q) << ',' << format_double(r.r2) << '\n';
  finish(out, path);
}

std::vector<ProfileRow> read_profiles_csv(const std::filesystem::path& path) {
  std::vector<ProfileRow> rows;
  read_csv(path, kProfilesHeader, 6, [&](const std::vector<std::string>& f, std::size_t n) {
    rows.push_back({f[0], parse_double(f[1], path, n), parse_double(f[2], path, n),
                    parse_double(f[3], path, n), parse_double(f[4], path, n),
                    parse_double(f[5], path, n)});
  });
  return rows;
}

std::vector<OffsetRow> read_offsets_csv(const std::filesystem::path& path) {
  std::vector<OffsetRow> rows;
  read_csv(path, kOffsetsHeader, 7, [&](const std::vector<std::string>& f, std::size_t n) {
    rows.push_back({f[0], parse_double(f[1], path, n), parse_double(f[2], path, n),
                    parse_double(f[3], path, n), static_cast<int>(parse_double(f[4], path, n)),
                    parse_double(f[5], path, n), parse_double(f[6], path, n)});
  });
  return rows;
}

std::vector<FitRow> read_fits_csv(const std::filesystem::path& path) {
  std::vector<FitRow> rows;
  read_csv(path, kFitsHeader, 6, [&](const std::vector<std::string>& f, std::size_t n) {
    rows.push_back({f[0], parse_double(f[1], path, n), parse_double(f[2], path, n),
                    parse_double(f[3], path, n), parse_double(f[4], path, n),
                    parse_double(f[5], path, n)});
  });
  return rows;
}

}  // namespace ppe
