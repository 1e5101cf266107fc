#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ppe/offset.hpp"

namespace ppe {

/// Decimal form that parses back to the same double ("%.17g"; "nan" for NaN).
std::string format_double(double value);

struct ProfileRow {
  std::string run_id;
  double position_km = 0.0;
  double gamma_prime_ref = 0.0;
  double est_tx = 0.0;
  double est_hd = 0.0;
  double est_corrected = 0.0;
};

struct OffsetRow {
  std::string run_id;
  double position_km = 0.0;
  double ser = 0.0;
  double power_dbm = 0.0;
  int modulation = 0;
  double po_linear = 0.0;
  double po_db = 0.0;
};

struct FitRow {
  std::string run_id;
  double z_km = 0.0;
  double k = 0.0;
  double p = 0.0;
  double q = 0.0;
  double r2 = 0.0;
};

inline constexpr const char* kProfilesHeader =
    "run_id,position_km,gamma_prime_ref,est_tx,est_hd,est_corrected";
inline constexpr const char* kOffsetsHeader = "run_id,position_km,ser,power_dbm,M,po_linear,po_db";
inline constexpr const char* kFitsHeader = "run_id,z_km,k,p,q,r2";

void write_profiles_csv(const std::filesystem::path& path, const std::vector<ProfileRow>& rows);
void write_offsets_csv(const std::filesystem::path& path, const std::vector<OffsetRow>& rows);
void write_fits_csv(const std::filesystem::path& path, const std::vector<FitRow>& rows);

/// Readers check the header and reject malformed rows, naming the line.
std::vector<ProfileRow> read_profiles_csv(const std::filesystem::path& path);
std::vector<OffsetRow> read_offsets_csv(const std::filesystem::path& path);
std::vector<FitRow> read_fits_csv(const std::filesystem::path& path);

}  // namespace ppe
