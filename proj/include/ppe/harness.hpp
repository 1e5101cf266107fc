#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ppe/channel.hpp"
#include "ppe/estimator.hpp"
#include "ppe/fiber.hpp"
#include "ppe/offset.hpp"
#include "ppe/waveform.hpp"

namespace ppe {

enum class ScalePreset { Paper, Desk };

std::string_view to_string(ScalePreset preset);
ScalePreset parse_preset(std::string_view name);

/// One experiment grid: every modulation x launch power x target SER.
///
/// JSON keys (all optional, unknown keys are rejected):
///   name, preset ("paper" | "desk"), modulation (int or list),
///   baud_rate_gbaud, samples_per_symbol, rolloff, filter_span_symbols,
///   launch_power_dbm (number or list), target_ser (list),
///   noiseless_point (bool), symbol_count, seed, dz_km, ssfm_step_km,
///   fit_positions_km (list), calibration_tolerance, cpr_test_phases,
///   memory_budget_mib, output_dir,
///   link: { span_length_km, span_count, alpha_db_per_km,
///           dispersion_ps_nm_km, gamma_per_w_km, wavelength_nm }
struct ExperimentConfig {
  std::string name = "experiment";
  ScalePreset preset = ScalePreset::Desk;
  std::vector<int> modulations{16};
  ShapingConfig shaping;
  std::vector<double> launch_powers_dbm{8.0};
  FiberLink link;
  SsfmConfig ssfm;
  std::vector<double> target_sers{0.02, 0.04, 0.08};
  bool noiseless_point = false;  ///< adds an n0 = 0 point to every group
  std::size_t symbol_count = std::size_t{1} << 14;
  std::uint64_t seed = 1;
  std::vector<double> fit_positions_km{0.0};
  double calibration_tolerance = 0.05;
  int cpr_test_phases = 64;
  std::size_t memory_budget_bytes = std::size_t{4} << 30;
  std::string output_dir = "results";

  void validate() const;
  nlohmann::json to_json() const;
};

/// Defaults of a scale preset: desk uses dz = 4 km, paper dz = 1 km.
ExperimentConfig preset_config(ScalePreset preset);

/// Preset defaults overlaid with the document's keys. `preset_override`
/// replaces the document's own "preset" entry.
ExperimentConfig config_from_json(const nlohmann::json& doc,
                                  std::optional<ScalePreset> preset_override = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<ScalePreset> preset_override = std::nullopt);

/// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Deterministic per-stage seeds expanded from one master seed. Symbols
/// depend only on M (identical across launch powers); noise depends only
/// on M, so one unit-variance sequence serves every target SER.
struct SeedPlan {
  std::uint64_t master = 0;

  std::uint64_t symbols(int modulation) const;
  std::uint64_t noise(int modulation) const;
};

struct GridPoint {
  std::size_t index = 0;
  int modulation = 16;
  double launch_power_dbm = 0.0;
  std::optional<double> target_ser;  ///< empty for the noiseless point

  std::string run_id() const;
  std::string group_id() const;
};

std::vector<GridPoint> expand_grid(const ExperimentConfig& config);

struct PointTimings {
  double calibrate_s = 0.0;
  double estimate_s = 0.0;
  double virtual_s = 0.0;
};

struct PointResult {
  GridPoint point;
  bool ok = false;
  std::string error;

  double n0 = 0.0;
  double measured_ser = 0.0;
  int calibration_evaluations = 0;
  double cpr_phase = 0.0;
  double condition_tx = 0.0;
  double condition_hd = 0.0;
  /// max |est_hd + po - est_virtual| / max |est_virtual|
  double identity_error = 0.0;

  ReferenceProfile reference;
  PowerProfileEstimate est_tx;
  PowerProfileEstimate est_hd;
  PowerProfileEstimate est_virtual;
  PowerProfileEstimate est_corrected;
  OffsetReport offset;
  std::vector<std::string> warnings;
  PointTimings timings;
};

struct FitResult {
  std::string run_id;  ///< group id (modulation and launch power)
  int modulation = 0;
  double launch_power_dbm = 0.0;
  double z_km = 0.0;
  OffsetFit fit;
};

struct RunRecord {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<PointResult> points;  ///< in grid order
  std::vector<FitResult> fits;
  std::vector<std::string> notes;   ///< skipped fits and similar
  std::vector<std::pair<std::string, double>> group_seconds;

  bool all_succeeded() const;
};

struct RunOptions {
  unsigned threads = 1;
  std::function<void(const std::string&)> progress;
};

/// Runs every grid point. Each (M, power) group shares one propagation and
/// one TX matrix; failures are recorded per point and the grid continues.
RunRecord run_grid(const ExperimentConfig& config, const RunOptions& options = {});

/// Fits po(SER) at each requested position over the successful points of
/// every (M, power) group with at least four distinct SER values.
std::vector<FitResult> fit_groups(const std::vector<PointResult>& points,
                                  const std::vector<double>& positions_km,
                                  std::vector<std::string>* notes = nullptr);

/// Writes profiles.csv, offsets.csv, fits.csv and manifest.json (manifest
/// only for an empty grid). Checks that the directory is writable before
/// writing anything.
void emit_results(const RunRecord& record, const std::filesystem::path& dir);

/// Output directory: explicit flag, then $PPE_OUT_DIR, then the config's own.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                         const ExperimentConfig& config);

}  // namespace ppe
