#include "ppe/harness.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ppe/fft.hpp"
#include "ppe/parallel.hpp"
#include "ppe/results.hpp"
#include "ppe/rxdsp.hpp"

namespace ppe {

namespace {

constexpr const char* kVersion = "1.0.0";

using json = nlohmann::json;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive(std::uint64_t master, std::uint64_t stream, std::uint64_t key) {
  std::uint64_t state = master;
  std::uint64_t a = splitmix64(state);
  state = a ^ (stream * 0xd1b54a32d192ed03ULL);
  std::uint64_t b = splitmix64(state);
  state = b ^ (key * 0x9e3779b97f4a7c15ULL);
  return splitmix64(state);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string compact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

template <typename T>
std::vector<T> scalar_or_list(const json& value, const char* key) {
  std::vector<T> out;
  if (value.is_array()) {
    for (const auto& v : value) out.push_back(v.get<T>());
  } else if (value.is_number()) {
    out.push_back(value.get<T>());
  } else {
    throw std::invalid_argument(std::string("config: '") + key + "' must be a number or a list");
  }
  return out;
}

void apply_link(FiberLink& link, const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config: 'link' must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "span_length_km") link.span_length_km = value.get<double>();
    else if (key == "span_count") link.span_count = value.get<int>();
    else if (key == "alpha_db_per_km") link.alpha_db_per_km = value.get<double>();
    else if (key == "dispersion_ps_nm_km") link.dispersion_ps_nm_km = value.get<double>();
    else if (key == "gamma_per_w_km") link.gamma_per_w_km = value.get<double>();
    else if (key == "wavelength_nm") link.wavelength_nm = value.get<double>();
    else throw std::invalid_argument("config: unknown key 'link." + key + "'");
  }
}

}  // namespace

std::string_view to_string(ScalePreset preset) {
  return preset == ScalePreset::Paper ? "paper" : "desk";
}

ScalePreset parse_preset(std::string_view name) {
  if (name == "paper") return ScalePreset::Paper;
  if (name == "desk") return ScalePreset::Desk;
  throw std::invalid_argument("unknown preset '" + std::string(name) + "' (paper | desk)");
}

ExperimentConfig preset_config(ScalePreset preset) {
  ExperimentConfig config;
  config.preset = preset;
  config.link.dz_km = preset == ScalePreset::Paper ? 1.0 : 4.0;
  return config;
}

void ExperimentConfig::validate() const {
  for (int m : modulations) build_qam(m);
  for (double p : launch_powers_dbm)
    if (!std::isfinite(p)) throw std::invalid_argument("config: launch powers must be finite");
  for (double s : target_sers)
    if (!(s > 0.0 && s <= 0.3))
      throw std::invalid_argument("config: every target SER must be in (0, 0.3]");
  shaping.validate();
  link.validate();
  if (!divides(ssfm.step_km, link.span_length_km))
    throw std::invalid_argument("config: ssfm_step_km must divide the span length");
  if (symbol_count < 16) throw std::invalid_argument("config: symbol_count must be >= 16");
  if (!(calibration_tolerance > 0.0 && calibration_tolerance < 1.0))
    throw std::invalid_argument("config: calibration_tolerance must be in (0, 1)");
  if (cpr_test_phases < 16) throw std::invalid_argument("config: cpr_test_phases must be >= 16");
  for (double z : fit_positions_km) {
    const double ratio = z / link.dz_km;
    if (z < 0.0 || z >= link.total_length_km() || std::abs(ratio - std::round(ratio)) > 1e-9)
      throw std::invalid_argument("config: fit position " + compact(z) +
                                  " km is not on the estimation grid");
  }
}

json ExperimentConfig::to_json() const {
  return json{
      {"name", name},
      {"preset", std::string(ppe::to_string(preset))},
      {"modulation", modulations},
      {"baud_rate_gbaud", shaping.symbol_rate / 1e9},
      {"samples_per_symbol", shaping.samples_per_symbol},
      {"rolloff", shaping.rolloff},
      {"filter_span_symbols", shaping.filter_span_symbols},
      {"launch_power_dbm", launch_powers_dbm},
      {"target_ser", target_sers},
      {"noiseless_point", noiseless_point},
      {"symbol_count", symbol_count},
      {"seed", seed},
      {"dz_km", link.dz_km},
      {"ssfm_step_km", ssfm.step_km},
      {"fit_positions_km", fit_positions_km},
      {"calibration_tolerance", calibration_tolerance},
      {"cpr_test_phases", cpr_test_phases},
      {"memory_budget_mib", memory_budget_bytes >> 20},
      {"output_dir", output_dir},
      {"link",
       {{"span_length_km", link.span_length_km},
        {"span_count", link.span_count},
        {"alpha_db_per_km", link.alpha_db_per_km},
        {"dispersion_ps_nm_km", link.dispersion_ps_nm_km},
        {"gamma_per_w_km", link.gamma_per_w_km},
        {"wavelength_nm", link.wavelength_nm}}},
  };
}

ExperimentConfig config_from_json(const json& doc, std::optional<ScalePreset> preset_override) {
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
  ScalePreset preset = ScalePreset::Desk;
  if (preset_override) preset = *preset_override;
  else if (doc.contains("preset")) preset = parse_preset(doc.at("preset").get<std::string>());
  ExperimentConfig c = preset_config(preset);

  for (const auto& [key, value] : doc.items()) {
    if (key == "preset") continue;
    if (key == "name") c.name = value.get<std::string>();
    else if (key == "modulation") c.modulations = scalar_or_list<int>(value, "modulation");
    else if (key == "baud_rate_gbaud") c.shaping.symbol_rate = value.get<double>() * 1e9;
    else if (key == "samples_per_symbol") c.shaping.samples_per_symbol = value.get<int>();
    else if (key == "rolloff") c.shaping.rolloff = value.get<double>();
    else if (key == "filter_span_symbols") c.shaping.filter_span_symbols = value.get<int>();
    else if (key == "launch_power_dbm")
      c.launch_powers_dbm = scalar_or_list<double>(value, "launch_power_dbm");
    else if (key == "target_ser") c.target_sers = scalar_or_list<double>(value, "target_ser");
    else if (key == "noiseless_point") c.noiseless_point = value.get<bool>();
    else if (key == "symbol_count") c.symbol_count = value.get<std::size_t>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "dz_km") c.link.dz_km = value.get<double>();
    else if (key == "ssfm_step_km") c.ssfm.step_km = value.get<double>();
    else if (key == "fit_positions_km")
      c.fit_positions_km = scalar_or_list<double>(value, "fit_positions_km");
    else if (key == "calibration_tolerance") c.calibration_tolerance = value.get<double>();
    else if (key == "cpr_test_phases") c.cpr_test_phases = value.get<int>();
    else if (key == "memory_budget_mib")
      c.memory_budget_bytes = value.get<std::size_t>() << 20;
    else if (key == "output_dir") c.output_dir = value.get<std::string>();
    else if (key == "link") apply_link(c.link, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<ScalePreset> preset_override) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc, preset_override);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t SeedPlan::symbols(int modulation) const {
  return derive(master, 1, static_cast<std::uint64_t>(modulation));
}

std::uint64_t SeedPlan::noise(int modulation) const {
  return derive(master, 2, static_cast<std::uint64_t>(modulation));
}

std::string GridPoint::group_id() const {
  return "M" + std::to_string(modulation) + "-P" + compact(launch_power_dbm) + "dBm";
}

std::string GridPoint::run_id() const {
  return group_id() + (target_ser ? "-SER" + compact(*target_ser) : std::string("-noiseless"));
}

std::vector<GridPoint> expand_grid(const ExperimentConfig& config) {
  std::vector<GridPoint> grid;
  for (int m : config.modulations)
    for (double p : config.launch_powers_dbm) {
      if (config.noiseless_point) grid.push_back({grid.size(), m, p, std::nullopt});
      for (double s : config.target_sers) grid.push_back({grid.size(), m, p, s});
    }
  return grid;
}

bool RunRecord::all_succeeded() const {
  return std::all_of(points.begin(), points.end(), [](const PointResult& r) { return r.ok; });
}

namespace {

// Everything a group of points with the same modulation and launch power shares.
struct GroupContext {
  std::shared_ptr<const ConstellationSpec> spec;
  SymbolFrame frame;
  Waveform received;  // physical field after the noiseless link
  Waveform a_tx0;     // normalized
  ComplexVector u_tx;
  std::unique_ptr<LeastSquaresSolver> tx_solver;
  ReferenceProfile reference;
  double p0_w = 0.0;
  std::vector<std::string> warnings;
};

GroupContext prepare_group(const ExperimentConfig& config, const GridPoint& head,
                           const SeedPlan& seeds, unsigned threads) {
  GroupContext ctx;
  ctx.spec = std::make_shared<const ConstellationSpec>(build_qam(head.modulation));
  ctx.frame = generate_symbols(ctx.spec, config.symbol_count, seeds.symbols(head.modulation));
  Diagnostics diag;
  const Waveform tx = set_launch_power(rrc_shape(ctx.frame, config.shaping, &diag),
                                       head.launch_power_dbm);
  ctx.received = ssfm_propagate(tx, config.link, config.ssfm, &diag);
  ctx.p0_w = dbm_to_watts(head.launch_power_dbm);
  const double norm = 1.0 / std::sqrt(ctx.p0_w);
  auto refs = regenerate_references(ctx.frame, ctx.frame.tx_indices, config.shaping,
                                    head.launch_power_dbm);
  ctx.a_tx0 = scaled(std::move(refs.a_tx0), norm);
  ctx.u_tx = linear_reference(ctx.a_tx0, config.link);
  const auto g_tx = build_matrix(ctx.a_tx0, config.link, Provenance::Tx,
                                 {config.memory_budget_bytes, threads});
  ctx.tx_solver = std::make_unique<LeastSquaresSolver>(g_tx);
  ctx.reference = reference_profile(config.link, head.launch_power_dbm);
  ctx.warnings = std::move(diag.warnings);
  return ctx;
}

PointResult run_point(const ExperimentConfig& config, const GroupContext& ctx,
                      const GridPoint& gp, const SeedPlan& seeds, unsigned column_threads) {
  PointResult r;
  r.point = gp;
  r.warnings = ctx.warnings;
  Diagnostics diag;
  const ReceiverConfig rx{config.cpr_test_phases};
  const std::uint64_t noise_seed = seeds.noise(gp.modulation);

  auto start = std::chrono::steady_clock::now();
  if (gp.target_ser) {
    CalibrationOptions options;
    options.symbol_energy = ctx.p0_w / config.shaping.symbol_rate;
    options.relative_tolerance = config.calibration_tolerance;
    const auto cal = n0_for_target_ser(
        *ctx.spec, *gp.target_ser,
        [&](double n0) {
          return decide_frame(add_awgn(ctx.received, {n0, noise_seed}), ctx.frame, config.link,
                              config.shaping, gp.launch_power_dbm, rx)
              .measured_ser;
        },
        options);
    r.n0 = cal.n0;
    r.calibration_evaluations = cal.evaluations;
  }
  r.timings.calibrate_s = seconds_since(start);

  start = std::chrono::steady_clock::now();
  const auto bundle = receive(add_awgn(ctx.received, {r.n0, noise_seed}), ctx.frame, config.link,
                              config.shaping, gp.launch_power_dbm, rx);
  r.measured_ser = bundle.measured_ser;
  r.cpr_phase = bundle.cpr_phase;
  r.condition_tx = ctx.tx_solver->condition();

  const auto du_tx = delta_u(bundle.a_l, ctx.a_tx0, config.link, Provenance::Tx);
  r.est_tx = mmse_solve(*ctx.tx_solver, du_tx);

  std::unique_ptr<LeastSquaresSolver> hd_solver;
  {
    const auto g_hd = build_matrix(bundle.a_hd0, config.link, Provenance::Hd,
                                   {config.memory_budget_bytes, column_threads});
    hd_solver = std::make_unique<LeastSquaresSolver>(g_hd);
  }
  r.condition_hd = hd_solver->condition();
  const auto du_hd = delta_u(bundle.a_l, bundle.a_hd0, config.link, Provenance::Hd);
  r.est_hd = mmse_solve(*hd_solver, du_hd);
  r.timings.estimate_s = seconds_since(start);

  start = std::chrono::steady_clock::now();
  const auto virtual_du =
      virtual_hd_perturbation(bundle.a_hd0, config.link, config.ssfm, ctx.p0_w, &diag);
  r.est_virtual = mmse_solve(*hd_solver, virtual_du);
  const auto u_hd = linear_reference(bundle.a_hd0, config.link);
  r.offset = power_offset(*hd_solver, u_hd, ctx.u_tx, virtual_du, du_tx);
  r.offset.ser = r.measured_ser;
  r.offset.launch_power_dbm = gp.launch_power_dbm;
  r.offset.modulation = gp.modulation;
  attach_db(r.offset, ctx.reference);
  r.est_corrected = ideal_po_removal(r.est_hd, r.offset);
  r.timings.virtual_s = seconds_since(start);

  const Eigen::VectorXcd gap = r.est_hd.raw_solution + r.offset.po_raw - r.est_virtual.raw_solution;
  const double scale = r.est_virtual.raw_solution.cwiseAbs().maxCoeff();
  r.identity_error = scale > 0.0 ? gap.cwiseAbs().maxCoeff() / scale : gap.cwiseAbs().maxCoeff();

  r.reference = ctx.reference;
  for (auto& w : diag.warnings) r.warnings.push_back(std::move(w));
  r.ok = true;
  return r;
}

}  // namespace

std::vector<FitResult> fit_groups(const std::vector<PointResult>& points,
                                  const std::vector<double>& positions_km,
                                  std::vector<std::string>* notes) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const PointResult*>> groups;
  for (const auto& p : points) {
    const auto id = p.point.group_id();
    if (!groups.count(id)) order.push_back(id);
    auto& members = groups[id];
    if (p.ok) members.push_back(&p);
  }

  std::vector<FitResult> fits;
  for (const auto& id : order) {
    const auto& members = groups[id];
    std::set<double> distinct;
    for (const auto* m : members) distinct.insert(m->measured_ser);
    if (distinct.size() < 4) {
      if (notes)
        notes->push_back("fit skipped for " + id + ": " + std::to_string(distinct.size()) +
                         " distinct SER values (need 4)");
      continue;
    }
    for (double z : positions_km) {
      std::vector<double> ser;
      std::vector<double> po;
      for (const auto* m : members) {
        const auto& pos = m->offset.positions_km;
        const auto it = std::find_if(pos.begin(), pos.end(),
                                     [z](double x) { return std::abs(x - z) < 1e-9; });
        if (it == pos.end())
          throw std::invalid_argument("fit position " + compact(z) + " km is not on the grid");
        ser.push_back(m->measured_ser);
        po.push_back(m->offset.po_linear[static_cast<std::size_t>(it - pos.begin())]);
      }
      FitResult fr;
      fr.run_id = id;
      fr.modulation = members.front()->point.modulation;
      fr.launch_power_dbm = members.front()->point.launch_power_dbm;
      fr.z_km = z;
      fr.fit = fit_offset_vs_ser(ser, po);
      fits.push_back(std::move(fr));
    }
  }
  return fits;
}

RunRecord run_grid(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  RunRecord record;
  record.config = config;
  record.config_hash = config_hash(config);
  const SeedPlan seeds{config.seed};
  const auto grid = expand_grid(config);
  record.points.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) record.points[i].point = grid[i];
  const unsigned threads = std::max(1u, options.threads);
  auto say = [&](const std::string& msg) {
    if (options.progress) options.progress(msg);
  };

  std::size_t begin = 0;
  while (begin < grid.size()) {
    std::size_t end = begin;
    while (end < grid.size() && grid[end].group_id() == grid[begin].group_id()) ++end;
    const auto id = grid[begin].group_id();
    const auto start = std::chrono::steady_clock::now();

    std::optional<GroupContext> ctx;
    try {
      say(id + ": propagating and building the TX matrix");
      ctx.emplace(prepare_group(config, grid[begin], seeds, threads));
    } catch (const std::exception& e) {
      for (std::size_t i = begin; i < end; ++i) record.points[i].error = e.what();
      say(id + ": failed: " + e.what());
    }

    if (ctx) {
      const std::size_t count = end - begin;
      const unsigned column_threads = count >= threads ? 1u : threads;
      parallel_for(count, threads, [&](std::size_t k) {
        const auto& gp = grid[begin + k];
        auto& slot = record.points[begin + k];
        try {
          slot = run_point(config, *ctx, gp, seeds, column_threads);
        } catch (const std::exception& e) {
          slot = PointResult{};
          slot.point = gp;
          slot.error = e.what();
        }
      });
      for (std::size_t i = begin; i < end; ++i) {
        const auto& r = record.points[i];
        say(r.point.run_id() + (r.ok ? ": SER " + compact(r.measured_ser) : ": failed: " + r.error));
      }
    }
    record.group_seconds.emplace_back(id, seconds_since(start));
    begin = end;
  }

  record.fits = fit_groups(record.points, config.fit_positions_km, &record.notes);
  return record;
}

namespace {

void check_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw std::runtime_error("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json manifest(const RunRecord& record) {
  const SeedPlan seeds{record.config.seed};
  json symbol_seeds = json::object();
  json noise_seeds = json::object();
  for (int m : record.config.modulations) {
    symbol_seeds[std::to_string(m)] = seeds.symbols(m);
    noise_seeds[std::to_string(m)] = seeds.noise(m);
  }
  json points = json::array();
  for (const auto& r : record.points) {
    json p{{"run_id", r.point.run_id()},
           {"M", r.point.modulation},
           {"power_dbm", r.point.launch_power_dbm},
           {"target_ser", r.point.target_ser ? json(*r.point.target_ser) : json(nullptr)},
           {"status", r.ok ? "ok" : "failed"}};
    if (!r.ok) {
      p["error"] = r.error;
    } else {
      p["n0_w_per_hz"] = r.n0;
      p["measured_ser"] = r.measured_ser;
      p["calibration_evaluations"] = r.calibration_evaluations;
      p["cpr_phase_rad"] = r.cpr_phase;
      p["condition_tx"] = r.condition_tx;
      p["condition_hd"] = r.condition_hd;
      p["identity_error"] = r.identity_error;
      p["imaginary_rms_tx"] = r.est_tx.imaginary_rms();
      p["imaginary_rms_hd"] = r.est_hd.imaginary_rms();
      p["po_db_excluded"] = r.offset.excluded;
      p["warnings"] = r.warnings;
    }
    points.push_back(std::move(p));
  }
  json fits = json::array();
  for (const auto& f : record.fits)
    fits.push_back({{"run_id", f.run_id},
                    {"z_km", f.z_km},
                    {"points", f.fit.ser_grid.size()},
                    {"r2", nullable(f.fit.r_squared)},
                    {"residual_scale", f.fit.residual_scale()},
                    {"value_at_zero_ser", f.fit.evaluate(0.0)}});
  char eigen[32];
  std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                EIGEN_MINOR_VERSION);
  return json{
      {"config", record.config.to_json()},
      {"config_hash", record.config_hash},
      {"seeds", {{"master", record.config.seed}, {"symbols", symbol_seeds}, {"noise", noise_seeds}}},
      {"versions", {{"ppe", kVersion}, {"eigen", eigen}, {"fftw", fft::library_version()}}},
      {"sign_convention", "est_hd = gamma_prime - po_linear; po_db = 10 log10(1 / (1 - po / gamma_prime))"},
      {"points", points},
      {"fits", fits},
      {"notes", record.notes},
      {"all_succeeded", record.all_succeeded()},
  };
}

}  // namespace

void emit_results(const RunRecord& record, const std::filesystem::path& dir) {
  check_writable(dir);

  if (!record.points.empty()) {
    std::vector<ProfileRow> profiles;
    std::vector<OffsetRow> offsets;
    for (const auto& r : record.points) {
      if (!r.ok) continue;
      const auto id = r.point.run_id();
      for (std::size_t k = 0; k < r.reference.positions_km.size(); ++k) {
        profiles.push_back({id, r.reference.positions_km[k], r.reference.gamma_prime[k],
                            r.est_tx.gamma_prime_hat[k], r.est_hd.gamma_prime_hat[k],
                            r.est_corrected.gamma_prime_hat[k]});
        offsets.push_back({id, r.offset.positions_km[k], r.measured_ser, r.point.launch_power_dbm,
                           r.point.modulation, r.offset.po_linear[k], r.offset.po_db[k]});
      }
    }
    std::vector<FitRow> fits;
    for (const auto& f : record.fits)
      fits.push_back({f.run_id, f.z_km, f.fit.k, f.fit.p, f.fit.q, f.fit.r_squared});
    write_profiles_csv(dir / "profiles.csv", profiles);
    write_offsets_csv(dir / "offsets.csv", offsets);
    write_fits_csv(dir / "fits.csv", fits);
  }

  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest(record).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                         const ExperimentConfig& config) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("PPE_OUT_DIR"); env && *env) return env;
  return config.output_dir;
}

}  // namespace ppe
