// Command-line front end: runs experiment grids, re-fits offsets, checks
// invariants and summarizes result directories.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "ppe/harness.hpp"
#include "ppe/offset.hpp"
#include "ppe/results.hpp"
#include "ppe/verify.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
  unsigned threads = 1;
  std::vector<double> z_km;
};

ppe::ExperimentConfig resolve_config(const Options& o) {
  std::optional<ppe::ScalePreset> preset;
  if (o.preset) preset = ppe::parse_preset(*o.preset);
  ppe::ExperimentConfig config = o.config.empty()
                                     ? ppe::preset_config(preset.value_or(ppe::ScalePreset::Desk))
                                     : ppe::load_config(o.config, preset);
  if (o.seed) config.seed = *o.seed;
  config.validate();
  return config;
}

int run_experiment(const Options& o, bool single) {
  const auto config = resolve_config(o);
  if (single && (config.modulations.size() != 1 || config.launch_powers_dbm.size() != 1)) {
    std::cerr << "run: the config spans " << config.modulations.size() << " modulation(s) and "
              << config.launch_powers_dbm.size() << " launch power(s); use 'sweep' for grids\n";
    return 2;
  }
  const auto dir = ppe::resolve_output_dir(o.out, config);
  std::cerr << "config " << config.name << " (" << ppe::to_string(config.preset) << ", dz "
            << config.link.dz_km << " km, " << config.symbol_count << " symbols) -> " << dir.string()
            << "\n";
  ppe::RunOptions options;
  options.threads = o.threads;
  options.progress = [](const std::string& msg) { std::cerr << "  " << msg << "\n"; };
  const auto record = ppe::run_grid(config, options);
  ppe::emit_results(record, dir);

  for (const auto& [id, s] : record.group_seconds)
    std::fprintf(stderr, "  %s: %.1f s\n", id.c_str(), s);
  for (const auto& note : record.notes) std::cerr << "  note: " << note << "\n";
  std::size_t failed = 0;
  for (const auto& r : record.points) failed += !r.ok;
  std::cout << record.points.size() - failed << "/" << record.points.size()
            << " grid points succeeded; results in " << dir.string() << "\n";
  return failed == 0 ? 0 : 1;
}

std::filesystem::path results_dir(const Options& o) {
  if (!o.config.empty()) return ppe::resolve_output_dir(o.out, resolve_config(o));
  return ppe::resolve_output_dir(o.out, ppe::ExperimentConfig{});
}

int refit(const Options& o) {
  const auto dir = results_dir(o);
  const auto rows = ppe::read_offsets_csv(dir / "offsets.csv");
  std::vector<double> positions = o.z_km.empty() ? std::vector<double>{0.0} : o.z_km;

  // (group, z) -> run_id -> (ser, po)
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::map<std::string, std::pair<double, double>>>> data;
  for (const auto& r : rows) {
    const auto group = ppe::GridPoint{0, r.modulation, r.power_dbm, std::nullopt}.group_id();
    if (!data.count(group)) order.push_back(group);
    for (double z : positions)
      if (std::abs(r.position_km - z) < 1e-9) data[group][z][r.run_id] = {r.ser, r.po_linear};
  }

  std::vector<ppe::FitRow> fits;
  for (const auto& group : order)
    for (double z : positions) {
      std::vector<double> ser, po;
      for (const auto& [id, v] : data[group][z]) {
        ser.push_back(v.first);
        po.push_back(v.second);
      }
      if (std::set<double>(ser.begin(), ser.end()).size() < 4) {
        std::cerr << "skip " << group << " z=" << z << " km: " << ser.size()
                  << " points (need 4 distinct SER values)\n";
        continue;
      }
      const auto fit = ppe::fit_offset_vs_ser(ser, po);
      fits.push_back({group, z, fit.k, fit.p, fit.q, fit.r_squared});
      std::printf("%-16s z=%6.1f km  k=% .6e  p=% .6e  q=% .6e  R2=%.5f  po(0)=% .3e\n",
                  group.c_str(), z, fit.k, fit.p, fit.q, fit.r_squared, fit.evaluate(0.0));
    }
  ppe::write_fits_csv(dir / "fits.csv", fits);
  return 0;
}

int verify(const Options& o) {
  const auto checks = ppe::run_invariant_suite(o.threads);
  bool all = true;
  for (const auto& c : checks) {
    std::printf("%s  %-58s %.3e (limit %.1e)%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.value, c.limit, c.detail.empty() ? "" : "  ", c.detail.c_str());
    all = all && c.passed;
  }
  return all ? 0 : 1;
}

int report(const Options& o) {
  const auto dir = results_dir(o);
  double span_km = 80.0;
  if (std::ifstream in(dir / "manifest.json"); in) {
    const auto m = nlohmann::json::parse(in);
    span_km = m.at("config").at("link").at("span_length_km").get<double>();
  }
  ppe::FiberLink link;
  link.span_length_km = span_km;
  const auto beginnings = ppe::span_beginnings(link, 40.0);

  const auto profiles = ppe::read_profiles_csv(dir / "profiles.csv");
  const auto offsets = ppe::read_offsets_csv(dir / "offsets.csv");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ppe::ProfileRow*>> by_run;
  for (const auto& r : profiles) {
    if (!by_run.count(r.run_id)) order.push_back(r.run_id);
    by_run[r.run_id].push_back(&r);
  }
  std::map<std::string, const ppe::OffsetRow*> at_zero;
  for (const auto& r : offsets)
    if (std::abs(r.position_km) < 1e-9) at_zero[r.run_id] = &r;

  std::printf("%-26s %9s %11s %11s %11s %12s %9s\n", "run_id", "SER", "rms_tx", "rms_hd",
              "rms_corr", "po(0)", "po_dB(0)");
  for (const auto& id : order) {
    std::vector<double> z, ref, tx, hd, cor;
    for (const auto* r : by_run[id]) {
      z.push_back(r->position_km);
      ref.push_back(r->gamma_prime_ref);
      tx.push_back(r->est_tx);
      hd.push_back(r->est_hd);
      cor.push_back(r->est_corrected);
    }
    const auto* o0 = at_zero.count(id) ? at_zero[id] : nullptr;
    std::printf("%-26s %9.3e %11.4e %11.4e %11.4e %12.4e %9.4f\n", id.c_str(), o0 ? o0->ser : NAN,
                ppe::rms_error(z, tx, ref, beginnings), ppe::rms_error(z, hd, ref, beginnings),
                ppe::rms_error(z, cor, ref, beginnings), o0 ? o0->po_linear : NAN,
                o0 ? o0->po_db : NAN);
  }

  if (std::filesystem::exists(dir / "fits.csv")) {
    const auto fits = ppe::read_fits_csv(dir / "fits.csv");
    if (!fits.empty()) std::printf("\n%-16s %8s %13s %13s %13s %9s\n", "group", "z_km", "k", "p", "q", "R2");
    for (const auto& f : fits)
      std::printf("%-16s %8.1f % 13.5e % 13.5e % 13.5e %9.5f\n", f.run_id.c_str(), f.z_km, f.k, f.p,
                  f.q, f.r2);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiber-longitudinal power profile estimation with hard-decision references"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "results directory (overrides $PPE_OUT_DIR and the config)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--preset", o.preset, "scale preset")->check(CLI::IsMember({"paper", "desk"}));
    cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "run one configuration (single M and launch power)");
  auto* sweep = app.add_subcommand("sweep", "run the full grid of a configuration");
  auto* fit = app.add_subcommand("fit", "re-fit po(SER) from an offsets.csv");
  auto* check = app.add_subcommand("verify", "run the numerical invariant suite");
  auto* rep = app.add_subcommand("report", "summarize a results directory");
  for (auto* cmd : {run, sweep, fit, check, rep}) add_common(cmd);
  run->get_option("--config")->required();
  sweep->get_option("--config")->required();
  fit->add_option("--z", o.z_km, "positions (km) to fit at; default 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return run_experiment(o, true);
    if (*sweep) return run_experiment(o, false);
    if (*fit) return refit(o);
    if (*check) return verify(o);
    if (*rep) return report(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
