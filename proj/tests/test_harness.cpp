#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "ppe/harness.hpp"
#include "ppe/results.hpp"

using namespace ppe;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* base = std::getenv("PPE_TEST_TMP");
  const fs::path dir = (base && *base ? fs::path(base) : fs::temp_directory_path() / "ppe_harness") / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentConfig tiny_config() {
  ExperimentConfig c = preset_config(ScalePreset::Desk);
  c.name = "tiny";
  c.symbol_count = 512;
  c.link.dz_km = 8.0;
  c.target_sers = {0.08};
  c.seed = 4;
  c.calibration_tolerance = 0.1;
  return c;
}

const RunRecord& tiny_record() {
  static const RunRecord record = run_grid(tiny_config());
  return record;
}

}  // namespace

TEST_CASE("configuration documents") {
  SUBCASE("presets") {
    const auto desk = preset_config(ScalePreset::Desk);
    const auto paper = preset_config(ScalePreset::Paper);
    CHECK(desk.link.dz_km == 4.0);
    CHECK(paper.link.dz_km == 1.0);
    for (const auto* c : {&desk, &paper}) {
      CHECK(c->link.span_length_km == 80.0);
      CHECK(c->link.span_count == 3);
      CHECK(c->link.alpha_db_per_km == 0.2);
      CHECK(c->link.dispersion_ps_nm_km == 17.0);
      CHECK(c->link.gamma_per_w_km == 1.3);
      CHECK(c->shaping.symbol_rate == 130e9);
      CHECK(c->shaping.rolloff == 0.1);
      CHECK(c->symbol_count == std::size_t{1} << 14);
    }
    CHECK(parse_preset("paper") == ScalePreset::Paper);
    CHECK_THROWS(parse_preset("huge"));
  }

  SUBCASE("keys overlay the preset") {
    const auto doc = nlohmann::json::parse(R"({
      "name": "grid", "preset": "paper", "modulation": [4, 16, 64],
      "launch_power_dbm": [5, 6, 7, 8], "target_ser": [0.02, 0.04, 0.08],
      "link": {"span_count": 2}, "seed": 9
    })");
    const auto c = config_from_json(doc);
    CHECK(c.preset == ScalePreset::Paper);
    CHECK(c.link.dz_km == 1.0);
    CHECK(c.link.span_count == 2);
    CHECK(c.modulations == std::vector<int>{4, 16, 64});
    CHECK(c.launch_powers_dbm.size() == 4);
    CHECK(c.seed == 9);
    CHECK(expand_grid(c).size() == 3 * 4 * 3);
    CHECK(config_from_json(doc, ScalePreset::Desk).link.dz_km == 4.0);
    CHECK(config_from_json(nlohmann::json::parse(R"({"modulation": 64})")).modulations ==
          std::vector<int>{64});
  }

  SUBCASE("unknown keys and invalid values are rejected") {
    CHECK_THROWS(config_from_json(nlohmann::json::parse(R"({"modulaton": 16})")));
    CHECK_THROWS(config_from_json(nlohmann::json::parse(R"({"link": {"spans": 3}})")));
    CHECK_THROWS(config_from_json(nlohmann::json::parse(R"({"target_ser": [0.5]})")));
    CHECK_THROWS(config_from_json(nlohmann::json::parse(R"({"dz_km": 7})")));
    CHECK_THROWS(config_from_json(nlohmann::json::parse(R"({"modulation": 8})")));
    CHECK_THROWS(config_from_json(nlohmann::json::parse(R"({"fit_positions_km": [2]})")));
  }

  SUBCASE("checked-in figure configs load") {
    const fs::path dir = fs::path(PPE_SOURCE_DIR) / "configs";
    int count = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".json") continue;
      CHECK_NOTHROW(load_config(entry.path()));
      ++count;
    }
    CHECK(count >= 6);
  }

  SUBCASE("hash follows content") {
    auto a = tiny_config();
    auto b = tiny_config();
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.seed = 5;
    CHECK(config_hash(a) != config_hash(b));
  }
}

TEST_CASE("seeds and grid") {
  const SeedPlan plan{1};
  CHECK(plan.symbols(16) == SeedPlan{1}.symbols(16));
  CHECK(plan.symbols(16) != plan.symbols(64));
  CHECK(plan.symbols(16) != plan.noise(16));
  CHECK(plan.symbols(16) != SeedPlan{2}.symbols(16));

  auto c = tiny_config();
  c.modulations = {4, 16};
  c.launch_powers_dbm = {5.0, 8.0};
  c.target_sers = {0.02, 0.08};
  c.noiseless_point = true;
  const auto grid = expand_grid(c);
  CHECK(grid.size() == 2 * 2 * 3);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(grid[i].index == i);
    ids.insert(grid[i].run_id());
  }
  CHECK(ids.size() == grid.size());
  CHECK(ids.count("M16-P8dBm-SER0.08") == 1);
  CHECK(ids.count("M4-P5dBm-noiseless") == 1);
}

TEST_CASE("empty grid writes only the manifest") {
  auto c = tiny_config();
  c.target_sers.clear();
  const auto record = run_grid(c);
  CHECK(record.points.empty());
  const auto dir = scratch("empty");
  emit_results(record, dir);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK_FALSE(fs::exists(dir / "profiles.csv"));
  CHECK_FALSE(fs::exists(dir / "offsets.csv"));
  CHECK_FALSE(fs::exists(dir / "fits.csv"));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
}

TEST_CASE("one grid point") {
  const auto& record = tiny_record();
  REQUIRE(record.points.size() == 1);
  const auto& r = record.points[0];
  REQUIRE_MESSAGE(r.ok, r.error);
  CHECK(record.all_succeeded());
  CHECK(std::abs(r.measured_ser - 0.08) <= 0.1 * 0.08);
  CHECK(r.identity_error < 1e-8);
  CHECK(r.est_corrected.built_from == Provenance::HdCorrected);
  CHECK(r.reference.positions_km.size() == 30);
  CHECK(record.fits.empty());
  CHECK(!record.notes.empty());

  const auto dir = scratch("one");
  emit_results(record, dir);
  for (const char* name : {"profiles.csv", "offsets.csv", "fits.csv", "manifest.json"})
    CHECK(fs::exists(dir / name));

  const auto profiles = read_profiles_csv(dir / "profiles.csv");
  const auto offsets = read_offsets_csv(dir / "offsets.csv");
  CHECK(read_fits_csv(dir / "fits.csv").empty());
  std::set<std::string> ids;
  for (const auto& p : profiles) ids.insert(p.run_id);
  for (const auto& o : offsets) ids.insert(o.run_id);
  CHECK(ids == std::set<std::string>{"M16-P8dBm-SER0.08"});

  SUBCASE("CSV values survive a round trip exactly") {
    REQUIRE(profiles.size() == r.reference.positions_km.size());
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      CHECK(profiles[k].position_km == r.reference.positions_km[k]);
      CHECK(profiles[k].gamma_prime_ref == r.reference.gamma_prime[k]);
      CHECK(profiles[k].est_tx == r.est_tx.gamma_prime_hat[k]);
      CHECK(profiles[k].est_hd == r.est_hd.gamma_prime_hat[k]);
      CHECK(profiles[k].est_corrected == r.est_corrected.gamma_prime_hat[k]);
      CHECK(offsets[k].po_linear == r.offset.po_linear[k]);
      CHECK(offsets[k].ser == r.measured_ser);
      CHECK(offsets[k].modulation == 16);
      if (std::isnan(r.offset.po_db[k]))
        CHECK(std::isnan(offsets[k].po_db));
      else
        CHECK(offsets[k].po_db == r.offset.po_db[k]);
    }
  }

  SUBCASE("manifest") {
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m.at("config_hash") == config_hash(record.config));
    CHECK(m.at("config").at("symbol_count") == 512);
    CHECK(m.at("seeds").at("master") == 4);
    CHECK(m.at("versions").contains("fftw"));
    CHECK(m.at("versions").contains("eigen"));
    CHECK(m.at("points").size() == 1);
    CHECK(m.at("points")[0].at("status") == "ok");
    CHECK(m.at("all_succeeded") == true);
  }
}

TEST_CASE("reruns are byte-for-byte identical, serial or threaded") {
  auto c = tiny_config();
  c.target_sers = {0.04, 0.08};
  const auto serial = run_grid(c, {1, {}});
  const auto threaded = run_grid(c, {2, {}});
  const auto a = scratch("serial");
  const auto b = scratch("threaded");
  emit_results(serial, a);
  emit_results(threaded, b);
  for (const char* name : {"profiles.csv", "offsets.csv", "fits.csv", "manifest.json"}) {
    INFO(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const auto again = scratch("again");
  emit_results(run_grid(c, {1, {}}), again);
  CHECK(slurp(a / "profiles.csv") == slurp(again / "profiles.csv"));
}

TEST_CASE("output directory") {
  SUBCASE("an unwritable location fails before writing") {
    const auto base = scratch("blocked");
    fs::create_directories(base);
    std::ofstream(base / "not-a-dir") << "x";
    CHECK_THROWS(emit_results(tiny_record(), base / "not-a-dir" / "out"));
    CHECK(fs::is_regular_file(base / "not-a-dir"));
  }

  SUBCASE("flag, then environment, then config") {
    ExperimentConfig c;
    c.output_dir = "from-config";
    ::unsetenv("PPE_OUT_DIR");
    CHECK(resolve_output_dir(std::nullopt, c) == fs::path("from-config"));
    ::setenv("PPE_OUT_DIR", "from-env", 1);
    CHECK(resolve_output_dir(std::nullopt, c) == fs::path("from-env"));
    CHECK(resolve_output_dir(std::string("from-flag"), c) == fs::path("from-flag"));
    ::unsetenv("PPE_OUT_DIR");
  }
}

TEST_CASE("CSV readers reject malformed files") {
  const auto dir = scratch("csv");
  fs::create_directories(dir);
  std::ofstream(dir / "bad_header.csv") << "run,z\n";
  CHECK_THROWS(read_profiles_csv(dir / "bad_header.csv"));
  std::ofstream(dir / "short_row.csv") << kFitsHeader << "\nM16-P8dBm,0,1,2\n";
  CHECK_THROWS(read_fits_csv(dir / "short_row.csv"));
  std::ofstream(dir / "bad_number.csv") << kFitsHeader << "\nM16-P8dBm,0,1,2,x,0.9\n";
  try {
    read_fits_csv(dir / "bad_number.csv");
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS(read_offsets_csv(dir / "missing.csv"));

  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(NAN) == "nan");
}
