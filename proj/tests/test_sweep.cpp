#include "qst/sweep.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

using qst::MetricsRecord;
using qst::run_sweep;
using qst::SweepGrid;
using qst::SweepOptions;

namespace {

SweepGrid small_grid() {
  SweepGrid grid;
  grid.base.n_sites = 8;
  grid.base.coordination = 1;
  grid.base.falloff = 2.0;
  grid.base.anisotropy = 0.5;
  grid.base.field = 0.7;
  grid.config.t_max = 60.0;
  grid.config.dt = 0.05;
  grid.axes.push_back({"z", {1.0, 2.0}});
  grid.axes.push_back({"g", {0.4, 0.7, 1.2}});
  return grid;
}

std::string csv_string(const qst::SweepResult& result) {
  std::ostringstream out;
  qst::export_csv(result, out);
  return out.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir(const char* tag) {
    path = std::filesystem::temp_directory_path() /
           (std::string("qst_sweep_test_") + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("row-major cell ordering") {
  const SweepGrid grid = small_grid();
  REQUIRE(grid.cell_count() == 6);
  // Last axis fastest: (z, g) pairs in declaration order.
  const double expect[6][2] = {{1, 0.4}, {1, 0.7}, {1, 1.2},
                               {2, 0.4}, {2, 0.7}, {2, 1.2}};
  for (std::size_t i = 0; i < 6; ++i) {
    const auto p = grid.cell_params(i);
    CHECK(p.coordination == static_cast<int>(expect[i][0]));
    CHECK(p.field == expect[i][1]);
  }
}

TEST_CASE("grid validation") {
  SweepGrid grid = small_grid();
  grid.axes.push_back({"z", {3.0}});
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument); // duplicate
  grid = small_grid();
  grid.axes[0].name = "beta";
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument); // unknown
  grid = small_grid();
  grid.axes[0].values.clear();
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument); // empty
}

TEST_CASE("sweep evaluates every cell and keeps order") {
  const auto result = run_sweep(small_grid(), {});
  REQUIRE(result.records.size() == 6);
  for (const auto& rec : result.records) {
    CHECK((rec.status == qst::CellStatus::Found ||
           rec.status == qst::CellStatus::NoAdvantage));
    if (rec.status == qst::CellStatus::Found) REQUIRE(rec.t_q.has_value());
  }
}

TEST_CASE("invalid cells are recorded, not fatal") {
  SweepGrid grid = small_grid();
  grid.axes[0].values = {1.0, 7.0, 8.0}; // z = 8 exceeds N-1 = 7
  const auto result = run_sweep(grid, {});
  REQUIRE(result.records.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    if (grid.cell_params(i).coordination == 8)
      CHECK(result.records[i].status == qst::CellStatus::InvalidCell);
    else
      CHECK(result.records[i].status != qst::CellStatus::InvalidCell);
  }
}

TEST_CASE("output is identical for any parallelism") {
  SweepOptions serial;
  serial.parallelism = 1;
  SweepOptions parallel;
  parallel.parallelism = 8;
  const auto a = run_sweep(small_grid(), serial);
  const auto b = run_sweep(small_grid(), parallel);
  CHECK(csv_string(a) == csv_string(b));

  std::ostringstream ja, jb;
  qst::export_jsonl(a, ja);
  qst::export_jsonl(b, jb);
  // provenance first line carries a timestamp; compare the record lines
  const auto records_only = [](const std::string& s) {
    return s.substr(s.find('\n') + 1);
  };
  CHECK(records_only(ja.str()) == records_only(jb.str()));
}

TEST_CASE("csv round-trip is exact") {
  const auto result = run_sweep(small_grid(), {});
  std::istringstream in(csv_string(result));
  const auto records = qst::import_csv(in);
  REQUIRE(records.size() == result.records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].status == result.records[i].status);
    CHECK(records[i].t_q.has_value() == result.records[i].t_q.has_value());
    if (records[i].t_q) {
      // bit-exact after the %.17g round trip
      CHECK(std::memcmp(&*records[i].t_q, &*result.records[i].t_q,
                        sizeof(double)) == 0);
    }
    if (records[i].f_star)
      CHECK(std::memcmp(&*records[i].f_star, &*result.records[i].f_star,
                        sizeof(double)) == 0);
  }
}

TEST_CASE("csv has header plus one line per record") {
  const auto result = run_sweep(small_grid(), {});
  std::istringstream in(csv_string(result));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 1 + 1 + 6); // provenance comment + header + records
}

TEST_CASE("jsonl provenance carries the grid hash") {
  const SweepGrid grid = small_grid();
  const auto result = run_sweep(grid, {});
  std::ostringstream out;
  qst::export_jsonl(result, out);
  std::istringstream in(out.str());
  std::string first;
  std::getline(in, first);
  const auto header = nlohmann::json::parse(first);
  CHECK(header.at("provenance").at("config_hash").get<std::string>() ==
        qst::config_hash_hex(grid.canonical_key_values()));
  CHECK(header.at("provenance").at("version").get<std::string>() == qst::kVersion);
}

TEST_CASE("cache makes sweeps resumable and cells independent") {
  TempDir dir("cache");
  SweepOptions options;
  options.cache_dir = dir.path.string();

  const SweepGrid grid = small_grid();
  const auto first = run_sweep(grid, options);
  const std::string first_csv = csv_string(first);

  // Resume path: doctor one cached cell, rerun, the doctored value must be
  // used (proving cells load instead of recompute).
  const std::string hash = qst::config_hash_hex(grid.canonical_key_values());
  const auto cell_file = dir.path / (hash + "-3.json");
  REQUIRE(std::filesystem::exists(cell_file));
  {
    nlohmann::json doctored = qst::record_to_json(first.records[3]);
    doctored["t_q"] = 123.456;
    doctored["status"] = "found";
    std::ofstream out(cell_file);
    out << doctored.dump();
  }
  const auto resumed = run_sweep(grid, options);
  REQUIRE(resumed.records[3].t_q.has_value());
  CHECK(*resumed.records[3].t_q == 123.456);

  // Cell independence: drop the doctored entry, recompute, bit-identical to
  // the first run.
  std::filesystem::remove(cell_file);
  const auto recomputed = run_sweep(grid, options);
  CHECK(csv_string(recomputed) == first_csv);
}

TEST_CASE("per-cell time budget marks cells instead of aborting") {
  SweepGrid grid = small_grid();
  grid.config.t_max = 5000.0;
  grid.config.dt = 0.0005;
  grid.axes.clear();
  grid.axes.push_back({"g", {0.135791}}); // one deliberately slow cell
  SweepOptions options;
  options.cell_time_budget_s = 1e-6;
  const auto result = run_sweep(grid, options);
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].status == qst::CellStatus::TimedOut);
}
