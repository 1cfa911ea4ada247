#pragma once

// Deterministic parameter sweeps: a grid of model-parameter axes evaluated
// cell by cell (work-stealing over independent cells), with row-major record
// ordering that is identical for any level of parallelism. Cells are cached
// by (config hash, cell index) so interrupted sweeps resume for free.

#include "qst/config.hpp"
#include "qst/metrics.hpp"
#include "qst/model.hpp"
#include "qst/version.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace qst {

struct SweepAxis {
  std::string name; // one of N, z, alpha, lambda, g
  std::vector<double> values;
};

struct SweepGrid {
  std::vector<SweepAxis> axes;
  ModelParams base;       // fixed parameters
  MetricsConfig config;
  bool want_peak = true;  // also extract (f*, t*), not just t_q

  void validate() const {
    static const std::set<std::string> known = {"N", "z", "alpha", "lambda", "g"};
    if (axes.empty()) throw std::invalid_argument("sweep grid: no axes");
    std::set<std::string> seen;
    for (const auto& axis : axes) {
      if (!known.count(axis.name))
        throw std::invalid_argument("sweep grid: unknown axis `" + axis.name + "`");
      if (!seen.insert(axis.name).second)
        throw std::invalid_argument("sweep grid: duplicate axis `" + axis.name + "`");
      if (axis.values.empty())
        throw std::invalid_argument("sweep grid: axis `" + axis.name + "` is empty");
    }
    config.validate();
  }

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (const auto& axis : axes) n *= axis.values.size();
    return n;
  }

  /// Parameters of one row-major cell (last axis fastest). May violate the
  /// model invariants; the sweep records that as an invalid cell.
  ModelParams cell_params(std::size_t index) const {
    ModelParams params = base;
    std::size_t stride = cell_count();
    for (const auto& axis : axes) {
      stride /= axis.values.size();
      const double value = axis.values[(index / stride) % axis.values.size()];
      if (axis.name == "N")
        params.n_sites = static_cast<int>(value);
      else if (axis.name == "z")
        params.coordination = static_cast<int>(value);
      else if (axis.name == "alpha")
        params.falloff = value;
      else if (axis.name == "lambda")
        params.anisotropy = value;
      else if (axis.name == "g")
        params.field = value;
    }
    return params;
  }

  /// Canonical key-value rendering; its hash keys the cell cache and the
  /// provenance header.
  KeyValues canonical_key_values() const {
    KeyValues kv;
    kv["n_sites"] = std::to_string(base.n_sites);
    kv["coordination"] = std::to_string(base.coordination);
    kv["falloff"] = format_double(base.falloff);
    kv["anisotropy"] = format_double(base.anisotropy);
    kv["field"] = format_double(base.field);
    kv["coupling"] = format_double(base.coupling_scale);
    kv["epsilon"] = format_double(config.epsilon);
    kv["t_max"] = format_double(config.t_max);
    kv["dt"] = format_double(config.dt);
    kv["metrics"] = want_peak ? "t_q,f_star,t_star" : "t_q";
    std::string order;
    for (const auto& axis : axes) {
      std::string list;
      for (double v : axis.values) {
        if (!list.empty()) list += ',';
        list += format_double(v);
      }
      kv["axis." + axis.name] = list;
      if (!order.empty()) order += ',';
      order += axis.name;
    }
    kv["axis-order"] = order;
    return kv;
  }
};

struct Provenance {
  std::string version = kVersion;
  std::string timestamp;
  std::string config_hash;
};

struct SweepResult {
  SweepGrid grid;
  std::vector<MetricsRecord> records; // row-major
  Provenance provenance;
};

struct SweepOptions {
  int parallelism = 1;
  std::string cache_dir;            // empty: no cache
  double cell_time_budget_s = 0.0;  // <= 0: unlimited
};

// ---------------------------------------------------------------------------
// Record (de)serialization
// ---------------------------------------------------------------------------

inline nlohmann::json record_to_json(const MetricsRecord& rec) {
  nlohmann::json j;
  j["N"] = rec.params.n_sites;
  j["z"] = rec.params.coordination;
  j["alpha"] = rec.params.falloff;
  j["lambda"] = rec.params.anisotropy;
  j["g"] = rec.params.field;
  j["J"] = rec.params.coupling_scale;
  j["t_q"] = rec.t_q ? nlohmann::json(*rec.t_q) : nlohmann::json(nullptr);
  j["f_star"] = rec.f_star ? nlohmann::json(*rec.f_star) : nlohmann::json(nullptr);
  j["t_star"] = rec.t_star ? nlohmann::json(*rec.t_star) : nlohmann::json(nullptr);
  j["status"] = to_string(rec.status);
  return j;
}

inline MetricsRecord record_from_json(const nlohmann::json& j) {
  MetricsRecord rec;
  rec.params.n_sites = j.at("N").get<int>();
  rec.params.coordination = j.at("z").get<int>();
  rec.params.falloff = j.at("alpha").get<double>();
  rec.params.anisotropy = j.at("lambda").get<double>();
  rec.params.field = j.at("g").get<double>();
  rec.params.coupling_scale = j.at("J").get<double>();
  if (!j.at("t_q").is_null()) rec.t_q = j.at("t_q").get<double>();
  if (!j.at("f_star").is_null()) rec.f_star = j.at("f_star").get<double>();
  if (!j.at("t_star").is_null()) rec.t_star = j.at("t_star").get<double>();
  rec.status = cell_status_from_string(j.at("status").get<std::string>());
  return rec;
}

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

inline MetricsRecord evaluate_cell(const SweepGrid& grid, std::size_t index,
                                   double time_budget_s) {
  const ModelParams params = grid.cell_params(index);
  MetricsRecord record;
  record.params = params;
  try {
    params.validate();
  } catch (const std::exception&) {
    record.status = CellStatus::InvalidCell;
    return record;
  }
  try {
    ComputeBudget budget;
    const bool budgeted = time_budget_s > 0.0;
    if (budgeted)
      budget.deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(time_budget_s));
    const ComputeBudget* budget_ptr = budgeted ? &budget : nullptr;
    const TransferEvaluator eval(params);
    const auto t_q = find_tq(eval, grid.config, budget_ptr);
    if (!t_q) {
      record.status = CellStatus::NoAdvantage;
      return record;
    }
    record.status = CellStatus::Found;
    record.t_q = t_q;
    if (grid.want_peak) {
      if (const auto peak = find_fstar(eval, grid.config, *t_q, budget_ptr)) {
        record.f_star = peak->f_star;
        record.t_star = peak->t_star;
      }
    }
  } catch (const TimeBudgetExceeded&) {
    record = MetricsRecord{};
    record.params = params;
    record.status = CellStatus::TimedOut;
  } catch (const std::exception&) {
    record = MetricsRecord{};
    record.params = params;
    record.status = CellStatus::Failed;
  }
  return record;
}

} // namespace detail

inline SweepResult run_sweep(const SweepGrid& grid, const SweepOptions& options) {
  grid.validate();
  if (options.parallelism < 1)
    throw std::invalid_argument("run_sweep: parallelism must be positive");

  const std::size_t cells = grid.cell_count();
  const std::string hash = config_hash_hex(grid.canonical_key_values());

  if (!options.cache_dir.empty())
    std::filesystem::create_directories(options.cache_dir);

  const auto cache_path = [&](std::size_t index) {
    return std::filesystem::path(options.cache_dir) /
           (hash + "-" + std::to_string(index) + ".json");
  };

  SweepResult result;
  result.grid = grid;
  result.records.resize(cells);
  result.provenance.timestamp = detail::utc_timestamp();
  result.provenance.config_hash = hash;

  std::atomic<std::size_t> next{0};
  std::atomic<bool> io_failed{false};
  std::string io_message;
  std::mutex io_mutex;

  const auto worker = [&] {
    for (std::size_t index = next.fetch_add(1); index < cells;
         index = next.fetch_add(1)) {
      if (io_failed.load()) return;
      if (!options.cache_dir.empty()) {
        std::ifstream in(cache_path(index));
        if (in) {
          try {
            nlohmann::json j;
            in >> j;
            result.records[index] = record_from_json(j);
            continue;
          } catch (const std::exception&) {
            // unreadable cache entry: recompute below
          }
        }
      }
      result.records[index] =
          detail::evaluate_cell(grid, index, options.cell_time_budget_s);
      if (!options.cache_dir.empty()) {
        std::ofstream out(cache_path(index));
        out << record_to_json(result.records[index]).dump() << '\n';
        if (!out) {
          std::lock_guard<std::mutex> lock(io_mutex);
          io_failed.store(true);
          io_message = "cannot write cache entry " + cache_path(index).string();
        }
      }
    }
  };

  const int threads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(options.parallelism), cells));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (io_failed.load()) throw std::runtime_error("run_sweep: " + io_message);
  return result;
}

// ---------------------------------------------------------------------------
// Export / import
// ---------------------------------------------------------------------------

inline void export_csv(const SweepResult& result, std::ostream& out) {
  out << "# qst-sweep " << result.provenance.version << " config="
      << result.provenance.config_hash << '\n';
  out << "N,z,alpha,lambda,g,t_q,f_star,t_star,status\n";
  const auto field = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const auto& rec : result.records) {
    out << rec.params.n_sites << ',' << rec.params.coordination << ','
        << format_double(rec.params.falloff) << ','
        << format_double(rec.params.anisotropy) << ','
        << format_double(rec.params.field) << ',' << field(rec.t_q) << ','
        << field(rec.f_star) << ',' << field(rec.t_star) << ','
        << to_string(rec.status) << '\n';
  }
}

inline void export_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);
  export_csv(result, out);
  if (!out) throw std::runtime_error("export_csv: write failed: " + path);
}

inline void export_jsonl(const SweepResult& result, std::ostream& out) {
  nlohmann::json header;
  header["provenance"] = {{"version", result.provenance.version},
                          {"timestamp", result.provenance.timestamp},
                          {"config_hash", result.provenance.config_hash}};
  out << header.dump() << '\n';
  for (const auto& rec : result.records) out << record_to_json(rec).dump() << '\n';
}

inline void export_jsonl(const SweepResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_jsonl: cannot open " + path);
  export_jsonl(result, out);
  if (!out) throw std::runtime_error("export_jsonl: write failed: " + path);
}

/// Reads records back from a CSV produced by export_csv (provenance comment
/// and header skipped).
inline std::vector<MetricsRecord> import_csv(std::istream& in) {
  std::vector<MetricsRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("N,", 0) == 0) continue;
    std::vector<std::string> cols;
    std::string col;
    std::istringstream row(line);
    while (std::getline(row, col, ',')) cols.push_back(col);
    if (line.back() == ',') cols.push_back("");
    if (cols.size() != 9)
      throw std::runtime_error("import_csv: malformed row: " + line);
    MetricsRecord rec;
    rec.params.n_sites = std::stoi(cols[0]);
    rec.params.coordination = std::stoi(cols[1]);
    rec.params.falloff = std::stod(cols[2]);
    rec.params.anisotropy = std::stod(cols[3]);
    rec.params.field = std::stod(cols[4]);
    if (!cols[5].empty()) rec.t_q = std::stod(cols[5]);
    if (!cols[6].empty()) rec.f_star = std::stod(cols[6]);
    if (!cols[7].empty()) rec.t_star = std::stod(cols[7]);
    rec.status = cell_status_from_string(cols[8]);
    records.push_back(rec);
  }
  return records;
}

inline std::vector<MetricsRecord> import_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_csv: cannot open " + path);
  return import_csv(in);
}

} // namespace qst
