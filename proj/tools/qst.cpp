// Command-line surface for the state-transfer pipeline: fidelity traces,
// figure-of-merit extraction, parameter sweeps, scaling fits and dense-oracle
// certification. Configuration comes from a flat key=value file with flag
// overrides; every output carries tool version and config hash.

#include "qst/config.hpp"
#include "qst/fidelity.hpp"
#include "qst/fitting.hpp"
#include "qst/metrics.hpp"
#include "qst/model.hpp"
#include "qst/oracle.hpp"
#include "qst/sweep.hpp"
#include "qst/version.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using qst::KeyValues;

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  bool dump_config = false;

  std::optional<int> n_sites, coordination, parallelism;
  std::optional<double> falloff, anisotropy, field, coupling;
  std::optional<double> epsilon, t_max, dt, time_budget;
  std::optional<std::string> format, cache_dir, metrics_list;
};

void add_model_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key=value config file");
  cmd->add_option("--out", flags.out_path, "output path (default: stdout)");
  cmd->add_flag("--dump-config", flags.dump_config,
                "print the effective config and exit");
  cmd->add_option("-N,--n-sites", flags.n_sites, "chain length N");
  cmd->add_option("-z,--coordination", flags.coordination, "interaction range z");
  cmd->add_option("--alpha,--falloff", flags.falloff, "power-law falloff alpha");
  cmd->add_option("--lambda,--anisotropy", flags.anisotropy, "anisotropy lambda");
  cmd->add_option("-g,--field", flags.field, "transverse field g (units of J)");
  cmd->add_option("-J,--coupling", flags.coupling, "coupling scale J");
}

void add_metrics_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--epsilon", flags.epsilon, "quantum-advantage margin");
  cmd->add_option("--t-max", flags.t_max, "search horizon (units 1/J)");
  cmd->add_option("--dt", flags.dt, "time grid step");
}

// File config overridden by explicit flags, then checked against the set of
// keys the command understands.
KeyValues effective_config(const CommonFlags& flags,
                           const std::set<std::string>& allowed,
                           bool allow_axes = false) {
  KeyValues kv;
  if (!flags.config_path.empty()) kv = qst::parse_config_file(flags.config_path);

  const auto set_int = [&](const char* key, const std::optional<int>& v) {
    if (v) kv[key] = std::to_string(*v);
  };
  const auto set_double = [&](const char* key, const std::optional<double>& v) {
    if (v) kv[key] = qst::format_double(*v);
  };
  set_int("n_sites", flags.n_sites);
  set_int("coordination", flags.coordination);
  set_int("parallelism", flags.parallelism);
  set_double("falloff", flags.falloff);
  set_double("anisotropy", flags.anisotropy);
  set_double("field", flags.field);
  set_double("coupling", flags.coupling);
  set_double("epsilon", flags.epsilon);
  set_double("t_max", flags.t_max);
  set_double("dt", flags.dt);
  set_double("time_budget", flags.time_budget);
  if (flags.format) kv["format"] = *flags.format;
  if (flags.cache_dir) kv["cache_dir"] = *flags.cache_dir;
  if (flags.metrics_list) kv["metrics"] = *flags.metrics_list;
  if (!flags.out_path.empty()) kv["out"] = flags.out_path;

  for (const auto& [key, value] : kv) {
    (void)value;
    if (allowed.count(key)) continue;
    if (allow_axes && key.rfind("axis.", 0) == 0) {
      const std::string axis = key.substr(5);
      if (axis == "N" || axis == "z" || axis == "alpha" || axis == "lambda" ||
          axis == "g")
        continue;
    }
    throw qst::ConfigError("unknown config key `" + key + "`");
  }
  return kv;
}

qst::ModelParams model_from(const KeyValues& kv) {
  qst::ModelParams params;
  params.n_sites = qst::get_int(kv, "n_sites", 10);
  params.coordination = qst::get_int(kv, "coordination", 1);
  params.falloff = qst::get_double(kv, "falloff", 2.0);
  params.anisotropy = qst::get_double(kv, "anisotropy", 0.0);
  params.field = qst::get_double(kv, "field", 0.0);
  params.coupling_scale = qst::get_double(kv, "coupling", 1.0);
  params.validate();
  return params;
}

qst::MetricsConfig metrics_from(const KeyValues& kv, const qst::ModelParams& params) {
  qst::MetricsConfig config = qst::default_metrics_config(params);
  config.epsilon = qst::get_double(kv, "epsilon", config.epsilon);
  config.t_max = qst::get_double(kv, "t_max", config.t_max);
  config.dt = qst::get_double(kv, "dt", config.dt);
  config.validate();
  return config;
}

std::string provenance_line(const KeyValues& kv) {
  return std::string("qst ") + qst::kVersion + " config=" + qst::config_hash_hex(kv);
}

nlohmann::json provenance_json(const KeyValues& kv) {
  return {{"version", qst::kVersion}, {"config_hash", qst::config_hash_hex(kv)}};
}

// Writes to `path`, or stdout when empty.
void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool maybe_dump_config(const CommonFlags& flags, const KeyValues& kv) {
  if (!flags.dump_config) return false;
  std::cout << qst::dump_config(kv);
  return true;
}

// ---------------------------------------------------------------------------

int cmd_trace(const CommonFlags& flags) {
  static const std::set<std::string> allowed = {
      "n_sites", "coordination", "falloff", "anisotropy", "field",
      "coupling", "t_max",        "dt",      "out"};
  const KeyValues kv = effective_config(flags, allowed);
  if (maybe_dump_config(flags, kv)) return 0;

  const qst::ModelParams params = model_from(kv);
  const double t_max = qst::get_double(kv, "t_max", 5.0 * params.n_sites);
  const double dt = qst::get_double(kv, "dt", 0.05);
  const qst::FidelityTrace trace = qst::fidelity_trace(params, t_max, dt);

  std::ostringstream out;
  qst::write_trace_csv(trace, out, provenance_line(kv));
  write_output(qst::get_string(kv, "out", ""), out.str());
  return 0;
}

int cmd_metrics(const CommonFlags& flags) {
  static const std::set<std::string> allowed = {
      "n_sites", "coordination", "falloff", "anisotropy", "field",
      "coupling", "epsilon",      "t_max",   "dt",         "out"};
  const KeyValues kv = effective_config(flags, allowed);
  if (maybe_dump_config(flags, kv)) return 0;

  const qst::ModelParams params = model_from(kv);
  const qst::MetricsConfig config = metrics_from(kv, params);
  const qst::MetricsRecord record = qst::extract_metrics(params, config);

  std::cerr << "N=" << params.n_sites << " z=" << params.coordination
            << " alpha=" << params.falloff << " lambda=" << params.anisotropy
            << " g=" << params.field << "\n"
            << "status: " << qst::to_string(record.status) << "\n";
  if (record.t_q) std::cerr << "t_q = " << *record.t_q << "\n";
  if (record.f_star)
    std::cerr << "f* = " << *record.f_star << " at t* = " << *record.t_star << "\n";

  nlohmann::json j;
  j["provenance"] = provenance_json(kv);
  j["record"] = qst::record_to_json(record);
  write_output(qst::get_string(kv, "out", ""), j.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const CommonFlags& flags) {
  static const std::set<std::string> allowed = {
      "n_sites",    "coordination", "falloff",   "anisotropy", "field",
      "coupling",   "epsilon",      "t_max",     "dt",         "out",
      "format",     "parallelism",  "cache_dir", "time_budget", "metrics",
      "axis-order"};
  const KeyValues kv = effective_config(flags, allowed, /*allow_axes=*/true);
  if (maybe_dump_config(flags, kv)) return 0;

  qst::SweepGrid grid;
  grid.base = model_from(kv);
  grid.config = metrics_from(kv, grid.base);
  const std::string wanted = qst::get_string(kv, "metrics", "t_q,f_star,t_star");
  grid.want_peak = wanted.find("f_star") != std::string::npos ||
                   wanted.find("t_star") != std::string::npos;

  // Declaration order: honor `axis-order` when given, else config-file order.
  std::vector<std::string> order;
  if (qst::has_key(kv, "axis-order")) {
    std::istringstream in(qst::get_string(kv, "axis-order", ""));
    std::string name;
    while (std::getline(in, name, ',')) order.push_back(name);
  } else {
    for (const auto& [key, value] : kv) {
      (void)value;
      if (key.rfind("axis.", 0) == 0) order.push_back(key.substr(5));
    }
  }
  for (const std::string& name : order) {
    const std::string key = "axis." + name;
    if (!qst::has_key(kv, key))
      throw qst::ConfigError("axis-order names `" + name + "` but `" + key +
                             "` is missing");
    grid.axes.push_back({name, qst::parse_value_list(kv.at(key), key)});
  }

  qst::SweepOptions options;
  options.parallelism = qst::get_int(kv, "parallelism", 1);
  options.cache_dir = qst::get_string(kv, "cache_dir", "");
  options.cell_time_budget_s = qst::get_double(kv, "time_budget", 0.0);

  const qst::SweepResult result = qst::run_sweep(grid, options);

  const std::string format = qst::get_string(kv, "format", "csv");
  std::ostringstream out;
  if (format == "csv")
    qst::export_csv(result, out);
  else if (format == "jsonl")
    qst::export_jsonl(result, out);
  else
    throw qst::ConfigError("config key `format`: expected csv or jsonl, got " + format);
  write_output(qst::get_string(kv, "out", ""), out.str());
  std::cerr << "sweep: " << result.records.size() << " cells done\n";
  return 0;
}

int cmd_fit(const CommonFlags& flags, const std::string& input_flag, bool fix_a_flag) {
  static const std::set<std::string> allowed = {"fit.input", "fit.fix_a", "out"};
  CommonFlags only_common = flags;
  KeyValues kv = effective_config(only_common, allowed);
  if (!input_flag.empty()) kv["fit.input"] = input_flag;
  if (fix_a_flag) kv["fit.fix_a"] = "true";
  if (maybe_dump_config(flags, kv)) return 0;

  const std::string input = qst::get_string(kv, "fit.input", "");
  if (input.empty()) throw qst::ConfigError("missing config key `fit.input` (CSV of N,f_star)");

  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot open fit input: " + input);
  std::vector<std::pair<double, double>> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("N", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("fit input: malformed row: " + line);
    points.emplace_back(std::stod(line.substr(0, comma)),
                        std::stod(line.substr(comma + 1)));
  }

  const qst::FitResult fit =
      qst::fit_scaling(points, qst::get_bool(kv, "fit.fix_a", false));

  nlohmann::json j;
  j["provenance"] = provenance_json(kv);
  j["a"] = fit.a;
  j["b"] = fit.b;
  j["eta"] = fit.eta;
  j["residual"] = fit.residual;
  j["fixed_a"] = fit.fixed_a;
  j["converged"] = fit.converged;
  j["degenerate_decay"] = fit.degenerate_decay;
  write_output(qst::get_string(kv, "out", ""), j.dump(2) + "\n");
  return 0;
}

int cmd_oracle_check(const CommonFlags& flags, int n_times_flag, std::uint64_t seed_flag,
                     const std::string& quadrature_flag) {
  static const std::set<std::string> allowed = {
      "n_sites", "coordination", "falloff",        "anisotropy",
      "field",   "coupling",     "oracle.n_times", "oracle.seed",
      "oracle.quadrature", "oracle.n_theta", "oracle.n_phi", "oracle.times", "out"};
  KeyValues kv = effective_config(flags, allowed);
  if (n_times_flag > 0) kv["oracle.n_times"] = std::to_string(n_times_flag);
  if (seed_flag != 0) kv["oracle.seed"] = std::to_string(seed_flag);
  if (!quadrature_flag.empty()) kv["oracle.quadrature"] = quadrature_flag;
  if (maybe_dump_config(flags, kv)) return 0;

  const qst::ModelParams params = model_from(kv);
  if (params.n_sites > 12)
    throw qst::ConfigError("config key `n_sites`: oracle check is limited to N <= 12");

  std::vector<double> times;
  if (qst::has_key(kv, "oracle.times")) {
    times = qst::parse_value_list(kv.at("oracle.times"), "oracle.times");
  } else {
    const int n_times = qst::get_int(kv, "oracle.n_times", 5);
    std::mt19937_64 rng(qst::get_int(kv, "oracle.seed", 12345));
    std::uniform_real_distribution<double> dist(0.0, 3.0 * params.n_sites);
    for (int i = 0; i < n_times; ++i) times.push_back(dist(rng));
  }

  qst::Quadrature quad = qst::Quadrature::cardinal();
  const std::string quad_name = qst::get_string(kv, "oracle.quadrature", "cardinal");
  if (quad_name == "grid")
    quad = qst::Quadrature::grid(qst::get_int(kv, "oracle.n_theta", 50),
                                 qst::get_int(kv, "oracle.n_phi", 100));
  else if (quad_name != "cardinal")
    throw qst::ConfigError("config key `oracle.quadrature`: expected cardinal or grid");

  const qst::ProtocolSimulator simulator(params);
  const qst::TransferEvaluator evaluator(params);

  nlohmann::json samples = nlohmann::json::array();
  double max_deviation = 0.0;
  for (double t : times) {
    const double ff = evaluator.fidelity(t);
    const double oracle = simulator.fidelity(t, quad);
    const double dev = std::abs(ff - oracle);
    max_deviation = std::max(max_deviation, dev);
    samples.push_back({{"t", t},
                       {"free_fermion_f", ff},
                       {"oracle_f", oracle},
                       {"abs_deviation", dev}});
  }

  nlohmann::json j;
  j["provenance"] = provenance_json(kv);
  j["params"] = {{"N", params.n_sites},       {"z", params.coordination},
                 {"alpha", params.falloff},   {"lambda", params.anisotropy},
                 {"g", params.field},         {"J", params.coupling_scale}};
  j["channel_gap"] = simulator.channel_gap();
  j["samples"] = samples;
  j["max_deviation"] = max_deviation;
  write_output(qst::get_string(kv, "out", ""), j.dump(2) + "\n");
  std::cerr << "oracle-check: max |free-fermion f - oracle f| = " << max_deviation
            << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum state transfer through the long-range extended XY chain"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("qst ") + qst::kVersion);

  CommonFlags trace_flags, metrics_flags, sweep_flags, fit_flags, oracle_flags;

  CLI::App* trace = app.add_subcommand("trace", "fidelity trace over a time grid");
  add_model_flags(trace, trace_flags);
  trace->add_option("--t-max", trace_flags.t_max, "trace end time");
  trace->add_option("--dt", trace_flags.dt, "trace step");

  CLI::App* metrics = app.add_subcommand("metrics", "extract t_q, f*, t* for one cell");
  add_model_flags(metrics, metrics_flags);
  add_metrics_flags(metrics, metrics_flags);

  CLI::App* sweep = app.add_subcommand("sweep", "evaluate metrics over a parameter grid");
  add_model_flags(sweep, sweep_flags);
  add_metrics_flags(sweep, sweep_flags);
  sweep->add_option("--parallelism", sweep_flags.parallelism, "worker threads");
  std::string sweep_format, sweep_cache, sweep_metrics;
  sweep->add_option("--format", sweep_format, "csv or jsonl");
  sweep->add_option("--cache-dir", sweep_cache, "cell cache directory");
  sweep->add_option("--metrics", sweep_metrics, "comma list of t_q,f_star,t_star");
  sweep->add_option("--time-budget", sweep_flags.time_budget, "per-cell budget (s)");

  std::string fit_input;
  bool fit_fix_a = false;
  CLI::App* fit = app.add_subcommand("fit", "fit f*(N) = a*exp(-b*N^eta)");
  fit->add_option("--config", fit_flags.config_path, "key=value config file");
  fit->add_option("--out", fit_flags.out_path, "output path");
  fit->add_flag("--dump-config", fit_flags.dump_config, "print effective config");
  fit->add_option("--input", fit_input, "CSV with N,f_star columns");
  fit->add_flag("--fix-a", fit_fix_a, "pin the amplitude a to 1");

  int oracle_n_times = 0;
  std::uint64_t oracle_seed = 0;
  std::string oracle_quadrature;
  CLI::App* oracle =
      app.add_subcommand("oracle-check", "compare free-fermion f(t) with the dense protocol");
  add_model_flags(oracle, oracle_flags);
  oracle->add_option("--n-times", oracle_n_times, "number of random sample times");
  oracle->add_option("--seed", oracle_seed, "sample-time RNG seed");
  oracle->add_option("--quadrature", oracle_quadrature, "cardinal or grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (trace->parsed()) return cmd_trace(trace_flags);
    if (metrics->parsed()) return cmd_metrics(metrics_flags);
    if (sweep->parsed()) {
      if (!sweep_format.empty()) sweep_flags.format = sweep_format;
      if (!sweep_cache.empty()) sweep_flags.cache_dir = sweep_cache;
      if (!sweep_metrics.empty()) sweep_flags.metrics_list = sweep_metrics;
      return cmd_sweep(sweep_flags);
    }
    if (fit->parsed()) return cmd_fit(fit_flags, fit_input, fit_fix_a);
    if (oracle->parsed())
      return cmd_oracle_check(oracle_flags, oracle_n_times, oracle_seed,
                              oracle_quadrature);
  } catch (const qst::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
