#pragma once

// Figures of merit extracted from fidelity dynamics:
//   t_q     first time the averaged fidelity exceeds the classical limit 2/3
//           by more than epsilon (grid scan + bisection refinement),
//   f*, t*  value and time of the first fidelity peak at t >= t_q
//           (grid-detected, parabolically refined),
// plus family aggregates over the coordination number z (saturation value,
// z-average) and over the falloff rate alpha (peak/saturation gap of f*).

#include "qst/fidelity.hpp"
#include "qst/model.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qst {

struct MetricsConfig {
  double epsilon = 1e-4;               // quantum-advantage margin
  double t_max = 0.0;                  // search horizon, units 1/J
  double dt = 0.05;                    // scan grid step
  double classical_limit = 2.0 / 3.0;

  void validate() const {
    if (!(epsilon > 0.0) || epsilon >= 1.0 / 3.0)
      throw std::invalid_argument("epsilon must lie in (0, 1/3)");
    if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    if (!(dt > 0.0) || dt >= t_max)
      throw std::invalid_argument("dt must satisfy 0 < dt < t_max");
  }

  double threshold() const { return classical_limit + epsilon; }
};

inline MetricsConfig default_metrics_config(const ModelParams& params) {
  MetricsConfig config;
  config.t_max = 5.0 * params.n_sites / params.coupling_scale;
  return config;
}

enum class CellStatus { Found, NoAdvantage, InvalidCell, TimedOut, Failed };

inline const char* to_string(CellStatus status) {
  switch (status) {
    case CellStatus::Found: return "found";
    case CellStatus::NoAdvantage: return "no-advantage-within-horizon";
    case CellStatus::InvalidCell: return "invalid-cell";
    case CellStatus::TimedOut: return "timed-out";
    case CellStatus::Failed: return "failed";
  }
  return "unknown";
}

inline CellStatus cell_status_from_string(const std::string& s) {
  if (s == "found") return CellStatus::Found;
  if (s == "no-advantage-within-horizon") return CellStatus::NoAdvantage;
  if (s == "invalid-cell") return CellStatus::InvalidCell;
  if (s == "timed-out") return CellStatus::TimedOut;
  if (s == "failed") return CellStatus::Failed;
  throw std::invalid_argument("unknown cell status: " + s);
}

struct MetricsRecord {
  ModelParams params;
  std::optional<double> t_q;
  std::optional<double> f_star;
  std::optional<double> t_star;
  CellStatus status = CellStatus::NoAdvantage;
};

struct TimeBudgetExceeded : std::runtime_error {
  TimeBudgetExceeded() : std::runtime_error("cell time budget exceeded") {}
};

/// Optional wall-clock deadline for long scans (used by sweep cells).
struct ComputeBudget {
  std::chrono::steady_clock::time_point deadline;
};

namespace detail {

inline void check_budget(const ComputeBudget* budget) {
  if (budget && std::chrono::steady_clock::now() > budget->deadline)
    throw TimeBudgetExceeded();
}

constexpr double kTimeRefineTol = 1e-6;

} // namespace detail

/// Smallest t <= t_max with f(t) - 2/3 > epsilon, refined by bisection to
/// 1e-6 in t. Empty when the horizon is exhausted.
inline std::optional<double> find_tq(const TransferEvaluator& eval,
                                     const MetricsConfig& config,
                                     const ComputeBudget* budget = nullptr) {
  config.validate();
  const double threshold = config.threshold();
  const long steps = static_cast<long>(std::floor(config.t_max / config.dt + 1e-9));

  double prev_t = 0.0;
  double prev_f = eval.fidelity(0.0);
  if (prev_f > threshold) return 0.0;

  for (long i = 1; i <= steps; ++i) {
    if ((i & 4095) == 0) detail::check_budget(budget);
    const double t = i * config.dt;
    const double f = eval.fidelity(t);
    if (f > threshold) {
      double lo = prev_t, hi = t;
      while (hi - lo > detail::kTimeRefineTol) {
        const double mid = 0.5 * (lo + hi);
        (eval.fidelity(mid) > threshold ? hi : lo) = mid;
      }
      return hi;
    }
    prev_t = t;
    prev_f = f;
  }
  (void)prev_f;
  return std::nullopt;
}

struct PeakResult {
  double f_star = 0.0;
  double t_star = 0.0;
};

/// First local maximum of f(t) at t >= t_q: located on the grid, refined by
/// a parabola through the bracketing triple. Empty when the peak does not
/// close before the horizon.
inline std::optional<PeakResult> find_fstar(const TransferEvaluator& eval,
                                            const MetricsConfig& config,
                                            double t_q,
                                            const ComputeBudget* budget = nullptr) {
  config.validate();
  const double threshold = config.threshold();
  const long steps = static_cast<long>(std::floor(config.t_max / config.dt + 1e-9));
  const long start = std::max<long>(0, static_cast<long>(std::floor(t_q / config.dt)));
  if (start + 2 > steps) return std::nullopt;

  double f_prev = eval.fidelity(start * config.dt);
  double f_curr = eval.fidelity((start + 1) * config.dt);
  for (long i = start + 1; i + 1 <= steps; ++i) {
    if ((i & 4095) == 0) detail::check_budget(budget);
    const double t = i * config.dt;
    const double f_next = eval.fidelity(t + config.dt);
    if (t >= t_q && f_curr > threshold && f_curr >= f_prev && f_curr >= f_next) {
      const double denom = f_prev - 2.0 * f_curr + f_next;
      double t_star = t;
      if (denom < -1e-15) {
        t_star = t + 0.5 * config.dt * (f_prev - f_next) / denom;
        t_star = std::clamp(t_star, t - config.dt, t + config.dt);
      }
      t_star = std::max(t_star, t_q);
      const double f_refined = eval.fidelity(t_star);
      if (f_refined >= f_curr) return PeakResult{f_refined, t_star};
      return PeakResult{f_curr, t};
    }
    f_prev = f_curr;
    f_curr = f_next;
  }
  return std::nullopt;
}

/// Full per-cell extraction: t_q plus, when found, the first peak.
inline MetricsRecord extract_metrics(const ModelParams& params,
                                     const MetricsConfig& config,
                                     const ComputeBudget* budget = nullptr) {
  params.validate();
  config.validate();
  MetricsRecord record;
  record.params = params;
  const TransferEvaluator eval(params);
  const std::optional<double> t_q = find_tq(eval, config, budget);
  if (!t_q) {
    record.status = CellStatus::NoAdvantage;
    return record;
  }
  record.status = CellStatus::Found;
  record.t_q = t_q;
  if (const auto peak = find_fstar(eval, config, *t_q, budget)) {
    record.f_star = peak->f_star;
    record.t_star = peak->t_star;
  }
  return record;
}

// ---------------------------------------------------------------------------
// Family aggregates
// ---------------------------------------------------------------------------

struct TqZFamily {
  std::vector<MetricsRecord> records; // z = 1 .. N-1 in order
  std::optional<double> t_q_sat;      // t_q at z = N-1
  bool saturated = false;             // last ceil(N/5) cells vary < 2% relative
  bool partial = false;               // some cell had no advantage
};

/// t_q across the full coordination family z = 1..N-1; the z = N-1 value is
/// reported as the saturation value with a variance-based flag.
inline TqZFamily tq_saturation(const ModelParams& base, const MetricsConfig& config) {
  TqZFamily family;
  for (int z = 1; z <= base.n_sites - 1; ++z) {
    ModelParams params = base;
    params.coordination = z;
    family.records.push_back(extract_metrics(params, config));
    if (family.records.back().status != CellStatus::Found) family.partial = true;
  }
  const MetricsRecord& last = family.records.back();
  if (last.status == CellStatus::Found) family.t_q_sat = last.t_q;

  const int window = (base.n_sites + 4) / 5;
  double lo = 1e300, hi = -1e300, sum = 0.0;
  int counted = 0;
  for (int i = std::max<int>(0, static_cast<int>(family.records.size()) - window);
       i < static_cast<int>(family.records.size()); ++i) {
    const auto& rec = family.records[i];
    if (rec.status != CellStatus::Found) return family; // partial tail: not saturated
    lo = std::min(lo, *rec.t_q);
    hi = std::max(hi, *rec.t_q);
    sum += *rec.t_q;
    ++counted;
  }
  if (counted > 0 && sum > 0.0)
    family.saturated = (hi - lo) / (sum / counted) < 0.02;
  return family;
}

struct TqZAverage {
  std::vector<MetricsRecord> records;
  double mean = 0.0;
  int counted = 0;
};

/// Arithmetic mean of t_q over all z with advantage found. Throws when every
/// cell exhausts the horizon.
inline TqZAverage mean_tq_over_z(const ModelParams& base, const MetricsConfig& config) {
  TqZAverage avg;
  double sum = 0.0;
  for (int z = 1; z <= base.n_sites - 1; ++z) {
    ModelParams params = base;
    params.coordination = z;
    avg.records.push_back(extract_metrics(params, config));
    const auto& rec = avg.records.back();
    if (rec.status == CellStatus::Found) {
      sum += *rec.t_q;
      ++avg.counted;
    }
  }
  if (avg.counted == 0)
    throw std::runtime_error("mean_tq_over_z: no cell reached quantum advantage");
  avg.mean = sum / avg.counted;
  return avg;
}

struct FstarAlphaFamily {
  std::vector<double> alphas;
  std::vector<MetricsRecord> records;
  double f_star_max = 0.0;  // maximum of f* over the family
  double f_star_sat = 0.0;  // f* at the largest alpha
  double delta = 0.0;       // f_star_max - f_star_sat
};

/// Default alpha family for peak/saturation analysis: dense (0.1) through the
/// nonmonotonic window, coarser out to the saturation plateau.
inline std::vector<double> default_alpha_family() {
  std::vector<double> alphas;
  for (int i = 0; i <= 25; ++i) alphas.push_back(0.5 + 0.1 * i);  // 0.5 .. 3.0
  for (int i = 1; i <= 14; ++i) alphas.push_back(3.0 + 0.5 * i);  // 3.5 .. 10.0
  return alphas;
}

/// Peak-versus-saturation gap of f* over a falloff family at fixed z = N-1.
inline FstarAlphaFamily delta_fstar(const ModelParams& base, const MetricsConfig& config,
                                    std::vector<double> alphas) {
  if (alphas.size() < 2)
    throw std::invalid_argument("delta_fstar: need at least two alpha values");
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (!(alphas[i] > alphas[i - 1]))
      throw std::invalid_argument("delta_fstar: alphas must be strictly increasing");
  if (alphas.back() < 8.0)
    throw std::invalid_argument("delta_fstar: family must extend to alpha >= 8");
  if (base.coordination != base.n_sites - 1)
    throw std::invalid_argument("delta_fstar: family is defined at z = N-1");

  FstarAlphaFamily family;
  family.alphas = alphas;
  bool any = false;
  for (double alpha : alphas) {
    ModelParams params = base;
    params.falloff = alpha;
    family.records.push_back(extract_metrics(params, config));
    const auto& rec = family.records.back();
    if (rec.f_star) {
      family.f_star_max = any ? std::max(family.f_star_max, *rec.f_star) : *rec.f_star;
      any = true;
    }
  }
  if (!any || !family.records.back().f_star)
    throw std::runtime_error("delta_fstar: saturation cell has no fidelity peak");
  family.f_star_sat = *family.records.back().f_star;
  family.delta = family.f_star_max - family.f_star_sat;
  return family;
}

} // namespace qst
