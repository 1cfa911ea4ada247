#include "qst/metrics.hpp"

#include "qst/fidelity.hpp"
#include "testutil.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using qst::extract_metrics;
using qst::find_fstar;
using qst::find_tq;
using qst::MetricsConfig;
using qst::ModelParams;
using qst::TransferEvaluator;

namespace {

ModelParams params(int n, int z, double alpha, double lambda, double g) {
  ModelParams p;
  p.n_sites = n;
  p.coordination = z;
  p.falloff = alpha;
  p.anisotropy = lambda;
  p.field = g;
  return p;
}

MetricsConfig config(double t_max, double dt = 0.05, double eps = 1e-4) {
  MetricsConfig c;
  c.t_max = t_max;
  c.dt = dt;
  c.epsilon = eps;
  return c;
}

} // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config(10.0, 0.05, 0.4).validate(), std::invalid_argument);
  CHECK_THROWS_AS(config(10.0, 0.05, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(config(0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(config(1.0, 2.0).validate(), std::invalid_argument);
  CHECK_NOTHROW(config(10.0).validate());
}

TEST_CASE("crossing time on the two-site chain matches the closed form") {
  // f(t) = 1/2 + p^2/6 + p/3 with p = sin(t/2); the threshold crossing is
  // p* = sqrt(2 + 6 eps) - 1.
  const double eps = 1e-4;
  const TransferEvaluator eval(params(2, 1, 1.0, 0.0, 0.0));
  const auto t_q = find_tq(eval, config(10.0, 0.05, eps));
  REQUIRE(t_q.has_value());
  const double p_star = std::sqrt(2.0 + 6.0 * eps) - 1.0;
  CHECK(*t_q == Catch::Approx(2.0 * std::asin(p_star)).margin(2e-6));

  const auto peak = find_fstar(eval, config(10.0), *t_q);
  REQUIRE(peak.has_value());
  CHECK(peak->f_star == Catch::Approx(1.0).margin(1e-6));
  CHECK(peak->t_star == Catch::Approx(M_PI).margin(1e-3));
}

TEST_CASE("horizon exhaustion reports no advantage") {
  const TransferEvaluator eval(params(12, 1, 2.0, 0.5, 0.7));
  CHECK_FALSE(find_tq(eval, config(2.0)).has_value());

  const auto record = extract_metrics(params(12, 1, 2.0, 0.5, 0.7), config(2.0));
  CHECK(record.status == qst::CellStatus::NoAdvantage);
  CHECK_FALSE(record.t_q.has_value());
  CHECK_FALSE(record.f_star.has_value());
}

TEST_CASE("record invariants on random found cells") {
  testutil::Rng rng(9101);
  int found = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const int n = rng.uniform_int(4, 14);
    const auto p = params(n, rng.uniform_int(1, n - 1), rng.uniform(0.5, 3.0),
                          rng.uniform(0.0, 1.3), rng.uniform(0.0, 2.0));
    const auto record = extract_metrics(p, config(12.0 * n));
    if (record.status != qst::CellStatus::Found) continue;
    ++found;
    REQUIRE(record.t_q.has_value());
    if (record.f_star) {
      CHECK(*record.f_star > 2.0 / 3.0 + 1e-4);
      CHECK(*record.t_star >= *record.t_q);
    }
  }
  CHECK(found > 0);
}

TEST_CASE("crossing time is grid-step independent") {
  const auto p = params(25, 2, 2.3, 0.5, 0.7);
  const TransferEvaluator eval(p);
  const auto coarse = find_tq(eval, config(60.0, 0.1));
  const auto medium = find_tq(eval, config(60.0, 0.05));
  const auto fine = find_tq(eval, config(60.0, 0.025));
  REQUIRE(coarse.has_value());
  REQUIRE(medium.has_value());
  REQUIRE(fine.has_value());
  CHECK(std::abs(*coarse - *medium) < 2e-6);
  CHECK(std::abs(*medium - *fine) < 2e-6);
}

TEST_CASE("crossing time is insensitive to the advantage margin") {
  const auto p = params(25, 2, 2.3, 0.5, 0.7);
  const TransferEvaluator eval(p);
  const auto wide = find_tq(eval, config(60.0, 0.05, 1e-3));
  const auto narrow = find_tq(eval, config(60.0, 0.05, 1e-6));
  REQUIRE(wide.has_value());
  REQUIRE(narrow.has_value());
  CHECK(std::abs(*wide - *narrow) < 0.05);
}

TEST_CASE("saturation family at large falloff is flat in z") {
  const auto base = params(10, 1, 10.0, 0.5, 0.7);
  const auto family = qst::tq_saturation(base, config(120.0));
  REQUIRE(family.records.size() == 9);
  REQUIRE(family.t_q_sat.has_value());
  REQUIRE(family.records.front().t_q.has_value());
  CHECK(family.saturated);
  CHECK_FALSE(family.partial);
  CHECK(*family.t_q_sat == Catch::Approx(*family.records.front().t_q).margin(0.5));
}

TEST_CASE("families tolerate missing cells") {
  // Horizon chosen so that only part of the family crosses the limit.
  const auto base = params(10, 1, 0.5, 0.5, 0.2);
  const auto family = qst::tq_saturation(base, config(12.0));
  CHECK(family.partial);

  int found = 0;
  for (const auto& rec : family.records)
    if (rec.status == qst::CellStatus::Found) ++found;
  CHECK(found < static_cast<int>(family.records.size()));

  if (found > 0) {
    const auto avg = qst::mean_tq_over_z(base, config(12.0));
    CHECK(avg.counted == found);
  }
}

TEST_CASE("z average rejects a fully exhausted family") {
  const auto base = params(8, 1, 2.0, 0.5, 0.7);
  CHECK_THROWS_AS(qst::mean_tq_over_z(base, config(1.0)), std::runtime_error);
}

TEST_CASE("peak-versus-saturation family validation") {
  const auto base = params(8, 7, 2.0, 1.0, 1.7);
  CHECK_THROWS_AS(qst::delta_fstar(params(8, 3, 2.0, 1.0, 1.7), config(64.0),
                                   qst::default_alpha_family()),
                  std::invalid_argument);
  CHECK_THROWS_AS(qst::delta_fstar(base, config(64.0), {0.5, 0.4, 8.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(qst::delta_fstar(base, config(64.0), {0.5, 1.0, 2.0}),
                  std::invalid_argument);

  const auto family = qst::delta_fstar(base, config(64.0), {2.0, 2.5, 3.0, 8.0});
  CHECK(family.delta >= 0.0);
  CHECK(family.f_star_max >= family.f_star_sat);
  CHECK(family.records.size() == 4);
}

TEST_CASE("nearest-neighbor metrics ignore the falloff rate") {
  const auto a = extract_metrics(params(12, 1, 0.5, 0.8, 1.2), config(80.0));
  const auto b = extract_metrics(params(12, 1, 6.0, 0.8, 1.2), config(80.0));
  REQUIRE(a.t_q.has_value());
  REQUIRE(b.t_q.has_value());
  CHECK(*a.t_q == Catch::Approx(*b.t_q).margin(1e-9));
  REQUIRE(a.f_star.has_value());
  REQUIRE(b.f_star.has_value());
  CHECK(*a.f_star == Catch::Approx(*b.f_star).margin(1e-12));
}

TEST_CASE("cell time budget interrupts long scans") {
  qst::ComputeBudget budget;
  budget.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  const TransferEvaluator eval(params(20, 1, 2.0, 0.5, 0.7));
  CHECK_THROWS_AS(find_tq(eval, config(5000.0, 0.001), &budget),
                  qst::TimeBudgetExceeded);
}
