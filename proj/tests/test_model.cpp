#include "qst/model.hpp"

#include "testutil.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using qst::build_couplings;
using qst::build_quadratic_form;
using qst::ModelParams;

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

} // namespace

TEST_CASE("coupling table follows the power law") {
  SECTION("alpha = 0 gives uniform couplings") {
    const auto table = build_couplings(params(10, 3, 0.0, 0.0, 0.0));
    REQUIRE(table.range() == 3);
    CHECK(table.at_distance(1) == 1.0);
    CHECK(table.at_distance(2) == 1.0);
    CHECK(table.at_distance(3) == 1.0);
  }
  SECTION("alpha = 1") {
    const auto table = build_couplings(params(10, 2, 1.0, 0.0, 0.0));
    CHECK(table.at_distance(1) == 1.0);
    CHECK(table.at_distance(2) == 0.5);
  }
  SECTION("alpha = 2.5") {
    const auto table = build_couplings(params(10, 3, 2.5, 0.0, 0.0));
    CHECK(table.at_distance(1) == 1.0);
    CHECK(table.at_distance(2) == Catch::Approx(std::pow(2.0, -2.5)).epsilon(1e-15));
    CHECK(table.at_distance(3) == Catch::Approx(std::pow(3.0, -2.5)).epsilon(1e-15));
  }
  SECTION("strengths never increase with distance") {
    testutil::Rng rng(7001);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = rng.uniform_int(3, 30);
      const auto table = build_couplings(
          params(n, rng.uniform_int(1, n - 1), rng.uniform(0.0, 5.0), 0.0, 0.0));
      CHECK(table.at_distance(1) == 1.0);
      for (int d = 2; d <= table.range(); ++d)
        CHECK(table.at_distance(d) <= table.at_distance(d - 1));
    }
  }
}

TEST_CASE("model parameters are validated") {
  CHECK_THROWS_AS(build_couplings(params(10, 0, 1.0, 0.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(build_couplings(params(10, 10, 1.0, 0.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(build_couplings(params(10, 11, 1.0, 0.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(build_couplings(params(1, 1, 1.0, 0.0, 0.0)), std::invalid_argument);
  ModelParams bad = params(10, 2, -0.5, 0.0, 0.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = params(10, 2, 1.0, -0.1, 0.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = params(10, 2, 1.0, 0.0, 0.0);
  bad.coupling_scale = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("quadratic form structure") {
  SECTION("symmetry, antisymmetry, bandwidth on random instances") {
    testutil::Rng rng(7002);
    for (int trial = 0; trial < 40; ++trial) {
      const int n = rng.uniform_int(2, 16);
      const int z = rng.uniform_int(1, n - 1);
      const auto form = build_quadratic_form(
          params(n, z, rng.uniform(0.0, 4.0), rng.uniform(0.0, 1.3),
                 rng.uniform(-2.0, 2.0)));
      CHECK((form.hopping - form.hopping.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK((form.pairing + form.pairing.transpose()).cwiseAbs().maxCoeff() == 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (std::abs(i - j) > z) {
            CHECK(form.hopping(i, j) == 0.0);
            CHECK(form.pairing(i, j) == 0.0);
          }
        }
    }
  }

  SECTION("no pairing without anisotropy") {
    const auto form = build_quadratic_form(params(12, 5, 1.3, 0.0, 0.8));
    CHECK(form.pairing.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("faster falloff never strengthens a distant bond") {
    testutil::Rng rng(7003);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = rng.uniform_int(3, 14);
      const int z = rng.uniform_int(2, n - 1);
      const double a1 = rng.uniform(0.0, 3.0);
      const double a2 = a1 + rng.uniform(0.01, 2.0);
      const auto f1 = build_quadratic_form(params(n, z, a1, 0.5, 0.4));
      const auto f2 = build_quadratic_form(params(n, z, a2, 0.5, 0.4));
      for (int j = 0; j + 2 < n; ++j)
        for (int d = 2; d <= z && j + d < n; ++d)
          CHECK(std::abs(f1.hopping(j, j + d)) >=
                std::abs(f2.hopping(j, j + d)) - 1e-15);
    }
  }

  SECTION("nearest-neighbor model ignores the falloff rate") {
    const auto a = build_quadratic_form(params(9, 1, 0.3, 0.7, 1.1));
    const auto b = build_quadratic_form(params(9, 1, 7.5, 0.7, 1.1));
    CHECK((a.hopping - b.hopping).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.pairing - b.pairing).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("decoupled limit: diagonal form has pure field energies") {
    // Field-dominated single-site blocks, assembled directly.
    qst::QuadraticForm form;
    form.hopping = 1.7 * Eigen::MatrixXd::Identity(3, 3);
    form.pairing = Eigen::MatrixXd::Zero(3, 3);
    const auto sol = qst::diagonalize(form);
    for (int q = 0; q < 3; ++q) CHECK(sol.energies(q) == Catch::Approx(1.7).epsilon(1e-14));
  }
}
