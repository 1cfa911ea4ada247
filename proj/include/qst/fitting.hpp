#pragma once

// Least-squares fit of the system-size decay of the first-peak fidelity with
// the ansatz f*(N) = a * exp(-b * N^eta). Derivative-free: a coarse scan over
// (b, eta) with the amplitude solved in closed form, then Powell-style
// coordinate descent in (log10 b, eta).

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qst {

struct FitResult {
  double a = 1.0;
  double b = 0.0;
  double eta = 0.0;
  double residual = 0.0; // root-mean-square error
  bool fixed_a = false;
  bool converged = true;
  bool degenerate_decay = false; // fitted b at the b -> 0 boundary
};

namespace detail {

struct ScalingObjective {
  const std::vector<std::pair<double, double>>& points;
  bool fix_a;

  // RMS residual at (log10 b, eta); amplitude solved in closed form when free.
  double operator()(double log_b, double eta, double* a_out = nullptr) const {
    const double b = std::pow(10.0, log_b);
    double num = 0.0, den = 0.0;
    std::vector<double> model(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double m = std::exp(-b * std::pow(points[i].first, eta));
      model[i] = m;
      num += points[i].second * m;
      den += m * m;
    }
    const double a = fix_a ? 1.0 : (den > 0.0 ? num / den : 1.0);
    if (a_out) *a_out = a;
    double sq = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = points[i].second - a * model[i];
      sq += r * r;
    }
    return std::sqrt(sq / points.size());
  }
};

// Golden-section minimization of a 1D slice; returns argmin over [lo, hi].
template <typename F>
double golden_min(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace detail

inline FitResult fit_scaling(const std::vector<std::pair<double, double>>& points,
                             bool fix_a_to_one) {
  if (points.size() < 4)
    throw std::invalid_argument("fit_scaling: need at least 4 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && !(points[i].first > points[i - 1].first))
      throw std::invalid_argument("fit_scaling: N values must be strictly increasing");
    if (!(points[i].second > 0.0 && points[i].second <= 1.0))
      throw std::invalid_argument("fit_scaling: f* values must lie in (0, 1]");
  }

  const detail::ScalingObjective objective{points, fix_a_to_one};

  // Coarse scan. b spans decades, eta both signs so either reading of the
  // exponent is representable.
  double best_lb = -4.0, best_eta = 1.0;
  double best = std::numeric_limits<double>::infinity();
  for (int ib = 0; ib <= 70; ++ib) {
    const double lb = -6.0 + 7.0 * ib / 70.0; // log10 b in [-6, 1]
    for (int ie = 0; ie <= 120; ++ie) {
      const double eta = -3.0 + 6.0 * ie / 120.0;
      const double r = objective(lb, eta);
      if (r < best) {
        best = r;
        best_lb = lb;
        best_eta = eta;
      }
    }
  }

  // Coordinate descent with an extra line search along the sweep direction,
  // which follows the curved (b, eta) valley far better than axes alone.
  double lb = best_lb, eta = best_eta, res = best;
  double span_lb = 0.5, span_eta = 0.5;
  bool converged = false;
  const int max_sweeps = 400;
  int stagnant = 0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double lb0 = lb, eta0 = eta, res0 = res;
    lb = detail::golden_min([&](double x) { return objective(x, eta); },
                            lb - span_lb, lb + span_lb, 1e-12);
    eta = detail::golden_min([&](double y) { return objective(lb, y); },
                             eta - span_eta, eta + span_eta, 1e-12);
    const double dlb = lb - lb0, deta = eta - eta0;
    if (std::abs(dlb) > 0.0 || std::abs(deta) > 0.0) {
      const double step = detail::golden_min(
          [&](double s) { return objective(lb0 + s * dlb, eta0 + s * deta); },
          0.0, 3.0, 1e-12);
      lb = lb0 + step * dlb;
      eta = eta0 + step * deta;
    }
    res = objective(lb, eta);
    span_lb = std::max(4.0 * std::abs(lb - lb0), 1e-9);
    span_eta = std::max(4.0 * std::abs(eta - eta0), 1e-9);
    stagnant = (res0 - res <= 1e-12 * std::max(res, 1e-12)) ? stagnant + 1 : 0;
    if (stagnant >= 2) {
      converged = true;
      break;
    }
  }

  FitResult fit;
  objective(lb, eta, &fit.a);
  fit.b = std::pow(10.0, lb);
  fit.eta = eta;
  fit.residual = res;
  fit.fixed_a = fix_a_to_one;
  fit.converged = converged;
  fit.degenerate_decay = fit.b <= 1e-6;
  return fit;
}

} // namespace qst
