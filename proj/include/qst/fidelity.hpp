#pragma once

// Transfer amplitudes between the chain endpoints and the Bloch-sphere
// averaged fidelity f = 1/2 + |p^2 - q^2|/6 + max(p, q)/3, where p and q are
// the magnitudes of the normal and anomalous propagator elements connecting
// sender (site 1) and receiver (site N). The receiver-side local unitary is
// already absorbed in this closed form.

#include "qst/freefermion.hpp"
#include "qst/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace qst {

struct TransferAmplitudes {
  double p = 0.0; // |normal_{N,1}|
  double q = 0.0; // |anomalous_{N,1}|
};

inline TransferAmplitudes transfer_amplitudes(const Propagators& prop) {
  const int n = static_cast<int>(prop.normal.rows());
  const auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
  TransferAmplitudes amp;
  amp.p = clamp01(std::abs(prop.normal(n - 1, 0)));
  amp.q = clamp01(std::abs(prop.anomalous(n - 1, 0)));
  return amp;
}

inline double average_fidelity(double p, double q) {
  constexpr double slack = 1e-9;
  if (!(p >= -slack && p <= 1.0 + slack) || !(q >= -slack && q <= 1.0 + slack))
    throw std::invalid_argument("average_fidelity: amplitudes must lie in [0, 1]");
  p = std::clamp(p, 0.0, 1.0);
  q = std::clamp(q, 0.0, 1.0);
  return 0.5 + std::abs(p * p - q * q) / 6.0 + std::max(p, q) / 3.0;
}

/// Spectral end-to-end amplitude evaluator. One diagonalization serves any
/// number of times; each evaluation costs O(N).
class TransferEvaluator {
 public:
  explicit TransferEvaluator(const BogoliubovSolution& sol) {
    const int n = sol.size();
    energies_ = sol.energies;
    normal_fwd_.resize(n);
    normal_bwd_.resize(n);
    anomalous_fwd_.resize(n);
    anomalous_bwd_.resize(n);
    for (int q = 0; q < n; ++q) {
      const double a_send = sol.particle_coeff(q, 0);
      const double a_recv = sol.particle_coeff(q, n - 1);
      const double b_send = sol.hole_coeff(q, 0);
      const double b_recv = sol.hole_coeff(q, n - 1);
      normal_fwd_(q) = a_recv * a_send;
      normal_bwd_(q) = b_recv * b_send;
      anomalous_fwd_(q) = a_recv * b_send;
      anomalous_bwd_(q) = b_recv * a_send;
    }
  }

  explicit TransferEvaluator(const ModelParams& params)
      : TransferEvaluator(diagonalize(build_quadratic_form(params))) {}

  TransferAmplitudes amplitudes(double t) const {
    std::complex<double> normal(0.0, 0.0), anomalous(0.0, 0.0);
    const int n = static_cast<int>(energies_.size());
    for (int q = 0; q < n; ++q) {
      const double angle = energies_(q) * t;
      const std::complex<double> fwd(std::cos(angle), -std::sin(angle));
      const std::complex<double> bwd = std::conj(fwd);
      normal += normal_fwd_(q) * fwd + normal_bwd_(q) * bwd;
      anomalous += anomalous_fwd_(q) * fwd + anomalous_bwd_(q) * bwd;
    }
    TransferAmplitudes amp;
    amp.p = std::clamp(std::abs(normal), 0.0, 1.0);
    amp.q = std::clamp(std::abs(anomalous), 0.0, 1.0);
    return amp;
  }

  double fidelity(double t) const {
    const TransferAmplitudes amp = amplitudes(t);
    return average_fidelity(amp.p, amp.q);
  }

 private:
  Eigen::VectorXd energies_;
  Eigen::VectorXd normal_fwd_, normal_bwd_;
  Eigen::VectorXd anomalous_fwd_, anomalous_bwd_;
};

struct FidelityPoint {
  double time = 0.0;
  double p = 0.0;
  double q = 0.0;
  double f = 0.5;
};

struct FidelityTrace {
  ModelParams params;
  std::vector<double> times;
  std::vector<FidelityPoint> points;
};

inline FidelityTrace fidelity_trace(const ModelParams& params, double t_max,
                                    double dt) {
  params.validate();
  if (!(t_max > 0.0)) throw std::invalid_argument("fidelity_trace: t_max must be positive");
  if (!(dt > 0.0) || dt > t_max)
    throw std::invalid_argument("fidelity_trace: need 0 < dt <= t_max");

  const TransferEvaluator eval(params);
  const int count = static_cast<int>(std::floor(t_max / dt + 1e-9)) + 1;
  FidelityTrace trace;
  trace.params = params;
  trace.times.reserve(count);
  trace.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = i * dt;
    const TransferAmplitudes amp = eval.amplitudes(t);
    trace.times.push_back(t);
    trace.points.push_back({t, amp.p, amp.q, average_fidelity(amp.p, amp.q)});
  }
  return trace;
}

/// CSV columns t,p,q,f at full double precision; `provenance` goes into a
/// leading comment line when non-empty.
inline void write_trace_csv(const FidelityTrace& trace, std::ostream& out,
                            const std::string& provenance = "") {
  if (!provenance.empty()) out << "# " << provenance << '\n';
  out << "t,p,q,f\n";
  char buf[128];
  for (const FidelityPoint& pt : trace.points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", pt.time, pt.p,
                  pt.q, pt.f);
    out << buf;
  }
}

} // namespace qst
