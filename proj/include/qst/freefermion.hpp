#pragma once

// Bogoliubov diagonalization of the quadratic form and Heisenberg-picture
// propagators.
//
// Quasiparticles eta_q = sum_m (A_qm f_m + B_qm f_m^+) bring the form to
// sum_q e_q eta_q^+ eta_q. Writing phi = A + B and psi = A - B, the
// eigenproblem reduces to the singular value decomposition of C = P + Q:
// C = U S V^T with phi = V^T, psi = U^T and e_q the singular values. This
// keeps A, B exactly real orthogonal-canonical and the energies non-negative
// regardless of degeneracies or zero modes.

#include "qst/model.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <complex>
#include <numeric>
#include <stdexcept>

namespace qst {

/// Result of the canonical diagonalization. Rows of `particle_coeff` (A) and
/// `hole_coeff` (B) give the quasiparticle content; energies sorted ascending.
struct BogoliubovSolution {
  Eigen::MatrixXd particle_coeff; // A
  Eigen::MatrixXd hole_coeff;     // B
  Eigen::VectorXd energies;       // e_q >= 0, ascending

  int size() const { return static_cast<int>(energies.size()); }
};

inline BogoliubovSolution diagonalize(const QuadraticForm& form) {
  const int n = form.size();
  const Eigen::MatrixXd combined = form.hopping + form.pairing;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(combined,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("Bogoliubov diagonalization: SVD did not converge");

  // Singular values come out descending; flip to ascending energies.
  BogoliubovSolution sol;
  sol.energies.resize(n);
  sol.particle_coeff.resize(n, n);
  sol.hole_coeff.resize(n, n);
  const Eigen::MatrixXd& left = svd.matrixU();
  const Eigen::MatrixXd& right = svd.matrixV();
  for (int q = 0; q < n; ++q) {
    const int src = n - 1 - q;
    double energy = svd.singularValues()(src);
    if (energy < 1e-12) energy = 0.0; // clamp round-off zero modes
    sol.energies(q) = energy;
    // phi_q = column `src` of V as a row, psi_q likewise from U.
    sol.particle_coeff.row(q) = 0.5 * (right.col(src) + left.col(src)).transpose();
    sol.hole_coeff.row(q) = 0.5 * (right.col(src) - left.col(src)).transpose();
  }
  return sol;
}

/// Normal-ordering energy of the quadratic part: the Fock vacuum expectation
/// offset (tr P - sum_q e_q) / 2.
inline double vacuum_energy(const QuadraticForm& form, const BogoliubovSolution& sol) {
  return 0.5 * (form.hopping.trace() - sol.energies.sum());
}

/// Heisenberg propagator blocks at one time: evolved annihilation operators
/// are f_m(t) = sum_k [normal_mk f_k + anomalous_mk f_k^+].
struct Propagators {
  double time = 0.0;
  Eigen::MatrixXcd normal;    // particle-conserving block
  Eigen::MatrixXcd anomalous; // pair-creating block
};

namespace detail {

// Spectral evaluation, no sign restriction on t (negative times are exercised
// by time-reversal tests only).
inline Propagators propagators_at(const BogoliubovSolution& sol, double t) {
  const int n = sol.size();
  Eigen::VectorXcd forward(n), backward(n);
  for (int q = 0; q < n; ++q) {
    const std::complex<double> phase =
        std::exp(std::complex<double>(0.0, -sol.energies(q) * t));
    forward(q) = phase;
    backward(q) = std::conj(phase);
  }
  const Eigen::MatrixXcd a = sol.particle_coeff.cast<std::complex<double>>();
  const Eigen::MatrixXcd b = sol.hole_coeff.cast<std::complex<double>>();
  Propagators prop;
  prop.time = t;
  prop.normal = a.adjoint() * forward.asDiagonal() * a +
                b.adjoint() * backward.asDiagonal() * b;
  prop.anomalous = a.adjoint() * forward.asDiagonal() * b +
                   b.adjoint() * backward.asDiagonal() * a;
  return prop;
}

} // namespace detail

inline Propagators propagators(const BogoliubovSolution& sol, double t) {
  if (t < 0.0)
    throw std::invalid_argument("propagators: time must be non-negative");
  return detail::propagators_at(sol, t);
}

} // namespace qst
