#pragma once

// Brute-force certification path: the spin Hamiltonian built literally on the
// 2^k product basis (string operators included), the transfer protocol run by
// exact spectral evolution, and the Bloch-sphere averaged fidelity of the
// resulting qubit channel. Everything here is dense and limited to small
// chains; it exists to certify the free-fermion pipeline, not to be fast.
//
// Site j maps to bit j-1 (sender = lowest bit, receiver = highest bit);
// bit value 0 is spin-up, so sigma^z_j reads 1 - 2*bit_j.

#include "qst/fidelity.hpp"
#include "qst/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace qst {

struct DenseOperator {
  int n_sites = 0;
  Eigen::MatrixXd matrix; // real symmetric (all terms of the model are real)

  long dim() const { return 1L << n_sites; }
};

/// Dense spin Hamiltonian on `sites` spins with the couplings, anisotropy and
/// field of `params` (interaction range truncated at the open boundary).
inline DenseOperator build_dense_hamiltonian(const ModelParams& params, int sites) {
  if (sites < 1) throw std::invalid_argument("dense Hamiltonian: need at least 1 site");
  if (sites > 12) throw std::invalid_argument("dense Hamiltonian: refusing more than 12 sites");
  if (params.falloff < 0.0 || params.anisotropy < 0.0 || !(params.coupling_scale > 0.0))
    throw std::invalid_argument("dense Hamiltonian: invalid model parameters");

  const long dim = 1L << sites;
  const double field_coeff = -0.5 * params.field * params.coupling_scale;
  const int range = std::min(params.coordination, sites - 1);

  DenseOperator op;
  op.n_sites = sites;
  op.matrix = Eigen::MatrixXd::Zero(dim, dim);

  std::vector<double> strength(range + 1, 0.0);
  for (int d = 1; d <= range; ++d)
    strength[d] = params.coupling_scale / std::pow(static_cast<double>(d), params.falloff);

  for (long b = 0; b < dim; ++b) {
    double diag = 0.0;
    for (int j = 0; j < sites; ++j) diag += field_coeff * (1.0 - 2.0 * ((b >> j) & 1));
    op.matrix(b, b) += diag;

    for (int j = 0; j < sites; ++j) {
      for (int d = 1; d <= range && j + d < sites; ++d) {
        // Each intermediate string site contributes its fermion parity 2n - 1.
        double string_sign = 1.0;
        for (int l = j + 1; l < j + d; ++l)
          string_sign *= 2.0 * ((b >> l) & 1) - 1.0;

        const double sz_j = 1.0 - 2.0 * ((b >> j) & 1);
        const double sz_jd = 1.0 - 2.0 * ((b >> (j + d)) & 1);
        const double xx = -strength[d] * (1.0 + params.anisotropy) / 4.0;
        const double yy = -strength[d] * (1.0 - params.anisotropy) / 4.0 * (-sz_j * sz_jd);
        const long flipped = b ^ ((1L << j) | (1L << (j + d)));
        op.matrix(flipped, b) += string_sign * (xx + yy);
      }
    }
  }
  return op;
}

struct DegenerateGroundState : std::runtime_error {
  double gap;
  explicit DegenerateGroundState(double g)
      : std::runtime_error("channel ground state is degenerate (gap " +
                           std::to_string(g) + ")"),
        gap(g) {}
};

/// Bloch-sphere affine action of the end-to-end qubit channel:
/// r_out = offset + linear * r_in.
struct BlochMap {
  Eigen::Matrix3d linear = Eigen::Matrix3d::Zero();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
};

struct Quadrature {
  enum class Kind { Cardinal, Grid };
  Kind kind = Kind::Cardinal;
  int n_theta = 50;
  int n_phi = 100;

  static Quadrature cardinal() { return {}; }
  static Quadrature grid(int n_theta, int n_phi) {
    if (n_theta < 2 || n_phi < 3)
      throw std::invalid_argument("quadrature grid: need n_theta >= 2, n_phi >= 3");
    Quadrature q;
    q.kind = Kind::Grid;
    q.n_theta = n_theta;
    q.n_phi = n_phi;
    return q;
  }
};

namespace detail {

inline Eigen::Vector3d bloch_vector(const Eigen::Matrix2cd& rho) {
  return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(),
          rho(0, 0).real() - rho(1, 1).real()};
}

// max over rotations S of tr(S M): sum of singular values with the smallest
// one signed by det M (constrained orthogonal Procrustes).
inline double best_rotation_overlap(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  const double parity = (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
                            ? -1.0
                            : 1.0;
  return s(0) + s(1) + parity * s(2);
}

inline Eigen::Matrix3d best_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d(1.0, 1.0,
                    svd.matrixU().determinant() * svd.matrixV().determinant());
  return svd.matrixV() * d.asDiagonal() * svd.matrixU().transpose();
}

// SU(2) element whose adjoint action equals the rotation r (Shepperd's
// quaternion extraction; r must be a proper rotation).
inline Eigen::Matrix2cd su2_from_rotation(const Eigen::Matrix3d& r) {
  double w, x, y, z;
  const double trace = r.trace();
  if (trace > 0.0) {
    const double s = std::sqrt(trace + 1.0) * 2.0;
    w = 0.25 * s;
    x = (r(2, 1) - r(1, 2)) / s;
    y = (r(0, 2) - r(2, 0)) / s;
    z = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    w = (r(2, 1) - r(1, 2)) / s;
    x = 0.25 * s;
    y = (r(0, 1) + r(1, 0)) / s;
    z = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    w = (r(0, 2) - r(2, 0)) / s;
    x = (r(0, 1) + r(1, 0)) / s;
    y = 0.25 * s;
    z = (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    w = (r(1, 0) - r(0, 1)) / s;
    x = (r(0, 2) + r(2, 0)) / s;
    y = (r(1, 2) + r(2, 1)) / s;
    z = 0.25 * s;
  }
  const std::complex<double> i(0.0, 1.0);
  Eigen::Matrix2cd v;
  v << w - i * z, -i * x - y, -i * x + y, w + i * z;
  return v;
}

} // namespace detail

/// Runs the transfer protocol exactly: channel spins prepared in the ground
/// state of the (N-1)-site Hamiltonian, full N-site unitary evolution by
/// spectral decomposition, reduction to the receiver site. One instance
/// caches both eigendecompositions and serves any number of times.
class ProtocolSimulator {
 public:
  explicit ProtocolSimulator(const ModelParams& params) : params_(params) {
    params.validate();
    if (params.n_sites > 12)
      throw std::invalid_argument("protocol simulator: refusing more than 12 sites");
    n_ = params.n_sites;

    const DenseOperator full = build_dense_hamiltonian(params, n_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full_solver(full.matrix);
    if (full_solver.info() != Eigen::Success)
      throw std::runtime_error("protocol simulator: full-chain eigensolve failed");
    full_energies_ = full_solver.eigenvalues();
    full_modes_ = full_solver.eigenvectors();

    const DenseOperator channel = build_dense_hamiltonian(params, n_ - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> channel_solver(channel.matrix);
    if (channel_solver.info() != Eigen::Success)
      throw std::runtime_error("protocol simulator: channel eigensolve failed");
    channel_state_ = channel_solver.eigenvectors().col(0);
    gap_ = channel_solver.eigenvalues()(1) - channel_solver.eigenvalues()(0);
    if (gap_ < 1e-8) throw DegenerateGroundState(gap_);
  }

  double channel_gap() const { return gap_; }

  /// Reduced receiver state after transporting `input` for time t.
  Eigen::Matrix2cd output_state(double t, const Eigen::Vector2cd& input) const {
    const long half = 1L << (n_ - 1);
    Eigen::VectorXcd state(2 * half);
    for (long r = 0; r < half; ++r) {
      state(r << 1) = input(0) * channel_state_(r);
      state((r << 1) | 1) = input(1) * channel_state_(r);
    }

    Eigen::VectorXd re = full_modes_.transpose() * state.real();
    Eigen::VectorXd im = full_modes_.transpose() * state.imag();
    Eigen::VectorXcd w(re.size());
    for (long k = 0; k < re.size(); ++k) {
      const std::complex<double> phase =
          std::exp(std::complex<double>(0.0, -full_energies_(k) * t));
      w(k) = phase * std::complex<double>(re(k), im(k));
    }
    const Eigen::VectorXd out_re = full_modes_ * w.real();
    const Eigen::VectorXd out_im = full_modes_ * w.imag();

    Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
    for (long r = 0; r < half; ++r) {
      const std::complex<double> low(out_re(r), out_im(r));
      const std::complex<double> high(out_re(r + half), out_im(r + half));
      rho(0, 0) += low * std::conj(low);
      rho(0, 1) += low * std::conj(high);
      rho(1, 1) += high * std::conj(high);
    }
    rho(1, 0) = std::conj(rho(0, 1));
    return rho;
  }

  /// Affine Bloch action reconstructed from the six Pauli-eigenstate inputs.
  BlochMap bloch_map(double t) const {
    const double s = 1.0 / std::sqrt(2.0);
    const std::complex<double> i(0.0, 1.0);
    const Eigen::Vector2cd plus_x(s, s), minus_x(s, -s);
    const Eigen::Vector2cd plus_y(s, i * s), minus_y(s, -i * s);
    const Eigen::Vector2cd plus_z(1.0, 0.0), minus_z(0.0, 1.0);

    const Eigen::Vector3d rpx = detail::bloch_vector(output_state(t, plus_x));
    const Eigen::Vector3d rmx = detail::bloch_vector(output_state(t, minus_x));
    const Eigen::Vector3d rpy = detail::bloch_vector(output_state(t, plus_y));
    const Eigen::Vector3d rmy = detail::bloch_vector(output_state(t, minus_y));
    const Eigen::Vector3d rpz = detail::bloch_vector(output_state(t, plus_z));
    const Eigen::Vector3d rmz = detail::bloch_vector(output_state(t, minus_z));

    BlochMap map;
    map.linear.col(0) = 0.5 * (rpx - rmx);
    map.linear.col(1) = 0.5 * (rpy - rmy);
    map.linear.col(2) = 0.5 * (rpz - rmz);
    map.offset = (rpx + rmx + rpy + rmy + rpz + rmz) / 6.0;
    return map;
  }

  /// Same map from only four inputs (+z, -z, +x, +y); with an exactly affine
  /// channel this agrees with bloch_map(), which is the linearity check.
  BlochMap bloch_map_four_state(double t) const {
    const double s = 1.0 / std::sqrt(2.0);
    const std::complex<double> i(0.0, 1.0);
    const Eigen::Vector3d rpz =
        detail::bloch_vector(output_state(t, Eigen::Vector2cd(1.0, 0.0)));
    const Eigen::Vector3d rmz =
        detail::bloch_vector(output_state(t, Eigen::Vector2cd(0.0, 1.0)));
    const Eigen::Vector3d rpx =
        detail::bloch_vector(output_state(t, Eigen::Vector2cd(s, s)));
    const Eigen::Vector3d rpy =
        detail::bloch_vector(output_state(t, Eigen::Vector2cd(s, i * s)));

    BlochMap map;
    map.offset = 0.5 * (rpz + rmz);
    map.linear.col(2) = 0.5 * (rpz - rmz);
    map.linear.col(0) = rpx - map.offset;
    map.linear.col(1) = rpy - map.offset;
    return map;
  }

  /// Bloch-sphere averaged transfer fidelity, maximized over the receiver's
  /// local unitary. Cardinal mode uses the exact six-state channel identity;
  /// grid mode integrates the sphere numerically after fixing that unitary.
  double fidelity(double t, const Quadrature& quad = Quadrature::cardinal()) const {
    const BlochMap map = bloch_map(t);
    if (quad.kind == Quadrature::Kind::Cardinal)
      return 0.5 + detail::best_rotation_overlap(map.linear) / 6.0;

    // Receiver rotation from the Procrustes optimum, then straightforward
    // quadrature: Simpson in theta, periodic trapezoid in phi.
    const Eigen::Matrix3d adjoint = detail::best_rotation(map.linear).transpose();
    const Eigen::Matrix2cd v = detail::su2_from_rotation(adjoint);

    const int intervals = (quad.n_theta % 2 == 0) ? quad.n_theta : quad.n_theta + 1;
    const double h_theta = M_PI / intervals;
    double total = 0.0;
    for (int it = 0; it <= intervals; ++it) {
      const double theta = it * h_theta;
      double simpson = (it == 0 || it == intervals) ? 1.0 : (it % 2 == 1 ? 4.0 : 2.0);
      simpson *= h_theta / 3.0;
      const double sin_theta = std::sin(theta);
      if (sin_theta == 0.0) continue;

      double phi_sum = 0.0;
      for (int ip = 0; ip < quad.n_phi; ++ip) {
        const double phi = 2.0 * M_PI * ip / quad.n_phi;
        const Eigen::Vector2cd input(
            std::cos(theta / 2.0),
            std::exp(std::complex<double>(0.0, phi)) * std::sin(theta / 2.0));
        const Eigen::Matrix2cd rho = output_state(t, input);
        const Eigen::Vector2cd rotated = v * input;
        phi_sum += (rotated.adjoint() * rho * rotated)(0, 0).real();
      }
      total += simpson * sin_theta * (phi_sum * 2.0 * M_PI / quad.n_phi);
    }
    return total / (4.0 * M_PI);
  }

 private:
  ModelParams params_;
  int n_ = 0;
  Eigen::VectorXd full_energies_;
  Eigen::MatrixXd full_modes_;
  Eigen::VectorXd channel_state_;
  double gap_ = 0.0;
};

inline double protocol_fidelity(const ModelParams& params, double t,
                                const Quadrature& quad = Quadrature::cardinal()) {
  return ProtocolSimulator(params).fidelity(t, quad);
}

} // namespace qst
