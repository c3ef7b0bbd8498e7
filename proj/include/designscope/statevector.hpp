// Copyright 2026 The DesignScope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "designscope/error.hpp"
#include "designscope/rng.hpp"

// Dense statevector core. Qubit q is bit q of the basis index, so the ket label
// |b0 b1 ... b_{n-1}> lists qubit 0 first and has index sum_q b_q 2^q.

namespace designscope {

using Complex = std::complex<double>;
using UnitaryMatrix = Eigen::MatrixXcd;
using Gate1 = Eigen::Matrix2cd;
/// Two-qubit gate on (q1, q2); row/column index is 2*bit(q1) + bit(q2).
using Gate2 = Eigen::Matrix4cd;

inline constexpr int kMaxQubits = 20;
inline constexpr double kUnitaryTolerance = 1e-10;

/// Largest entrywise deviation of U U^dagger from the identity.
template <class Derived>
double unitarity_defect(const Eigen::MatrixBase<Derived>& u) {
  if (u.rows() != u.cols()) return INFINITY;
  const UnitaryMatrix prod = u * u.adjoint();
  return (prod - UnitaryMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

template <class Derived>
bool is_unitary(const Eigen::MatrixBase<Derived>& u, double tol = kUnitaryTolerance) {
  return unitarity_defect(u) <= tol;
}

/// One terminal computational-basis measurement of every qubit.
class ShotRecord {
 public:
  ShotRecord() = default;
  ShotRecord(std::uint64_t basis_index, int n_qubits) : index_(basis_index), n_(n_qubits) {}

  int n_qubits() const noexcept { return n_; }
  std::uint64_t basis_index() const noexcept { return index_; }
  int bit(int q) const noexcept { return static_cast<int>((index_ >> q) & 1U); }
  std::vector<int> bits() const {
    std::vector<int> out(static_cast<std::size_t>(n_));
    for (int q = 0; q < n_; ++q) out[static_cast<std::size_t>(q)] = bit(q);
    return out;
  }

  static ShotRecord from_bits(std::span<const int> bits) {
    std::uint64_t idx = 0;
    for (std::size_t q = 0; q < bits.size(); ++q) {
      if (bits[q] != 0 && bits[q] != 1) throw ArgumentError("shot bits must be 0 or 1");
      idx |= static_cast<std::uint64_t>(bits[q]) << q;
    }
    return ShotRecord(idx, static_cast<int>(bits.size()));
  }

  friend bool operator==(const ShotRecord&, const ShotRecord&) = default;

 private:
  std::uint64_t index_ = 0;
  int n_ = 0;
};

/// Pure state of n qubits as 2^n double-precision amplitudes.
class StateVector {
 public:
  /// |0...0> on n qubits, 1 <= n <= 20.
  static StateVector zero(int n_qubits) {
    check_size(n_qubits);
    StateVector s;
    s.n_ = n_qubits;
    s.amps_ = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_qubits);
    s.amps_(0) = 1.0;
    return s;
  }

  static StateVector basis(int n_qubits, std::uint64_t index) {
    StateVector s = zero(n_qubits);
    if (index >= static_cast<std::uint64_t>(s.dim())) throw IndexError("basis index out of range");
    s.amps_(0) = 0.0;
    s.amps_(static_cast<Eigen::Index>(index)) = 1.0;
    return s;
  }

  /// Takes ownership of `amps`; its length must be a power of two and its
  /// norm 1 within 1e-10.
  static StateVector from_amplitudes(Eigen::VectorXcd amps) {
    const auto len = static_cast<std::uint64_t>(amps.size());
    if (len < 2 || !std::has_single_bit(len)) throw SizeError("amplitude count must be 2^n, n >= 1");
    const int n = std::countr_zero(len);
    check_size(n);
    if (std::abs(amps.squaredNorm() - 1.0) > kUnitaryTolerance) throw ValidityError("state is not normalized");
    StateVector s;
    s.n_ = n;
    s.amps_ = std::move(amps);
    return s;
  }

  int n_qubits() const noexcept { return n_; }
  Eigen::Index dim() const noexcept { return amps_.size(); }
  const Eigen::VectorXcd& amplitudes() const noexcept { return amps_; }
  Eigen::VectorXcd& mutable_amplitudes() noexcept { return amps_; }
  Complex operator[](Eigen::Index i) const { return amps_(i); }
  double norm_squared() const { return amps_.squaredNorm(); }

  std::vector<double> probabilities() const {
    std::vector<double> p(static_cast<std::size_t>(dim()));
    for (Eigen::Index i = 0; i < dim(); ++i) p[static_cast<std::size_t>(i)] = std::norm(amps_(i));
    return p;
  }

  void check_qubit(int q) const {
    if (q < 0 || q >= n_) throw IndexError("qubit " + std::to_string(q) + " out of range");
  }

  static void check_size(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
      throw SizeError("qubit count " + std::to_string(n_qubits) + " outside [1, 20]");
  }

 private:
  int n_ = 0;
  Eigen::VectorXcd amps_;
};

inline StateVector new_zero_state(int n_qubits) { return StateVector::zero(n_qubits); }

namespace kernels {

// Unchecked kernels for inner loops. Callers guarantee valid qubits.

inline void apply_1q(Eigen::VectorXcd& a, const Gate1& g, int target) {
  const Eigen::Index stride = Eigen::Index{1} << target;
  const Eigen::Index dim = a.size();
  const Complex g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
  for (Eigen::Index base = 0; base < dim; base += 2 * stride) {
    for (Eigen::Index i = base; i < base + stride; ++i) {
      const Complex a0 = a(i), a1 = a(i + stride);
      a(i) = g00 * a0 + g01 * a1;
      a(i + stride) = g10 * a0 + g11 * a1;
    }
  }
}

inline void apply_2q(Eigen::VectorXcd& a, const Gate2& g, int q1, int q2) {
  const Eigen::Index m1 = Eigen::Index{1} << q1;
  const Eigen::Index m2 = Eigen::Index{1} << q2;
  const Eigen::Index dim = a.size();
  for (Eigen::Index i = 0; i < dim; ++i) {
    if ((i & m1) || (i & m2)) continue;
    const Eigen::Index idx[4] = {i, i | m2, i | m1, i | m1 | m2};
    const Complex v[4] = {a(idx[0]), a(idx[1]), a(idx[2]), a(idx[3])};
    for (int r = 0; r < 4; ++r) a(idx[r]) = g(r, 0) * v[0] + g(r, 1) * v[1] + g(r, 2) * v[2] + g(r, 3) * v[3];
  }
}

/// Multiplies each amplitude by phase[2*bit(q1) + bit(q2)].
inline void apply_diag_2q(Eigen::VectorXcd& a, const std::array<Complex, 4>& phase, int q1, int q2) {
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) *= phase[static_cast<std::size_t>(2 * ((i >> q1) & 1) + ((i >> q2) & 1))];
}

inline void apply_x(Eigen::VectorXcd& a, int q) {
  const Eigen::Index m = Eigen::Index{1} << q;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!(i & m)) std::swap(a(i), a(i | m));
}

inline void apply_y(Eigen::VectorXcd& a, int q) {
  const Eigen::Index m = Eigen::Index{1} << q;
  const Complex I(0.0, 1.0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (i & m) continue;
    const Complex a0 = a(i), a1 = a(i | m);
    a(i) = -I * a1;
    a(i | m) = I * a0;
  }
}

inline void apply_z(Eigen::VectorXcd& a, int q) {
  const Eigen::Index m = Eigen::Index{1} << q;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (i & m) a(i) = -a(i);
}

/// Pauli by index: 0 = I, 1 = X, 2 = Y, 3 = Z.
inline void apply_pauli(Eigen::VectorXcd& a, int pauli, int q) {
  switch (pauli) {
    case 1: apply_x(a, q); break;
    case 2: apply_y(a, q); break;
    case 3: apply_z(a, q); break;
    default: break;
  }
}

}  // namespace kernels

/// Applies `gate` to `target` in place.
inline void apply_single_qubit_gate(StateVector& state, const Gate1& gate, int target) {
  state.check_qubit(target);
  if (!is_unitary(gate)) throw ValidityError("single-qubit gate is not unitary");
  kernels::apply_1q(state.mutable_amplitudes(), gate, target);
}

/// Applies `gate` to (q1, q2) in place; q1 is the high bit of the gate index.
inline void apply_two_qubit_gate(StateVector& state, const Gate2& gate, int q1, int q2) {
  state.check_qubit(q1);
  state.check_qubit(q2);
  if (q1 == q2) throw IndexError("two-qubit gate needs distinct qubits");
  if (!is_unitary(gate)) throw ValidityError("two-qubit gate is not unitary");
  kernels::apply_2q(state.mutable_amplitudes(), gate, q1, q2);
}

inline void apply_dense_unitary(StateVector& state, const UnitaryMatrix& u) {
  if (u.rows() != state.dim() || u.cols() != state.dim())
    throw SizeError("unitary dimension " + std::to_string(u.rows()) + " does not match state dimension " +
                    std::to_string(state.dim()));
  Eigen::VectorXcd out = u * state.amplitudes();
  state.mutable_amplitudes() = std::move(out);
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix, with each column
/// of Q rescaled by the phase of the matching diagonal entry of R.
inline UnitaryMatrix sample_haar_unitary(int dim, RngStream& rng) {
  if (dim < 2) throw SizeError("Haar unitary needs dim >= 2");
  UnitaryMatrix z(dim, dim);
  constexpr double scale = 0.70710678118654752440;
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) {
      const double re = rng.normal();
      const double im = rng.normal();
      z(r, c) = Complex(re * scale, im * scale);
    }
  Eigen::HouseholderQR<UnitaryMatrix> qr(z);
  UnitaryMatrix q = qr.householderQ();
  const UnitaryMatrix& packed = qr.matrixQR();
  for (int k = 0; k < dim; ++k) {
    const Complex rkk = packed(k, k);
    const double mag = std::abs(rkk);
    if (mag > 0.0) q.col(k) *= rkk / mag;
  }
  return q;
}

/// Inverse-CDF sampler over a fixed probability vector.
class OutcomeSampler {
 public:
  explicit OutcomeSampler(std::span<const double> probs) : cdf_(probs.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      cdf_[i] = acc;
    }
    total_ = acc;
    for (std::size_t i = probs.size(); i-- > 0;)
      if (probs[i] > 0.0) {
        last_supported_ = i;
        break;
      }
  }

  std::uint64_t draw(RngStream& rng) const {
    const double u = rng.uniform() * total_;
    // upper_bound never lands on a zero-probability outcome.
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) return last_supported_;
    return static_cast<std::uint64_t>(it - cdf_.begin());
  }

  std::size_t size() const noexcept { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
  double total_ = 0.0;
  std::uint64_t last_supported_ = 0;
};

/// Histogram of n_shots draws over the basis states of `probs`.
inline std::vector<std::uint32_t> sample_counts(std::span<const double> probs, int n_shots, RngStream& rng) {
  if (n_shots < 1) throw ArgumentError("n_shots must be >= 1");
  OutcomeSampler sampler(probs);
  std::vector<std::uint32_t> counts(probs.size(), 0);
  for (int s = 0; s < n_shots; ++s) ++counts[sampler.draw(rng)];
  return counts;
}

/// Terminal measurement of all qubits, n_shots times; the state is unchanged.
inline std::vector<ShotRecord> sample_measurements(const StateVector& state, int n_shots, RngStream& rng) {
  if (n_shots < 1) throw ArgumentError("n_shots must be >= 1");
  const std::vector<double> probs = state.probabilities();
  OutcomeSampler sampler(probs);
  std::vector<ShotRecord> shots;
  shots.reserve(static_cast<std::size_t>(n_shots));
  for (int s = 0; s < n_shots; ++s) shots.emplace_back(sampler.draw(rng), state.n_qubits());
  return shots;
}

/// Bitmask of a strictly increasing, non-empty qubit list.
inline std::uint64_t subset_mask(std::span<const int> subset, int n_qubits) {
  if (subset.empty()) throw ArgumentError("qubit subset must be non-empty");
  std::uint64_t mask = 0;
  int prev = -1;
  for (int q : subset) {
    if (q <= prev) throw ArgumentError("qubit subset must be strictly increasing");
    if (q >= n_qubits) throw IndexError("qubit " + std::to_string(q) + " out of range");
    mask |= std::uint64_t{1} << q;
    prev = q;
  }
  return mask;
}

/// Sign of the Z-string on subset `mask` for basis state `x` under the
/// convention Z|0> = -|0>, Z|1> = +|1>: the product of (-1)^(1 - x_h).
constexpr double z_string_sign(std::uint64_t x, std::uint64_t mask) noexcept {
  const int zeros = std::popcount(mask) - std::popcount(x & mask);
  return (zeros & 1) ? -1.0 : 1.0;
}

/// <psi| Z_{h1} ... Z_{hk} |psi> with Z|0> = -|0>.
inline double z_string_expectation(const StateVector& state, std::span<const int> subset) {
  const std::uint64_t mask = subset_mask(subset, state.n_qubits());
  double acc = 0.0;
  const auto& a = state.amplitudes();
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += z_string_sign(static_cast<std::uint64_t>(i), mask) * std::norm(a(i));
  return acc;
}

/// Projective Z measurement of one qubit; collapses `state` and returns the bit.
inline int measure_and_collapse(StateVector& state, int target, RngStream& rng) {
  state.check_qubit(target);
  auto& a = state.mutable_amplitudes();
  const Eigen::Index m = Eigen::Index{1} << target;
  double p1 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (i & m) p1 += std::norm(a(i));
  const double total = a.squaredNorm();
  p1 /= total;
  // Only supported branches are sampled.
  int outcome;
  if (p1 <= 0.0) outcome = 0;
  else if (p1 >= 1.0) outcome = 1;
  else outcome = rng.uniform() < p1 ? 1 : 0;
  const double keep = outcome ? p1 : 1.0 - p1;
  const double scale = 1.0 / std::sqrt(keep * total);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (((i & m) != 0) == (outcome == 1)) a(i) *= scale;
    else a(i) = 0.0;
  }
  return outcome;
}

/// One trajectory of the depolarizing channel (1-p) rho + p I/2: the identity
/// with probability 1 - 3p/4, otherwise X, Y or Z with probability p/4 each.
/// Returns the Pauli applied (0 = I, 1 = X, 2 = Y, 3 = Z).
inline int apply_depolarizing_trajectory(StateVector& state, int target, double p, RngStream& rng) {
  state.check_qubit(target);
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("depolarizing probability must lie in [0, 1]");
  if (p == 0.0) return 0;
  const double u = rng.uniform();
  const double quarter = p / 4.0;
  int pauli = 0;
  if (u < 3.0 * quarter) pauli = 1 + std::min(2, static_cast<int>(u / quarter));
  kernels::apply_pauli(state.mutable_amplitudes(), pauli, target);
  return pauli;
}

namespace gates {

inline Gate1 identity() { return Gate1::Identity(); }
inline Gate1 x() { Gate1 g; g << 0, 1, 1, 0; return g; }
inline Gate1 y() { Gate1 g; g << 0, Complex(0, -1), Complex(0, 1), 0; return g; }
inline Gate1 z() { Gate1 g; g << 1, 0, 0, -1; return g; }
inline Gate1 h() {
  const double s = 0.70710678118654752440;
  Gate1 g;
  g << s, s, s, -s;
  return g;
}
inline Gate1 s() { Gate1 g; g << 1, 0, 0, Complex(0, 1); return g; }

/// Control q1, target q2.
inline Gate2 cnot() {
  Gate2 g = Gate2::Zero();
  g(0, 0) = g(1, 1) = 1;
  g(2, 3) = g(3, 2) = 1;
  return g;
}
inline Gate2 cz() {
  Gate2 g = Gate2::Identity();
  g(3, 3) = -1;
  return g;
}
inline Gate2 swap() {
  Gate2 g = Gate2::Zero();
  g(0, 0) = g(3, 3) = 1;
  g(1, 2) = g(2, 1) = 1;
  return g;
}

}  // namespace gates

}  // namespace designscope
