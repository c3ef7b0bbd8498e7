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

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "designscope/error.hpp"
#include "designscope/rng.hpp"
#include "designscope/statevector.hpp"

namespace designscope {

inline constexpr int kMaxCliffordQubits = 12;

/// Pauli string i^phase * prod_q X_q^{x_q} Z_q^{z_q}; `phase` is mod 4.
struct PauliString {
  std::uint32_t x = 0;
  std::uint32_t z = 0;
  int phase = 0;

  /// Hermitian Pauli (Y = iXZ on every qubit with both bits set) times (-1)^sign.
  static PauliString hermitian(std::uint32_t x, std::uint32_t z, bool sign) {
    return {x, z, (2 * static_cast<int>(sign) + std::popcount(x & z)) & 3};
  }

  /// Sign bit of the Hermitian form; only meaningful when the string is Hermitian.
  bool hermitian_sign() const { return ((phase - std::popcount(x & z)) & 3) == 2; }

  friend PauliString operator*(const PauliString& a, const PauliString& b) {
    // X^{x1} Z^{z1} X^{x2} Z^{z2} = (-1)^{|z1 & x2|} X^{x1^x2} Z^{z1^z2}
    return {a.x ^ b.x, a.z ^ b.z, (a.phase + b.phase + 2 * std::popcount(a.z & b.x)) & 3};
  }

  friend bool operator==(const PauliString&, const PauliString&) = default;
};

/// Symplectic inner product of two Pauli strings (1 iff they anticommute).
constexpr int symplectic_product(std::uint32_t x1, std::uint32_t z1, std::uint32_t x2, std::uint32_t z2) noexcept {
  return std::popcount((x1 & z2) ^ (z1 & x2)) & 1;
}

/// Clifford group element modulo global phase, stored as the images
/// U P U^dagger of the generators. Row i < n is the image of X_i, row n + i the
/// image of Z_i; each row is a Hermitian Pauli with a sign bit.
class CliffordTableau {
 public:
  struct Row {
    std::uint32_t x = 0;
    std::uint32_t z = 0;
    bool sign = false;
    friend bool operator==(const Row&, const Row&) = default;
  };

  static CliffordTableau identity(int n_qubits) {
    check_size(n_qubits);
    CliffordTableau t;
    t.n_ = n_qubits;
    t.rows_.resize(static_cast<std::size_t>(2 * n_qubits));
    for (int q = 0; q < n_qubits; ++q) {
      t.rows_[static_cast<std::size_t>(q)].x = 1U << q;
      t.rows_[static_cast<std::size_t>(n_qubits + q)].z = 1U << q;
    }
    return t;
  }

  static CliffordTableau from_rows(int n_qubits, std::vector<Row> rows) {
    check_size(n_qubits);
    if (rows.size() != static_cast<std::size_t>(2 * n_qubits)) throw SizeError("tableau needs 2n rows");
    CliffordTableau t;
    t.n_ = n_qubits;
    t.rows_ = std::move(rows);
    return t;
  }

  int n_qubits() const noexcept { return n_; }
  const Row& x_image(int q) const { return rows_[static_cast<std::size_t>(q)]; }
  const Row& z_image(int q) const { return rows_[static_cast<std::size_t>(n_ + q)]; }
  const std::vector<Row>& rows() const noexcept { return rows_; }

  /// Entry (r, c) of the 2n x 2n binary symplectic matrix; columns [0, n) are
  /// X bits and [n, 2n) are Z bits.
  int symplectic_bit(int r, int c) const {
    const Row& row = rows_[static_cast<std::size_t>(r)];
    return c < n_ ? static_cast<int>((row.x >> c) & 1U) : static_cast<int>((row.z >> (c - n_)) & 1U);
  }

  /// M Omega M^T == Omega over GF(2).
  bool is_symplectic() const {
    const std::uint32_t full = n_ >= 32 ? ~0U : ((1U << n_) - 1U);
    for (int a = 0; a < 2 * n_; ++a) {
      const Row& ra = rows_[static_cast<std::size_t>(a)];
      if ((ra.x & ~full) || (ra.z & ~full)) return false;
      for (int b = a + 1; b < 2 * n_; ++b) {
        const Row& rb = rows_[static_cast<std::size_t>(b)];
        const int expected = (b == a + n_) ? 1 : 0;
        if (symplectic_product(ra.x, ra.z, rb.x, rb.z) != expected) return false;
      }
    }
    return true;
  }

  /// U P U^dagger for an arbitrary Pauli string P.
  PauliString conjugate(const PauliString& p) const {
    PauliString out{0, 0, p.phase};
    for (int q = 0; q < n_; ++q) {
      if ((p.x >> q) & 1U) {
        const Row& r = x_image(q);
        out = out * PauliString::hermitian(r.x, r.z, r.sign);
      }
      if ((p.z >> q) & 1U) {
        const Row& r = z_image(q);
        out = out * PauliString::hermitian(r.x, r.z, r.sign);
      }
    }
    return out;
  }

  /// Tableau of the product (this o first): `first` acts on the state, then `this`.
  CliffordTableau compose_after(const CliffordTableau& first) const {
    if (first.n_ != n_) throw SizeError("tableau sizes differ");
    CliffordTableau out = *this;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Row& f = first.rows_[r];
      const PauliString img = conjugate(PauliString::hermitian(f.x, f.z, f.sign));
      out.rows_[r] = Row{img.x, img.z, img.hermitian_sign()};
    }
    return out;
  }

  // Left-multiplication by an elementary gate: every image P becomes G P G^dagger.

  void apply_h(int q) {
    for (Row& r : rows_) {
      const std::uint32_t xb = (r.x >> q) & 1U, zb = (r.z >> q) & 1U;
      r.sign ^= static_cast<bool>(xb & zb);
      r.x = (r.x & ~(1U << q)) | (zb << q);
      r.z = (r.z & ~(1U << q)) | (xb << q);
    }
  }

  void apply_s(int q) {
    for (Row& r : rows_) {
      const std::uint32_t xb = (r.x >> q) & 1U, zb = (r.z >> q) & 1U;
      r.sign ^= static_cast<bool>(xb & zb);
      r.z ^= xb << q;
    }
  }

  void apply_cnot(int control, int target) {
    for (Row& r : rows_) {
      const std::uint32_t xc = (r.x >> control) & 1U, zc = (r.z >> control) & 1U;
      const std::uint32_t xt = (r.x >> target) & 1U, zt = (r.z >> target) & 1U;
      r.sign ^= static_cast<bool>(xc & zt & (xt ^ zc ^ 1U));
      r.x ^= xc << target;
      r.z ^= zt << control;
    }
  }

  void apply_cz(int a, int b) {
    for (Row& r : rows_) {
      const std::uint32_t xa = (r.x >> a) & 1U, za = (r.z >> a) & 1U;
      const std::uint32_t xb = (r.x >> b) & 1U, zb = (r.z >> b) & 1U;
      r.sign ^= static_cast<bool>(xa & xb & (za ^ zb));
      r.z ^= (xb << a) | (xa << b);
    }
  }

  void apply_x(int q) {
    for (Row& r : rows_) r.sign ^= static_cast<bool>((r.z >> q) & 1U);
  }

  void apply_z(int q) {
    for (Row& r : rows_) r.sign ^= static_cast<bool>((r.x >> q) & 1U);
  }

  friend bool operator==(const CliffordTableau&, const CliffordTableau&) = default;

  static void check_size(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxCliffordQubits)
      throw SizeError("Clifford qubit count " + std::to_string(n_qubits) + " outside [1, 12]");
  }

 private:
  int n_ = 0;
  std::vector<Row> rows_;
};

enum class CliffordGateKind { H, S, CZ, CNOT, X, Z };

struct CliffordGate {
  CliffordGateKind kind;
  int q0 = 0;
  int q1 = -1;  // second qubit (target for CNOT); unused for 1-qubit gates
  friend bool operator==(const CliffordGate&, const CliffordGate&) = default;
};

using CliffordCircuit = std::vector<CliffordGate>;

namespace detail {

// Vectors of F_2^{2n}: bits [0, n) are X, bits [n, 2n) are Z.
struct SymplecticSpace {
  int n;
  std::uint64_t low_mask() const { return (std::uint64_t{1} << n) - 1; }
  int product(std::uint64_t u, std::uint64_t v) const {
    return symplectic_product(static_cast<std::uint32_t>(u & low_mask()), static_cast<std::uint32_t>(u >> n),
                              static_cast<std::uint32_t>(v & low_mask()), static_cast<std::uint32_t>(v >> n));
  }
};

/// Reduces `vecs` to a linearly independent subset spanning the same space.
inline std::vector<std::uint64_t> independent_basis(std::vector<std::uint64_t> vecs) {
  std::vector<std::uint64_t> basis;  // echelon form keyed by leading bit
  std::vector<std::uint64_t> kept;
  for (std::uint64_t v : vecs) {
    std::uint64_t r = v;
    for (std::uint64_t b : basis)
      if (r & (std::uint64_t{1} << (63 - std::countl_zero(b)))) r ^= b;
    if (r != 0) {
      basis.push_back(r);
      std::sort(basis.begin(), basis.end(), std::greater<>());
      kept.push_back(v);
    }
  }
  return kept;
}

inline std::uint64_t random_combination(const std::vector<std::uint64_t>& basis, RngStream& rng) {
  std::uint64_t v = 0;
  const std::uint64_t bits = basis.size() >= 64 ? ~0ULL : (rng.next_u64() & ((std::uint64_t{1} << basis.size()) - 1));
  for (std::size_t i = 0; i < basis.size(); ++i)
    if ((bits >> i) & 1U) v ^= basis[i];
  return v;
}

}  // namespace detail

/// Uniformly random Clifford (modulo global phase).
///
/// The generator images are chosen pair by pair: the image v of X_i is uniform
/// over nonzero vectors of the symplectic complement of the pairs fixed so far,
/// and the image w of Z_i is uniform over that complement subject to
/// <v, w> = 1. Sign bits are uniform, which selects the Pauli coset.
inline CliffordTableau sample_uniform_clifford(int n_qubits, RngStream& rng) {
  CliffordTableau::check_size(n_qubits);
  const detail::SymplecticSpace space{n_qubits};
  std::vector<std::uint64_t> basis;
  for (int k = 0; k < 2 * n_qubits; ++k) basis.push_back(std::uint64_t{1} << k);

  std::vector<CliffordTableau::Row> rows(static_cast<std::size_t>(2 * n_qubits));
  for (int i = 0; i < n_qubits; ++i) {
    std::uint64_t v = 0;
    while (v == 0) v = detail::random_combination(basis, rng);
    std::uint64_t w = detail::random_combination(basis, rng);
    if (space.product(v, w) == 0) {
      // w -> w + u is a bijection between the <v,w> = 0 and <v,w> = 1 halves.
      for (std::uint64_t u : basis)
        if (space.product(v, u) == 1) {
          w ^= u;
          break;
        }
    }
    const auto split = [&](std::uint64_t vec, bool sign) {
      return CliffordTableau::Row{static_cast<std::uint32_t>(vec & space.low_mask()),
                                  static_cast<std::uint32_t>(vec >> n_qubits), sign};
    };
    rows[static_cast<std::size_t>(i)] = split(v, rng.next_u64() & 1U);
    rows[static_cast<std::size_t>(n_qubits + i)] = split(w, rng.next_u64() & 1U);

    // Project the remaining basis onto the complement of span(v, w).
    std::vector<std::uint64_t> projected;
    projected.reserve(basis.size());
    for (std::uint64_t x : basis) {
      std::uint64_t y = x;
      if (space.product(x, w)) y ^= v;
      if (space.product(x, v)) y ^= w;
      projected.push_back(y);
    }
    basis = detail::independent_basis(std::move(projected));
  }
  return CliffordTableau::from_rows(n_qubits, std::move(rows));
}

/// Gate sequence (in execution order) whose unitary has the tableau `tab`,
/// up to global phase. Uses H, S, CNOT, X and Z only; O(n^2) gates.
inline CliffordCircuit tableau_to_circuit(const CliffordTableau& tab) {
  if (!tab.is_symplectic()) throw ValidityError("tableau is not symplectic");
  const int n = tab.n_qubits();
  CliffordTableau work = tab;
  // Gates G_1..G_m with G_m ... G_1 U = identity.
  CliffordCircuit reducer;
  const auto push = [&](CliffordGateKind k, int a, int b = -1) {
    switch (k) {
      case CliffordGateKind::H: work.apply_h(a); break;
      case CliffordGateKind::S: work.apply_s(a); break;
      case CliffordGateKind::CNOT: work.apply_cnot(a, b); break;
      case CliffordGateKind::CZ: work.apply_cz(a, b); break;
      case CliffordGateKind::X: work.apply_x(a); break;
      case CliffordGateKind::Z: work.apply_z(a); break;
    }
    reducer.push_back({k, a, b});
  };
  const auto bit = [](std::uint32_t m, int q) { return (m >> q) & 1U; };

  for (int i = 0; i < n; ++i) {
    // Map the image of X_i to +-X_i.
    {
      const auto row = work.x_image(i);
      for (int j = i; j < n; ++j) {
        const bool xb = bit(row.x, j), zb = bit(row.z, j);
        if (zb && !xb) push(CliffordGateKind::H, j);
        else if (zb && xb) push(CliffordGateKind::S, j);
      }
      const auto r2 = work.x_image(i);
      if (!bit(r2.x, i)) {
        int k = i + 1;
        while (k < n && !bit(r2.x, k)) ++k;
        if (k == n) throw ValidityError("tableau row has no X support");
        push(CliffordGateKind::CNOT, k, i);
      }
      const auto r3 = work.x_image(i);
      for (int j = i + 1; j < n; ++j)
        if (bit(r3.x, j)) push(CliffordGateKind::CNOT, i, j);
    }
    // Map the image of Z_i to +-Z_i while fixing X_i.
    {
      const auto row = work.z_image(i);
      if (bit(row.x, i)) {
        // Y_i -> Z_i with X_i fixed.
        push(CliffordGateKind::H, i);
        push(CliffordGateKind::S, i);
        push(CliffordGateKind::H, i);
      }
      const auto r2 = work.z_image(i);
      for (int j = i + 1; j < n; ++j) {
        const bool xb = bit(r2.x, j), zb = bit(r2.z, j);
        if (xb && !zb) push(CliffordGateKind::H, j);
        else if (xb && zb) {
          push(CliffordGateKind::S, j);
          push(CliffordGateKind::H, j);
        }
      }
      const auto r3 = work.z_image(i);
      for (int j = i + 1; j < n; ++j)
        if (bit(r3.z, j)) push(CliffordGateKind::CNOT, j, i);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (work.x_image(i).sign) push(CliffordGateKind::Z, i);
    if (work.z_image(i).sign) push(CliffordGateKind::X, i);
  }
  if (!(work == CliffordTableau::identity(n))) throw ValidityError("tableau reduction did not reach identity");

  // U = G_1^dagger ... G_m^dagger, so G_m^dagger acts first.
  CliffordCircuit circuit;
  circuit.reserve(reducer.size() + reducer.size() / 2);
  for (auto it = reducer.rbegin(); it != reducer.rend(); ++it) {
    if (it->kind == CliffordGateKind::S) {
      circuit.insert(circuit.end(), 3, *it);
    } else {
      circuit.push_back(*it);
    }
  }
  return circuit;
}

/// Executes an elementary Clifford gate on the amplitudes (no checks).
inline void apply_clifford_gate(Eigen::VectorXcd& a, const CliffordGate& g) {
  const double s = 0.70710678118654752440;
  switch (g.kind) {
    case CliffordGateKind::H: {
      const Eigen::Index m = Eigen::Index{1} << g.q0;
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (i & m) continue;
        const Complex a0 = a(i), a1 = a(i | m);
        a(i) = s * (a0 + a1);
        a(i | m) = s * (a0 - a1);
      }
      break;
    }
    case CliffordGateKind::S: {
      const Eigen::Index m = Eigen::Index{1} << g.q0;
      for (Eigen::Index i = 0; i < a.size(); ++i)
        if (i & m) a(i) *= Complex(0.0, 1.0);
      break;
    }
    case CliffordGateKind::CNOT: {
      const Eigen::Index c = Eigen::Index{1} << g.q0, t = Eigen::Index{1} << g.q1;
      for (Eigen::Index i = 0; i < a.size(); ++i)
        if ((i & c) && !(i & t)) std::swap(a(i), a(i | t));
      break;
    }
    case CliffordGateKind::CZ: {
      const Eigen::Index m = (Eigen::Index{1} << g.q0) | (Eigen::Index{1} << g.q1);
      for (Eigen::Index i = 0; i < a.size(); ++i)
        if ((i & m) == m) a(i) = -a(i);
      break;
    }
    case CliffordGateKind::X: kernels::apply_x(a, g.q0); break;
    case CliffordGateKind::Z: kernels::apply_z(a, g.q0); break;
  }
}

inline void run_clifford_circuit(StateVector& state, const CliffordCircuit& circuit) {
  for (const CliffordGate& g : circuit) {
    state.check_qubit(g.q0);
    if (g.kind == CliffordGateKind::CNOT || g.kind == CliffordGateKind::CZ) {
      state.check_qubit(g.q1);
      if (g.q0 == g.q1) throw IndexError("two-qubit Clifford gate needs distinct qubits");
    }
  }
  for (const CliffordGate& g : circuit) apply_clifford_gate(state.mutable_amplitudes(), g);
}

inline void apply_clifford(StateVector& state, const CliffordTableau& tab) {
  if (state.n_qubits() != tab.n_qubits()) throw SizeError("tableau and state qubit counts differ");
  run_clifford_circuit(state, tableau_to_circuit(tab));
}

/// Computational-basis outcome distribution of U|0...0> read straight from
/// the tableau: uniform 2^-r on the affine subspace fixed by the Z-type
/// stabilizers, where r is the rank of the stabilizers' X part.
inline std::vector<double> stabilizer_outcome_distribution(const CliffordTableau& tab) {
  const int n = tab.n_qubits();
  std::vector<PauliString> gens;
  for (int q = 0; q < n; ++q) {
    const auto& r = tab.z_image(q);
    gens.push_back(PauliString::hermitian(r.x, r.z, r.sign));
  }
  int rank = 0;
  for (int col = 0; col < n && rank < n; ++col) {
    int pivot = -1;
    for (int r = rank; r < n; ++r)
      if ((gens[static_cast<std::size_t>(r)].x >> col) & 1U) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    std::swap(gens[static_cast<std::size_t>(rank)], gens[static_cast<std::size_t>(pivot)]);
    for (int r = 0; r < n; ++r)
      if (r != rank && ((gens[static_cast<std::size_t>(r)].x >> col) & 1U))
        gens[static_cast<std::size_t>(r)] = gens[static_cast<std::size_t>(r)] * gens[static_cast<std::size_t>(rank)];
    ++rank;
  }
  const std::size_t dim = std::size_t{1} << n;
  std::vector<double> probs(dim, 0.0);
  const double p = std::ldexp(1.0, -rank);
  for (std::size_t x = 0; x < dim; ++x) {
    bool ok = true;
    for (int r = rank; r < n && ok; ++r) {
      const PauliString& g = gens[static_cast<std::size_t>(r)];
      // g = (-1)^{phase/2} Z^{z}; Z^{z}|x> = (-1)^{|z & x|}|x> in the standard basis.
      const int parity = std::popcount(g.z & static_cast<std::uint32_t>(x)) & 1;
      ok = ((g.phase / 2 + parity) & 1) == 0;
    }
    if (ok) probs[x] = p;
  }
  return probs;
}

}  // namespace designscope
