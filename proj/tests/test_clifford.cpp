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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "designscope/clifford.hpp"

using namespace designscope;

namespace {

using Rows = std::vector<CliffordTableau::Row>;

// Dense matrix of i^phase X^x Z^z (standard Z, qubit q = bit q).
Eigen::MatrixXcd pauli_matrix(const PauliString& p, int n) {
  const Eigen::Index d = Eigen::Index{1} << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  const Complex ph = std::pow(Complex(0, 1), p.phase);
  for (Eigen::Index b = 0; b < d; ++b) {
    const double s = (std::popcount(static_cast<std::uint32_t>(b) & p.z) & 1) ? -1.0 : 1.0;
    m(b ^ p.x, b) = ph * s;
  }
  return m;
}

// Columns are the circuit applied to each basis state.
Eigen::MatrixXcd circuit_matrix(const CliffordCircuit& c, int n) {
  const Eigen::Index d = Eigen::Index{1} << n;
  Eigen::MatrixXcd u(d, d);
  for (Eigen::Index b = 0; b < d; ++b) {
    StateVector s = StateVector::basis(n, static_cast<std::uint64_t>(b));
    run_clifford_circuit(s, c);
    u.col(b) = s.amplitudes();
  }
  return u;
}

// Equality up to a global phase.
double phase_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  const Complex overlap = a.dot(b);
  if (std::abs(overlap) < 1e-12) return (a - b).norm();
  return (a * (overlap / std::abs(overlap)) - b).norm();
}

// The 24 single-qubit Cliffords modulo phase, by closure under H and S.
using Key = std::tuple<std::uint32_t, std::uint32_t, bool, std::uint32_t, std::uint32_t, bool>;

Key key_of(const CliffordTableau& t) {
  const auto& x = t.x_image(0);
  const auto& z = t.z_image(0);
  return {x.x, x.z, x.sign, z.x, z.z, z.sign};
}

std::set<Key> single_qubit_group() {
  std::set<Key> seen;
  std::vector<CliffordTableau> frontier{CliffordTableau::identity(1)};
  seen.insert(key_of(frontier[0]));
  while (!frontier.empty()) {
    std::vector<CliffordTableau> next;
    for (const auto& t : frontier) {
      for (int g = 0; g < 2; ++g) {
        CliffordTableau u = t;
        if (g == 0) u.apply_h(0);
        else u.apply_s(0);
        if (seen.insert(key_of(u)).second) next.push_back(u);
      }
    }
    frontier = std::move(next);
  }
  return seen;
}

}  // namespace

TEST(UniformClifford, SamplesAreSymplectic) {
  RngStream rng(1, 0);
  for (int n = 1; n <= 12; ++n)
    for (int i = 0; i < 50; ++i) EXPECT_TRUE(sample_uniform_clifford(n, rng).is_symplectic()) << n;
  EXPECT_THROW(sample_uniform_clifford(0, rng), SizeError);
  EXPECT_THROW(sample_uniform_clifford(13, rng), SizeError);
}

TEST(UniformClifford, SingleQubitCosetsAreUniform) {
  const std::set<Key> group = single_qubit_group();
  ASSERT_EQ(group.size(), 24u);
  RngStream rng(2, 0);
  const int n = 100000;
  std::map<Key, int> counts;
  for (int i = 0; i < n; ++i) {
    const Key k = key_of(sample_uniform_clifford(1, rng));
    ASSERT_TRUE(group.count(k));
    ++counts[k];
  }
  EXPECT_EQ(counts.size(), 24u);
  const double p = 1.0 / 24.0;
  for (const auto& [k, c] : counts) EXPECT_NEAR(static_cast<double>(c) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(UniformClifford, TwoDesignFourthPowerOfAmplitude) {
  RngStream rng(3, 0);
  const int n = 20000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    StateVector st = new_zero_state(2);
    apply_clifford(st, sample_uniform_clifford(2, rng));
    const double v = std::pow(std::norm(st[0]), 2);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.1, 3.0 * std::sqrt((s2 / n - mean * mean) / n));
}

TEST(TableauToCircuit, IdentityAndHadamard) {
  const CliffordCircuit id = tableau_to_circuit(CliffordTableau::identity(3));
  const Eigen::MatrixXcd u = circuit_matrix(id, 3);
  EXPECT_LT(phase_distance(u.col(0), Eigen::VectorXcd::Unit(8, 0)), 1e-10);
  EXPECT_LT((u / (u(0, 0) / std::abs(u(0, 0))) - Eigen::MatrixXcd::Identity(8, 8)).norm(), 1e-10);

  CliffordTableau h = CliffordTableau::identity(1);
  h.apply_h(0);
  StateVector s = new_zero_state(1);
  run_clifford_circuit(s, tableau_to_circuit(h));
  Eigen::VectorXcd plus(2);
  plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  EXPECT_LT(phase_distance(s.amplitudes(), plus), 1e-10);
}

TEST(TableauToCircuit, RejectsNonSymplectic) {
  Rows rows(2);
  rows[0] = {1, 0, false};
  rows[1] = {1, 0, false};
  EXPECT_THROW(tableau_to_circuit(CliffordTableau::from_rows(1, rows)), ValidityError);
}

TEST(TableauToCircuit, PauliConjugationOracle) {
  RngStream rng(4, 0);
  const int n = 3;
  for (int trial = 0; trial < 1000; ++trial) {
    const CliffordTableau t = sample_uniform_clifford(n, rng);
    const Eigen::MatrixXcd u = circuit_matrix(tableau_to_circuit(t), n);
    ASSERT_LT(unitarity_defect(u), 1e-10);
    for (int q = 0; q < n; ++q) {
      for (int kind = 0; kind < 2; ++kind) {
        const PauliString gen = kind == 0 ? PauliString{1U << q, 0, 0} : PauliString{0, 1U << q, 0};
        const auto& row = kind == 0 ? t.x_image(q) : t.z_image(q);
        const Eigen::MatrixXcd lhs = u * pauli_matrix(gen, n) * u.adjoint();
        const Eigen::MatrixXcd rhs = pauli_matrix(PauliString::hermitian(row.x, row.z, row.sign), n);
        ASSERT_LT((lhs - rhs).norm(), 1e-10) << "trial " << trial << " qubit " << q;
      }
    }
  }
}

TEST(TableauToCircuit, GateUpdatesMatchMatrices) {
  // Tableau updates for single gates agree with conjugation by the gate matrix.
  const int n = 2;
  for (int g = 0; g < 6; ++g) {
    CliffordTableau t = CliffordTableau::identity(n);
    CliffordGate gate{CliffordGateKind::H, 0, 1};
    switch (g) {
      case 0: t.apply_h(1); gate = {CliffordGateKind::H, 1, -1}; break;
      case 1: t.apply_s(0); gate = {CliffordGateKind::S, 0, -1}; break;
      case 2: t.apply_cnot(1, 0); gate = {CliffordGateKind::CNOT, 1, 0}; break;
      case 3: t.apply_cz(0, 1); gate = {CliffordGateKind::CZ, 0, 1}; break;
      case 4: t.apply_x(1); gate = {CliffordGateKind::X, 1, -1}; break;
      default: t.apply_z(0); gate = {CliffordGateKind::Z, 0, -1}; break;
    }
    const Eigen::MatrixXcd u = circuit_matrix({gate}, n);
    for (int r = 0; r < 2 * n; ++r) {
      const PauliString gen = r < n ? PauliString{1U << r, 0, 0} : PauliString{0, 1U << (r - n), 0};
      const auto& row = t.rows()[static_cast<std::size_t>(r)];
      EXPECT_LT((u * pauli_matrix(gen, n) * u.adjoint() - pauli_matrix(PauliString::hermitian(row.x, row.z, row.sign), n)).norm(),
                1e-10)
          << "gate " << g << " row " << r;
    }
  }
}

TEST(ApplyClifford, IdentityLeavesStateUnchanged) {
  RngStream rng(5, 0);
  StateVector s = StateVector::from_amplitudes(sample_haar_unitary(8, rng).col(0));
  const Eigen::VectorXcd before = s.amplitudes();
  apply_clifford(s, CliffordTableau::identity(3));
  EXPECT_LT(phase_distance(s.amplitudes(), before), 1e-10);
  EXPECT_THROW(apply_clifford(s, CliffordTableau::identity(2)), SizeError);
}

TEST(ApplyClifford, CompositionOracle) {
  RngStream rng(6, 0);
  for (int n = 1; n <= 3; ++n)
    for (int trial = 0; trial < 200; ++trial) {
      const CliffordTableau t1 = sample_uniform_clifford(n, rng);
      const CliffordTableau t2 = sample_uniform_clifford(n, rng);
      StateVector a = StateVector::from_amplitudes(sample_haar_unitary(1 << n, rng).col(0));
      StateVector b = a;
      apply_clifford(a, t1);
      apply_clifford(a, t2);
      apply_clifford(b, t2.compose_after(t1));
      ASSERT_LT(phase_distance(a.amplitudes(), b.amplitudes()), 1e-10);
    }
}

TEST(ApplyClifford, CompositionStaysSymplectic) {
  RngStream rng(7, 0);
  for (int i = 0; i < 10000; ++i) {
    const int n = 1 + static_cast<int>(rng.below(6));
    const CliffordTableau t = sample_uniform_clifford(n, rng).compose_after(sample_uniform_clifford(n, rng));
    ASSERT_TRUE(t.is_symplectic());
  }
}

TEST(Stabilizer, OutcomeProbabilitiesArePowersOfTwo) {
  RngStream rng(8, 0);
  for (int trial = 0; trial < 300; ++trial) {
    StateVector s = new_zero_state(4);
    apply_clifford(s, sample_uniform_clifford(4, rng));
    for (double p : s.probabilities()) {
      if (p < 1e-12) continue;
      const double a = -std::log2(p);
      EXPECT_NEAR(p, std::exp2(-std::round(a)), 1e-10);
    }
  }
}

TEST(Stabilizer, SupportIsAffineSubspaceAndMatchesFastPath) {
  RngStream rng(9, 0);
  for (int n = 1; n <= 4; ++n)
    for (int trial = 0; trial < 200; ++trial) {
      const CliffordTableau t = sample_uniform_clifford(n, rng);
      StateVector s = new_zero_state(n);
      apply_clifford(s, t);
      const auto dense = s.probabilities();
      const auto fast = stabilizer_outcome_distribution(t);
      ASSERT_EQ(fast.size(), dense.size());
      std::vector<std::uint64_t> support;
      for (std::size_t x = 0; x < dense.size(); ++x) {
        ASSERT_NEAR(fast[x], dense[x], 1e-10);
        if (dense[x] > 1e-12) support.push_back(x);
      }
      const std::size_t k = support.size();
      ASSERT_EQ(k & (k - 1), 0u) << "support size " << k;
      for (double p : dense)
        if (p > 1e-12) {
          ASSERT_NEAR(p, 1.0 / static_cast<double>(k), 1e-10);
        }
      const std::set<std::uint64_t> sup(support.begin(), support.end());
      for (auto a : support)
        for (auto b : support) ASSERT_TRUE(sup.count(support[0] ^ a ^ b));
    }
}

TEST(Stabilizer, ThreeDesignSecondMomentWithPreprocessing) {
  for (int n = 2; n <= 4; ++n) {
    RngStream rng(10 + n, 0);
    const UnitaryMatrix v = sample_haar_unitary(1 << n, rng);
    StateVector prepared = new_zero_state(n);
    apply_dense_unitary(prepared, v);
    const int samples = 10000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < samples; ++i) {
      StateVector st = prepared;
      apply_clifford(st, sample_uniform_clifford(n, rng));
      const double z = z_string_expectation(st, std::vector<int>{0});
      s += z * z;
      s2 += z * z * z * z;
    }
    const double mean = s / samples;
    const double sigma = std::sqrt((s2 / samples - mean * mean) / samples);
    EXPECT_NEAR(mean, 1.0 / ((1 << n) + 1), 4.0 * sigma) << n;
  }
}
