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

#include <cstdint>
#include <string>
#include <vector>

#include "designscope/ensembles.hpp"
#include "designscope/error.hpp"
#include "designscope/features.hpp"
#include "designscope/parallel.hpp"
#include "designscope/rng.hpp"
#include "designscope/statevector.hpp"

// Out-of-time-ordered correlators <A_i U^dag B_j U A_i U^dag B_j U> over
// sampled unitaries, as N_q x N_q complex matrices.

namespace designscope {

enum class Pauli { X = 1, Y = 2, Z = 3 };

inline Pauli parse_pauli(std::string_view s) {
  if (s == "X" || s == "x") return Pauli::X;
  if (s == "Y" || s == "y") return Pauli::Y;
  if (s == "Z" || s == "z") return Pauli::Z;
  throw ArgumentError("unknown Pauli '" + std::string(s) + "'");
}

/// ALV: Haar-random probe state; CB: random computational-basis state;
/// TR: full trace.
enum class OtocVariant { ALV, CB, TR };

inline std::string to_string(OtocVariant v) {
  switch (v) {
    case OtocVariant::ALV: return "alv";
    case OtocVariant::CB: return "cb";
    case OtocVariant::TR: return "tr";
  }
  return "?";
}

inline OtocVariant parse_otoc_variant(std::string_view s) {
  if (s == "alv" || s == "ALV") return OtocVariant::ALV;
  if (s == "cb" || s == "CB") return OtocVariant::CB;
  if (s == "tr" || s == "TR") return OtocVariant::TR;
  throw ArgumentError("unknown OTOC variant '" + std::string(s) + "'");
}

struct OtocConfig {
  EnsembleSpec ensemble;
  int m = 1;
  Pauli a = Pauli::X;
  Pauli b = Pauli::Y;
  OtocVariant variant = OtocVariant::ALV;

  void validate() const {
    ensemble.validate();
    if (!is_unitary_kind(ensemble.kind)) throw ArgumentError("OTOCs need a unitary ensemble");
    if (m < 1) throw ArgumentError("m must be >= 1");
    if (variant == OtocVariant::TR && ensemble.n_qubits > 8) throw SizeError("TR variant supports n <= 8");
    if (ensemble.n_qubits > 12) throw SizeError("OTOCs support n <= 12");
  }
};

/// Sample mean over m unitaries. For TR, `entries` is the trace divided by
/// 2^n and `raw` the undivided trace; otherwise the two coincide.
struct OtocMatrix {
  Eigen::MatrixXcd entries;
  Eigen::MatrixXcd raw;
};

/// Full 2^n x 2^n unitary of a unitary-kind instance (preprocessing excluded).
inline UnitaryMatrix instance_unitary(const CircuitInstance& inst) {
  if (!is_unitary_kind(inst.spec.kind)) throw UnsupportedError("instance has no single unitary");
  if (inst.dense) return *inst.dense;
  const Eigen::Index d = Eigen::Index{1} << inst.spec.n_qubits;
  UnitaryMatrix u(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    Eigen::VectorXcd col = Eigen::VectorXcd::Zero(d);
    col(c) = 1.0;
    for (const GateRecord& g : inst.program) apply_gate_record(col, g);
    u.col(c) = col;
  }
  return u;
}

namespace detail {

inline void pauli_rows(Eigen::MatrixXcd& m, Pauli p, int q) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Eigen::VectorXcd col = m.col(c);
    kernels::apply_pauli(col, static_cast<int>(p), q);
    m.col(c) = col;
  }
}

inline void pauli_vec(Eigen::VectorXcd& v, Pauli p, int q) { kernels::apply_pauli(v, static_cast<int>(p), q); }

/// OTOC matrix of one unitary, using probe state `probe` for ALV/CB.
inline Eigen::MatrixXcd otoc_single(const UnitaryMatrix& u, const Eigen::VectorXcd* probe, const OtocConfig& cfg) {
  const int n = cfg.ensemble.n_qubits;
  Eigen::MatrixXcd out(n, n);
  if (cfg.variant == OtocVariant::TR) {
    for (int j = 0; j < n; ++j) {
      Eigen::MatrixXcd bu = u;
      pauli_rows(bu, cfg.b, j);
      const Eigen::MatrixXcd heis = u.adjoint() * bu;  // U^dag B_j U
      for (int i = 0; i < n; ++i) {
        Eigen::MatrixXcd w = heis;
        pauli_rows(w, cfg.a, i);  // A_i U^dag B_j U (A Hermitian)
        out(i, j) = (w.array() * w.transpose().array()).sum();
      }
    }
    return out;
  }
  const Eigen::MatrixXcd ud = u.adjoint();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXcd v = *probe;
      for (int rep = 0; rep < 2; ++rep) {
        v = u * v;
        pauli_vec(v, cfg.b, j);
        v = ud * v;
        pauli_vec(v, cfg.a, i);
      }
      out(i, j) = probe->dot(v);  // conjugates the probe
    }
  }
  return out;
}

}  // namespace detail

/// OTOC matrix of the sampled unitaries U_1..U_m. ALV and CB draw one probe
/// state per U_n, shared by all (i, j) entries.
inline OtocMatrix compute_otoc_matrix(const OtocConfig& cfg, RngStream& rng) {
  cfg.validate();
  const int n = cfg.ensemble.n_qubits;
  const Eigen::Index d = Eigen::Index{1} << n;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
  for (int s = 0; s < cfg.m; ++s) {
    RngStream draw = rng.substream(2 * static_cast<std::uint64_t>(s));
    RngStream probe_rng = rng.substream(2 * static_cast<std::uint64_t>(s) + 1);
    const UnitaryMatrix u = instance_unitary(draw_instance(cfg.ensemble, draw));
    Eigen::VectorXcd probe;
    if (cfg.variant == OtocVariant::ALV) {
      probe = sample_haar_state(n, probe_rng).amplitudes();
    } else if (cfg.variant == OtocVariant::CB) {
      probe = Eigen::VectorXcd::Zero(d);
      probe(static_cast<Eigen::Index>(probe_rng.below(static_cast<std::uint64_t>(d)))) = 1.0;
    }
    acc += detail::otoc_single(u, cfg.variant == OtocVariant::TR ? nullptr : &probe, cfg);
  }
  acc /= static_cast<double>(cfg.m);
  OtocMatrix out;
  out.raw = acc;
  out.entries = cfg.variant == OtocVariant::TR ? Eigen::MatrixXcd(acc / static_cast<double>(d)) : acc;
  return out;
}

/// Real parts (row-major), then imaginary parts.
inline std::vector<double> flatten_otoc(const Eigen::MatrixXcd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j).real());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j).imag());
  return out;
}

inline FeatureMeta otoc_meta(const OtocConfig& cfg) {
  return FeatureMeta{cfg.ensemble.n_qubits, cfg.m, kExactShots, {}, "otoc-" + to_string(cfg.variant)};
}

/// `count` flattened OTOC matrices labeled with the ensemble kind; row i uses
/// substream i of `seed`.
inline Dataset otoc_dataset(const OtocConfig& cfg, int count, std::uint64_t seed, int workers = 1) {
  cfg.validate();
  if (count < 1) throw ArgumentError("count must be >= 1");
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(count));
  const RngStream root(seed, 0x4F544F43ULL);
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    RngStream rng = root.substream(i);
    rows[i] = flatten_otoc(compute_otoc_matrix(cfg, rng).entries);
  });
  Dataset ds;
  ds.meta = otoc_meta(cfg);
  ds.rows = std::move(rows);
  ds.labels.assign(ds.rows.size(), to_string(cfg.ensemble.kind));
  ds.header["ensemble"] = cfg.ensemble.to_string();
  ds.header["seed"] = std::to_string(seed);
  ds.header["otoc_a"] = std::string(1, "IXYZ"[static_cast<int>(cfg.a)]);
  ds.header["otoc_b"] = std::string(1, "IXYZ"[static_cast<int>(cfg.b)]);
  return ds;
}

}  // namespace designscope
