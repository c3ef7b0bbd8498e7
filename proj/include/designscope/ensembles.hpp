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
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "designscope/clifford.hpp"
#include "designscope/error.hpp"
#include "designscope/rng.hpp"
#include "designscope/statevector.hpp"

namespace designscope {

enum class EnsembleKind { RC, HAAR, LRC, RDC, NOISY_LRC, MONIT_LRC };

inline std::string to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::RC: return "RC";
    case EnsembleKind::HAAR: return "HAAR";
    case EnsembleKind::LRC: return "LRC";
    case EnsembleKind::RDC: return "RDC";
    case EnsembleKind::NOISY_LRC: return "NOISY_LRC";
    case EnsembleKind::MONIT_LRC: return "MONIT_LRC";
  }
  return "?";
}

inline EnsembleKind parse_ensemble_kind(std::string_view s) {
  std::string up(s);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "RC") return EnsembleKind::RC;
  if (up == "HAAR") return EnsembleKind::HAAR;
  if (up == "LRC") return EnsembleKind::LRC;
  if (up == "RDC") return EnsembleKind::RDC;
  if (up == "NOISY_LRC" || up == "NOISYLRC" || up == "NOISY-LRC") return EnsembleKind::NOISY_LRC;
  if (up == "MONIT_LRC" || up == "MONITLRC" || up == "MONIT-LRC") return EnsembleKind::MONIT_LRC;
  throw ArgumentError("unknown ensemble kind '" + std::string(s) + "'");
}

constexpr bool is_lrc_family(EnsembleKind k) {
  return k == EnsembleKind::LRC || k == EnsembleKind::NOISY_LRC || k == EnsembleKind::MONIT_LRC;
}

/// Unitary kinds have a single output state per instance.
constexpr bool is_unitary_kind(EnsembleKind k) {
  return k != EnsembleKind::NOISY_LRC && k != EnsembleKind::MONIT_LRC;
}

/// State preparation P applied to |0...0> before the sampled unitary.
struct Preprocessing {
  bool fixed_haar = false;
  std::uint64_t seed = 0;

  static Preprocessing identity() { return {}; }
  static Preprocessing haar(std::uint64_t seed) { return {true, seed}; }

  std::string to_string() const { return fixed_haar ? "fixed:" + std::to_string(seed) : "identity"; }

  static Preprocessing parse(std::string_view s) {
    if (s == "identity" || s == "none") return identity();
    constexpr std::string_view prefix = "fixed:";
    if (s.substr(0, prefix.size()) == prefix) {
      std::uint64_t v = 0;
      const auto body = s.substr(prefix.size());
      const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
      if (ec == std::errc() && ptr == body.data() + body.size() && !body.empty()) return haar(v);
    }
    throw ArgumentError("bad preprocessing '" + std::string(s) + "' (expected identity or fixed:<seed>)");
  }

  friend bool operator==(const Preprocessing&, const Preprocessing&) = default;
};

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ArgumentError("not a number: '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ArgumentError("not an integer: '" + std::string(s) + "'");
  return v;
}

/// One random-dynamics family. Fields irrelevant to `kind` stay empty.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::HAAR;
  int n_qubits = 1;
  std::optional<int> depth;       // LRC families
  std::optional<int> iterations;  // RDC
  std::optional<double> p;        // NOISY_LRC noise / MONIT_LRC measurement ratio
  Preprocessing preproc;

  static EnsembleSpec rc(int n, Preprocessing pre = {}) { return {EnsembleKind::RC, n, {}, {}, {}, pre}; }
  static EnsembleSpec haar(int n, Preprocessing pre = {}) { return {EnsembleKind::HAAR, n, {}, {}, {}, pre}; }
  static EnsembleSpec lrc(int n, int d) { return {EnsembleKind::LRC, n, d, {}, {}, {}}; }
  static EnsembleSpec rdc(int n, int iters) { return {EnsembleKind::RDC, n, {}, iters, {}, {}}; }
  static EnsembleSpec noisy_lrc(int n, int d, double p) { return {EnsembleKind::NOISY_LRC, n, d, {}, p, {}}; }
  static EnsembleSpec monit_lrc(int n, int d, double p) { return {EnsembleKind::MONIT_LRC, n, d, {}, p, {}}; }

  void validate() const {
    if (n_qubits < 1 || n_qubits > kMaxQubits) throw ArgumentError("n out of range [1, 20]");
    if (kind == EnsembleKind::RC && n_qubits > kMaxCliffordQubits) throw ArgumentError("RC supports n <= 12");
    if (kind == EnsembleKind::HAAR && n_qubits > 12) throw ArgumentError("HAAR supports n <= 12");
    if (is_lrc_family(kind)) {
      if (!depth || *depth < 1) throw ArgumentError(designscope::to_string(kind) + " needs depth D >= 1");
    } else if (depth) {
      throw ArgumentError("depth is only meaningful for LRC families");
    }
    if (kind == EnsembleKind::RDC) {
      if (!iterations || *iterations < 1) throw ArgumentError("RDC needs iterations I >= 1");
    } else if (iterations) {
      throw ArgumentError("iterations are only meaningful for RDC");
    }
    if (kind == EnsembleKind::NOISY_LRC || kind == EnsembleKind::MONIT_LRC) {
      if (!p || !(*p >= 0.0 && *p <= 1.0)) throw ArgumentError(designscope::to_string(kind) + " needs p in [0, 1]");
    } else if (p) {
      throw ArgumentError("p is only meaningful for NOISY_LRC / MONIT_LRC");
    }
  }

  /// Canonical key-value form, e.g. kind=LRC;n=7;D=20;preproc=identity.
  std::string to_string() const {
    std::string s = "kind=" + designscope::to_string(kind) + ";n=" + std::to_string(n_qubits);
    if (depth) s += ";D=" + std::to_string(*depth);
    if (iterations) s += ";I=" + std::to_string(*iterations);
    if (p) s += ";p=" + format_double(*p);
    s += ";preproc=" + preproc.to_string();
    return s;
  }

  static EnsembleSpec parse(std::string_view text) {
    EnsembleSpec spec;
    bool have_kind = false, have_n = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t end = std::min(text.find(';', pos), text.size());
      const std::string_view field = text.substr(pos, end - pos);
      pos = end + 1;
      if (field.empty()) continue;
      const std::size_t eq = field.find('=');
      if (eq == std::string_view::npos) throw ArgumentError("ensemble field without '=': " + std::string(field));
      const std::string_view key = field.substr(0, eq), value = field.substr(eq + 1);
      if (key == "kind") {
        spec.kind = parse_ensemble_kind(value);
        have_kind = true;
      } else if (key == "n") {
        spec.n_qubits = static_cast<int>(parse_int(value));
        have_n = true;
      } else if (key == "D") {
        spec.depth = static_cast<int>(parse_int(value));
      } else if (key == "I") {
        spec.iterations = static_cast<int>(parse_int(value));
      } else if (key == "p") {
        spec.p = parse_double(value);
      } else if (key == "preproc") {
        spec.preproc = Preprocessing::parse(value);
      } else {
        throw ArgumentError("unknown ensemble field '" + std::string(key) + "'");
      }
    }
    if (!have_kind || !have_n) throw ArgumentError("ensemble spec needs kind and n");
    spec.validate();
    return spec;
  }

  friend bool operator==(const EnsembleSpec&, const EnsembleSpec&) = default;
};

enum class GateKind { Haar2, Diag2, Hadamard, Clifford, Identity2 };

/// One gate of a sampled program. `layer` is 1-based (LRC layer or RDC
/// iteration); RC programs use layer 0.
struct GateRecord {
  int layer = 0;
  GateKind kind = GateKind::Identity2;
  int q0 = 0;
  int q1 = -1;
  Gate2 matrix = Gate2::Identity();                      // Haar2
  std::array<Complex, 4> phases{1.0, 1.0, 1.0, 1.0};     // Diag2
  CliffordGate clifford{CliffordGateKind::H, 0, -1};     // Clifford
};

/// One member of an ensemble together with the seed that regenerates it.
struct CircuitInstance {
  EnsembleSpec spec;
  std::uint64_t instance_seed = 0;
  std::vector<GateRecord> program;
  std::optional<CliffordTableau> tableau;  // RC
  std::optional<UnitaryMatrix> dense;      // HAAR

  int layer_count() const {
    if (spec.depth) return *spec.depth;
    if (spec.iterations) return *spec.iterations;
    int layers = 0;
    for (const GateRecord& g : program) layers = std::max(layers, g.layer);
    return layers;
  }
};

/// Haar unitary on 2^n fixed by `seed`.
inline UnitaryMatrix fixed_preprocessing(int n_qubits, std::uint64_t seed) {
  StateVector::check_size(n_qubits);
  if (n_qubits > 12) throw SizeError("fixed preprocessing supports n <= 12");
  RngStream rng(seed, 0x5052455052ULL);
  return sample_haar_unitary(1 << n_qubits, rng);
}

/// P|0...0>, with the Haar preprocessing matrix built once per (n, seed).
inline const StateVector& prepared_state(int n_qubits, const Preprocessing& pre) {
  static std::mutex mutex;
  static std::map<std::pair<int, std::uint64_t>, std::unique_ptr<StateVector>> cache;
  const auto key = std::make_pair(pre.fixed_haar ? n_qubits : -n_qubits, pre.fixed_haar ? pre.seed : 0);
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) {
    StateVector s = StateVector::zero(n_qubits);
    if (pre.fixed_haar) apply_dense_unitary(s, fixed_preprocessing(n_qubits, pre.seed));
    slot = std::make_unique<StateVector>(std::move(s));
  }
  return *slot;
}

/// Qubit pairs (0-based) acted on in 1-based LRC layer `layer`. Odd layers
/// pair (2i-1, 2i) and even layers (2i, 2i+1) in 1-based qubit labels.
inline std::vector<std::pair<int, int>> lrc_layer_pairs(int n_qubits, int layer) {
  std::vector<std::pair<int, int>> pairs;
  for (int a = (layer % 2 == 1) ? 0 : 1; a + 1 < n_qubits; a += 2) pairs.emplace_back(a, a + 1);
  return pairs;
}

inline Gate2 sample_haar_gate2(RngStream& rng) { return sample_haar_unitary(4, rng); }

/// Regenerates the instance fully determined by (spec, seed).
inline CircuitInstance draw_instance_from_seed(const EnsembleSpec& spec, std::uint64_t seed) {
  spec.validate();
  CircuitInstance inst;
  inst.spec = spec;
  inst.instance_seed = seed;
  RngStream rng(seed, 0x494E5354ULL);
  const int n = spec.n_qubits;
  switch (spec.kind) {
    case EnsembleKind::RC: {
      CliffordTableau tab = sample_uniform_clifford(n, rng);
      for (const CliffordGate& g : tableau_to_circuit(tab)) {
        GateRecord rec;
        rec.kind = GateKind::Clifford;
        rec.q0 = g.q0;
        rec.q1 = g.q1;
        rec.clifford = g;
        inst.program.push_back(rec);
      }
      inst.tableau = std::move(tab);
      break;
    }
    case EnsembleKind::HAAR:
      inst.dense = sample_haar_unitary(1 << n, rng);
      break;
    case EnsembleKind::LRC:
    case EnsembleKind::NOISY_LRC:
    case EnsembleKind::MONIT_LRC:
      for (int layer = 1; layer <= *spec.depth; ++layer)
        for (const auto& [a, b] : lrc_layer_pairs(n, layer)) {
          GateRecord rec;
          rec.layer = layer;
          rec.kind = GateKind::Haar2;
          rec.q0 = a;
          rec.q1 = b;
          rec.matrix = sample_haar_gate2(rng);
          inst.program.push_back(rec);
        }
      break;
    case EnsembleKind::RDC:
      for (int it = 1; it <= *spec.iterations; ++it) {
        for (int a = 0; a < n; ++a)
          for (int b = a + 1; b < n; ++b) {
            GateRecord rec;
            rec.layer = it;
            rec.kind = GateKind::Diag2;
            rec.q0 = a;
            rec.q1 = b;
            for (Complex& ph : rec.phases) ph = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
            inst.program.push_back(rec);
          }
        for (int q = 0; q < n; ++q) {
          GateRecord rec;
          rec.layer = it;
          rec.kind = GateKind::Hadamard;
          rec.q0 = q;
          inst.program.push_back(rec);
        }
      }
      break;
  }
  return inst;
}

inline CircuitInstance draw_instance(const EnsembleSpec& spec, RngStream& rng) {
  return draw_instance_from_seed(spec, rng.next_u64());
}

inline void apply_gate_record(Eigen::VectorXcd& a, const GateRecord& g) {
  switch (g.kind) {
    case GateKind::Haar2: kernels::apply_2q(a, g.matrix, g.q0, g.q1); break;
    case GateKind::Diag2: kernels::apply_diag_2q(a, g.phases, g.q0, g.q1); break;
    case GateKind::Hadamard: kernels::apply_1q(a, gates::h(), g.q0); break;
    case GateKind::Clifford: apply_clifford_gate(a, g.clifford); break;
    case GateKind::Identity2: break;
  }
}

/// Output state U P |0...0> of a unitary-kind instance.
inline StateVector output_state(const CircuitInstance& inst) {
  if (!is_unitary_kind(inst.spec.kind))
    throw UnsupportedError(to_string(inst.spec.kind) + " has no single output state");
  StateVector s = prepared_state(inst.spec.n_qubits, inst.spec.preproc);
  if (inst.dense) {
    apply_dense_unitary(s, *inst.dense);
  } else {
    for (const GateRecord& g : inst.program) apply_gate_record(s.mutable_amplitudes(), g);
  }
  return s;
}

/// Exact outcome distribution of a unitary-kind instance. RC without
/// preprocessing is read from the stabilizer tableau.
inline std::vector<double> outcome_distribution(const CircuitInstance& inst) {
  if (inst.spec.kind == EnsembleKind::RC && !inst.spec.preproc.fixed_haar && inst.tableau)
    return stabilizer_outcome_distribution(*inst.tableau);
  return output_state(inst).probabilities();
}

namespace detail {

/// Per-shot resimulation for NOISY_LRC / MONIT_LRC. Event slots are
/// (layer, qubit) pairs in order; slots are skipped geometrically so a shot
/// with no event reuses the noiseless output distribution, and a shot whose
/// first event is in layer L restarts from the cached state after layer L's
/// gates. The sampled law is the same as drawing every slot independently.
class TrajectoryRunner {
 public:
  explicit TrajectoryRunner(const CircuitInstance& inst)
      : inst_(inst), n_(inst.spec.n_qubits), depth_(*inst.spec.depth), p_(*inst.spec.p) {
    const bool noisy = inst.spec.kind == EnsembleKind::NOISY_LRC;
    event_prob_ = noisy ? 0.75 * p_ : p_;
    event_layers_ = noisy ? depth_ : depth_ - 1;  // the final layer is never measured
    by_layer_.resize(static_cast<std::size_t>(depth_ + 1));
    for (std::size_t i = 0; i < inst.program.size(); ++i)
      by_layer_[static_cast<std::size_t>(inst.program[i].layer)].push_back(i);
    StateVector s = prepared_state(n_, inst.spec.preproc);
    after_layer_.reserve(static_cast<std::size_t>(depth_ + 1));
    after_layer_.push_back(s);
    for (int layer = 1; layer <= depth_; ++layer) {
      run_layer_gates(s, layer);
      after_layer_.push_back(s);
    }
    clean_probs_ = s.probabilities();
    clean_sampler_ = std::make_unique<OutcomeSampler>(clean_probs_);
  }

  std::uint64_t shot(RngStream& rng) const {
    const std::uint64_t total = static_cast<std::uint64_t>(event_layers_) * static_cast<std::uint64_t>(n_);
    std::uint64_t slot = next_event(rng, 0);
    if (slot >= total) return clean_sampler_->draw(rng);
    int layer = static_cast<int>(slot / static_cast<std::uint64_t>(n_)) + 1;
    StateVector s = after_layer_[static_cast<std::size_t>(layer)];
    for (;;) {
      // Events of this layer, then the next layer's gates.
      const std::uint64_t layer_end = static_cast<std::uint64_t>(layer) * static_cast<std::uint64_t>(n_);
      while (slot < std::min(layer_end, total)) {
        fire(s, static_cast<int>(slot % static_cast<std::uint64_t>(n_)), rng);
        slot = next_event(rng, slot + 1);
      }
      if (layer == depth_) break;
      ++layer;
      run_layer_gates(s, layer);
    }
    const std::vector<double> probs = s.probabilities();
    return OutcomeSampler(probs).draw(rng);
  }

  const std::vector<double>& clean_distribution() const { return clean_probs_; }

 private:
  std::uint64_t next_event(RngStream& rng, std::uint64_t from) const {
    if (event_prob_ <= 0.0) return std::numeric_limits<std::uint64_t>::max();
    if (event_prob_ >= 1.0) return from;
    return from + rng.geometric(event_prob_);
  }

  void fire(StateVector& s, int qubit, RngStream& rng) const {
    if (inst_.spec.kind == EnsembleKind::NOISY_LRC) {
      kernels::apply_pauli(s.mutable_amplitudes(), 1 + static_cast<int>(rng.below(3)), qubit);
    } else {
      measure_and_collapse(s, qubit, rng);
    }
  }

  void run_layer_gates(StateVector& s, int layer) const {
    for (std::size_t i : by_layer_[static_cast<std::size_t>(layer)])
      apply_gate_record(s.mutable_amplitudes(), inst_.program[i]);
  }

  const CircuitInstance& inst_;
  int n_;
  int depth_;
  double p_;
  double event_prob_ = 0.0;
  int event_layers_ = 0;
  std::vector<std::vector<std::size_t>> by_layer_;
  std::vector<StateVector> after_layer_;
  std::vector<double> clean_probs_;
  std::unique_ptr<OutcomeSampler> clean_sampler_;
};

}  // namespace detail

/// Histogram of n_shots final measurements over the 2^n basis states.
inline std::vector<std::uint32_t> run_instance_counts(const CircuitInstance& inst, int n_shots, RngStream& rng) {
  if (n_shots < 1) throw ArgumentError("n_shots must be >= 1");
  if (is_unitary_kind(inst.spec.kind)) return sample_counts(outcome_distribution(inst), n_shots, rng);
  detail::TrajectoryRunner runner(inst);
  std::vector<std::uint32_t> counts(std::size_t{1} << inst.spec.n_qubits, 0);
  for (int s = 0; s < n_shots; ++s) ++counts[runner.shot(rng)];
  return counts;
}

/// n_shots full computational-basis measurements of the instance. Noisy and
/// monitored kinds resimulate every shot with fresh noise or measurements.
inline std::vector<ShotRecord> run_instance(const CircuitInstance& inst, int n_shots, RngStream& rng) {
  if (n_shots < 1) throw ArgumentError("n_shots must be >= 1");
  std::vector<ShotRecord> shots;
  shots.reserve(static_cast<std::size_t>(n_shots));
  if (is_unitary_kind(inst.spec.kind)) {
    const std::vector<double> probs = outcome_distribution(inst);
    OutcomeSampler sampler(probs);
    for (int s = 0; s < n_shots; ++s) shots.emplace_back(sampler.draw(rng), inst.spec.n_qubits);
  } else {
    detail::TrajectoryRunner runner(inst);
    for (int s = 0; s < n_shots; ++s) shots.emplace_back(runner.shot(rng), inst.spec.n_qubits);
  }
  return shots;
}

/// Noise-free <psi_out| Z_{h1}...Z_{hk} |psi_out> (Z|0> = -|0>).
inline double exact_expectation(const CircuitInstance& inst, std::span<const int> subset) {
  if (!is_unitary_kind(inst.spec.kind))
    throw UnsupportedError("exact expectation is undefined for " + to_string(inst.spec.kind));
  const std::uint64_t mask = subset_mask(subset, inst.spec.n_qubits);
  const std::vector<double> probs = outcome_distribution(inst);
  double acc = 0.0;
  for (std::size_t x = 0; x < probs.size(); ++x) acc += z_string_sign(x, mask) * probs[x];
  return acc;
}

/// Haar-random pure state on 2^n: a normalized complex Gaussian vector. Same
/// law as U P|0...0> for Haar U and any fixed P.
inline StateVector sample_haar_state(int n_qubits, RngStream& rng) {
  StateVector::check_size(n_qubits);
  Eigen::VectorXcd v(Eigen::Index{1} << n_qubits);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    v(i) = Complex(re, im);
  }
  v /= v.norm();
  return StateVector::from_amplitudes(std::move(v));
}

// Design-depth bounds.

struct DesignBoundParams {
  int t = 1;
  int n = 2;
  double epsilon = 1.0;
  double c = 1.0;
};

/// Depth c t^9 (n t + log2(1/eps)) beyond which an LRC is an eps-approximate
/// t-design.
inline double lrc_design_depth_bound(const DesignBoundParams& p) {
  if (p.t < 1) throw ArgumentError("t must be >= 1");
  if (p.n < 2) throw ArgumentError("n must be >= 2");
  if (!(p.epsilon > 0.0)) throw ArgumentError("epsilon must be > 0");
  if (!(p.c > 0.0)) throw ArgumentError("c must be > 0");
  return p.c * std::pow(static_cast<double>(p.t), 9) * (p.n * p.t + std::log2(1.0 / p.epsilon));
}

/// Iteration count (t n + log2(1/eps)) / (n - 2 log2 t!) beyond which an RDC is
/// an eps-approximate t-design. Only defined while the denominator is positive.
inline double rdc_design_iteration_bound(int t, int n, double epsilon) {
  if (t < 1) throw ArgumentError("t must be >= 1");
  if (n < 1) throw ArgumentError("n must be >= 1");
  if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be > 0");
  const double log2_factorial = std::lgamma(static_cast<double>(t) + 1.0) / std::numbers::ln2;
  const double denom = n - 2.0 * log2_factorial;
  if (!(denom > 0.0))
    throw DomainError("RDC bound inapplicable: n - 2 log2(t!) = " + format_double(denom) + " <= 0");
  return (t * n + std::log2(1.0 / epsilon)) / denom;
}

}  // namespace designscope
