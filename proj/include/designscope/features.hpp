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
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "designscope/ensembles.hpp"
#include "designscope/error.hpp"
#include "designscope/parallel.hpp"
#include "designscope/rng.hpp"
#include "designscope/statevector.hpp"

namespace designscope {

/// Shot count meaning "no shot noise": features use exact expectations.
inline constexpr int kExactShots = 0;

/// Generation settings shared by every row of a dataset. Classifiers only
/// score data produced under the same settings they were trained on.
struct FeatureMeta {
  int n_qubits = 1;
  int n_u = 1;
  int n_s = 1;  // kExactShots for the noise-free limit
  std::vector<int> kprimes{4};
  std::string variant = "moments";  // or otoc-alv / otoc-cb / otoc-tr

  std::size_t subset_count() const { return (std::size_t{1} << n_qubits) - 1; }

  std::size_t feature_dim() const {
    if (variant == "moments") return subset_count() * kprimes.size();
    return 2 * static_cast<std::size_t>(n_qubits) * static_cast<std::size_t>(n_qubits);
  }

  friend bool operator==(const FeatureMeta&, const FeatureMeta&) = default;

  std::string describe() const {
    std::string k;
    for (std::size_t i = 0; i < kprimes.size(); ++i) k += (i ? "," : "") + std::to_string(kprimes[i]);
    return "N_q=" + std::to_string(n_qubits) + " N_u=" + std::to_string(n_u) +
           " N_s=" + (n_s == kExactShots ? std::string("inf") : std::to_string(n_s)) + " kprimes=" + k +
           " variant=" + variant;
  }
};

inline void require_compatible(const FeatureMeta& a, const FeatureMeta& b, std::string_view what) {
  if (!(a == b))
    throw CompatibilityError(std::string(what) + ": generation settings differ (" + a.describe() + " vs " +
                             b.describe() + ")");
}

/// J_est values indexed by (k' position, subset) in canonical order:
/// index = kprime_index * (2^n - 1) + subset_index.
struct FeatureVector {
  std::vector<double> values;
  FeatureMeta meta;
  std::string tag;
};

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> zero_std;
};

/// Labeled feature rows with shared generation settings. `header` keeps the
/// free-form metadata (ensemble, seed, preproc, manifest, ...) of the file.
struct Dataset {
  FeatureMeta meta;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::optional<NormalizationStats> normalization;
  std::map<std::string, std::string> header;

  std::size_t size() const noexcept { return rows.size(); }
  std::size_t dim() const noexcept { return meta.feature_dim(); }

  void add(FeatureVector fv, std::string label) {
    if (rows.empty() && labels.empty()) meta = fv.meta;
    require_compatible(meta, fv.meta, "feature vector");
    if (fv.values.size() != meta.feature_dim()) throw SizeError("feature vector has wrong length");
    rows.push_back(std::move(fv.values));
    labels.push_back(std::move(label));
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.meta == b.meta && a.rows == b.rows && a.labels == b.labels;
  }
};

/// (1/N_s) sum_l prod_{p in subset} (-1)^(1 - x(l, p)).
inline double estimate_z_string_from_shots(std::span<const ShotRecord> shots, std::span<const int> subset) {
  if (shots.empty()) throw ArgumentError("no shots");
  const std::uint64_t mask = subset_mask(subset, shots.front().n_qubits());
  double acc = 0.0;
  for (const ShotRecord& s : shots) acc += z_string_sign(s.basis_index(), mask);
  return acc / static_cast<double>(shots.size());
}

/// Position of a strictly increasing, non-empty subset: its bitmask minus one.
inline std::size_t subset_index(std::span<const int> subset, int n_qubits) {
  return static_cast<std::size_t>(subset_mask(subset, n_qubits) - 1);
}

inline std::vector<int> subset_from_index(std::size_t index, int n_qubits) {
  std::vector<int> out;
  const std::uint64_t mask = index + 1;
  for (int q = 0; q < n_qubits; ++q)
    if ((mask >> q) & 1U) out.push_back(q);
  return out;
}

/// In-place Walsh-Hadamard transform: f[S] <- sum_x f[x] (-1)^{|x & S|}.
inline void walsh_hadamard(std::vector<double>& f) {
  for (std::size_t h = 1; h < f.size(); h <<= 1)
    for (std::size_t i = 0; i < f.size(); i += 2 * h)
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = f[j], b = f[j + h];
        f[j] = a + b;
        f[j + h] = a - b;
      }
}

/// Z-string values for every non-empty subset (index = mask - 1) from a
/// distribution over basis states whose entries sum to `total`.
inline std::vector<double> all_z_strings(std::vector<double> weights, double total) {
  walsh_hadamard(weights);
  std::vector<double> out(weights.size() - 1);
  for (std::size_t mask = 1; mask < weights.size(); ++mask) {
    const double sign = (std::popcount(mask) & 1) ? -1.0 : 1.0;
    out[mask - 1] = sign * weights[mask] / total;
  }
  return out;
}

/// Outcome weights of one sampled instance: shot counts, or the exact
/// distribution when n_s == kExactShots.
inline std::vector<double> instance_weights(const EnsembleSpec& spec, int n_s, RngStream& draw_rng,
                                            RngStream& shot_rng) {
  std::vector<double> probs;
  if (spec.kind == EnsembleKind::HAAR) {
    probs = sample_haar_state(spec.n_qubits, draw_rng).probabilities();
  } else if (n_s == kExactShots || is_unitary_kind(spec.kind)) {
    const CircuitInstance inst = draw_instance(spec, draw_rng);
    if (n_s == kExactShots) return outcome_distribution(inst);
    probs = outcome_distribution(inst);
  } else {
    const CircuitInstance inst = draw_instance(spec, draw_rng);
    const auto counts = run_instance_counts(inst, n_s, shot_rng);
    return {counts.begin(), counts.end()};
  }
  if (n_s == kExactShots) return probs;
  const auto counts = sample_counts(probs, n_s, shot_rng);
  return {counts.begin(), counts.end()};
}

/// J_est(S, k' | N_u, N_s): mean over N_u sampled instances of the k'-th power
/// of each Z-string estimate from N_s shots (exact expectations when
/// n_s == kExactShots). Noisy and monitored kinds have no exact mode.
inline FeatureVector compute_feature_vector(const EnsembleSpec& spec, int n_u, int n_s, std::span<const int> kprimes,
                                            RngStream& rng) {
  spec.validate();
  if (n_u < 1) throw ArgumentError("N_u must be >= 1");
  if (n_s < 0) throw ArgumentError("N_s must be >= 1 (or exact)");
  if (kprimes.empty()) throw ArgumentError("need at least one k'");
  for (int k : kprimes)
    if (k < 1) throw ArgumentError("k' must be >= 1");
  if (n_s == kExactShots && !is_unitary_kind(spec.kind))
    throw UnsupportedError("exact mode is undefined for " + to_string(spec.kind));

  FeatureVector fv;
  fv.meta = FeatureMeta{spec.n_qubits, n_u, n_s, std::vector<int>(kprimes.begin(), kprimes.end()), "moments"};
  fv.tag = to_string(spec.kind);
  const std::size_t subsets = fv.meta.subset_count();
  fv.values.assign(subsets * kprimes.size(), 0.0);
  const double total = n_s == kExactShots ? 1.0 : static_cast<double>(n_s);
  for (int i = 0; i < n_u; ++i) {
    RngStream draw_rng = rng.substream(2 * static_cast<std::uint64_t>(i));
    RngStream shot_rng = rng.substream(2 * static_cast<std::uint64_t>(i) + 1);
    const std::vector<double> z = all_z_strings(instance_weights(spec, n_s, draw_rng, shot_rng), total);
    for (std::size_t k = 0; k < kprimes.size(); ++k) {
      double* out = fv.values.data() + k * subsets;
      for (std::size_t s = 0; s < subsets; ++s) out[s] += std::pow(z[s], kprimes[k]);
    }
  }
  for (double& v : fv.values) v /= n_u;
  return fv;
}

/// `count` feature vectors of one ensemble, vector i drawn from substream i.
inline Dataset generate_dataset(const EnsembleSpec& spec, int n_u, int n_s, std::span<const int> kprimes, int count,
                                std::uint64_t seed, int workers, const std::string& label) {
  if (count < 1) throw ArgumentError("count must be >= 1");
  std::vector<FeatureVector> out(static_cast<std::size_t>(count));
  const RngStream root(seed, 0);
  parallel_for(out.size(), workers, [&](std::size_t i) {
    RngStream rng = root.substream(i);
    out[i] = compute_feature_vector(spec, n_u, n_s, kprimes, rng);
  });
  Dataset ds;
  for (auto& fv : out) ds.add(std::move(fv), label);
  ds.header["ensemble"] = spec.to_string();
  ds.header["seed"] = std::to_string(seed);
  ds.header["preproc"] = spec.preproc.to_string();
  return ds;
}

/// Rows of `b` appended to `a`; generation settings must match.
inline Dataset concat(const Dataset& a, const Dataset& b) {
  require_compatible(a.meta, b.meta, "dataset concatenation");
  Dataset out = a;
  out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.normalization.reset();
  const auto ea = a.header.find("ensemble"), eb = b.header.find("ensemble");
  if (ea != a.header.end() && eb != b.header.end() && ea->second != eb->second)
    out.header["ensemble"] = ea->second + "|" + eb->second;
  const auto pa = a.header.find("preproc"), pb = b.header.find("preproc");
  if (pa != a.header.end() && pb != b.header.end() && pa->second != pb->second)
    out.header["preproc"] = pa->second + "|" + pb->second;
  return out;
}

inline bool is_zero_std(double stddev, double mean) { return stddev <= 1e-12 * std::max(1.0, std::abs(mean)); }

/// Per-feature mean and population standard deviation.
inline NormalizationStats zscore_fit(const Dataset& ds) {
  if (ds.size() < 2) throw ArgumentError("z-score fit needs at least two rows");
  const std::size_t d = ds.rows.front().size();
  NormalizationStats st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  st.zero_std.assign(d, false);
  for (const auto& r : ds.rows)
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += r[j];
  for (double& m : st.mean) m /= static_cast<double>(ds.size());
  for (const auto& r : ds.rows)
    for (std::size_t j = 0; j < d; ++j) st.stddev[j] += (r[j] - st.mean[j]) * (r[j] - st.mean[j]);
  for (std::size_t j = 0; j < d; ++j) {
    st.stddev[j] = std::sqrt(st.stddev[j] / static_cast<double>(ds.size()));
    st.zero_std[j] = is_zero_std(st.stddev[j], st.mean[j]);
  }
  return st;
}

inline std::vector<double> zscore_row(std::span<const double> row, const NormalizationStats& st) {
  if (row.size() != st.mean.size()) throw SizeError("normalization dimension mismatch");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = st.zero_std[j] ? 0.0 : (row[j] - st.mean[j]) / st.stddev[j];
  return out;
}

/// (x - mean) / std per feature; zero-std features become 0.
inline Dataset zscore_apply(const Dataset& ds, const NormalizationStats& st) {
  if (!ds.rows.empty() && ds.rows.front().size() != st.mean.size())
    throw SizeError("normalization stats have " + std::to_string(st.mean.size()) + " features, dataset has " +
                    std::to_string(ds.rows.front().size()));
  Dataset out = ds;
  for (auto& r : out.rows) r = zscore_row(r, st);
  out.normalization = st;
  return out;
}

/// Uniform permutation of the union of `train` and `valid`, cut into two
/// halves. Class balance within a half is not enforced.
inline std::pair<Dataset, Dataset> split_shuffle(const Dataset& train, const Dataset& valid, RngStream& rng) {
  Dataset all = concat(train, valid);
  if (all.size() % 2 != 0) throw ArgumentError("combined row count " + std::to_string(all.size()) + " is odd");
  std::vector<std::size_t> perm(all.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Dataset a, b;
  a.meta = b.meta = all.meta;
  a.header = b.header = all.header;
  const std::size_t half = all.size() / 2;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    Dataset& dst = i < half ? a : b;
    dst.rows.push_back(all.rows[perm[i]]);
    dst.labels.push_back(all.labels[perm[i]]);
  }
  return {std::move(a), std::move(b)};
}

// Dataset file: '#'-prefixed key=value header lines, then one
// "label,f1,f2,..." row per feature vector.

inline constexpr int kDatasetFormatVersion = 1;

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline void write_dataset(std::ostream& os, const Dataset& ds) {
  os << "# format_version=" << kDatasetFormatVersion << "\n";
  os << "# N_q=" << ds.meta.n_qubits << "\n";
  os << "# N_u=" << ds.meta.n_u << "\n";
  os << "# N_s=" << (ds.meta.n_s == kExactShots ? std::string("inf") : std::to_string(ds.meta.n_s)) << "\n";
  os << "# kprimes=" << join_ints(ds.meta.kprimes) << "\n";
  if (ds.meta.variant != "moments") os << "# variant=" << ds.meta.variant << "\n";
  for (const auto& [k, v] : ds.header) os << "# " << k << "=" << v << "\n";
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    os << ds.labels[i];
    for (double v : ds.rows[i]) os << ',' << format_double(v);
    os << '\n';
  }
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  write_dataset(os, ds);
  if (!os) throw Error("write failed: " + path);
}

inline Dataset read_dataset(std::istream& is) {
  Dataset ds;
  std::map<std::string, std::string> keys;
  std::string line;
  int lineno = 0;
  bool meta_ready = false;
  const auto finish_header = [&] {
    for (const char* required : {"format_version", "N_q", "N_u", "N_s", "kprimes"})
      if (!keys.count(required)) throw ParseError(std::string("header is missing ") + required, lineno);
    try {
      if (parse_int(keys["format_version"]) != kDatasetFormatVersion)
        throw ParseError("unsupported format_version " + keys["format_version"], lineno);
      ds.meta.n_qubits = static_cast<int>(parse_int(keys["N_q"]));
      ds.meta.n_u = static_cast<int>(parse_int(keys["N_u"]));
      ds.meta.n_s = keys["N_s"] == "inf" ? kExactShots : static_cast<int>(parse_int(keys["N_s"]));
      ds.meta.kprimes.clear();
      std::stringstream ks(keys["kprimes"]);
      std::string tok;
      while (std::getline(ks, tok, ','))
        if (!tok.empty()) ds.meta.kprimes.push_back(static_cast<int>(parse_int(tok)));
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (ds.meta.n_qubits < 1 || ds.meta.n_qubits > kMaxQubits) throw ParseError("N_q out of range", lineno);
    if (keys.count("variant")) ds.meta.variant = keys["variant"];
    for (const auto& [k, v] : keys)
      if (k != "format_version" && k != "N_q" && k != "N_u" && k != "N_s" && k != "kprimes" && k != "variant")
        ds.header[k] = v;
    meta_ready = true;
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (meta_ready) throw ParseError("header line after data rows", lineno);
      std::string body = line.substr(1);
      const auto start = body.find_first_not_of(' ');
      body = start == std::string::npos ? "" : body.substr(start);
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ParseError("header line without '='", lineno);
      keys[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (!meta_ready) finish_header();
    std::vector<double> row;
    std::size_t pos = line.find(',');
    const std::string label = line.substr(0, pos);
    if (label.empty()) throw ParseError("row " + std::to_string(ds.rows.size() + 1) + " has an empty label", lineno);
    while (pos != std::string::npos) {
      const std::size_t next = line.find(',', pos + 1);
      const std::string_view tok(line.data() + pos + 1, (next == std::string::npos ? line.size() : next) - pos - 1);
      try {
        row.push_back(parse_double(tok));
      } catch (const ArgumentError&) {
        throw ParseError("row " + std::to_string(ds.rows.size() + 1) + ": bad number '" + std::string(tok) + "'",
                         lineno);
      }
      pos = next;
    }
    if (row.size() != ds.meta.feature_dim())
      throw ParseError("row " + std::to_string(ds.rows.size() + 1) + " has " + std::to_string(row.size()) +
                           " features, expected " + std::to_string(ds.meta.feature_dim()),
                       lineno);
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(label);
  }
  if (!meta_ready) finish_header();
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path);
  return read_dataset(is);
}

}  // namespace designscope
