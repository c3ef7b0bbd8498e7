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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "designscope/ensembles.hpp"
#include "designscope/error.hpp"
#include "designscope/features.hpp"
#include "designscope/ml.hpp"
#include "designscope/otoc.hpp"

// Experiment commands behind the CLI. Each command takes a fully resolved
// options struct, writes its outputs, and records a manifest whose hash is
// embedded in every file it produces.

namespace designscope::harness {

/// Resolved configuration of one run. Output paths and the worker count are
/// not part of the hashed text: they cannot change any output byte.
class Manifest {
 public:
  Manifest(std::string command) { set("command", std::move(command)); }

  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  void set_unhashed(const std::string& key, std::string value) { unhashed_[key] = std::move(value); }

  std::string text() const {
    std::string s;
    for (const auto& [k, v] : entries_) s += k + "=" + v + "\n";
    return s;
  }

  /// FNV-1a 64 of text(), as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text()) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  void write(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os << "# manifest=" << hash() << "\n" << text();
    for (const auto& [k, v] : unhashed_) os << "# " << k << "=" << v << "\n";
  }

 private:
  std::map<std::string, std::string> entries_;
  std::map<std::string, std::string> unhashed_;
};

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(static_cast<int>(parse_int(tok)));
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(parse_double(tok));
  return out;
}

inline std::string shots_to_string(int n_s) { return n_s == kExactShots ? "inf" : std::to_string(n_s); }

inline int parse_shots(const std::string& s) {
  if (s == "inf" || s == "exact") return kExactShots;
  const long long v = parse_int(s);
  if (v < 1) throw UsageError("--ns must be >= 1 or 'inf'");
  return static_cast<int>(v);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& manifest_hash, const std::vector<std::string>& columns)
      : os_(path, std::ios::binary) {
    if (!os_) throw Error("cannot write " + path);
    os_ << "# manifest=" << manifest_hash << "\n";
    row(columns);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
  }

  void comment(const std::string& text) { os_ << "# " << text << "\n"; }

 private:
  std::ofstream os_;
};

// gen

struct GenOptions {
  EnsembleSpec spec;
  int n_u = 100;
  int n_s = 100;
  std::vector<int> kprimes{4};
  int count = 10;
  std::uint64_t seed = 1;
  std::string label;  // defaults to the ensemble kind
  std::string out;
  int workers = 1;

  Manifest manifest() const {
    Manifest m("gen");
    m.set("ensemble", spec.to_string());
    m.set("nu", std::to_string(n_u));
    m.set("ns", shots_to_string(n_s));
    m.set("kprime", join_ints(kprimes));
    m.set("count", std::to_string(count));
    m.set("seed", std::to_string(seed));
    m.set("label", label.empty() ? to_string(spec.kind) : label);
    m.set_unhashed("workers", std::to_string(workers));
    return m;
  }
};

inline Dataset run_gen(const GenOptions& o) {
  if (o.n_u < 1) throw UsageError("--nu must be >= 1");
  if (o.count < 1) throw UsageError("--count must be >= 1");
  if (o.kprimes.empty()) throw UsageError("--kprime needs at least one value");
  const Manifest man = o.manifest();
  Dataset ds = generate_dataset(o.spec, o.n_u, o.n_s, o.kprimes, o.count, o.seed, o.workers,
                                o.label.empty() ? to_string(o.spec.kind) : o.label);
  ds.header["manifest"] = man.hash();
  if (!o.out.empty()) {
    save_dataset(ds, o.out);
    man.write(o.out + ".manifest");
  }
  return ds;
}

// train

struct TrainOptions {
  // Each split may span several files (typically one per class); they are
  // concatenated in order.
  std::vector<std::string> train_paths;
  std::vector<std::string> valid_paths;
  std::vector<std::string> test_paths;  // optional
  Algo algo = Algo::MLP;
  TrainConfig cfg;
  int n_models = 10;
  std::uint64_t seed = 1;
  std::string out_dir;
  int workers = 1;

  Manifest manifest(const Dataset& train, const Dataset& valid, const Dataset* test) const {
    Manifest m("train");
    m.set("algo", to_string(algo));
    m.set("lr", format_double(cfg.learning_rate));
    m.set("batch", std::to_string(cfg.batch_size));
    m.set("epochs", std::to_string(cfg.epochs));
    m.set("l2", format_double(cfg.l2));
    m.set("hidden1", std::to_string(cfg.hidden1));
    m.set("hidden2", std::to_string(cfg.hidden2));
    m.set("models", std::to_string(n_models));
    m.set("seed", std::to_string(seed));
    m.set("train", train.header.at("manifest"));
    m.set("valid", valid.header.at("manifest"));
    if (test) m.set("test", test->header.at("manifest"));
    m.set_unhashed("workers", std::to_string(workers));
    return m;
  }
};

inline std::string model_path(const std::string& dir, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "model_%02zu.txt", i);
  return (std::filesystem::path(dir) / buf).string();
}

/// Loads and concatenates dataset files. The "manifest" header of the result
/// joins the per-file manifest hashes.
inline Dataset load_concat(const std::vector<std::string>& paths, const std::string& what) {
  if (paths.empty()) throw UsageError("no " + what + " files");
  Dataset all;
  std::string tags;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    Dataset d = load_dataset(paths[i]);
    const auto it = d.header.find("manifest");
    tags += (i ? "+" : "") + (it == d.header.end() ? std::string("unknown") : it->second);
    all = i == 0 ? std::move(d) : concat(all, d);
  }
  all.header["manifest"] = tags;
  return all;
}

inline ClassifierReport run_train(const TrainOptions& o) {
  const Dataset train = load_concat(o.train_paths, "train");
  const Dataset valid = load_concat(o.valid_paths, "valid");
  std::optional<Dataset> test;
  if (!o.test_paths.empty()) test = load_concat(o.test_paths, "test");
  require_compatible(train.meta, valid.meta, "train/valid");
  if (test) require_compatible(train.meta, test->meta, "train/test");
  const Manifest man = o.manifest(train, valid, test ? &*test : nullptr);
  ClassifierReport rep =
      ensemble_protocol(train, valid, test ? &*test : nullptr, o.algo, o.cfg, o.n_models, o.seed, o.workers);
  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    for (std::size_t i = 0; i < rep.models.size(); ++i) save_classifier(rep.models[i], model_path(o.out_dir, i));
    CsvWriter csv((std::filesystem::path(o.out_dir) / "report.csv").string(), man.hash(),
                  {"split", "mean", "std", "accuracies"});
    const auto emit = [&](const std::string& name, const std::vector<double>& acc) {
      if (acc.empty()) return;
      const SummaryStat s = summarize(acc);
      std::string all;
      for (std::size_t i = 0; i < acc.size(); ++i) all += (i ? ";" : "") + format_double(acc[i]);
      csv.row({name, format_double(s.mean), format_double(s.stddev), all});
    };
    emit("train", rep.train_accuracy);
    emit("valid", rep.valid_accuracy);
    emit("test", rep.test_accuracy);
    man.write((std::filesystem::path(o.out_dir) / "manifest.txt").string());
  }
  return rep;
}

inline std::vector<Classifier> load_models(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("model_", 0) == 0 && e.path().extension() == ".txt") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw Error("no model_*.txt files in " + dir);
  std::vector<Classifier> models;
  for (const auto& p : paths) models.push_back(load_classifier(p));
  for (const auto& m : models) require_compatible(models.front().meta, m.meta, "model set");
  return models;
}

// eval

struct EvalOptions {
  std::string models_dir;
  std::vector<std::string> data_paths;
  std::string out;
};

struct EvalRow {
  std::string dataset;
  SummaryStat accuracy;
  SummaryStat p_rc;
};

inline std::vector<EvalRow> run_eval(const EvalOptions& o) {
  const std::vector<Classifier> models = load_models(o.models_dir);
  Manifest man("eval");
  man.set("models", o.models_dir);
  std::vector<EvalRow> out;
  for (const auto& path : o.data_paths) {
    const Dataset ds = load_dataset(path);
    const auto it = ds.header.find("manifest");
    man.set("data:" + std::filesystem::path(path).filename().string(), it == ds.header.end() ? "unknown" : it->second);
    std::vector<double> acc, prc;
    for (const auto& m : models) {
      acc.push_back(evaluate_accuracy(m, ds));
      prc.push_back(compute_p_rc(m, ds));
    }
    out.push_back({path, summarize(acc), summarize(prc)});
  }
  if (!o.out.empty()) {
    CsvWriter csv(o.out, man.hash(), {"dataset", "accuracy_mean", "accuracy_std", "p_rc_mean", "p_rc_std"});
    for (const auto& r : out)
      csv.row({std::filesystem::path(r.dataset).filename().string(), format_double(r.accuracy.mean),
               format_double(r.accuracy.stddev), format_double(r.p_rc.mean), format_double(r.p_rc.stddev)});
  }
  return out;
}

// sweep

struct SweepOptions {
  std::string models_dir;
  EnsembleKind kind = EnsembleKind::LRC;
  std::vector<int> params;   // depths D, or iterations I for RDC
  std::vector<double> ps{};  // noise / measurement ratios for NOISY_LRC / MONIT_LRC
  int count = 20;
  std::uint64_t seed = 1;
  std::string out;
  int workers = 1;
};

struct SweepRow {
  int param = 0;
  std::optional<double> p;
  SummaryStat p_rc;
};

inline std::vector<int> int_range(int from, int to, int step) {
  if (step < 1) throw UsageError("--step must be >= 1");
  if (to < from) throw UsageError("--to must be >= --from");
  std::vector<int> v;
  for (int x = from; x <= to; x += step) v.push_back(x);
  return v;
}

inline EnsembleSpec sweep_point_spec(EnsembleKind kind, int n, int param, std::optional<double> p) {
  switch (kind) {
    case EnsembleKind::LRC: return EnsembleSpec::lrc(n, param);
    case EnsembleKind::RDC: return EnsembleSpec::rdc(n, param);
    case EnsembleKind::NOISY_LRC: return EnsembleSpec::noisy_lrc(n, param, p.value());
    case EnsembleKind::MONIT_LRC: return EnsembleSpec::monit_lrc(n, param, p.value());
    default: throw UsageError("sweep kind must be lrc, rdc, noisy_lrc or monit_lrc");
  }
}

/// P_RC of every model at each parameter point of the probe family, using
/// the generation settings (N_q, N_u, N_s, K') of the models' training data.
inline std::vector<SweepRow> run_sweep(const SweepOptions& o, const std::vector<Classifier>& models) {
  if (models.empty()) throw ArgumentError("no models");
  if (o.params.empty()) throw UsageError("empty parameter range");
  const FeatureMeta& meta = models.front().meta;
  if (meta.variant != "moments") throw CompatibilityError("sweeps need moment-feature models");
  const bool grid = o.kind == EnsembleKind::NOISY_LRC || o.kind == EnsembleKind::MONIT_LRC;
  if (grid && o.ps.empty()) throw UsageError("--p is required for noisy_lrc / monit_lrc sweeps");
  if (!grid && !o.ps.empty()) throw UsageError("--p only applies to noisy_lrc / monit_lrc sweeps");
  std::vector<std::pair<int, std::optional<double>>> points;
  for (int param : o.params) {
    if (grid) {
      for (double p : o.ps) points.emplace_back(param, p);
    } else {
      points.emplace_back(param, std::nullopt);
    }
  }
  std::vector<SweepRow> rows;
  const RngStream root(o.seed, 0x53574545ULL);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto [param, p] = points[k];
    const EnsembleSpec spec = sweep_point_spec(o.kind, meta.n_qubits, param, p);
    const Dataset probe = generate_dataset(spec, meta.n_u, meta.n_s, meta.kprimes, o.count,
                                           root.substream(k).next_u64(), o.workers, to_string(o.kind));
    std::vector<double> prc;
    for (const auto& m : models) prc.push_back(compute_p_rc(m, probe));
    rows.push_back({param, p, summarize(prc)});
  }
  return rows;
}

inline std::vector<SweepRow> run_sweep(const SweepOptions& o) {
  const std::vector<Classifier> models = load_models(o.models_dir);
  std::vector<SweepRow> rows = run_sweep(o, models);
  if (!o.out.empty()) {
    Manifest man("sweep");
    man.set("kind", to_string(o.kind));
    man.set("params", join_ints(o.params));
    man.set("p", join_doubles(o.ps));
    man.set("count", std::to_string(o.count));
    man.set("seed", std::to_string(o.seed));
    // Identify the model set by the hash of its parameter files.
    std::string model_bytes;
    for (const auto& e : std::filesystem::directory_iterator(o.models_dir)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("model_", 0) == 0) model_bytes += name;
    }
    man.set("models", std::to_string(std::hash<std::string>{}(model_bytes)) + ":" + std::to_string(models.size()) +
                          ":" + models.front().meta.describe());
    man.set_unhashed("workers", std::to_string(o.workers));
    const std::string param_name = o.kind == EnsembleKind::RDC ? "I" : "D";
    CsvWriter csv(o.out, man.hash(), {"kind", param_name, "p", "p_rc_mean", "p_rc_std"});
    for (const auto& r : rows)
      csv.row({to_string(o.kind), std::to_string(r.param), r.p ? format_double(*r.p) : "", format_double(r.p_rc.mean),
               format_double(r.p_rc.stddev)});
    man.write(o.out + ".manifest");
  }
  return rows;
}

// pca

struct PcaOptions {
  std::string reference_path;
  std::vector<std::string> probe_paths;
  std::string out;
};

struct PcaResult {
  PcaModel model;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> points;  // per dataset name
};

/// Fits z-score + PCA on the reference set and projects the reference and
/// every probe into the first two principal axes.
inline PcaResult run_pca(const PcaOptions& o) {
  const Dataset ref = load_dataset(o.reference_path);
  const NormalizationStats st = zscore_fit(ref);
  const Dataset ref_z = zscore_apply(ref, st);
  PcaResult res;
  res.model = pca_fit(ref_z, 2);
  Manifest man("pca");
  const auto tag = [](const Dataset& d) {
    const auto it = d.header.find("manifest");
    return it == d.header.end() ? std::string("unknown") : it->second;
  };
  man.set("reference", tag(ref));
  res.points.emplace_back("reference", pca_project(ref_z, res.model));
  for (std::size_t i = 0; i < o.probe_paths.size(); ++i) {
    const Dataset probe = load_dataset(o.probe_paths[i]);
    require_compatible(ref.meta, probe.meta, "PCA probe");
    man.set("probe" + std::to_string(i), tag(probe));
    res.points.emplace_back(std::filesystem::path(o.probe_paths[i]).stem().string(),
                            pca_project(zscore_apply(probe, st), res.model));
  }
  if (!o.out.empty()) {
    CsvWriter csv(o.out, man.hash(), {"dataset", "PC1", "PC2"});
    csv.comment("explained_variance_ratio=" + format_double(res.model.explained_variance_ratio(0)) + "," +
                format_double(res.model.explained_variance_ratio(1)));
    for (const auto& [name, pts] : res.points)
      for (Eigen::Index r = 0; r < pts.rows(); ++r) csv.row({name, format_double(pts(r, 0)), format_double(pts(r, 1))});
  }
  return res;
}

// otoc

struct OtocOptions {
  OtocConfig cfg;
  int count = 10;
  std::uint64_t seed = 1;
  std::string out;
  int workers = 1;
};

inline Dataset run_otoc(const OtocOptions& o) {
  Manifest man("otoc");
  man.set("ensemble", o.cfg.ensemble.to_string());
  man.set("m", std::to_string(o.cfg.m));
  man.set("variant", to_string(o.cfg.variant));
  man.set("a", std::string(1, "IXYZ"[static_cast<int>(o.cfg.a)]));
  man.set("b", std::string(1, "IXYZ"[static_cast<int>(o.cfg.b)]));
  man.set("count", std::to_string(o.count));
  man.set("seed", std::to_string(o.seed));
  man.set_unhashed("workers", std::to_string(o.workers));
  Dataset ds = otoc_dataset(o.cfg, o.count, o.seed, o.workers);
  ds.header["manifest"] = man.hash();
  if (!o.out.empty()) {
    save_dataset(ds, o.out);
    man.write(o.out + ".manifest");
  }
  return ds;
}

// bounds

struct BoundsOptions {
  int t = 3;
  int n = 7;
  double epsilon = 1.0;
  double c = 1.0;
};

inline std::string run_bounds(const BoundsOptions& o) {
  std::ostringstream os;
  os << "t=" << o.t << " n=" << o.n << " eps=" << format_double(o.epsilon) << " c=" << format_double(o.c) << "\n";
  os << "lrc_depth_bound=" << format_double(lrc_design_depth_bound({o.t, o.n, o.epsilon, o.c}))
     << "  # D >= c t^9 (n t + log2(1/eps)); c is an unspecified constant\n";
  try {
    os << "rdc_iteration_bound=" << format_double(rdc_design_iteration_bound(o.t, o.n, o.epsilon))
       << "  # I >= (t n + log2(1/eps)) / (n - 2 log2 t!); stated for t = o(sqrt(n))\n";
  } catch (const DomainError& e) {
    os << "rdc_iteration_bound=inapplicable  # " << e.what() << "\n";
  }
  return os.str();
}

}  // namespace designscope::harness
