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

// designscope: experiment harness CLI.
//
//   designscope <command> [--config FILE] [--flag value ...]
//
// Config files hold key=value lines ('#' starts a comment); keys are long
// flag names without the dashes. Flags given on the command line win.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "designscope/harness.hpp"
#include "designscope/parallel.hpp"

namespace ds = designscope;
namespace hs = designscope::harness;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Turns a config file into --key value arguments.
std::vector<std::string> config_args(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ds::UsageError("cannot read config file " + path);
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ds::ParseError(path + ": expected key=value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ds::ParseError(path + ": empty key", lineno);
    out.push_back("--" + key);
    out.push_back(value);
  }
  return out;
}

// Config-file arguments go first so that command-line flags override them.
std::vector<std::string> expand_argv(int argc, char** argv) {
  std::vector<std::string> user(argv + 1, argv + argc);
  std::vector<std::string> out;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < user.size(); ++i) {
    if (user[i] == "--config") {
      if (i + 1 >= user.size()) throw ds::UsageError("--config needs a file");
      from_file = config_args(user[i + 1]);
      ++i;
    } else if (user[i].rfind("--config=", 0) == 0) {
      from_file = config_args(user[i].substr(9));
    } else {
      out.push_back(user[i]);
    }
  }
  if (!from_file.empty() && !out.empty()) out.insert(out.begin() + 1, from_file.begin(), from_file.end());
  return out;
}

struct SpecFlags {
  std::string kind;
  int n = 4;
  int depth = -1;
  int iterations = -1;
  double p = -1.0;
  std::string preproc = "identity";

  void add(CLI::App* c) {
    c->add_option("--kind", kind, "rc, haar, lrc, rdc, noisy_lrc, monit_lrc")->required();
    c->add_option("--n", n, "number of qubits");
    c->add_option("--depth", depth, "circuit depth D (lrc families)");
    c->add_option("--iterations", iterations, "iterations I (rdc)");
    c->add_option("--p", p, "noise / measurement ratio");
    c->add_option("--preproc", preproc, "identity or fixed:<seed> (rc, haar)");
  }

  ds::EnsembleSpec build() const {
    ds::EnsembleSpec s;
    s.kind = ds::parse_ensemble_kind(kind);
    s.n_qubits = n;
    const bool lrc = ds::is_lrc_family(s.kind);
    if (lrc != (depth >= 0)) throw ds::UsageError(lrc ? "--depth is required for " + kind : "--depth only applies to lrc families");
    if ((s.kind == ds::EnsembleKind::RDC) != (iterations >= 0))
      throw ds::UsageError(s.kind == ds::EnsembleKind::RDC ? "--iterations is required for rdc" : "--iterations only applies to rdc");
    const bool needs_p = s.kind == ds::EnsembleKind::NOISY_LRC || s.kind == ds::EnsembleKind::MONIT_LRC;
    if (needs_p != (p >= 0.0)) throw ds::UsageError(needs_p ? "--p is required for " + kind : "--p does not apply to " + kind);
    if (!ds::is_unitary_kind(s.kind) || s.kind == ds::EnsembleKind::LRC || s.kind == ds::EnsembleKind::RDC) {
      if (preproc != "identity") throw ds::UsageError("--preproc only applies to rc and haar");
    }
    if (depth >= 0) s.depth = depth;
    if (iterations >= 0) s.iterations = iterations;
    if (p >= 0.0) s.p = p;
    s.preproc = ds::Preprocessing::parse(preproc);
    try {
      s.validate();
    } catch (const ds::Error& e) {
      throw ds::UsageError(e.what());
    }
    return s;
  }
};

int run(int argc, char** argv) {
  const std::vector<std::string> args = expand_argv(argc, argv);

  CLI::App app{"designscope: design-order classification of random quantum dynamics"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  int workers = 1;
  app.add_option("--workers", workers, "worker threads (DESIGNSCOPE_WORKERS overrides)");
  const auto add_workers = [&](CLI::App* c) { c->add_option("--workers", workers, "worker threads"); };

  // gen
  auto* gen = app.add_subcommand("gen", "generate a feature dataset");
  SpecFlags gen_spec;
  gen_spec.add(gen);
  hs::GenOptions gen_o;
  std::string gen_ns = "100", gen_kprime = "4";
  gen->add_option("--nu", gen_o.n_u, "circuit instances per feature vector");
  gen->add_option("--ns", gen_ns, "shots per instance, or inf");
  gen->add_option("--kprime", gen_kprime, "comma-separated moment orders");
  gen->add_option("--count", gen_o.count, "feature vectors");
  gen->add_option("--seed", gen_o.seed, "master seed");
  gen->add_option("--label", gen_o.label, "class label name (default: the kind)");
  gen->add_option("--out", gen_o.out, "output dataset file")->required();
  add_workers(gen);

  // train
  auto* train = app.add_subcommand("train", "train the 10-classifier ensemble");
  hs::TrainOptions tr_o;
  std::string tr_algo = "mlp";
  const auto all = CLI::MultiOptionPolicy::TakeAll;
  train->add_option("--train", tr_o.train_paths, "training file; repeat per class")->required()->multi_option_policy(all);
  train->add_option("--valid", tr_o.valid_paths, "validation file; repeat per class")->required()->multi_option_policy(all);
  train->add_option("--test", tr_o.test_paths, "test file; repeat per class")->multi_option_policy(all);
  train->add_option("--algo", tr_algo, "mlp, logistic, lsvm");
  train->add_option("--lr", tr_o.cfg.learning_rate);
  train->add_option("--batch", tr_o.cfg.batch_size);
  train->add_option("--epochs", tr_o.cfg.epochs);
  train->add_option("--l2", tr_o.cfg.l2);
  train->add_option("--hidden1", tr_o.cfg.hidden1);
  train->add_option("--hidden2", tr_o.cfg.hidden2);
  train->add_option("--models", tr_o.n_models);
  train->add_option("--seed", tr_o.seed);
  train->add_option("--out", tr_o.out_dir, "output directory")->required();
  add_workers(train);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate saved models on datasets");
  hs::EvalOptions ev_o;
  eval->add_option("--models", ev_o.models_dir)->required();
  eval->add_option("--data", ev_o.data_paths)->required()->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  eval->add_option("--out", ev_o.out)->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "P_RC over a family of probe ensembles");
  hs::SweepOptions sw_o;
  std::string sw_kind, sw_p;
  int sw_from = 0, sw_to = -1, sw_step = 1;
  sweep->add_option("--models", sw_o.models_dir)->required();
  sweep->add_option("--kind", sw_kind, "lrc, rdc, noisy_lrc, monit_lrc")->required();
  sweep->add_option("--from", sw_from)->required();
  sweep->add_option("--to", sw_to)->required();
  sweep->add_option("--step", sw_step);
  sweep->add_option("--p", sw_p, "comma-separated ratios (noisy_lrc, monit_lrc)");
  sweep->add_option("--count", sw_o.count, "probe feature vectors per point");
  sweep->add_option("--seed", sw_o.seed);
  sweep->add_option("--out", sw_o.out)->required();
  add_workers(sweep);

  // pca
  auto* pca = app.add_subcommand("pca", "2-D PCA projection");
  hs::PcaOptions pca_o;
  pca->add_option("--reference", pca_o.reference_path)->required();
  pca->add_option("--probe", pca_o.probe_paths)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  pca->add_option("--out", pca_o.out)->required();

  // otoc
  auto* otoc = app.add_subcommand("otoc", "OTOC-matrix dataset");
  SpecFlags ot_spec;
  ot_spec.add(otoc);
  hs::OtocOptions ot_o;
  std::string ot_variant = "alv", ot_a = "X", ot_b = "Y";
  otoc->add_option("--m", ot_o.cfg.m, "time steps (U^m)");
  otoc->add_option("--variant", ot_variant, "alv, cb, tr");
  otoc->add_option("--a", ot_a, "Pauli A (X, Y, Z)");
  otoc->add_option("--b", ot_b, "Pauli B (X, Y, Z)");
  otoc->add_option("--count", ot_o.count);
  otoc->add_option("--seed", ot_o.seed);
  otoc->add_option("--out", ot_o.out)->required();
  add_workers(otoc);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "analytic design-depth bounds");
  hs::BoundsOptions b_o;
  bounds->add_option("--t", b_o.t);
  bounds->add_option("--n", b_o.n);
  bounds->add_option("--eps", b_o.epsilon);
  bounds->add_option("--c", b_o.c);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  workers = ds::resolve_workers(workers);

  if (gen->parsed()) {
    gen_o.spec = gen_spec.build();
    gen_o.n_s = hs::parse_shots(gen_ns);
    gen_o.kprimes = hs::parse_int_list(gen_kprime);
    gen_o.workers = workers;
    const ds::Dataset d = hs::run_gen(gen_o);
    std::cout << "wrote " << d.rows.size() << " rows x " << d.meta.feature_dim() << " features to " << gen_o.out << "\n";
  } else if (train->parsed()) {
    tr_o.algo = ds::parse_algo(tr_algo);
    tr_o.workers = workers;
    const ds::ClassifierReport r = hs::run_train(tr_o);
    const auto show = [](const char* name, const std::vector<double>& acc) {
      if (acc.empty()) return;
      const ds::SummaryStat s = ds::summarize(acc);
      std::cout << name << " accuracy " << ds::format_double(s.mean) << " +- " << ds::format_double(s.stddev) << "\n";
    };
    show("train", r.train_accuracy);
    show("valid", r.valid_accuracy);
    show("test", r.test_accuracy);
  } else if (eval->parsed()) {
    for (const auto& row : hs::run_eval(ev_o))
      std::cout << row.dataset << " accuracy " << ds::format_double(row.accuracy.mean) << " P_RC "
                << ds::format_double(row.p_rc.mean) << "\n";
  } else if (sweep->parsed()) {
    sw_o.kind = ds::parse_ensemble_kind(sw_kind);
    sw_o.params = hs::int_range(sw_from, sw_to, sw_step);
    sw_o.ps = hs::parse_double_list(sw_p);
    sw_o.workers = workers;
    const auto rows = hs::run_sweep(sw_o);
    std::cout << "wrote " << rows.size() << " rows to " << sw_o.out << "\n";
  } else if (pca->parsed()) {
    const hs::PcaResult r = hs::run_pca(pca_o);
    std::cout << "explained variance " << ds::format_double(r.model.explained_variance_ratio(0)) << " "
              << ds::format_double(r.model.explained_variance_ratio(1)) << "\n";
  } else if (otoc->parsed()) {
    ot_o.cfg.ensemble = ot_spec.build();
    ot_o.cfg.variant = ds::parse_otoc_variant(ot_variant);
    ot_o.cfg.a = ds::parse_pauli(ot_a);
    ot_o.cfg.b = ds::parse_pauli(ot_b);
    ot_o.workers = workers;
    try {
      ot_o.cfg.validate();
    } catch (const ds::ArgumentError& e) {
      throw ds::UsageError(e.what());
    }
    const ds::Dataset d = hs::run_otoc(ot_o);
    std::cout << "wrote " << d.rows.size() << " rows x " << d.meta.feature_dim() << " features to " << ot_o.out << "\n";
  } else if (bounds->parsed()) {
    std::cout << hs::run_bounds(b_o);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ds::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
