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

// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number ("acceptance 3 7"); DESIGNSCOPE_WORKERS sets the thread
// count. Exits nonzero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "designscope/ml.hpp"
#include "designscope/otoc.hpp"
#include "designscope/parallel.hpp"

using namespace designscope;

namespace {

int g_workers = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

struct Split {
  Dataset train, valid, test;
};

Dataset slice(const Dataset& d, std::size_t from, std::size_t to) {
  Dataset out = d;
  out.rows.assign(d.rows.begin() + static_cast<std::ptrdiff_t>(from), d.rows.begin() + static_cast<std::ptrdiff_t>(to));
  out.labels.assign(d.labels.begin() + static_cast<std::ptrdiff_t>(from),
                    d.labels.begin() + static_cast<std::ptrdiff_t>(to));
  return out;
}

// Balanced RC-vs-HAAR split with the given per-class row counts.
Split rc_vs_haar(const EnsembleSpec& rc, int n_u, int n_s, int kprime, std::size_t train, std::size_t valid,
                 std::size_t test, std::uint64_t seed) {
  const std::vector<int> k{kprime};
  const int count = static_cast<int>(train + valid + test);
  const Dataset a = generate_dataset(rc, n_u, n_s, k, count, seed, g_workers, kLabelRc);
  const Dataset b = generate_dataset(EnsembleSpec::haar(rc.n_qubits), n_u, n_s, k, count, seed + 1, g_workers,
                                     kLabelHaar);
  Split s;
  s.train = concat(slice(a, 0, train), slice(b, 0, train));
  s.valid = concat(slice(a, train, train + valid), slice(b, train, train + valid));
  s.test = concat(slice(a, train + valid, train + valid + test), slice(b, train + valid, train + valid + test));
  return s;
}

TrainConfig config(double lr, int epochs, int batch) {
  TrainConfig c;
  c.learning_rate = lr;
  c.epochs = epochs;
  c.batch_size = batch;
  return c;
}

double mean_p_rc(const std::vector<Classifier>& models, const Dataset& probe) {
  double s = 0.0;
  for (const auto& m : models) s += compute_p_rc(m, probe);
  return s / static_cast<double>(models.size());
}

// 1. Stabilizer-vs-Haar separation at n = 4 with logistic regression.
Outcome criterion1() {
  const Split s = rc_vs_haar(EnsembleSpec::rc(4), 500, 500, 4, 2000, 500, 500, 101);
  const ClassifierReport r = ensemble_protocol(s.train, s.valid, &s.test, Algo::Logistic, config(1e-2, 100, 128), 10,
                                               1, g_workers);
  const SummaryStat t = r.test();
  return {t.mean >= 0.95, "logistic test accuracy " + fmt("%.4f", t.mean) + " +- " + fmt("%.4f", t.stddev) +
                              " (need >= 0.95)"};
}

// 2. Second moments cannot separate a 2-design from Haar.
Outcome criterion2() {
  const Split s = rc_vs_haar(EnsembleSpec::rc(4, Preprocessing::haar(12345)), 500, 500, 2, 2000, 500, 500, 201);
  const ClassifierReport r = ensemble_protocol(s.train, s.valid, &s.test, Algo::MLP, TrainConfig{}, 10, 2, g_workers);
  const SummaryStat t = r.test();
  return {std::abs(t.mean - 0.5) <= 0.07,
          "MLP test accuracy " + fmt("%.4f", t.mean) + " +- " + fmt("%.4f", t.stddev) + " (need 0.50 +- 0.07)"};
}

// 3. With fixed preprocessing and k' = 4, the mean feature level carries no
// usable signal at N_u = 1, while the spread does; only the MLP can use it.
Outcome criterion3() {
  const Split s = rc_vs_haar(EnsembleSpec::rc(5, Preprocessing::haar(12345)), 1, 1000, 4, 160000, 20000, 20000, 301);
  const ClassifierReport mlp =
      ensemble_protocol(s.train, s.valid, &s.test, Algo::MLP, config(1e-3, 10, 100), 10, 3, g_workers);
  const ClassifierReport lr =
      ensemble_protocol(s.train, s.valid, &s.test, Algo::Logistic, config(1e-2, 100, 128), 10, 3, g_workers);
  const double m = mlp.test().mean, l = lr.test().mean;
  return {m - l >= 0.05 && l <= 0.55, "MLP " + fmt("%.4f", m) + " +- " + fmt("%.4f", mlp.test().stddev) +
                                          ", logistic " + fmt("%.4f", l) + " +- " + fmt("%.4f", lr.test().stddev) +
                                          ", gap " + fmt("%.4f", m - l) + " (need gap >= 0.05, logistic <= 0.55)"};
}

// Per-feature sample mean and standard error of exact-mode features over
// rows x n_u instances.
struct FeatureStats {
  std::vector<double> mean, se;
};

FeatureStats exact_feature_stats(const EnsembleSpec& spec, const std::vector<int>& kprimes, int rows, int n_u,
                                 std::uint64_t seed) {
  const Dataset ds = generate_dataset(spec, n_u, kExactShots, kprimes, rows, seed, g_workers, "x");
  const std::size_t dim = ds.dim();
  FeatureStats st{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (const auto& r : ds.rows)
    for (std::size_t j = 0; j < dim; ++j) st.mean[j] += r[j] / rows;
  for (const auto& r : ds.rows)
    for (std::size_t j = 0; j < dim; ++j) st.se[j] += (r[j] - st.mean[j]) * (r[j] - st.mean[j]);
  for (double& v : st.se) v = std::sqrt(v / (rows - 1.0) / rows);
  return st;
}

// 4. Exact-mode moments against the symmetric-subspace values.
Outcome criterion4() {
  const double d = 16.0;
  const double j2 = 1.0 / (d + 1.0), j4 = 3.0 / ((d + 1.0) * (d + 3.0));
  // 100 rows of 100 instances: N_u = 10^4 in total.
  const FeatureStats haar = exact_feature_stats(EnsembleSpec::haar(4), {2, 4}, 100, 100, 401);
  const FeatureStats rc = exact_feature_stats(EnsembleSpec::rc(4, Preprocessing::haar(12345)), {2}, 100, 100, 402);
  double worst = 0.0;
  for (std::size_t j = 0; j < haar.mean.size(); ++j)
    worst = std::max(worst, std::abs(haar.mean[j] - (j < 15 ? j2 : j4)) / haar.se[j]);
  double worst_rc = 0.0;
  for (std::size_t j = 0; j < rc.mean.size(); ++j) worst_rc = std::max(worst_rc, std::abs(rc.mean[j] - j2) / rc.se[j]);
  return {worst <= 4.0 && worst_rc <= 4.0, "HAAR k'=2,4 worst |mean - exact| = " + fmt("%.2f", worst) +
                                               " SE, RC(fixed) k'=2 worst = " + fmt("%.2f", worst_rc) +
                                               " SE (need <= 4)"};
}

// 5. Stabilizer outcome probabilities are powers of two.
Outcome criterion5() {
  RngStream rng(501, 0);
  int bad = 0, mismatched = 0;
  for (int i = 0; i < 1000; ++i) {
    const CircuitInstance inst = draw_instance(EnsembleSpec::rc(4), rng);
    const std::vector<double> sv = output_state(inst).probabilities();
    const std::vector<double> tab = stabilizer_outcome_distribution(*inst.tableau);
    for (std::size_t x = 0; x < sv.size(); ++x) {
      if (std::abs(sv[x] - tab[x]) > 1e-10) ++mismatched;
      if (sv[x] <= 1e-10) continue;
      bool ok = false;
      for (int a = 0; a <= 4; ++a) ok = ok || std::abs(sv[x] - std::ldexp(1.0, -a)) <= 1e-10;
      if (!ok) ++bad;
    }
  }
  return {bad == 0 && mismatched == 0, std::to_string(bad) + " nonzero probabilities off 2^-a, " +
                                           std::to_string(mismatched) +
                                           " statevector/tableau mismatches over 1000 Cliffords"};
}

// 6. RDC approaches Haar with more iterations.
Outcome criterion6() {
  const double h4 = 3.0 / (17.0 * 19.0);
  std::vector<double> dev;
  std::string curve;
  for (int it = 1; it <= 6; ++it) {
    const FeatureStats st = exact_feature_stats(EnsembleSpec::rdc(4, it), {4}, 40, 100, 600 + it);
    double m = 0.0;
    for (double v : st.mean) m += v / st.mean.size();
    dev.push_back(std::abs(m / h4 - 1.0));
    curve += " I=" + std::to_string(it) + ":" + fmt("%.3f", dev.back());
  }
  bool converging = true;
  for (std::size_t i = 1; i < dev.size(); ++i) converging = converging && dev[i] < dev[i - 1];

  const Split s = rc_vs_haar(EnsembleSpec::rc(4, Preprocessing::haar(7)), 500, 500, 4, 2000, 500, 500, 611);
  const ClassifierReport r =
      ensemble_protocol(s.train, s.valid, &s.test, Algo::Logistic, config(1e-2, 100, 128), 10, 6, g_workers);
  const std::vector<int> k{4};
  const double p2 = mean_p_rc(r.models, generate_dataset(EnsembleSpec::rdc(4, 2), 500, 500, k, 100, 621, g_workers, "RDC"));
  const double p5 = mean_p_rc(r.models, generate_dataset(EnsembleSpec::rdc(4, 5), 500, 500, k, 100, 622, g_workers, "RDC"));
  return {converging && p5 < p2, "relative k'=4 deviation from Haar" + curve + "; P_RC(I=2) " + fmt("%.3f", p2) +
                                     ", P_RC(I=5) " + fmt("%.3f", p5) + " (classifier test acc " +
                                     fmt("%.3f", r.test().mean) + ")"};
}

// Unitary of one gate record on n qubits, column by column.
Eigen::MatrixXcd record_matrix(const GateRecord& g, int n) {
  const Eigen::Index d = Eigen::Index{1} << n;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    Eigen::VectorXcd col = u.col(c);
    apply_gate_record(col, g);
    u.col(c) = col;
  }
  return u;
}

// Outcome distribution of a noisy LRC instance under the exact channel.
Eigen::VectorXd noisy_channel_distribution(const CircuitInstance& inst) {
  const int n = inst.spec.n_qubits;
  const double p = *inst.spec.p;
  const Eigen::Index d = Eigen::Index{1} << n;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  rho(0, 0) = 1.0;
  for (int layer = 1; layer <= *inst.spec.depth; ++layer) {
    for (const auto& g : inst.program)
      if (g.layer == layer) {
        const Eigen::MatrixXcd u = record_matrix(g, n);
        rho = u * rho * u.adjoint();
      }
    for (int q = 0; q < n; ++q) {
      Eigen::MatrixXcd acc = (1.0 - 0.75 * p) * rho;
      for (const Gate1& pauli : {gates::x(), gates::y(), gates::z()}) {
        Eigen::MatrixXcd e = Eigen::MatrixXcd::Identity(d, d);
        for (Eigen::Index c = 0; c < d; ++c) {
          Eigen::VectorXcd col = e.col(c);
          kernels::apply_1q(col, pauli, q);
          e.col(c) = col;
        }
        acc += 0.25 * p * e * rho * e.adjoint();
      }
      rho = acc;
    }
  }
  return rho.diagonal().real();
}

// 7. Noisy-LRC dip, plus trajectories against the exact channel.
Outcome criterion7() {
  double worst_sigma = 0.0;
  for (int n : {1, 2})
    for (double p : {1e-3, 0.05, 0.3}) {
      const CircuitInstance inst = draw_instance_from_seed(EnsembleSpec::noisy_lrc(n, 3, p), 700 + n);
      RngStream rng(701, static_cast<std::uint64_t>(n));
      const int shots = 200000;
      const auto counts = run_instance_counts(inst, shots, rng);
      const Eigen::VectorXd probs = noisy_channel_distribution(inst);
      for (std::size_t x = 0; x < counts.size(); ++x) {
        const double q = probs(static_cast<Eigen::Index>(x));
        const double sigma = std::sqrt(std::max(q * (1.0 - q), 1e-12) / shots);
        worst_sigma = std::max(worst_sigma, std::abs(counts[x] / static_cast<double>(shots) - q) / sigma);
      }
    }

  const Split s = rc_vs_haar(EnsembleSpec::rc(5, Preprocessing::haar(86)), 500, 500, 4, 2000, 500, 500, 711);
  const ClassifierReport r =
      ensemble_protocol(s.train, s.valid, &s.test, Algo::MLP, config(1e-3, 30, 100), 10, 7, g_workers);
  const std::vector<int> depths{4, 6, 8, 12, 16, 24, 32, 48, 64};
  const std::vector<int> k{4};
  std::vector<double> prc;
  std::string curve;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    const Dataset probe = generate_dataset(EnsembleSpec::noisy_lrc(5, depths[i], 1e-3), 500, 500, k, 40,
                                           720 + static_cast<std::uint64_t>(i), g_workers, "NOISY_LRC");
    prc.push_back(mean_p_rc(r.models, probe));
    curve += " D=" + std::to_string(depths[i]) + ":" + fmt("%.3f", prc.back());
  }
  const double interior = *std::min_element(prc.begin() + 1, prc.end() - 1);
  const bool dip = interior < prc.front() && interior < prc.back();
  return {dip && worst_sigma <= 4.0, "P_RC" + curve + "; trajectory vs channel worst " + fmt("%.2f", worst_sigma) +
                                         " sigma (n=1,2)"};
}

std::string serialized(const Dataset& ds) {
  std::ostringstream os;
  write_dataset(os, ds);
  return os.str();
}

// 8. Property checks: gradients, norms, split/normalization, determinism,
// worker independence.
Outcome criterion8() {
  std::vector<std::string> failed;
  RngStream rng(801, 0);

  double grad = 0.0;
  for (int t = 0; t < 20; ++t) {
    MlpModel m = MlpModel::initialized(6, 5, 4, rng);
    std::vector<double> x(6);
    for (double& v : x) v = rng.normal();
    grad = std::max(grad, gradient_check(m, x, t % 2));
  }
  if (!(grad < 1e-5)) failed.push_back("gradient " + fmt("%.2e", grad));

  StateVector sv = StateVector::zero(6);
  for (int i = 0; i < 1000; ++i) {
    const int a = static_cast<int>(rng.below(6));
    const int b = (a + 1 + static_cast<int>(rng.below(5))) % 6;
    kernels::apply_2q(sv.mutable_amplitudes(), sample_haar_gate2(rng), a, b);
  }
  const double norm_err = std::abs(sv.norm_squared() - 1.0);
  if (!(norm_err < 1e-10)) failed.push_back("norm " + fmt("%.2e", norm_err));

  const std::vector<int> k{2, 4};
  const Dataset a = generate_dataset(EnsembleSpec::lrc(4, 6), 20, 100, k, 30, 802, 1, kLabelRc);
  const Dataset b = generate_dataset(EnsembleSpec::haar(4), 20, 100, k, 30, 803, 1, kLabelHaar);
  RngStream split_rng(804, 0);
  const auto [half1, half2] = split_shuffle(a, b, split_rng);
  std::vector<std::vector<double>> before = concat(a, b).rows, after = concat(half1, half2).rows;
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  if (before != after || half1.size() != 30 || half2.size() != 30) failed.push_back("split multiset");
  const Dataset z = zscore_apply(half1, zscore_fit(half1));
  double zerr = 0.0;
  for (std::size_t j = 0; j < z.dim(); ++j) {
    double m = 0.0, v = 0.0;
    for (const auto& r : z.rows) m += r[j] / z.size();
    for (const auto& r : z.rows) v += (r[j] - m) * (r[j] - m) / z.size();
    zerr = std::max({zerr, std::abs(m), std::abs(v - 1.0)});
  }
  if (!(zerr < 1e-9)) failed.push_back("z-score " + fmt("%.2e", zerr));

  const EnsembleSpec noisy = EnsembleSpec::noisy_lrc(4, 5, 0.01);
  const std::string s1 = serialized(generate_dataset(noisy, 10, 50, k, 8, 805, 1, "N"));
  const std::string s2 = serialized(generate_dataset(noisy, 10, 50, k, 8, 805, 1, "N"));
  const std::string s4 = serialized(generate_dataset(noisy, 10, 50, k, 8, 805, 4, "N"));
  if (s1 != s2) failed.push_back("determinism");
  if (s1 != s4) failed.push_back("workers (features)");
  const Dataset pa = concat(a, b);
  const ClassifierReport r1 = ensemble_protocol(pa, pa, nullptr, Algo::MLP, config(1e-3, 5, 16), 4, 806, 1);
  const ClassifierReport r4 = ensemble_protocol(pa, pa, nullptr, Algo::MLP, config(1e-3, 5, 16), 4, 806, 4);
  if (r1.valid_accuracy != r4.valid_accuracy) failed.push_back("workers (training)");
  OtocConfig oc;
  oc.ensemble = EnsembleSpec::rc(3);
  oc.m = 3;
  if (otoc_dataset(oc, 6, 807, 1) != otoc_dataset(oc, 6, 807, 4)) failed.push_back("workers (otoc)");

  std::string detail = "gradient " + fmt("%.1e", grad) + ", norm " + fmt("%.1e", norm_err) + ", z-score " +
                       fmt("%.1e", zerr) + ", determinism and 1-vs-4 workers";
  for (const auto& f : failed) detail += "; FAILED " + f;
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  g_workers = resolve_workers(1);
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s  %s  [%.0f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
