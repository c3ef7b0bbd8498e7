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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "designscope/error.hpp"
#include "designscope/features.hpp"
#include "designscope/parallel.hpp"
#include "designscope/rng.hpp"

namespace designscope {

// Binary labels: RC -> 1, HAAR -> 0. A classifier output >= 0.5 (logit >= 0)
// means RC.
inline constexpr const char* kLabelRc = "RC";
inline constexpr const char* kLabelHaar = "HAAR";

inline int binary_label(const std::string& label) { return label == kLabelRc ? 1 : 0; }

enum class Algo { MLP, Logistic, LinearSVM };

inline std::string to_string(Algo a) {
  switch (a) {
    case Algo::MLP: return "mlp";
    case Algo::Logistic: return "logistic";
    case Algo::LinearSVM: return "lsvm";
  }
  return "?";
}

inline Algo parse_algo(std::string_view s) {
  if (s == "mlp" || s == "nn") return Algo::MLP;
  if (s == "logistic" || s == "lr") return Algo::Logistic;
  if (s == "lsvm" || s == "svm") return Algo::LinearSVM;
  throw ArgumentError("unknown algorithm '" + std::string(s) + "' (mlp, logistic, lsvm)");
}

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 128;
  int epochs = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double l2 = 1e-4;  // L2 weight penalty of the linear models
  int hidden1 = 0;   // 0: same as the input dimension
  int hidden2 = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be > 0");
    if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) throw ArgumentError("Adam betas must lie in (0,1)");
    if (!(adam_epsilon > 0.0)) throw ArgumentError("Adam epsilon must be > 0");
    if (!(l2 >= 0.0)) throw ArgumentError("l2 must be >= 0");
    if (hidden1 < 0 || hidden2 < 0) throw ArgumentError("hidden widths must be >= 0");
  }
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> valid_loss;
  std::vector<double> train_accuracy;
  std::vector<double> valid_accuracy;
};

/// Design matrix and 0/1 targets of a dataset.
struct Batch {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

inline Batch to_batch(const Dataset& ds) {
  Batch b;
  const auto d = static_cast<Eigen::Index>(ds.rows.empty() ? ds.dim() : ds.rows.front().size());
  b.x.resize(static_cast<Eigen::Index>(ds.size()), d);
  b.y.resize(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    b.x.row(r) = Eigen::Map<const Eigen::RowVectorXd>(ds.rows[i].data(), d);
    b.y(r) = binary_label(ds.labels[i]);
  }
  return b;
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

/// Adam state over a flat parameter vector.
class Adam {
 public:
  Adam(Eigen::Index size, const TrainConfig& cfg)
      : m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)), cfg_(cfg) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    params.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.adam_epsilon);
  }

 private:
  Eigen::VectorXd m_, v_;
  TrainConfig cfg_;
  int t_ = 0;
};

/// Fully-connected input -> h1 -> h2 -> 1 network: rectifier, rectifier,
/// logistic sigmoid. Parameters live in one flat vector laid out as
/// W1 (h1 x d), b1, W2 (h2 x h1), b2, w3 (h2), b3, matrices column-major.
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(int input_dim, int h1, int h2) : d_(input_dim), h1_(h1), h2_(h2) {
    if (input_dim < 1 || h1 < 1 || h2 < 1) throw SizeError("MLP layer widths must be >= 1");
    params_ = Eigen::VectorXd::Zero(param_count());
  }

  /// Glorot-uniform weights, zero biases.
  static MlpModel initialized(int input_dim, int h1, int h2, RngStream& rng) {
    MlpModel m(input_dim, h1, h2);
    const auto fill = [&](Eigen::Index offset, Eigen::Index count, int fan_in, int fan_out) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (Eigen::Index i = 0; i < count; ++i) m.params_(offset + i) = limit * (2.0 * rng.uniform() - 1.0);
    };
    fill(m.off_w1(), Eigen::Index{h1} * input_dim, input_dim, h1);
    fill(m.off_w2(), Eigen::Index{h2} * h1, h1, h2);
    fill(m.off_w3(), h2, h2, 1);
    return m;
  }

  int input_dim() const noexcept { return d_; }
  int hidden1() const noexcept { return h1_; }
  int hidden2() const noexcept { return h2_; }
  Eigen::Index param_count() const noexcept {
    return Eigen::Index{h1_} * d_ + h1_ + Eigen::Index{h2_} * h1_ + h2_ + h2_ + 1;
  }
  const Eigen::VectorXd& params() const noexcept { return params_; }
  Eigen::VectorXd& params() noexcept { return params_; }

  Eigen::Map<const Eigen::MatrixXd> w1() const { return {params_.data() + off_w1(), h1_, d_}; }
  Eigen::Map<const Eigen::VectorXd> b1() const { return {params_.data() + off_b1(), h1_}; }
  Eigen::Map<const Eigen::MatrixXd> w2() const { return {params_.data() + off_w2(), h2_, h1_}; }
  Eigen::Map<const Eigen::VectorXd> b2() const { return {params_.data() + off_b2(), h2_}; }
  Eigen::Map<const Eigen::VectorXd> w3() const { return {params_.data() + off_w3(), h2_}; }
  double b3() const { return params_(off_b3()); }

  Eigen::Map<Eigen::MatrixXd> w1() { return {params_.data() + off_w1(), h1_, d_}; }
  Eigen::Map<Eigen::VectorXd> b1() { return {params_.data() + off_b1(), h1_}; }
  Eigen::Map<Eigen::MatrixXd> w2() { return {params_.data() + off_w2(), h2_, h1_}; }
  Eigen::Map<Eigen::VectorXd> b2() { return {params_.data() + off_b2(), h2_}; }
  Eigen::Map<Eigen::VectorXd> w3() { return {params_.data() + off_w3(), h2_}; }
  double& b3() { return params_(off_b3()); }

  /// Pre-sigmoid output for each row of x.
  Eigen::VectorXd logits(const Eigen::MatrixXd& x) const {
    check_dim(x.cols());
    const Eigen::MatrixXd a1 = ((x * w1().transpose()).rowwise() + b1().transpose()).cwiseMax(0.0);
    const Eigen::MatrixXd a2 = ((a1 * w2().transpose()).rowwise() + b2().transpose()).cwiseMax(0.0);
    return (a2 * w3()).array() + b3();
  }

  double forward(std::span<const double> x) const {
    check_dim(static_cast<Eigen::Index>(x.size()));
    const Eigen::MatrixXd row = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    return sigmoid(logits(row)(0));
  }

  /// Mean binary cross-entropy over the batch; writes d(loss)/d(params).
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::VectorXd* grad) const {
    check_dim(x.cols());
    const auto rows = static_cast<double>(x.rows());
    const Eigen::MatrixXd z1 = (x * w1().transpose()).rowwise() + b1().transpose();
    const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
    const Eigen::MatrixXd z2 = (a1 * w2().transpose()).rowwise() + b2().transpose();
    const Eigen::MatrixXd a2 = z2.cwiseMax(0.0);
    const Eigen::VectorXd z3 = (a2 * w3()).array() + b3();
    double loss = 0.0;
    Eigen::VectorXd dz3(z3.size());
    for (Eigen::Index i = 0; i < z3.size(); ++i) {
      loss += softplus(z3(i)) - y(i) * z3(i);
      dz3(i) = (sigmoid(z3(i)) - y(i)) / rows;
    }
    loss /= rows;
    if (!grad) return loss;
    grad->resize(param_count());
    const Eigen::MatrixXd dz2 = ((dz3 * w3().transpose()).array() * (z2.array() > 0.0).cast<double>()).matrix();
    const Eigen::MatrixXd dz1 = ((dz2 * w2()).array() * (z1.array() > 0.0).cast<double>()).matrix();
    Eigen::Map<Eigen::MatrixXd>(grad->data() + off_w1(), h1_, d_) = dz1.transpose() * x;
    Eigen::Map<Eigen::VectorXd>(grad->data() + off_b1(), h1_) = dz1.colwise().sum().transpose();
    Eigen::Map<Eigen::MatrixXd>(grad->data() + off_w2(), h2_, h1_) = dz2.transpose() * a1;
    Eigen::Map<Eigen::VectorXd>(grad->data() + off_b2(), h2_) = dz2.colwise().sum().transpose();
    Eigen::Map<Eigen::VectorXd>(grad->data() + off_w3(), h2_) = a2.transpose() * dz3;
    (*grad)(off_b3()) = dz3.sum();
    return loss;
  }

  bool finite() const { return params_.allFinite(); }

  friend bool operator==(const MlpModel& a, const MlpModel& b) {
    return a.d_ == b.d_ && a.h1_ == b.h1_ && a.h2_ == b.h2_ && a.params_ == b.params_;
  }

 private:
  void check_dim(Eigen::Index cols) const {
    if (cols != d_) throw SizeError("input has " + std::to_string(cols) + " features, model expects " + std::to_string(d_));
  }
  Eigen::Index off_w1() const { return 0; }
  Eigen::Index off_b1() const { return off_w1() + Eigen::Index{h1_} * d_; }
  Eigen::Index off_w2() const { return off_b1() + h1_; }
  Eigen::Index off_b2() const { return off_w2() + Eigen::Index{h2_} * h1_; }
  Eigen::Index off_w3() const { return off_b2() + h2_; }
  Eigen::Index off_b3() const { return off_w3() + h2_; }

  int d_ = 0, h1_ = 0, h2_ = 0;
  Eigen::VectorXd params_;
};

inline double mlp_forward(const MlpModel& model, std::span<const double> x) { return model.forward(x); }

/// Largest relative gap between backpropagated and central-difference
/// gradients (step 1e-5) of the single-sample loss. Gaps are measured
/// relative to max(|analytic|, |numeric|, 1e-4).
inline double gradient_check(const MlpModel& model, std::span<const double> x, double y) {
  const Eigen::MatrixXd xm = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd ym = Eigen::VectorXd::Constant(1, y);
  Eigen::VectorXd analytic;
  model.loss_and_gradient(xm, ym, &analytic);
  MlpModel probe = model;
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < probe.param_count(); ++i) {
    const double orig = probe.params()(i);
    probe.params()(i) = orig + h;
    const double up = probe.loss_and_gradient(xm, ym, nullptr);
    probe.params()(i) = orig - h;
    const double down = probe.loss_and_gradient(xm, ym, nullptr);
    probe.params()(i) = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic(i)), std::abs(numeric), 1e-4});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / scale);
  }
  return worst;
}

/// w . x + b, read through the logistic or hinge loss.
struct LinearModel {
  enum class Loss { Logistic, Hinge };
  Eigen::VectorXd weights;
  double bias = 0.0;
  Loss loss = Loss::Logistic;

  double logit(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != weights.size()) throw SizeError("input dimension mismatch");
    return weights.dot(Eigen::Map<const Eigen::VectorXd>(x.data(), weights.size())) + bias;
  }
  Eigen::VectorXd logits(const Eigen::MatrixXd& x) const {
    if (x.cols() != weights.size()) throw SizeError("input dimension mismatch");
    return (x * weights).array() + bias;
  }
  double probability(std::span<const double> x) const { return sigmoid(logit(x)); }
  bool finite() const { return weights.allFinite() && std::isfinite(bias); }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

namespace detail {

/// Mini-batch order for one epoch.
inline std::vector<Eigen::Index> epoch_order(Eigen::Index n, std::uint64_t seed, int epoch) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  RngStream rng = RngStream(seed, 0x45504F43ULL).substream(static_cast<std::uint64_t>(epoch));
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

inline void gather(const Batch& all, std::span<const Eigen::Index> idx, Batch& out) {
  out.x.resize(static_cast<Eigen::Index>(idx.size()), all.x.cols());
  out.y.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = all.x.row(idx[i]);
    out.y(static_cast<Eigen::Index>(i)) = all.y(idx[i]);
  }
}

inline double accuracy_of_logits(const Eigen::VectorXd& logits, const Eigen::VectorXd& y) {
  if (y.size() == 0) return 0.0;
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) hits += ((logits(i) >= 0.0 ? 1.0 : 0.0) == y(i));
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

inline void require_binary_labels(const Dataset& ds) {
  for (const auto& l : ds.labels)
    if (l != kLabelRc && l != kLabelHaar) throw ArgumentError("training labels must be RC or HAAR, got '" + l + "'");
  if (ds.size() == 0) throw ArgumentError("empty training set");
}

}  // namespace detail

struct MlpTrainResult {
  MlpModel model;
  TrainHistory history;
};

/// Mini-batch Adam on binary cross-entropy; `train` and `valid` are expected
/// to be z-scored already. Throws NumericalError on a non-finite loss.
inline MlpTrainResult mlp_train(const Dataset& train, const Dataset& valid, const TrainConfig& cfg) {
  cfg.validate();
  detail::require_binary_labels(train);
  const Batch tr = to_batch(train);
  const Batch va = valid.size() ? to_batch(valid) : Batch{};
  const int d = static_cast<int>(tr.x.cols());
  RngStream init_rng(cfg.seed, 0x494E4954ULL);
  MlpTrainResult res{MlpModel::initialized(d, cfg.hidden1 ? cfg.hidden1 : d, cfg.hidden2 ? cfg.hidden2 : d, init_rng), {}};
  Adam adam(res.model.param_count(), cfg);
  Eigen::VectorXd grad;
  Batch mb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = detail::epoch_order(tr.x.rows(), cfg.seed, epoch);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      detail::gather(tr, std::span(order).subspan(start, len), mb);
      const double loss = res.model.loss_and_gradient(mb.x, mb.y, &grad);
      if (!std::isfinite(loss) || !grad.allFinite())
        throw NumericalError("MLP training diverged at epoch " + std::to_string(epoch + 1));
      adam.step(res.model.params(), grad);
    }
    if (!res.model.finite()) throw NumericalError("MLP parameters non-finite at epoch " + std::to_string(epoch + 1));
    const double tl = res.model.loss_and_gradient(tr.x, tr.y, nullptr);
    if (!std::isfinite(tl)) throw NumericalError("MLP training diverged at epoch " + std::to_string(epoch + 1));
    res.history.train_loss.push_back(tl);
    res.history.train_accuracy.push_back(detail::accuracy_of_logits(res.model.logits(tr.x), tr.y));
    if (va.x.rows() > 0) {
      res.history.valid_loss.push_back(res.model.loss_and_gradient(va.x, va.y, nullptr));
      res.history.valid_accuracy.push_back(detail::accuracy_of_logits(res.model.logits(va.x), va.y));
    }
  }
  return res;
}

namespace detail {

/// Mean loss plus (l2/2)|w|^2 of a linear model, with its (sub)gradient in
/// [w..., b] order.
inline double linear_objective(const LinearModel& m, const Batch& b, double l2, Eigen::VectorXd* grad) {
  const Eigen::VectorXd z = m.logits(b.x);
  const auto n = static_cast<double>(b.x.rows());
  Eigen::VectorXd dz(z.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (m.loss == LinearModel::Loss::Logistic) {
      loss += softplus(z(i)) - b.y(i) * z(i);
      dz(i) = (sigmoid(z(i)) - b.y(i)) / n;
    } else {
      const double s = 2.0 * b.y(i) - 1.0;
      const double margin = 1.0 - s * z(i);
      loss += std::max(0.0, margin);
      dz(i) = margin > 0.0 ? -s / n : 0.0;
    }
  }
  loss = loss / n + 0.5 * l2 * m.weights.squaredNorm();
  if (grad) {
    grad->resize(m.weights.size() + 1);
    grad->head(m.weights.size()) = b.x.transpose() * dz + l2 * m.weights;
    (*grad)(m.weights.size()) = dz.sum();
  }
  return loss;
}

inline LinearModel train_linear(const Dataset& train, const TrainConfig& cfg, LinearModel::Loss kind,
                                TrainHistory* history) {
  cfg.validate();
  require_binary_labels(train);
  const Batch tr = to_batch(train);
  LinearModel m{Eigen::VectorXd::Zero(tr.x.cols()), 0.0, kind};
  Eigen::VectorXd params = Eigen::VectorXd::Zero(tr.x.cols() + 1);
  Adam adam(params.size(), cfg);
  Eigen::VectorXd grad;
  Batch mb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(tr.x.rows(), cfg.seed, epoch);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      gather(tr, std::span(order).subspan(start, len), mb);
      linear_objective(m, mb, cfg.l2, &grad);
      adam.step(params, grad);
      m.weights = params.head(m.weights.size());
      m.bias = params(m.weights.size());
    }
    const double loss = linear_objective(m, tr, cfg.l2, nullptr);
    if (!std::isfinite(loss) || !m.finite())
      throw NumericalError("linear training diverged at epoch " + std::to_string(epoch + 1));
    if (history) {
      history->train_loss.push_back(loss);
      history->train_accuracy.push_back(accuracy_of_logits(m.logits(tr.x), tr.y));
    }
  }
  return m;
}

}  // namespace detail

/// L2-regularized logistic regression by mini-batch Adam.
inline LinearModel train_logistic(const Dataset& train, const TrainConfig& cfg, TrainHistory* history = nullptr) {
  return detail::train_linear(train, cfg, LinearModel::Loss::Logistic, history);
}

/// Primal linear SVM: mean hinge loss + (l2/2)|w|^2 by mini-batch
/// subgradient steps (Adam-scaled).
inline LinearModel train_linear_svm(const Dataset& train, const TrainConfig& cfg, TrainHistory* history = nullptr) {
  return detail::train_linear(train, cfg, LinearModel::Loss::Hinge, history);
}

inline double hinge_loss(const LinearModel& m, const Dataset& ds) {
  LinearModel unreg = m;
  return detail::linear_objective(unreg, to_batch(ds), 0.0, nullptr);
}

/// A trained model with the normalization and generation settings of its
/// training data. Raw (unnormalized) rows go in.
struct Classifier {
  Algo algo = Algo::MLP;
  std::variant<MlpModel, LinearModel> model;
  NormalizationStats norm;
  FeatureMeta meta;
  TrainConfig cfg;
  TrainHistory history;

  double logit(std::span<const double> raw) const {
    const std::vector<double> x = zscore_row(raw, norm);
    if (const auto* mlp = std::get_if<MlpModel>(&model)) {
      const Eigen::MatrixXd row = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
      return mlp->logits(row)(0);
    }
    return std::get<LinearModel>(model).logit(x);
  }

  Eigen::VectorXd logits(const Dataset& raw) const {
    Dataset z = zscore_apply(raw, norm);
    const Batch b = to_batch(z);
    if (const auto* mlp = std::get_if<MlpModel>(&model)) return mlp->logits(b.x);
    return std::get<LinearModel>(model).logits(b.x);
  }

  /// 1 for RC, 0 for HAAR.
  int predict(std::span<const double> raw) const { return logit(raw) >= 0.0 ? 1 : 0; }
};

/// Fraction of rows whose predicted label equals the true label.
inline double evaluate_accuracy(const Classifier& clf, const Dataset& ds) {
  require_compatible(clf.meta, ds.meta, "evaluation");
  if (ds.size() == 0) throw ArgumentError("empty dataset");
  const Eigen::VectorXd z = clf.logits(ds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    hits += static_cast<std::size_t>((z(static_cast<Eigen::Index>(i)) >= 0.0 ? 1 : 0) == binary_label(ds.labels[i]));
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

/// Fraction of rows classified RC.
inline double compute_p_rc(const Classifier& clf, const Dataset& ds) {
  require_compatible(clf.meta, ds.meta, "P_RC");
  if (ds.size() == 0) throw ArgumentError("P_RC of an empty dataset");
  const Eigen::VectorXd z = clf.logits(ds);
  return static_cast<double>((z.array() >= 0.0).count()) / static_cast<double>(ds.size());
}

/// Trains one classifier on raw `train` rows: fits z-score stats on `train`,
/// normalizes both sets, trains `algo`.
inline Classifier train_classifier(const Dataset& train, const Dataset& valid, Algo algo, const TrainConfig& cfg) {
  require_compatible(train.meta, valid.meta, "training");
  Classifier clf;
  clf.algo = algo;
  clf.meta = train.meta;
  clf.cfg = cfg;
  clf.norm = zscore_fit(train);
  const Dataset tz = zscore_apply(train, clf.norm);
  const Dataset vz = zscore_apply(valid, clf.norm);
  switch (algo) {
    case Algo::MLP: {
      MlpTrainResult r = mlp_train(tz, vz, cfg);
      clf.model = std::move(r.model);
      clf.history = std::move(r.history);
      break;
    }
    case Algo::Logistic: clf.model = train_logistic(tz, cfg, &clf.history); break;
    case Algo::LinearSVM: clf.model = train_linear_svm(tz, cfg, &clf.history); break;
  }
  return clf;
}

struct SummaryStat {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

inline SummaryStat summarize(std::span<const double> v) {
  SummaryStat s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(v.size()));
  return s;
}

struct ClassifierReport {
  Algo algo = Algo::MLP;
  std::vector<Classifier> models;
  std::vector<double> train_accuracy;
  std::vector<double> valid_accuracy;
  std::vector<double> test_accuracy;  // empty without a test set

  SummaryStat train() const { return summarize(train_accuracy); }
  SummaryStat valid() const { return summarize(valid_accuracy); }
  SummaryStat test() const { return summarize(test_accuracy); }
};

/// Ten-classifier protocol: each member reshuffles train + valid into two
/// halves, refits z-score on its training half, trains and is scored on both
/// halves and on `test` (raw rows). Member i uses substream i of `seed`.
inline ClassifierReport ensemble_protocol(const Dataset& train, const Dataset& valid, const Dataset* test, Algo algo,
                                          const TrainConfig& cfg, int n_models, std::uint64_t seed, int workers = 1) {
  if (n_models < 1) throw ArgumentError("need at least one model");
  require_compatible(train.meta, valid.meta, "ensemble protocol");
  if (test) require_compatible(train.meta, test->meta, "ensemble protocol (test)");
  ClassifierReport rep;
  rep.algo = algo;
  rep.models.resize(static_cast<std::size_t>(n_models));
  rep.train_accuracy.resize(rep.models.size());
  rep.valid_accuracy.resize(rep.models.size());
  if (test) rep.test_accuracy.resize(rep.models.size());
  const RngStream root(seed, 0x50524F54ULL);
  parallel_for(rep.models.size(), workers, [&](std::size_t i) {
    RngStream rng = root.substream(i);
    auto [half_a, half_b] = split_shuffle(train, valid, rng);
    TrainConfig member_cfg = cfg;
    member_cfg.seed = rng.next_u64();
    Classifier clf = train_classifier(half_a, half_b, algo, member_cfg);
    rep.train_accuracy[i] = evaluate_accuracy(clf, half_a);
    rep.valid_accuracy[i] = evaluate_accuracy(clf, half_b);
    if (test) rep.test_accuracy[i] = evaluate_accuracy(clf, *test);
    rep.models[i] = std::move(clf);
  });
  return rep;
}

// Model file: '#' key=value header, then "name,v1,v2,..." parameter rows.

inline void write_values(std::ostream& os, const std::string& name, std::span<const double> v) {
  os << name;
  for (double x : v) os << ',' << format_double(x);
  os << '\n';
}

inline void save_classifier(const Classifier& clf, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os << "# format_version=1\n";
  os << "# algo=" << to_string(clf.algo) << "\n";
  if (const auto* mlp = std::get_if<MlpModel>(&clf.model)) {
    os << "# dims=" << mlp->input_dim() << "," << mlp->hidden1() << "," << mlp->hidden2() << ",1\n";
  } else {
    os << "# dims=" << std::get<LinearModel>(clf.model).weights.size() << ",1\n";
  }
  os << "# learning_rate=" << format_double(clf.cfg.learning_rate) << "\n";
  os << "# batch_size=" << clf.cfg.batch_size << "\n";
  os << "# epochs=" << clf.cfg.epochs << "\n";
  os << "# l2=" << format_double(clf.cfg.l2) << "\n";
  os << "# seed=" << clf.cfg.seed << "\n";
  os << "# N_q=" << clf.meta.n_qubits << "\n";
  os << "# N_u=" << clf.meta.n_u << "\n";
  os << "# N_s=" << (clf.meta.n_s == kExactShots ? std::string("inf") : std::to_string(clf.meta.n_s)) << "\n";
  os << "# kprimes=" << join_ints(clf.meta.kprimes) << "\n";
  os << "# variant=" << clf.meta.variant << "\n";
  write_values(os, "mean", clf.norm.mean);
  write_values(os, "std", clf.norm.stddev);
  if (const auto* mlp = std::get_if<MlpModel>(&clf.model)) {
    write_values(os, "params", std::span(mlp->params().data(), static_cast<std::size_t>(mlp->params().size())));
  } else {
    const auto& lin = std::get<LinearModel>(clf.model);
    write_values(os, "weights", std::span(lin.weights.data(), static_cast<std::size_t>(lin.weights.size())));
    const double b[1] = {lin.bias};
    write_values(os, "bias", b);
  }
  if (!os) throw Error("write failed: " + path);
}

inline Classifier load_classifier(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path);
  std::map<std::string, std::string> keys;
  std::map<std::string, std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("header line without '='", lineno);
      keys[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    std::stringstream ss(line);
    std::string name, tok;
    std::getline(ss, name, ',');
    std::vector<double> vals;
    try {
      while (std::getline(ss, tok, ',')) vals.push_back(parse_double(tok));
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), lineno);
    }
    rows[name] = std::move(vals);
  }
  const auto need = [&](const std::string& k) -> const std::string& {
    const auto it = keys.find(k);
    if (it == keys.end()) throw ParseError("model header is missing " + k, 0);
    return it->second;
  };
  const auto need_row = [&](const std::string& k) -> const std::vector<double>& {
    const auto it = rows.find(k);
    if (it == rows.end()) throw ParseError("model file is missing row " + k, 0);
    return it->second;
  };
  Classifier clf;
  try {
    clf.algo = parse_algo(need("algo"));
    clf.cfg.learning_rate = parse_double(need("learning_rate"));
    clf.cfg.batch_size = static_cast<int>(parse_int(need("batch_size")));
    clf.cfg.epochs = static_cast<int>(parse_int(need("epochs")));
    clf.cfg.l2 = parse_double(need("l2"));
    clf.cfg.seed = std::stoull(need("seed"));
    clf.meta.n_qubits = static_cast<int>(parse_int(need("N_q")));
    clf.meta.n_u = static_cast<int>(parse_int(need("N_u")));
    clf.meta.n_s = need("N_s") == "inf" ? kExactShots : static_cast<int>(parse_int(need("N_s")));
    clf.meta.kprimes.clear();
    std::stringstream ks(need("kprimes"));
    std::string tok;
    while (std::getline(ks, tok, ','))
      if (!tok.empty()) clf.meta.kprimes.push_back(static_cast<int>(parse_int(tok)));
    clf.meta.variant = need("variant");
    std::vector<int> dims;
    std::stringstream ds(need("dims"));
    while (std::getline(ds, tok, ',')) dims.push_back(static_cast<int>(parse_int(tok)));
    clf.norm.mean = need_row("mean");
    clf.norm.stddev = need_row("std");
    if (clf.norm.mean.size() != clf.norm.stddev.size()) throw ParseError("mean/std length mismatch", 0);
    clf.norm.zero_std.resize(clf.norm.mean.size());
    for (std::size_t j = 0; j < clf.norm.mean.size(); ++j)
      clf.norm.zero_std[j] = is_zero_std(clf.norm.stddev[j], clf.norm.mean[j]);
    if (clf.algo == Algo::MLP) {
      if (dims.size() != 4) throw ParseError("MLP dims need 4 entries", 0);
      MlpModel m(dims[0], dims[1], dims[2]);
      const auto& p = need_row("params");
      if (static_cast<Eigen::Index>(p.size()) != m.param_count()) throw ParseError("MLP parameter count mismatch", 0);
      m.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), m.param_count());
      clf.model = std::move(m);
    } else {
      LinearModel lin;
      lin.loss = clf.algo == Algo::Logistic ? LinearModel::Loss::Logistic : LinearModel::Loss::Hinge;
      const auto& w = need_row("weights");
      lin.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      const auto& b = need_row("bias");
      if (b.size() != 1) throw ParseError("bias row needs one value", 0);
      lin.bias = b[0];
      clf.model = std::move(lin);
    }
  } catch (const ArgumentError& e) {
    throw ParseError(e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  return clf;
}

/// Principal axes of a reference dataset.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // one principal axis per row, by decreasing variance
  Eigen::VectorXd explained_variance;
  Eigen::VectorXd explained_variance_ratio;
};

/// Top `n_components` eigenvectors of the (population) feature covariance.
/// Each axis is signed so its largest-magnitude entry is positive.
inline PcaModel pca_fit(const Dataset& ds, int n_components = 2) {
  if (ds.size() < 2) throw ArgumentError("PCA needs at least two rows");
  const Batch b = to_batch(ds);
  const Eigen::Index d = b.x.cols();
  if (n_components < 1 || n_components > d) throw ArgumentError("bad component count");
  PcaModel m;
  m.mean = b.x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = b.x.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(b.x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const double total = std::max(eig.eigenvalues().sum(), 0.0);
  m.components.resize(n_components, d);
  m.explained_variance.resize(n_components);
  m.explained_variance_ratio.resize(n_components);
  for (int k = 0; k < n_components; ++k) {
    const Eigen::Index col = d - 1 - k;  // eigenvalues ascend
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    m.components.row(k) = v.transpose();
    m.explained_variance(k) = std::max(eig.eigenvalues()(col), 0.0);
    m.explained_variance_ratio(k) = total > 0.0 ? m.explained_variance(k) / total : 0.0;
  }
  return m;
}

/// Rows of `ds` expressed in the principal axes (one row per point).
inline Eigen::MatrixXd pca_project(const Dataset& ds, const PcaModel& m) {
  const Batch b = to_batch(ds);
  if (b.x.cols() != m.mean.size()) throw SizeError("PCA dimension mismatch");
  return (b.x.rowwise() - m.mean.transpose()) * m.components.transpose();
}

}  // namespace designscope
