// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "alforge/dataset.hpp"
#include "alforge/error.hpp"
#include "alforge/lbfgs.hpp"
#include "alforge/matrix.hpp"

namespace alforge {

// Linear head: logits = W x + b with W of shape C x D (row-major).
struct ProbeParams {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  ProbeParams() = default;
  ProbeParams(std::size_t c, std::size_t d) : num_classes(c), dim(d), weights(c * d, 0.0), bias(c, 0.0) {}

  std::span<const double> weight_row(std::size_t c) const { return {weights.data() + c * dim, dim}; }
  std::span<double> weight_row(std::size_t c) { return {weights.data() + c * dim, dim}; }

  friend bool operator==(const ProbeParams&, const ProbeParams&) = default;
};

struct FitConfig {
  double l2_inverse_strength = 1.0;
  std::size_t max_iterations = 1000;
  double gradient_tolerance = 1e-6;

  void check() const {
    if (!(l2_inverse_strength > 0.0)) throw ConfigError("fit: l2_inverse_strength must be positive");
    if (max_iterations == 0) throw ConfigError("fit: max_iterations must be positive");
    if (!(gradient_tolerance > 0.0)) throw ConfigError("fit: gradient_tolerance must be positive");
  }
};

struct FitResult {
  ProbeParams params;
  double loss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct LossAndGrad {
  double loss = 0.0;
  ProbeParams grad;
};

// Row-major rows x C matrix of class probabilities.
struct ProbabilityMatrix {
  std::size_t rows = 0;
  std::size_t num_classes = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * num_classes, num_classes}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * num_classes, num_classes}; }
};

inline void logits_into(const ProbeParams& p, std::span<const float> x, std::span<double> out) {
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    const double* w = p.weights.data() + c * p.dim;
    double z = p.bias[c];
    for (std::size_t k = 0; k < p.dim; ++k) z += w[k] * static_cast<double>(x[k]);
    out[c] = z;
  }
}

// In-place softmax with max subtraction; returns log of the normalizer
// (log-sum-exp of the input logits).
inline double softmax_inplace(std::span<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return zmax + std::log(sum);
}

inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < v.size(); ++c)
    if (v[c] > v[best]) best = c;
  return best;
}

inline ProbabilityMatrix predict_proba(const ProbeParams& params, MatrixView features) {
  if (features.dim() != params.dim)
    throw ShapeError("predict_proba: feature dim " + std::to_string(features.dim()) + " != probe dim " +
                     std::to_string(params.dim));
  ProbabilityMatrix out{features.rows(), params.num_classes,
                        std::vector<double>(features.rows() * params.num_classes)};
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto row = out.row(i);
    logits_into(params, features.row(i), row);
    softmax_inplace(row);
  }
  return out;
}

namespace detail {

// Objective over the flat parameter vector [W row-major, b].
inline double probe_objective(std::size_t C, std::size_t D, const std::vector<double>& theta, MatrixView x,
                              std::span<const Label> y, double l2_inverse_strength, std::vector<double>& grad,
                              bool with_regularizer = true) {
  const std::size_t n = x.rows();
  const double* W = theta.data();
  const double* b = theta.data() + C * D;
  std::fill(grad.begin(), grad.end(), 0.0);
  double* gW = grad.data();
  double* gb = grad.data() + C * D;

  std::vector<double> z(C);
  double data_loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t c = 0; c < C; ++c) {
      double s = b[c];
      const double* w = W + c * D;
      for (std::size_t k = 0; k < D; ++k) s += w[k] * static_cast<double>(xi[k]);
      z[c] = s;
    }
    const double zy = z[y[i]];
    const double lse = softmax_inplace(z);
    data_loss += lse - zy;
    for (std::size_t c = 0; c < C; ++c) {
      const double r = z[c] - (c == y[i] ? 1.0 : 0.0);
      if (r == 0.0) continue;
      double* g = gW + c * D;
      for (std::size_t k = 0; k < D; ++k) g[k] += r * static_cast<double>(xi[k]);
      gb[c] += r;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < C * D + C; ++k) grad[k] *= inv_n;
  double loss = data_loss * inv_n;
  if (with_regularizer) {
    const double lambda = inv_n / l2_inverse_strength;
    double sq = 0.0;
    for (std::size_t k = 0; k < C * D; ++k) {
      sq += W[k] * W[k];
      gW[k] += lambda * W[k];
    }
    loss += 0.5 * lambda * sq;
  }
  return loss;
}

inline void check_fit_inputs(std::size_t C, std::size_t D, MatrixView x, std::span<const Label> y) {
  if (x.rows() == 0) throw ValidationError("fit: labeled set is empty");
  if (x.dim() != D) throw ShapeError("fit: feature dim does not match probe dim");
  if (y.size() != x.rows()) throw ShapeError("fit: label count does not match feature rows");
  for (Label l : y)
    if (l >= C) throw ValidationError("fit: label out of range");
}

inline std::vector<double> flatten(const ProbeParams& p) {
  std::vector<double> theta(p.weights);
  theta.insert(theta.end(), p.bias.begin(), p.bias.end());
  return theta;
}

inline ProbeParams unflatten(std::size_t C, std::size_t D, const std::vector<double>& theta) {
  ProbeParams p(C, D);
  std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(C * D), p.weights.begin());
  std::copy(theta.begin() + static_cast<std::ptrdiff_t>(C * D), theta.end(), p.bias.begin());
  return p;
}

}  // namespace detail

// Regularized mean cross-entropy
//   (1/n) sum_i -log softmax(W x_i + b)[y_i] + ||W||^2 / (2 * l2_inverse_strength * n)
// and its exact gradient. The bias is not regularized.
inline LossAndGrad loss_and_grad(const ProbeParams& params, MatrixView features, std::span<const Label> labels,
                                 const FitConfig& cfg) {
  detail::check_fit_inputs(params.num_classes, params.dim, features, labels);
  std::vector<double> grad(params.weights.size() + params.bias.size());
  const double loss = detail::probe_objective(params.num_classes, params.dim, detail::flatten(params), features,
                                              labels, cfg.l2_inverse_strength, grad);
  return {loss, detail::unflatten(params.num_classes, params.dim, grad)};
}

// Data term only (no regularizer): mean cross-entropy and its gradient.
inline LossAndGrad cross_entropy_and_grad(const ProbeParams& params, MatrixView features,
                                          std::span<const Label> labels) {
  detail::check_fit_inputs(params.num_classes, params.dim, features, labels);
  std::vector<double> grad(params.weights.size() + params.bias.size());
  const double loss = detail::probe_objective(params.num_classes, params.dim, detail::flatten(params), features,
                                              labels, 1.0, grad, /*with_regularizer=*/false);
  return {loss, detail::unflatten(params.num_classes, params.dim, grad)};
}

// Trains the probe from `start` (zero parameters unless given). Deterministic
// for identical inputs.
inline FitResult fit(MatrixView features, std::span<const Label> labels, std::size_t num_classes,
                     const FitConfig& cfg = {}, const ProbeParams* start = nullptr) {
  cfg.check();
  const std::size_t C = num_classes;
  const std::size_t D = features.dim();
  if (C < 2) throw ValidationError("fit: num_classes must be >= 2");
  detail::check_fit_inputs(C, D, features, labels);

  std::vector<double> theta = start ? detail::flatten(*start) : std::vector<double>(C * D + C, 0.0);
  if (theta.size() != C * D + C) throw ShapeError("fit: start parameters have the wrong shape");

  Objective f = [&](const std::vector<double>& t, std::vector<double>& g) {
    return detail::probe_objective(C, D, t, features, labels, cfg.l2_inverse_strength, g);
  };
  LbfgsOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.gradient_tolerance = cfg.gradient_tolerance;
  auto res = lbfgs_minimize(f, std::move(theta), opt);

  FitResult out;
  out.params = detail::unflatten(C, D, res.x);
  out.loss = res.value;
  out.iterations = res.iterations;
  out.converged = res.converged;
  return out;
}

inline double evaluate_accuracy(const ProbeParams& params, MatrixView test, std::span<const Label> test_labels) {
  if (test.rows() == 0) throw ValidationError("evaluate_accuracy: empty test set");
  if (test_labels.size() != test.rows()) throw ShapeError("evaluate_accuracy: label count != rows");
  const auto probs = predict_proba(params, test);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.rows(); ++i)
    if (argmax(probs.row(i)) == test_labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.rows());
}

// Debug dump: W as a C x D `.emb` container plus probe.json with the shape
// and bias.
inline void write_probe(const ProbeParams& p, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  EmbeddingMatrix w(p.num_classes, p.dim);
  for (std::size_t k = 0; k < p.weights.size(); ++k) w.data[k] = static_cast<float>(p.weights[k]);
  detail::write_file(dir / "probe.emb", encode_emb(w));
  const nlohmann::json j{{"num_classes", p.num_classes}, {"embedding_dim", p.dim}, {"bias", p.bias}};
  const std::string text = j.dump(2) + "\n";
  detail::write_file(dir / "probe.json", std::vector<char>(text.begin(), text.end()));
}

inline ProbeParams read_probe(const std::filesystem::path& dir) {
  const auto text = detail::read_file(dir / "probe.json");
  const auto j = nlohmann::json::parse(text.begin(), text.end());
  const auto w = decode_emb(detail::read_file(dir / "probe.emb"), "probe.emb");
  ProbeParams p(j.at("num_classes").get<std::size_t>(), j.at("embedding_dim").get<std::size_t>());
  if (w.rows != p.num_classes || w.dim != p.dim) throw ShapeError("probe.emb shape does not match probe.json");
  std::copy(w.data.begin(), w.data.end(), p.weights.begin());
  p.bias = j.at("bias").get<std::vector<double>>();
  if (p.bias.size() != p.num_classes) throw ShapeError("probe.json bias length != num_classes");
  return p;
}

}  // namespace alforge
