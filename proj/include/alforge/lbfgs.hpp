// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "alforge/error.hpp"

namespace alforge {

struct LbfgsOptions {
  std::size_t history = 10;
  std::size_t max_iterations = 1000;
  double gradient_tolerance = 1e-6;  // on the max-norm of the gradient
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_line_search = 40;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// f(x, grad) returns the objective and writes its gradient.
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db); NaN when
// the cubic has no real minimizer.
inline double cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::nan("");
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

struct LinePoint {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;
  std::vector<double> x;
  std::vector<double> grad;
};

class StrongWolfe {
 public:
  StrongWolfe(const Objective& f, const LbfgsOptions& opt, const std::vector<double>& x0, double f0,
              const std::vector<double>& dir, double d0)
      : f_(f), opt_(opt), x0_(x0), f0_(f0), dir_(dir), d0_(d0) {}

  // Returns true and fills `out` when a strong-Wolfe step was found.
  bool search(double initial_step, LinePoint& out) {
    LinePoint prev{0.0, f0_, d0_, {}, {}};
    double step = initial_step;
    for (std::size_t i = 0; i < opt_.max_line_search; ++i) {
      LinePoint cur = eval(step);
      if (cur.value > f0_ + opt_.c1 * step * d0_ || (i > 0 && cur.value >= prev.value))
        return zoom(std::move(prev), std::move(cur), out);
      if (std::abs(cur.slope) <= -opt_.c2 * d0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(std::move(cur), std::move(prev), out);
      prev = std::move(cur);
      step *= 2.0;
    }
    return false;
  }

 private:
  LinePoint eval(double step) {
    LinePoint p;
    p.step = step;
    p.x.resize(x0_.size());
    for (std::size_t k = 0; k < x0_.size(); ++k) p.x[k] = x0_[k] + step * dir_[k];
    p.grad.assign(x0_.size(), 0.0);
    p.value = f_(p.x, p.grad);
    if (!std::isfinite(p.value)) throw NumericError("non-finite loss during line search");
    p.slope = dot(p.grad, dir_);
    return p;
  }

  bool zoom(LinePoint lo, LinePoint hi, LinePoint& out) {
    for (std::size_t i = 0; i < opt_.max_line_search; ++i) {
      const double a = std::min(lo.step, hi.step);
      const double b = std::max(lo.step, hi.step);
      const double width = b - a;
      if (width <= 1e-16 * std::max(1.0, b)) break;
      double step = cubic_min(lo.step, lo.value, lo.slope, hi.step, hi.value, hi.slope);
      if (!std::isfinite(step) || step < a + 0.1 * width || step > b - 0.1 * width) step = 0.5 * (a + b);
      LinePoint cur = eval(step);
      if (cur.value > f0_ + opt_.c1 * step * d0_ || cur.value >= lo.value) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -opt_.c2 * d0_) {
          out = std::move(cur);
          return true;
        }
        if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    // Interval collapsed: accept lo when it made sufficient decrease.
    if (lo.step > 0.0 && lo.value <= f0_ + opt_.c1 * lo.step * d0_) {
      out = std::move(lo);
      return true;
    }
    return false;
  }

  const Objective& f_;
  const LbfgsOptions& opt_;
  const std::vector<double>& x0_;
  double f0_;
  const std::vector<double>& dir_;
  double d0_;
};

}  // namespace detail

// Limited-memory BFGS with a strong-Wolfe line search.
inline LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x, const LbfgsOptions& opt = {}) {
  using detail::dot;
  const std::size_t n = x.size();
  std::vector<double> grad(n, 0.0);
  double value = f(x, grad);
  if (!std::isfinite(value)) throw NumericError("non-finite loss at initial point");

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(n), alpha(opt.history);

  LbfgsResult res;
  for (std::size_t iter = 0;; ++iter) {
    if (detail::max_abs(grad) <= opt.gradient_tolerance) {
      res.converged = true;
      res.iterations = iter;
      break;
    }
    if (iter >= opt.max_iterations) {
      res.iterations = iter;
      break;
    }

    // Two-loop recursion.
    for (std::size_t k = 0; k < n; ++k) dir[k] = -grad[k];
    const std::size_t m = s_hist.size();
    for (std::size_t j = m; j-- > 0;) {
      alpha[j] = rho_hist[j] * dot(s_hist[j], dir);
      for (std::size_t k = 0; k < n; ++k) dir[k] -= alpha[j] * y_hist[j][k];
    }
    if (m > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double beta = rho_hist[j] * dot(y_hist[j], dir);
      for (std::size_t k = 0; k < n; ++k) dir[k] += (alpha[j] - beta) * s_hist[j][k];
    }

    double slope = dot(grad, dir);
    if (!(slope < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t k = 0; k < n; ++k) dir[k] = -grad[k];
      slope = dot(grad, dir);
    }
    const double initial_step = s_hist.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(grad, grad))) : 1.0;

    detail::LinePoint next;
    detail::StrongWolfe ls(f, opt, x, value, dir, slope);
    if (!ls.search(initial_step, next)) {
      res.iterations = iter;
      break;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = next.x[k] - x[k];
      y[k] = next.grad[k] - grad[k];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (s_hist.size() == opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    x = std::move(next.x);
    grad = std::move(next.grad);
    value = next.value;
  }
  res.x = std::move(x);
  res.value = value;
  return res;
}

}  // namespace alforge
