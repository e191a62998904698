#pragma once

// Local minimizers used by the pump designer. Both track the best point seen.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "tmqfc/error.hpp"

namespace tmqfc::opt {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct Result {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// Best objective value after each iteration (non-increasing).
  std::vector<double> history;
};

/// Counts evaluations and remembers the best point.
class Tracker {
 public:
  explicit Tracker(const Objective& f) : f_(f) {}
  double operator()(const Eigen::VectorXd& x) {
    const double v = f_(x);
    ++evaluations;
    require(!std::isnan(v), ErrorKind::Numeric, "objective returned NaN");
    if (v < best_value) {
      best_value = v;
      best_x = x;
    }
    return v;
  }
  int evaluations = 0;
  double best_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;

 private:
  const Objective& f_;
};

struct BfgsOptions {
  int max_iters = 200;
  double fd_step = 1e-6;
  double grad_tol = 1e-9;
  double f_tol = 1e-12;  // relative change that counts as stalled
  int stall_iters = 5;
};

/// Quasi-Newton BFGS with central-difference gradients and Armijo backtracking.
inline Result bfgs(const Objective& f, Eigen::VectorXd x, const BfgsOptions& o = {}) {
  Tracker track(f);
  const auto n = x.size();
  auto gradient = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd g(n);
    Eigen::VectorXd q = p;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = o.fd_step * std::max(1.0, std::abs(p(i)));
      q(i) = p(i) + h;
      const double fp = track(q);
      q(i) = p(i) - h;
      const double fm = track(q);
      q(i) = p(i);
      g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
  };
  Result r;
  double fx = track(x);
  Eigen::VectorXd g = gradient(x);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  int stalled = 0;
  for (int it = 0; it < o.max_iters; ++it) {
    r.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < o.grad_tol) {
      r.converged = true;
      r.history.push_back(track.best_value);
      break;
    }
    Eigen::VectorXd d = -hinv * g;
    if (d.dot(g) >= 0.0) {  // lost descent: restart from steepest descent
      hinv.setIdentity();
      d = -g;
    }
    double step = 1.0, fn = 0.0;
    Eigen::VectorXd xn;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = x + step * d;
      fn = track(xn);
      if (fn <= fx + 1e-4 * step * g.dot(d)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      r.history.push_back(track.best_value);
      r.converged = true;  // no descent possible at finite-difference resolution
      break;
    }
    const Eigen::VectorXd gn = gradient(xn);
    const Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (!scaled) {
        hinv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i_n = Eigen::MatrixXd::Identity(n, n);
      hinv = (i_n - rho * s * y.transpose()) * hinv * (i_n - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    const double rel = std::abs(fx - fn) / std::max(1e-300, std::abs(fx));
    stalled = rel < o.f_tol ? stalled + 1 : 0;
    x = xn;
    fx = fn;
    g = gn;
    r.history.push_back(track.best_value);
    if (stalled >= o.stall_iters) {
      r.converged = true;
      break;
    }
  }
  r.x = track.best_x;
  r.value = track.best_value;
  r.evaluations = track.evaluations;
  return r;
}

struct NelderMeadOptions {
  int max_iters = 2000;
  double initial_step = 0.05;
  double f_tol = 1e-12;
};

/// Nelder-Mead simplex with dimension-adaptive coefficients.
inline Result nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const NelderMeadOptions& o = {}) {
  Tracker track(f);
  const auto n = x0.size();
  const double dn = static_cast<double>(n);
  const double alpha = 1.0, beta = 1.0 + 2.0 / dn, gamma = 0.75 - 1.0 / (2.0 * dn), delta = 1.0 - 1.0 / dn;
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> val(pts.size());
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)](i) += o.initial_step;
  for (std::size_t i = 0; i < pts.size(); ++i) val[i] = track(pts[i]);
  Result r;
  std::vector<std::size_t> order(pts.size());
  for (int it = 0; it < o.max_iters; ++it) {
    r.iterations = it + 1;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return val[a] < val[b]; });
    const auto best = order.front(), worst = order.back(), second = order[order.size() - 2];
    r.history.push_back(track.best_value);
    if (std::abs(val[worst] - val[best]) <= o.f_tol * std::max(1.0, std::abs(val[best]))) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != worst) centroid += pts[i];
    centroid /= dn;
    const Eigen::VectorXd xr = centroid + alpha * (centroid - pts[worst]);
    const double fr = track(xr);
    if (fr < val[best]) {
      const Eigen::VectorXd xe = centroid + beta * (xr - centroid);
      const double fe = track(xe);
      if (fe < fr) pts[worst] = xe, val[worst] = fe;
      else pts[worst] = xr, val[worst] = fr;
    } else if (fr < val[second]) {
      pts[worst] = xr, val[worst] = fr;
    } else {
      const bool outside = fr < val[worst];
      const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + gamma * (xr - centroid))
                                         : Eigen::VectorXd(centroid - gamma * (centroid - pts[worst]));
      const double fc = track(xc);
      if (fc < std::min(fr, val[worst])) {
        pts[worst] = xc, val[worst] = fc;
      } else {
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + delta * (pts[i] - pts[best]);
          val[i] = track(pts[i]);
        }
      }
    }
  }
  r.x = track.best_x;
  r.value = track.best_value;
  r.evaluations = track.evaluations;
  return r;
}

}  // namespace tmqfc::opt
