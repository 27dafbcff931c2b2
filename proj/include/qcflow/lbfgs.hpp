#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace qcflow {

struct LbfgsOptions {
  int max_iters = 500;
  /// Stop when the max-norm of the gradient drops below grad_tol (times the
  /// initial max-norm when `relative`), never below abs_floor.
  double grad_tol = 1e-6;
  bool relative = true;
  double abs_floor = 1e-12;
  /// Stop when the relative decrease of f over one iteration falls below this.
  double f_tol = 1e-15;
  int memory = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0;
  double grad_norm = 0;  ///< max-norm at x
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

namespace detail {

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), or NaN.
inline double cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

}  // namespace detail

/// Limited-memory BFGS with a strong-Wolfe line search. `fg(x, g)` returns
/// f(x) and writes the gradient into g. Non-finite values are treated as +inf
/// by the line search. Accepted iterates strictly decrease f.
template <typename Func>
LbfgsResult lbfgs_minimize(Func&& fg, const Eigen::VectorXd& x0, const LbfgsOptions& opt = {}) {
  using Eigen::VectorXd;
  const double inf = std::numeric_limits<double>::infinity();
  LbfgsResult res;
  res.x = x0;
  VectorXd g(x0.size());
  res.f = fg(res.x, g);
  res.evaluations = 1;
  res.grad_norm = x0.size() ? g.cwiseAbs().maxCoeff() : 0.0;
  if (!std::isfinite(res.f) || !g.allFinite()) {
    res.line_search_failed = true;
    return res;
  }
  const double tol = std::max(opt.relative ? opt.grad_tol * res.grad_norm : opt.grad_tol, opt.abs_floor);
  if (res.grad_norm <= tol) {
    res.converged = true;
    return res;
  }

  std::deque<VectorXd> S, Y;
  std::deque<double> rho;
  VectorXd x_new(x0.size()), g_new(x0.size());
  bool reset_once = false;

  while (res.iterations < opt.max_iters) {
    // Two-loop recursion for p = -H g.
    VectorXd q = g;
    std::vector<double> alpha(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
    VectorXd p = gamma * q;
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double beta = rho[i] * Y[i].dot(p);
      p += (alpha[i] - beta) * S[i];
    }
    p = -p;
    double dphi0 = g.dot(p);
    if (!(dphi0 < 0)) {
      S.clear();
      Y.clear();
      rho.clear();
      p = -g;
      dphi0 = -g.squaredNorm();
    }

    // Strong-Wolfe line search.
    const double phi0 = res.f;
    auto eval = [&](double a, double& dphi) {
      x_new = res.x + a * p;
      const double v = fg(x_new, g_new);
      ++res.evaluations;
      if (!std::isfinite(v) || !g_new.allFinite()) {
        dphi = inf;
        return inf;
      }
      dphi = g_new.dot(p);
      return v;
    };
    double a_prev = 0, phi_prev = phi0, dphi_prev = dphi0;
    double a = S.empty() ? std::min(1.0, 1.0 / p.cwiseAbs().maxCoeff()) : 1.0;
    double a_star = -1, phi_star = inf;
    VectorXd x_star, g_star;
    auto accept = [&](double at, double phi) {
      a_star = at;
      phi_star = phi;
      x_star = x_new;
      g_star = g_new;
    };
    auto zoom = [&](double lo, double phi_lo, double dphi_lo, double hi, double phi_hi, double dphi_hi, int budget) {
      for (int k = 0; k < budget; ++k) {
        double at = std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(phi_hi) && std::isfinite(dphi_hi))
          at = detail::cubic_min(lo, phi_lo, dphi_lo, hi, phi_hi, dphi_hi);
        const double lo_b = std::min(lo, hi), hi_b = std::max(lo, hi), w = hi_b - lo_b;
        if (!std::isfinite(at) || at < lo_b + 0.1 * w || at > hi_b - 0.1 * w) at = 0.5 * (lo + hi);
        double dphi;
        const double phi = eval(at, dphi);
        if (phi > phi0 + opt.c1 * at * dphi0 || phi >= phi_lo) {
          hi = at;
          phi_hi = phi;
          dphi_hi = dphi;
        } else {
          accept(at, phi);
          if (std::abs(dphi) <= -opt.c2 * dphi0) return;
          if (dphi * (hi - lo) >= 0) {
            hi = lo;
            phi_hi = phi_lo;
            dphi_hi = dphi_lo;
          }
          lo = at;
          phi_lo = phi;
          dphi_lo = dphi;
        }
        if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) return;
      }
    };
    for (int i = 0; i < opt.max_line_search; ++i) {
      double dphi;
      const double phi = eval(a, dphi);
      if (phi > phi0 + opt.c1 * a * dphi0 || (i > 0 && phi >= phi_prev)) {
        zoom(a_prev, phi_prev, dphi_prev, a, phi, dphi, opt.max_line_search);
        break;
      }
      accept(a, phi);
      if (std::abs(dphi) <= -opt.c2 * dphi0) break;
      if (dphi >= 0) {
        zoom(a, phi, dphi, a_prev, phi_prev, dphi_prev, opt.max_line_search);
        break;
      }
      a_prev = a;
      phi_prev = phi;
      dphi_prev = dphi;
      a *= 2.0;
    }

    if (!(a_star > 0) || !(phi_star < phi0)) {
      if (!S.empty() && !reset_once) {
        S.clear();
        Y.clear();
        rho.clear();
        reset_once = true;
        continue;
      }
      res.line_search_failed = true;
      break;
    }
    reset_once = false;

    VectorXd s = x_star - res.x, y = g_star - g;
    res.x = std::move(x_star);
    g = std::move(g_star);
    const double f_old = res.f;
    res.f = phi_star;
    res.grad_norm = g.cwiseAbs().maxCoeff();
    ++res.iterations;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    if (res.grad_norm <= tol) {
      res.converged = true;
      break;
    }
    if (f_old - res.f <= opt.f_tol * std::max({1.0, std::abs(f_old), std::abs(res.f)})) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace qcflow
