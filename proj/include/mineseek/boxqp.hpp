#pragma once

// Box-constrained convex QP with weighted l1 terms:
//
//   min  1/2 y^T Q y + b^T y + sum_k w_k |y_k - c_k|   s.t.  l <= y <= u
//
// Cyclic coordinate descent with closed-form per-coordinate steps, a Newton
// polish on the smooth face, and a certified lower bound from the
// linearization of the smooth part (exact in the l1 part).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mineseek/errors.hpp"

namespace mineseek {

struct BoxQpResult {
  Eigen::VectorXd point;
  double value = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;  // value - lower_bound >= 0
  long double lower_bound_ext = 0.0L;
  int sweeps = 0;
};

struct BoxQpOptions {
  int max_sweeps = 400;
  int max_rounds = 25;
  bool check_psd = true;
};

inline bool is_psd(const Eigen::MatrixXd& Q) {
  if (Q.size() == 0) return true;
  const Eigen::MatrixXd S = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return false;
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -1e-10 * scale;
}

namespace detail {

inline long double boxqp_value(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& w, const Eigen::VectorXd& c,
                               const Eigen::VectorXd& y) {
  long double v = 0.0L;
  for (Eigen::Index r = 0; r < y.size(); ++r) {
    long double row = 0.0L;
    for (Eigen::Index k = 0; k < y.size(); ++k) row += static_cast<long double>(Q(r, k)) * y[k];
    v += 0.5L * row * y[r] + static_cast<long double>(b[r]) * y[r] +
         static_cast<long double>(w[r]) * std::abs(static_cast<long double>(y[r]) - c[r]);
  }
  return v;
}

/// Sum over coordinates of -min_{z in [l,u]} [ g (z - y) + w (|z - c| - |y - c|) ].
inline long double boxqp_gap(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& l, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& w, const Eigen::VectorXd& c,
                             const Eigen::VectorXd& y) {
  long double gap = 0.0L;
  for (Eigen::Index r = 0; r < y.size(); ++r) {
    long double g = b[r];
    for (Eigen::Index k = 0; k < y.size(); ++k) g += static_cast<long double>(Q(r, k)) * y[k];
    const long double here = static_cast<long double>(w[r]) * std::abs(static_cast<long double>(y[r]) - c[r]);
    auto term = [&](double z) {
      return g * (static_cast<long double>(z) - y[r]) +
             static_cast<long double>(w[r]) * std::abs(static_cast<long double>(z) - c[r]) - here;
    };
    long double best = std::min(term(l[r]), term(u[r]));
    if (c[r] > l[r] && c[r] < u[r]) best = std::min(best, term(c[r]));
    gap += std::max(0.0L, -best);
  }
  return gap;
}

/// argmin over [l,u] of 1/2 a z^2 + g z + w |z - c|.
inline double coordinate_step(double a, double g, double w, double c, double l, double u,
                              double current) {
  if (a > 0.0) {
    double z;
    const double right = (-g - w) / a;
    const double left = (-g + w) / a;
    if (right > c) z = right;
    else if (left < c) z = left;
    else z = c;
    return std::clamp(z, l, u);
  }
  auto f = [&](double z) { return g * z + w * std::abs(z - c); };
  double best = current, fb = f(current);
  for (double z : {l, u, c}) {
    if (z < l || z > u) continue;
    const double fz = f(z);
    if (fz < fb) best = z, fb = fz;
  }
  return best;
}

}  // namespace detail

/// Minimizes to certified gap <= tol (best effort; the returned gap is honest
/// either way). `warm` seeds the iterate.
inline BoxQpResult box_qp_solve(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                const Eigen::VectorXd& weights, const Eigen::VectorXd& centers,
                                double tol, const BoxQpOptions& opts = {},
                                const Eigen::VectorXd* warm = nullptr) {
  const Eigen::Index n = b.size();
  if (Q.rows() != n || Q.cols() != n || lower.size() != n || upper.size() != n ||
      weights.size() != n || centers.size() != n)
    throw ArgumentError("box_qp_solve: inconsistent dimensions");
  if ((weights.array() < 0.0).any()) throw ArgumentError("box_qp_solve: negative l1 weight");
  if (opts.check_psd && !is_psd(Q))
    throw UnsupportedStructure("box_qp_solve: quadratic term is not positive semidefinite");

  BoxQpResult res;
  Eigen::VectorXd y = warm ? *warm : centers;
  y = y.cwiseMax(lower).cwiseMin(upper);
  if (n == 0) return res;

  Eigen::VectorXd g = Q * y + b;
  const double yscale = 1.0 + upper.cwiseAbs().maxCoeff() + lower.cwiseAbs().maxCoeff();

  for (int round = 0; round < opts.max_rounds; ++round) {
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      ++res.sweeps;
      double moved = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double a = Q(k, k);
        const double z = detail::coordinate_step(a, g[k] - a * y[k], weights[k], centers[k],
                                                 lower[k], upper[k], y[k]);
        const double d = z - y[k];
        if (d != 0.0) {
          g += Q.col(k) * d;
          y[k] = z;
          moved = std::max(moved, std::abs(d));
        }
      }
      if (moved <= 1e-14 * yscale) break;
    }

    // Newton step on the face where every free coordinate keeps its l1 sign.
    g = Q * y + b;
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < n; ++k) {
      const bool interior = y[k] > lower[k] && y[k] < upper[k];
      if (interior && (weights[k] == 0.0 || y[k] != centers[k])) free.push_back(k);
    }
    if (!free.empty()) {
      const auto m = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd QF(m, m);
      Eigen::VectorXd rhs(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index kr = free[r];
        const double sgn = weights[kr] == 0.0 ? 0.0 : (y[kr] > centers[kr] ? 1.0 : -1.0);
        rhs[r] = -(g[kr] + weights[kr] * sgn);
        for (Eigen::Index s = 0; s < m; ++s) QF(r, s) = Q(kr, free[s]);
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(QF);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd d = ldlt.solve(rhs);
        const double resid = (QF * d - rhs).norm();
        if (d.allFinite() && resid <= 1e-8 * (1.0 + rhs.norm())) {
          double step = 1.0;
          for (Eigen::Index r = 0; r < m; ++r) {
            const Eigen::Index k = free[r];
            if (d[r] > 0.0) {
              double lim = upper[k];
              if (weights[k] > 0.0 && y[k] < centers[k]) lim = std::min(lim, centers[k]);
              step = std::min(step, (lim - y[k]) / d[r]);
            } else if (d[r] < 0.0) {
              double lim = lower[k];
              if (weights[k] > 0.0 && y[k] > centers[k]) lim = std::max(lim, centers[k]);
              step = std::min(step, (lim - y[k]) / d[r]);
            }
          }
          if (step > 0.0) {
            Eigen::VectorXd trial = y;
            for (Eigen::Index r = 0; r < m; ++r) trial[free[r]] += step * d[r];
            trial = trial.cwiseMax(lower).cwiseMin(upper);
            if (detail::boxqp_value(Q, b, weights, centers, trial) <=
                detail::boxqp_value(Q, b, weights, centers, y))
              y = trial;
          }
        }
      }
      g = Q * y + b;
    }

    if (detail::boxqp_gap(Q, b, lower, upper, weights, centers, y) <= tol) break;
  }

  const long double v = detail::boxqp_value(Q, b, weights, centers, y);
  const long double gap = detail::boxqp_gap(Q, b, lower, upper, weights, centers, y);
  res.point = y;
  res.value = static_cast<double>(v);
  res.gap = static_cast<double>(gap);
  res.lower_bound = static_cast<double>(v - gap);
  res.lower_bound_ext = v - gap;
  return res;
}

}  // namespace mineseek
