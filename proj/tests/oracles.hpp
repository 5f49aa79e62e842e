#pragma once

// Independent reference computations for the test suite. Nothing here calls
// the library's evaluation or solver code; only plain data is read from the
// game structs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <mineseek/game.hpp>
#include <mineseek/icrf.hpp>

namespace oracle {

using mineseek::QuadraticMiGame;
using mineseek::Strategy;
using mineseek::StrategyProfile;

/// Scalar penalty profile, recomputed from the family parameters.
inline double psi(const mineseek::IcrfSpec& spec, double t) {
  const double a = std::abs(t);
  auto family = [](const mineseek::FamilyParams& f, double s) {
    switch (f.family) {
      case mineseek::Family::Log: return std::log(s + f.alpha) - std::log(f.alpha);
      case mineseek::Family::Power: return std::pow(f.alpha, -f.q) - std::pow(s + f.alpha, -f.q);
      case mineseek::Family::Exponential: return 1.0 - std::exp(-f.alpha * s);
      case mineseek::Family::Sigmoid: return 1.0 / (1.0 + std::exp(-f.alpha * s)) - 0.5;
    }
    return 0.0;
  };
  if (spec.is<mineseek::L1Norm>()) return a;
  if (const auto* d = std::get_if<mineseek::Decomposable>(&spec.kind())) return family(d->family, a);
  if (const auto* b = std::get_if<mineseek::BinaryMin>(&spec.kind()))
    return std::min(family(b->family, a), family(b->family, std::abs(1.0 - t)));
  const auto& pa = std::get<mineseek::PiecewiseAffine>(spec.kind());
  const auto& bp = pa.breakpoints;
  for (std::size_t j = 0; j + 1 < bp.size(); ++j) {
    if (a <= bp[j + 1]) {
      const double slope = (pa.values[j + 1] - pa.values[j]) / (bp[j + 1] - bp[j]);
      return pa.values[j] + slope * (a - bp[j]);
    }
  }
  return pa.values.back() + pa.tail_slope * (a - bp.back());
}

inline double rho(const mineseek::IcrfSpec& spec, const Eigen::VectorXd& t) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < t.size(); ++k) s += psi(spec, t[k]);
  return s;
}

/// J_i(y, x_-i) from the raw quadratic form.
inline double cost(const QuadraticMiGame& g, std::size_t i, const Strategy& y, const StrategyProfile& x) {
  Eigen::VectorXd lin = g.m[i] - g.p[i];
  for (std::size_t j = 0; j < g.agents(); ++j) lin += g.C[i][j] * (j == i ? y : x[j]);
  return lin.dot(y);
}

/// P(x) = sum_i [ (m_i - p_i)^T x_i + x_i^T C_ii x_i + sum_{j<i} x_j^T C_ji x_i ].
inline double potential(const QuadraticMiGame& g, const StrategyProfile& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.agents(); ++i) {
    s += (g.m[i] - g.p[i]).dot(x[i]) + x[i].dot(g.C[i][i] * x[i]);
    for (std::size_t j = 0; j < i; ++j) s += x[j].dot(g.C[j][i] * x[i]);
  }
  return s;
}

struct GridResult {
  Strategy argmin;
  double value = std::numeric_limits<double>::infinity();
};

/// Exhaustive minimization of J_i(y, x_-i) + tau rho_i(y - x_i) over all
/// discrete assignments and the continuous grid l + k (u - l) / steps. The
/// last continuous coordinate is scanned in a fused inner loop.
inline GridResult grid_best_response(const QuadraticMiGame& g, std::size_t i, const StrategyProfile& x,
                                     double tau, int steps) {
  const auto& set = g.sets[i];
  const auto nd = static_cast<Eigen::Index>(set.n_d());
  const auto nc = static_cast<Eigen::Index>(set.n_c());
  const Eigen::Index n = nd + nc;
  const auto& spec = g.icrf[i];

  Eigen::VectorXd h = g.m[i] - g.p[i];
  for (std::size_t j = 0; j < g.agents(); ++j)
    if (j != i) h += g.C[i][j] * x[j];
  const Eigen::MatrixXd& C = g.C[i][i];

  std::vector<std::vector<double>> axes;
  for (const auto& d : set.discrete_domains) axes.push_back(d);
  for (Eigen::Index c = 0; c < nc; ++c) {
    std::vector<double> a;
    const double lo = set.lower[c], hi = set.upper[c];
    for (int k = 0; k <= steps; ++k) a.push_back(k == steps ? hi : lo + (hi - lo) * k / steps);
    axes.push_back(a);
  }

  GridResult best;
  const bool fuse = nc > 0;
  const Eigen::Index outer = fuse ? n - 1 : n;
  std::vector<double> A;
  if (fuse) {
    const auto& zs = axes.back();
    const double czz = C(n - 1, n - 1);
    for (double z : zs) A.push_back(czz * z * z + tau * psi(spec, z - x[i][n - 1]));
  }

  std::vector<std::size_t> idx(static_cast<std::size_t>(outer), 0);
  Strategy y = Strategy::Zero(n);
  for (;;) {
    for (Eigen::Index k = 0; k < outer; ++k) y[k] = axes[k][idx[k]];
    if (fuse) y[n - 1] = 0.0;
    // value with the last coordinate at zero, and its linear coefficient
    double base = h.dot(y) + y.dot(C * y);
    for (Eigen::Index k = 0; k < outer; ++k) base += tau * psi(spec, y[k] - x[i][k]);
    if (fuse) {
      const double coef = h[n - 1] + C.row(n - 1).dot(y) + C.col(n - 1).dot(y);
      const auto& zs = axes.back();
      std::size_t arg = 0;
      double bv = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < zs.size(); ++k) {
        const double v = A[k] + coef * zs[k];
        if (v < bv) bv = v, arg = k;
      }
      if (base + bv < best.value) {
        best.value = base + bv;
        best.argmin = y;
        best.argmin[n - 1] = zs[arg];
      }
    } else if (base < best.value) {
      best.value = base;
      best.argmin = y;
    }
    std::size_t k = idx.size();
    for (;;) {
      if (k == 0) return best;
      --k;
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
    }
  }
}

}  // namespace oracle
