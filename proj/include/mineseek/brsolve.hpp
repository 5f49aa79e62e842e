#pragma once

// Proximal best responses
//
//   min_{y in X_i}  J_i(y, x_-i) + tau * rho_i(y - x_i)
//
// solved by enumerating the discrete assignments in lexicographic order and,
// per assignment, minimizing the continuous restriction. The penalty profile
// is concave in |t|, so it is the pointwise minimum of affine-in-|t| pieces;
// fixing one piece per coordinate leaves a convex l1-weighted box QP, and
// enumerating the piece combinations solves the restriction exactly.
// Smooth profiles are bracketed by chord interpolants that are refined at the
// bound-minimizing point until the bracket closes.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mineseek/boxqp.hpp"
#include "mineseek/errors.hpp"
#include "mineseek/game.hpp"
#include "mineseek/icrf.hpp"

namespace mineseek {

struct BrOptions {
  double inner_tol = 1e-8;
  std::size_t enumeration_cap = 4096;  // discrete assignments per call
  std::size_t cell_cap = 4096;         // penalty-piece combinations per assignment
  int max_refinements = 40;            // chord refinements for smooth profiles
  int mm_iterations = 50;              // majorization-minimization fallback
};

struct BrStats {
  std::size_t discrete_cells = 0;
  std::size_t pruned_cells = 0;
  std::size_t qp_solves = 0;
  std::size_t refinements = 0;
  bool used_mm = false;
  double wall_time_s = 0.0;
};

struct BrResult {
  Strategy argmin;
  double value = 0.0;        // proximal cost at argmin
  double lower_bound = 0.0;  // certified lower bound on the subproblem minimum
  double certificate_gap = 0.0;
  long double value_ext = 0.0L;  // value and lower_bound in extended precision
  long double lower_bound_ext = 0.0L;
  BrStats stats;
};

struct MembershipResult {
  bool member = false;
  double value = 0.0;        // proximal cost of the tested point
  double lower_bound = 0.0;  // certified (possibly partial) lower bound
  double gap_bound = 0.0;    // value - lower_bound when member
  BrStats stats;
};

/// J_i(y, x_-i) + tau rho_i(y - x_i).
inline double proximal_cost_eval(const QuadraticMiGame& g, std::size_t i, const Strategy& y,
                                 const StrategyProfile& x, double tau) {
  if (!(tau >= 0.0)) throw ArgumentError("proximal cost requires tau >= 0");
  if (i >= g.agents()) throw ArgumentError("agent index out of range");
  detail::check_profile(g, x);
  if (!feasible_contains(g.sets[i], y)) throw ArgumentError("candidate strategy is infeasible");
  const Strategy t = y - x[i];
  return static_cast<double>(detail::cost_of(g, i, y, x) +
                             static_cast<long double>(tau) * icrf_eval(g.icrf[i], t));
}

namespace detail {

struct Piece {
  double offset;  // already scaled by tau
  double weight;  // already scaled by tau
  double center;
};

/// Penalty model of one continuous coordinate: tau * psi(y - x_k) >= min over pieces.
class CoordinateModel {
 public:
  CoordinateModel(const IcrfSpec& spec, double tau, double center, double lo, double hi)
      : spec_(&spec), tau_(tau) {
    if (tau == 0.0) {
      exact_ = {{0.0, 0.0, center}};
      return;
    }
    const auto& kind = spec.kind();
    if (std::holds_alternative<L1Norm>(kind)) {
      exact_ = {{0.0, tau, center}};
    } else if (const auto* pa = std::get_if<PiecewiseAffine>(&kind)) {
      const double reach = std::max(std::abs(hi - center), std::abs(center - lo));
      for (std::size_t s = 0; s < pa->segments(); ++s) {
        if (s > 0 && pa->breakpoints[s] > reach) break;  // never active inside the box
        const double slope = pa->slope(s);
        const double offset = pa->values[s] - slope * pa->breakpoints[s];
        exact_.push_back({tau * offset, tau * slope, center});
      }
    } else {
      family_ = std::holds_alternative<Decomposable>(kind) ? std::get<Decomposable>(kind).family
                                                           : std::get<BinaryMin>(kind).family;
      add_branch(center, lo, hi);
      if (std::holds_alternative<BinaryMin>(kind)) add_branch(center + 1.0, lo, hi);
    }
  }

  bool exact() const { return !exact_.empty(); }

  std::vector<Piece> pieces() const {
    if (exact()) return exact_;
    std::vector<Piece> out;
    for (const auto& br : branches_) {
      if (br.nodes.size() < 2) {
        out.push_back({0.0, 0.0, br.center});
        continue;
      }
      for (std::size_t j = 0; j + 1 < br.nodes.size(); ++j) {
        const double a = br.nodes[j], b = br.nodes[j + 1];
        const double pa = family_value(family_, a), pb = family_value(family_, b);
        const double slope = (pb - pa) / (b - a);
        out.push_back({tau_ * (pa - slope * a), tau_ * slope, br.center});
      }
    }
    return out;
  }

  /// Adds |y - center| as a chord node on every branch; false if nothing new.
  bool refine(double y) {
    bool added = false;
    for (auto& br : branches_) {
      const double s = std::abs(y - br.center);
      if (s <= 0.0 || s >= br.reach) continue;
      auto it = std::lower_bound(br.nodes.begin(), br.nodes.end(), s);
      const double tol = 1e-12 * std::max(1.0, br.reach);
      if ((it != br.nodes.end() && *it - s <= tol) || (it != br.nodes.begin() && s - *(it - 1) <= tol))
        continue;
      br.nodes.insert(it, s);
      added = true;
    }
    return added;
  }

  /// A single-piece majorizer active at y.
  Piece majorizer(double y) const {
    if (exact()) {
      const Piece* best = &exact_.front();
      double bv = std::numeric_limits<double>::infinity();
      for (const auto& p : exact_) {
        const double v = p.offset + p.weight * std::abs(y - p.center);
        if (v < bv) bv = v, best = &p;
      }
      return *best;
    }
    Piece best{0.0, 0.0, 0.0};
    double bv = std::numeric_limits<double>::infinity();
    for (const auto& br : branches_) {
      const double s = std::abs(y - br.center);
      const double v = family_value(family_, s);
      if (v < bv) {
        const double d = family_slope(family_, s);
        bv = v;
        best = {tau_ * (v - d * s), tau_ * d, br.center};
      }
    }
    return best;
  }

 private:
  struct Branch {
    double center;
    double reach;
    std::vector<double> nodes;
  };

  void add_branch(double center, double lo, double hi) {
    Branch br{center, std::max(std::abs(hi - center), std::abs(center - lo)), {}};
    if (br.reach > 0.0) {
      br.nodes = {0.0};
      const double scale = 1.0 / family_.alpha;
      if (scale < br.reach) br.nodes.push_back(scale);
      br.nodes.push_back(br.reach);
    }
    branches_.push_back(std::move(br));
  }

  const IcrfSpec* spec_;
  double tau_;
  std::vector<Piece> exact_;
  FamilyParams family_{};
  std::vector<Branch> branches_;
};

struct SearchMode {
  double slack = 0.0;                 // prune cells whose bound is within slack of the incumbent
  bool exact = true;                  // no heuristic fallback
  std::optional<long double> abort_below;  // membership test: stop at any value below this
};

struct SearchOutcome {
  Strategy best;
  long double best_value = std::numeric_limits<long double>::infinity();
  long double lower_bound = std::numeric_limits<long double>::infinity();
  bool aborted = false;
  bool certified = true;
  BrStats stats;
};

class ProximalSubproblem {
 public:
  ProximalSubproblem(const QuadraticMiGame& g, std::size_t i, const StrategyProfile& x, double tau,
                     const BrOptions& opts)
      : g_(g), i_(i), x_(x), tau_(tau), opts_(opts), set_(g.sets.at(i)) {
    if (!(tau >= 0.0)) throw ArgumentError("proximal best response requires tau >= 0");
    check_profile(g, x);
    nd_ = static_cast<Eigen::Index>(set_.n_d());
    nc_ = static_cast<Eigen::Index>(set_.n_c());
    if (set_.discrete_assignments(opts.enumeration_cap) > opts.enumeration_cap)
      throw CapacityError("agent " + std::to_string(i) + ": discrete assignments exceed the cap of " +
                          std::to_string(opts.enumeration_cap) + "; use delta_proximal_br with a coarser model");
    Q_ = g.C[i][i] + g.C[i][i].transpose();
    h_ = linear_term(g, i, x);
    Qcc_ = Q_.bottomRightCorner(nc_, nc_);
    Qcd_ = Q_.bottomLeftCorner(nc_, nd_);
    if (nc_ > 0 && !is_psd(Qcc_))
      throw UnsupportedStructure("agent " + std::to_string(i) +
                                 ": continuous block of C_ii is not positive semidefinite");
    center_ = x[i].tail(nc_);
    for (Eigen::Index k = 0; k < nc_; ++k)
      models_.emplace_back(g.icrf[i], tau, center_[k], set_.lower[k], set_.upper[k]);
    env_w_.resize(nc_);
    for (Eigen::Index k = 0; k < nc_; ++k) {
      const double reach = std::max(set_.upper[k] - center_[k], center_[k] - set_.lower[k]);
      env_w_[k] = tau * g.icrf[i].envelope_slope(reach);
    }
  }

  long double value(const Strategy& y) const {
    const Strategy t = y - x_[i_];
    return cost_of(g_, i_, y, x_) + static_cast<long double>(tau_) * icrf_eval(g_.icrf[i_], t);
  }

  SearchOutcome search(const SearchMode& mode, const std::optional<Strategy>& seed = std::nullopt) {
    const auto t0 = std::chrono::steady_clock::now();
    SearchOutcome out;
    mode_ = &mode;
    out_ = &out;
    if (seed) {
      out.best = *seed;
      out.best_value = value(*seed);
    }

    std::vector<std::size_t> idx(static_cast<std::size_t>(nd_), 0);
    Strategy y(nd_ + nc_);
    bool done = false;
    while (!done && !out.aborted) {
      for (Eigen::Index k = 0; k < nd_; ++k) y[k] = set_.discrete_domains[k][idx[k]];
      ++out.stats.discrete_cells;
      solve_cell(y);
      // lexicographic odometer, last coordinate fastest
      done = true;
      for (Eigen::Index k = nd_ - 1; k >= 0; --k) {
        if (++idx[k] < set_.discrete_domains[k].size()) {
          done = false;
          break;
        }
        idx[k] = 0;
      }
    }
    out.stats.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

 private:
  long double threshold() const {
    if (mode_->abort_below) return *mode_->abort_below;
    return out_->best_value - mode_->slack;
  }

  void offer(const Strategy& y) {
    const long double v = value(y);
    if (mode_->abort_below && v < *mode_->abort_below) {
      out_->aborted = true;
      return;
    }
    if (v < out_->best_value) {
      out_->best_value = v;
      out_->best = y;
    }
  }

  void note_bound(long double lb) { out_->lower_bound = std::min(out_->lower_bound, lb); }

  BoxQpResult qp(const Eigen::VectorXd& b, const Eigen::VectorXd& w, const Eigen::VectorXd& c,
                 const Eigen::VectorXd* warm = nullptr) {
    ++out_->stats.qp_solves;
    BoxQpOptions o;
    o.check_psd = false;
    return box_qp_solve(Qcc_, b, set_.lower, set_.upper, w, c, 0.25 * opts_.inner_tol, o, warm);
  }

  void solve_cell(Strategy& y) {
    if (nc_ == 0) {
      offer(y);
      if (!out_->aborted) note_bound(value(y));
      return;
    }
    const Eigen::VectorXd yd = y.head(nd_);
    long double cst = 0.0L;
    for (Eigen::Index r = 0; r < nd_; ++r) {
      long double row = 0.0L;
      for (Eigen::Index k = 0; k < nd_; ++k) row += static_cast<long double>(Q_(r, k)) * yd[k];
      cst += 0.5L * row * yd[r] + static_cast<long double>(h_[r]) * yd[r];
      cst += static_cast<long double>(tau_) * g_.icrf[i_].coordinate(yd[r] - x_[i_][r]);
    }
    const Eigen::VectorXd b = h_.tail(nc_) + Qcd_ * yd;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nc_);

    auto offer_c = [&](const Eigen::VectorXd& yc) {
      y.tail(nc_) = yc;
      offer(y);
    };

    const BoxQpResult q0 = qp(b, zero, center_);
    offer_c(q0.point);
    if (out_->aborted) return;
    const long double lb0 = cst + q0.lower_bound_ext;
    if (tau_ == 0.0) {
      note_bound(lb0);
      return;
    }
    const BoxQpResult env = qp(b, env_w_, center_, &q0.point);
    offer_c(env.point);
    if (out_->aborted) return;
    const long double lb_env = std::max(lb0, cst + env.lower_bound_ext);
    if (lb_env >= threshold()) {
      ++out_->stats.pruned_cells;
      note_bound(lb_env);
      return;
    }

    const bool exact_models = models_.front().exact();
    long double cell_lb = lb_env;
    if (exact_models) {
      std::vector<std::vector<Piece>> lists;
      for (const auto& m : models_) lists.push_back(m.pieces());
      if (combos(lists) <= opts_.cell_cap) {
        Eigen::VectorXd lb_point;
        cell_lb = std::max(cell_lb, enumerate(lists, b, cst, lb0, q0.point, offer_c, lb_point));
      } else if (mode_->exact) {
        throw CapacityError("agent " + std::to_string(i_) +
                            ": penalty-piece combinations exceed the cell cap; use delta_proximal_br");
      } else {
        majorize(b, q0.point, env.point, offer_c);
      }
    } else {
      bool closed = false;
      for (int r = 0; r <= opts_.max_refinements && !out_->aborted; ++r) {
        std::vector<std::vector<Piece>> lists;
        for (const auto& m : models_) lists.push_back(m.pieces());
        if (combos(lists) > opts_.cell_cap) break;
        Eigen::VectorXd lb_point;
        const long double lb = enumerate(lists, b, cst, lb0, q0.point, offer_c, lb_point);
        cell_lb = std::max(cell_lb, lb);
        if (cell_lb >= threshold()) {
          closed = true;
          break;
        }
        if (lb_point.size() == 0) break;
        bool added = false;
        for (Eigen::Index k = 0; k < nc_; ++k) added = models_[k].refine(lb_point[k]) || added;
        if (!added) break;
        ++out_->stats.refinements;
      }
      if (!closed && !out_->aborted) {
        majorize(b, q0.point, env.point, offer_c);
        if (cell_lb < threshold()) out_->certified = false;
      }
    }
    if (!out_->aborted) note_bound(cell_lb);
  }

  static std::size_t combos(const std::vector<std::vector<Piece>>& lists) {
    std::size_t n = 1;
    for (const auto& l : lists) {
      if (n > std::numeric_limits<std::size_t>::max() / l.size()) return std::numeric_limits<std::size_t>::max();
      n *= l.size();
    }
    return n;
  }

  /// Solves every piece combination not excluded by its constant offset.
  /// Returns the cell lower bound; lb_point gets the bound-minimizing solution.
  template <class Offer>
  long double enumerate(const std::vector<std::vector<Piece>>& lists, const Eigen::VectorXd& b,
                        long double base, long double lb0, const Eigen::VectorXd& warm, Offer&& offer_c,
                   Eigen::VectorXd& lb_point) {
    const std::size_t n = lists.size();
    std::vector<std::size_t> idx(n, 0);
    Eigen::VectorXd w(nc_), c(nc_);
    long double cell_lb = std::numeric_limits<long double>::infinity();
    for (;;) {
      long double offset = 0.0L;
      for (std::size_t k = 0; k < n; ++k) offset += lists[k][idx[k]].offset;
      const long double cheap = lb0 + offset;
      if (cheap >= threshold()) {
        cell_lb = std::min(cell_lb, cheap);
      } else {
        for (std::size_t k = 0; k < n; ++k) {
          w[k] = lists[k][idx[k]].weight;
          c[k] = lists[k][idx[k]].center;
        }
        const BoxQpResult r = qp(b, w, c, &warm);
        const long double lb = base + r.lower_bound_ext + offset;
        if (lb < cell_lb) {
          cell_lb = lb;
          lb_point = r.point;
        }
        offer_c(r.point);
        if (out_->aborted) return cell_lb;
      }
      std::size_t k = n;
      while (k > 0) {
        --k;
        if (++idx[k] < lists[k].size()) break;
        idx[k] = 0;
        if (k == 0) return cell_lb;
      }
      if (n == 0) return cell_lb;
    }
  }

  /// Local descent from a few starts; each step minimizes a convex majorizer.
  template <class Offer>
  void majorize(const Eigen::VectorXd& b, const Eigen::VectorXd& s0, const Eigen::VectorXd& s1,
                Offer&& offer_c) {
    out_->stats.used_mm = true;
    const Eigen::VectorXd s2 = center_.cwiseMax(set_.lower).cwiseMin(set_.upper);
    Eigen::VectorXd w(nc_), c(nc_);
    for (const Eigen::VectorXd* start : {&s0, &s1, &s2}) {
      Eigen::VectorXd cur = *start;
      for (int it = 0; it < opts_.mm_iterations; ++it) {
        for (Eigen::Index k = 0; k < nc_; ++k) {
          const Piece p = models_[k].majorizer(cur[k]);
          w[k] = p.weight;
          c[k] = p.center;
        }
        const BoxQpResult r = qp(b, w, c, &cur);
        offer_c(r.point);
        if (out_->aborted) return;
        if ((r.point - cur).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + cur.lpNorm<Eigen::Infinity>()))
          break;
        cur = r.point;
      }
    }
  }

  const QuadraticMiGame& g_;
  std::size_t i_;
  const StrategyProfile& x_;
  double tau_;
  BrOptions opts_;
  const MixedIntegerBox& set_;
  Eigen::Index nd_ = 0, nc_ = 0;
  Eigen::MatrixXd Q_, Qcc_, Qcd_;
  Eigen::VectorXd h_, center_, env_w_;
  std::vector<CoordinateModel> models_;
  const SearchMode* mode_ = nullptr;
  SearchOutcome* out_ = nullptr;
};

inline BrResult finish(const SearchOutcome& s) {
  BrResult r;
  r.argmin = s.best;
  r.value_ext = s.best_value;
  r.lower_bound_ext = std::min(s.lower_bound, s.best_value);
  r.value = static_cast<double>(r.value_ext);
  r.lower_bound = static_cast<double>(r.lower_bound_ext);
  r.certificate_gap = static_cast<double>(r.value_ext - r.lower_bound_ext);
  r.stats = s.stats;
  return r;
}

}  // namespace detail

/// Global minimizer of the proximal cost to certified gap <= opts.inner_tol.
/// tau = 0 gives the plain best response.
inline BrResult exact_proximal_br(const QuadraticMiGame& g, std::size_t i, const StrategyProfile& x,
                                  double tau, const BrOptions& opts = {}) {
  detail::ProximalSubproblem sub(g, i, x, tau, opts);
  detail::SearchMode mode;
  mode.slack = opts.inner_tol;
  mode.exact = true;
  const auto s = sub.search(mode);
  BrResult r = detail::finish(s);
  if (r.certificate_gap > opts.inner_tol)
    throw UnsupportedStructure("agent " + std::to_string(i) + ": best response certified only to gap " +
                               std::to_string(r.certificate_gap) + "; use delta_proximal_br");
  return r;
}

/// A delta-optimal proximal response. certificate_gap <= delta whenever the
/// continuous restrictions are exactly solvable; otherwise the reported gap is
/// the honest (larger) certificate.
inline BrResult delta_proximal_br(const QuadraticMiGame& g, std::size_t i, const StrategyProfile& x,
                                  double tau, double delta, const BrOptions& opts = {}) {
  if (!(delta > 0.0)) throw ArgumentError("delta_proximal_br requires delta > 0");
  detail::ProximalSubproblem sub(g, i, x, tau, opts);
  detail::SearchMode mode;
  mode.slack = delta;
  mode.exact = false;
  return detail::finish(sub.search(mode));
}

/// Certified membership of y in the delta-optimal response set. member == true
/// implies proximal_cost(y) <= lower_bound + delta <= min + delta.
inline MembershipResult delta_membership(const QuadraticMiGame& g, std::size_t i, const Strategy& y,
                                         const StrategyProfile& x, double tau, double delta,
                                         const BrOptions& opts = {}) {
  if (!(delta >= 0.0)) throw ArgumentError("membership test requires delta >= 0");
  if (!feasible_contains(g.sets.at(i), y)) throw ArgumentError("tested strategy is infeasible");
  detail::ProximalSubproblem sub(g, i, x, tau, opts);
  const long double vy = sub.value(y);
  detail::SearchMode mode;
  mode.slack = delta;
  mode.exact = false;
  mode.abort_below = vy - delta;
  const auto s = sub.search(mode, y);
  MembershipResult m;
  m.value = static_cast<double>(vy);
  const long double lb = std::min(s.lower_bound, vy);
  m.lower_bound = static_cast<double>(lb);
  m.stats = s.stats;
  m.member = !s.aborted && lb >= *mode.abort_below;
  m.gap_bound = static_cast<double>(vy - lb);
  return m;
}

inline bool is_delta_optimal(const QuadraticMiGame& g, std::size_t i, const Strategy& y,
                             const StrategyProfile& x, double tau, double delta,
                             const BrOptions& opts = {}) {
  return delta_membership(g, i, y, x, tau, delta, opts).member;
}

}  // namespace mineseek
