#pragma once

// Proximal Gauss-Seidel best-response dynamics.
//
// run_algorithm1 uses exact proximal best responses; run_algorithm2 uses
// delta-optimal ones and keeps an agent's strategy whenever it is already
// delta-optimal. Both shrink tau by tau+ = max{omega tau, min{tau, d_rho}}.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mineseek/brsolve.hpp"
#include "mineseek/errors.hpp"
#include "mineseek/game.hpp"
#include "mineseek/icrf.hpp"
#include "mineseek/random.hpp"
#include "mineseek/verify.hpp"

namespace mineseek {

/// max_i rho_i(x_new_i - x_old_i).
inline double d_rho(const StrategyProfile& x_new, const StrategyProfile& x_old,
                    const std::vector<IcrfSpec>& icrfs) {
  if (x_new.size() != x_old.size() || x_new.size() != icrfs.size())
    throw ArgumentError("d_rho: profiles and ICRFs are not conformable");
  double d = 0.0;
  for (std::size_t i = 0; i < x_new.size(); ++i) {
    if (x_new[i].size() != x_old[i].size()) throw ArgumentError("d_rho: strategy sizes differ");
    const Strategy t = x_new[i] - x_old[i];
    d = std::max(d, icrf_eval(icrfs[i], t));
  }
  return d;
}

inline double tau_update(double tau, double omega, double d) {
  return std::max(omega * tau, std::min(tau, d));
}

/// Tolerance schedule k -> delta^k with a declared limit.
class DeltaSequence {
 public:
  /// (1e2 + (k^2 - 1) 1e-6) / k^2 for k >= 1, and delta^0 = delta^1.
  static DeltaSequence table_one() { return DeltaSequence(Kind::TableOne, 0.0, {}); }

  static DeltaSequence constant(double v) {
    if (!(v > 0.0)) throw ArgumentError("constant delta must be positive");
    return DeltaSequence(Kind::Constant, v, {});
  }

  /// Explicit values for k = 0, 1, ...; the last value repeats.
  static DeltaSequence from_values(std::vector<double> values) {
    if (values.empty()) throw ArgumentError("delta table is empty");
    for (double v : values)
      if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("delta values must be positive and finite");
    return DeltaSequence(Kind::Table, 0.0, std::move(values));
  }

  /// "tableI", "const:<v>" or "file:<path>" (whitespace-separated values).
  static DeltaSequence parse(const std::string& text) {
    if (text == "tableI" || text == "tablei" || text == "table1") return table_one();
    if (text.rfind("const:", 0) == 0) {
      const std::string v = text.substr(6);
      std::size_t used = 0;
      double d = 0.0;
      try {
        d = std::stod(v, &used);
      } catch (const std::exception&) {
        throw ArgumentError("bad constant delta '" + v + "'");
      }
      if (used != v.size()) throw ArgumentError("bad constant delta '" + v + "'");
      return constant(d);
    }
    if (text.rfind("file:", 0) == 0) {
      const std::string path = text.substr(5);
      std::ifstream in(path);
      if (!in) throw ArgumentError("cannot read delta file '" + path + "'");
      std::vector<double> values;
      std::string tok;
      while (in >> tok) {
        try {
          values.push_back(std::stod(tok));
        } catch (const std::exception&) {
          throw ArgumentError("bad value '" + tok + "' in delta file");
        }
      }
      return from_values(std::move(values));
    }
    throw ArgumentError("unknown delta sequence '" + text + "' (expected tableI, const:<v>, file:<path>)");
  }

  double operator()(std::size_t k) const {
    switch (kind_) {
      case Kind::TableOne: {
        const double kk = static_cast<double>(std::max<std::size_t>(k, 1));
        return (1e2 + (kk * kk - 1.0) * 1e-6) / (kk * kk);
      }
      case Kind::Constant: return value_;
      case Kind::Table: return values_[std::min(k, values_.size() - 1)];
    }
    return value_;
  }

  double limit() const {
    switch (kind_) {
      case Kind::TableOne: return 1e-6;
      case Kind::Constant: return value_;
      case Kind::Table: return values_.back();
    }
    return value_;
  }

  std::string describe() const {
    char buf[64];
    switch (kind_) {
      case Kind::TableOne: return "tableI";
      case Kind::Constant: std::snprintf(buf, sizeof buf, "const:%.17g", value_); return buf;
      case Kind::Table: return "table[" + std::to_string(values_.size()) + "]";
    }
    return "";
  }

 private:
  enum class Kind { TableOne, Constant, Table };
  DeltaSequence(Kind k, double v, std::vector<double> values) : kind_(k), value_(v), values_(std::move(values)) {}

  Kind kind_;
  double value_;
  std::vector<double> values_;
};

struct SeekConfig {
  double tau0 = 5000.0;
  double omega = 0.5;
  DeltaSequence delta = DeltaSequence::table_one();
  std::size_t max_iterations = 1000;
  double tau_min = 1e-9;
  std::optional<StrategyProfile> x0;  // default: all zeros
  /// Verify after every round without a strategy change, whatever tau is.
  /// false applies the literal rule: only once tau <= tau_min.
  bool verify_on_stall = true;
  bool randomize_order = false;
  std::uint64_t order_seed = 0;
  bool record_timing = false;
  bool waive_icrf_validation = false;
  bool force_potential_gate = false;
  std::size_t icrf_validation_samples = 256;
  std::size_t potential_gate_samples = 200;
  std::optional<StrategyProfile> reference;  // default: the verified final profile
  BrOptions br;

  void validate() const {
    if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ArgumentError("tau0 must be positive");
    if (!(omega > 0.0 && omega < 1.0)) throw ArgumentError("omega must lie in (0, 1)");
    if (!(tau_min >= 0.0)) throw ArgumentError("tau_min must be >= 0");
    if (max_iterations == 0) throw ArgumentError("max_iterations must be positive");
    if (!(br.inner_tol > 0.0)) throw ArgumentError("inner_tol must be positive");
  }
};

struct AgentStep {
  std::size_t agent = 0;
  double rho = 0.0;            // rho_i(x_i^{k+1} - x_i^k)
  double cert_gap = 0.0;       // certificate of the response actually used
  bool kept = false;           // strategy retained by the acceptance test
  bool changed = false;
  double cost_decrease = 0.0;  // J_i(before) - J_i(after), other agents as seen by i
  double br_time_s = 0.0;
};

struct IterationRecord {
  std::size_t k = 0;
  double tau = 0.0;
  double delta = std::numeric_limits<double>::quiet_NaN();
  double d_rho = 0.0;
  double potential = std::numeric_limits<double>::quiet_NaN();  // P(x^k)
  double dist_to_ref = std::numeric_limits<double>::quiet_NaN();
  StrategyProfile profile;                                       // x^k
  std::vector<AgentStep> steps;
};

struct IterationTrace {
  std::vector<IterationRecord> rounds;
  StrategyProfile final_profile;
  double final_potential = std::numeric_limits<double>::quiet_NaN();
  double final_dist_to_ref = std::numeric_limits<double>::quiet_NaN();
};

enum class StopReason { Verified, MaxIterations, Uncertified };

inline const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Verified: return "verified";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Uncertified: return "uncertified_response";
  }
  return "";
}

struct SeekResult {
  StrategyProfile final_profile;
  IterationTrace trace;
  std::optional<NeVerdict> verdict;  // last verification performed
  bool converged = false;            // stopped with a verified profile
  StopReason reason = StopReason::MaxIterations;
  std::size_t iterations = 0;        // completed rounds
  double epsilon = 0.0;              // tolerance the verdict was checked at
  std::string detail;
};

namespace detail {

inline double profile_distance(const StrategyProfile& a, const StrategyProfile& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (Eigen::Index k = 0; k < a[i].size(); ++k) {
      const long double d = static_cast<long double>(a[i][k]) - b[i][k];
      s += d * d;
    }
  return static_cast<double>(std::sqrt(s));
}

inline bool same_strategy(const Strategy& a, const Strategy& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

inline void check_icrfs(const QuadraticMiGame& g, const SeekConfig& cfg) {
  if (cfg.waive_icrf_validation) return;
  for (std::size_t i = 0; i < g.agents(); ++i) {
    if (g.icrf[i].non_icrf())
      throw AssumptionError("agent " + std::to_string(i) + " uses a binary_min regularizer, which is not an ICRF");
    const auto rep = icrf_validate(g.icrf[i], cfg.icrf_validation_samples, 0x1c2f + i);
    if (!rep.passed())
      throw AssumptionError("agent " + std::to_string(i) + " regularizer fails ICRF axiom " +
                            std::to_string(rep.violations.front().axiom));
  }
}

enum class Variant { Exact, Inexact };

inline SeekResult run(const QuadraticMiGame& g, const SeekConfig& cfg, Variant variant) {
  cfg.validate();
  g.validate();
  check_icrfs(g, cfg);
  const std::size_t N = g.agents();
  StrategyProfile x = cfg.x0 ? *cfg.x0 : default_start(g);
  check_profile(g, x);
  const bool has_potential = g.has_symmetric_coupling();
  const double inner = cfg.br.inner_tol;

  SeekResult res;
  res.epsilon = (variant == Variant::Inexact ? cfg.delta.limit() : 0.0) + static_cast<double>(N) * inner;

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng order_rng(cfg.order_seed);

  double tau = cfg.tau0;
  for (std::size_t k = 0; k < cfg.max_iterations; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.tau = tau;
    rec.profile = x;
    if (has_potential) rec.potential = static_cast<double>(potential_formula(g, x));
    const double delta = variant == Variant::Inexact ? cfg.delta(k) : 0.0;
    if (variant == Variant::Inexact) rec.delta = delta;

    if (cfg.randomize_order)
      for (std::size_t a = N; a > 1; --a) std::swap(order[a - 1], order[order_rng.below(a)]);

    const StrategyProfile x_old = x;
    bool any_change = false;
    rec.steps.resize(N);
    for (std::size_t i : order) {
      AgentStep st;
      st.agent = i;
      const auto t0 = std::chrono::steady_clock::now();
      const long double before = cost_of(g, i, x[i], x);
      Strategy next = x[i];
      if (variant == Variant::Exact) {
        const BrResult br = exact_proximal_br(g, i, x, tau, cfg.br);
        st.cert_gap = br.certificate_gap;
        // x_i already attains the proximal minimum (its penalty is zero)
        st.kept = before - br.lower_bound_ext <= inner;
        if (!st.kept) next = br.argmin;
      } else {
        const MembershipResult m = delta_membership(g, i, x[i], x, tau, delta, cfg.br);
        if (m.member) {
          st.kept = true;
          st.cert_gap = m.gap_bound;
        } else {
          const BrResult br = delta_proximal_br(g, i, x, tau, delta, cfg.br);
          st.cert_gap = br.certificate_gap;
          next = br.argmin;
          if (br.certificate_gap > delta) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "agent %zu at k=%zu: response certified to %.3g > delta %.3g", i, k,
                          br.certificate_gap, delta);
            res.reason = StopReason::Uncertified;
            res.detail = buf;
            rec.steps[i] = st;
            res.trace.rounds.push_back(std::move(rec));
            res.final_profile = x;
            res.iterations = k;
            res.trace.final_profile = x;
            if (has_potential) res.trace.final_potential = static_cast<double>(potential_formula(g, x));
            return res;
          }
        }
      }
      if (cfg.record_timing)
        st.br_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      st.changed = !same_strategy(next, x[i]);
      if (st.changed) {
        const Strategy t = next - x[i];
        st.rho = icrf_eval(g.icrf[i], t);
        x[i] = next;
        st.cost_decrease = static_cast<double>(before - cost_of(g, i, x[i], x));
        any_change = true;
      }
      rec.steps[i] = st;
    }

    rec.d_rho = d_rho(x, x_old, g.icrf);
    res.trace.rounds.push_back(std::move(rec));
    res.iterations = k + 1;

    if (!any_change && (cfg.verify_on_stall || tau <= cfg.tau_min)) {
      res.verdict = check_epsilon_mine(g, x, res.epsilon, 0.0, cfg.br);
      if (res.verdict->is_equilibrium) {
        res.converged = true;
        res.reason = StopReason::Verified;
        break;
      }
    }
    tau = tau_update(tau, cfg.omega, res.trace.rounds.back().d_rho);
  }

  res.final_profile = x;
  res.trace.final_profile = x;
  if (has_potential) res.trace.final_potential = static_cast<double>(potential_formula(g, x));
  if (!res.converged) {
    res.reason = StopReason::MaxIterations;
    res.verdict = check_epsilon_mine(g, x, res.epsilon, 0.0, cfg.br);
    res.detail = "no verified equilibrium within " + std::to_string(cfg.max_iterations) + " rounds";
  }

  const StrategyProfile* ref = cfg.reference ? &*cfg.reference : (res.converged ? &res.final_profile : nullptr);
  if (ref) {
    for (auto& r : res.trace.rounds) r.dist_to_ref = profile_distance(r.profile, *ref);
    res.trace.final_dist_to_ref = profile_distance(res.final_profile, *ref);
  }
  return res;
}

}  // namespace detail

/// Exact proximal best-response dynamics.
inline SeekResult run_algorithm1(const QuadraticMiGame& g, const SeekConfig& cfg = {}) {
  return detail::run(g, cfg, detail::Variant::Exact);
}

/// Inexact dynamics; requires an exact potential unless cfg.force_potential_gate.
inline SeekResult run_algorithm2(const QuadraticMiGame& g, const SeekConfig& cfg = {}) {
  if (!cfg.force_potential_gate) {
    if (!g.has_symmetric_coupling())
      throw AssumptionError("game has no exact potential: coupling blocks are not transposes");
    const auto rep = potential_check_exact(g, cfg.potential_gate_samples, 0x9e37);
    if (!rep.passed()) throw AssumptionError("game fails the exact-potential identity check");
  }
  return detail::run(g, cfg, detail::Variant::Inexact);
}

// ---------------------------------------------------------------------------
// CSV export.

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kTraceHeader =
    "k,tau,d_rho,potential,dist_to_ref,agent_id,rho_i,cert_gap_i,kept_i,br_time_s";

/// One row per (k, agent), then a summary row per k with empty agent columns,
/// and a final row carrying the last profile's potential and distance.
inline void write_trace_csv(std::ostream& os, const IterationTrace& tr) {
  auto f = format_double;
  os << kTraceHeader << '\n';
  for (const auto& r : tr.rounds) {
    const std::string lead = std::to_string(r.k) + ',' + f(r.tau) + ',' + f(r.d_rho) + ',' + f(r.potential) +
                             ',' + f(r.dist_to_ref) + ',';
    for (const auto& s : r.steps)
      os << lead << s.agent << ',' << f(s.rho) << ',' << f(s.cert_gap) << ',' << (s.kept ? 1 : 0) << ','
         << f(s.br_time_s) << '\n';
    os << lead << ",,,,\n";
  }
  const std::size_t kf = tr.rounds.empty() ? 0 : tr.rounds.back().k + 1;
  os << kf << ",,," << f(tr.final_potential) << ',' << f(tr.final_dist_to_ref) << ",,,,,\n";
}

inline std::string trace_csv(const IterationTrace& tr) {
  std::ostringstream os;
  write_trace_csv(os, tr);
  return os.str();
}

}  // namespace mineseek
