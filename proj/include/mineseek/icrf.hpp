#pragma once

// Integer-compatible regularization functions (ICRFs).
//
// Every built-in kind is separable: rho(t) = sum_k psi(t_k) for a scalar
// profile psi. The proximal best-response solver relies on this.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "mineseek/errors.hpp"
#include "mineseek/random.hpp"

namespace mineseek {

enum class Family { Log, Power, Exponential, Sigmoid };

/// Concave, strictly increasing p : R>=0 -> R>=0 with p(0) = 0.
struct FamilyParams {
  Family family = Family::Exponential;
  double alpha = 0.9;
  double q = 1.0;  // only used by Family::Power

  bool operator==(const FamilyParams&) const = default;
};

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::Log: return "log";
    case Family::Power: return "power";
    case Family::Exponential: return "exponential";
    case Family::Sigmoid: return "sigmoid";
  }
  return "?";
}

inline Family parse_family(std::string_view name) {
  if (name == "log") return Family::Log;
  if (name == "power") return Family::Power;
  if (name == "exponential") return Family::Exponential;
  if (name == "sigmoid") return Family::Sigmoid;
  throw ArgumentError("unknown penalty family '" + std::string(name) + "'");
}

inline void check_family(const FamilyParams& f) {
  if (!(f.alpha > 0.0) || !std::isfinite(f.alpha))
    throw ArgumentError("penalty family requires alpha > 0");
  if (f.family == Family::Power && (!(f.q > 0.0) || !std::isfinite(f.q)))
    throw ArgumentError("power family requires q > 0");
}

/// p(s) for s >= 0. Written with expm1/log1p so that p(0) == 0 exactly.
inline double family_value(const FamilyParams& f, double s) {
  switch (f.family) {
    case Family::Log: return std::log1p(s / f.alpha);
    case Family::Power: return std::pow(f.alpha, -f.q) - std::pow(s + f.alpha, -f.q);
    case Family::Exponential: return -std::expm1(-f.alpha * s);
    case Family::Sigmoid: return 0.5 * std::tanh(0.5 * f.alpha * s);
  }
  return 0.0;
}

/// p'(s) for s >= 0 (right derivative at 0).
inline double family_slope(const FamilyParams& f, double s) {
  switch (f.family) {
    case Family::Log: return 1.0 / (s + f.alpha);
    case Family::Power: return f.q * std::pow(s + f.alpha, -f.q - 1.0);
    case Family::Exponential: return f.alpha * std::exp(-f.alpha * s);
    case Family::Sigmoid: {
      const double th = std::tanh(0.5 * f.alpha * s);
      return 0.25 * f.alpha * (1.0 - th * th);
    }
  }
  return 0.0;
}

/// sup_{s >= 0} p(s); +inf for the log family.
inline double family_sup(const FamilyParams& f) {
  switch (f.family) {
    case Family::Log: return std::numeric_limits<double>::infinity();
    case Family::Power: return std::pow(f.alpha, -f.q);
    case Family::Exponential: return 1.0;
    case Family::Sigmoid: return 0.5;
  }
  return 0.0;
}

/// p^{-1}(K) for 0 <= K < sup p.
inline double family_inverse(const FamilyParams& f, double K) {
  if (!(K >= 0.0)) throw DomainError("s^-1 requires K >= 0");
  if (!(K < family_sup(f)))
    throw DomainError("s^-1 requested at K = " + std::to_string(K) + " beyond the validity cap " +
                      std::to_string(family_sup(f)));
  switch (f.family) {
    case Family::Log: return f.alpha * std::expm1(K);
    case Family::Power: return std::pow(std::pow(f.alpha, -f.q) - K, -1.0 / f.q) - f.alpha;
    case Family::Exponential: return -std::log1p(-K) / f.alpha;
    case Family::Sigmoid: return 2.0 * std::atanh(2.0 * K) / f.alpha;
  }
  return 0.0;
}

/// rho(t) = ||t||_1.
struct L1Norm {
  bool operator==(const L1Norm&) const = default;
};

/// rho(t) = sum_k p(|t_k|).
struct Decomposable {
  FamilyParams family;
  bool operator==(const Decomposable&) const = default;
};

/// rho(t) = sum_k min{p(|t_k|), p(|1 - t_k|)}. Vanishes at t_k = 1, so it is
/// not an ICRF when applied to strategy differences.
struct BinaryMin {
  FamilyParams family;
  bool operator==(const BinaryMin&) const = default;
};

/// rho(t) = sum_k f(|t_k|) with f concave piecewise affine, f(0) = 0.
/// breakpoints[0] = 0 and values[j] = f(breakpoints[j]); beyond the last
/// breakpoint f continues with slope tail_slope.
struct PiecewiseAffine {
  std::vector<double> breakpoints;
  std::vector<double> values;
  double tail_slope = 0.0;

  bool operator==(const PiecewiseAffine&) const = default;

  std::size_t segments() const { return breakpoints.size(); }

  /// Slope of segment j; the last "segment" is the unbounded tail.
  double slope(std::size_t j) const {
    if (j + 1 >= breakpoints.size()) return tail_slope;
    return (values[j + 1] - values[j]) / (breakpoints[j + 1] - breakpoints[j]);
  }

  /// Index j of the segment containing s >= 0 (breakpoints[j] <= s).
  std::size_t segment_of(double s) const {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), s);
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - breakpoints.begin()) - 1));
  }

  double operator()(double s) const {
    const std::size_t j = segment_of(s);
    return values[j] + slope(j) * (s - breakpoints[j]);
  }

  double sup() const {
    return tail_slope > 0.0 ? std::numeric_limits<double>::infinity() : values.back();
  }

  double inverse(double K) const {
    if (!(K >= 0.0)) throw DomainError("s^-1 requires K >= 0");
    if (!(K < sup()))
      throw DomainError("s^-1 requested at K = " + std::to_string(K) +
                        " beyond the validity cap " + std::to_string(sup()));
    for (std::size_t j = 0; j + 1 < breakpoints.size(); ++j) {
      if (K < values[j + 1]) return breakpoints[j] + (K - values[j]) / slope(j);
    }
    return breakpoints.back() + (K - values.back()) / tail_slope;
  }

  void validate() const {
    if (breakpoints.size() < 2 || breakpoints.size() != values.size())
      throw ArgumentError("piecewise-affine profile needs >= 2 breakpoints with matching values");
    if (breakpoints[0] != 0.0 || values[0] != 0.0)
      throw ArgumentError("piecewise-affine profile must start at (0, 0)");
    for (std::size_t j = 0; j + 1 < breakpoints.size(); ++j) {
      if (!(breakpoints[j + 1] > breakpoints[j]))
        throw ArgumentError("piecewise-affine breakpoints must be strictly increasing");
    }
    const double scale = std::max(1e-300, std::abs(slope(0)));
    for (std::size_t j = 0; j < breakpoints.size(); ++j) {
      const double sj = slope(j);
      if (!(sj >= 0.0) || !std::isfinite(sj))
        throw ArgumentError("piecewise-affine slopes must be finite and non-negative");
      if (j > 0 && sj > slope(j - 1) + 1e-12 * scale)
        throw ArgumentError("piecewise-affine slopes must be non-increasing (concave profile)");
    }
  }
};

class IcrfSpec {
 public:
  using Kind = std::variant<L1Norm, Decomposable, BinaryMin, PiecewiseAffine>;

  IcrfSpec(Kind kind, std::size_t dimension) : kind_(std::move(kind)), dimension_(dimension) {
    if (dimension_ == 0) throw ArgumentError("ICRF dimension must be positive");
    std::visit(
        [](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Decomposable> || std::is_same_v<K, BinaryMin>)
            check_family(k.family);
          else if constexpr (std::is_same_v<K, PiecewiseAffine>)
            k.validate();
        },
        kind_);
  }

  static IcrfSpec l1(std::size_t n) { return {L1Norm{}, n}; }
  static IcrfSpec decomposable(FamilyParams f, std::size_t n) { return {Decomposable{f}, n}; }
  static IcrfSpec binary_min(FamilyParams f, std::size_t n) { return {BinaryMin{f}, n}; }

  const Kind& kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }

  template <class K>
  bool is() const {
    return std::holds_alternative<K>(kind_);
  }

  /// BinaryMin breaks axiom (i); the seek runners refuse it unless waived.
  bool non_icrf() const { return is<BinaryMin>(); }

  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, L1Norm>) return "l1";
          else if constexpr (std::is_same_v<K, Decomposable>) return "decomposable";
          else if constexpr (std::is_same_v<K, BinaryMin>) return "binary_min";
          else return "piecewise_affine";
        },
        kind_);
  }

  /// Scalar profile psi(t) with rho(t) = sum_k psi(t_k).
  double coordinate(double t) const {
    return std::visit(
        [t](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          const double a = std::abs(t);
          if constexpr (std::is_same_v<K, L1Norm>) return a;
          else if constexpr (std::is_same_v<K, Decomposable>) return family_value(k.family, a);
          else if constexpr (std::is_same_v<K, BinaryMin>)
            return std::min(family_value(k.family, a), family_value(k.family, std::abs(1.0 - t)));
          else return k(a);
        },
        kind_);
  }

  double eval(std::span<const double> t) const {
    if (t.size() != dimension_)
      throw ArgumentError("ICRF of dimension " + std::to_string(dimension_) +
                          " evaluated on a vector of length " + std::to_string(t.size()));
    double sum = 0.0;
    for (double v : t) sum += coordinate(v);
    return sum;
  }

  /// Validity cap K-bar of the companion bound.
  double cap() const {
    return std::visit(
        [](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, L1Norm>) return std::numeric_limits<double>::infinity();
          else if constexpr (std::is_same_v<K, PiecewiseAffine>) return k.sup();
          else return family_sup(k.family);
        },
        kind_);
  }

  /// s^{-1}(K): rho(t) <= K implies ||t||_1 <= s^{-1}(K). For concave p with
  /// p(0) = 0 subadditivity gives s = p; for the l1 norm s is the identity.
  double s_inverse(double K) const {
    return std::visit(
        [K](const auto& k) -> double {
          using Kd = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<Kd, L1Norm>) {
            if (!(K >= 0.0)) throw DomainError("s^-1 requires K >= 0");
            return K;
          } else if constexpr (std::is_same_v<Kd, PiecewiseAffine>) {
            return k.inverse(K);
          } else {
            return family_inverse(k.family, K);
          }
        },
        kind_);
  }

  /// sup of |psi'|, used for Lipschitz bounds.
  double max_slope() const {
    return std::visit(
        [](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, L1Norm>) return 1.0;
          else if constexpr (std::is_same_v<K, PiecewiseAffine>) return k.slope(0);
          else return family_slope(k.family, 0.0);
        },
        kind_);
  }

  /// Weight w with psi(t) >= w |t| for |t| <= W (chord of a concave profile
  /// through the origin). Zero for BinaryMin, which has no such bound.
  double envelope_slope(double W) const {
    if (is<BinaryMin>() || !(W > 0.0)) return 0.0;
    if (is<L1Norm>()) return 1.0;
    return coordinate(W) / W;
  }

 private:
  Kind kind_;
  std::size_t dimension_;
};

template <class Vec>
  requires requires(const Vec& v) {
    v.data();
    v.size();
  }
double icrf_eval(const IcrfSpec& spec, const Vec& t) {
  return spec.eval(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
}

inline double icrf_s_inverse(const IcrfSpec& spec, double K) { return spec.s_inverse(K); }

// ---------------------------------------------------------------------------
// Piecewise-affine approximation of a concave family.

enum class Spacing { Geometric, Uniform };

/// Interpolates p at breakpoints on [0, range_max]. Geometric spacing starts at
/// the family's natural length scale 1/alpha, where the curvature lives.
inline PiecewiseAffine piecewise_affine_profile(const FamilyParams& family, double range_max,
                                                int segments,
                                                Spacing spacing = Spacing::Geometric) {
  check_family(family);
  if (!(range_max > 0.0)) throw ArgumentError("piecewise-affine range must be positive");
  if (segments < 2) throw ArgumentError("piecewise-affine approximation needs >= 2 segments");

  std::vector<double> b(static_cast<std::size_t>(segments) + 1);
  b[0] = 0.0;
  const double first = 1.0 / family.alpha;
  if (spacing == Spacing::Geometric && first < range_max) {
    const double ratio = std::pow(range_max / first, 1.0 / (segments - 1));
    for (int j = 1; j < segments; ++j) b[j] = first * std::pow(ratio, j - 1);
  } else {
    for (int j = 1; j < segments; ++j) b[j] = range_max * j / segments;
  }
  b[segments] = range_max;

  PiecewiseAffine pa;
  pa.breakpoints = b;
  pa.values.resize(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) pa.values[j] = family_value(family, b[j]);
  pa.tail_slope = pa.slope(b.size() - 2);

  const double scale = pa.slope(0);
  for (std::size_t j = 1; j < b.size(); ++j) {
    if (pa.slope(j) > pa.slope(j - 1) + 1e-12 * scale)
      throw ConstructionError("family sample is not concave on segment " + std::to_string(j));
  }
  return pa;
}

inline IcrfSpec piecewise_affine_approx(const FamilyParams& family, double range_max, int segments,
                                        std::size_t dimension,
                                        Spacing spacing = Spacing::Geometric) {
  return {piecewise_affine_profile(family, range_max, segments, spacing), dimension};
}

// ---------------------------------------------------------------------------
// Sampling-based axiom validation.

struct AxiomViolation {
  int axiom = 0;  // 1, 2 or 3
  std::vector<double> witness;
  double gamma = 0.0;  // contraction factor for axiom 2
  std::string detail;
};

struct ValidationReport {
  std::size_t points_checked = 0;
  std::vector<AxiomViolation> violations;

  bool passed() const { return violations.empty(); }
  bool violates(int axiom) const {
    return std::any_of(violations.begin(), violations.end(),
                       [axiom](const AxiomViolation& v) { return v.axiom == axiom; });
  }
};

struct ValidationOptions {
  /// Coordinates are drawn as scale * u * 10^-e, u ~ U(-1,1), e ~ U(0,3).
  /// Saturating families are flat in floating point far from the origin, so
  /// the scale should stay within their numerically increasing range.
  double sample_scale = 10.0;
  std::size_t max_reported = 64;
};

/// Checks the ICRF axioms on deterministic probes (signed unit vectors at
/// several magnitudes, the all-ones vector) plus sample_count seeded draws.
inline ValidationReport icrf_validate(const IcrfSpec& spec, std::size_t sample_count,
                                      std::uint64_t seed, ValidationOptions opts = {}) {
  if (sample_count == 0) throw ArgumentError("icrf_validate needs sample_count >= 1");
  const std::size_t n = spec.dimension();
  ValidationReport report;
  Rng rng(seed);

  auto add = [&](int axiom, const std::vector<double>& t, double gamma, std::string detail) {
    if (report.violations.size() < opts.max_reported)
      report.violations.push_back({axiom, t, gamma, std::move(detail)});
  };

  const std::vector<double> zero(n, 0.0);
  if (spec.eval(zero) != 0.0) add(1, zero, 0.0, "rho(0) != 0");

  auto check_point = [&](const std::vector<double>& t) {
    ++report.points_checked;
    const double r = spec.eval(t);
    if (!(r > 0.0)) add(1, t, 0.0, "rho(t) = " + std::to_string(r) + " for t != 0");

    const double gamma = 0.01 + 0.98 * rng.unit();
    std::vector<double> gt(t);
    for (double& v : gt) v *= gamma;
    const double rg = spec.eval(gt);
    if (!(rg < r))
      add(2, t, gamma, "rho(gamma t) = " + std::to_string(rg) + " >= rho(t) = " + std::to_string(r));

    if (r < spec.cap()) {
      double l1 = 0.0;
      for (double v : t) l1 += std::abs(v);
      const double bound = spec.s_inverse(r);
      if (l1 > bound + 1e-9 * std::max(1.0, bound))
        add(3, t, 0.0,
            "||t||_1 = " + std::to_string(l1) + " exceeds s^-1(rho(t)) = " + std::to_string(bound));
    }
  };

  for (std::size_t k = 0; k < n; ++k) {
    for (double mag : {1.0, -1.0, 0.5, 2.0}) {
      std::vector<double> t(n, 0.0);
      t[k] = mag;
      check_point(t);
    }
  }
  check_point(std::vector<double>(n, 1.0));

  for (std::size_t s = 0; s < sample_count; ++s) {
    std::vector<double> t(n);
    bool nonzero = false;
    for (double& v : t) {
      v = opts.sample_scale * rng.uniform(-1.0, 1.0) * std::pow(10.0, -3.0 * rng.unit());
      nonzero = nonzero || v != 0.0;
    }
    if (nonzero) check_point(t);
  }
  return report;
}

}  // namespace mineseek
