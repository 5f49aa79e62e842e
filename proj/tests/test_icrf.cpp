#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <mineseek/icrf.hpp>
#include <mineseek/random.hpp>

#include "oracles.hpp"

using namespace mineseek;

namespace {

FamilyParams exp09() { return {Family::Exponential, 0.9, 1.0}; }

std::vector<IcrfSpec> builtin_icrfs(std::size_t n) {
  return {IcrfSpec::l1(n),
          IcrfSpec::decomposable({Family::Log, 0.9, 1.0}, n),
          IcrfSpec::decomposable({Family::Power, 0.9, 1.0}, n),
          IcrfSpec::decomposable({Family::Power, 2.0, 0.5}, n),
          IcrfSpec::decomposable(exp09(), n),
          IcrfSpec::decomposable({Family::Sigmoid, 0.9, 1.0}, n),
          piecewise_affine_approx(exp09(), 500.0, 8, n),
          piecewise_affine_approx({Family::Log, 1.0, 1.0}, 100.0, 6, n, Spacing::Uniform)};
}

}  // namespace

TEST(IcrfEval, L1NormSumsAbsoluteValues) {
  const std::vector<double> t{1.0, -2.0, 0.5};
  EXPECT_DOUBLE_EQ(icrf_eval(IcrfSpec::l1(3), t), 3.5);
}

TEST(IcrfEval, ZeroVectorIsZero) {
  const std::vector<double> t{0.0, 0.0};
  EXPECT_EQ(icrf_eval(IcrfSpec::decomposable(exp09(), 2), t), 0.0);
}

TEST(IcrfEval, ExponentialFamilyMatchesDirectFormula) {
  const std::vector<double> t{1.0};
  const double expected = 1.0 - std::exp(-0.9);
  EXPECT_NEAR(icrf_eval(IcrfSpec::decomposable(exp09(), 1), t), expected, 1e-15);
  EXPECT_NEAR(expected, 0.59343, 5e-6);
}

TEST(IcrfEval, BinaryMinTakesSmallerBranch) {
  const std::vector<double> t{0.2};
  const double expected = std::min(1.0 - std::exp(-0.2), 1.0 - std::exp(-0.8));
  const double v = icrf_eval(IcrfSpec::binary_min({Family::Exponential, 1.0, 1.0}, 1), t);
  EXPECT_NEAR(v, expected, 1e-15);
  EXPECT_NEAR(v, 0.18127, 5e-6);
}

TEST(IcrfEval, DimensionMismatchThrows) {
  const std::vector<double> t{1.0, 2.0};
  EXPECT_THROW(icrf_eval(IcrfSpec::l1(3), t), ArgumentError);
}

TEST(IcrfEval, AgreesWithIndependentProfile) {
  Rng rng(5);
  for (const auto& spec : builtin_icrfs(4)) {
    for (int s = 0; s < 200; ++s) {
      Eigen::VectorXd t(4);
      for (int k = 0; k < 4; ++k) t[k] = rng.uniform(-600.0, 600.0) * std::pow(10.0, -3.0 * rng.unit());
      EXPECT_NEAR(icrf_eval(spec, t), oracle::rho(spec, t), 1e-12 * (1.0 + oracle::rho(spec, t)))
          << spec.kind_name();
    }
  }
}

TEST(IcrfSInverse, L1IsIdentity) { EXPECT_DOUBLE_EQ(icrf_s_inverse(IcrfSpec::l1(2), 2.5), 2.5); }

TEST(IcrfSInverse, ExponentialInvertsTheFamily) {
  const auto spec = IcrfSpec::decomposable(exp09(), 2);
  EXPECT_NEAR(icrf_s_inverse(spec, 1.0 - std::exp(-0.9)), 1.0, 1e-12);
  EXPECT_NEAR(icrf_s_inverse(spec, 0.59343), 1.0, 1e-4);
}

TEST(IcrfSInverse, CapExceededIsDomainError) {
  const auto spec = IcrfSpec::decomposable(exp09(), 2);
  EXPECT_THROW(icrf_s_inverse(spec, 1.2), DomainError);
  EXPECT_THROW(icrf_s_inverse(spec, 1.0), DomainError);
  EXPECT_THROW(icrf_s_inverse(IcrfSpec::l1(1), -1.0), DomainError);
}

TEST(IcrfSInverse, BoundsTheL1NormOnSamples) {
  Rng rng(11);
  for (const auto& spec : builtin_icrfs(3)) {
    for (int s = 0; s < 500; ++s) {
      Eigen::VectorXd t(3);
      for (int k = 0; k < 3; ++k) t[k] = rng.uniform(-5.0, 5.0);
      const double r = icrf_eval(spec, t);
      if (!(r < spec.cap())) continue;
      EXPECT_LE(t.lpNorm<1>(), icrf_s_inverse(spec, r) * (1.0 + 1e-9) + 1e-12) << spec.kind_name();
    }
  }
}

TEST(IcrfValidate, BuiltinsPassAllAxioms) {
  for (const auto& spec : builtin_icrfs(3)) {
    const auto rep = icrf_validate(spec, 1000, 3);
    EXPECT_TRUE(rep.passed()) << spec.kind_name() << ": "
                              << (rep.violations.empty() ? "" : rep.violations.front().detail);
    EXPECT_GE(rep.points_checked, 1000u);
  }
}

TEST(IcrfValidate, BinaryMinViolatesPositivityAtOne) {
  const auto rep = icrf_validate(IcrfSpec::binary_min(exp09(), 1), 1000, 3);
  ASSERT_TRUE(rep.violates(1));
  bool found_unit = false;
  for (const auto& v : rep.violations)
    if (v.axiom == 1 && v.witness.size() == 1 && v.witness[0] == 1.0) found_unit = true;
  EXPECT_TRUE(found_unit);
  EXPECT_TRUE(IcrfSpec::binary_min(exp09(), 1).non_icrf());
}

TEST(IcrfValidate, DetectsContractionFailure) {
  // Convex increasing slopes are rejected at construction, so build the
  // counterexample through a flat segment: f stays constant on [1, 2].
  PiecewiseAffine pa{{0.0, 1.0, 2.0}, {0.0, 1.0, 1.0}, 0.0};
  const IcrfSpec spec(pa, 1);
  const auto rep = icrf_validate(spec, 2000, 7);
  EXPECT_TRUE(rep.violates(2));
}

TEST(IcrfValidate, IsDeterministic) {
  const auto spec = IcrfSpec::binary_min(exp09(), 2);
  const auto a = icrf_validate(spec, 500, 9);
  const auto b = icrf_validate(spec, 500, 9);
  ASSERT_EQ(a.violations.size(), b.violations.size());
  for (std::size_t k = 0; k < a.violations.size(); ++k) EXPECT_EQ(a.violations[k].witness, b.violations[k].witness);
}

TEST(PiecewiseAffine, AnchoredAtZero) {
  const auto spec = piecewise_affine_approx(exp09(), 500.0, 8, 1);
  EXPECT_EQ(spec.coordinate(0.0), 0.0);
}

TEST(PiecewiseAffine, InterpolatesAtBreakpoints) {
  const auto pa = piecewise_affine_profile(exp09(), 500.0, 8);
  ASSERT_EQ(pa.breakpoints.size(), 9u);
  EXPECT_EQ(pa.breakpoints.front(), 0.0);
  EXPECT_EQ(pa.breakpoints.back(), 500.0);
  for (double b : pa.breakpoints) EXPECT_NEAR(pa(b), 1.0 - std::exp(-0.9 * b), 1e-12);
}

TEST(PiecewiseAffine, UnderestimatesTheConcaveSource) {
  const auto pa = piecewise_affine_profile(exp09(), 500.0, 8);
  Rng rng(21);
  for (int s = 0; s < 100; ++s) {
    const double t = rng.uniform(0.0, 500.0);
    EXPECT_LE(pa(t), 1.0 - std::exp(-0.9 * t) + 1e-15);
  }
}

TEST(PiecewiseAffine, SlopesNonIncreasing) {
  for (auto spacing : {Spacing::Geometric, Spacing::Uniform}) {
    const auto pa = piecewise_affine_profile({Family::Log, 0.5, 1.0}, 50.0, 10, spacing);
    for (std::size_t j = 1; j < pa.segments(); ++j) EXPECT_LE(pa.slope(j), pa.slope(j - 1) * (1 + 1e-12));
  }
}

TEST(PiecewiseAffine, RejectsMalformedProfiles) {
  EXPECT_THROW(IcrfSpec(PiecewiseAffine{{0.0, 1.0, 2.0}, {0.0, 1.0, 3.0}, 0.0}, 1), ArgumentError);
  EXPECT_THROW(IcrfSpec(PiecewiseAffine{{0.0, 2.0, 1.0}, {0.0, 1.0, 2.0}, 0.0}, 1), ArgumentError);
  EXPECT_THROW(IcrfSpec(PiecewiseAffine{{0.5, 1.0}, {0.0, 1.0}, 0.0}, 1), ArgumentError);
  EXPECT_THROW(piecewise_affine_profile(exp09(), 500.0, 1), ArgumentError);
}

TEST(IcrfSpec, RejectsBadFamilyParameters) {
  EXPECT_THROW(IcrfSpec::decomposable({Family::Exponential, 0.0, 1.0}, 1), ArgumentError);
  EXPECT_THROW(IcrfSpec::decomposable({Family::Power, 1.0, -1.0}, 1), ArgumentError);
  EXPECT_THROW(IcrfSpec::l1(0), ArgumentError);
}

TEST(IcrfSpec, EnvelopeSlopeIsAValidChord) {
  Rng rng(4);
  for (const auto& spec : builtin_icrfs(1)) {
    for (int s = 0; s < 200; ++s) {
      const double W = rng.uniform(0.01, 600.0);
      const double w = spec.envelope_slope(W);
      const double t = rng.uniform(-W, W);
      EXPECT_GE(spec.coordinate(t), w * std::abs(t) - 1e-12) << spec.kind_name();
    }
  }
}
