#include <cmath>

#include <gtest/gtest.h>

#include "netpol/biclique.hpp"
#include "netpol/estimands.hpp"
#include "oracle.hpp"

using namespace netpol;
using namespace netpol::biclique_analysis;

namespace {

BicliqueSpec setting_a() { return {2, 3, {0.0, 3.0, 0.0}, {0.0, 0.0, 0.0}}; }
BicliqueSpec setting_b() { return {2, 3, {0.0, 0.0, 0.0}, {0.0, 2.0, 0.0}}; }

double binom_pmf(std::size_t k, std::size_t d, double p) {
  return oracle::choose(k, d) * std::pow(p, static_cast<double>(d)) * std::pow(1 - p, static_cast<double>(k - d));
}

}  // namespace

TEST(FBinom, WorkedValues) {
  EXPECT_NEAR(f_binom(2, 1, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(f_binom(3, 2, 0.5, true), 0.5, 1e-15);
  EXPECT_NEAR(f_binom(3, 0, 0.3), 0.343, 1e-15);
}

TEST(FBinom, OutOfRangeRejected) {
  EXPECT_THROW(f_binom(2, 3, 0.5), ValidationError);
  EXPECT_THROW(f_binom(2, 1, 1.5), ValidationError);
}

TEST(FBinom, CappedLevelsSumToOne) {
  for (std::size_t k = 0; k <= 8; ++k) {
    for (int step = 0; step <= 10; ++step) {
      const double p = step / 10.0;
      for (std::size_t cap = 1; cap <= 8; ++cap) {
        double s = 0.0;
        for (std::size_t d = 0; d <= cap; ++d) s += level_probability(k, d, cap, p);
        EXPECT_NEAR(s, 1.0, 1e-12) << "k=" << k << " p=" << p << " cap=" << cap;
      }
    }
  }
}

TEST(AvgPoClosedForm, WorkedValues) {
  EXPECT_NEAR(avg_po_closed_form(setting_a(), 1), 1.2, 1e-12);
  EXPECT_NEAR(avg_po_closed_form(setting_b(), 1), 1.2, 1e-12);
  EXPECT_NEAR(avg_po_closed_form({2, 5, {7, 7, 7}, {7, 7, 7}}, 2), 7.0, 1e-12);
}

TEST(AvgPoClosedForm, MatchesExactOnAssembledGraph) {
  for (std::size_t u = 1; u <= 3; ++u) {
    for (std::size_t v = u; v <= 5; ++v) {
      BicliqueSpec s{u, v, {}, {}};
      for (std::size_t d = 0; d <= u; ++d) {
        s.y_left.push_back(1.0 + 0.5 * static_cast<double>(d * d));
        s.y_right.push_back(-2.0 + static_cast<double>(d));
      }
      const Graph g = biclique(u, v);
      const auto t = tabulate(s.outcome_model(), g);
      for (std::size_t d = 0; d <= u; ++d) {
        EXPECT_NEAR(avg_po_by_exposure(t, ExposureMap::neighbor_count_capped(u), g, d),
                    avg_po_closed_form(s, d), 1e-12);
      }
    }
  }
}

TEST(BicliqueOutcomes, ValidationRejectsWrongOrientationAndLengths) {
  try {
    BicliqueSpec{3, 2, {0, 0, 0, 0}, {0, 0, 0, 0}}.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("swap"), std::string::npos);
  }
  EXPECT_THROW((BicliqueSpec{2, 3, {0, 0}, {0, 0, 0}}.validate()), ValidationError);
  EXPECT_THROW(avg_po_closed_form(setting_a(), 3), ValidationError);
}

TEST(EfaoClosedForm, WorkedValues) {
  EXPECT_NEAR(efao_by_exposure_closed_form(setting_a(), 1, 0.5), 1.0, 1e-12);
  EXPECT_NEAR(efao_by_exposure_closed_form(setting_b(), 1, 0.5), 4.0 / 3.0, 1e-12);
  const BicliqueSpec square{3, 3, {1, 4, 2, 8}, {3, 0, 5, 1}};
  for (std::size_t d = 0; d <= 3; ++d) {
    EXPECT_NEAR(efao_by_exposure_closed_form(square, d, 0.4), avg_po_closed_form(square, d), 1e-12);
  }
}

TEST(EfaoClosedForm, UnreachableLevelRejected) {
  EXPECT_THROW(efao_by_exposure_closed_form(setting_a(), 1, 0.0), ComputationError);
}

TEST(EfaoClosedForm, IsTheLargeCopiesLimit) {
  const BicliqueSpec s{2, 3, {1.0, 3.0, 0.5}, {2.0, 0.0, 1.5}};
  const Graph g = biclique(2, 3);
  const auto t = tabulate(s.outcome_model(), g);
  const auto map = ExposureMap::neighbor_count_capped(2);
  for (std::size_t d = 0; d <= 2; ++d) {
    const auto focal = [&](Assignment z) {
      Assignment f = 0;
      for (Unit i = 0; i < 5; ++i) {
        if (map.level(g, i, z) == d) f = with_unit(f, i);
      }
      return f;
    };
    for (double p : {0.3, 0.5, 0.7}) {
      const auto pi = Policy::homogeneous_bernoulli(5, p);
      const double limit = efao_by_exposure_closed_form(s, d, p);
      const double k1 = std::abs(CopiesFactorization(t, pi, 1).focal_average(focal).value - limit);
      const double k32 = std::abs(CopiesFactorization(t, pi, 32).focal_average(focal).value - limit);
      EXPECT_LT(k32, k1) << "d=" << d << " p=" << p;
      // k = 1 is the plain exact efao on one biclique.
      EXPECT_NEAR(CopiesFactorization(t, pi, 1).focal_average(focal).value,
                  efao(pi, t, FocalMapping::by_exposure(map, g, d)).value, 1e-12);
    }
  }
}

TEST(DifferenceSign, WorkedValues) {
  EXPECT_EQ(difference_sign(setting_a(), 1, 0.5), -1);
  EXPECT_EQ(difference_sign(setting_b(), 1, 0.5), 1);
  EXPECT_EQ(difference_sign({2, 3, {1, 2, 3}, {1, 2, 3}}, 2, 0.4), 0);
}

TEST(DifferenceSign, AgreesWithClosedFormGapAndFlipsOnSwap) {
  const BicliqueSpec s{2, 3, {1.0, 3.0, 0.5}, {2.0, 0.0, 1.5}};
  const BicliqueSpec swapped{2, 3, s.y_right, s.y_left};
  for (std::size_t d = 0; d <= 2; ++d) {
    for (double p = 0.05; p < 1.0; p += 0.05) {
      const double gap = efao_by_exposure_closed_form(s, d, p) - avg_po_closed_form(s, d);
      const int sign = difference_sign(s, d, p);
      if (std::abs(gap) > 1e-9) EXPECT_EQ(sign, gap > 0 ? 1 : -1) << "d=" << d << " p=" << p;
      EXPECT_EQ(difference_sign(swapped, d, p), -sign);
    }
  }
}

TEST(MatchingCurve, LevelZeroClosedForm) {
  const auto c = exposure_matching_curve(2, 3, 0, 100);
  ASSERT_EQ(c.points.size(), 101u);
  for (const auto& pt : c.points) EXPECT_NEAR(pt.b, 1.0 - std::pow(1.0 - pt.a, 1.5), 1e-9);
  EXPECT_NEAR(c.points[50].b, 1.0 - std::pow(0.5, 1.5), 1e-12);
  EXPECT_NEAR(c.points[50].b, 0.64645, 1e-5);
}

TEST(MatchingCurve, EndpointsOnEveryLevel) {
  for (std::size_t d = 0; d <= 2; ++d) {
    const auto c = exposure_matching_curve(2, 3, d, 10);
    bool origin = false;
    bool corner = false;
    for (const auto& pt : c.points) {
      origin = origin || (pt.a == 0.0 && std::abs(pt.b) < 1e-9);
      corner = corner || (pt.a == 1.0 && std::abs(pt.b - 1.0) < 1e-9);
    }
    EXPECT_TRUE(origin) << d;
    EXPECT_TRUE(corner) << d;
  }
}

TEST(MatchingCurve, LevelOneHasTwoBranches) {
  const auto c = exposure_matching_curve(2, 3, 1, 2);
  std::vector<double> at_half;
  for (const auto& pt : c.points) {
    if (pt.a == 0.5) at_half.push_back(pt.b);
  }
  ASSERT_EQ(at_half.size(), 2u);
  EXPECT_NEAR(at_half[0], 0.25, 1e-10);
  EXPECT_NEAR(at_half[1], 0.75, 1e-10);
}

TEST(MatchingCurve, EveryPointSatisfiesItsLevelEquality) {
  for (auto axis : {Axis::low_degree_class, Axis::high_degree_class}) {
    for (std::size_t v = 2; v <= 5; ++v) {
      for (std::size_t d = 0; d <= 2; ++d) {
        const auto c = exposure_matching_curve(2, v, d, 100, axis);
        for (const auto& pt : c.points) {
          // Left units see v neighbors at rate a; right units see 2 at rate b.
          const double left = d == 2 ? 1.0 - binom_pmf(v, 0, pt.a) - binom_pmf(v, 1, pt.a) : binom_pmf(v, d, pt.a);
          const double right = binom_pmf(2, d, pt.b);
          EXPECT_NEAR(left, right, 1e-9);
          EXPECT_GE(pt.a, 0.0);
          EXPECT_LE(pt.b, 1.0);
        }
      }
    }
  }
}

TEST(MatchingCurve, UnmatchedPointsFlagged) {
  // Level 1 for a right unit peaks at 1/2; left units at b = 0.5 need 3a(1-a)^2 = 1/2, which has no root.
  const auto c = exposure_matching_curve(2, 3, 1, 2, Axis::high_degree_class);
  ASSERT_FALSE(c.unmatched.empty());
  EXPECT_DOUBLE_EQ(c.unmatched.front(), 0.5);
}

TEST(MatchingCurve, EqualHalvesCollapseToDiagonal) {
  for (std::size_t d : {0u, 2u}) {
    for (const auto& pt : exposure_matching_curve(2, 2, d, 20).points) EXPECT_NEAR(pt.a, pt.b, 1e-9);
  }
}

TEST(JointResidual, K23StrictlyPositive) {
  const auto r = joint_matching_residual(2, 3, 0.005, 0.05);
  EXPECT_GT(r.min_residual, 0.0);
  EXPECT_GE(r.a, 0.05);
  EXPECT_LE(r.b, 0.95);
  // Independent grid scan.
  double best = INFINITY;
  for (int i = 0; i <= 180; ++i) {
    for (int j = 0; j <= 180; ++j) {
      const double a = 0.05 + 0.005 * i;
      const double b = 0.05 + 0.005 * j;
      const double r0 = std::abs(binom_pmf(3, 0, a) - binom_pmf(2, 0, b));
      const double r1 = std::abs(binom_pmf(3, 1, a) - binom_pmf(2, 1, b));
      const double r2 = std::abs(1.0 - binom_pmf(3, 0, a) - binom_pmf(3, 1, a) - binom_pmf(2, 2, b));
      best = std::min(best, std::max({r0, r1, r2}));
    }
  }
  EXPECT_NEAR(r.min_residual, best, 1e-12);
}

TEST(JointResidual, EqualHalvesReachZero) {
  EXPECT_NEAR(joint_matching_residual(2, 2, 0.05, 0.05).min_residual, 0.0, 1e-15);
}

TEST(JointResidual, SpotCheckAtHalf) {
  const auto r = level_residuals(2, 3, 0.5, 0.5);
  EXPECT_NEAR(r[0], 0.125, 1e-15);
}

TEST(JointResidual, BadArgumentsRejected) {
  EXPECT_THROW(joint_matching_residual(2, 3, 0.005, 0.5), ValidationError);
  EXPECT_THROW(joint_matching_residual(2, 3, 0.0, 0.1), ValidationError);
}
