#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "netpol/policy.hpp"
#include "oracle.hpp"

using namespace netpol;

namespace {

double total_mass(const Policy& pi) {
  double s = 0.0;
  for (Assignment z = 0; z < assignment_count(pi.n()); ++z) s += pi.pmf(z);
  return s;
}

std::vector<Policy> family_battery(std::size_t n) {
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = 0.1 + 0.8 * static_cast<double>(i) / static_cast<double>(n);
  std::vector<Policy> out{Policy::heterogeneous_bernoulli(p), Policy::homogeneous_bernoulli(n, 0.37),
                          Policy::completely_randomized(n, n / 2), Policy::all_or_none(n, 0.3)};
  if (n >= 2) {
    PartialAssignment fixed;
    fixed.mask = 0b11;
    fixed.values = 0b01;
    out.push_back(Policy::conditioned(Policy::completely_randomized(n, (n + 1) / 2), fixed));
  }
  return out;
}

}  // namespace

TEST(Pmf, HomogeneousHalfIsUniform) {
  const auto pi = Policy::homogeneous_bernoulli(5, 0.5);
  for (Assignment z = 0; z < 32; ++z) EXPECT_DOUBLE_EQ(pi.pmf(z), 1.0 / 32.0);
}

TEST(Pmf, CompletelyRandomizedCounts) {
  const auto pi = Policy::completely_randomized(5, 2);
  EXPECT_DOUBLE_EQ(pi.pmf(0b00011), 0.1);
  EXPECT_EQ(pi.pmf(0b00111), 0.0);
}

TEST(Pmf, AllOrNoneTwoPoint) {
  const auto pi = Policy::all_or_none(5, 0.3);
  EXPECT_DOUBLE_EQ(pi.pmf(0b11111), 0.3);
  EXPECT_DOUBLE_EQ(pi.pmf(0), 0.7);
  EXPECT_EQ(pi.pmf(0b00101), 0.0);
}

TEST(Pmf, OutsideRangeIsZero) { EXPECT_EQ(Policy::homogeneous_bernoulli(3, 0.5).pmf(0b1000), 0.0); }

TEST(Pmf, MatchesOracleDefinitions) {
  const std::size_t n = 6;
  std::vector<double> p{0.1, 0.2, 0.9, 0.5, 0.33, 0.71};
  const auto het = Policy::heterogeneous_bernoulli(p);
  const auto het_o = oracle::bernoulli(p);
  const auto cr = Policy::completely_randomized(n, 4);
  const auto cr_o = oracle::completely_randomized(n, 4);
  const auto aon = Policy::all_or_none(n, 0.8);
  const auto aon_o = oracle::all_or_none(n, 0.8);
  for (Assignment z = 0; z < 64; ++z) {
    EXPECT_NEAR(het.pmf(z), het_o(z), 1e-15);
    EXPECT_NEAR(cr.pmf(z), cr_o(z), 1e-15);
    EXPECT_NEAR(aon.pmf(z), aon_o(z), 1e-15);
  }
}

TEST(Pmf, NormalizedForEveryFamily) {
  for (std::size_t n = 1; n <= 10; ++n) {
    for (const auto& pi : family_battery(n)) EXPECT_NEAR(total_mass(pi), 1.0, 1e-12) << pi.describe();
  }
}

TEST(Policy, InvalidParametersRejected) {
  EXPECT_THROW(Policy::homogeneous_bernoulli(3, 1.5), ValidationError);
  EXPECT_THROW(Policy::homogeneous_bernoulli(3, -0.1), ValidationError);
  EXPECT_THROW(Policy::heterogeneous_bernoulli({0.5, std::nan("")}), ValidationError);
  EXPECT_THROW(Policy::completely_randomized(3, 4), ValidationError);
  EXPECT_THROW(Policy::all_or_none(3, 2.0), ValidationError);
}

TEST(Policy, DegenerateCompletelyRandomizedAllowed) {
  EXPECT_DOUBLE_EQ(Policy::completely_randomized(4, 0).pmf(0), 1.0);
  EXPECT_DOUBLE_EQ(Policy::completely_randomized(4, 4).pmf(0b1111), 1.0);
}

TEST(Sample, SupportAndDegenerateCases) {
  Rng rng = make_rng(1, 0);
  const auto all = Policy::all_or_none(6, 1.0);
  const auto cr = Policy::completely_randomized(6, 2);
  const auto none = Policy::homogeneous_bernoulli(6, 0.0);
  for (int k = 0; k < 500; ++k) {
    EXPECT_EQ(all.sample(rng), 0b111111u);
    EXPECT_EQ(treated_count(cr.sample(rng)), 2u);
    EXPECT_EQ(none.sample(rng), 0u);
  }
}

TEST(Sample, DeterministicGivenSeed) {
  const auto pi = Policy::homogeneous_bernoulli(8, 0.4);
  Rng a = make_rng(42, 3);
  Rng b = make_rng(42, 3);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(pi.sample(a), pi.sample(b));
}

TEST(Sample, EmpiricalFrequenciesMatchPmf) {
  // 10^5 draws per policy; every assignment frequency within 4 standard errors.
  constexpr std::size_t draws = 100000;
  for (std::size_t n : {3u, 6u}) {
    for (const auto& pi : family_battery(n)) {
      for (std::uint64_t seed : {11u, 12u, 13u}) {
        Rng rng = make_rng(seed, n);
        std::vector<double> counts(assignment_count(n), 0.0);
        for (std::size_t k = 0; k < draws; ++k) counts[pi.sample(rng)] += 1.0;
        for (Assignment z = 0; z < assignment_count(n); ++z) {
          const double p = pi.pmf(z);
          const double se = std::sqrt(p * (1.0 - p) / draws);
          if (p == 0.0) {
            EXPECT_EQ(counts[z], 0.0) << pi.describe();
          } else {
            EXPECT_LE(std::abs(counts[z] / draws - p), 4.0 * se + 1e-12) << pi.describe() << " z=" << z;
          }
        }
      }
    }
  }
}

TEST(Condition, BernoulliFactors) {
  const auto pi = Policy::homogeneous_bernoulli(5, 0.3);
  const auto c = condition(pi, PartialAssignment::single(0, true));
  EXPECT_EQ(c.n(), 4u);
  EXPECT_EQ(c.family_name(), "homogeneous_bernoulli");
  EXPECT_DOUBLE_EQ(c.parameter(), 0.3);
}

TEST(Condition, CompletelyRandomizedReduces) {
  const auto c = condition(Policy::completely_randomized(5, 2), PartialAssignment::single(0, true));
  EXPECT_EQ(c.n(), 4u);
  EXPECT_EQ(c.family_name(), "completely_randomized");
  EXPECT_DOUBLE_EQ(c.parameter(), 1.0);
  // Counting oracle: 4 of the 10 support points treat unit 1; each is 1/4 after conditioning.
  for (Assignment z = 0; z < 16; ++z) EXPECT_DOUBLE_EQ(c.pmf(z), treated_count(z) == 1 ? 0.25 : 0.0);
}

TEST(Condition, AllOrNoneCollapses) {
  const auto c = condition(Policy::all_or_none(5, 0.4), PartialAssignment::single(0, true));
  EXPECT_EQ(c.n(), 4u);
  EXPECT_DOUBLE_EQ(c.pmf(0b1111), 1.0);
  EXPECT_DOUBLE_EQ(total_mass(c), 1.0);
}

TEST(Condition, ZeroProbabilityEventRejected) {
  EXPECT_THROW(condition(Policy::homogeneous_bernoulli(3, 0.0), PartialAssignment::single(1, true)),
               ZeroProbabilityEvent);
  PartialAssignment mixed{0b11, 0b01};
  EXPECT_THROW(condition(Policy::all_or_none(3, 0.5), mixed), ZeroProbabilityEvent);
  PartialAssignment three{0b111, 0b111};
  EXPECT_THROW(condition(Policy::completely_randomized(4, 2), three), ZeroProbabilityEvent);
  EXPECT_THROW(Policy::conditioned(Policy::completely_randomized(4, 0), PartialAssignment::single(0, true)),
               ZeroProbabilityEvent);
}

TEST(Condition, EqualsBayesRatioExhaustively) {
  for (std::size_t n = 2; n <= 8; ++n) {
    for (const auto& pi : family_battery(n)) {
      for (Assignment mask : {Assignment{1}, Assignment{0b101}, all_units(n) >> 1}) {
        if ((mask & ~all_units(n)) != 0) {
          EXPECT_THROW(condition(pi, PartialAssignment{mask, 0}), ValidationError);
          continue;
        }
        for (Assignment values = 0; values <= mask; ++values) {
          if ((values & ~mask) != 0) continue;
          PartialAssignment fixed{mask, values};
          // Event probability by direct summation.
          double event = 0.0;
          for (Assignment z = 0; z < assignment_count(n); ++z) {
            if (fixed.agrees(z)) event += pi.pmf(z);
          }
          if (event <= 0.0) {
            EXPECT_THROW(condition(pi, fixed), ZeroProbabilityEvent);
            continue;
          }
          const auto reduced = condition(pi, fixed);
          const auto whole = Policy::conditioned(pi, fixed);
          ASSERT_EQ(reduced.n(), n - treated_count(mask));
          EXPECT_NEAR(event_probability(pi, fixed), event, 1e-12);
          for (Assignment z = 0; z < assignment_count(n); ++z) {
            const double bayes = fixed.agrees(z) ? pi.pmf(z) / event : 0.0;
            EXPECT_NEAR(whole.pmf(z), bayes, 1e-12);
            if (fixed.agrees(z)) {
              EXPECT_NEAR(reduced.pmf(compress_bits(z, ~mask & all_units(n))), bayes, 1e-12);
            }
          }
        }
      }
    }
  }
}

TEST(Policy, MarginalsMatchEnumeration) {
  for (const auto& pi : family_battery(6)) {
    for (Unit i = 0; i < 6; ++i) {
      double m = 0.0;
      for (Assignment z = 0; z < 64; ++z) {
        if (oracle::bit(z, i)) m += pi.pmf(z);
      }
      EXPECT_NEAR(pi.marginal(i), m, 1e-12) << pi.describe();
    }
  }
}

TEST(Policy, DescribeIsReadable) {
  EXPECT_EQ(Policy::homogeneous_bernoulli(3, 0.3).describe(), "homogeneous_bernoulli(p=0.3)");
  EXPECT_EQ(Policy::completely_randomized(3, 1).describe(), "completely_randomized(m=1)");
}
