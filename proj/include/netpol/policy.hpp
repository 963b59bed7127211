#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "netpol/assignment.hpp"
#include "netpol/errors.hpp"
#include "netpol/random.hpp"

namespace netpol {

// Fixed treatment statuses on the units in `mask`; `values` holds their bits.
struct PartialAssignment {
  Assignment mask = 0;
  Assignment values = 0;

  static PartialAssignment single(Unit i, bool treated) {
    const Assignment bit = Assignment{1} << i;
    return {bit, treated ? bit : 0};
  }
  bool agrees(Assignment z) const noexcept { return (z & mask) == (values & mask); }
};

inline double binomial_coefficient(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t j = 1; j <= k; ++j) {
    c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
  }
  return std::round(c);
}

// Packs the bits of x selected by keep into the low bits, preserving order.
constexpr Assignment compress_bits(Assignment x, Assignment keep) noexcept {
  Assignment out = 0;
  unsigned pos = 0;
  while (keep != 0) {
    const Assignment low = keep & (~keep + 1);
    if (x & low) out |= Assignment{1} << pos;
    ++pos;
    keep &= keep - 1;
  }
  return out;
}

// Inverse of compress_bits: scatters the low bits of x onto the positions set in keep.
constexpr Assignment expand_bits(Assignment x, Assignment keep) noexcept {
  Assignment out = 0;
  unsigned pos = 0;
  while (keep != 0) {
    const Assignment low = keep & (~keep + 1);
    if ((x >> pos) & 1U) out |= low;
    ++pos;
    keep &= keep - 1;
  }
  return out;
}

class Policy;

namespace design {

struct HeterogeneousBernoulli {
  std::vector<double> p;
};
struct HomogeneousBernoulli {
  double p;
};
struct CompletelyRandomized {
  std::size_t m;
};
// Treat everyone with probability q, no one with probability 1 - q.
struct AllOrNone {
  double q;
};
// base restricted to assignments agreeing with `fixed`, renormalized; over all n units.
struct Conditioned {
  std::shared_ptr<const Policy> base;
  PartialAssignment fixed;
  double event_probability;
  std::shared_ptr<const Policy> reduced;  // distribution of the free units
};

using Family = std::variant<HeterogeneousBernoulli, HomogeneousBernoulli, CompletelyRandomized,
                            AllOrNone, Conditioned>;

}  // namespace design

// A probability distribution over assignments of n units.
class Policy {
 public:
  static Policy heterogeneous_bernoulli(std::vector<double> p) {
    for (std::size_t i = 0; i < p.size(); ++i) check_probability(p[i], "p_" + std::to_string(i + 1));
    const std::size_t n = p.size();
    return Policy(n, design::HeterogeneousBernoulli{std::move(p)});
  }

  static Policy homogeneous_bernoulli(std::size_t n, double p) {
    check_probability(p, "p");
    return Policy(n, design::HomogeneousBernoulli{p});
  }

  static Policy completely_randomized(std::size_t n, std::size_t m) {
    if (m > n) {
      throw ValidationError("completely_randomized: m=" + std::to_string(m) + " exceeds n=" +
                            std::to_string(n));
    }
    return Policy(n, design::CompletelyRandomized{m});
  }

  static Policy all_or_none(std::size_t n, double q = 0.5) {
    check_probability(q, "q");
    return Policy(n, design::AllOrNone{q});
  }

  static Policy conditioned(const Policy& base, PartialAssignment fixed);

  std::size_t n() const noexcept { return n_; }
  const design::Family& family() const noexcept { return family_; }

  std::string family_name() const {
    return std::visit(
        [](const auto& f) -> std::string {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, design::HeterogeneousBernoulli>) {
            return "heterogeneous_bernoulli";
          }
          if constexpr (std::is_same_v<F, design::HomogeneousBernoulli>) {
            return "homogeneous_bernoulli";
          }
          if constexpr (std::is_same_v<F, design::CompletelyRandomized>) {
            return "completely_randomized";
          }
          if constexpr (std::is_same_v<F, design::AllOrNone>) return "all_or_none";
          if constexpr (std::is_same_v<F, design::Conditioned>) return "conditioned";
        },
        family_);
  }

  // Scalar used to order policies in grid sweeps: p, m, q, or mean p_i.
  double parameter() const {
    return std::visit(
        [&](const auto& f) -> double {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, design::HeterogeneousBernoulli>) {
            return f.p.empty() ? 0.0
                               : std::accumulate(f.p.begin(), f.p.end(), 0.0) /
                                     static_cast<double>(f.p.size());
          } else if constexpr (std::is_same_v<F, design::HomogeneousBernoulli>) {
            return f.p;
          } else if constexpr (std::is_same_v<F, design::CompletelyRandomized>) {
            return static_cast<double>(f.m);
          } else if constexpr (std::is_same_v<F, design::AllOrNone>) {
            return f.q;
          } else {
            return f.base->parameter();
          }
        },
        family_);
  }

  std::string describe() const {
    std::ostringstream os;
    auto num = [](double x) {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, x);
      return std::string(buf, res.ptr);
    };
    std::visit(
        [&](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, design::HeterogeneousBernoulli>) {
            os << "heterogeneous_bernoulli(p=[";
            for (std::size_t i = 0; i < f.p.size(); ++i) os << (i ? " " : "") << num(f.p[i]);
            os << "])";
          } else if constexpr (std::is_same_v<F, design::HomogeneousBernoulli>) {
            os << "homogeneous_bernoulli(p=" << num(f.p) << ")";
          } else if constexpr (std::is_same_v<F, design::CompletelyRandomized>) {
            os << "completely_randomized(m=" << f.m << ")";
          } else if constexpr (std::is_same_v<F, design::AllOrNone>) {
            os << "all_or_none(q=" << num(f.q) << ")";
          } else {
            os << "conditioned(" << f.base->describe() << " | "
               << to_bit_string(f.fixed.mask, n_) << ":" << to_bit_string(f.fixed.values, n_)
               << ")";
          }
        },
        family_);
    return os.str();
  }

  // Exact probability of z; 0 outside the support.
  double pmf(Assignment z) const {
    if ((z & ~all_units(n_)) != 0) return 0.0;
    return std::visit(
        [&](const auto& f) -> double {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, design::HeterogeneousBernoulli>) {
            double prob = 1.0;
            for (Unit i = 0; i < n_; ++i) prob *= is_treated(z, i) ? f.p[i] : 1.0 - f.p[i];
            return prob;
          } else if constexpr (std::is_same_v<F, design::HomogeneousBernoulli>) {
            const std::size_t k = treated_count(z);
            return std::pow(f.p, static_cast<double>(k)) *
                   std::pow(1.0 - f.p, static_cast<double>(n_ - k));
          } else if constexpr (std::is_same_v<F, design::CompletelyRandomized>) {
            return treated_count(z) == f.m ? 1.0 / binomial_coefficient(n_, f.m) : 0.0;
          } else if constexpr (std::is_same_v<F, design::AllOrNone>) {
            if (n_ == 0) return 1.0;
            if (z == all_units(n_)) return f.q;
            if (z == 0) return 1.0 - f.q;
            return 0.0;
          } else {
            if (!f.fixed.agrees(z)) return 0.0;
            return f.base->pmf(z) / f.event_probability;
          }
        },
        family_);
  }

  // P(Z_i = 1).
  double marginal(Unit i) const;

  Assignment sample(Rng& rng) const {
    return std::visit(
        [&](const auto& f) -> Assignment {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, design::HeterogeneousBernoulli>) {
            Assignment z = 0;
            for (Unit i = 0; i < n_; ++i) {
              if (uniform01(rng) < f.p[i]) z = with_unit(z, i);
            }
            return z;
          } else if constexpr (std::is_same_v<F, design::HomogeneousBernoulli>) {
            Assignment z = 0;
            for (Unit i = 0; i < n_; ++i) {
              if (uniform01(rng) < f.p) z = with_unit(z, i);
            }
            return z;
          } else if constexpr (std::is_same_v<F, design::CompletelyRandomized>) {
            std::vector<Unit> order(n_);
            std::iota(order.begin(), order.end(), Unit{0});
            Assignment z = 0;
            for (std::size_t k = 0; k < f.m; ++k) {
              const auto pick = k + static_cast<std::size_t>(uniform_below(rng, n_ - k));
              std::swap(order[k], order[pick]);
              z = with_unit(z, order[k]);
            }
            return z;
          } else if constexpr (std::is_same_v<F, design::AllOrNone>) {
            return uniform01(rng) < f.q ? all_units(n_) : Assignment{0};
          } else {
            const Assignment free = all_units(n_) & ~f.fixed.mask;
            return (f.fixed.values & f.fixed.mask) | expand_bits(f.reduced->sample(rng), free);
          }
        },
        family_);
  }

 private:
  Policy(std::size_t n, design::Family family) : n_(n), family_(std::move(family)) {
    require_bitmask_size(n);
  }

  static void check_probability(double p, const std::string& name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("policy parameter " + name + " must lie in [0, 1]");
    }
  }

  friend Policy condition(const Policy& pi, PartialAssignment fixed);

  std::size_t n_ = 0;
  design::Family family_;
};

// P_pi(Z_A = fixed values).
inline double event_probability(const Policy& pi, PartialAssignment fixed) {
  const std::size_t n = pi.n();
  fixed.mask &= all_units(n);
  fixed.values &= fixed.mask;
  if (fixed.mask == 0) return 1.0;
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, design::HeterogeneousBernoulli>) {
          double prob = 1.0;
          for (Unit i : members(fixed.mask)) prob *= is_treated(fixed.values, i) ? f.p[i] : 1 - f.p[i];
          return prob;
        } else if constexpr (std::is_same_v<F, design::HomogeneousBernoulli>) {
          const std::size_t a = treated_count(fixed.mask);
          const std::size_t k = treated_count(fixed.values);
          return std::pow(f.p, static_cast<double>(k)) *
                 std::pow(1.0 - f.p, static_cast<double>(a - k));
        } else if constexpr (std::is_same_v<F, design::CompletelyRandomized>) {
          const std::size_t a = treated_count(fixed.mask);
          const std::size_t k = treated_count(fixed.values);
          if (k > f.m || f.m - k > n - a) return 0.0;
          return binomial_coefficient(n - a, f.m - k) / binomial_coefficient(n, f.m);
        } else if constexpr (std::is_same_v<F, design::AllOrNone>) {
          if (fixed.values == fixed.mask) return f.q;
          if (fixed.values == 0) return 1.0 - f.q;
          return 0.0;
        } else {
          const Assignment overlap = fixed.mask & f.fixed.mask;
          if ((fixed.values & overlap) != (f.fixed.values & overlap)) return 0.0;
          const PartialAssignment joint{fixed.mask | f.fixed.mask,
                                        (fixed.values & fixed.mask) | (f.fixed.values & f.fixed.mask)};
          return event_probability(*f.base, joint) / f.event_probability;
        }
      },
      pi.family());
}

inline std::string describe_event(PartialAssignment fixed, std::size_t n) {
  std::string s;
  for (Unit i = 0; i < n; ++i) {
    if (!is_treated(fixed.mask, i)) continue;
    if (!s.empty()) s += ",";
    s += "Z_" + std::to_string(i + 1) + "=" + (is_treated(fixed.values, i) ? "1" : "0");
  }
  return s.empty() ? "(no constraint)" : s;
}

// The conditional distribution of the units outside fixed.mask, reindexed in
// ascending order. Closed families stay closed: Bernoulli factors,
// completely_randomized(m) given k treated becomes completely_randomized(m - k),
// all_or_none collapses to the consistent branch.
inline Policy condition(const Policy& pi, PartialAssignment fixed) {
  const std::size_t n = pi.n();
  if ((fixed.mask & ~all_units(n)) != 0) {
    throw ValidationError("conditioning set references units beyond n=" + std::to_string(n));
  }
  fixed.values &= fixed.mask;
  if (event_probability(pi, fixed) <= 0.0) {
    throw ZeroProbabilityEvent(describe_event(fixed, n) + " under " + pi.describe());
  }
  const Assignment free = all_units(n) & ~fixed.mask;
  const std::size_t rest = treated_count(free);
  return std::visit(
      [&](const auto& f) -> Policy {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, design::HeterogeneousBernoulli>) {
          std::vector<double> p;
          for (Unit i : members(free)) p.push_back(f.p[i]);
          return Policy::heterogeneous_bernoulli(std::move(p));
        } else if constexpr (std::is_same_v<F, design::HomogeneousBernoulli>) {
          return Policy::homogeneous_bernoulli(rest, f.p);
        } else if constexpr (std::is_same_v<F, design::CompletelyRandomized>) {
          return Policy::completely_randomized(rest, f.m - treated_count(fixed.values));
        } else if constexpr (std::is_same_v<F, design::AllOrNone>) {
          if (fixed.mask == 0) return pi;
          return Policy::all_or_none(rest, fixed.values == fixed.mask ? 1.0 : 0.0);
        } else {
          // Condition the base on the new constraints first, then re-impose the
          // base's own constraints on whatever free units they still cover.
          const Policy reduced_base = condition(*f.base, fixed);
          const Assignment still = f.fixed.mask & free;
          if (still == 0) return reduced_base;
          return Policy::conditioned(reduced_base,
                                     {compress_bits(still, free),
                                      compress_bits(f.fixed.values & still, free)});
        }
      },
      pi.family());
}

inline Policy Policy::conditioned(const Policy& base, PartialAssignment fixed) {
  if ((fixed.mask & ~all_units(base.n())) != 0) {
    throw ValidationError("conditioning set references units beyond n=" +
                          std::to_string(base.n()));
  }
  fixed.values &= fixed.mask;
  const double prob = event_probability(base, fixed);
  if (prob <= 0.0) {
    throw ZeroProbabilityEvent(describe_event(fixed, base.n()) + " under " + base.describe());
  }
  auto reduced = std::make_shared<const Policy>(condition(base, fixed));
  return Policy(base.n(), design::Conditioned{std::make_shared<const Policy>(base), fixed, prob,
                                              std::move(reduced)});
}

inline double Policy::marginal(Unit i) const {
  if (i >= n_) throw ValidationError("unit index out of range in marginal");
  return event_probability(*this, PartialAssignment::single(i, true));
}

}  // namespace netpol
