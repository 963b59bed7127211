#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netpol/errors.hpp"
#include "netpol/graph.hpp"
#include "netpol/policy.hpp"
#include "netpol/science.hpp"

namespace netpol::biclique_analysis {

// Closed forms for disjoint unions of K_{u,v} under a capped treated-neighbor
// exposure with levels 0..u (level u reads "u or more").
//
// Orientation: the u left units have degree v and outcomes y_left; the v right
// units have degree u and outcomes y_right. Under homogeneous Bernoulli(p), a
// left unit is at level d with probability f_p(v, d) and a right unit with
// probability f_p(u, d), both capped at level u.
struct BicliqueSpec {
  std::size_t u = 0;
  std::size_t v = 0;
  std::vector<double> y_left;
  std::vector<double> y_right;

  std::size_t cap() const noexcept { return u; }

  void validate() const {
    if (u == 0 || v == 0) throw ValidationError("biclique halves must be positive");
    if (u > v) {
      throw ValidationError("biclique requires u <= v, got u=" + std::to_string(u) + ", v=" +
                            std::to_string(v) + "; swap the halves");
    }
    if (y_left.size() != u + 1 || y_right.size() != u + 1) {
      throw ValidationError("biclique outcome arrays need u+1=" + std::to_string(u + 1) +
                            " entries");
    }
  }

  // Exposure-respecting outcome model on K_{u,v} realizing y_left / y_right.
  OutcomeModel outcome_model() const {
    validate();
    std::vector<std::vector<double>> rows(u + v);
    for (std::size_t i = 0; i < u + v; ++i) rows[i] = i < u ? y_left : y_right;
    return OutcomeModel::exposure_response(u, std::move(rows));
  }
};

// C(k,d) p^d (1-p)^(k-d); with `capped`, the upper tail sum_{j >= d}.
inline double f_binom(std::size_t k, std::size_t d, double p, bool capped = false) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("f_binom: p must lie in [0, 1]");
  if (d > k) {
    throw ValidationError("f_binom: level " + std::to_string(d) + " exceeds neighbor count " +
                          std::to_string(k));
  }
  auto term = [&](std::size_t j) {
    return binomial_coefficient(k, j) * std::pow(p, static_cast<double>(j)) *
           std::pow(1.0 - p, static_cast<double>(k - j));
  };
  if (!capped) return term(d);
  double s = 0.0;
  for (std::size_t j = d; j <= k; ++j) s += term(j);
  return s;
}

// P(level d) for a unit with k neighbors each treated with probability p, levels
// capped at `cap`.
inline double level_probability(std::size_t k, std::size_t d, std::size_t cap, double p) {
  if (d > cap) throw ValidationError("level " + std::to_string(d) + " exceeds cap " + std::to_string(cap));
  if (d > k) return 0.0;
  return f_binom(k, d, p, d == cap);
}

inline void check_level(const BicliqueSpec& s, std::size_t d) {
  s.validate();
  if (d > s.cap()) {
    throw ValidationError("level " + std::to_string(d) + " outside [0, " + std::to_string(s.cap()) + "]");
  }
}

// (u y_left(d) + v y_right(d)) / (u + v)
inline double avg_po_closed_form(const BicliqueSpec& s, std::size_t d) {
  check_level(s, d);
  const double u = static_cast<double>(s.u);
  const double v = static_cast<double>(s.v);
  return (u * s.y_left[d] + v * s.y_right[d]) / (u + v);
}

// Large-copies limit of the by-exposure focal average under homogeneous Bernoulli(p):
// (u f_p(v,d) y_left(d) + v f_p(u,d) y_right(d)) / (u f_p(v,d) + v f_p(u,d)).
inline double efao_by_exposure_closed_form(const BicliqueSpec& s, std::size_t d, double p) {
  check_level(s, d);
  const double u = static_cast<double>(s.u);
  const double v = static_cast<double>(s.v);
  const double f_left = level_probability(s.v, d, s.cap(), p);
  const double f_right = level_probability(s.u, d, s.cap(), p);
  const double den = u * f_left + v * f_right;
  if (!(den > 0.0)) {
    throw ComputationError("exposure level " + std::to_string(d) +
                           " is unreachable at p=" + format_double(p));
  }
  return (u * f_left * s.y_left[d] + v * f_right * s.y_right[d]) / den;
}

// sgn[(y_right(d) - y_left(d)) (f_p(u,d) - f_p(v,d))]
inline int difference_sign(const BicliqueSpec& s, std::size_t d, double p) {
  check_level(s, d);
  const double dy = s.y_right[d] - s.y_left[d];
  const double df = level_probability(s.u, d, s.cap(), p) - level_probability(s.v, d, s.cap(), p);
  const double prod = dy * df;
  return (prod > 0.0) - (prod < 0.0);
}

// ---------------------------------------------------------------------------
// Exposure-matching curves for heterogeneous Bernoulli policies that treat the
// degree-u class (right half) with probability a and the degree-v class (left
// half) with probability b. A left unit sees v neighbors treated at rate a; a
// right unit sees u neighbors treated at rate b. Level d is matched when
// P_a(left unit at d) = P_b(right unit at d).

// |P(left at d) - P(right at d)| for each level.
inline std::vector<double> level_residuals(std::size_t u, std::size_t v, double a, double b) {
  std::vector<double> r(u + 1);
  for (std::size_t d = 0; d <= u; ++d) {
    r[d] = std::abs(level_probability(v, d, u, a) - level_probability(u, d, u, b));
  }
  return r;
}

enum class Axis {
  // Grid over a (degree-u class), solve for b.
  low_degree_class,
  // Grid over b (degree-v class), solve for a.
  high_degree_class
};

struct CurvePoint {
  std::size_t level;
  double a;  // treatment probability of degree-u units
  double b;  // treatment probability of degree-v units
  std::size_t branch;
  double residual;
};

struct MatchingCurve {
  std::vector<CurvePoint> points;
  std::vector<double> unmatched;  // grid values with no root in [0, 1]
};

inline constexpr std::size_t kBracketIntervals = 200;
inline constexpr double kRootTolerance = 1e-10;

// All roots of h on [0, 1]: sign brackets on kBracketIntervals subintervals, then
// bisection to kRootTolerance. Exact zeros at bracket nodes count once.
inline std::vector<double> bracketed_roots(const std::function<double(double)>& h) {
  std::vector<double> roots;
  auto push = [&](double x) {
    if (roots.empty() || std::abs(roots.back() - x) > 1e-9) roots.push_back(x);
  };
  double x0 = 0.0;
  double h0 = h(x0);
  if (h0 == 0.0) push(x0);
  for (std::size_t k = 1; k <= kBracketIntervals; ++k) {
    const double x1 = static_cast<double>(k) / static_cast<double>(kBracketIntervals);
    const double h1 = h(x1);
    if (h1 == 0.0) {
      push(x1);
    } else if (h0 != 0.0 && ((h0 < 0.0) != (h1 < 0.0))) {
      double lo = x0;
      double hi = x1;
      double hlo = h0;
      while (hi - lo > kRootTolerance) {
        const double mid = 0.5 * (lo + hi);
        const double hm = h(mid);
        if (hm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((hm < 0.0) == (hlo < 0.0)) {
          lo = mid;
          hlo = hm;
        } else {
          hi = mid;
        }
      }
      push(0.5 * (lo + hi));
    }
    x0 = x1;
    h0 = h1;
  }
  return roots;
}

// Points (a, b) equating the level-d exposure probabilities of the two classes,
// for `grid` + 1 evenly spaced values of the grid axis on [0, 1].
inline MatchingCurve exposure_matching_curve(std::size_t u, std::size_t v, std::size_t d,
                                             std::size_t grid,
                                             Axis axis = Axis::low_degree_class) {
  if (u == 0 || v == 0) throw ValidationError("biclique halves must be positive");
  if (d > std::min(u, v)) throw ValidationError("level outside [0, min(u, v)]");
  if (grid == 0) throw ValidationError("grid resolution must be >= 1");
  const std::size_t cap = std::min(u, v);
  MatchingCurve out;
  for (std::size_t g = 0; g <= grid; ++g) {
    const double t = static_cast<double>(g) / static_cast<double>(grid);
    // Probability for the grid class fixes the target; solve for the other class.
    std::vector<double> roots;
    double target = 0.0;
    std::size_t solve_k = 0;
    std::size_t target_k = 0;
    if (axis == Axis::low_degree_class) {
      target_k = v;  // left units: v neighbors at rate a = t
      solve_k = u;   // right units: u neighbors at rate b
    } else {
      target_k = u;
      solve_k = v;
    }
    target = level_probability(target_k, d, cap, t);
    if (d == 0) {
      // (1 - s)^solve_k = target has the single root s = 1 - target^(1/solve_k).
      roots.push_back(1.0 - std::pow(target, 1.0 / static_cast<double>(solve_k)));
    } else {
      roots = bracketed_roots(
          [&](double s) { return level_probability(solve_k, d, cap, s) - target; });
    }
    if (roots.empty()) {
      out.unmatched.push_back(t);
      continue;
    }
    for (std::size_t r = 0; r < roots.size(); ++r) {
      const double s = roots[r];
      const double a = axis == Axis::low_degree_class ? t : s;
      const double b = axis == Axis::low_degree_class ? s : t;
      const double res = std::abs(level_probability(v, d, cap, a) - level_probability(u, d, cap, b));
      out.points.push_back({d, a, b, r, res});
    }
  }
  return out;
}

struct JointResidual {
  double min_residual;
  double a;
  double b;
};

// min over the grid on [margin, 1 - margin]^2 of max_d |P(left at d) - P(right at d)|.
// Ties go to the lexicographically smallest (a, b).
inline JointResidual joint_matching_residual(std::size_t u, std::size_t v, double step,
                                             double margin) {
  if (!(margin > 0.0 && margin < 0.5)) throw ValidationError("margin must lie in (0, 0.5)");
  if (!(step > 0.0)) throw ValidationError("grid step must be positive");
  if (u == 0 || v == 0) throw ValidationError("biclique halves must be positive");
  const std::size_t lo_u = std::min(u, v);
  const std::size_t hi_v = std::max(u, v);
  const auto count = static_cast<std::size_t>(std::floor((1.0 - 2.0 * margin) / step + 1e-9)) + 1;
  JointResidual best{std::numeric_limits<double>::infinity(), 0.0, 0.0};
  for (std::size_t i = 0; i < count; ++i) {
    const double a = margin + static_cast<double>(i) * step;
    for (std::size_t j = 0; j < count; ++j) {
      const double b = margin + static_cast<double>(j) * step;
      const auto r = level_residuals(lo_u, hi_v, a, b);
      const double worst = *std::max_element(r.begin(), r.end());
      if (worst < best.min_residual) best = {worst, a, b};
    }
  }
  return best;
}

}  // namespace netpol::biclique_analysis
