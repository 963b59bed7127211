#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "netpol/assignment.hpp"
#include "netpol/errors.hpp"
#include "netpol/policy.hpp"
#include "netpol/random.hpp"
#include "netpol/science.hpp"

namespace netpol {

enum class Method { exact, monte_carlo };

inline const char* method_name(Method m) { return m == Method::exact ? "exact" : "monte_carlo"; }

struct EstimandResult {
  double value = 0.0;
  Method method = Method::exact;
  double std_error = 0.0;
  // Probability of the conditioning event (estimated under Monte Carlo).
  double event_probability = 1.0;
  std::size_t n_samples = 0;
};

// f(z, y(z)) with an optional event on z; an empty event means "always".
struct Functional {
  std::function<double(Assignment, std::span<const double>)> value;
  std::function<bool(Assignment)> event;
  std::string event_name = "always";
};

// Vector-valued f(z, y(z)) written into `out` (length dim).
struct VectorFunctional {
  std::size_t dim = 0;
  std::function<void(Assignment, std::span<const double>, std::span<double>)> value;
};

// A smooth map g of the mean vector, with its gradient; used for ratio estimands.
struct SmoothMap {
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

struct EngineOptions {
  Method mode = Method::exact;
  std::size_t n_samples = 100000;
  std::uint64_t seed = 0;
  std::size_t cap = kDefaultEnumerationCap;
  // Exact enumeration chunks; 0 picks 1 for small n and 64 otherwise.
  std::size_t chunks = 0;
  // Worker threads; 0 uses the hardware concurrency. Results do not depend on it.
  std::size_t threads = 0;
};

inline constexpr std::uint64_t kMonteCarloChunk = 8192;

namespace detail {

// Neumaier-compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) noexcept {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  double total() const noexcept { return sum + carry; }
};

struct RunningMoments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  // Chan et al. pairwise merge.
  void merge(const RunningMoments& o) noexcept {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / total;
    count += o.count;
  }

  double std_error() const noexcept {
    if (count < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  }
};

inline std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t t = requested != 0 ? requested : std::max(1U, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(t, jobs));
}

// Runs job(c) for c in [0, jobs). Each job writes only its own result slot.
template <class Job>
void run_chunks(std::size_t jobs, std::size_t threads, Job&& job) {
  const std::size_t workers = worker_count(threads, jobs);
  if (workers == 1) {
    for (std::size_t c = 0; c < jobs; ++c) job(c);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < jobs; c += workers) job(c);
    });
  }
  for (auto& t : pool) t.join();
}

inline void check_shapes(const Policy& pi, const ScienceTable& table) {
  if (pi.n() != table.n()) {
    throw ValidationError("policy has n=" + std::to_string(pi.n()) + " but table has n=" +
                          std::to_string(table.n()));
  }
}

inline std::size_t exact_chunks(const EngineOptions& opts, std::uint64_t total) {
  if (opts.chunks != 0) return static_cast<std::size_t>(std::min<std::uint64_t>(opts.chunks, total));
  return total >= (std::uint64_t{1} << 14) ? 64 : 1;
}

inline void require_finite(double x, Assignment z, std::size_t n) {
  if (!std::isfinite(x)) {
    throw ComputationError("functional returned a non-finite value at z=" + to_bit_string(z, n));
  }
}

}  // namespace detail

// E_pi[f | event] = sum_z pmf(z) f 1{event} / sum_z pmf(z) 1{event}, ascending bitmask
// enumeration, per-chunk partial sums combined in chunk order.
inline EstimandResult exact_expectation(const Functional& f, const Policy& pi,
                                        const ScienceTable& table, const EngineOptions& opts = {}) {
  detail::check_shapes(pi, table);
  const std::size_t n = table.n();
  require_enumerable(n, opts.cap);
  const std::uint64_t total = assignment_count(n);
  const std::size_t chunks = detail::exact_chunks(opts, total);
  std::vector<detail::CompensatedSum> num(chunks);
  std::vector<detail::CompensatedSum> den(chunks);

  detail::run_chunks(chunks, opts.threads, [&](std::size_t c) {
    const std::uint64_t lo = total * c / chunks;
    const std::uint64_t hi = total * (c + 1) / chunks;
    std::vector<double> y(n);
    for (Assignment z = lo; z < hi; ++z) {
      const double w = pi.pmf(z);
      if (w == 0.0) continue;
      if (f.event && !f.event(z)) continue;
      table.column(z, y);
      const double v = f.value(z, y);
      detail::require_finite(v, z, n);
      num[c].add(w * v);
      den[c].add(w);
    }
  });

  detail::CompensatedSum numerator;
  detail::CompensatedSum denominator;
  for (std::size_t c = 0; c < chunks; ++c) {
    numerator.add(num[c].total());
    denominator.add(den[c].total());
  }
  const double prob = denominator.total();
  if (!(prob > 0.0)) throw ZeroProbabilityEvent(f.event_name + " under " + pi.describe());
  EstimandResult r;
  r.value = numerator.total() / prob;
  r.method = Method::exact;
  r.event_probability = std::min(prob, 1.0);
  return r;
}

// Conditional sample mean over the samples satisfying the event. Samples are drawn
// in chunks of kMonteCarloChunk, chunk c from substream c of `seed`.
inline EstimandResult mc_expectation(const Functional& f, const Policy& pi,
                                     const ScienceTable& table, std::size_t n_samples,
                                     std::uint64_t seed, const EngineOptions& opts = {}) {
  detail::check_shapes(pi, table);
  if (n_samples == 0) throw ValidationError("Monte Carlo requires n_samples >= 1");
  const std::size_t n = table.n();
  const std::size_t chunks = static_cast<std::size_t>((n_samples + kMonteCarloChunk - 1) / kMonteCarloChunk);
  std::vector<detail::RunningMoments> parts(chunks);

  detail::run_chunks(chunks, opts.threads, [&](std::size_t c) {
    Rng rng = make_rng(seed, c);
    const std::uint64_t lo = kMonteCarloChunk * c;
    const std::uint64_t hi = std::min<std::uint64_t>(n_samples, lo + kMonteCarloChunk);
    std::vector<double> y(n);
    for (std::uint64_t s = lo; s < hi; ++s) {
      const Assignment z = pi.sample(rng);
      if (f.event && !f.event(z)) continue;
      table.column(z, y);
      const double v = f.value(z, y);
      detail::require_finite(v, z, n);
      parts[c].add(v);
    }
  });

  detail::RunningMoments all;
  for (const auto& p : parts) all.merge(p);
  if (all.count == 0) {
    throw ZeroProbabilityEvent(f.event_name + " (no Monte Carlo sample satisfied it) under " +
                               pi.describe());
  }
  EstimandResult r;
  r.value = all.mean;
  r.method = Method::monte_carlo;
  r.std_error = all.std_error();
  r.event_probability = static_cast<double>(all.count) / static_cast<double>(n_samples);
  r.n_samples = n_samples;
  return r;
}

// E_pi[f] for a vector functional, by exact enumeration.
inline std::vector<double> exact_means(const VectorFunctional& f, const Policy& pi,
                                       const ScienceTable& table, const EngineOptions& opts = {}) {
  detail::check_shapes(pi, table);
  const std::size_t n = table.n();
  require_enumerable(n, opts.cap);
  const std::uint64_t total = assignment_count(n);
  const std::size_t chunks = detail::exact_chunks(opts, total);
  std::vector<std::vector<detail::CompensatedSum>> parts(
      chunks, std::vector<detail::CompensatedSum>(f.dim));

  detail::run_chunks(chunks, opts.threads, [&](std::size_t c) {
    const std::uint64_t lo = total * c / chunks;
    const std::uint64_t hi = total * (c + 1) / chunks;
    std::vector<double> y(n);
    std::vector<double> out(f.dim);
    for (Assignment z = lo; z < hi; ++z) {
      const double w = pi.pmf(z);
      if (w == 0.0) continue;
      table.column(z, y);
      f.value(z, y, out);
      for (std::size_t k = 0; k < f.dim; ++k) {
        detail::require_finite(out[k], z, n);
        parts[c][k].add(w * out[k]);
      }
    }
  });

  std::vector<double> mean(f.dim);
  for (std::size_t k = 0; k < f.dim; ++k) {
    detail::CompensatedSum s;
    for (std::size_t c = 0; c < chunks; ++c) s.add(parts[c][k].total());
    mean[k] = s.total();
  }
  return mean;
}

// g(sample mean of f) with a delta-method standard error: the same sample stream is
// replayed to accumulate the linearization grad g(mean) . f(z).
inline EstimandResult mc_smooth(const VectorFunctional& f, const SmoothMap& g, const Policy& pi,
                                const ScienceTable& table, std::size_t n_samples,
                                std::uint64_t seed, const EngineOptions& opts = {}) {
  detail::check_shapes(pi, table);
  if (n_samples == 0) throw ValidationError("Monte Carlo requires n_samples >= 1");
  const std::size_t n = table.n();
  const std::size_t chunks = static_cast<std::size_t>((n_samples + kMonteCarloChunk - 1) / kMonteCarloChunk);

  auto sweep = [&](auto&& visit) {
    detail::run_chunks(chunks, opts.threads, [&](std::size_t c) {
      Rng rng = make_rng(seed, c);
      const std::uint64_t lo = kMonteCarloChunk * c;
      const std::uint64_t hi = std::min<std::uint64_t>(n_samples, lo + kMonteCarloChunk);
      std::vector<double> y(n);
      std::vector<double> out(f.dim);
      for (std::uint64_t s = lo; s < hi; ++s) {
        const Assignment z = pi.sample(rng);
        table.column(z, y);
        f.value(z, y, out);
        visit(c, z, std::span<const double>(out));
      }
    });
  };

  std::vector<std::vector<detail::CompensatedSum>> sums(chunks,
                                                        std::vector<detail::CompensatedSum>(f.dim));
  sweep([&](std::size_t c, Assignment z, std::span<const double> out) {
    for (std::size_t k = 0; k < f.dim; ++k) {
      detail::require_finite(out[k], z, n);
      sums[c][k].add(out[k]);
    }
  });
  std::vector<double> mean(f.dim);
  for (std::size_t k = 0; k < f.dim; ++k) {
    detail::CompensatedSum s;
    for (std::size_t c = 0; c < chunks; ++c) s.add(sums[c][k].total());
    mean[k] = s.total() / static_cast<double>(n_samples);
  }

  const double value = g.value(mean);
  std::vector<double> grad(f.dim);
  g.gradient(mean, grad);
  std::vector<detail::RunningMoments> lin(chunks);
  sweep([&](std::size_t c, Assignment, std::span<const double> out) {
    double psi = 0.0;
    for (std::size_t k = 0; k < f.dim; ++k) psi += grad[k] * out[k];
    lin[c].add(psi);
  });
  detail::RunningMoments all;
  for (const auto& p : lin) all.merge(p);

  EstimandResult r;
  r.value = value;
  r.method = Method::monte_carlo;
  r.std_error = all.std_error();
  r.event_probability = 1.0;
  r.n_samples = n_samples;
  return r;
}

// Dispatches to exact enumeration or Monte Carlo according to the options.
// `stream` separates independent Monte Carlo draws inside one estimand.
class Engine {
 public:
  Engine() = default;
  explicit Engine(EngineOptions opts) : opts_(opts) {}

  const EngineOptions& options() const noexcept { return opts_; }
  bool exact() const noexcept { return opts_.mode == Method::exact; }

  EstimandResult expectation(const Functional& f, const Policy& pi, const ScienceTable& table,
                             std::uint64_t stream = 0) const {
    if (exact()) return exact_expectation(f, pi, table, opts_);
    return mc_expectation(f, pi, table, opts_.n_samples, substream_seed(opts_.seed, stream), opts_);
  }

  EstimandResult smooth(const VectorFunctional& f, const SmoothMap& g, const Policy& pi,
                        const ScienceTable& table, std::uint64_t stream = 0) const {
    if (exact()) {
      const auto mean = exact_means(f, pi, table, opts_);
      EstimandResult r;
      r.value = g.value(mean);
      r.method = Method::exact;
      return r;
    }
    return mc_smooth(f, g, pi, table, opts_.n_samples, substream_seed(opts_.seed, stream), opts_);
  }

 private:
  EngineOptions opts_;
};

// Exact focal-set averages on k disjoint copies of one component when the policy
// is i.i.d. across copies (for example homogeneous Bernoulli). The focal set must
// be a union of per-copy focal sets, each a function of that copy's assignment.
//
// With C the per-copy focal count and R the law of the focal count in the other
// k-1 copies, E[avg_{N} Y | |N|>0] = k sum_z pi(z) sum_{i in F(z)} y_i(z)
// E[1/(|F(z)| + R)] / (1 - P(C=0)^k).
class CopiesFactorization {
 public:
  CopiesFactorization(ScienceTable component_table, Policy component_policy, std::size_t copies,
                      std::size_t cap = kDefaultEnumerationCap)
      : table_(std::move(component_table)), policy_(std::move(component_policy)), copies_(copies) {
    detail::check_shapes(policy_, table_);
    if (copies_ == 0) throw ValidationError("copies must be >= 1");
    require_enumerable(table_.n(), cap);
  }

  std::size_t copies() const noexcept { return copies_; }
  std::size_t n() const noexcept { return table_.n() * copies_; }
  const ScienceTable& component_table() const noexcept { return table_; }
  const Policy& component_policy() const noexcept { return policy_; }

  EstimandResult focal_average(const std::function<Assignment(Assignment)>& focal,
                               const std::string& event_name = "nonempty focal set") const {
    const std::size_t c = table_.n();
    const std::uint64_t total = assignment_count(c);
    std::vector<double> count_law(c + 1, 0.0);
    for (Assignment z = 0; z < total; ++z) {
      const double w = policy_.pmf(z);
      if (w > 0.0) count_law[treated_count(focal(z) & all_units(c))] += w;
    }
    // Law of the focal count over the other copies: (k-1)-fold convolution.
    std::vector<double> rest{1.0};
    for (std::size_t k = 1; k < copies_; ++k) {
      std::vector<double> next(rest.size() + c, 0.0);
      for (std::size_t a = 0; a < rest.size(); ++a) {
        if (rest[a] == 0.0) continue;
        for (std::size_t b = 0; b <= c; ++b) next[a + b] += rest[a] * count_law[b];
      }
      rest = std::move(next);
    }
    // inv_mean[m] = E[1 / (m + R)] for m >= 1.
    std::vector<double> inv_mean(c + 1, 0.0);
    for (std::size_t m = 1; m <= c; ++m) {
      detail::CompensatedSum s;
      for (std::size_t t = 0; t < rest.size(); ++t) s.add(rest[t] / static_cast<double>(m + t));
      inv_mean[m] = s.total();
    }
    detail::CompensatedSum numerator;
    for (Assignment z = 0; z < total; ++z) {
      const double w = policy_.pmf(z);
      if (w == 0.0) continue;
      const Assignment f = focal(z) & all_units(c);
      if (f == 0) continue;
      double y_sum = 0.0;
      for (Unit i : members(f)) y_sum += table_.at(i, z);
      numerator.add(w * y_sum * inv_mean[treated_count(f)]);
    }
    const double prob = 1.0 - std::pow(count_law[0], static_cast<double>(copies_));
    if (!(prob > 0.0)) throw ZeroProbabilityEvent(event_name + " under " + policy_.describe());
    EstimandResult r;
    r.value = static_cast<double>(copies_) * numerator.total() / prob;
    r.method = Method::exact;
    r.event_probability = prob;
    return r;
  }

 private:
  ScienceTable table_;
  Policy policy_;
  std::size_t copies_;
};

}  // namespace netpol
