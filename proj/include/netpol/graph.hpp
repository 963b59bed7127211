#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "netpol/assignment.hpp"
#include "netpol/errors.hpp"

namespace netpol {

// Undirected simple graph over units 0..n-1. Immutable after construction.
class Graph {
 public:
  Graph() = default;

  // Edges are symmetrized and deduplicated. Self-loops and out-of-range endpoints throw.
  Graph(std::size_t n, const std::vector<std::pair<Unit, Unit>>& edges,
        std::vector<std::string> labels = {})
      : n_(n), adjacency_(n), labels_(std::move(labels)) {
    if (!labels_.empty() && labels_.size() != n) {
      throw ValidationError("graph labels: expected " + std::to_string(n) + " entries, got " +
                            std::to_string(labels_.size()));
    }
    for (const auto& [a, b] : edges) {
      if (a >= n || b >= n) {
        throw ValidationError("edge (" + std::to_string(a + 1) + ", " + std::to_string(b + 1) +
                              ") references a unit outside [1, " + std::to_string(n) + "]");
      }
      if (a == b) {
        throw ValidationError("self-loop at unit " + std::to_string(a + 1));
      }
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    for (auto& list : adjacency_) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      edge_count_ += list.size();
    }
    edge_count_ /= 2;
    if (n_ <= kMaxBitmaskUnits) {
      masks_.resize(n_, 0);
      for (Unit i = 0; i < n_; ++i) {
        for (Unit j : adjacency_[i]) masks_[i] = with_unit(masks_[i], j);
      }
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edge_count_; }
  const std::vector<Unit>& neighbors(Unit i) const { return adjacency_.at(i); }
  std::size_t degree(Unit i) const { return adjacency_.at(i).size(); }

  bool adjacent(Unit a, Unit b) const {
    const auto& list = adjacency_.at(a);
    return std::binary_search(list.begin(), list.end(), b);
  }

  // Requires n <= 64.
  Assignment neighbor_mask(Unit i) const {
    require_bitmask_size(n_);
    return masks_.at(i);
  }

  std::size_t treated_neighbors(Unit i, Assignment z) const {
    return treated_count(neighbor_mask(i) & z);
  }

  bool has_labels() const noexcept { return !labels_.empty(); }
  const std::string& label(Unit i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  std::vector<std::pair<Unit, Unit>> edges() const {
    std::vector<std::pair<Unit, Unit>> out;
    out.reserve(edge_count_);
    for (Unit a = 0; a < n_; ++a) {
      for (Unit b : adjacency_[a]) {
        if (a < b) out.emplace_back(a, b);
      }
    }
    return out;
  }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> out(n_);
    for (Unit i = 0; i < n_; ++i) out[i] = adjacency_[i].size();
    return out;
  }

  // Component index per unit, numbered in order of smallest member.
  std::vector<std::size_t> components() const {
    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> comp(n_, kUnset);
    std::size_t next = 0;
    std::vector<Unit> stack;
    for (Unit s = 0; s < n_; ++s) {
      if (comp[s] != kUnset) continue;
      comp[s] = next;
      stack.push_back(s);
      while (!stack.empty()) {
        Unit x = stack.back();
        stack.pop_back();
        for (Unit y : adjacency_[x]) {
          if (comp[y] == kUnset) {
            comp[y] = next;
            stack.push_back(y);
          }
        }
      }
      ++next;
    }
    return comp;
  }

  std::size_t component_count() const {
    auto comp = components();
    return comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  }

 private:
  std::size_t n_ = 0;
  std::size_t edge_count_ = 0;
  std::vector<std::vector<Unit>> adjacency_;
  std::vector<Assignment> masks_;
  std::vector<std::string> labels_;
};

// Complete bipartite graph K_{u,v}. Units 0..u-1 are the left half (degree v),
// units u..u+v-1 the right half (degree u).
inline Graph biclique(std::size_t u, std::size_t v) {
  if (u == 0 || v == 0) {
    throw ValidationError("biclique requires positive half sizes, got u=" + std::to_string(u) +
                          ", v=" + std::to_string(v));
  }
  std::vector<std::pair<Unit, Unit>> edges;
  edges.reserve(u * v);
  for (Unit a = 0; a < u; ++a) {
    for (Unit b = 0; b < v; ++b) edges.emplace_back(a, u + b);
  }
  std::vector<std::string> labels(u + v, "right");
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(u), "left");
  return Graph(u + v, edges, std::move(labels));
}

// k disjoint copies of g; unit i of copy c becomes c*n(g) + i.
inline Graph disjoint_copies(const Graph& g, std::size_t k) {
  if (k == 0) throw ValidationError("disjoint_copies requires k >= 1");
  const std::size_t n = g.n();
  const auto base = g.edges();
  std::vector<std::pair<Unit, Unit>> edges;
  edges.reserve(base.size() * k);
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < k; ++c) {
    for (const auto& [a, b] : base) edges.emplace_back(c * n + a, c * n + b);
    if (g.has_labels()) labels.insert(labels.end(), g.labels().begin(), g.labels().end());
  }
  return Graph(n * k, edges, std::move(labels));
}

// Whitespace-separated "u v" pairs, one per line, 1-based. Blank lines and lines
// starting with '#' are skipped. n defaults to the largest label seen.
inline Graph read_edge_list(std::istream& in, std::optional<std::size_t> n = std::nullopt) {
  std::vector<std::pair<Unit, Unit>> edges;
  std::size_t max_label = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long long a = 0;
    long long b = 0;
    std::string rest;
    if (!(ls >> a >> b) || (ls >> rest)) {
      throw ValidationError("edge list line " + std::to_string(line_no) +
                            ": expected two integer labels");
    }
    if (a < 1 || b < 1) {
      throw ValidationError("edge list line " + std::to_string(line_no) +
                            ": labels are 1-based and must be positive");
    }
    max_label = std::max<std::size_t>({max_label, static_cast<std::size_t>(a),
                                       static_cast<std::size_t>(b)});
    if (a == b) {
      throw ValidationError("edge list line " + std::to_string(line_no) + ": self-loop at unit " +
                            std::to_string(a));
    }
    edges.emplace_back(static_cast<Unit>(a - 1), static_cast<Unit>(b - 1));
  }
  const std::size_t units = n.value_or(max_label);
  if (units < max_label) {
    throw ValidationError("edge list references unit " + std::to_string(max_label) +
                          " but n=" + std::to_string(units));
  }
  return Graph(units, edges);
}

// Per-unit neighborhoods N_i, not necessarily symmetric. Always i not in N_i.
class NeighborhoodStructure {
 public:
  NeighborhoodStructure() = default;

  explicit NeighborhoodStructure(std::vector<std::vector<Unit>> sets) : sets_(std::move(sets)) {
    const std::size_t n = sets_.size();
    for (Unit i = 0; i < n; ++i) {
      auto& s = sets_[i];
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      for (Unit j : s) {
        if (j >= n) {
          throw ValidationError("neighborhood of unit " + std::to_string(i + 1) +
                                " references unit " + std::to_string(j + 1) + " outside [1, " +
                                std::to_string(n) + "]");
        }
        if (j == i) {
          throw ValidationError("neighborhood of unit " + std::to_string(i + 1) +
                                " contains the unit itself");
        }
      }
    }
    if (n <= kMaxBitmaskUnits) {
      masks_.resize(n, 0);
      for (Unit i = 0; i < n; ++i) {
        for (Unit j : sets_[i]) masks_[i] = with_unit(masks_[i], j);
      }
    }
  }

  static NeighborhoodStructure from_graph(const Graph& g) {
    std::vector<std::vector<Unit>> sets(g.n());
    for (Unit i = 0; i < g.n(); ++i) sets[i] = g.neighbors(i);
    return NeighborhoodStructure(std::move(sets));
  }

  std::size_t n() const noexcept { return sets_.size(); }
  const std::vector<Unit>& of(Unit i) const { return sets_.at(i); }

  Assignment mask(Unit i) const {
    require_bitmask_size(n());
    return masks_.at(i);
  }

  // Every N_i is a singleton and i -> j is injective.
  bool is_unique_pairs() const {
    std::vector<bool> hit(n(), false);
    for (const auto& s : sets_) {
      if (s.size() != 1 || hit[s.front()]) return false;
      hit[s.front()] = true;
    }
    return true;
  }

 private:
  std::vector<std::vector<Unit>> sets_;
  std::vector<Assignment> masks_;
};

// N_i = {target[i]}; target must be an injective map without fixed points.
inline NeighborhoodStructure unique_pairs(const std::vector<Unit>& target) {
  const std::size_t n = target.size();
  std::vector<std::size_t> source(n, n);
  for (Unit i = 0; i < n; ++i) {
    const Unit j = target[i];
    if (j >= n) {
      throw ValidationError("unique_pairs: unit " + std::to_string(i + 1) + " maps to " +
                            std::to_string(j + 1) + " outside [1, " + std::to_string(n) + "]");
    }
    if (j == i) {
      throw ValidationError("unique_pairs: unit " + std::to_string(i + 1) + " maps to itself");
    }
    if (source[j] != n) {
      throw ValidationError("unique_pairs: unit " + std::to_string(i + 1) + " repeats target " +
                            std::to_string(j + 1) + " already used by unit " +
                            std::to_string(source[j] + 1));
    }
    source[j] = i;
  }
  std::vector<std::vector<Unit>> sets(n);
  for (Unit i = 0; i < n; ++i) sets[i] = {target[i]};
  return NeighborhoodStructure(std::move(sets));
}

}  // namespace netpol
