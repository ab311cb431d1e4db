#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "kgtraces/error.h"
#include "kgtraces/kg_store.h"
#include "kgtraces/rng.h"

namespace kgtraces {

inline constexpr int kDefaultMaxHopsWebQsp = 2;
inline constexpr int kDefaultMaxHopsCwq = 4;
inline constexpr std::size_t kDefaultBeamK = 3;
inline constexpr std::size_t kDefaultMedicalSample = 30;

struct RelationPath {
  std::vector<RelationId> relations;

  auto operator<=>(const RelationPath&) const = default;
  bool operator==(const RelationPath&) const = default;
};

// A chain of triples: tail of step i is the head of step i + 1 and no
// entity repeats. Instances handed out by this module always satisfy both.
struct ReasoningPath {
  std::vector<Triple> triples;

  std::size_t hops() const { return triples.size(); }
  RelationPath relation_path() const;
  const EntityId& source() const { return triples.front().head; }
  const EntityId& target() const { return triples.back().tail; }

  auto operator<=>(const ReasoningPath&) const = default;
  bool operator==(const ReasoningPath&) const = default;
};

// Canonical ordering: relation sequence first, then entity sequence.
bool path_order(const ReasoningPath& a, const ReasoningPath& b);

// "teams → mascot"
std::string render_path(const RelationPath& p);
// "(A, teams, S) → (S, mascot, M)"
std::string render_path(const ReasoningPath& p);

// Inverse of render_path. Accepts "→" or "->" as the separator.
RelationPath parse_relation_path(const std::string& text);
ReasoningPath parse_reasoning_path(const std::string& text);

void to_json(nlohmann::json& j, const RelationPath& p);
void from_json(const nlohmann::json& j, RelationPath& p);
void to_json(nlohmann::json& j, const ReasoningPath& p);
void from_json(const nlohmann::json& j, ReasoningPath& p);

// All shortest entity-acyclic chains from any source to any target, of
// length 1..max_hops. Zero-hop matches are excluded. Sorted by path_order.
std::vector<ReasoningPath> enumerate_triple_paths(const KGStore& store, const std::set<EntityId>& sources,
                                                  const std::set<EntityId>& targets, int max_hops);

// Distinct relation sequences of enumerate_triple_paths, lexicographic.
std::vector<RelationPath> enumerate_relation_paths(const KGStore& store, const std::set<EntityId>& sources,
                                                   const std::set<EntityId>& targets, int max_hops);

// Instantiates a relation path from the given sources.
std::vector<ReasoningPath> execute_relation_path(const KGStore& store, const std::set<EntityId>& sources,
                                                 const RelationPath& rel_path);

// Every entity-acyclic chain of 1..max_hops hops leaving the sources, capped
// at `limit` paths (0 = unlimited). Used for entity-linked subgraph retrieval.
std::vector<ReasoningPath> expand_from_entities(const KGStore& store, const std::set<EntityId>& sources,
                                                int max_hops, std::size_t limit = 0);

// Validates that the triples chain head-to-tail without revisiting an entity.
// Throws LinkError at the first broken index, CycleError on a repeat.
ReasoningPath link_triples(std::vector<Triple> triples);

bool is_linked_chain(const std::vector<Triple>& triples);

// The k best distinct paths. Each path competes with its best score; ties go
// to the earlier input. Output is in descending score order.
template <typename Path>
std::vector<Path> top_k_paths(const std::vector<Path>& paths, const std::vector<double>& scores, std::size_t k) {
  if (paths.size() != scores.size())
    throw ArgumentError("top_k_paths: " + std::to_string(paths.size()) + " paths but " +
                        std::to_string(scores.size()) + " scores");
  if (k == 0) throw ArgumentError("top_k_paths: k must be positive");
  for (double s : scores) {
    if (std::isnan(s)) throw ArgumentError("top_k_paths: NaN score");
  }
  std::vector<std::size_t> order(paths.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<Path> out;
  std::set<Path> taken;
  for (std::size_t i : order) {
    if (out.size() == k) break;
    if (taken.insert(paths[i]).second) out.push_back(paths[i]);
  }
  return out;
}

template <typename Path>
struct PathDistribution {
  std::vector<std::pair<Path, double>> support;

  // 0 for paths outside the support.
  double probability(const Path& p) const {
    for (const auto& [q, w] : support) {
      if (q == p) return w;
    }
    return 0.0;
  }
};

// Uniform over the distinct input paths, in first-occurrence order.
template <typename Path>
PathDistribution<Path> empirical_distribution(const std::vector<Path>& paths) {
  if (paths.empty()) throw ArgumentError("empirical_distribution: no paths");
  std::vector<Path> distinct;
  std::set<Path> seen;
  for (const auto& p : paths) {
    if (seen.insert(p).second) distinct.push_back(p);
  }
  PathDistribution<Path> d;
  const double w = 1.0 / static_cast<double>(distinct.size());
  for (auto& p : distinct) d.support.emplace_back(std::move(p), w);
  return d;
}

// Normalized exp(score) over distinct paths, e.g. beam log-probabilities.
template <typename Path>
PathDistribution<Path> distribution_from_logprobs(const std::vector<Path>& paths, const std::vector<double>& logprobs) {
  if (paths.empty() || paths.size() != logprobs.size())
    throw ArgumentError("distribution_from_logprobs: size mismatch or empty input");
  std::vector<Path> distinct;
  std::vector<double> best;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    auto it = std::find(distinct.begin(), distinct.end(), paths[i]);
    if (it == distinct.end()) {
      distinct.push_back(paths[i]);
      best.push_back(logprobs[i]);
    } else {
      auto& b = best[static_cast<std::size_t>(it - distinct.begin())];
      b = std::max(b, logprobs[i]);
    }
  }
  const double m = *std::max_element(best.begin(), best.end());
  double z = 0.0;
  for (double v : best) z += std::exp(v - m);
  PathDistribution<Path> d;
  for (std::size_t i = 0; i < distinct.size(); ++i) d.support.emplace_back(distinct[i], std::exp(best[i] - m) / z);
  return d;
}

// n paths without replacement, kept in input order. n >= size returns the input.
template <typename Path>
std::vector<Path> sample_paths(const std::vector<Path>& paths, std::size_t n, std::uint64_t seed) {
  if (n >= paths.size()) return paths;
  std::vector<std::size_t> idx(paths.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<Path> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(paths[i]);
  return out;
}

}  // namespace kgtraces
