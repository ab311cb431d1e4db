#include "kgtraces/path_engine.h"

#include <limits>
#include <map>

#include "kgtraces/text.h"

namespace kgtraces {

namespace {

constexpr int kUnreachable = std::numeric_limits<int>::max();

// Hop distance from every entity to the nearest target, following edges
// backwards. Entities that cannot reach a target are absent.
std::map<EntityId, int, std::less<>> distance_to_targets(const KGStore& store, const std::set<EntityId>& targets) {
  std::map<EntityId, int, std::less<>> dist;
  std::vector<EntityId> frontier;
  for (const auto& t : targets) {
    if (dist.emplace(t, 0).second) frontier.push_back(t);
  }
  for (int d = 1; !frontier.empty(); ++d) {
    std::vector<EntityId> next;
    for (const auto& v : frontier) {
      for (std::size_t i : store.in_edges(v)) {
        const EntityId& h = store.triples()[i].head;
        if (dist.emplace(h, d).second) next.push_back(h);
      }
    }
    frontier = std::move(next);
  }
  return dist;
}

class ChainSearch {
 public:
  ChainSearch(const KGStore& store, const std::set<EntityId>& targets)
      : store_(store), targets_(targets), dist_(distance_to_targets(store, targets)) {}

  // Chains of exactly `hops` edges from `source` that end on a target.
  void run(const EntityId& source, int hops, std::vector<ReasoningPath>& out) {
    visited_ = {source};
    chain_.clear();
    descend(source, hops, out);
  }

 private:
  int dist(const EntityId& v) const {
    auto it = dist_.find(v);
    return it == dist_.end() ? kUnreachable : it->second;
  }

  void descend(const EntityId& v, int remaining, std::vector<ReasoningPath>& out) {
    if (remaining == 0) {
      if (targets_.count(v)) out.push_back(ReasoningPath{chain_});
      return;
    }
    for (std::size_t i : store_.out_edges(v)) {
      const Triple& t = store_.triples()[i];
      if (visited_.count(t.tail) || dist(t.tail) > remaining - 1) continue;
      visited_.insert(t.tail);
      chain_.push_back(t);
      descend(t.tail, remaining - 1, out);
      chain_.pop_back();
      visited_.erase(t.tail);
    }
  }

  const KGStore& store_;
  const std::set<EntityId>& targets_;
  std::map<EntityId, int, std::less<>> dist_;
  std::set<EntityId> visited_;
  std::vector<Triple> chain_;
};

void sort_unique(std::vector<ReasoningPath>& paths) {
  std::sort(paths.begin(), paths.end(), path_order);
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
}

std::vector<std::string> split_arrows(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  int depth = 0;
  for (std::size_t i = 0; i < text.size();) {
    char c = text[i];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && text.compare(i, 3, "\xE2\x86\x92") == 0) {
      parts.push_back(trim(cur));
      cur.clear();
      i += 3;
      continue;
    }
    if (depth == 0 && text.compare(i, 2, "->") == 0) {
      parts.push_back(trim(cur));
      cur.clear();
      i += 2;
      continue;
    }
    cur.push_back(c);
    ++i;
  }
  parts.push_back(trim(cur));
  return parts;
}

}  // namespace

RelationPath ReasoningPath::relation_path() const {
  RelationPath r;
  r.relations.reserve(triples.size());
  for (const auto& t : triples) r.relations.push_back(t.relation);
  return r;
}

bool path_order(const ReasoningPath& a, const ReasoningPath& b) {
  const std::size_t n = std::min(a.triples.size(), b.triples.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.triples[i].relation != b.triples[i].relation) return a.triples[i].relation < b.triples[i].relation;
  }
  if (a.triples.size() != b.triples.size()) return a.triples.size() < b.triples.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (a.triples[i].head != b.triples[i].head) return a.triples[i].head < b.triples[i].head;
    if (a.triples[i].tail != b.triples[i].tail) return a.triples[i].tail < b.triples[i].tail;
  }
  return false;
}

std::string render_path(const RelationPath& p) { return join(p.relations, " \xE2\x86\x92 "); }

std::string render_path(const ReasoningPath& p) {
  std::vector<std::string> parts;
  parts.reserve(p.triples.size());
  for (const auto& t : p.triples) parts.push_back(render_triple(t));
  return join(parts, " \xE2\x86\x92 ");
}

RelationPath parse_relation_path(const std::string& text) {
  RelationPath p;
  for (auto& part : split_arrows(text)) {
    if (part.empty()) throw ParseError("empty relation in path: " + text);
    p.relations.push_back(std::move(part));
  }
  return p;
}

// Entities may themselves contain ", " so a triple is read as
// head = first field, relation = second field, tail = the remainder.
ReasoningPath parse_reasoning_path(const std::string& text) {
  std::vector<Triple> triples;
  for (const auto& part : split_arrows(text)) {
    if (part.size() < 2 || part.front() != '(' || part.back() != ')')
      throw ParseError("expected (head, relation, tail), got: " + part);
    std::string inner = part.substr(1, part.size() - 2);
    std::size_t c1 = inner.find(", ");
    std::size_t c2 = c1 == std::string::npos ? std::string::npos : inner.find(", ", c1 + 2);
    if (c2 == std::string::npos) throw ParseError("triple needs three fields: " + part);
    Triple t{trim(inner.substr(0, c1)), trim(inner.substr(c1 + 2, c2 - c1 - 2)), trim(inner.substr(c2 + 2))};
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) throw ParseError("empty triple field: " + part);
    triples.push_back(std::move(t));
  }
  return ReasoningPath{std::move(triples)};
}

void to_json(nlohmann::json& j, const RelationPath& p) { j = p.relations; }
void from_json(const nlohmann::json& j, RelationPath& p) { p.relations = j.get<std::vector<RelationId>>(); }
void to_json(nlohmann::json& j, const ReasoningPath& p) {
  j = nlohmann::json::array();
  for (const auto& t : p.triples) j.push_back(t);
}
void from_json(const nlohmann::json& j, ReasoningPath& p) { p.triples = j.get<std::vector<Triple>>(); }

std::vector<ReasoningPath> enumerate_triple_paths(const KGStore& store, const std::set<EntityId>& sources,
                                                  const std::set<EntityId>& targets, int max_hops) {
  if (max_hops < 1) throw ArgumentError("max_hops must be >= 1");
  std::vector<ReasoningPath> out;
  if (sources.empty() || targets.empty()) return out;
  ChainSearch search(store, targets);
  for (int hops = 1; hops <= max_hops && out.empty(); ++hops) {
    for (const auto& s : sources) search.run(s, hops, out);
  }
  sort_unique(out);
  return out;
}

std::vector<RelationPath> enumerate_relation_paths(const KGStore& store, const std::set<EntityId>& sources,
                                                   const std::set<EntityId>& targets, int max_hops) {
  std::set<RelationPath> distinct;
  for (const auto& p : enumerate_triple_paths(store, sources, targets, max_hops)) distinct.insert(p.relation_path());
  return {distinct.begin(), distinct.end()};
}

std::vector<ReasoningPath> execute_relation_path(const KGStore& store, const std::set<EntityId>& sources,
                                                 const RelationPath& rel_path) {
  if (rel_path.relations.empty()) throw ArgumentError("execute_relation_path: empty relation path");
  std::vector<ReasoningPath> out;
  std::vector<Triple> chain;
  std::set<EntityId> visited;

  auto descend = [&](auto&& self, const EntityId& v, std::size_t step) -> void {
    if (step == rel_path.relations.size()) {
      out.push_back(ReasoningPath{chain});
      return;
    }
    const RelationId& rel = rel_path.relations[step];
    for (const auto& tail : store.tails(v, rel)) {
      if (visited.count(tail)) continue;
      visited.insert(tail);
      chain.push_back({v, rel, tail});
      self(self, tail, step + 1);
      chain.pop_back();
      visited.erase(tail);
    }
  };
  for (const auto& s : sources) {
    visited = {s};
    descend(descend, s, 0);
  }
  sort_unique(out);
  return out;
}

std::vector<ReasoningPath> expand_from_entities(const KGStore& store, const std::set<EntityId>& sources, int max_hops,
                                                std::size_t limit) {
  if (max_hops < 1) throw ArgumentError("max_hops must be >= 1");
  std::vector<ReasoningPath> out;
  std::vector<Triple> chain;
  std::set<EntityId> visited;
  auto full = [&] { return limit != 0 && out.size() >= limit; };

  auto descend = [&](auto&& self, const EntityId& v, int remaining) -> void {
    if (remaining == 0) return;
    for (std::size_t i : store.out_edges(v)) {
      if (full()) return;
      const Triple& t = store.triples()[i];
      if (visited.count(t.tail)) continue;
      visited.insert(t.tail);
      chain.push_back(t);
      out.push_back(ReasoningPath{chain});
      self(self, t.tail, remaining - 1);
      chain.pop_back();
      visited.erase(t.tail);
    }
  };
  for (const auto& s : sources) {
    if (full()) break;
    visited = {s};
    descend(descend, s, max_hops);
  }
  sort_unique(out);
  return out;
}

ReasoningPath link_triples(std::vector<Triple> triples) {
  if (triples.empty()) throw ArgumentError("link_triples: empty triple sequence");
  std::set<EntityId> seen{triples.front().head};
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& t = triples[i];
    if (i > 0 && triples[i - 1].tail != t.head) throw LinkError(i);
    if (!seen.insert(t.tail).second) throw CycleError(t.tail, i);
  }
  return ReasoningPath{std::move(triples)};
}

bool is_linked_chain(const std::vector<Triple>& triples) {
  try {
    link_triples(triples);
    return true;
  } catch (const LinkError&) {
    return false;
  } catch (const CycleError&) {
    return false;
  }
}

}  // namespace kgtraces
