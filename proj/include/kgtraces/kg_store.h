#pragma once

#include <compare>
#include <cstddef>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace kgtraces {

using EntityId = std::string;
using RelationId = std::string;

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

// "(head, relation, tail)"
std::string render_triple(const Triple& t);

void to_json(nlohmann::json& j, const Triple& t);
void from_json(const nlohmann::json& j, Triple& t);

struct StoreStats {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t triples = 0;
};

nlohmann::json to_json(const StoreStats& s);

// Indexed, immutable view over a set of directed triples.
//
// Triples keep the order of first occurrence. Adjacency lists are sorted by
// (relation, tail) so every traversal built on top of them is deterministic.
// Once constructed the store is never mutated; share it by const reference.
class KGStore {
 public:
  KGStore() = default;
  // Deduplicates; throws ArgumentError if any field is blank.
  explicit KGStore(std::vector<Triple> triples);

  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

  // Outgoing triples of `entity`, optionally restricted to one relation.
  // Unknown entities yield an empty result.
  std::vector<Triple> neighbors(std::string_view entity, const RelationId* relation = nullptr) const;
  std::vector<Triple> neighbors(std::string_view entity, const RelationId& relation) const {
    return neighbors(entity, &relation);
  }

  // Indices into triples() of the outgoing / incoming edges of an entity.
  const std::vector<std::size_t>& out_edges(std::string_view entity) const;
  const std::vector<std::size_t>& in_edges(std::string_view entity) const;

  // Tails reachable from head through relation.
  const std::set<EntityId>& tails(std::string_view head, std::string_view relation) const;

  // Entity ids whose normalized surface equals normalize_surface(surface).
  std::set<EntityId> resolve_entity(std::string_view surface) const;

  bool has_entity(std::string_view entity) const;
  std::set<EntityId> entities() const;
  std::set<RelationId> relations() const;
  StoreStats stats() const;

 private:
  std::vector<Triple> triples_;
  std::map<std::pair<EntityId, RelationId>, std::set<EntityId>, std::less<>> out_index_;
  std::map<EntityId, std::vector<std::size_t>, std::less<>> adj_index_;
  std::map<EntityId, std::vector<std::size_t>, std::less<>> in_index_;
  std::map<std::string, std::set<EntityId>, std::less<>> surface_index_;
};

// Reads 3-column UTF-8 TSV. Blank lines and lines starting with '#' are
// skipped. Throws ParseError (with the 1-based line number) on a line that
// does not have exactly three non-empty fields.
KGStore load_kg(std::istream& in);
KGStore load_kg_file(const std::string& path);

// Serializes the store back to TSV in stored order.
std::string dump_kg(const KGStore& store);

}  // namespace kgtraces
