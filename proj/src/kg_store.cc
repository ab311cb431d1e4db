#include "kgtraces/kg_store.h"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "kgtraces/error.h"
#include "kgtraces/text.h"

namespace kgtraces {

namespace {

const std::vector<std::size_t> kNoEdges;
const std::set<EntityId> kNoTails;

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    return std::hash<std::string>{}(t.head) ^ (std::hash<std::string>{}(t.relation) * 31) ^
           (std::hash<std::string>{}(t.tail) * 131);
  }
};

}  // namespace

std::string render_triple(const Triple& t) { return "(" + t.head + ", " + t.relation + ", " + t.tail + ")"; }

void to_json(nlohmann::json& j, const Triple& t) { j = nlohmann::json::array({t.head, t.relation, t.tail}); }

void from_json(const nlohmann::json& j, Triple& t) {
  if (!j.is_array() || j.size() != 3) throw ParseError("triple must be a 3-element array");
  t.head = j[0].get<std::string>();
  t.relation = j[1].get<std::string>();
  t.tail = j[2].get<std::string>();
}

nlohmann::json to_json(const StoreStats& s) {
  return {{"entities", s.entities}, {"relations", s.relations}, {"triples", s.triples}};
}

KGStore::KGStore(std::vector<Triple> triples) {
  std::unordered_set<Triple, TripleHash> seen;
  triples_.reserve(triples.size());
  for (auto& t : triples) {
    if (trim(t.head).empty() || trim(t.relation).empty() || trim(t.tail).empty())
      throw ArgumentError("triple has an empty field: " + render_triple(t));
    if (seen.insert(t).second) triples_.push_back(std::move(t));
  }

  for (std::size_t i = 0; i < triples_.size(); ++i) {
    const Triple& t = triples_[i];
    out_index_[{t.head, t.relation}].insert(t.tail);
    adj_index_[t.head].push_back(i);
    in_index_[t.tail].push_back(i);
    surface_index_[normalize_surface(t.head)].insert(t.head);
    surface_index_[normalize_surface(t.tail)].insert(t.tail);
  }
  auto by_relation_tail = [this](std::size_t a, std::size_t b) {
    const Triple& x = triples_[a];
    const Triple& y = triples_[b];
    return std::tie(x.relation, x.tail, x.head) < std::tie(y.relation, y.tail, y.head);
  };
  for (auto& [_, edges] : adj_index_) std::sort(edges.begin(), edges.end(), by_relation_tail);
  for (auto& [_, edges] : in_index_) std::sort(edges.begin(), edges.end(), by_relation_tail);
}

std::vector<Triple> KGStore::neighbors(std::string_view entity, const RelationId* relation) const {
  std::vector<Triple> out;
  for (std::size_t i : out_edges(entity)) {
    if (relation == nullptr || triples_[i].relation == *relation) out.push_back(triples_[i]);
  }
  return out;
}

const std::vector<std::size_t>& KGStore::out_edges(std::string_view entity) const {
  auto it = adj_index_.find(entity);
  return it == adj_index_.end() ? kNoEdges : it->second;
}

const std::vector<std::size_t>& KGStore::in_edges(std::string_view entity) const {
  auto it = in_index_.find(entity);
  return it == in_index_.end() ? kNoEdges : it->second;
}

const std::set<EntityId>& KGStore::tails(std::string_view head, std::string_view relation) const {
  auto it = out_index_.find(std::make_pair(std::string(head), std::string(relation)));
  return it == out_index_.end() ? kNoTails : it->second;
}

std::set<EntityId> KGStore::resolve_entity(std::string_view surface) const {
  auto it = surface_index_.find(normalize_surface(surface));
  return it == surface_index_.end() ? std::set<EntityId>{} : it->second;
}

bool KGStore::has_entity(std::string_view entity) const {
  return adj_index_.find(entity) != adj_index_.end() || in_index_.find(entity) != in_index_.end();
}

std::set<EntityId> KGStore::entities() const {
  std::set<EntityId> out;
  for (const auto& t : triples_) {
    out.insert(t.head);
    out.insert(t.tail);
  }
  return out;
}

std::set<RelationId> KGStore::relations() const {
  std::set<RelationId> out;
  for (const auto& t : triples_) out.insert(t.relation);
  return out;
}

StoreStats KGStore::stats() const { return {entities().size(), relations().size(), triples_.size()}; }

KGStore load_kg(std::istream& in) {
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3)
      throw ParseError("expected 3 tab-separated fields, found " + std::to_string(fields.size()), line_no);
    for (const auto& f : fields) {
      if (trim(f).empty()) throw ParseError("empty field", line_no);
    }
    triples.push_back({fields[0], fields[1], fields[2]});
  }
  return KGStore(std::move(triples));
}

KGStore load_kg_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load_kg(in);
}

std::string dump_kg(const KGStore& store) {
  std::string out;
  for (const auto& t : store.triples()) out += t.head + '\t' + t.relation + '\t' + t.tail + '\n';
  return out;
}

}  // namespace kgtraces
