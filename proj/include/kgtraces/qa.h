#pragma once

#include <istream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgtraces/kg_store.h"

namespace kgtraces {

enum class Split { kTrain, kValidation, kTest };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct QAInstance {
  std::string id;
  std::string question;
  std::vector<EntityId> question_entities;
  std::vector<std::string> answers;
  Split split = Split::kTest;
};

nlohmann::json to_json(const QAInstance& q);

// JSONL {"id","question","question_entities":[..],"answers":[..],"split"?}.
// Rejects empty answer lists and duplicate ids with a line-numbered ParseError.
std::vector<QAInstance> load_qa(std::istream& in);
std::vector<QAInstance> load_qa_file(const std::string& path);

// Maps names to store entities: exact ids first, then normalized surface
// matches. Names that resolve to nothing are dropped.
std::set<EntityId> link_entities(const KGStore& store, const std::vector<std::string>& names);

}  // namespace kgtraces
