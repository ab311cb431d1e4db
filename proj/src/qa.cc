#include "kgtraces/qa.h"

#include <fstream>

#include "kgtraces/error.h"
#include "kgtraces/text.h"

namespace kgtraces {

using nlohmann::json;

const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "test";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "validation" || s == "dev") return Split::kValidation;
  if (s == "test") return Split::kTest;
  throw ArgumentError("unknown split '" + s + "'");
}

json to_json(const QAInstance& q) {
  return {{"id", q.id},
          {"question", q.question},
          {"question_entities", q.question_entities},
          {"answers", q.answers},
          {"split", to_string(q.split)}};
}

std::vector<QAInstance> load_qa(std::istream& in) {
  std::vector<QAInstance> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    QAInstance q;
    try {
      json j = json::parse(line);
      q.id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
      q.question = j.value("question", std::string());
      q.question_entities = j.value("question_entities", std::vector<std::string>{});
      q.answers = j.at("answers").get<std::vector<std::string>>();
      if (j.contains("split")) q.split = split_from_string(j["split"].get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad QA record: ") + e.what(), line_no);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (q.answers.empty()) throw ParseError("instance '" + q.id + "' has no answers", line_no);
    if (!ids.insert(q.id).second) throw ParseError("duplicate id '" + q.id + "'", line_no);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<QAInstance> load_qa_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load_qa(in);
}

std::set<EntityId> link_entities(const KGStore& store, const std::vector<std::string>& names) {
  std::set<EntityId> out;
  for (const auto& n : names) {
    if (store.has_entity(n)) {
      out.insert(n);
      continue;
    }
    auto hits = store.resolve_entity(n);
    out.insert(hits.begin(), hits.end());
  }
  return out;
}

}  // namespace kgtraces
