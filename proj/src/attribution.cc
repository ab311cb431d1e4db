#include "kgtraces/attribution.h"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "kgtraces/text.h"

namespace kgtraces {

using nlohmann::json;

namespace {

const std::regex kBanner(R"(^\s*(?:\*\*)?\s*Reasoning\s+Process\s*(?:\*\*)?\s*:\s*(?:\*\*)?\s*(.*)$)",
                         std::regex::icase);
const std::regex kStepHeader(R"(^\s*(?:[-*]\s+)?(?:\*\*)?\s*Step\s+(\d+)\s*(?:\*\*)?\s*[:.]\s*(?:\*\*)?\s*(.*)$)",
                             std::regex::icase);
const std::regex kFinalAnswer(R"(^\s*(?:[-*]\s+)?(?:\*\*)?\s*Final\s+Answers?\s*(?:\*\*)?\s*:\s*(?:\*\*)?\s*(.*)$)",
                              std::regex::icase);
const std::regex kTagGroup(R"(\s*\[\s*((?:<[^<>\[\]]*>\s*)+)\])");
const std::regex kTagToken(R"(<([^<>]*)>)");
const std::regex kCitation(R"(#(\d+))");

std::string rtrim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_keep_empty(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t nl = s.find('\n', start);
    out.push_back(s.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return out;
}

void add_citations(const std::string& text, std::vector<int>& ids) {
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kCitation); it != std::sregex_iterator(); ++it) {
    int id = 0;
    try {
      id = std::stoi((*it)[1]);
    } catch (const std::out_of_range&) {
      continue;
    }
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
}

// Removes tag groups from one line, recording tags and issues on the step.
std::string take_tags(const std::string& line, std::size_t line_no, ReasoningStep* step) {
  std::string out;
  auto begin = line.cbegin();
  for (auto it = std::sregex_iterator(line.begin(), line.end(), kTagGroup); it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    out.append(begin, m[0].first);
    begin = m[0].second;
    if (!step) continue;

    std::optional<PathSource> source;
    std::optional<Effectiveness> eff;
    bool conflict = false;
    const std::string inner = m[1];
    for (auto t = std::sregex_iterator(inner.begin(), inner.end(), kTagToken); t != std::sregex_iterator(); ++t) {
      const std::string tok = upper(trim((*t)[1].str()));
      if (tok == "KG" || tok == "INFERRED") {
        PathSource s = tok == "KG" ? PathSource::kKG : PathSource::kInferred;
        if (source && *source != s) conflict = true;
        source = s;
      } else if (tok == "EFFECTIVE" || tok == "INEFFECTIVE") {
        eff = tok == "EFFECTIVE" ? Effectiveness::kEffective : Effectiveness::kIneffective;
      } else {
        step->issues.push_back({TagIssue::Kind::kUnknownToken, line_no, "<" + (*t)[1].str() + ">"});
      }
    }
    if (conflict) {
      step->issues.push_back({TagIssue::Kind::kConflictingSource, line_no, trim(m[0].str())});
    } else if (!source) {
      if (eff) step->issues.push_back({TagIssue::Kind::kMissingSource, line_no, trim(m[0].str())});
    } else {
      step->tags.push_back({*source, eff, line_no});
    }
  }
  out.append(begin, line.cend());
  return rtrim(out);
}

struct StepBuilder {
  ReasoningStep step;
  std::vector<std::string> lines;

  void add_line(const std::string& raw) {
    std::string clean = take_tags(raw, lines.size(), &step);
    add_citations(clean, step.cited_path_ids);
    lines.push_back(std::move(clean));
  }

  ReasoningStep finish() {
    step.text = join(lines, "\n");
    return std::move(step);
  }
};

}  // namespace

const char* to_string(Effectiveness e) { return e == Effectiveness::kEffective ? "EFFECTIVE" : "INEFFECTIVE"; }

std::string render_tag(const AttributionTag& tag) {
  std::string s = std::string("[<") + to_string(tag.source) + ">";
  if (tag.effectiveness) s += std::string(" <") + to_string(*tag.effectiveness) + ">";
  return s + "]";
}

std::vector<std::string> split_answer_list(std::string_view clause) {
  std::string s = trim(clause);
  if (!s.empty() && s.back() == '.') s = trim(s.substr(0, s.size() - 1));
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);

  std::vector<std::string> out;
  auto push_part = [&](const std::string& part) {
    std::size_t start = 0;
    for (;;) {
      std::size_t pos = part.find(" and ", start);
      std::string piece = trim(part.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (!piece.empty()) out.push_back(std::move(piece));
      if (pos == std::string::npos) break;
      start = pos + 5;
    }
  };
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ';') {
      push_part(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  push_part(cur);
  return out;
}

ParseOutcome parse_process(std::string_view text) {
  ParseOutcome result;
  ReasoningProcess proc;
  proc.raw = std::string(text);

  std::optional<StepBuilder> current;
  bool has_conclusion = false;
  std::size_t line_no = 0;

  auto close_step = [&] {
    if (current) proc.steps.push_back(current->finish());
    current.reset();
  };

  for (std::string line : split_lines(text)) {
    ++line_no;
    std::smatch m;
    if (std::regex_match(line, m, kBanner)) {
      line = m[1];
      if (trim(line).empty()) continue;
    }
    if (std::regex_match(line, m, kStepHeader)) {
      close_step();
      std::size_t index = 0;
      try {
        index = std::stoul(m[1]);
      } catch (const std::out_of_range&) {
        index = SIZE_MAX;
      }
      if (!proc.steps.empty() && index <= proc.steps.back().index) {
        result.error = {ProcessParseError::Kind::kStepOrder, line_no,
                        "step " + m[1].str() + " does not follow step " + std::to_string(proc.steps.back().index)};
        return result;
      }
      current.emplace();
      current->step.index = index;
      current->add_line(m[2]);
      continue;
    }
    if (std::regex_match(line, m, kFinalAnswer)) {
      close_step();
      has_conclusion = true;
      std::string clause = take_tags(m[1], 0, nullptr);
      proc.final_cited_ids.clear();
      add_citations(clause, proc.final_cited_ids);
      proc.final_answers = split_answer_list(clause);
      continue;
    }
    if (current && !trim(line).empty()) current->add_line(rtrim(line));
  }
  close_step();

  if (proc.steps.empty() && proc.final_answers.empty()) {
    result.error = {ProcessParseError::Kind::kEmptyProcess, 0, "no steps and no final answer"};
    return result;
  }
  if (!has_conclusion) {
    result.error = {ProcessParseError::Kind::kMissingConclusion, 0, "process has no \"Final Answer:\" clause"};
    return result;
  }
  result.process = std::move(proc);
  return result;
}

std::string render_process(const ReasoningProcess& p) {
  std::string out = "**Reasoning Process**:\n";
  for (const auto& s : p.steps) {
    auto lines = split_keep_empty(s.text);
    for (const auto& tag : s.tags) {
      if (tag.line >= lines.size()) lines.resize(tag.line + 1);
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string line = i == 0 ? "Step " + std::to_string(s.index) + ":" + (lines[0].empty() ? "" : " " + lines[0])
                                : lines[i];
      for (const auto& tag : s.tags) {
        if (tag.line == i) line += " " + render_tag(tag);
      }
      out += line + "\n";
    }
  }
  return out + "Final Answer: " + join(p.final_answers, ", ");
}

std::vector<std::string> extract_final_answers(const ReasoningProcess& p) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& a : p.final_answers) {
    std::string n = normalize_surface(a);
    if (!n.empty() && seen.insert(n).second) out.push_back(std::move(n));
  }
  return out;
}

const char* to_string(TagViolation::Kind k) {
  switch (k) {
    case TagViolation::Kind::kUntaggedStep:
      return "untagged_step";
    case TagViolation::Kind::kUnknownToken:
      return "unknown_token";
    case TagViolation::Kind::kMalformedTag:
      return "malformed_tag";
    case TagViolation::Kind::kIneffectiveUse:
      return "ineffective_use";
  }
  return "unknown";
}

std::vector<TagViolation> validate_tags(const ReasoningProcess& p) {
  std::vector<TagViolation> out;
  std::set<int> ineffective;

  for (const auto& s : p.steps) {
    if (s.tags.empty()) out.push_back({TagViolation::Kind::kUntaggedStep, s.index, "step has no attribution tag"});
    for (const auto& issue : s.issues) {
      auto kind = issue.kind == TagIssue::Kind::kUnknownToken ? TagViolation::Kind::kUnknownToken
                                                              : TagViolation::Kind::kMalformedTag;
      out.push_back({kind, s.index, issue.detail});
    }
    auto lines = split_keep_empty(s.text);
    for (const auto& tag : s.tags) {
      if (tag.effectiveness != Effectiveness::kIneffective || tag.line >= lines.size()) continue;
      std::vector<int> ids;
      add_citations(lines[tag.line], ids);
      ineffective.insert(ids.begin(), ids.end());
    }
  }

  auto flag = [&](std::size_t step_index, int id) {
    out.push_back({TagViolation::Kind::kIneffectiveUse, step_index,
                   "path #" + std::to_string(id) + " is marked <INEFFECTIVE> but used for the answer"});
  };
  if (!p.steps.empty()) {
    const auto& last = p.steps.back();
    auto lines = split_keep_empty(last.text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      bool marks_ineffective = std::any_of(last.tags.begin(), last.tags.end(), [&](const AttributionTag& t) {
        return t.line == i && t.effectiveness == Effectiveness::kIneffective;
      });
      if (marks_ineffective) continue;
      std::vector<int> ids;
      add_citations(lines[i], ids);
      for (int id : ids) {
        if (ineffective.count(id)) flag(last.index, id);
      }
    }
  }
  for (int id : p.final_cited_ids) {
    if (ineffective.count(id)) flag(0, id);
  }
  return out;
}

AttributionStats attribution_stats(const ReasoningProcess& p) {
  AttributionStats st;
  for (const char* src : {"KG", "INFERRED"}) {
    for (const char* eff : {"EFFECTIVE", "INEFFECTIVE", "UNSPECIFIED"}) st.cells[std::string(src) + "/" + eff] = 0;
  }
  for (const auto& s : p.steps) {
    if (s.tags.empty()) {
      ++st.untagged_steps;
      continue;
    }
    const auto& t = s.tags.front();
    ++st.cells[std::string(to_string(t.source)) + "/" + (t.effectiveness ? to_string(*t.effectiveness) : "UNSPECIFIED")];
    ++st.tagged_steps;
  }
  return st;
}

json to_json(const ReasoningProcess& p) {
  json steps = json::array();
  for (const auto& s : p.steps) {
    json tags = json::array();
    for (const auto& t : s.tags) {
      json jt = {{"source", to_string(t.source)}, {"line", t.line}};
      jt["effectiveness"] = t.effectiveness ? json(to_string(*t.effectiveness)) : json(nullptr);
      tags.push_back(jt);
    }
    steps.push_back({{"index", s.index}, {"text", s.text}, {"tags", tags}, {"cited", s.cited_path_ids}});
  }
  return {{"steps", steps}, {"final_answers", p.final_answers}};
}

}  // namespace kgtraces
