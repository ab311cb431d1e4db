#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kgtraces/prompts.h"

namespace kgtraces {

enum class Effectiveness { kEffective, kIneffective };

const char* to_string(Effectiveness e);

// One bracketed group such as "[<KG> <EFFECTIVE>]". `line` is the line of
// the owning step's text the group was attached to.
struct AttributionTag {
  PathSource source = PathSource::kKG;
  std::optional<Effectiveness> effectiveness;
  std::size_t line = 0;

  bool operator==(const AttributionTag&) const = default;
};

// "[<KG> <EFFECTIVE>]"
std::string render_tag(const AttributionTag& tag);

// A bracketed group that could not become a tag, or carried extra tokens.
struct TagIssue {
  enum class Kind { kUnknownToken, kMissingSource, kConflictingSource };
  Kind kind;
  std::size_t line = 0;
  std::string detail;
};

struct ReasoningStep {
  std::size_t index = 0;
  // Step body with tag groups removed; continuation lines joined by '\n'.
  std::string text;
  std::vector<AttributionTag> tags;
  // "#<n>" references in order of first appearance.
  std::vector<int> cited_path_ids;
  std::vector<TagIssue> issues;

  // Compares index, text, tags and citations.
  bool operator==(const ReasoningStep& o) const {
    return index == o.index && text == o.text && tags == o.tags && cited_path_ids == o.cited_path_ids;
  }
};

struct ReasoningProcess {
  std::vector<ReasoningStep> steps;
  // As written in the "Final Answer:" clause, trimmed, not normalized.
  std::vector<std::string> final_answers;
  std::vector<int> final_cited_ids;
  std::string raw;
};

struct ProcessParseError {
  enum class Kind { kMissingConclusion, kEmptyProcess, kStepOrder };
  Kind kind;
  std::size_t line = 0;
  std::string message;
};

// Either a process or the reason there is none. Never throws.
struct ParseOutcome {
  std::optional<ReasoningProcess> process;
  std::optional<ProcessParseError> error;

  explicit operator bool() const { return process.has_value(); }
};

// Line-oriented parse. Recognizes an optional "**Reasoning Process**:"
// banner, "Step k:" headers (markdown bold tolerated), continuation lines,
// bracketed tag groups anywhere in a step, "#n" path citations and the last
// "Final Answer:" clause.
ParseOutcome parse_process(std::string_view text);

// Canonical text form; parse_process(render_process(p)) reproduces p.steps
// and p.final_answers.
std::string render_process(const ReasoningProcess& p);

// Splits an answer clause on ",", ";" and " and ", trimming and dropping
// empty items. A fully bracketed list and one trailing '.' are unwrapped.
std::vector<std::string> split_answer_list(std::string_view clause);

// Final answers, normalized for matching, de-duplicated, order kept.
std::vector<std::string> extract_final_answers(const ReasoningProcess& p);

struct TagViolation {
  enum class Kind { kUntaggedStep, kUnknownToken, kMalformedTag, kIneffectiveUse };
  Kind kind;
  std::size_t step_index = 0;  // 0 for the final-answer clause
  std::string detail;
};

const char* to_string(TagViolation::Kind k);

std::vector<TagViolation> validate_tags(const ReasoningProcess& p);

struct AttributionStats {
  // "KG/EFFECTIVE", "KG/INEFFECTIVE", "KG/UNSPECIFIED" and the same for INFERRED.
  std::map<std::string, std::size_t> cells;
  std::size_t tagged_steps = 0;
  std::size_t untagged_steps = 0;
};

// Each tagged step counts once, in the cell of its first tag.
AttributionStats attribution_stats(const ReasoningProcess& p);

// {steps:[{index,text,tags,cited}], final_answers:[..]}
nlohmann::json to_json(const ReasoningProcess& p);

}  // namespace kgtraces
