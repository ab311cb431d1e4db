#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgtraces/path_engine.h"
#include "kgtraces/qa.h"

namespace kgtraces {

// Where a path shown to the model came from.
enum class PathSource { kKG, kInferred };

const char* to_string(PathSource s);  // "KG" | "INFERRED"
PathSource path_source_from_string(const std::string& s);

struct AnnotatedPath {
  std::string rendering;  // render_path() output
  PathSource source = PathSource::kKG;

  // rendering + " [<KG>]" or " [<INFERRED>]"
  std::string text() const;
};

AnnotatedPath annotate(const ReasoningPath& p, PathSource source);
AnnotatedPath annotate(const RelationPath& p, PathSource source);
std::string annotate_path(const ReasoningPath& p, PathSource source);
std::string annotate_path(const RelationPath& p, PathSource source);

// Removes a trailing " [<KG>]" / " [<INFERRED>]" marker if present.
std::string strip_annotation(std::string_view annotated);

// Numbered list, one path per line: "1. <path> [<KG>]". Empty for no paths.
std::string render_path_block(const std::vector<AnnotatedPath>& paths);

// Replaces {name} placeholders in one left-to-right pass; substituted text is
// never rescanned. Unknown placeholders are left as they are.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

namespace templates {

extern const std::string_view kReasoningProcess;
extern const std::string_view kRelationPath;
extern const std::string_view kTriplePath;
extern const std::string_view kInferenceNoPaths;
extern const std::string_view kInferenceWithPaths;
extern const std::string_view kMedicalEvaluation;

// The worked example output embedded in kReasoningProcess.
extern const std::string_view kProcessExampleOutput;

}  // namespace templates

// Reasoning-process construction prompt. Answers are joined with ", ".
// Throws ArgumentError when the instance has no answers.
std::string render_process_prompt(const QAInstance& q, const std::vector<AnnotatedPath>& paths);
std::string render_relation_prompt(const QAInstance& q);
std::string render_triple_prompt(const QAInstance& q);
// No paths selects the plain answering prompt; any path list (even empty)
// selects the path-informed prompt.
std::string render_inference_prompt(const QAInstance& q, const std::optional<std::vector<AnnotatedPath>>& paths);
std::string render_medical_eval_prompt(const std::string& reference, const std::string& answer);

}  // namespace kgtraces
