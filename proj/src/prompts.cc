#include "kgtraces/prompts.h"

#include "kgtraces/error.h"
#include "kgtraces/text.h"

namespace kgtraces {

namespace templates {

const std::string_view kReasoningProcess = R"(### Question:
{question}

### Answer:
{answer}

### Potential useful reasoning path:
The following reasoning paths are provided to help you understand relationships among entities and derive an answer:
{reasoning_paths}

### Task Instructions:
1. Goal:
- Use the given reasoning paths and answer to generate a detailed reasoning process for the original question, explicitly indicating the source of knowledge (e.g., from KG or inferred by LLMs).
- Enhance the reasoning process by including special tokens to label each path's source and effectiveness:
  - <KG>: Knowledge directly from the knowledge graph.
  - <INFERRED>: Knowledge inferred by LLMs without explicit KG support.
  - <EFFECTIVE> / <INEFFECTIVE>: Whether the path effectively contributes to the final answer.

2. Specific Requirements:
- Path Selection and Labeling:
  - Filter out unnecessary paths: Only select paths directly relevant to the question.
  - Ignore paths marked as <INEFFECTIVE> when getting the final answer.
  - Label each selected path using the special tokens.
- Dynamic Knowledge Utilization:
  - If no KG path applies, allow LLMs to infer logical connections using <INFERRED>, clearly marked.

3. Output Format:
**Reasoning Process**: [Output reasoning process here]

### Example:

[Input]
**Question**: Which film directed by Christopher Nolan starred Leonardo DiCaprio and was released in 2010?
**Answer**: Inception
**Retrieved Triples**:
1. Leonardo DiCaprio → film.actor.film → m.12345
2. m.12345 → film.director → Christopher Nolan
...
19. m.00000 → film.release_date → 2017

[Output]
**Reasoning Process**:
Step 1: Identify film starring Leonardo DiCaprio.
- Relevant Triple: #1 [<KG> <EFFECTIVE>]
- Note: Triples #10/#13 [<KG> <INEFFECTIVE>]
Step 2: Directed by Christopher Nolan: #2 [<KG> <EFFECTIVE>]
...
Final Answer: Inception)";

const std::string_view kProcessExampleOutput = R"(**Reasoning Process**:
Step 1: Identify film starring Leonardo DiCaprio.
- Relevant Triple: #1 [<KG> <EFFECTIVE>]
- Note: Triples #10/#13 [<KG> <INEFFECTIVE>]
Step 2: Directed by Christopher Nolan: #2 [<KG> <EFFECTIVE>]
...
Final Answer: Inception)";

const std::string_view kRelationPath =
    R"(Please generate a valid reasoning relation path that can be helpful for answering the following question.
**Question**: {question})";

const std::string_view kTriplePath =
    R"(Please generate a valid reasoning triple path that can be helpful for answering the following question.
**Question**: {question})";

const std::string_view kInferenceNoPaths =
    R"(Please answer the following questions. Please keep the answer as simple as possible and return all the possible answers as a list.
**Question**: {question})";

const std::string_view kInferenceWithPaths =
    R"(Based on the reasoning paths, please answer the given question. The paths with [<KG>] are from the real world **Knowledge Graph** (more reliable) and the paths with [<INFERRED>] are your predictions. You should recognize useful reasoning paths from **Potential Useful Reasoning Paths**. Please generate both the reasoning process and answer. Please keep the answer as simple as possible and return all the possible answers as a list.

**Potential Useful Reasoning Paths**:
{reasoning_paths}
**Question**: {question})";

const std::string_view kMedicalEvaluation = R"(Reference Information: {reference}

Answer to Score: {answer}

Task:
Evaluate the given answer based on the provided reference information using the following criteria. Assign a score between 0 and 1 (inclusive) for each criterion, in increments of 0.1. A score of 1 means the answer fully meets the criterion, while a score of 0 means the answer fails to meet the criterion at all.

### Evaluation Criteria:

1. **Relevance** (Score: 0-1):
   This criterion assesses how well the answer aligns with the reference information, addressing the symptoms, diagnosis, and treatments mentioned. The answer should directly respond to the medical context and conditions outlined in the reference. Answers that focus on the core issues presented, without deviating into irrelevant areas, should score higher.

2. **Accuracy** (Score: 0-1):
   The accuracy score reflects how correctly the answer represents the facts outlined in the reference. This includes correct medical terminology, diagnosis, and treatment recommendations. An answer should avoid introducing false or unsupported information while accurately reflecting the key aspects of the reference, including the medical procedures and conditions described.

3. **Completeness** (Score: 0-1):
   Completeness is assessed based on how thoroughly the answer covers the key points mentioned in the reference, including diagnostic procedures, symptoms, and treatment options. A complete answer should address all aspects of the medical condition mentioned in the reference, offering a full response to the query with relevant details. Missing important diagnostic tests or treatment steps will reduce the score.

4. **Clarity** (Score: 0-1):
   This criterion evaluates the clarity and readability of the answer. A high score is awarded to responses that are well-structured, logically coherent, and easily understood. An answer that communicates its reasoning in a clear and concise manner without ambiguity or unnecessary complexity will score higher.

5. **Conciseness** (Score: 0-1):
   This criterion evaluates how succinctly the answer conveys necessary information. Answers should avoid redundancy and irrelevant details but should not be penalized for adding depth and reasoning to the response. A longer, well-reasoned response that covers all necessary aspects of the reference will be rewarded, provided it does not become excessively verbose.

### Response Format:
Provide the evaluation results in the following format:

**Score Breakdown:**

- **Relevance**: X.X (Explanation: [Provide brief reasoning for the score based on how well the answer aligns with the reference information and medical context])

- **Accuracy**: X.X (Explanation: [Provide brief reasoning for the score based on the accuracy and consistency of the answer with the reference])

- **Completeness**: X.X (Explanation: [Provide brief reasoning for the score based on the coverage of key points in the reference information])

- **Clarity**: X.X (Explanation: [Provide brief reasoning for the score based on how clearly the answer is expressed])

- **Conciseness**: X.X (Explanation: [Provide brief reasoning for the score based on how focused and concise the answer is]))";

}  // namespace templates

const char* to_string(PathSource s) { return s == PathSource::kKG ? "KG" : "INFERRED"; }

PathSource path_source_from_string(const std::string& s) {
  if (s == "KG") return PathSource::kKG;
  if (s == "INFERRED") return PathSource::kInferred;
  throw ArgumentError("unknown path source '" + s + "'");
}

std::string AnnotatedPath::text() const { return rendering + " [<" + to_string(source) + ">]"; }

AnnotatedPath annotate(const ReasoningPath& p, PathSource source) { return {render_path(p), source}; }
AnnotatedPath annotate(const RelationPath& p, PathSource source) { return {render_path(p), source}; }
std::string annotate_path(const ReasoningPath& p, PathSource source) { return annotate(p, source).text(); }
std::string annotate_path(const RelationPath& p, PathSource source) { return annotate(p, source).text(); }

std::string strip_annotation(std::string_view annotated) {
  for (std::string_view marker : {std::string_view(" [<KG>]"), std::string_view(" [<INFERRED>]")}) {
    if (annotated.size() >= marker.size() && annotated.substr(annotated.size() - marker.size()) == marker)
      return std::string(annotated.substr(0, annotated.size() - marker.size()));
  }
  return std::string(annotated);
}

std::string render_path_block(const std::vector<AnnotatedPath>& paths) {
  std::vector<std::string> lines;
  lines.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) lines.push_back(std::to_string(i + 1) + ". " + paths[i].text());
  return join(lines, "\n");
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string render_process_prompt(const QAInstance& q, const std::vector<AnnotatedPath>& paths) {
  if (q.answers.empty()) throw ArgumentError("render_process_prompt: instance '" + q.id + "' has no answers");
  return fill_template(templates::kReasoningProcess, {{"question", q.question},
                                                      {"answer", join(q.answers, ", ")},
                                                      {"reasoning_paths", render_path_block(paths)}});
}

std::string render_relation_prompt(const QAInstance& q) {
  return fill_template(templates::kRelationPath, {{"question", q.question}});
}

std::string render_triple_prompt(const QAInstance& q) {
  return fill_template(templates::kTriplePath, {{"question", q.question}});
}

std::string render_inference_prompt(const QAInstance& q, const std::optional<std::vector<AnnotatedPath>>& paths) {
  if (!paths) return fill_template(templates::kInferenceNoPaths, {{"question", q.question}});
  return fill_template(templates::kInferenceWithPaths,
                       {{"question", q.question}, {"reasoning_paths", render_path_block(*paths)}});
}

std::string render_medical_eval_prompt(const std::string& reference, const std::string& answer) {
  return fill_template(templates::kMedicalEvaluation, {{"reference", reference}, {"answer", answer}});
}

}  // namespace kgtraces
