#include "doctest.h"
#include "kgtraces/attribution.h"
#include "kgtraces/prompts.h"
#include "oracles.h"

using namespace kgtraces;

namespace {

ReasoningProcess must_parse(std::string_view text) {
  auto out = parse_process(text);
  REQUIRE(out.process.has_value());
  return *out.process;
}

}  // namespace

TEST_CASE("worked example output parses") {
  auto p = must_parse(templates::kProcessExampleOutput);
  REQUIRE(p.steps.size() == 2);
  REQUIRE(!p.steps[0].tags.empty());
  CHECK(p.steps[0].tags[0].source == PathSource::kKG);
  CHECK(p.steps[0].tags[0].effectiveness == Effectiveness::kEffective);
  CHECK(p.steps[0].tags[1].effectiveness == Effectiveness::kIneffective);
  CHECK(p.steps[0].cited_path_ids == std::vector<int>{1, 10, 13});
  CHECK(p.steps[1].cited_path_ids == std::vector<int>{2});
  CHECK(p.final_answers == std::vector<std::string>{"Inception"});
  CHECK(extract_final_answers(p) == std::vector<std::string>{"inception"});
  CHECK(validate_tags(p).empty());
  auto st = attribution_stats(p);
  CHECK(st.cells["KG/EFFECTIVE"] >= 2);
  CHECK(st.tagged_steps == 2);
  CHECK(p.raw == templates::kProcessExampleOutput);
}

TEST_CASE("minimal process") {
  auto p = must_parse("Step 1: x [<INFERRED>]\nFinal Answer: y");
  REQUIRE(p.steps.size() == 1);
  CHECK(p.steps[0].text == "x");
  REQUIRE(p.steps[0].tags.size() == 1);
  CHECK(p.steps[0].tags[0].source == PathSource::kInferred);
  CHECK_FALSE(p.steps[0].tags[0].effectiveness.has_value());
  CHECK(p.final_answers == std::vector<std::string>{"y"});
}

TEST_CASE("formatting noise is tolerated") {
  auto p = must_parse(
      "Reasoning Process:\n\n**Step 1:** look up [ <kg>  <effective> ]\n  detail line  \n"
      "**Step 2**: done [<INFERRED>]\n**Final Answer**: [A; B and C].");
  REQUIRE(p.steps.size() == 2);
  CHECK(p.steps[0].text == "look up\n  detail line");
  CHECK(p.steps[0].tags[0].effectiveness == Effectiveness::kEffective);
  CHECK(p.final_answers == std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("structured parse errors") {
  auto a = parse_process("Step 1: x [<KG>]");
  CHECK_FALSE(a);
  CHECK(a.error->kind == ProcessParseError::Kind::kMissingConclusion);

  auto b = parse_process("nothing here");
  CHECK(b.error->kind == ProcessParseError::Kind::kEmptyProcess);
  CHECK(parse_process("").error->kind == ProcessParseError::Kind::kEmptyProcess);

  auto c = parse_process("Step 2: a\nStep 2: b\nFinal Answer: x");
  CHECK(c.error->kind == ProcessParseError::Kind::kStepOrder);
  CHECK(c.error->line == 2);

  CHECK(parse_process("Final Answer: x").process->steps.empty());
}

TEST_CASE("parser never throws on junk") {
  Rng rng(99);
  const std::string alphabet = "Step 1:[<KG>]#\n Final Answer,; and\xC3\xA9\xE2\x86\x92*.";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    std::size_t n = rng.below(120);
    for (std::size_t j = 0; j < n; ++j) s += alphabet[rng.below(alphabet.size())];
    CHECK_NOTHROW(parse_process(s));
  }
}

TEST_CASE("validate_tags findings") {
  auto unknown = must_parse("Step 1: x [<MAYBE>]\nFinal Answer: y");
  auto v = validate_tags(unknown);
  REQUIRE(v.size() == 2);
  CHECK(v[0].kind == TagViolation::Kind::kUntaggedStep);
  CHECK(v[1].kind == TagViolation::Kind::kUnknownToken);

  auto extra = must_parse("Step 1: x [<KG> <MAYBE>]\nFinal Answer: y");
  REQUIRE(validate_tags(extra).size() == 1);
  CHECK(validate_tags(extra)[0].kind == TagViolation::Kind::kUnknownToken);

  auto conflict = must_parse("Step 1: x [<KG> <INFERRED>]\nFinal Answer: y");
  CHECK(validate_tags(conflict).back().kind == TagViolation::Kind::kMalformedTag);

  auto misuse = must_parse(
      "Step 1: use #1 [<KG> <EFFECTIVE>]\n- skip #3 [<KG> <INEFFECTIVE>]\n"
      "Step 2: combine #1 and #3 [<KG> <EFFECTIVE>]\nFinal Answer: y");
  v = validate_tags(misuse);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == TagViolation::Kind::kIneffectiveUse);
  CHECK(v[0].step_index == 2);

  auto in_answer = must_parse("Step 1: skip #4 [<INFERRED> <INEFFECTIVE>]\nFinal Answer: y (#4)");
  v = validate_tags(in_answer);
  REQUIRE(v.size() == 1);
  CHECK(v[0].step_index == 0);

  auto restated = must_parse("Step 1: skip #4 [<INFERRED> <INEFFECTIVE>]\nFinal Answer: y");
  CHECK(validate_tags(restated).empty());
}

TEST_CASE("answer extraction") {
  auto p = must_parse("Step 1: a [<KG>]\nFinal Answer: A, B, and B");
  CHECK(extract_final_answers(p) == std::vector<std::string>{"a", "b"});
  auto late = must_parse("Step 1: a [<KG>]\nFinal Answer: draft\nFinal Answer: Real One");
  CHECK(late.final_answers == std::vector<std::string>{"Real One"});
}

TEST_CASE("split_answer_list matches character-level reference") {
  Rng rng(7);
  const char* pieces[] = {"a", "B", " ", ",", ";", " and ", "and", ".", "[", "]", "Zürich", "x y", "  "};
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    std::size_t n = rng.below(12);
    for (std::size_t j = 0; j < n; ++j) s += pieces[rng.below(std::size(pieces))];
    auto got = split_answer_list(s);
    CHECK_MESSAGE(got == oracle::split_answers_ref(s), s);
    // no answer is invented
    for (const auto& a : got) CHECK(s.find(a) != std::string::npos);
  }
}

TEST_CASE("render then parse is the identity") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    auto p = oracle::random_process(rng);
    std::string text = render_process(p);
    auto q = must_parse(text);
    REQUIRE_MESSAGE(q.steps == p.steps, text);
    REQUIRE(q.final_answers == p.final_answers);
    // canonical form is a fixpoint
    CHECK(render_process(q) == text);
  }
}

TEST_CASE("attribution stats recount") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto p = oracle::random_process(rng);
    auto st = attribution_stats(p);
    std::size_t total = 0;
    for (const auto& [k, v] : st.cells) total += v;
    std::size_t tagged = 0;
    std::map<std::string, std::size_t> recount;
    for (const auto& s : p.steps) {
      if (s.tags.empty()) continue;
      ++tagged;
      const auto& t = s.tags[0];
      ++recount[std::string(to_string(t.source)) + "/" +
                (t.effectiveness ? to_string(*t.effectiveness) : "UNSPECIFIED")];
    }
    CHECK(total == tagged);
    CHECK(st.tagged_steps == tagged);
    CHECK(st.untagged_steps == p.steps.size() - tagged);
    for (const auto& [k, v] : recount) CHECK(st.cells[k] == v);
  }
  auto untagged = attribution_stats(*parse_process("Step 1: a\nFinal Answer: b").process);
  for (const auto& [k, v] : untagged.cells) CHECK(v == 0);
}

TEST_CASE("process json shape") {
  auto p = must_parse("Step 1: use #2 [<KG> <EFFECTIVE>]\nFinal Answer: y");
  auto j = to_json(p);
  CHECK(j["steps"][0]["index"] == 1);
  CHECK(j["steps"][0]["cited"] == nlohmann::json::array({2}));
  CHECK(j["steps"][0]["tags"][0]["source"] == "KG");
  CHECK(j["final_answers"] == nlohmann::json::array({"y"}));
}
