// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include <filesystem>
#include <map>

#include "cli.h"
#include "fixtures.h"
#include "kgtraces/attribution.h"
#include "kgtraces/eval.h"
#include "kgtraces/path_engine.h"
#include "kgtraces/prompts.h"
#include "kgtraces/trajectory.h"
#include "oracles.h"

using namespace kgtraces;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome toy_reproduction() {
  Outcome o;
  std::istringstream in(oracle::kToyKg);
  KGStore store = load_kg(in);
  const std::set<EntityId> src{"American League West"}, dst{"Mariner Moose"};
  // warm-up, then time the query itself
  enumerate_relation_paths(store, src, dst, 2);
  auto t0 = Clock::now();
  auto rels = enumerate_relation_paths(store, src, dst, 2);
  auto paths = execute_relation_path(store, src, RelationPath{{"teams", "mascot"}});
  double ms = ms_since(t0);
  o.expect(rels.size() == 1 && rels[0].relations == std::vector<RelationId>{"teams", "mascot"},
           "relation paths differ from {(teams, mascot)}");
  std::vector<Triple> want{{"American League West", "teams", "Seattle Mariners"},
                           {"Seattle Mariners", "mascot", "Mariner Moose"}};
  o.expect(paths.size() == 1 && paths[0].triples == want, "instantiated chain differs");
  o.expect(ms < 1.0, "took " + fmt("%.3f", ms) + " ms");
  o.detail = o.pass ? fmt("%.4f ms", ms) : o.detail;
  return o;
}

Outcome path_oracle() {
  Outcome o;
  Rng rng(20240601);
  auto t0 = Clock::now();
  int graphs = 0;
  for (; graphs < 200; ++graphs) {
    const std::size_t n_triples = 1 + rng.below(50);
    const std::size_t n_ents = 2 + rng.below(15);
    const std::size_t n_rels = 1 + rng.below(10);
    auto triples = oracle::random_triples(rng, n_triples, n_ents, n_rels);
    KGStore store(triples);
    std::set<std::string> src, dst;
    for (std::size_t k = 1 + rng.below(2); k > 0; --k) src.insert("e" + std::to_string(rng.below(n_ents)));
    for (std::size_t k = 1 + rng.below(3); k > 0; --k) dst.insert("e" + std::to_string(rng.below(n_ents)));
    const int hops = 1 + static_cast<int>(rng.below(4));

    auto want = oracle::shortest_chains(triples, src, dst, hops);
    std::set<std::vector<Triple>> got;
    for (const auto& p : enumerate_triple_paths(store, src, dst, hops)) got.insert(p.triples);
    o.expect(got == want, "triple paths differ on graph " + std::to_string(graphs));
    std::set<std::vector<std::string>> got_rel;
    for (const auto& r : enumerate_relation_paths(store, src, dst, hops)) got_rel.insert(r.relations);
    o.expect(got_rel == oracle::relation_sequences(want), "relation paths differ on graph " + std::to_string(graphs));
  }
  double s = ms_since(t0) / 1000.0;
  o.expect(s < 30.0, "took " + fmt("%.2f", s) + " s");
  if (o.pass) o.detail = std::to_string(graphs) + " graphs, " + fmt("%.3f s", s);
  return o;
}

bool accepts(const std::vector<Triple>& w) {
  try {
    link_triples(w);
    return true;
  } catch (const LinkError&) {
    return false;
  } catch (const CycleError&) {
    return false;
  } catch (const ArgumentError&) {
    return false;
  }
}

Outcome linking_soundness() {
  Outcome o;
  Rng rng(77);
  std::size_t checked = 0, corruptions = 0;
  for (int w = 0; w < 1000; ++w) {
    auto triples = oracle::random_triples(rng, 10 + rng.below(40), 4 + rng.below(12), 1 + rng.below(6));
    KGStore store(triples);
    // random walk; cycles are allowed so both outcomes occur
    const Triple* cur = &store.triples()[rng.below(store.size())];
    std::vector<Triple> walk{*cur};
    const std::size_t len = 1 + rng.below(5);
    while (walk.size() < len) {
      const auto& out = store.out_edges(walk.back().tail);
      if (out.empty()) break;
      walk.push_back(store.triples()[out[rng.below(out.size())]]);
    }
    o.expect(accepts(walk) == oracle::chain_rule(walk), "walk verdict disagrees with rule on walk " + std::to_string(w));
    ++checked;
    if (!oracle::chain_rule(walk)) continue;

    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i > 0) {
        auto broken = walk;
        broken[i].head = "x-" + broken[i].head;  // no longer the previous tail
        o.expect(!oracle::chain_rule(broken) && !accepts(broken), "broken chain accepted");
        ++corruptions;
      }
      auto cyc = walk;
      cyc[i].tail = walk[rng.below(i + 1)].head;  // revisit an earlier entity
      if (i + 1 < cyc.size()) cyc[i + 1].head = cyc[i].tail;
      o.expect(!oracle::chain_rule(cyc) && !accepts(cyc), "cycle accepted");
      ++corruptions;
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " walks, " + std::to_string(corruptions) + " corruptions rejected";
  return o;
}

Outcome metric_identities() {
  Outcome o;
  auto eq = precision_recall_f1({"a", "b"}, {"a", "b"});
  o.expect(eq.f1 == 1.0, "f1(pred=gold) != 1");
  o.expect(precision_recall_f1({}, {"a"}).f1 == 0.0, "f1(empty) != 0");
  auto half = precision_recall_f1({"a", "b"}, {"b", "c"});
  o.expect(half.precision == 0.5 && half.recall == 0.5 && half.f1 == 0.5, "{a,b} vs {b,c} != (0.5,0.5,0.5)");

  Rng rng(31337);
  double worst_self = 0.0, min_kl = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::size_t n = 1 + rng.below(8);
    PathDistribution<RelationPath> q, p;
    double zq = 0, zp = 0;
    std::vector<double> wq(n), wp(n);
    for (std::size_t k = 0; k < n; ++k) {
      zq += wq[k] = rng.below(4) == 0 ? 0.0 : rng.uniform();
      zp += wp[k] = rng.uniform() + 1e-6;
    }
    if (zq == 0) {
      wq[0] = 1;
      zq = 1;
    }
    for (std::size_t k = 0; k < n; ++k) {
      RelationPath r{{"r" + std::to_string(k)}};
      q.support.push_back({r, wq[k] / zq});
      p.support.push_back({r, wp[k] / zp});
    }
    worst_self = std::max(worst_self, std::abs(kl_divergence(q, q)));
    min_kl = std::min(min_kl, kl_divergence(q, p));
  }
  o.expect(worst_self <= 1e-12, "KL(Q,Q) = " + fmt("%.3g", worst_self));
  o.expect(min_kl >= 0.0, "negative KL " + fmt("%.3g", min_kl));

  AnswerState uni{{"a", "b", "c", "d"}, {0.25, 0.25, 0.25, 0.25}};
  o.expect(std::abs(uncertainty(uni) - std::log(4.0)) <= 1e-9, "uniform-4 entropy != ln 4");
  GenerationTrace t{"ab", {{"a", std::log(0.25)}, {"b", std::log(0.25)}}, std::nullopt, {}};
  auto slice = segment_stages(t, 1)[0];
  o.expect(std::abs(stage_perplexity(t, slice) - 4.0) <= 1e-9, "perplexity != 4");
  if (o.pass) o.detail = "10000 KL pairs, max |KL(Q,Q)| " + fmt("%.1e", worst_self);
  return o;
}

Outcome prompt_fidelity() {
  Outcome o;
  auto q = fixtures::golden_instance();
  auto paths = fixtures::golden_paths();
  struct Case {
    const char* file;
    std::string got;
  };
  std::string with = render_inference_prompt(q, paths);
  std::string plain = render_inference_prompt(q, std::nullopt);
  std::vector<Case> cases = {
      {"process_prompt.txt", render_process_prompt(q, paths)},
      {"relation_prompt.txt", render_relation_prompt(q)},
      {"triple_prompt.txt", render_triple_prompt(q)},
      {"inference_no_paths.txt", plain},
      {"inference_with_paths.txt", with},
      {"medical_eval_prompt.txt", render_medical_eval_prompt(fixtures::kMedicalReference, fixtures::kMedicalAnswer)},
  };
  for (const auto& c : cases) o.expect(c.got == fixtures::golden(c.file), std::string(c.file) + " differs");
  o.expect(with.find("paths with [<KG>] are from the real world") != std::string::npos, "marker sentence missing");
  o.expect(plain.find("return all the possible answers as a list") != std::string::npos, "list sentence missing");
  if (o.pass) o.detail = std::to_string(cases.size()) + " goldens byte-exact";
  return o;
}

Outcome parser_round_trip() {
  Outcome o;
  Rng rng(4242);
  for (int i = 0; i < 1000; ++i) {
    auto p = oracle::random_process(rng);
    auto back = parse_process(render_process(p));
    o.expect(back.process && back.process->steps == p.steps && back.process->final_answers == p.final_answers,
             "round trip " + std::to_string(i) + " differs");
  }
  auto ex = parse_process(templates::kProcessExampleOutput);
  o.expect(ex.process.has_value(), "example does not parse");
  if (ex.process) {
    o.expect(extract_final_answers(*ex.process) == std::vector<std::string>{"inception"}, "final answers differ");
    const auto& tags = ex.process->steps.at(0).tags;
    o.expect(!tags.empty() && tags[0].source == PathSource::kKG && tags[0].effectiveness == Effectiveness::kEffective,
             "step 1 tags differ");
  }
  if (o.pass) o.detail = "1000 round trips; example answers [\"inception\"]";
  return o;
}

Outcome medical_parsing() {
  Outcome o;
  const std::string text =
      "**Score Breakdown:**\n"
      "- **Relevance**: 0.83\n- **Accuracy**: 0.77\n- **Completeness**: 0.68\n"
      "- **Clarity**: 0.92\n- **Conciseness**: 0.79\n";
  auto s = parse_score_breakdown(text);
  o.expect(std::abs(s.average - 0.798) <= 0.005, "average " + fmt("%.4f", s.average));
  if (o.pass) o.detail = "average " + fmt("%.4f", s.average);
  return o;
}

int invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

std::vector<json> jsonl(const std::string& path) {
  std::vector<json> out;
  for (const auto& l : split_lines(read_file(path)))
    if (!trim(l).empty()) out.push_back(json::parse(l));
  return out;
}

Outcome trajectory_aggregation() {
  Outcome o;
  fixtures::TempDir dir("acc8");
  static const char* kTeams[] = {"Seattle Mariners", "Houston Astros", "Texas Rangers", "Oakland Athletics",
                                 "Los Angeles Angels"};
  std::string qa;
  for (int i = 0; i < 500; ++i) {
    const char* team = kTeams[i % 5];
    json q = {{"id", "t" + std::to_string(i)},
              {"question", "Question " + std::to_string(i) + ": what is the mascot of the " + team + "?"},
              {"question_entities", {team}},
              {"answers", {"Answer " + std::to_string(i % 17)}}};
    qa += q.dump() + "\n";
  }
  write_file_atomic(dir / "qa.jsonl", qa);
  const int stages = kDefaultStages;
  if (invoke({"trajectory", "--qa", dir / "qa.jsonl", "--runs", "10", "--seed", "8", "--out", dir / "o"}) != 0) {
    o.expect(false, "trajectory command failed");
    return o;
  }
  auto traces = jsonl(dir / "o/traces.jsonl");
  auto rows = jsonl(dir / "o/stage_metrics.jsonl");
  o.expect(traces.size() == 5000, "expected 5000 traces, got " + std::to_string(traces.size()));
  o.expect(rows.size() == traces.size(), "stage rows do not match traces");

  // partition: sizes floor(L/n) or ceil(L/n), the longer stages first, covering every token once
  std::size_t partitions = 0;
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> sizes;
  for (const auto& j : traces) {
    std::istringstream line(j.dump());
    auto rec = load_traces(line).at(0);
    const std::size_t len = rec.trace.tokens.size();
    auto slices = segment_stages(rec.trace, stages);
    bool ok = slices.size() == static_cast<std::size_t>(stages);
    std::size_t at = 0;
    std::string joined;
    for (std::size_t k = 0; ok && k < slices.size(); ++k) {
      const std::size_t want = len / stages + (k < len % stages ? 1 : 0);
      ok = slices[k].begin == at && slices[k].size() == want;
      at = slices[k].end;
      joined += slices[k].text;
      sizes[{rec.id, rec.run}].push_back(slices[k].size());
    }
    ok = ok && at == len && joined == rec.trace.text;
    o.expect(ok, "partition rule broken for " + rec.id);
    partitions += ok;
  }

  // recompute every aggregate from the raw per-trace values
  std::vector<std::vector<double>> raw[3];
  for (auto& r : raw) r.resize(stages);
  const char* names[3] = {"consistency", "uncertainty", "perplexity"};
  for (const auto& r : rows) {
    const auto& sz = sizes[{r["id"].get<std::string>(), r["run"].get<int>()}];
    for (int k = 0; k < stages; ++k) {
      for (int m = 0; m < 3; ++m) {
        const auto& v = r["stages"][k][names[m]];
        // empty stages carry no perplexity
        if (m == 2) o.expect(v.is_null() == (sz.at(k) == 0), "missing value mismatch");
        if (!v.is_null()) raw[m][k].push_back(v.get<double>());
      }
    }
  }
  auto rep = parse_stage_csv(read_file(dir / "o/stages.csv"));
  o.expect(rep.stages.size() == static_cast<std::size_t>(stages), "stages.csv has wrong stage count");
  double worst = 0.0;
  for (int k = 0; k < stages && k < static_cast<int>(rep.stages.size()); ++k) {
    const MetricSummary* got[3] = {&rep.stages[k].consistency, &rep.stages[k].uncertainty,
                                   &rep.stages[k].perplexity};
    for (int m = 0; m < 3; ++m) {
      const auto& v = raw[m][k];
      o.expect(got[m]->n == v.size(), std::string(names[m]) + " count differs");
      worst = std::max({worst, std::abs(got[m]->mean - oracle::mean(v)), std::abs(got[m]->std - oracle::pop_std(v)),
                        std::abs(got[m]->median - oracle::median(v))});
    }
  }
  o.expect(worst <= 1e-9, "aggregate off by " + fmt("%.3g", worst));
  if (o.pass) o.detail = std::to_string(partitions) + " traces partitioned, max aggregate error " + fmt("%.1e", worst);
  return o;
}

Outcome cli_reproducibility() {
  Outcome o;
  fixtures::TempDir dir("acc9");
  const std::string kg = fixtures::data_path("data/toy_kg.tsv");
  const std::string qa = fixtures::data_path("data/toy_qa.jsonl");
  std::size_t files = 0;
  for (const char* run : {"a", "b"}) {
    const std::string base = dir / run;
    // a different thread count on the second run must not change the bytes
    const std::string jobs = run[0] == 'a' ? "1" : "4";
    bool ok = invoke({"build-dataset", "--kg", kg, "--qa", qa, "--seed", "11", "--jobs", jobs, "--out", base + "/ds"}) == 0;
    for (const char* v : {"no-kg", "no-kg-triple", "kg-rel", "kg-rel-triple", "kg-entity"}) {
      ok = ok && invoke({"infer", "--variant", v, "--kg", kg, "--qa", qa, "--seed", "11", "--jobs", jobs, "--out",
                         base + "/infer-" + v}) == 0;
      ok = ok && invoke({"eval", "--out", base + "/infer-" + v}) == 0;
    }
    ok = ok && invoke({"sweep-beam", "--kg", kg, "--qa", qa, "--seed", "11", "--jobs", jobs, "--out", base + "/sweep"}) == 0;
    o.expect(ok, std::string("a command failed in run ") + run);
  }
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path / "a")) {
    if (!e.is_regular_file()) continue;
    auto rel = std::filesystem::relative(e.path(), dir.path / "a");
    auto other = dir.path / "b" / rel;
    o.expect(std::filesystem::exists(other) && read_file(e.path().string()) == read_file(other.string()),
             rel.string() + " differs between runs");
    ++files;
  }
  o.expect(files > 0, "no outputs written");
  if (o.pass) o.detail = std::to_string(files) + " files byte-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"toy KG reproduction", toy_reproduction},
      {"path enumeration matches DFS oracle", path_oracle},
      {"triple linking soundness", linking_soundness},
      {"metric identities", metric_identities},
      {"prompt fidelity", prompt_fidelity},
      {"attribution parser round trip", parser_round_trip},
      {"medical score parsing", medical_parsing},
      {"trajectory aggregation", trajectory_aggregation},
      {"CLI reproducibility", cli_reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ("
              << o.detail << ")" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
