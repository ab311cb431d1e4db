#include "cli.h"

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "kgtraces/attribution.h"
#include "kgtraces/error.h"
#include "kgtraces/eval.h"
#include "kgtraces/gateway.h"
#include "kgtraces/kg_store.h"
#include "kgtraces/parallel.h"
#include "kgtraces/path_engine.h"
#include "kgtraces/prompts.h"
#include "kgtraces/qa.h"
#include "kgtraces/rng.h"
#include "kgtraces/supervision.h"
#include "kgtraces/text.h"
#include "kgtraces/trajectory.h"

namespace kgtraces::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Carries an explicit exit status out of a command.
class Exit : public std::runtime_error {
 public:
  Exit(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
  int code;
};

const std::set<std::string> kVariants = {"no-kg", "no-kg-triple", "kg-rel", "kg-rel-triple", "kg-entity"};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) throw Exit(kConfigError, flag + " is required");
  if (!fs::is_regular_file(path)) throw Exit(kConfigError, flag + ": no such file '" + path + "'");
}

fs::path out_dir(const RunConfig& c) {
  if (c.out_dir.empty()) throw Exit(kConfigError, "--out is required");
  fs::create_directories(c.out_dir);
  return c.out_dir;
}

int max_hops(const RunConfig& c) { return c.max_hops.value_or(kDefaultMaxHopsWebQsp); }

KGStore open_kg(const RunConfig& c) {
  require_file(c.kg_path, "--kg");
  return load_kg_file(c.kg_path);
}

std::vector<QAInstance> open_qa(const RunConfig& c) {
  require_file(c.qa_path, "--qa");
  return load_qa_file(c.qa_path);
}

std::shared_ptr<Gateway> open_gateway(const RunConfig& c, const KGStore* store) {
  json j = c.gateway.is_object() ? c.gateway : json::object();
  if (!c.gateway_path.empty()) {
    require_file(c.gateway_path, "--gateway");
    try {
      j = json::parse(read_file(c.gateway_path));
    } catch (const json::parse_error& e) {
      throw Exit(kConfigError, "gateway config: " + std::string(e.what()));
    }
  }
  GatewayConfig gc = gateway_config_from_json(j);
  if (gc.backend == "mock" && store) {
    if (gc.mock.relation_vocab.empty()) {
      auto rels = store->relations();
      gc.mock.relation_vocab.assign(rels.begin(), rels.end());
    }
    if (gc.mock.triple_vocab.empty()) gc.mock.triple_vocab = store->triples();
  }
  return make_gateway(gc);
}

std::vector<json> read_jsonl(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(path + ": " + e.what(), n);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_index(const RunConfig& c, std::ostream& out) {
  std::string text = to_json(open_kg(c).stats()).dump();
  out << text << "\n";
  if (!c.out_dir.empty()) write_file_atomic(out_dir(c) / "index.json", text + "\n");
  return kOk;
}

int cmd_build_dataset(const RunConfig& c, std::ostream& out, std::ostream& err) {
  KGStore store = open_kg(c);
  auto qs = open_qa(c);
  fs::path dir = out_dir(c);
  auto gateway = open_gateway(c, &store);

  BuildConfig bc;
  bc.max_hops = max_hops(c);
  bc.samples_per_instance = c.samples_per_instance;
  bc.max_prompt_paths = c.max_prompt_paths;
  bc.jobs = c.jobs;
  bc.seed = c.seed;
  Dataset d = build_dataset(qs, store, *gateway, bc);

  write_file_atomic(dir / "relation_paths.jsonl", to_jsonl(d.relation_paths));
  write_file_atomic(dir / "triple_paths.jsonl", to_jsonl(d.triple_paths));
  write_file_atomic(dir / "reasoning_processes.jsonl", to_jsonl(d.reasoning_processes));
  write_file_atomic(dir / "failures.jsonl", to_jsonl(d.failures));
  out << "relation_path=" << d.relation_paths.size() << " triple_path=" << d.triple_paths.size()
      << " reasoning_process=" << d.reasoning_processes.size() << " failures=" << d.failures.size() << "\n";

  if (!qs.empty() && c.samples_per_instance > 0 && d.reasoning_processes.empty() && !d.failures.empty()) {
    err << "error: no reasoning process could be generated; first failure: " << d.failures.front().error << "\n";
    return kGatewayError;
  }
  return kOk;
}

struct Retrieved {
  std::vector<AnnotatedPath> paths;
  std::vector<std::string> relation_predictions;
  std::vector<std::string> triple_predictions;
};

void add_unique(std::vector<AnnotatedPath>& paths, std::set<std::string>& seen, const ReasoningPath& p,
                PathSource src) {
  AnnotatedPath a = annotate(p, src);
  if (seen.insert(a.rendering).second) paths.push_back(std::move(a));
}

json infer_one(const QAInstance& q, const RunConfig& c, const KGStore* store, Gateway& g) {
  const std::string& v = c.variant;
  const std::uint64_t qseed = mix_seed(c.seed, fnv1a64(q.id));
  auto params_for = [&](std::uint64_t salt) {
    GenParams p;
    p.seed = mix_seed(qseed, salt);
    return p;
  };

  Retrieved r;
  std::set<std::string> seen;
  std::set<EntityId> sources;
  if (store) sources = link_entities(*store, q.question_entities);

  if (v == "kg-rel" || v == "kg-rel-triple") {
    for (const auto& t : g.generate_topk(render_relation_prompt(q), static_cast<std::size_t>(c.beam_k), params_for(1))) {
      r.relation_predictions.push_back(t.text);
      RelationPath rp;
      try {
        rp = parse_relation_path(trim(t.text));
      } catch (const Error&) {
        continue;
      }
      for (const auto& p : execute_relation_path(*store, sources, rp)) add_unique(r.paths, seen, p, PathSource::kKG);
    }
  }
  if (v == "kg-entity") {
    auto all = expand_from_entities(*store, sources, max_hops(c));
    for (const auto& p : sample_paths(all, static_cast<std::size_t>(c.sample_n), mix_seed(qseed, 3)))
      add_unique(r.paths, seen, p, PathSource::kKG);
  }
  if (v == "no-kg-triple" || v == "kg-rel-triple") {
    for (const auto& t : g.generate_topk(render_triple_prompt(q), static_cast<std::size_t>(c.beam_k), params_for(2))) {
      r.triple_predictions.push_back(t.text);
      ReasoningPath rp;
      try {
        rp = link_triples(parse_reasoning_path(trim(t.text)).triples);
      } catch (const Error&) {
        continue;
      }
      add_unique(r.paths, seen, rp, PathSource::kInferred);
    }
  }

  std::optional<std::vector<AnnotatedPath>> shown;
  if (v != "no-kg") shown = r.paths;
  const std::string prompt = render_inference_prompt(q, shown);
  GenerationTrace reply = g.generate(prompt, params_for(4));

  json paths = json::array();
  for (const auto& p : r.paths) paths.push_back({{"path", p.rendering}, {"source", to_string(p.source)}});
  json rec = {{"id", q.id},
              {"variant", v},
              {"beam_k", c.beam_k},
              {"prompt", prompt},
              {"output", reply.text},
              {"predicted", answers_from_output(reply.text)},
              {"gold", q.answers},
              {"paths", paths}};
  if (!r.relation_predictions.empty()) rec["relation_predictions"] = r.relation_predictions;
  if (!r.triple_predictions.empty()) rec["triple_predictions"] = r.triple_predictions;
  return rec;
}

// Writes <dir>/predictions.jsonl and returns the mean number of paths shown.
double run_infer(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  if (!kVariants.count(c.variant)) throw Exit(kConfigError, "unknown variant '" + c.variant + "'");
  const bool needs_kg = c.variant.rfind("kg-", 0) == 0;
  std::optional<KGStore> store;
  if (needs_kg) {
    if (c.kg_path.empty()) throw Exit(kConfigError, "variant " + c.variant + " needs --kg");
    store = open_kg(c);
  } else if (!c.kg_path.empty()) {
    store = open_kg(c);
  }
  auto qs = open_qa(c);
  auto gateway = open_gateway(c, store ? &*store : nullptr);

  std::vector<json> recs(qs.size());
  parallel_for(qs.size(), c.jobs, [&](std::size_t i) {
    recs[i] = infer_one(qs[i], c, needs_kg ? &*store : nullptr, *gateway);
  });

  std::string text;
  double paths = 0;
  for (const auto& r : recs) {
    text += r.dump() + "\n";
    paths += static_cast<double>(r["paths"].size());
  }
  fs::create_directories(dir);
  write_file_atomic(dir / "predictions.jsonl", text);
  out << "variant=" << c.variant << " beam_k=" << c.beam_k << " questions=" << recs.size() << "\n";
  return recs.empty() ? 0.0 : paths / static_cast<double>(recs.size());
}

int cmd_infer(const RunConfig& c, std::ostream& out) {
  run_infer(c, out_dir(c), out);
  return kOk;
}

EvalReport run_qa_eval(const RunConfig& c, const fs::path& input, const fs::path& dest, std::ostream& out) {
  if (!fs::is_regular_file(input)) throw Exit(kConfigError, "no prediction file '" + input.string() + "'");
  std::istringstream in(read_file(input));
  EvalReport rep = evaluate(load_predictions(in), hits1_mode_from_string(c.hits1_mode));
  write_file_atomic(dest, to_json(rep).dump(2) + "\n");
  out << "n=" << rep.count << " hits1=" << fmt(rep.hits1) << " f1=" << fmt(rep.f1)
      << " precision=" << fmt(rep.precision) << " recall=" << fmt(rep.recall) << "\n";
  return rep;
}

int cmd_eval_medical(const RunConfig& c, std::ostream& out) {
  require_file(c.input_path, "--input");
  fs::path dir = out_dir(c);
  auto items = read_jsonl(c.input_path);
  auto gateway = open_gateway(c, nullptr);

  struct Row {
    std::string id;
    std::optional<MedicalScores> scores;
    std::string error;
  };
  std::vector<Row> rows(items.size());
  parallel_for(items.size(), c.jobs, [&](std::size_t i) {
    const json& it = items[i];
    Row& row = rows[i];
    try {
      row.id = it.at("id").is_string() ? it["id"].get<std::string>() : it["id"].dump();
      const std::string ref = it.at("reference").get<std::string>();
      const std::string ans = it.at("answer").get<std::string>();
      row.scores = judge_medical(ref, ans, *gateway, c.judge_runs, mix_seed(c.seed, fnv1a64(row.id)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("medical record: ") + e.what(), i + 1);
    } catch (const JudgeError& e) {
      row.error = e.what();
    }
  });

  static const char* kCriteria[] = {"relevance", "accuracy", "completeness", "clarity", "conciseness", "average"};
  std::map<std::string, std::vector<double>> values;
  json jrows = json::array();
  for (const auto& r : rows) {
    if (!r.scores) {
      jrows.push_back({{"id", r.id}, {"error", r.error}});
      continue;
    }
    json s = to_json(*r.scores);
    for (const char* k : kCriteria) values[k].push_back(s[k].get<double>());
    jrows.push_back({{"id", r.id}, {"scores", s}});
  }
  json agg = json::object();
  for (const char* k : kCriteria) {
    MetricSummary m = summarize(values[k]);
    agg[k] = {{"mean", m.mean}, {"std", m.std}};
  }
  std::size_t scored = values["average"].size();
  json rep = {{"count", rows.size()}, {"scored", scored}, {"aggregate", agg}, {"rows", jrows}};
  write_file_atomic(dir / "medical_eval.json", rep.dump(2) + "\n");
  out << "n=" << rows.size() << " scored=" << scored << " average=" << fmt(agg["average"]["mean"].get<double>())
      << "\n";
  return kOk;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  if (c.mode == "medical") return cmd_eval_medical(c, out);
  if (c.mode != "qa") throw Exit(kConfigError, "unknown eval mode '" + c.mode + "'");
  fs::path dir = out_dir(c);
  fs::path input = c.input_path.empty() ? dir / "predictions.jsonl" : fs::path(c.input_path);
  run_qa_eval(c, input, dir / "eval.json", out);
  return kOk;
}

int cmd_sweep_beam(const RunConfig& c, std::ostream& out) {
  fs::path dir = out_dir(c);
  if (c.beams.empty()) throw Exit(kConfigError, "--beams is empty");
  std::string csv = "beam_k,hits1,f1,precision,recall,paths_num\n";
  json rows = json::array();
  for (int k : c.beams) {
    if (k < 1) throw Exit(kConfigError, "beam sizes must be >= 1");
    RunConfig ck = c;
    ck.beam_k = k;
    fs::path sub = dir / ("beam-" + std::to_string(k));
    double paths = run_infer(ck, sub, out);
    EvalReport rep = run_qa_eval(ck, sub / "predictions.jsonl", sub / "eval.json", out);
    csv += std::to_string(k) + "," + fmt(rep.hits1) + "," + fmt(rep.f1) + "," + fmt(rep.precision) + "," +
           fmt(rep.recall) + "," + fmt(paths) + "\n";
    rows.push_back({{"beam_k", k},
                    {"hits1", rep.hits1},
                    {"f1", rep.f1},
                    {"precision", rep.precision},
                    {"recall", rep.recall},
                    {"paths_num", paths}});
  }
  write_file_atomic(dir / "sweep.csv", csv);
  write_file_atomic(dir / "sweep.json", rows.dump(2) + "\n");
  return kOk;
}

json stage_json(const StageMetrics& m) {
  json stages = json::array();
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  for (const auto& s : m.stages)
    stages.push_back({{"consistency", opt(s.consistency)}, {"uncertainty", opt(s.uncertainty)}, {"perplexity", opt(s.perplexity)}});
  return {{"id", m.id}, {"run", m.run}, {"stages", stages}};
}

int cmd_trajectory(const RunConfig& c, std::ostream& out, std::ostream& err) {
  fs::path dir = out_dir(c);
  const StageUnit unit = stage_unit_from_string(c.stage_unit);
  std::map<std::string, QAInstance> by_id;
  std::vector<QAInstance> qs;
  if (!c.qa_path.empty()) {
    qs = open_qa(c);
    for (const auto& q : qs) by_id[q.id] = q;
  }
  std::optional<KGStore> store;
  if (!c.kg_path.empty()) store = open_kg(c);
  auto gateway = open_gateway(c, store ? &*store : nullptr);

  std::vector<TraceRecord> traces;
  if (!c.input_path.empty()) {
    require_file(c.input_path, "--input");
    std::istringstream in(read_file(c.input_path));
    traces = load_traces(in);
  } else {
    if (qs.empty()) throw Exit(kConfigError, "trajectory needs --input traces or a --qa file to generate them");
    traces.resize(qs.size() * static_cast<std::size_t>(c.runs));
    parallel_for(traces.size(), c.jobs, [&](std::size_t i) {
      const QAInstance& q = qs[i / static_cast<std::size_t>(c.runs)];
      const int run = static_cast<int>(i % static_cast<std::size_t>(c.runs));
      GenParams p;
      p.temperature = 0.7;
      p.seed = mix_seed(mix_seed(c.seed, fnv1a64(q.id)), 100 + static_cast<std::uint64_t>(run));
      traces[i] = {q.id, run, q.question, gateway->generate(render_inference_prompt(q, std::nullopt), p)};
    });
    std::string text;
    for (const auto& t : traces) text += to_json(t).dump() + "\n";
    write_file_atomic(dir / "traces.jsonl", text);
  }

  // candidate set per question: gold answers, then every run's final answers
  std::map<std::string, std::vector<std::string>> candidates;
  std::map<std::string, std::set<std::string>> seen;
  auto add = [&](const std::string& id, const std::string& a) {
    std::string n = normalize_surface(a);
    if (!n.empty() && seen[id].insert(n).second) candidates[id].push_back(a);
  };
  for (const auto& t : traces) {
    auto it = by_id.find(t.id);
    if (it != by_id.end())
      for (const auto& a : it->second.answers) add(t.id, a);
  }
  for (const auto& t : traces)
    for (const auto& a : answers_from_output(t.trace.text)) add(t.id, a);

  std::vector<std::optional<StageMetrics>> metrics(traces.size());
  parallel_for(traces.size(), c.jobs, [&](std::size_t i) {
    const TraceRecord& t = traces[i];
    const auto& cands = candidates[t.id];
    if (t.trace.tokens.empty() || cands.empty()) return;
    std::string question = t.question;
    if (question.empty() && by_id.count(t.id)) question = by_id.at(t.id).question;
    StageMetrics m = compute_stage_metrics(question, t.trace, cands, *gateway, c.n_stages, unit);
    m.id = t.id;
    m.run = t.run;
    metrics[i] = std::move(m);
  });

  std::vector<StageMetrics> kept;
  std::string raw;
  for (auto& m : metrics) {
    if (!m) continue;
    raw += stage_json(*m).dump() + "\n";
    kept.push_back(std::move(*m));
  }
  if (kept.size() < traces.size()) err << "warning: skipped " << traces.size() - kept.size() << " trace(s) with no tokens or candidates\n";
  write_file_atomic(dir / "stage_metrics.jsonl", raw);
  TrajectoryReport rep = kept.empty() ? TrajectoryReport{} : aggregate_runs(kept);
  emit_stage_csv(rep, dir / "stages.csv");
  out << "traces=" << kept.size() << " stages=" << rep.stages.size() << "\n";
  return kOk;
}

}  // namespace

std::vector<std::string> answers_from_output(const std::string& text) {
  std::vector<std::string> raw;
  auto parsed = parse_process(text);
  if (parsed.process) {
    raw = parsed.process->final_answers;
  } else {
    auto lines = split_lines(text);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
      if (!trim(*it).empty()) {
        raw = split_answer_list(*it);
        break;
      }
    }
  }
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& a : raw) {
    if (seen.insert(normalize_surface(a)).second) out.push_back(std::move(a));
  }
  return out;
}

void apply_config_json(const json& j, RunConfig& c) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k == "kg") c.kg_path = v.get<std::string>();
    else if (k == "qa") c.qa_path = v.get<std::string>();
    else if (k == "gateway") {
      if (v.is_string()) c.gateway_path = v.get<std::string>();
      else c.gateway = v;
    }
    else if (k == "max_hops") c.max_hops = v.get<int>();
    else if (k == "beam_k") c.beam_k = v.get<int>();
    else if (k == "beams") c.beams = v.get<std::vector<int>>();
    else if (k == "stages") c.n_stages = v.get<int>();
    else if (k == "stage_unit") c.stage_unit = v.get<std::string>();
    else if (k == "runs") c.runs = v.get<int>();
    else if (k == "judge_runs") c.judge_runs = v.get<int>();
    else if (k == "sample_n") c.sample_n = v.get<int>();
    else if (k == "samples_per_instance") c.samples_per_instance = v.get<std::size_t>();
    else if (k == "max_prompt_paths") c.max_prompt_paths = v.get<std::size_t>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "jobs") c.jobs = v.get<std::size_t>();
    else if (k == "out") c.out_dir = v.get<std::string>();
    else if (k == "variant") c.variant = v.get<std::string>();
    else if (k == "mode") c.mode = v.get<std::string>();
    else if (k == "hits1_mode") c.hits1_mode = v.get<std::string>();
    else if (k == "input") c.input_path = v.get<std::string>();
    else throw ArgumentError("unknown config key '" + k + "'");
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-graph reasoning path toolchain", "kgtraces"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig f;  // flag values
  std::string config_path;
  int max_hops_flag = 0;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
  auto opt = [&](const std::string& name, auto member, const std::string& help) {
    CLI::Option* o = app.add_option(name, f.*member, help);
    overrides.emplace_back(o, [&f, member](RunConfig& c) { c.*member = f.*member; });
    return o;
  };
  app.add_option("--config", config_path, "JSON run config; flags override it");
  opt("--kg", &RunConfig::kg_path, "knowledge graph TSV");
  opt("--qa", &RunConfig::qa_path, "QA JSONL");
  opt("--gateway", &RunConfig::gateway_path, "gateway config JSON");
  opt("--variant", &RunConfig::variant, "no-kg | no-kg-triple | kg-rel | kg-rel-triple | kg-entity");
  opt("--beam-k", &RunConfig::beam_k, "paths predicted per question")->check(CLI::PositiveNumber);
  opt("--beams", &RunConfig::beams, "beam sizes for sweep-beam")->delimiter(',');
  CLI::Option* hops = app.add_option("--max-hops", max_hops_flag, "maximum path length")->check(CLI::PositiveNumber);
  opt("--stages", &RunConfig::n_stages, "trajectory stage count")->check(CLI::PositiveNumber);
  opt("--stage-unit", &RunConfig::stage_unit, "tokens | characters");
  opt("--runs", &RunConfig::runs, "traces per question when generating")->check(CLI::PositiveNumber);
  opt("--judge-runs", &RunConfig::judge_runs, "judge generations per medical answer")->check(CLI::PositiveNumber);
  opt("--sample-n", &RunConfig::sample_n, "retrieved paths kept for kg-entity")->check(CLI::PositiveNumber);
  opt("--samples-per-instance", &RunConfig::samples_per_instance, "reasoning processes per question");
  opt("--max-prompt-paths", &RunConfig::max_prompt_paths, "cap on paths in construction prompts (0 = all)");
  opt("--seed", &RunConfig::seed, "run seed");
  opt("--jobs", &RunConfig::jobs, "worker threads")->check(CLI::PositiveNumber);
  opt("--out", &RunConfig::out_dir, "output directory");
  opt("--mode", &RunConfig::mode, "eval mode: qa | medical");
  opt("--hits1-mode", &RunConfig::hits1_mode, "any_match | first_only");
  opt("--input", &RunConfig::input_path, "predictions, medical answers or traces JSONL");

  auto* index = app.add_subcommand("index", "load a KG and report its size");
  auto* build = app.add_subcommand("build-dataset", "build the three supervision JSONL files");
  auto* infer = app.add_subcommand("infer", "answer questions under one retrieval variant");
  auto* eval = app.add_subcommand("eval", "score predictions (qa) or medical answers");
  auto* traj = app.add_subcommand("trajectory", "per-stage consistency, uncertainty and perplexity");
  auto* sweep = app.add_subcommand("sweep-beam", "infer and eval for each beam size");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    RunConfig c;
    if (!config_path.empty()) {
      require_file(config_path, "--config");
      try {
        apply_config_json(json::parse(read_file(config_path)), c);
      } catch (const json::exception& e) {
        throw Exit(kConfigError, "config: " + std::string(e.what()));
      }
    }
    for (auto& [o, apply] : overrides) {
      if (o->count()) apply(c);
    }
    if (hops->count()) c.max_hops = max_hops_flag;
    if (c.max_hops && *c.max_hops < 1) throw Exit(kConfigError, "max_hops must be >= 1");
    if (c.beam_k < 1 || c.n_stages < 1 || c.runs < 1 || c.judge_runs < 1 || c.jobs < 1 || c.sample_n < 1)
      throw Exit(kConfigError, "numeric settings must be >= 1");

    if (index->parsed()) return cmd_index(c, out);
    if (build->parsed()) return cmd_build_dataset(c, out, err);
    if (infer->parsed()) return cmd_infer(c, out);
    if (eval->parsed()) return cmd_eval(c, out);
    if (traj->parsed()) return cmd_trajectory(c, out, err);
    if (sweep->parsed()) return cmd_sweep_beam(c, out);
    return kConfigError;
  } catch (const Exit& e) {
    err << "error: " << e.what() << "\n";
    return e.code;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const GatewayError& e) {
    err << "gateway error: " << e.what() << "\n";
    return kGatewayError;
  } catch (const JudgeError& e) {
    err << "judge error: " << e.what() << "\n";
    return kGatewayError;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

}  // namespace kgtraces::cli
