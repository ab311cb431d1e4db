#include "kgtraces/supervision.h"

#include <algorithm>
#include <thread>

#include "kgtraces/parallel.h"
#include "kgtraces/rng.h"
#include "kgtraces/text.h"

namespace kgtraces {

using nlohmann::json;

const char* to_string(Task t) {
  switch (t) {
    case Task::kRelationPath:
      return "relation_path";
    case Task::kTriplePath:
      return "triple_path";
    case Task::kReasoningProcess:
      return "reasoning_process";
  }
  return "relation_path";
}

json to_json(const SupervisionRecord& r) {
  json prov = json::array();
  for (auto p : r.provenance) prov.push_back(to_string(p));
  return {{"id", r.instance_id},
          {"task", to_string(r.task)},
          {"prompt", r.prompt},
          {"target", r.target},
          {"meta", {{"provenance", prov}, {"hops", r.hops}}}};
}

json to_json(const FailureRecord& f) {
  return {{"id", f.instance_id}, {"task", to_string(f.task)}, {"error", f.error}};
}

GoldPaths gold_paths(const KGStore& store, const QAInstance& q, int max_hops) {
  GoldPaths g;
  const auto sources = link_entities(store, q.question_entities);
  const auto targets = link_entities(store, q.answers);
  g.triple_paths = enumerate_triple_paths(store, sources, targets, max_hops);
  std::set<RelationPath> rels;
  for (const auto& p : g.triple_paths) rels.insert(p.relation_path());
  g.relation_paths.assign(rels.begin(), rels.end());
  return g;
}

namespace {

struct InstanceOutput {
  std::vector<SupervisionRecord> relation, triple, process;
  std::vector<FailureRecord> failures;
};

InstanceOutput build_one(const QAInstance& q, const KGStore& store, Gateway& gateway, const BuildConfig& config) {
  InstanceOutput out;
  GoldPaths gold = gold_paths(store, q, config.max_hops);

  const std::string rel_prompt = render_relation_prompt(q);
  for (const auto& rp : gold.relation_paths)
    out.relation.push_back({q.id, Task::kRelationPath, rel_prompt, render_path(rp), {PathSource::kKG}, rp.relations.size()});

  const std::string tri_prompt = render_triple_prompt(q);
  for (const auto& tp : gold.triple_paths)
    out.triple.push_back({q.id, Task::kTriplePath, tri_prompt, render_path(tp), {PathSource::kKG}, tp.hops()});

  std::vector<AnnotatedPath> shown;
  std::size_t hops = 0;
  for (const auto& tp : gold.triple_paths) {
    if (config.max_prompt_paths && shown.size() == config.max_prompt_paths) break;
    shown.push_back(annotate(tp, PathSource::kKG));
    hops = std::max(hops, tp.hops());
  }
  const std::string proc_prompt = render_process_prompt(q, shown);
  std::vector<PathSource> provenance(shown.size(), PathSource::kKG);

  for (std::size_t s = 0; s < config.samples_per_instance; ++s) {
    GenParams params = config.params;
    params.seed = mix_seed(config.seed, fnv1a64(q.id) + s);
    std::string error;
    for (int attempt = 0;; ++attempt) {
      try {
        GenerationTrace t = gateway.generate(proc_prompt, params);
        if (trim(t.text).empty()) {
          error = "empty generation";
          break;
        }
        out.process.push_back({q.id, Task::kReasoningProcess, proc_prompt, t.text, provenance, hops});
        error.clear();
        break;
      } catch (const GatewayError& e) {
        error = e.what();
        if (!e.retryable() || attempt >= config.retries) break;
        std::this_thread::sleep_for(config.backoff * (1 << attempt));
      }
    }
    if (!error.empty()) out.failures.push_back({q.id, Task::kReasoningProcess, error});
  }
  return out;
}

}  // namespace

Dataset build_dataset(const std::vector<QAInstance>& instances, const KGStore& store, Gateway& gateway,
                      const BuildConfig& config) {
  std::vector<InstanceOutput> per(instances.size());
  parallel_for(instances.size(), config.jobs,
               [&](std::size_t i) { per[i] = build_one(instances[i], store, gateway, config); });

  Dataset d;
  for (auto& o : per) {
    std::move(o.relation.begin(), o.relation.end(), std::back_inserter(d.relation_paths));
    std::move(o.triple.begin(), o.triple.end(), std::back_inserter(d.triple_paths));
    std::move(o.process.begin(), o.process.end(), std::back_inserter(d.reasoning_processes));
    std::move(o.failures.begin(), o.failures.end(), std::back_inserter(d.failures));
  }
  return d;
}

std::string to_jsonl(const std::vector<SupervisionRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

std::string to_jsonl(const std::vector<FailureRecord>& failures) {
  std::string out;
  for (const auto& f : failures) out += to_json(f).dump() + "\n";
  return out;
}

}  // namespace kgtraces
