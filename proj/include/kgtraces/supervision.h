#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgtraces/gateway.h"
#include "kgtraces/kg_store.h"
#include "kgtraces/prompts.h"
#include "kgtraces/qa.h"

namespace kgtraces {

enum class Task { kRelationPath, kTriplePath, kReasoningProcess };

const char* to_string(Task t);

struct SupervisionRecord {
  std::string instance_id;
  Task task = Task::kRelationPath;
  std::string prompt;
  std::string target;
  std::vector<PathSource> provenance;
  std::size_t hops = 0;

  bool operator==(const SupervisionRecord&) const = default;
};

// {"id","task","prompt","target","meta":{"provenance":[..],"hops":k}}
nlohmann::json to_json(const SupervisionRecord& r);

struct FailureRecord {
  std::string instance_id;
  Task task = Task::kReasoningProcess;
  std::string error;
};

nlohmann::json to_json(const FailureRecord& f);

struct BuildConfig {
  int max_hops = 2;
  std::size_t samples_per_instance = 1;
  // Cap on paths listed in the process prompt; 0 keeps all.
  std::size_t max_prompt_paths = 0;
  int retries = 3;
  std::chrono::milliseconds backoff{250};
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  GenParams params;
};

struct Dataset {
  std::vector<SupervisionRecord> relation_paths;
  std::vector<SupervisionRecord> triple_paths;
  std::vector<SupervisionRecord> reasoning_processes;
  std::vector<FailureRecord> failures;
};

// Gold paths for one instance: shortest chains from the linked question
// entities to the linked answers.
struct GoldPaths {
  std::vector<RelationPath> relation_paths;
  std::vector<ReasoningPath> triple_paths;
};

GoldPaths gold_paths(const KGStore& store, const QAInstance& q, int max_hops);

// Emits, per instance and in input order: one relation-path record per gold
// relation path, one triple-path record per gold triple path, and
// samples_per_instance reasoning-process records generated by the gateway.
// Generation failures are retried (retryable errors only) and then logged to
// `failures`; they never produce a record.
Dataset build_dataset(const std::vector<QAInstance>& instances, const KGStore& store, Gateway& gateway,
                      const BuildConfig& config);

std::string to_jsonl(const std::vector<SupervisionRecord>& records);
std::string to_jsonl(const std::vector<FailureRecord>& failures);

}  // namespace kgtraces
