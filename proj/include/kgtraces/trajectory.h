#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "kgtraces/gateway.h"

namespace kgtraces {

inline constexpr int kDefaultStages = 5;
inline constexpr int kDefaultTrajectoryRuns = 10;

enum class StageUnit { kTokens, kCharacters };

StageUnit stage_unit_from_string(const std::string& s);

struct StageSlice {
  int stage_index = 0;
  std::size_t begin = 0;  // token span [begin, end)
  std::size_t end = 0;
  std::string text;

  std::size_t size() const { return end - begin; }
};

// Splits a trace into n contiguous stages whose sizes differ by at most one
// unit, earlier stages taking the remainder. In character mode the cut points
// are placed on character counts and snapped to the token containing them.
std::vector<StageSlice> segment_stages(const GenerationTrace& trace, int n = kDefaultStages,
                                       StageUnit unit = StageUnit::kTokens);

struct AnswerState {
  std::vector<std::string> candidates;
  std::vector<double> probabilities;
};

// Softmax over length-normalised log-likelihoods: score_c = total_c / len_c.
AnswerState answer_state_from_scores(std::vector<std::string> candidates, const std::vector<double>& total_logprobs,
                                     const std::vector<std::size_t>& lengths);

AnswerState answer_state(const std::string& thought_prefix, const std::vector<std::string>& candidates,
                         Gateway& gateway);

int consistency(const AnswerState& state, const AnswerState& final_state);

double uncertainty(const AnswerState& state);

double stage_perplexity(const GenerationTrace& trace, const StageSlice& slice);

struct StageValue {
  std::optional<double> consistency;
  std::optional<double> uncertainty;
  std::optional<double> perplexity;
};

// One traced run: per-stage values, missing where a stage was empty.
struct StageMetrics {
  std::string id;
  int run = 0;
  std::vector<StageValue> stages;
};

// Scores each stage prefix (question + cumulative stage text) against the
// candidate set and compares it with the last stage's state.
StageMetrics compute_stage_metrics(const std::string& question, const GenerationTrace& trace,
                                   const std::vector<std::string>& candidates, Gateway& gateway,
                                   int n = kDefaultStages, StageUnit unit = StageUnit::kTokens);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population
  double median = 0.0;
  std::size_t n = 0;
};

struct StageSummary {
  MetricSummary consistency;
  MetricSummary uncertainty;
  MetricSummary perplexity;
};

struct TrajectoryReport {
  std::vector<StageSummary> stages;
};

MetricSummary summarize(std::vector<double> values);

TrajectoryReport aggregate_runs(const std::vector<StageMetrics>& runs);

std::string stage_csv(const TrajectoryReport& report);
std::size_t emit_stage_csv(const TrajectoryReport& report, const std::filesystem::path& destination);
TrajectoryReport parse_stage_csv(const std::string& csv);

struct TraceRecord {
  std::string id;
  int run = 0;
  std::string question;  // optional, used as the stage-prefix head
  GenerationTrace trace;
};

nlohmann::json to_json(const TraceRecord& r);
std::vector<TraceRecord> load_traces(std::istream& in);

}  // namespace kgtraces
