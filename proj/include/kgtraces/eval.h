#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgtraces/error.h"
#include "kgtraces/gateway.h"
#include "kgtraces/path_engine.h"

namespace kgtraces {

// ---------------------------------------------------------------------------
// QA metrics. Inputs are compared after normalize_surface().

enum class Hits1Mode { kAnyMatch, kFirstOnly };

Hits1Mode hits1_mode_from_string(const std::string& s);

int hits_at_1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
              Hits1Mode mode = Hits1Mode::kAnyMatch);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Predictions are de-duplicated before counting. Throws ArgumentError on empty gold.
PRF precision_recall_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);

struct EvalRow {
  std::string id;
  int hits1 = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // sorted by id
  double hits1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t count = 0;
};

struct Prediction {
  std::string id;
  std::vector<std::string> predicted;
  std::vector<std::string> gold;
};

// JSONL {"id","predicted":[..],"gold":[..]}; "answers" is accepted for "predicted".
std::vector<Prediction> load_predictions(std::istream& in);

EvalReport evaluate(std::vector<Prediction> predictions, Hits1Mode mode = Hits1Mode::kAnyMatch);

nlohmann::json to_json(const EvalReport& r);

// ---------------------------------------------------------------------------
// Loss diagnostics (natural log throughout).

struct KlOptions {
  // Floor applied to P over Q's support. 0 disables smoothing.
  double epsilon = 1e-12;
};

// sum_x Q(x) (ln Q(x) - ln P(x)) over Q's support.
template <typename Path>
double kl_divergence(const PathDistribution<Path>& q, const PathDistribution<Path>& p, KlOptions opts = {}) {
  double sum = 0.0;
  for (const auto& [x, qx] : q.support) {
    if (!(qx >= 0.0)) throw ArgumentError("kl_divergence: negative or NaN probability in Q");
    if (qx == 0.0) continue;
    double px = p.probability(x);
    if (!(px >= 0.0)) throw ArgumentError("kl_divergence: negative or NaN probability in P");
    px = std::max(px, opts.epsilon);
    if (px == 0.0) throw DivergenceError("kl_divergence: Q has mass where P is zero");
    sum += qx * (std::log(qx) - std::log(px));
  }
  return std::max(sum, 0.0);
}

// -sum of token log-probabilities. Throws ArgumentError for an empty trace.
double sequence_nll(const GenerationTrace& trace);

// Sum of the three task losses. Throws ArgumentError on a negative part.
double total_loss(double relation_loss, double triple_loss, double process_loss);

// ---------------------------------------------------------------------------
// Medical LLM-judge protocol.

inline constexpr int kDefaultJudgeRuns = 3;

struct MedicalScores {
  double relevance = 0.0;
  double accuracy = 0.0;
  double completeness = 0.0;
  double clarity = 0.0;
  double conciseness = 0.0;
  double average = 0.0;
  int runs = 1;
};

nlohmann::json to_json(const MedicalScores& s);

// Reads the five "**<Criterion>**: X.X" lines of a score breakdown, in any
// order, ignoring trailing explanations. Throws ParseError naming the first
// missing criterion, or when a score falls outside [0, 1].
MedicalScores parse_score_breakdown(const std::string& text);

// Scores one answer `runs` times and averages the parseable runs per
// criterion. Throws JudgeError with the raw outputs if no run parses.
MedicalScores judge_medical(const std::string& reference, const std::string& answer, Gateway& gateway,
                            int runs = kDefaultJudgeRuns, std::uint64_t seed = 0);

}  // namespace kgtraces
