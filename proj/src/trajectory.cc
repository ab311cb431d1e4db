#include "kgtraces/trajectory.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "kgtraces/error.h"
#include "kgtraces/text.h"

namespace kgtraces {

using nlohmann::json;

StageUnit stage_unit_from_string(const std::string& s) {
  if (s == "tokens") return StageUnit::kTokens;
  if (s == "characters" || s == "chars") return StageUnit::kCharacters;
  throw ArgumentError("unknown stage unit '" + s + "'");
}

namespace {

std::vector<std::size_t> even_sizes(std::size_t total, int n) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(n), total / static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < total % static_cast<std::size_t>(n); ++i) ++sizes[i];
  return sizes;
}

std::string join_tokens(const GenerationTrace& t, std::size_t b, std::size_t e) {
  std::string s;
  for (std::size_t i = b; i < e; ++i) s += t.tokens[i].token;
  return s;
}

}  // namespace

std::vector<StageSlice> segment_stages(const GenerationTrace& trace, int n, StageUnit unit) {
  if (trace.tokens.empty()) throw ArgumentError("segment_stages: empty trace");
  if (n < 1) throw ArgumentError("segment_stages: stage count must be >= 1");
  std::vector<std::size_t> bounds{0};
  if (unit == StageUnit::kTokens) {
    for (std::size_t s : even_sizes(trace.tokens.size(), n)) bounds.push_back(bounds.back() + s);
  } else {
    std::vector<std::size_t> ends;  // cumulative character end of each token
    std::size_t acc = 0;
    for (const auto& t : trace.tokens) ends.push_back(acc += t.token.size());
    std::size_t cut = 0;
    auto sizes = even_sizes(acc, n);
    for (int i = 0; i + 1 < n; ++i) {
      cut += sizes[static_cast<std::size_t>(i)];
      // first token whose end reaches the cut point
      std::size_t k = static_cast<std::size_t>(std::lower_bound(ends.begin(), ends.end(), cut) - ends.begin());
      bounds.push_back(std::max(bounds.back(), std::min(k + (cut > 0 ? 1 : 0), trace.tokens.size())));
    }
    bounds.push_back(trace.tokens.size());
  }
  std::vector<StageSlice> out;
  for (int i = 0; i < n; ++i) {
    StageSlice s;
    s.stage_index = i;
    s.begin = bounds[static_cast<std::size_t>(i)];
    s.end = bounds[static_cast<std::size_t>(i) + 1];
    s.text = join_tokens(trace, s.begin, s.end);
    out.push_back(std::move(s));
  }
  return out;
}

AnswerState answer_state_from_scores(std::vector<std::string> candidates, const std::vector<double>& total_logprobs,
                                     const std::vector<std::size_t>& lengths) {
  if (candidates.empty()) throw ArgumentError("answer_state: no candidates");
  if (candidates.size() != total_logprobs.size() || candidates.size() != lengths.size()) {
    throw ArgumentError("answer_state: candidate and score counts differ");
  }
  std::vector<double> score(candidates.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < score.size(); ++i) {
    score[i] = total_logprobs[i] / static_cast<double>(std::max<std::size_t>(lengths[i], 1));
    hi = std::max(hi, score[i]);
  }
  double z = 0.0;
  for (double& s : score) z += (s = std::exp(s - hi));
  for (double& s : score) s /= z;
  return AnswerState{std::move(candidates), std::move(score)};
}

AnswerState answer_state(const std::string& thought_prefix, const std::vector<std::string>& candidates,
                         Gateway& gateway) {
  if (candidates.empty()) throw ArgumentError("answer_state: no candidates");
  std::vector<double> totals;
  std::vector<std::size_t> lengths;
  for (const auto& c : candidates) {
    SequenceScore s = gateway.score_sequence(thought_prefix, c);
    totals.push_back(s.total);
    lengths.push_back(s.tokens.size());
  }
  return answer_state_from_scores(candidates, totals, lengths);
}

namespace {

std::size_t argmax(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

}  // namespace

int consistency(const AnswerState& state, const AnswerState& final_state) {
  if (state.candidates != final_state.candidates) throw ArgumentError("consistency: candidate lists differ");
  if (state.probabilities.empty()) throw ArgumentError("consistency: empty state");
  return argmax(state.probabilities) == argmax(final_state.probabilities) ? 1 : 0;
}

double uncertainty(const AnswerState& state) {
  double h = 0.0;
  for (double p : state.probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double stage_perplexity(const GenerationTrace& trace, const StageSlice& slice) {
  if (slice.begin >= slice.end) throw ArgumentError("stage_perplexity: empty slice");
  if (slice.end > trace.tokens.size()) throw ArgumentError("stage_perplexity: slice outside trace");
  double nll = 0.0;
  for (std::size_t i = slice.begin; i < slice.end; ++i) nll -= trace.tokens[i].logprob;
  return std::exp(nll / static_cast<double>(slice.size()));
}

StageMetrics compute_stage_metrics(const std::string& question, const GenerationTrace& trace,
                                   const std::vector<std::string>& candidates, Gateway& gateway, int n,
                                   StageUnit unit) {
  auto slices = segment_stages(trace, n, unit);
  StageMetrics m;
  m.stages.resize(slices.size());
  std::vector<std::optional<AnswerState>> states(slices.size());
  std::string prefix = question + "\n";
  for (std::size_t i = 0; i < slices.size(); ++i) {
    prefix += slices[i].text;
    if (slices[i].size() == 0) continue;
    states[i] = answer_state(prefix, candidates, gateway);
    m.stages[i].uncertainty = uncertainty(*states[i]);
    m.stages[i].perplexity = stage_perplexity(trace, slices[i]);
  }
  const auto& last = states.back();
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (states[i] && last) m.stages[i].consistency = consistency(*states[i], *last);
  }
  return m;
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.n));
  const std::size_t h = s.n / 2;
  s.median = s.n % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
  return s;
}

TrajectoryReport aggregate_runs(const std::vector<StageMetrics>& runs) {
  if (runs.empty()) throw ArgumentError("aggregate_runs: no runs");
  const std::size_t n = runs.front().stages.size();
  for (const auto& r : runs) {
    if (r.stages.size() != n) throw ArgumentError("aggregate_runs: runs disagree on stage count");
  }
  TrajectoryReport rep;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> c, u, p;
    for (const auto& r : runs) {
      const auto& v = r.stages[i];
      if (v.consistency) c.push_back(*v.consistency);
      if (v.uncertainty) u.push_back(*v.uncertainty);
      if (v.perplexity) p.push_back(*v.perplexity);
    }
    rep.stages.push_back({summarize(std::move(c)), summarize(std::move(u)), summarize(std::move(p))});
  }
  return rep;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void row(std::string& out, std::size_t stage, const char* metric, const MetricSummary& m) {
  out += std::to_string(stage) + "," + metric + "," + fmt(m.mean) + "," + fmt(m.std) + "," + fmt(m.median) + "," +
         std::to_string(m.n) + "\n";
}

}  // namespace

std::string stage_csv(const TrajectoryReport& report) {
  std::string out = "stage,metric,mean,std,median,n\n";
  for (std::size_t i = 0; i < report.stages.size(); ++i) {
    const auto& s = report.stages[i];
    row(out, i, "consistency", s.consistency);
    row(out, i, "perplexity", s.perplexity);
    row(out, i, "uncertainty", s.uncertainty);
  }
  return out;
}

std::size_t emit_stage_csv(const TrajectoryReport& report, const std::filesystem::path& destination) {
  return write_file_atomic(destination, stage_csv(report));
}

TrajectoryReport parse_stage_csv(const std::string& csv) {
  auto lines = split_lines(csv);
  if (lines.empty() || lines.front() != "stage,metric,mean,std,median,n") {
    throw ParseError("stage csv: missing header", 1);
  }
  std::map<std::size_t, StageSummary> by_stage;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(lines[i]);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw ParseError("stage csv: expected 6 fields", i + 1);
    MetricSummary m;
    std::size_t stage = 0;
    try {
      stage = std::stoul(f[0]);
      m.mean = std::stod(f[2]);
      m.std = std::stod(f[3]);
      m.median = std::stod(f[4]);
      m.n = std::stoul(f[5]);
    } catch (const std::exception&) {
      throw ParseError("stage csv: bad number", i + 1);
    }
    auto& s = by_stage[stage];
    if (f[1] == "consistency") {
      s.consistency = m;
    } else if (f[1] == "uncertainty") {
      s.uncertainty = m;
    } else if (f[1] == "perplexity") {
      s.perplexity = m;
    } else {
      throw ParseError("stage csv: unknown metric '" + f[1] + "'", i + 1);
    }
  }
  TrajectoryReport rep;
  for (auto& [k, v] : by_stage) {
    if (k != rep.stages.size()) throw ParseError("stage csv: stages not contiguous", 0);
    rep.stages.push_back(v);
  }
  return rep;
}

json to_json(const TraceRecord& r) {
  json toks = json::array();
  for (const auto& t : r.trace.tokens) toks.push_back(json::array({t.token, t.logprob}));
  json j = {{"id", r.id}, {"run", r.run}, {"tokens", toks}};
  if (!r.question.empty()) j["question"] = r.question;
  return j;
}

std::vector<TraceRecord> load_traces(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      TraceRecord r;
      r.id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
      r.run = j.value("run", 0);
      for (const auto& t : j.at("tokens")) {
        r.trace.tokens.push_back({t.at(0).get<std::string>(), t.at(1).get<double>()});
        r.trace.text += r.trace.tokens.back().token;
      }
      r.question = j.value("question", std::string());
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad trace record: ") + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace kgtraces
