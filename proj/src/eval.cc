#include "kgtraces/eval.h"

#include <algorithm>
#include <regex>
#include <set>

#include "kgtraces/prompts.h"
#include "kgtraces/rng.h"
#include "kgtraces/text.h"

namespace kgtraces {

using nlohmann::json;

namespace {

std::vector<std::string> normalized_unique(const std::vector<std::string>& xs) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& x : xs) {
    std::string n = normalize_surface(x);
    if (!n.empty() && seen.insert(n).second) out.push_back(std::move(n));
  }
  return out;
}

}  // namespace

Hits1Mode hits1_mode_from_string(const std::string& s) {
  if (s == "any_match") return Hits1Mode::kAnyMatch;
  if (s == "first_only") return Hits1Mode::kFirstOnly;
  throw ArgumentError("unknown hits1 mode '" + s + "'");
}

int hits_at_1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold, Hits1Mode mode) {
  auto pred = normalized_unique(predicted);
  auto g = normalized_unique(gold);
  std::set<std::string> gs(g.begin(), g.end());
  if (pred.empty()) return 0;
  if (mode == Hits1Mode::kFirstOnly) return gs.count(pred.front()) ? 1 : 0;
  for (const auto& p : pred) {
    if (gs.count(p)) return 1;
  }
  return 0;
}

PRF precision_recall_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
  auto g = normalized_unique(gold);
  if (g.empty()) throw ArgumentError("precision_recall_f1: empty gold answer set");
  auto pred = normalized_unique(predicted);
  std::set<std::string> gs(g.begin(), g.end());
  std::size_t hit = 0;
  for (const auto& p : pred) hit += gs.count(p);
  PRF r;
  r.precision = pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
  r.recall = static_cast<double>(hit) / static_cast<double>(g.size());
  r.f1 = r.precision + r.recall == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

std::vector<Prediction> load_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      Prediction p;
      p.id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
      if (j.contains("predicted")) {
        p.predicted = j["predicted"].get<std::vector<std::string>>();
      } else if (j.contains("answers")) {
        p.predicted = j["answers"].get<std::vector<std::string>>();
      }
      p.gold = j.value("gold", std::vector<std::string>{});
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad prediction record: ") + e.what(), line_no);
    }
  }
  return out;
}

EvalReport evaluate(std::vector<Prediction> predictions, Hits1Mode mode) {
  std::stable_sort(predictions.begin(), predictions.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  EvalReport r;
  for (const auto& p : predictions) {
    EvalRow row;
    row.id = p.id;
    row.hits1 = hits_at_1(p.predicted, p.gold, mode);
    PRF prf = precision_recall_f1(p.predicted, p.gold);
    row.precision = prf.precision;
    row.recall = prf.recall;
    row.f1 = prf.f1;
    r.hits1 += row.hits1;
    r.precision += row.precision;
    r.recall += row.recall;
    r.f1 += row.f1;
    r.rows.push_back(std::move(row));
  }
  r.count = r.rows.size();
  if (r.count) {
    const double n = static_cast<double>(r.count);
    r.hits1 /= n;
    r.precision /= n;
    r.recall /= n;
    r.f1 /= n;
  }
  return r;
}

json to_json(const EvalReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"id", row.id},
                    {"hits1", row.hits1},
                    {"f1", row.f1},
                    {"precision", row.precision},
                    {"recall", row.recall}});
  }
  return {{"count", r.count},
          {"aggregate", {{"hits1", r.hits1}, {"f1", r.f1}, {"precision", r.precision}, {"recall", r.recall}}},
          {"rows", rows}};
}

double sequence_nll(const GenerationTrace& trace) {
  if (trace.tokens.empty()) throw ArgumentError("sequence_nll: trace has no tokens");
  return std::max(0.0, -trace.total_logprob());
}

double total_loss(double relation_loss, double triple_loss, double process_loss) {
  for (double v : {relation_loss, triple_loss, process_loss}) {
    if (!(v >= 0.0)) throw ArgumentError("total_loss: loss components must be non-negative");
  }
  return relation_loss + triple_loss + process_loss;
}

json to_json(const MedicalScores& s) {
  return {{"relevance", s.relevance}, {"accuracy", s.accuracy}, {"completeness", s.completeness},
          {"clarity", s.clarity},     {"conciseness", s.conciseness}, {"average", s.average},
          {"runs", s.runs}};
}

MedicalScores parse_score_breakdown(const std::string& text) {
  struct Criterion {
    const char* name;
    double MedicalScores::*field;
  };
  static const Criterion kCriteria[] = {{"Relevance", &MedicalScores::relevance},
                                        {"Accuracy", &MedicalScores::accuracy},
                                        {"Completeness", &MedicalScores::completeness},
                                        {"Clarity", &MedicalScores::clarity},
                                        {"Conciseness", &MedicalScores::conciseness}};
  MedicalScores s;
  double sum = 0.0;
  for (const auto& c : kCriteria) {
    const std::regex re(std::string(R"((?:^|\n)[ \t]*(?:[-*][ \t]*)?\*\*)") + c.name +
                            R"(\*\*[ \t]*:[ \t]*\**[ \t]*([0-9]+(?:\.[0-9]+)?|\.[0-9]+))",
                        std::regex::icase);
    std::smatch m;
    if (!std::regex_search(text, m, re)) throw ParseError(std::string("score breakdown is missing ") + c.name);
    const double v = std::stod(m[1]);
    if (v < 0.0 || v > 1.0) throw ParseError(std::string(c.name) + " score out of [0, 1]: " + m[1].str());
    s.*c.field = v;
    sum += v;
  }
  s.average = sum / 5.0;
  return s;
}

MedicalScores judge_medical(const std::string& reference, const std::string& answer, Gateway& gateway, int runs,
                            std::uint64_t seed) {
  if (runs < 1) throw ArgumentError("judge_medical: runs must be >= 1");
  const std::string prompt = render_medical_eval_prompt(reference, answer);
  std::vector<MedicalScores> parsed;
  std::vector<std::string> raw;
  for (int i = 0; i < runs; ++i) {
    GenParams params;
    params.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    params.temperature = 0.7;
    GenerationTrace t = gateway.generate(prompt, params);
    raw.push_back(t.text);
    try {
      parsed.push_back(parse_score_breakdown(t.text));
    } catch (const ParseError&) {
    }
  }
  if (parsed.empty()) {
    std::string msg = "no judge run produced a parseable score breakdown:";
    for (std::size_t i = 0; i < raw.size(); ++i) msg += "\n--- run " + std::to_string(i + 1) + " ---\n" + raw[i];
    throw JudgeError(msg);
  }
  MedicalScores avg;
  for (const auto& p : parsed) {
    avg.relevance += p.relevance;
    avg.accuracy += p.accuracy;
    avg.completeness += p.completeness;
    avg.clarity += p.clarity;
    avg.conciseness += p.conciseness;
  }
  const double n = static_cast<double>(parsed.size());
  avg.relevance /= n;
  avg.accuracy /= n;
  avg.completeness /= n;
  avg.clarity /= n;
  avg.conciseness /= n;
  avg.average = (avg.relevance + avg.accuracy + avg.completeness + avg.clarity + avg.conciseness) / 5.0;
  avg.runs = static_cast<int>(parsed.size());
  return avg;
}

}  // namespace kgtraces
