#include "kgtraces/gateway.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "kgtraces/rng.h"
#include "kgtraces/text.h"

namespace kgtraces {

using nlohmann::json;

double GenerationTrace::total_logprob() const {
  double s = 0.0;
  for (const auto& t : tokens) s += t.logprob;
  return s;
}

json to_json(const GenParams& p) {
  return {{"max_tokens", p.max_tokens}, {"temperature", p.temperature}, {"n", p.top_k_sequences},
          {"seed", p.seed},             {"stop", p.stop}};
}

GenParams gen_params_from_json(const json& j) {
  GenParams p;
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.temperature = j.value("temperature", p.temperature);
  p.top_k_sequences = j.value("n", p.top_k_sequences);
  p.seed = j.value("seed", p.seed);
  p.stop = j.value("stop", p.stop);
  return p;
}

json to_json(const GenerationTrace& t) {
  json tokens = json::array();
  for (const auto& tok : t.tokens) tokens.push_back(json::array({tok.token, tok.logprob}));
  json j = {{"text", t.text}, {"tokens", tokens}, {"params", to_json(t.params)}};
  if (t.prompt_echo) j["prompt_echo"] = *t.prompt_echo;
  return j;
}

GenerationTrace trace_from_json(const json& j) {
  GenerationTrace t;
  t.text = j.value("text", std::string());
  for (const auto& tok : j.at("tokens")) {
    if (!tok.is_array() || tok.size() != 2) throw ParseError("token entry must be [token, logprob]");
    t.tokens.push_back({tok[0].get<std::string>(), tok[1].get<double>()});
  }
  if (!j.contains("text")) {
    for (const auto& tok : t.tokens) t.text += tok.token;
  }
  if (j.contains("params")) t.params = gen_params_from_json(j["params"]);
  if (j.contains("prompt_echo")) t.prompt_echo = j["prompt_echo"].get<std::string>();
  return t;
}

std::vector<GenerationTrace> rank_candidates(std::vector<GenerationTrace> candidates, std::size_t k) {
  std::vector<GenerationTrace> distinct;
  for (auto& c : candidates) {
    auto it = std::find_if(distinct.begin(), distinct.end(), [&](const auto& d) { return d.text == c.text; });
    if (it == distinct.end()) {
      distinct.push_back(std::move(c));
    } else if (c.total_logprob() > it->total_logprob()) {
      *it = std::move(c);
    }
  }
  std::stable_sort(distinct.begin(), distinct.end(),
                   [](const auto& a, const auto& b) { return a.total_logprob() > b.total_logprob(); });
  if (distinct.size() > k) distinct.resize(k);
  return distinct;
}

std::vector<GenerationTrace> Gateway::generate_topk(const std::string& prompt, std::size_t k,
                                                    const GenParams& params) {
  if (k == 0) throw ArgumentError("generate_topk: k must be >= 1");
  std::vector<GenerationTrace> samples;
  for (std::size_t i = 0; i < k; ++i) {
    GenParams p = params;
    p.top_k_sequences = 1;
    p.seed = i == 0 ? params.seed : mix_seed(params.seed, i);
    samples.push_back(generate(prompt, p));
  }
  return rank_candidates(std::move(samples), k);
}

std::vector<std::string> whitespace_tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto space = [&](std::size_t j) { return std::isspace(static_cast<unsigned char>(text[j])) != 0; };
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && space(j)) ++j;
    while (j < text.size() && !space(j)) ++j;
    out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mock backend

void MockOptions::add_fixture(const std::string& prompt, std::string reply) {
  fixtures[fixture_key(prompt)] = std::move(reply);
}

std::string fixture_key(const std::string& prompt) { return hex64(fnv1a64(prompt)); }

namespace {

struct PromptPath {
  std::size_t number;
  std::string source;  // KG | INFERRED
  std::string target;  // tail of the last triple
};

std::vector<PromptPath> numbered_paths(const std::string& prompt) {
  static const std::regex line_re(R"(^(\d+)\. (.*) \[<(KG|INFERRED)>\]$)");
  static const std::regex triple_re(R"(\(([^()]*), ([^(),]*), ([^()]*)\))");
  std::vector<PromptPath> out;
  for (const auto& line : split_lines(prompt)) {
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    std::string body = m[2];
    std::string target;
    for (auto it = std::sregex_iterator(body.begin(), body.end(), triple_re); it != std::sregex_iterator(); ++it)
      target = (*it)[3];
    if (target.empty()) {
      // relation-only paths carry no entity
      continue;
    }
    out.push_back({static_cast<std::size_t>(std::stoul(m[1])), m[3], target});
  }
  return out;
}

std::string line_after(const std::string& prompt, const std::string& marker) {
  auto pos = prompt.find(marker);
  if (pos == std::string::npos) return {};
  pos += marker.size();
  auto end = prompt.find('\n', pos);
  return trim(prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
}

std::string pick_question_word(const std::string& question, Rng& rng) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : question + " ") {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else {
      if (cur.size() >= 4) words.push_back(cur);
      cur.clear();
    }
  }
  if (words.empty()) return "unknown";
  return words[rng.below(words.size())];
}

std::string synth_breakdown(Rng& rng) {
  static const char* kNames[] = {"Relevance", "Accuracy", "Completeness", "Clarity", "Conciseness"};
  std::string out = "**Score Breakdown:**\n";
  for (const char* name : kNames) {
    const int tenths = 5 + static_cast<int>(rng.below(6));
    char buf[8];
    std::snprintf(buf, sizeof buf, "%d.%d", tenths / 10, tenths % 10);
    out += std::string("\n- **") + name + "**: " + buf + " (Explanation: synthetic judgement)\n";
  }
  return out;
}

// A short walk through the vocabulary, preferring heads named in the question.
std::vector<const Triple*> synth_walk(const std::vector<Triple>& vocab, const std::string& question, Rng& rng) {
  const std::string q = normalize_surface(question);
  std::vector<const Triple*> starts;
  for (const auto& t : vocab) {
    if (q.find(normalize_surface(t.head)) != std::string::npos) starts.push_back(&t);
  }
  if (starts.empty()) {
    for (const auto& t : vocab) starts.push_back(&t);
  }
  std::vector<const Triple*> walk{starts[rng.below(starts.size())]};
  std::vector<const Triple*> next;
  for (const auto& t : vocab) {
    if (t.head == walk[0]->tail && t.tail != walk[0]->head) next.push_back(&t);
  }
  if (!next.empty() && rng.below(2) == 1) walk.push_back(next[rng.below(next.size())]);
  return walk;
}

std::string synth_relation_path(const MockOptions& o, const std::string& question, Rng& rng) {
  std::vector<std::string> rels;
  if (!o.triple_vocab.empty()) {
    for (const Triple* t : synth_walk(o.triple_vocab, question, rng)) rels.push_back(t->relation);
  } else if (!o.relation_vocab.empty()) {
    const std::size_t len = 1 + rng.below(2);
    for (std::size_t i = 0; i < len; ++i) rels.push_back(o.relation_vocab[rng.below(o.relation_vocab.size())]);
  } else {
    return "relation";
  }
  return join(rels, " \xE2\x86\x92 ");
}

std::string synth_triple_path(const MockOptions& o, const std::string& question, Rng& rng) {
  if (o.triple_vocab.empty()) return "(unknown, relation, unknown)";
  std::vector<std::string> parts;
  for (const Triple* t : synth_walk(o.triple_vocab, question, rng)) parts.push_back(render_triple(*t));
  return join(parts, " \xE2\x86\x92 ");
}

// Tagged process for a construction prompt: the gold answer is known.
std::string synth_process(const std::string& prompt) {
  std::string answer = line_after(prompt, "### Answer:\n");
  auto paths = numbered_paths(prompt);
  std::string out = "**Reasoning Process**:\n";
  std::size_t step = 1;
  std::vector<std::string> ineffective;
  for (const auto& p : paths) {
    const bool useful = normalize_surface(answer).find(normalize_surface(p.target)) != std::string::npos;
    if (useful) {
      out += "Step " + std::to_string(step++) + ": Follow path #" + std::to_string(p.number) + " to " + p.target +
             ". [<" + p.source + "> <EFFECTIVE>]\n";
    } else {
      ineffective.push_back("#" + std::to_string(p.number));
    }
  }
  if (!ineffective.empty()) {
    out += "Step " + std::to_string(step++) + ": Paths " + join(ineffective, "/") + " do not reach the answer. [<" +
           (paths.empty() ? "KG" : paths.front().source) + "> <INEFFECTIVE>]\n";
  }
  if (step == 1) {
    out += "Step 1: No retrieved path applies; recall that the answer is " + answer +
           ". [<INFERRED> <EFFECTIVE>]\n";
  }
  return out + "Final Answer: " + answer;
}

// Answer for an inference prompt; the gold answer is unknown.
std::string synth_answer(const std::string& prompt, Rng& rng) {
  auto paths = numbered_paths(prompt);
  if (paths.empty()) {
    std::string word = pick_question_word(line_after(prompt, "**Question**: "), rng);
    return "Step 1: Recall facts related to the question. [<INFERRED>]\nFinal Answer: " + word;
  }
  const PromptPath& chosen = paths[rng.below(paths.size())];
  return "Step 1: Path #" + std::to_string(chosen.number) + " leads to " + chosen.target + ". [<" + chosen.source +
         "> <EFFECTIVE>]\nFinal Answer: " + chosen.target;
}

}  // namespace

std::string MockGateway::reply_for(const std::string& prompt, std::uint64_t seed) const {
  auto fx = options_.fixtures.find(fixture_key(prompt));
  if (fx != options_.fixtures.end()) return fx->second;
  Rng rng(seed);
  if (!options_.choices.empty()) {
    double total = 0;
    for (const auto& [_, w] : options_.choices) total += std::max(w, 0.0);
    double x = rng.uniform() * total;
    for (const auto& [text, w] : options_.choices) {
      x -= std::max(w, 0.0);
      if (x < 0) return text;
    }
    return options_.choices.back().first;
  }
  if (prompt.find("**Score Breakdown:**") != std::string::npos) return synth_breakdown(rng);
  if (prompt.find("reasoning relation path") != std::string::npos)
    return synth_relation_path(options_, line_after(prompt, "**Question**: "), rng);
  if (prompt.find("reasoning triple path") != std::string::npos)
    return synth_triple_path(options_, line_after(prompt, "**Question**: "), rng);
  if (prompt.find("### Answer:\n") != std::string::npos) return synth_process(prompt);
  return synth_answer(prompt, rng);
}

double MockGateway::token_logprob(std::uint64_t prompt_hash, std::size_t position, const std::string& token) const {
  if (options_.uniform_vocab) return -std::log(static_cast<double>(*options_.uniform_vocab));
  std::uint64_t h = fnv1a64(hex64(prompt_hash) + ":" + std::to_string(position) + ":" + token);
  Rng r(h ^ options_.seed);
  return -(0.01 + 2.5 * r.uniform());
}

GenerationTrace MockGateway::generate(const std::string& prompt, const GenParams& params) {
  const std::uint64_t ph = fnv1a64(prompt);
  std::string text = reply_for(prompt, mix_seed(options_.seed ^ params.seed, ph));
  for (const auto& s : params.stop) {
    if (s.empty()) continue;
    auto cut = text.find(s);
    if (cut != std::string::npos) text.resize(cut);
  }
  GenerationTrace trace;
  trace.params = params;
  auto pieces = whitespace_tokenize(text);
  if (params.max_tokens >= 0 && pieces.size() > static_cast<std::size_t>(params.max_tokens))
    pieces.resize(static_cast<std::size_t>(params.max_tokens));
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    trace.text += pieces[i];
    trace.tokens.push_back({pieces[i], token_logprob(ph, i, pieces[i])});
  }
  return trace;
}

SequenceScore MockGateway::score_sequence(const std::string& prompt, const std::string& continuation) {
  const std::uint64_t ph = fnv1a64(prompt);
  SequenceScore s;
  auto pieces = whitespace_tokenize(continuation);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    s.tokens.push_back({pieces[i], token_logprob(ph, i, pieces[i])});
    s.total += s.tokens.back().logprob;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Configuration

GatewayConfig gateway_config_from_json(const json& j) {
  GatewayConfig c;
  c.backend = j.value("backend", c.backend);
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.backoff = std::chrono::milliseconds(j.value("backoff_ms", static_cast<long>(c.backoff.count())));
  c.in_flight = j.value("in_flight", c.in_flight);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.supports_scoring = j.value("supports_scoring", c.supports_scoring);
  c.replay_dir = j.value("replay_dir", c.replay_dir);
  c.replay_only = j.value("replay_only", c.replay_only);
  if (j.contains("mock")) {
    const json& m = j["mock"];
    c.mock.seed = m.value("seed", c.mock.seed);
    if (m.contains("uniform_vocab")) c.mock.uniform_vocab = m["uniform_vocab"].get<std::size_t>();
    if (m.contains("fixtures")) {
      for (const auto& [prompt, reply] : m["fixtures"].items()) c.mock.add_fixture(prompt, reply.get<std::string>());
    }
    if (m.contains("choices")) {
      for (const auto& ch : m["choices"]) c.mock.choices.emplace_back(ch.at("text"), ch.value("weight", 1.0));
    }
  }
  if (c.backend != "mock" && c.backend != "http")
    throw ArgumentError("unknown gateway backend '" + c.backend + "'");
  if (c.in_flight == 0) throw ArgumentError("in_flight must be >= 1");
  return c;
}

// ---------------------------------------------------------------------------
// HTTP backend

HttpGateway::HttpGateway(GatewayConfig config) : config_(std::move(config)) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url_re))
    throw ArgumentError("endpoint must be an http(s) URL: '" + config_.endpoint + "'");
  base_url_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : "/";
}

json HttpGateway::request_body(const std::string& prompt, const GenParams& params, std::size_t n) const {
  json body = {{"prompt", prompt},   {"max_tokens", params.max_tokens}, {"temperature", params.temperature},
               {"n", n},             {"logprobs", true},                {"seed", params.seed}};
  if (!config_.model.empty()) body["model"] = config_.model;
  if (!params.stop.empty()) body["stop"] = params.stop;
  return body;
}

namespace {

double checked_logprob(const json& v) {
  if (!v.is_number()) throw GatewayError(GatewayErrorKind::kMalformedReply, "token logprob is not a number");
  double lp = v.get<double>();
  if (!std::isfinite(lp) || lp > 1e-6)
    throw GatewayError(GatewayErrorKind::kMalformedReply, "token logprob out of range: " + v.dump());
  return std::min(lp, 0.0);
}

// Supports {"tokens":[..],"token_logprobs":[..]} and {"content":[{"token","logprob"}]}.
std::vector<TokenLogprob> parse_logprobs(const json& lp) {
  std::vector<TokenLogprob> out;
  if (lp.contains("tokens") && lp.contains("token_logprobs")) {
    const auto& toks = lp["tokens"];
    const auto& vals = lp["token_logprobs"];
    if (!toks.is_array() || !vals.is_array() || toks.size() != vals.size())
      throw GatewayError(GatewayErrorKind::kMalformedReply, "tokens/token_logprobs length mismatch");
    for (std::size_t i = 0; i < toks.size(); ++i) out.push_back({toks[i].get<std::string>(), checked_logprob(vals[i])});
  } else if (lp.contains("content") && lp["content"].is_array()) {
    for (const auto& e : lp["content"]) out.push_back({e.at("token").get<std::string>(), checked_logprob(e.at("logprob"))});
  } else {
    throw GatewayError(GatewayErrorKind::kMalformedReply, "reply has no per-token logprobs");
  }
  return out;
}

}  // namespace

std::vector<GenerationTrace> HttpGateway::parse_reply(const json& reply, const GenParams& params) {
  try {
    if (!reply.contains("choices") || !reply["choices"].is_array())
      throw GatewayError(GatewayErrorKind::kMalformedReply, "reply has no choices array");
    std::vector<GenerationTrace> out;
    for (const auto& c : reply["choices"]) {
      GenerationTrace t;
      t.params = params;
      if (c.contains("text")) {
        t.text = c["text"].get<std::string>();
      } else if (c.contains("message")) {
        t.text = c["message"].at("content").get<std::string>();
      } else {
        throw GatewayError(GatewayErrorKind::kMalformedReply, "choice has no text");
      }
      if (!c.contains("logprobs") || !c["logprobs"].is_object())
        throw GatewayError(GatewayErrorKind::kMalformedReply, "choice has no logprobs");
      t.tokens = parse_logprobs(c["logprobs"]);
      out.push_back(std::move(t));
    }
    return out;
  } catch (const json::exception& e) {
    throw GatewayError(GatewayErrorKind::kMalformedReply, std::string("bad reply field: ") + e.what());
  }
}

json HttpGateway::post_once(const json& body) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return active_ < config_.in_flight; });
    ++active_;
  }
  struct Release {
    HttpGateway* g;
    ~Release() {
      {
        std::lock_guard lock(g->mu_);
        --g->active_;
      }
      g->cv_.notify_one();
    }
  } release{this};

  httplib::Client cli(base_url_);
  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw GatewayError(GatewayErrorKind::kTransport, "request failed: " + httplib::to_string(res.error()));
  if (res->status == 429) throw GatewayError(GatewayErrorKind::kRateLimit, "rate limited (HTTP 429)");
  if (res->status >= 500)
    throw GatewayError(GatewayErrorKind::kTransport, "server error HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw GatewayError(GatewayErrorKind::kMalformedReply, "unexpected HTTP " + std::to_string(res->status));
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw GatewayError(GatewayErrorKind::kMalformedReply, std::string("reply is not JSON: ") + e.what());
  }
}

json HttpGateway::post(const json& body) {
  for (int attempt = 0;; ++attempt) {
    try {
      return post_once(body);
    } catch (const GatewayError& e) {
      if (!e.retryable() || attempt >= config_.max_retries) throw;
      std::this_thread::sleep_for(config_.backoff * (1 << attempt));
    }
  }
}

GenerationTrace HttpGateway::generate(const std::string& prompt, const GenParams& params) {
  auto traces = parse_reply(post(request_body(prompt, params, 1)), params);
  if (traces.empty()) throw GatewayError(GatewayErrorKind::kMalformedReply, "reply has no choices");
  return traces.front();
}

std::vector<GenerationTrace> HttpGateway::generate_topk(const std::string& prompt, std::size_t k,
                                                        const GenParams& params) {
  if (k == 0) throw ArgumentError("generate_topk: k must be >= 1");
  GenParams p = params;
  p.top_k_sequences = k;
  return rank_candidates(parse_reply(post(request_body(prompt, p, k)), p), k);
}

SequenceScore HttpGateway::score_sequence(const std::string& prompt, const std::string& continuation) {
  if (!config_.supports_scoring)
    throw GatewayError(GatewayErrorKind::kUnsupported, "backend is not configured for sequence scoring");
  if (continuation.empty()) return {};
  json body = {{"prompt", prompt + continuation}, {"max_tokens", 0}, {"echo", true}, {"logprobs", 1},
               {"temperature", 0.0}};
  if (!config_.model.empty()) body["model"] = config_.model;
  json reply = post(body);
  try {
    const json& lp = reply.at("choices").at(0).at("logprobs");
    const json& toks = lp.at("tokens");
    const json& vals = lp.at("token_logprobs");
    std::vector<std::size_t> offsets;
    if (lp.contains("text_offset")) {
      offsets = lp["text_offset"].get<std::vector<std::size_t>>();
    } else {
      std::size_t off = 0;
      for (const auto& t : toks) {
        offsets.push_back(off);
        off += t.get<std::string>().size();
      }
    }
    SequenceScore s;
    for (std::size_t i = 0; i < toks.size() && i < offsets.size(); ++i) {
      if (offsets[i] < prompt.size()) continue;
      s.tokens.push_back({toks[i].get<std::string>(), checked_logprob(vals.at(i))});
      s.total += s.tokens.back().logprob;
    }
    return s;
  } catch (const json::exception& e) {
    throw GatewayError(GatewayErrorKind::kMalformedReply, std::string("bad echo reply: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Replay cache

ReplayGateway::ReplayGateway(std::filesystem::path dir, std::shared_ptr<Gateway> inner)
    : dir_(std::move(dir)), inner_(std::move(inner)) {
  std::filesystem::create_directories(dir_);
}

std::optional<json> ReplayGateway::lookup(const std::string& key) {
  std::lock_guard lock(mu_);
  auto path = dir_ / (key + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error&) {
    throw GatewayError(GatewayErrorKind::kMalformedReply, "corrupt replay entry " + path.string());
  }
}

void ReplayGateway::store(const std::string& key, const json& value) {
  std::lock_guard lock(mu_);
  write_file_atomic(dir_ / (key + ".json"), value.dump());
}

namespace {

std::string replay_key(const std::string& kind, const std::string& a, const std::string& b) {
  return kind + "-" + hex64(fnv1a64(kind + '\x1f' + a + '\x1f' + b));
}

[[noreturn]] void replay_miss(const std::string& key) {
  throw GatewayError(GatewayErrorKind::kUnavailable, "no recorded reply for " + key + " and no live backend");
}

}  // namespace

GenerationTrace ReplayGateway::generate(const std::string& prompt, const GenParams& params) {
  const std::string key = replay_key("gen", prompt, to_json(params).dump());
  if (auto hit = lookup(key)) return trace_from_json(*hit);
  if (!inner_) replay_miss(key);
  GenerationTrace t = inner_->generate(prompt, params);
  store(key, to_json(t));
  return t;
}

std::vector<GenerationTrace> ReplayGateway::generate_topk(const std::string& prompt, std::size_t k,
                                                          const GenParams& params) {
  const std::string key = replay_key("topk" + std::to_string(k), prompt, to_json(params).dump());
  std::vector<GenerationTrace> out;
  if (auto hit = lookup(key)) {
    for (const auto& t : *hit) out.push_back(trace_from_json(t));
    return out;
  }
  if (!inner_) replay_miss(key);
  out = inner_->generate_topk(prompt, k, params);
  json arr = json::array();
  for (const auto& t : out) arr.push_back(to_json(t));
  store(key, arr);
  return out;
}

SequenceScore ReplayGateway::score_sequence(const std::string& prompt, const std::string& continuation) {
  const std::string key = replay_key("score", prompt, continuation);
  if (auto hit = lookup(key)) {
    GenerationTrace t = trace_from_json(*hit);
    return {t.total_logprob(), t.tokens};
  }
  if (!inner_) replay_miss(key);
  SequenceScore s = inner_->score_sequence(prompt, continuation);
  GenerationTrace t;
  t.text = continuation;
  t.tokens = s.tokens;
  store(key, to_json(t));
  return s;
}

std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config) {
  std::shared_ptr<Gateway> live;
  if (!config.replay_only) {
    if (config.backend == "mock") {
      live = std::make_shared<MockGateway>(config.mock);
    } else {
      live = std::make_shared<HttpGateway>(config);
    }
  }
  if (config.replay_dir.empty()) {
    if (!live) throw ArgumentError("replay_only requires replay_dir");
    return live;
  }
  return std::make_shared<ReplayGateway>(config.replay_dir, live);
}

}  // namespace kgtraces
