#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kgtraces/error.h"
#include "kgtraces/kg_store.h"

namespace kgtraces {

struct GenParams {
  int max_tokens = 512;
  double temperature = 0.0;
  std::size_t top_k_sequences = 1;  // beam width
  std::uint64_t seed = 0;
  std::vector<std::string> stop;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;

  bool operator==(const TokenLogprob&) const = default;
};

struct GenerationTrace {
  std::string text;
  std::vector<TokenLogprob> tokens;
  std::optional<std::string> prompt_echo;
  GenParams params;

  double total_logprob() const;
  bool operator==(const GenerationTrace& o) const { return text == o.text && tokens == o.tokens; }
};

struct SequenceScore {
  double total = 0.0;
  std::vector<TokenLogprob> tokens;
};

nlohmann::json to_json(const GenParams& p);
GenParams gen_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenerationTrace& t);
GenerationTrace trace_from_json(const nlohmann::json& j);

enum class GatewayErrorKind { kTransport, kRateLimit, kMalformedReply, kUnsupported, kUnavailable };

class GatewayError : public Error {
 public:
  GatewayError(GatewayErrorKind kind, const std::string& message) : Error(message), kind_(kind) {}
  GatewayErrorKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept {
    return kind_ == GatewayErrorKind::kTransport || kind_ == GatewayErrorKind::kRateLimit;
  }

 private:
  GatewayErrorKind kind_;
};

// A text-generation service with per-token log-probabilities.
// Implementations must be safe to call from several threads at once.
class Gateway {
 public:
  virtual ~Gateway() = default;

  virtual GenerationTrace generate(const std::string& prompt, const GenParams& params) = 0;

  // At most k distinct sequences, highest total log-probability first.
  // The default draws k samples with derived seeds and ranks them.
  virtual std::vector<GenerationTrace> generate_topk(const std::string& prompt, std::size_t k, const GenParams& params);

  virtual SequenceScore score_sequence(const std::string& prompt, const std::string& continuation) = 0;
};

// Dedups by text (keeping the better score), stable-sorts by descending
// total log-probability and truncates to k.
std::vector<GenerationTrace> rank_candidates(std::vector<GenerationTrace> candidates, std::size_t k);

// Splits text into tokens that concatenate back to it: each token is a run
// of whitespace followed by a run of non-whitespace.
std::vector<std::string> whitespace_tokenize(const std::string& text);

struct MockOptions {
  std::uint64_t seed = 0;
  // Replies keyed by fixture_key(prompt).
  std::map<std::string, std::string> fixtures;
  // Weighted canned replies used when no fixture matches.
  std::vector<std::pair<std::string, double>> choices;
  // When set every token scores ln(1 / uniform_vocab).
  std::optional<std::size_t> uniform_vocab;
  // Vocabulary for synthesized path predictions.
  std::vector<RelationId> relation_vocab;
  std::vector<Triple> triple_vocab;

  void add_fixture(const std::string& prompt, std::string reply);
};

std::string fixture_key(const std::string& prompt);

// Offline backend. Output is a pure function of (options, prompt, params).
//
// Without a fixture or canned choice the reply is synthesized from the prompt
// shape: relation or triple paths for path-construction prompts, a score
// breakdown for judge prompts, and a tagged step-by-step process ending in
// "Final Answer:" otherwise. Token log-probabilities depend only on the
// prompt, the token position and the token, so score_sequence(prompt, text)
// reproduces the log-probabilities of generate(prompt).
class MockGateway : public Gateway {
 public:
  explicit MockGateway(MockOptions options = {}) : options_(std::move(options)) {}

  GenerationTrace generate(const std::string& prompt, const GenParams& params) override;
  SequenceScore score_sequence(const std::string& prompt, const std::string& continuation) override;

  const MockOptions& options() const { return options_; }

 private:
  std::string reply_for(const std::string& prompt, std::uint64_t seed) const;
  double token_logprob(std::uint64_t prompt_hash, std::size_t position, const std::string& token) const;

  MockOptions options_;
};

struct GatewayConfig {
  std::string backend = "mock";  // mock | http
  std::string endpoint;          // e.g. http://localhost:8000/v1/completions
  std::string model;
  double timeout_s = 60.0;
  int max_retries = 3;
  std::chrono::milliseconds backoff{200};
  std::size_t in_flight = 4;
  std::string api_key_env = "GATEWAY_API_KEY";
  bool supports_scoring = false;
  std::string replay_dir;  // empty = no replay cache
  bool replay_only = false;
  MockOptions mock;
};

// Reads the JSON config. Unknown keys are ignored; secrets are never read
// from the file, only the name of the environment variable holding them.
GatewayConfig gateway_config_from_json(const nlohmann::json& j);

// Completion-style HTTP JSON backend.
class HttpGateway : public Gateway {
 public:
  explicit HttpGateway(GatewayConfig config);

  GenerationTrace generate(const std::string& prompt, const GenParams& params) override;
  std::vector<GenerationTrace> generate_topk(const std::string& prompt, std::size_t k, const GenParams& params) override;
  SequenceScore score_sequence(const std::string& prompt, const std::string& continuation) override;

  // Request body for one completion call.
  nlohmann::json request_body(const std::string& prompt, const GenParams& params, std::size_t n) const;
  // Maps a completion reply to traces. Throws kMalformedReply.
  static std::vector<GenerationTrace> parse_reply(const nlohmann::json& reply, const GenParams& params);

 private:
  nlohmann::json post(const nlohmann::json& body);
  nlohmann::json post_once(const nlohmann::json& body);

  GatewayConfig config_;
  std::string base_url_;
  std::string path_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t active_ = 0;
};

// Records every reply under a directory and serves recorded replies back.
// With no inner gateway it is a pure replay source and a miss is kUnavailable.
class ReplayGateway : public Gateway {
 public:
  ReplayGateway(std::filesystem::path dir, std::shared_ptr<Gateway> inner);

  GenerationTrace generate(const std::string& prompt, const GenParams& params) override;
  std::vector<GenerationTrace> generate_topk(const std::string& prompt, std::size_t k, const GenParams& params) override;
  SequenceScore score_sequence(const std::string& prompt, const std::string& continuation) override;

 private:
  std::optional<nlohmann::json> lookup(const std::string& key);
  void store(const std::string& key, const nlohmann::json& value);

  std::filesystem::path dir_;
  std::shared_ptr<Gateway> inner_;
  std::mutex mu_;
};

std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config);

}  // namespace kgtraces
