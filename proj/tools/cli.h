#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace kgtraces::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kGatewayError = 3,
  kConfigError = 4,
  kInternalError = 5,
};

inline constexpr int kDefaultBeamK = 3;
inline constexpr int kDefaultSampleN = 30;

// Shared settings. A --config JSON file fills these first; flags override.
struct RunConfig {
  std::string kg_path;
  std::string qa_path;
  std::string gateway_path;    // JSON gateway config file
  nlohmann::json gateway;      // inline "gateway" object from --config
  std::optional<int> max_hops; // default depends on the command
  int beam_k = kDefaultBeamK;
  std::vector<int> beams = {1, 2, 3, 4, 5};
  int n_stages = 5;
  std::string stage_unit = "tokens";
  int runs = 10;
  int judge_runs = 3;
  int sample_n = kDefaultSampleN;
  std::size_t samples_per_instance = 1;
  std::size_t max_prompt_paths = 0;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out_dir;
  std::string variant = "kg-rel";
  std::string mode = "qa";
  std::string hits1_mode = "any_match";
  std::string input_path;
};

// Applies a --config document onto `cfg`. Unknown keys are rejected.
void apply_config_json(const nlohmann::json& j, RunConfig& cfg);

// Runs one invocation (args excludes the program name) and returns the
// process exit status. Diagnostics go to `err`, summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Answers parsed from a model reply: the "Final Answer:" clause when the
// reply is a reasoning process, else the last non-empty line.
std::vector<std::string> answers_from_output(const std::string& text);

}  // namespace kgtraces::cli
