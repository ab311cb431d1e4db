#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "kgtraces/path_engine.h"
#include "kgtraces/prompts.h"
#include "kgtraces/qa.h"
#include "kgtraces/text.h"

namespace fixtures {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag = "t") {
    path = std::filesystem::temp_directory_path() /
           ("kgtraces-" + tag + "-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

inline std::string data_path(const std::string& rel) { return std::string(KGTRACES_TEST_DATA) + "/" + rel; }

inline std::string golden(const std::string& name) { return kgtraces::read_file(data_path("golden/" + name)); }

inline kgtraces::QAInstance golden_instance() {
  kgtraces::QAInstance q;
  q.id = "golden";
  q.question = "Which mascot belongs to a team in the American League West?";
  q.question_entities = {"American League West"};
  q.answers = {"Mariner Moose"};
  return q;
}

inline std::vector<kgtraces::AnnotatedPath> golden_paths() {
  using kgtraces::ReasoningPath;
  ReasoningPath kg{{{"American League West", "teams", "Seattle Mariners"},
                    {"Seattle Mariners", "mascot", "Mariner Moose"}}};
  ReasoningPath inferred{{{"American League West", "teams", "Houston Astros"},
                          {"Houston Astros", "mascot", "Orbit"}}};
  return {kgtraces::annotate(kg, kgtraces::PathSource::kKG),
          kgtraces::annotate(inferred, kgtraces::PathSource::kInferred)};
}

inline const char* kMedicalReference = "The patient likely has influenza; rest and fluids are advised.";
inline const char* kMedicalAnswer = "It sounds like the flu. Rest, drink fluids, and see a doctor if it worsens.";

}  // namespace fixtures
