// Copyright 2026 The tod-engine Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TOD_EVALUATION_HPP_
#define TOD_EVALUATION_HPP_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tod/core.hpp"
#include "tod/llm.hpp"
#include "tod/pipeline.hpp"

namespace tod {

enum class Termination { completion, user_done, max_rounds, error };

struct Transcript {
  std::string task_id;
  std::string system_label;
  std::vector<ChatMessage> messages;
  int rounds = 0;
  Termination terminated_by = Termination::max_rounds;
  // Per checklist item; filled by systems that track their own progress.
  std::optional<std::vector<bool>> checklist_marks;
  std::string error;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

struct SystemReply {
  std::string text;
  bool complete = false;
};

// A dialogue system under evaluation.
class DialogueSystem {
 public:
  virtual ~DialogueSystem() = default;
  virtual std::string label() const = 0;
  virtual void begin(const TaskDefinition& task) = 0;
  virtual SystemReply reply(std::string_view user_message) = 0;
  virtual std::optional<std::vector<bool>> checklist_marks() const { return std::nullopt; }
};

// The stack-based engine.
class EngineSystem : public DialogueSystem {
 public:
  explicit EngineSystem(const Engine& engine, std::string label = "engine");

  std::string label() const override { return label_; }
  void begin(const TaskDefinition& task) override;
  SystemReply reply(std::string_view user_message) override;
  std::optional<std::vector<bool>> checklist_marks() const override;

  const SessionState& session() const { return session_; }
  const std::vector<TurnResult>& turns() const { return turns_; }

 private:
  const Engine& engine_;
  std::string label_;
  SessionState session_;
  std::vector<TurnResult> turns_;
};

// Single chat prompt holding goal and checklist, no topic stack.
class BaselineSystem : public DialogueSystem {
 public:
  explicit BaselineSystem(std::shared_ptr<const Gateway> gateway, std::string label = "baseline");

  std::string label() const override { return label_; }
  void begin(const TaskDefinition& task) override;
  SystemReply reply(std::string_view user_message) override;

 private:
  std::shared_ptr<const Gateway> gateway_;
  std::string label_;
  TaskDefinition task_;
  std::vector<ChatMessage> history_;
};

inline constexpr std::string_view kDoneToken = "[DONE]";

struct SimulatedUtterance {
  std::string text;
  bool done = false;
};

SimulatedUtterance simulate_user(const TaskDefinition& task, std::span<const ChatMessage> history,
                                 const Gateway& gateway);

inline constexpr int kDefaultMaxRounds = 20;

// Alternates simulator and system turns until the system completes, the
// simulator emits [DONE], or max_rounds rounds have run. Errors end the
// episode with terminated_by=error and the completed rounds kept.
Transcript run_episode(DialogueSystem& system, const TaskDefinition& task, const Gateway& simulator,
                       int max_rounds = kDefaultMaxRounds, const Clock& clock = system_clock());

class VerdictParseError : public Error {
 public:
  using Error::Error;
};

// Evaluation criteria bound into both judge templates.
const std::vector<std::pair<std::string, std::string>>& judge_criteria();

struct GradeVerdict {
  std::string task_id;
  double rq = 1.0;
  std::vector<bool> per_item;
  int success = 0;
  bool clamped = false;
  bool repaired = false;

  friend bool operator==(const GradeVerdict&, const GradeVerdict&) = default;
};

// Expects a JSON object {"rq": n, "items": [bool...], "success": 0|1}.
GradeVerdict parse_grade_verdict(std::string_view text, std::size_t checklist_size);

GradeVerdict judge_grade(const Transcript& transcript, const TaskDefinition& task, const Gateway& gateway);

enum class Winner { a, b, tie };

struct ComparisonOutcome {
  std::string task_id;
  std::string label_a;
  std::string label_b;
  Winner run1 = Winner::tie;
  Winner run2 = Winner::tie;
  double score_a = 0.5;
  double score_b = 0.5;
  // Set when a run's verdict could not be parsed and was scored as a tie.
  bool flagged = false;

  friend bool operator==(const ComparisonOutcome&, const ComparisonOutcome&) = default;
};

// Position of the preferred transcript in a comparison prompt.
enum class Position { first, second, tie };

Position parse_compare_verdict(std::string_view text);

// Per-run score for side A: win 1, tie 0.5, loss 0.
double run_score(Winner winner, bool for_a);

ComparisonOutcome score_comparison(std::string task_id, std::string label_a, std::string label_b, Winner run1,
                                   Winner run2);

// Two judge calls: run 1 shows A first, run 2 shows B first.
ComparisonOutcome judge_compare(const Transcript& a, const Transcript& b, const TaskDefinition& task,
                                const Gateway& gateway);

struct MetricsReport {
  std::string system_label;
  std::optional<double> rc;
  double cr = 0.0;
  double sr = 0.0;
  std::optional<double> rq;
  std::optional<double> cs;
  int n_tasks = 0;
  int n_finished = 0;
  int n_max_rounds = 0;
  int n_error = 0;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

// RC averages rounds over episodes that reached their goal (completion or
// [DONE]). CR and SR use the system's own checklist marks when present and
// the judge verdict otherwise. CS sums this system's comparison scores.
MetricsReport compute_metrics(std::span<const Transcript> transcripts, std::span<const GradeVerdict> verdicts,
                              std::span<const ComparisonOutcome> outcomes);

std::string render_metrics_table(std::span<const MetricsReport> reports);

void to_json(json& j, const Transcript& v);
void from_json(const json& j, Transcript& v);
void to_json(json& j, const GradeVerdict& v);
void from_json(const json& j, GradeVerdict& v);
void to_json(json& j, const ComparisonOutcome& v);
void from_json(const json& j, ComparisonOutcome& v);
void to_json(json& j, const MetricsReport& v);

NLOHMANN_JSON_SERIALIZE_ENUM(Termination, {{Termination::completion, "completion"},
                                           {Termination::user_done, "user_done"},
                                           {Termination::max_rounds, "max_rounds"},
                                           {Termination::error, "error"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Winner, {{Winner::a, "A"}, {Winner::b, "B"}, {Winner::tie, "tie"}})

}  // namespace tod

#endif  // TOD_EVALUATION_HPP_
