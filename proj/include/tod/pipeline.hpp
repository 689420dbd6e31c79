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

#ifndef TOD_PIPELINE_HPP_
#define TOD_PIPELINE_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tod/core.hpp"
#include "tod/llm.hpp"
#include "tod/topic_manager.hpp"
#include "tod/topic_stack.hpp"

namespace tod {

class SessionError : public Error {
 public:
  enum class Kind { invalid_task, session_complete, empty_response, replay_mismatch };

  SessionError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::string_view kReportItemId = "final_report";

struct SessionState {
  std::string session_id;
  TaskDefinition task;
  TopicStack stack;
  std::vector<ChatMessage> history;
  // Index of the round the next user message opens.
  int round = 1;
  Completion completion = Completion::in_progress;
  // Opening line shown before round 1; not part of `history`.
  std::string greeting;
  std::optional<TopicId> report_topic;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

struct ContextDigest {
  std::vector<ChatMessage> recent_turns;
  std::optional<std::string> older_summary;
  int total_rounds = 0;
  std::size_t total_messages = 0;
  // Set when the summary fell back to plain truncation.
  bool degraded = false;

  std::string render() const;
};

enum class Directive { ask_user, answer_user, open_chat };

std::string_view to_string(Directive d);

struct EnrichedTopic {
  Directive directive = Directive::open_chat;
  std::string instruction;
  std::optional<TopicId> source_topic_id;
  // Set when the instruction was built without the enricher model.
  bool degraded = false;

  friend bool operator==(const EnrichedTopic&, const EnrichedTopic&) = default;
};

struct TurnResult {
  int round = 0;
  std::string user_message;
  std::int64_t user_timestamp_ms = 0;
  std::string response;
  std::int64_t response_timestamp_ms = 0;
  ActionDecision decision;
  StackDelta delta;
  std::vector<TopicId> evicted;
  EnrichedTopic enriched;
  Completion completion = Completion::in_progress;

  friend bool operator==(const TurnResult&, const TurnResult&) = default;
};

struct CompletionStatus {
  Completion completion = Completion::in_progress;
  ChecklistProgress progress;
};

// Milliseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;

Clock system_clock();

struct EngineConfig {
  int eviction_window = kDefaultEvictionWindow;
  // Messages kept verbatim in the context digest.
  int context_window = 10;
  PromptProfile profile = PromptProfile::full;
  // When true any gateway failure aborts the turn; otherwise the context and
  // enricher stages degrade to template-only output.
  bool strict_gateway = true;
  std::string report_title = "final report";
  std::size_t response_budget = 16384;
};

// Runs the four per-round stages: decide action, maintain the stack, enrich
// the current topic, generate the response.
class Engine {
 public:
  Engine(std::shared_ptr<const Gateway> gateway, EngineConfig config = {}, Clock clock = system_clock());

  const EngineConfig& config() const { return config_; }
  const Gateway& gateway() const { return *gateway_; }

  SessionState start_session(const TaskDefinition& task, std::string session_id = {}) const;

  // Enriches the first topic and produces the opening line.
  void greet(SessionState& session) const;

  ContextDigest build_context(std::span<const ChatMessage> history) const;

  EnrichedTopic enrich_topic(const Topic* topic, const ContextDigest& digest, const TaskDefinition& task,
                             bool task_complete = false) const;

  std::string generate_response(const EnrichedTopic& enriched, const ContextDigest& digest,
                                const TaskDefinition& task) const;

  // Atomic: on any error `session` is left exactly as it was.
  TurnResult take_turn(SessionState& session, std::string_view user_message) const;

  // Replays a recorded turn onto `session` without any model calls.
  static void apply_turn_result(SessionState& session, const TurnResult& result);

  static CompletionStatus completion_status(const SessionState& session);

 private:
  std::vector<ChatMessage> prompt_history(const SessionState& session) const;
  void update_completion(SessionState& session, StackDelta& delta, int round) const;

  std::shared_ptr<const Gateway> gateway_;
  EngineConfig config_;
  Clock clock_;
};

void to_json(json& j, const SessionState& v);
void from_json(const json& j, SessionState& v);
void to_json(json& j, const EnrichedTopic& v);
void from_json(const json& j, EnrichedTopic& v);
void to_json(json& j, const TurnResult& v);
void from_json(const json& j, TurnResult& v);
void to_json(json& j, const ContextDigest& v);

NLOHMANN_JSON_SERIALIZE_ENUM(Directive, {{Directive::ask_user, "ask_user"},
                                         {Directive::answer_user, "answer_user"},
                                         {Directive::open_chat, "open_chat"}})

}  // namespace tod

#endif  // TOD_PIPELINE_HPP_
