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

#ifndef TOD_CORE_HPP_
#define TOD_CORE_HPP_

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tod {

using json = nlohmann::json;

// Base for every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Session-scoped topic identifier. Assigned monotonically at creation.
struct TopicId {
  std::int64_t value = 0;

  friend auto operator<=>(const TopicId&, const TopicId&) = default;
};

std::string to_string(TopicId id);

enum class Origin { predefined, user_created };
enum class Category { ask_user, answer_user };
enum class TopicStatus { pending, active, finished, evicted };
enum class Speaker { user, system };
enum class ActionKind { load_topics, create_topic, finish_current, stay_current, jump_to };
enum class Completion { in_progress, report_pending, complete };

std::string_view to_string(Origin v);
std::string_view to_string(Category v);
std::string_view to_string(TopicStatus v);
std::string_view to_string(Speaker v);
std::string_view to_string(ActionKind v);
std::string_view to_string(Completion v);

std::optional<ActionKind> action_kind_from_string(std::string_view name);

inline constexpr std::size_t kMaxTopicTitle = 200;

struct Topic {
  TopicId id;
  std::string title;
  Origin origin = Origin::user_created;
  Category category = Category::answer_user;
  int created_round = 1;
  int last_active_round = 1;
  TopicStatus status = TopicStatus::pending;
  // Checklist item this topic was loaded from; empty for user-created topics.
  std::string item_id;

  friend bool operator==(const Topic&, const Topic&) = default;
};

Category default_category(Origin origin);

struct ChecklistItem {
  std::string item_id;
  std::string title;
  std::string description;

  friend bool operator==(const ChecklistItem&, const ChecklistItem&) = default;
};

struct TaskDefinition {
  std::string task_id;
  std::string scenario;
  std::string system_role;
  std::string goal;
  std::vector<ChecklistItem> checklist;
  std::vector<std::string> knowledge;
  // Free-form provenance marker ("reconstructed" for the bundled dataset).
  std::string provenance;

  const ChecklistItem* find_item(std::string_view item_id) const;

  friend bool operator==(const TaskDefinition&, const TaskDefinition&) = default;
};

inline constexpr std::size_t kChecklistSize = 6;

struct Violation {
  enum class Kind { checklist_size, duplicate_item_id, empty_item_id, empty_goal, empty_task_id };

  Kind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  // True when the only problems are checklist-size violations.
  bool ok_except_size() const;
  std::string summary() const;
};

// Schema conformance check. Violations are returned as data, never thrown.
ValidationReport validate_task(const TaskDefinition& task);

struct ChatMessage {
  int round = 1;
  Speaker speaker = Speaker::user;
  std::string text;
  // Milliseconds since the Unix epoch.
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// One stack command. The payload is kind-dependent: the topic title for
// create_topic, the decimal topic id for jump_to, the task id for
// load_topics, and empty otherwise.
class Action {
 public:
  Action() = default;

  static Action load_topics(std::string task_id);
  static Action create_topic(std::string title);
  static Action finish_current();
  static Action stay_current();
  static Action jump_to(TopicId target);

  // Builds an action from a kind and raw payload, enforcing the payload rule.
  static Action make(ActionKind kind, std::string payload);

  // Strict inverse of to_text(): "<kind>" or "<kind>: <payload>".
  static Action from_text(std::string_view text);

  ActionKind kind() const { return kind_; }
  const std::string& payload() const { return payload_; }
  TopicId jump_target() const;

  std::string to_text() const;

  friend bool operator==(const Action&, const Action&) = default;

 private:
  Action(ActionKind kind, std::string payload) : kind_(kind), payload_(std::move(payload)) {}

  ActionKind kind_ = ActionKind::stay_current;
  std::string payload_;
};

bool requires_payload(ActionKind kind);

// Text helpers shared by the parsers.
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// JSON mapping. Field names follow the type definitions above.
void to_json(json& j, const TopicId& v);
void from_json(const json& j, TopicId& v);
void to_json(json& j, const Topic& v);
void from_json(const json& j, Topic& v);
void to_json(json& j, const ChecklistItem& v);
void from_json(const json& j, ChecklistItem& v);
void to_json(json& j, const TaskDefinition& v);
void from_json(const json& j, TaskDefinition& v);
void to_json(json& j, const ChatMessage& v);
void from_json(const json& j, ChatMessage& v);
void to_json(json& j, const Action& v);
void from_json(const json& j, Action& v);

NLOHMANN_JSON_SERIALIZE_ENUM(Origin, {{Origin::predefined, "predefined"},
                                      {Origin::user_created, "user_created"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Category, {{Category::ask_user, "ask_user"},
                                        {Category::answer_user, "answer_user"}})
NLOHMANN_JSON_SERIALIZE_ENUM(TopicStatus, {{TopicStatus::pending, "pending"},
                                           {TopicStatus::active, "active"},
                                           {TopicStatus::finished, "finished"},
                                           {TopicStatus::evicted, "evicted"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Speaker, {{Speaker::user, "user"}, {Speaker::system, "system"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ActionKind, {{ActionKind::load_topics, "load_topics"},
                                          {ActionKind::create_topic, "create_topic"},
                                          {ActionKind::finish_current, "finish_current"},
                                          {ActionKind::stay_current, "stay_current"},
                                          {ActionKind::jump_to, "jump_to"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Completion, {{Completion::in_progress, "in_progress"},
                                          {Completion::report_pending, "report_pending"},
                                          {Completion::complete, "complete"}})

}  // namespace tod

#endif  // TOD_CORE_HPP_
