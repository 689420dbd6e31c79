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

#ifndef TOD_TOPIC_MANAGER_HPP_
#define TOD_TOPIC_MANAGER_HPP_

#include <span>
#include <string>
#include <vector>

#include "tod/core.hpp"
#include "tod/llm.hpp"
#include "tod/topic_stack.hpp"

namespace tod {

struct CatalogEntry {
  ActionKind kind;
  std::string description;
  // Shown after the kind name, e.g. ": <topic id>".
  std::string payload_schema;
};

// The actions the manager may choose from. The full profile carries all five
// kinds; the simplified profile drops jump_to and load_topics.
//
// Tool/API actions would be added here as further entries; none ship today.
class ActionCatalog {
 public:
  // Descriptions come from the pack's action_*.txt templates when present.
  static ActionCatalog for_profile(PromptProfile profile, const PromptPack* pack = nullptr,
                                   const std::string& task_id = {});

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  PromptProfile profile() const { return profile_; }
  bool contains(ActionKind kind) const;
  bool empty() const { return entries_.empty(); }

  // Listing bound into the manager prompt's {actions} slot.
  std::string render() const;

 private:
  std::vector<CatalogEntry> entries_;
  PromptProfile profile_ = PromptProfile::full;
};

std::string action_template_name(ActionKind kind);

class ParseError : public Error {
 public:
  enum class Reason {
    no_action,
    unknown_kind,
    kind_not_in_catalog,
    missing_payload,
    invalid_jump_target,
    task_mismatch,
    not_allowed_on_empty_stack,
    multiple_actions,
  };

  ParseError(Reason reason, const std::string& what) : Error(what), reason_(reason) {}

  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

// Extracts the single action in `text`. Accepts "<kind>" or "<kind>: <payload>"
// anywhere in surrounding prose; a bare load_topics means the session task.
Action parse_action_output(std::string_view text, const TopicStack& stack, const ActionCatalog& catalog,
                           const std::string& session_task_id);

struct ActionDecision {
  Action action;
  std::string raw_output;
  bool repaired = false;
  bool fallback_used = false;
  // Parse failures seen along the way, in order.
  std::vector<std::string> errors;

  friend bool operator==(const ActionDecision&, const ActionDecision&) = default;
};

struct ManagerInput {
  std::string_view query;
  const TopicStack& stack;
  std::span<const ChatMessage> history;
  const TaskDefinition& task;
};

// One manager call, at most one repair call, then stay_current as fallback.
// Gateway errors propagate.
ActionDecision decide_action(const ManagerInput& input, const ActionCatalog& catalog, const Gateway& gateway);

// "User: ..." / "System: ..." lines.
std::string render_history(std::span<const ChatMessage> history);

void to_json(json& j, const ActionDecision& v);
void from_json(const json& j, ActionDecision& v);

}  // namespace tod

#endif  // TOD_TOPIC_MANAGER_HPP_
