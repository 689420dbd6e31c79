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

#include "tod/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace tod {

std::string to_string(TopicId id) { return std::to_string(id.value); }

std::string_view to_string(Origin v) {
  return v == Origin::predefined ? "predefined" : "user_created";
}

std::string_view to_string(Category v) {
  return v == Category::ask_user ? "ask_user" : "answer_user";
}

std::string_view to_string(TopicStatus v) {
  switch (v) {
    case TopicStatus::pending: return "pending";
    case TopicStatus::active: return "active";
    case TopicStatus::finished: return "finished";
    case TopicStatus::evicted: return "evicted";
  }
  return "pending";
}

std::string_view to_string(Speaker v) { return v == Speaker::user ? "user" : "system"; }

std::string_view to_string(ActionKind v) {
  switch (v) {
    case ActionKind::load_topics: return "load_topics";
    case ActionKind::create_topic: return "create_topic";
    case ActionKind::finish_current: return "finish_current";
    case ActionKind::stay_current: return "stay_current";
    case ActionKind::jump_to: return "jump_to";
  }
  return "stay_current";
}

std::string_view to_string(Completion v) {
  switch (v) {
    case Completion::in_progress: return "in_progress";
    case Completion::report_pending: return "report_pending";
    case Completion::complete: return "complete";
  }
  return "in_progress";
}

std::optional<ActionKind> action_kind_from_string(std::string_view name) {
  for (auto kind : {ActionKind::load_topics, ActionKind::create_topic, ActionKind::finish_current,
                    ActionKind::stay_current, ActionKind::jump_to}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

Category default_category(Origin origin) {
  return origin == Origin::predefined ? Category::ask_user : Category::answer_user;
}

const ChecklistItem* TaskDefinition::find_item(std::string_view item_id) const {
  for (const auto& item : checklist) {
    if (item.item_id == item_id) return &item;
  }
  return nullptr;
}

bool ValidationReport::ok_except_size() const {
  return std::all_of(violations.begin(), violations.end(),
                     [](const Violation& v) { return v.kind == Violation::Kind::checklist_size; });
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& v : violations) out += (out.empty() ? "" : "; ") + v.message;
  return out;
}

ValidationReport validate_task(const TaskDefinition& task) {
  using Kind = Violation::Kind;
  ValidationReport report;
  if (task.task_id.empty()) report.violations.push_back({Kind::empty_task_id, "task_id is empty"});
  if (trim(task.goal).empty()) report.violations.push_back({Kind::empty_goal, "goal is empty"});
  if (task.checklist.size() != kChecklistSize) {
    report.violations.push_back({Kind::checklist_size, "checklist size " + std::to_string(task.checklist.size()) +
                                                           " ≠ " + std::to_string(kChecklistSize)});
  }
  std::set<std::string> seen;
  std::set<std::string> reported;
  for (const auto& item : task.checklist) {
    if (item.item_id.empty()) {
      report.violations.push_back({Kind::empty_item_id, "checklist item with empty item_id"});
      continue;
    }
    if (!seen.insert(item.item_id).second && reported.insert(item.item_id).second) {
      report.violations.push_back({Kind::duplicate_item_id, "duplicate item_id \"" + item.item_id + "\""});
    }
  }
  return report;
}

bool requires_payload(ActionKind kind) {
  return kind == ActionKind::load_topics || kind == ActionKind::create_topic ||
         kind == ActionKind::jump_to;
}

namespace {

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

Action Action::load_topics(std::string task_id) {
  return make(ActionKind::load_topics, std::move(task_id));
}

Action Action::create_topic(std::string title) {
  return make(ActionKind::create_topic, std::move(title));
}

Action Action::finish_current() { return Action(ActionKind::finish_current, {}); }

Action Action::stay_current() { return Action(ActionKind::stay_current, {}); }

Action Action::jump_to(TopicId target) { return Action(ActionKind::jump_to, to_string(target)); }

Action Action::make(ActionKind kind, std::string payload) {
  if (requires_payload(kind)) {
    if (trim(payload).empty()) {
      throw Error(std::string(to_string(kind)) + " requires a payload");
    }
    if (payload.find('\n') != std::string::npos) {
      throw Error("action payload must be a single line");
    }
    if (kind == ActionKind::jump_to && !parse_int(payload)) {
      throw Error("jump_to payload must be a topic id, got \"" + payload + "\"");
    }
  } else if (!payload.empty()) {
    throw Error(std::string(to_string(kind)) + " takes no payload");
  }
  return Action(kind, std::move(payload));
}

Action Action::from_text(std::string_view text) {
  auto colon = text.find(':');
  auto name = trim(text.substr(0, colon));
  auto kind = action_kind_from_string(name);
  if (!kind) throw Error("unknown action kind \"" + name + "\"");
  std::string payload;
  if (colon != std::string_view::npos) {
    // Canonical form is "<kind>: <payload>"; exactly one separator space.
    auto rest = text.substr(colon + 1);
    if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    payload = std::string(rest);
  }
  return make(*kind, std::move(payload));
}

TopicId Action::jump_target() const {
  if (kind_ != ActionKind::jump_to) throw Error("not a jump_to action");
  return TopicId{*parse_int(payload_)};
}

std::string Action::to_text() const {
  std::string out(to_string(kind_));
  if (requires_payload(kind_)) out += ": " + payload_;
  return out;
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void to_json(json& j, const TopicId& v) { j = v.value; }
void from_json(const json& j, TopicId& v) { v.value = j.get<std::int64_t>(); }

void to_json(json& j, const Topic& v) {
  j = json{{"id", v.id},
           {"title", v.title},
           {"origin", v.origin},
           {"category", v.category},
           {"created_round", v.created_round},
           {"last_active_round", v.last_active_round},
           {"status", v.status},
           {"item_id", v.item_id}};
}

void from_json(const json& j, Topic& v) {
  j.at("id").get_to(v.id);
  j.at("title").get_to(v.title);
  j.at("origin").get_to(v.origin);
  j.at("category").get_to(v.category);
  j.at("created_round").get_to(v.created_round);
  j.at("last_active_round").get_to(v.last_active_round);
  j.at("status").get_to(v.status);
  v.item_id = j.value("item_id", std::string{});
}

void to_json(json& j, const ChecklistItem& v) {
  j = json{{"item_id", v.item_id}, {"title", v.title}, {"description", v.description}};
}

void from_json(const json& j, ChecklistItem& v) {
  j.at("item_id").get_to(v.item_id);
  j.at("title").get_to(v.title);
  v.description = j.value("description", std::string{});
}

void to_json(json& j, const TaskDefinition& v) {
  j = json{{"task_id", v.task_id},       {"scenario", v.scenario},   {"system_role", v.system_role},
           {"goal", v.goal},             {"checklist", v.checklist}, {"knowledge", v.knowledge},
           {"provenance", v.provenance}};
}

void from_json(const json& j, TaskDefinition& v) {
  j.at("task_id").get_to(v.task_id);
  j.at("scenario").get_to(v.scenario);
  v.system_role = j.value("system_role", std::string{});
  j.at("goal").get_to(v.goal);
  j.at("checklist").get_to(v.checklist);
  v.knowledge = j.value("knowledge", std::vector<std::string>{});
  v.provenance = j.value("provenance", std::string{});
}

void to_json(json& j, const ChatMessage& v) {
  j = json{{"round", v.round}, {"speaker", v.speaker}, {"text", v.text},
           {"timestamp_ms", v.timestamp_ms}};
}

void from_json(const json& j, ChatMessage& v) {
  j.at("round").get_to(v.round);
  j.at("speaker").get_to(v.speaker);
  j.at("text").get_to(v.text);
  v.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
}

void to_json(json& j, const Action& v) {
  j = json{{"kind", v.kind()}, {"payload", v.payload()}, {"text", v.to_text()}};
}

void from_json(const json& j, Action& v) {
  auto name = j.at("kind").get<std::string>();
  auto kind = action_kind_from_string(name);
  if (!kind) throw Error("unknown action kind \"" + name + "\"");
  v = Action::make(*kind, j.value("payload", std::string{}));
}

}  // namespace tod
