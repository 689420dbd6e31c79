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

#include "tod/topic_manager.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace tod {

namespace {

constexpr ActionKind kAllKinds[] = {ActionKind::load_topics, ActionKind::create_topic, ActionKind::finish_current,
                                    ActionKind::stay_current, ActionKind::jump_to};

std::string builtin_description(ActionKind kind) {
  switch (kind) {
    case ActionKind::load_topics:
      return "Load the predefined checklist topics of the current task onto the stack.";
    case ActionKind::create_topic:
      return "The user raised a new subject or question; push it as a new topic.";
    case ActionKind::finish_current:
      return "The current topic is settled or the user no longer wants to discuss it; remove it.";
    case ActionKind::stay_current:
      return "More information is still needed on the current topic; leave the stack unchanged.";
    case ActionKind::jump_to:
      return "The user returns to an earlier topic that is still on the stack; bring it to the top.";
  }
  return {};
}

std::string payload_schema(ActionKind kind) {
  switch (kind) {
    case ActionKind::load_topics: return ": <task id>";
    case ActionKind::create_topic: return ": <short topic title>";
    case ActionKind::jump_to: return ": <topic id>";
    default: return {};
  }
}

bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_';
}

struct Mention {
  ActionKind kind;
  std::string payload;

  friend bool operator==(const Mention&, const Mention&) = default;
};

std::string strip_decoration(std::string s) {
  s = trim(s);
  auto strip_pair = [&](char open, char close) {
    if (s.size() >= 2 && s.front() == open && s.back() == close) s = trim(s.substr(1, s.size() - 2));
  };
  strip_pair('"', '"');
  strip_pair('\'', '\'');
  strip_pair('`', '`');
  strip_pair('<', '>');
  while (!s.empty() && (s.back() == '.' || s.back() == '`')) s.pop_back();
  return trim(s);
}

std::vector<Mention> find_mentions(std::string_view text) {
  std::vector<std::pair<std::size_t, Mention>> found;
  for (auto kind : kAllKinds) {
    auto name = to_string(kind);
    std::size_t pos = 0;
    while ((pos = text.find(name, pos)) != std::string_view::npos) {
      auto end = pos + name.size();
      bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
      bool right_ok = end >= text.size() || !is_word_char(text[end]);
      if (left_ok && right_ok) {
        Mention m{kind, {}};
        auto k = end;
        while (k < text.size() && (text[k] == ' ' || text[k] == '\t')) ++k;
        if (k < text.size() && (text[k] == ':' || text[k] == '=')) {
          auto line_end = text.find('\n', k);
          auto raw = text.substr(k + 1, line_end == std::string_view::npos ? std::string_view::npos : line_end - k - 1);
          if (requires_payload(kind)) m.payload = strip_decoration(std::string(raw));
        }
        found.emplace_back(pos, std::move(m));
      }
      pos = end;
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Mention> out;
  for (auto& [_, m] : found) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(std::move(m));
  }
  return out;
}

std::string truncate_title(std::string title) {
  if (title.size() <= kMaxTopicTitle) return title;
  auto cut = kMaxTopicTitle;
  while (cut > 0 && (static_cast<unsigned char>(title[cut]) & 0xC0) == 0x80) --cut;
  title.resize(cut);
  return trim(title);
}

}  // namespace

std::string action_template_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::load_topics: return "action_load";
    case ActionKind::create_topic: return "action_create";
    case ActionKind::finish_current: return "action_finish";
    case ActionKind::stay_current: return "action_stay";
    case ActionKind::jump_to: return "action_jump";
  }
  return {};
}

ActionCatalog ActionCatalog::for_profile(PromptProfile profile, const PromptPack* pack, const std::string& task_id) {
  ActionCatalog catalog;
  catalog.profile_ = profile;
  for (auto kind : kAllKinds) {
    if (profile == PromptProfile::simplified && (kind == ActionKind::jump_to || kind == ActionKind::load_topics)) {
      continue;
    }
    CatalogEntry entry{kind, builtin_description(kind), payload_schema(kind)};
    auto name = action_template_name(kind);
    if (pack != nullptr && pack->has(name)) {
      const auto& tmpl = pack->get(name);
      entry.description = trim(render_template(tmpl, select_bindings(tmpl, {{"task_id", task_id}})));
    }
    catalog.entries_.push_back(std::move(entry));
  }
  return catalog;
}

bool ActionCatalog::contains(ActionKind kind) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const CatalogEntry& e) { return e.kind == kind; });
}

std::string ActionCatalog::render() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (i > 0) out << '\n';
    out << "- " << to_string(e.kind) << e.payload_schema << "\n  " << e.description;
  }
  return out.str();
}

Action parse_action_output(std::string_view text, const TopicStack& stack, const ActionCatalog& catalog,
                           const std::string& session_task_id) {
  auto mentions = find_mentions(text);
  if (mentions.empty()) {
    static const std::regex kActionLike(R"(^\s*`?([a-z]+(?:_[a-z]+)+)`?\s*(:|$))");
    std::string first_line;
    std::istringstream lines{std::string(text)};
    while (std::getline(lines, first_line) && trim(first_line).empty()) {
    }
    std::smatch m;
    if (std::regex_search(first_line, m, kActionLike)) {
      throw ParseError(ParseError::Reason::unknown_kind, "unknown action kind \"" + m[1].str() + "\"");
    }
    throw ParseError(ParseError::Reason::no_action, "no action found in manager output");
  }
  if (mentions.size() > 1) {
    std::string names;
    for (const auto& m : mentions) names += (names.empty() ? "" : ", ") + std::string(to_string(m.kind));
    throw ParseError(ParseError::Reason::multiple_actions, "multiple actions in manager output (" + names + ")");
  }

  const auto& mention = mentions.front();
  if (!catalog.contains(mention.kind)) {
    throw ParseError(ParseError::Reason::kind_not_in_catalog,
                     std::string(to_string(mention.kind)) + " is not available in the " +
                         std::string(to_string(catalog.profile())) + " action list");
  }
  if (stack.empty() && mention.kind != ActionKind::create_topic && mention.kind != ActionKind::load_topics) {
    throw ParseError(ParseError::Reason::not_allowed_on_empty_stack,
                     std::string(to_string(mention.kind)) + " is not allowed while the stack is empty");
  }

  switch (mention.kind) {
    case ActionKind::create_topic: {
      auto title = truncate_title(mention.payload);
      if (title.empty()) throw ParseError(ParseError::Reason::missing_payload, "create_topic needs a title");
      return Action::create_topic(std::move(title));
    }
    case ActionKind::jump_to: {
      if (mention.payload.empty()) throw ParseError(ParseError::Reason::missing_payload, "jump_to needs a topic id");
      static const std::regex kId(R"(^(?:topic\s*|id\s*=?\s*)?#?(\d{1,15})$)", std::regex::icase);
      std::smatch m;
      const std::string& payload = mention.payload;
      if (!std::regex_match(payload, m, kId)) {
        throw ParseError(ParseError::Reason::invalid_jump_target, "jump target \"" + payload + "\" is not a topic id");
      }
      TopicId target{std::stoll(m[1].str())};
      if (!stack.contains(target)) {
        throw ParseError(ParseError::Reason::invalid_jump_target,
                         "invalid jump target: topic " + to_string(target) + " is not on the stack");
      }
      return Action::jump_to(target);
    }
    case ActionKind::load_topics: {
      if (session_task_id.empty()) {
        throw ParseError(ParseError::Reason::task_mismatch, "no task is attached to this session");
      }
      if (!mention.payload.empty() && mention.payload != session_task_id) {
        throw ParseError(ParseError::Reason::task_mismatch,
                         "load_topics may only load the session task \"" + session_task_id + "\"");
      }
      return Action::load_topics(session_task_id);
    }
    case ActionKind::finish_current: return Action::finish_current();
    case ActionKind::stay_current: return Action::stay_current();
  }
  throw ParseError(ParseError::Reason::no_action, "no action found in manager output");
}

std::string render_history(std::span<const ChatMessage> history) {
  if (history.empty()) return "(no messages yet)";
  std::ostringstream out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i > 0) out << '\n';
    out << (history[i].speaker == Speaker::user ? "User: " : "System: ") << history[i].text;
  }
  return out.str();
}

ActionDecision decide_action(const ManagerInput& input, const ActionCatalog& catalog, const Gateway& gateway) {
  if (catalog.empty()) throw Error("action catalog is empty");

  std::string guidance;
  if (input.stack.empty()) {
    guidance = "The topic stack is empty. Reply create_topic: <title> if the user raised a new subject";
    guidance += catalog.contains(ActionKind::load_topics)
                    ? ", otherwise load_topics: " + input.task.task_id + " to load the task checklist."
                    : ".";
  }

  CompletionRequest request;
  request.role = AgentRole::manager;
  request.template_name = "manager";
  const auto& tmpl = gateway.pack().get("manager");
  request.bindings = select_bindings(tmpl, {{"query", std::string(input.query)},
                                            {"actions", catalog.render()},
                                            {"stack", render_stack_status(input.stack)},
                                            {"history", render_history(input.history)},
                                            {"goal", input.task.goal},
                                            {"system_role", input.task.system_role},
                                            {"task_id", input.task.task_id},
                                            {"guidance", guidance}});

  ActionDecision decision;
  decision.raw_output = gateway.complete(request);
  try {
    decision.action = parse_action_output(decision.raw_output, input.stack, catalog, input.task.task_id);
    return decision;
  } catch (const ParseError& e) {
    decision.errors.push_back(e.what());
  }

  CompletionRequest repair;
  repair.role = AgentRole::manager;
  repair.raw_prompt = gateway.render(request).prompt + "\n\nYour previous reply was:\n" + decision.raw_output +
                      "\n\nIt could not be used: " + decision.errors.back() +
                      ".\nReply with exactly one action line, either <kind> or <kind>: <payload>.";
  decision.raw_output = gateway.complete(repair);
  decision.repaired = true;
  try {
    decision.action = parse_action_output(decision.raw_output, input.stack, catalog, input.task.task_id);
    return decision;
  } catch (const ParseError& e) {
    decision.errors.push_back(e.what());
  }
  decision.action = Action::stay_current();
  decision.fallback_used = true;
  return decision;
}

void to_json(json& j, const ActionDecision& v) {
  j = json{{"action", v.action},
           {"raw_output", v.raw_output},
           {"repaired", v.repaired},
           {"fallback_used", v.fallback_used},
           {"errors", v.errors}};
}

void from_json(const json& j, ActionDecision& v) {
  j.at("action").get_to(v.action);
  j.at("raw_output").get_to(v.raw_output);
  j.at("repaired").get_to(v.repaired);
  j.at("fallback_used").get_to(v.fallback_used);
  v.errors = j.value("errors", std::vector<std::string>{});
}

}  // namespace tod
