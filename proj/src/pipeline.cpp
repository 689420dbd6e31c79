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

#include "tod/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

namespace tod {

namespace {

constexpr std::size_t kTruncatedSummaryChars = 2000;

std::string knowledge_block(const TaskDefinition& task) {
  if (task.knowledge.empty()) return "(none)";
  std::string out;
  for (const auto& snippet : task.knowledge) out += (out.empty() ? "- " : "\n- ") + snippet;
  return out;
}

std::string report_description(const TaskDefinition& task) {
  std::string titles;
  for (const auto& item : task.checklist) titles += (titles.empty() ? "" : ", ") + item.title;
  return "Summarize what the user told you about " + titles +
         " and give a comprehensive final report with concrete next steps toward the goal: " + task.goal;
}

std::string topic_description(const Topic& topic, const TaskDefinition& task) {
  if (topic.item_id == kReportItemId) return report_description(task);
  if (const auto* item = task.find_item(topic.item_id)) return item->description;
  return {};
}

std::string base_instruction(const Topic* topic, const TaskDefinition& task, bool task_complete) {
  if (topic == nullptr) {
    return task_complete ? "The task is complete. Thank the user, answer any last remark briefly and close the "
                           "conversation politely."
                         : "No topic is pending. Respond helpfully to the user and invite them to continue.";
  }
  auto description = topic_description(*topic, task);
  if (topic->item_id == kReportItemId) return "Deliver the " + topic->title + ". " + description;
  if (topic->category == Category::ask_user) {
    std::string out = "Ask the user about \"" + topic->title + "\".";
    if (!description.empty()) out += " Information to elicit: " + description;
    return out;
  }
  std::string out = "Answer the user's question about \"" + topic->title + "\" using the conversation so far.";
  if (!description.empty()) out += " " + description;
  return out;
}

bool has_text(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return !std::isspace(c); });
}

}  // namespace

std::string_view to_string(Directive d) {
  switch (d) {
    case Directive::ask_user: return "ask_user";
    case Directive::answer_user: return "answer_user";
    case Directive::open_chat: return "open_chat";
  }
  return "open_chat";
}

Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

std::string ContextDigest::render() const {
  std::string out;
  if (older_summary) out = "Summary of earlier conversation:\n" + *older_summary + "\n\nRecent messages:\n";
  out += render_history(recent_turns);
  return out;
}

Engine::Engine(std::shared_ptr<const Gateway> gateway, EngineConfig config, Clock clock)
    : gateway_(std::move(gateway)), config_(std::move(config)), clock_(std::move(clock)) {
  if (!gateway_) throw Error("engine requires a gateway");
  if (config_.eviction_window < 1) throw Error("eviction window must be >= 1");
  if (config_.context_window < 1) throw Error("context window must be >= 1");
  if (!clock_) clock_ = system_clock();
}

SessionState Engine::start_session(const TaskDefinition& task, std::string session_id) const {
  auto report = validate_task(task);
  if (!report.ok_except_size() || task.checklist.empty()) {
    throw SessionError(SessionError::Kind::invalid_task,
                       "invalid task \"" + task.task_id + "\": " +
                           (task.checklist.empty() ? std::string("empty checklist") : report.summary()));
  }
  SessionState session;
  session.session_id = std::move(session_id);
  session.task = task;
  session.stack.load_checklist(task, 1);
  return session;
}

void Engine::greet(SessionState& session) const {
  ContextDigest empty;
  auto enriched = enrich_topic(session.stack.current_topic(), empty, session.task);
  session.greeting = generate_response(enriched, empty, session.task);
}

std::vector<ChatMessage> Engine::prompt_history(const SessionState& session) const {
  std::vector<ChatMessage> out;
  out.reserve(session.history.size() + 1);
  if (!session.greeting.empty()) out.push_back({0, Speaker::system, session.greeting, 0});
  out.insert(out.end(), session.history.begin(), session.history.end());
  return out;
}

ContextDigest Engine::build_context(std::span<const ChatMessage> history) const {
  ContextDigest digest;
  digest.total_messages = history.size();
  digest.total_rounds = static_cast<int>(
      std::count_if(history.begin(), history.end(), [](const ChatMessage& m) { return m.speaker == Speaker::user; }));
  const auto window = static_cast<std::size_t>(config_.context_window);
  const auto split = history.size() > window ? history.size() - window : 0;
  digest.recent_turns.assign(history.begin() + static_cast<std::ptrdiff_t>(split), history.end());
  if (split == 0) return digest;

  auto older = history.first(split);
  auto older_text = render_history(older);
  CompletionRequest request;
  request.role = AgentRole::context;
  if (gateway_->pack().has("context")) {
    request.template_name = "context";
    request.bindings = select_bindings(gateway_->pack().get("context"), {{"history", older_text}});
  } else {
    request.raw_prompt = "Summarize the following conversation in a few sentences, keeping every fact the user "
                         "provided:\n\n" + older_text;
  }
  try {
    digest.older_summary = trim(gateway_->complete(request));
  } catch (const GatewayError&) {
    if (config_.strict_gateway) throw;
    digest.older_summary = older_text.size() > kTruncatedSummaryChars
                               ? older_text.substr(older_text.size() - kTruncatedSummaryChars)
                               : older_text;
    digest.degraded = true;
  }
  return digest;
}

EnrichedTopic Engine::enrich_topic(const Topic* topic, const ContextDigest& digest, const TaskDefinition& task,
                                   bool task_complete) const {
  EnrichedTopic enriched;
  if (topic != nullptr) {
    enriched.directive = topic->category == Category::ask_user ? Directive::ask_user : Directive::answer_user;
    enriched.source_topic_id = topic->id;
  }
  enriched.instruction = base_instruction(topic, task, task_complete);

  CompletionRequest request;
  request.role = AgentRole::enricher;
  request.template_name = "enricher";
  request.bindings = select_bindings(
      gateway_->pack().get("enricher"),
      {{"topic", topic ? topic->title : std::string("(no topic)")},
       {"category", std::string(to_string(enriched.directive))},
       {"description", topic ? topic_description(*topic, task) : std::string{}},
       {"instruction", enriched.instruction},
       {"context", digest.render()},
       {"goal", task.goal},
       {"system_role", task.system_role}});
  try {
    auto extra = trim(gateway_->complete(request));
    if (!extra.empty()) enriched.instruction += "\n" + extra;
  } catch (const GatewayError&) {
    if (config_.strict_gateway) throw;
    enriched.degraded = true;
  }
  return enriched;
}

std::string Engine::generate_response(const EnrichedTopic& enriched, const ContextDigest& digest,
                                      const TaskDefinition& task) const {
  CompletionRequest request;
  request.role = AgentRole::chat;
  request.template_name = "chat";
  request.max_output = config_.response_budget;
  request.bindings = select_bindings(gateway_->pack().get("chat"),
                                     {{"system_role", task.system_role},
                                      {"goal", task.goal},
                                      {"directive", std::string(to_string(enriched.directive))},
                                      {"instruction", enriched.instruction},
                                      {"context", digest.render()},
                                      {"knowledge", knowledge_block(task)}});
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto text = gateway_->complete(request);
    if (has_text(text)) return text;
  }
  throw SessionError(SessionError::Kind::empty_response, "chat agent returned an empty response twice");
}

void Engine::update_completion(SessionState& session, StackDelta& delta, int round) const {
  if (session.completion == Completion::in_progress) {
    auto progress = checklist_progress(session.stack, session.task);
    if (progress.total > 0 && progress.completed == progress.total) {
      const auto& report = session.stack.push_predefined(config_.report_title, std::string(kReportItemId),
                                                         Category::answer_user, round, delta);
      session.report_topic = report.id;
      session.completion = Completion::report_pending;
    }
  }
  if (session.completion == Completion::report_pending && session.report_topic &&
      session.stack.is_finished(*session.report_topic)) {
    session.completion = Completion::complete;
  }
}

TurnResult Engine::take_turn(SessionState& session, std::string_view user_message) const {
  if (session.completion == Completion::complete) {
    throw SessionError(SessionError::Kind::session_complete, "session " + session.session_id + " is complete");
  }
  SessionState work = session;
  TurnResult result;
  result.round = work.round;
  result.user_message = std::string(user_message);
  result.user_timestamp_ms = clock_();

  auto history = prompt_history(work);
  auto catalog = ActionCatalog::for_profile(config_.profile, &gateway_->pack(), work.task.task_id);

  // 1. Decide the action.
  result.decision = decide_action({user_message, work.stack, history, work.task}, catalog, *gateway_);

  // 2. Maintain the stack, then sweep stale digressions.
  try {
    result.delta = work.stack.apply(result.decision.action, result.round, &work.task);
  } catch (const StackError& e) {
    result.decision.errors.push_back(e.what());
    result.decision.action = Action::stay_current();
    result.decision.fallback_used = true;
    result.delta = work.stack.apply(result.decision.action, result.round, &work.task);
  }
  result.evicted = work.stack.sweep_evictions(result.round, config_.eviction_window);
  result.delta.evicted = result.evicted;
  update_completion(work, result.delta, result.round);

  // 3. Enrich the current topic.
  history.push_back({result.round, Speaker::user, result.user_message, result.user_timestamp_ms});
  auto digest = build_context(history);
  result.enriched =
      enrich_topic(work.stack.current_topic(), digest, work.task, work.completion == Completion::complete);

  // 4. Generate the response.
  result.response = generate_response(result.enriched, digest, work.task);
  result.response_timestamp_ms = clock_();
  result.completion = work.completion;

  work.history.push_back({result.round, Speaker::user, result.user_message, result.user_timestamp_ms});
  work.history.push_back({result.round, Speaker::system, result.response, result.response_timestamp_ms});
  ++work.round;
  session = std::move(work);
  return result;
}

void Engine::apply_turn_result(SessionState& session, const TurnResult& result) {
  if (session.completion == Completion::complete) {
    throw SessionError(SessionError::Kind::replay_mismatch, "turn recorded after completion");
  }
  if (result.round != session.round || result.delta.round != result.round) {
    throw SessionError(SessionError::Kind::replay_mismatch,
                       "turn for round " + std::to_string(result.round) + " replayed at round " +
                           std::to_string(session.round));
  }
  SessionState work = session;
  work.stack.apply_delta(result.delta);
  for (const auto& t : result.delta.pushed) {
    if (t.item_id == kReportItemId && t.origin == Origin::predefined) work.report_topic = t.id;
  }
  work.completion = result.completion;
  work.history.push_back({result.round, Speaker::user, result.user_message, result.user_timestamp_ms});
  work.history.push_back({result.round, Speaker::system, result.response, result.response_timestamp_ms});
  ++work.round;
  session = std::move(work);
}

CompletionStatus Engine::completion_status(const SessionState& session) {
  return {session.completion, checklist_progress(session.stack, session.task)};
}

void to_json(json& j, const SessionState& v) {
  j = json{{"session_id", v.session_id}, {"task", v.task},
           {"stack", v.stack},           {"history", v.history},
           {"round", v.round},           {"completion", v.completion},
           {"greeting", v.greeting},     {"report_topic", v.report_topic ? json(*v.report_topic) : json(nullptr)}};
}

void from_json(const json& j, SessionState& v) {
  j.at("session_id").get_to(v.session_id);
  j.at("task").get_to(v.task);
  j.at("stack").get_to(v.stack);
  j.at("history").get_to(v.history);
  j.at("round").get_to(v.round);
  j.at("completion").get_to(v.completion);
  v.greeting = j.value("greeting", std::string{});
  if (j.contains("report_topic") && !j.at("report_topic").is_null()) {
    v.report_topic = j.at("report_topic").get<TopicId>();
  } else {
    v.report_topic.reset();
  }
}

void to_json(json& j, const EnrichedTopic& v) {
  j = json{{"directive", v.directive},
           {"instruction", v.instruction},
           {"source_topic_id", v.source_topic_id ? json(*v.source_topic_id) : json(nullptr)},
           {"degraded", v.degraded}};
}

void from_json(const json& j, EnrichedTopic& v) {
  j.at("directive").get_to(v.directive);
  j.at("instruction").get_to(v.instruction);
  if (j.contains("source_topic_id") && !j.at("source_topic_id").is_null()) {
    v.source_topic_id = j.at("source_topic_id").get<TopicId>();
  } else {
    v.source_topic_id.reset();
  }
  v.degraded = j.value("degraded", false);
}

void to_json(json& j, const TurnResult& v) {
  j = json{{"round", v.round},
           {"user_message", v.user_message},
           {"user_timestamp_ms", v.user_timestamp_ms},
           {"response", v.response},
           {"response_timestamp_ms", v.response_timestamp_ms},
           {"decision", v.decision},
           {"delta", v.delta},
           {"evicted", v.evicted},
           {"enriched", v.enriched},
           {"completion", v.completion}};
}

void from_json(const json& j, TurnResult& v) {
  j.at("round").get_to(v.round);
  j.at("user_message").get_to(v.user_message);
  j.at("user_timestamp_ms").get_to(v.user_timestamp_ms);
  j.at("response").get_to(v.response);
  j.at("response_timestamp_ms").get_to(v.response_timestamp_ms);
  j.at("decision").get_to(v.decision);
  j.at("delta").get_to(v.delta);
  j.at("evicted").get_to(v.evicted);
  j.at("enriched").get_to(v.enriched);
  j.at("completion").get_to(v.completion);
}

void to_json(json& j, const ContextDigest& v) {
  j = json{{"recent_turns", v.recent_turns},
           {"older_summary", v.older_summary ? json(*v.older_summary) : json(nullptr)},
           {"total_rounds", v.total_rounds},
           {"total_messages", v.total_messages},
           {"degraded", v.degraded}};
}

}  // namespace tod
