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

#include "tod/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <regex>
#include <sstream>

namespace tod {

namespace {

std::string render_checklist(const TaskDefinition& task) {
  std::ostringstream out;
  for (std::size_t i = 0; i < task.checklist.size(); ++i) {
    const auto& item = task.checklist[i];
    if (i > 0) out << '\n';
    out << i + 1 << ". " << item.title;
    if (!item.description.empty()) out << ": " << item.description;
  }
  return out.str();
}

std::string render_criteria() {
  std::ostringstream out;
  const auto& criteria = judge_criteria();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (i > 0) out << '\n';
    out << "- " << criteria[i].first << ": " << criteria[i].second;
  }
  return out.str();
}

// First balanced {...} object in `text`.
std::optional<json> extract_json_object(std::string_view text) {
  for (auto start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (c == '\\') ++i;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        auto doc = json::parse(text.substr(start, i - start + 1), nullptr, false);
        if (!doc.is_discarded() && doc.is_object()) return doc;
        break;
      }
    }
  }
  return std::nullopt;
}

bool as_flag(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>() != 0.0;
  if (v.is_string()) {
    auto s = to_lower(trim(v.get<std::string>()));
    if (s == "true" || s == "yes" || s == "1" || s == "done") return true;
    if (s == "false" || s == "no" || s == "0") return false;
  }
  throw VerdictParseError("cannot read flag from " + v.dump());
}

double mean(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

Winner to_winner(Position p, bool a_first) {
  if (p == Position::tie) return Winner::tie;
  bool first_wins = p == Position::first;
  return first_wins == a_first ? Winner::a : Winner::b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Systems

EngineSystem::EngineSystem(const Engine& engine, std::string label) : engine_(engine), label_(std::move(label)) {}

void EngineSystem::begin(const TaskDefinition& task) {
  session_ = engine_.start_session(task, label_ + ":" + task.task_id);
  turns_.clear();
}

SystemReply EngineSystem::reply(std::string_view user_message) {
  auto result = engine_.take_turn(session_, user_message);
  SystemReply out{result.response, result.completion == Completion::complete};
  turns_.push_back(std::move(result));
  return out;
}

std::optional<std::vector<bool>> EngineSystem::checklist_marks() const {
  std::vector<bool> marks;
  const auto& log = session_.stack.finished_log();
  for (const auto& item : session_.task.checklist) {
    marks.push_back(std::any_of(log.begin(), log.end(),
                                [&](const FinishedRecord& r) { return r.item_id == item.item_id; }));
  }
  return marks;
}

BaselineSystem::BaselineSystem(std::shared_ptr<const Gateway> gateway, std::string label)
    : gateway_(std::move(gateway)), label_(std::move(label)) {
  if (!gateway_) throw Error("baseline requires a gateway");
}

void BaselineSystem::begin(const TaskDefinition& task) {
  task_ = task;
  history_.clear();
}

SystemReply BaselineSystem::reply(std::string_view user_message) {
  CompletionRequest request;
  request.role = AgentRole::baseline;
  request.template_name = "baseline";
  request.bindings = select_bindings(gateway_->pack().get("baseline"),
                                     {{"system_role", task_.system_role},
                                      {"goal", task_.goal},
                                      {"checklist", render_checklist(task_)},
                                      {"history", render_history(history_)},
                                      {"query", std::string(user_message)}});
  auto text = gateway_->complete(request);
  int round = static_cast<int>(history_.size() / 2) + 1;
  history_.push_back({round, Speaker::user, std::string(user_message), 0});
  history_.push_back({round, Speaker::system, text, 0});
  return {text, false};
}

// ---------------------------------------------------------------------------
// Simulator and episodes

SimulatedUtterance simulate_user(const TaskDefinition& task, std::span<const ChatMessage> history,
                                 const Gateway& gateway) {
  std::string last_system = "(the conversation has not started yet)";
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->speaker == Speaker::system) {
      last_system = it->text;
      break;
    }
  }
  CompletionRequest request;
  request.role = AgentRole::simulator;
  request.template_name = "simulator";
  request.bindings = select_bindings(gateway.pack().get("simulator"),
                                     {{"scenario", task.scenario},
                                      {"goal", task.goal},
                                      {"checklist", render_checklist(task)},
                                      {"history", render_history(history)},
                                      {"last_system_message", last_system}});
  auto raw = gateway.complete(request);
  SimulatedUtterance out;
  auto pos = raw.find(kDoneToken);
  out.done = pos != std::string::npos;
  while (pos != std::string::npos) {
    raw.erase(pos, kDoneToken.size());
    pos = raw.find(kDoneToken);
  }
  out.text = trim(raw);
  if (!out.done && out.text.empty()) throw GatewayError(GatewayError::Kind::protocol, "simulator returned nothing");
  return out;
}

Transcript run_episode(DialogueSystem& system, const TaskDefinition& task, const Gateway& simulator,
                       int max_rounds, const Clock& clock) {
  if (max_rounds < 1) throw Error("max_rounds must be >= 1");
  Transcript t;
  t.task_id = task.task_id;
  t.system_label = system.label();
  t.terminated_by = Termination::max_rounds;
  try {
    system.begin(task);
    for (int round = 1; round <= max_rounds; ++round) {
      auto user = simulate_user(task, t.messages, simulator);
      if (user.done) {
        t.terminated_by = Termination::user_done;
        break;
      }
      auto user_ts = clock();
      auto reply = system.reply(user.text);
      t.messages.push_back({round, Speaker::user, user.text, user_ts});
      t.messages.push_back({round, Speaker::system, reply.text, clock()});
      t.rounds = round;
      if (reply.complete) {
        t.terminated_by = Termination::completion;
        break;
      }
    }
  } catch (const std::exception& e) {
    t.terminated_by = Termination::error;
    t.error = e.what();
  }
  t.checklist_marks = system.checklist_marks();
  return t;
}

// ---------------------------------------------------------------------------
// Judge

const std::vector<std::pair<std::string, std::string>>& judge_criteria() {
  static const std::vector<std::pair<std::string, std::string>> criteria = {
      {"Understanding", "does the system correctly interpret what the user is asking for"},
      {"Relevance", "do the replies address the user's actual needs"},
      {"Complex Handling", "does it cope with questions that mix several concerns"},
      {"Efficiency", "does it move the conversation toward a resolution without detours"},
      {"Experience", "is the interaction easy and pleasant for the user"},
      {"Comprehensiveness", "do the replies cover all information relevant to the question"},
      {"Detail", "is there enough depth to handle the finer points of the inquiry"},
      {"Sufficiency", "are the implications explained well enough for the user to fully understand"},
  };
  return criteria;
}

GradeVerdict parse_grade_verdict(std::string_view text, std::size_t checklist_size) {
  auto doc = extract_json_object(text);
  if (!doc) throw VerdictParseError("no JSON object in judge output");
  GradeVerdict v;
  const auto& d = *doc;
  if (!d.contains("rq") || !d.at("rq").is_number()) throw VerdictParseError("verdict lacks a numeric \"rq\"");
  v.rq = d.at("rq").get<double>();
  if (!std::isfinite(v.rq)) throw VerdictParseError("rq is not finite");
  if (v.rq < 1.0 || v.rq > 10.0) {
    v.rq = std::clamp(v.rq, 1.0, 10.0);
    v.clamped = true;
  }
  if (!d.contains("items") || !d.at("items").is_array()) throw VerdictParseError("verdict lacks an \"items\" array");
  for (const auto& item : d.at("items")) v.per_item.push_back(as_flag(item));
  if (v.per_item.size() != checklist_size) {
    throw VerdictParseError("verdict has " + std::to_string(v.per_item.size()) + " items, checklist has " +
                            std::to_string(checklist_size));
  }
  if (!d.contains("success")) throw VerdictParseError("verdict lacks \"success\"");
  v.success = as_flag(d.at("success")) ? 1 : 0;
  return v;
}

GradeVerdict judge_grade(const Transcript& transcript, const TaskDefinition& task, const Gateway& gateway) {
  if (transcript.messages.empty()) throw Error("cannot grade an empty transcript");
  CompletionRequest request;
  request.role = AgentRole::judge;
  request.template_name = "judge_grade";
  request.bindings = select_bindings(gateway.pack().get("judge_grade"),
                                     {{"scenario", task.scenario},
                                      {"goal", task.goal},
                                      {"checklist", render_checklist(task)},
                                      {"criteria", render_criteria()},
                                      {"history", render_history(transcript.messages)}});
  auto raw = gateway.complete(request);
  std::string first_error;
  try {
    auto v = parse_grade_verdict(raw, task.checklist.size());
    v.task_id = task.task_id;
    return v;
  } catch (const VerdictParseError& e) {
    first_error = e.what();
  }
  CompletionRequest repair;
  repair.role = AgentRole::judge;
  repair.raw_prompt = gateway.render(request).prompt + "\n\nYour previous reply was:\n" + raw +
                      "\n\nIt could not be parsed: " + first_error +
                      ".\nReply with only the JSON object {\"rq\": <1-10>, \"items\": [<true|false> for each "
                      "checklist item], \"success\": <0|1>}.";
  auto second = gateway.complete(repair);
  try {
    auto v = parse_grade_verdict(second, task.checklist.size());
    v.task_id = task.task_id;
    v.repaired = true;
    return v;
  } catch (const VerdictParseError& e) {
    throw VerdictParseError("judge verdict unreadable after repair: " + std::string(e.what()));
  }
}

Position parse_compare_verdict(std::string_view text) {
  auto map = [](std::string s) -> std::optional<Position> {
    s = to_lower(trim(s));
    if (s == "first" || s == "1" || s == "conversation 1") return Position::first;
    if (s == "second" || s == "2" || s == "conversation 2") return Position::second;
    if (s == "tie" || s == "draw" || s == "equal") return Position::tie;
    return std::nullopt;
  };
  if (auto doc = extract_json_object(text); doc && doc->contains("winner")) {
    const auto& w = doc->at("winner");
    std::optional<Position> p;
    if (w.is_string()) p = map(w.get<std::string>());
    else if (w.is_number_integer()) p = map(std::to_string(w.get<int>()));
    if (p) return *p;
  }
  static const std::regex kLine(R"(winner\s*[:=]\s*["']?(first|second|tie|draw|1|2)\b)", std::regex::icase);
  std::cmatch m;
  if (std::regex_search(text.data(), text.data() + text.size(), m, kLine)) {
    if (auto p = map(m[1].str())) return *p;
  }
  throw VerdictParseError("no winner in comparison verdict");
}

double run_score(Winner winner, bool for_a) {
  if (winner == Winner::tie) return 0.5;
  return (winner == Winner::a) == for_a ? 1.0 : 0.0;
}

ComparisonOutcome score_comparison(std::string task_id, std::string label_a, std::string label_b, Winner run1,
                                   Winner run2) {
  ComparisonOutcome out;
  out.task_id = std::move(task_id);
  out.label_a = std::move(label_a);
  out.label_b = std::move(label_b);
  out.run1 = run1;
  out.run2 = run2;
  out.score_a = (run_score(run1, true) + run_score(run2, true)) / 2.0;
  out.score_b = (run_score(run1, false) + run_score(run2, false)) / 2.0;
  return out;
}

ComparisonOutcome judge_compare(const Transcript& a, const Transcript& b, const TaskDefinition& task,
                                const Gateway& gateway) {
  if (a.task_id != b.task_id) {
    throw Error("cannot compare transcripts of different tasks (" + a.task_id + " vs " + b.task_id + ")");
  }
  const auto& tmpl = gateway.pack().get("judge_compare");
  bool flagged = false;
  auto run = [&](const Transcript& first, const Transcript& second, bool a_first) {
    CompletionRequest request;
    request.role = AgentRole::judge;
    request.template_name = "judge_compare";
    request.bindings = select_bindings(tmpl, {{"scenario", task.scenario},
                                              {"goal", task.goal},
                                              {"checklist", render_checklist(task)},
                                              {"criteria", render_criteria()},
                                              {"first", render_history(first.messages)},
                                              {"second", render_history(second.messages)}});
    auto raw = gateway.complete(request);
    try {
      return to_winner(parse_compare_verdict(raw), a_first);
    } catch (const VerdictParseError&) {
      flagged = true;
      return Winner::tie;
    }
  };
  auto run1 = run(a, b, true);
  auto run2 = run(b, a, false);
  auto out = score_comparison(a.task_id, a.system_label, b.system_label, run1, run2);
  out.flagged = flagged;
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

MetricsReport compute_metrics(std::span<const Transcript> transcripts, std::span<const GradeVerdict> verdicts,
                              std::span<const ComparisonOutcome> outcomes) {
  if (transcripts.empty()) throw EmptyInput("no transcripts to score");
  MetricsReport report;
  report.system_label = transcripts.front().system_label;
  report.n_tasks = static_cast<int>(transcripts.size());

  std::map<std::string, const GradeVerdict*> by_task;
  for (const auto& v : verdicts) by_task[v.task_id] = &v;

  std::vector<double> rounds, completion, success, quality;
  for (const auto& t : transcripts) {
    if (t.system_label != report.system_label) {
      throw Error("transcripts mix systems \"" + report.system_label + "\" and \"" + t.system_label + "\"");
    }
    switch (t.terminated_by) {
      case Termination::completion:
      case Termination::user_done:
        ++report.n_finished;
        rounds.push_back(t.rounds);
        break;
      case Termination::max_rounds: ++report.n_max_rounds; break;
      case Termination::error: ++report.n_error; break;
    }
    auto it = by_task.find(t.task_id);
    const GradeVerdict* verdict = it == by_task.end() ? nullptr : it->second;
    if (verdict) quality.push_back(verdict->rq);

    const std::vector<bool>* marks = nullptr;
    if (t.checklist_marks) marks = &*t.checklist_marks;
    else if (verdict) marks = &verdict->per_item;
    if (marks == nullptr) throw Error("task " + t.task_id + " has neither checklist marks nor a verdict");
    auto done = static_cast<double>(std::count(marks->begin(), marks->end(), true));
    completion.push_back(marks->empty() ? 0.0 : done / static_cast<double>(marks->size()));

    if (t.checklist_marks) {
      success.push_back(t.terminated_by == Termination::completion ? 1.0 : 0.0);
    } else if (verdict) {
      success.push_back(verdict->success);
    } else {
      throw Error("task " + t.task_id + " has no success signal");
    }
  }
  if (!rounds.empty()) report.rc = mean(rounds);
  report.cr = mean(completion);
  report.sr = mean(success);
  if (!quality.empty()) report.rq = mean(quality);

  bool any = false;
  double cs = 0.0;
  for (const auto& o : outcomes) {
    if (o.label_a == report.system_label) {
      cs += o.score_a;
      any = true;
    } else if (o.label_b == report.system_label) {
      cs += o.score_b;
      any = true;
    }
  }
  if (any) report.cs = cs;
  return report;
}

std::string render_metrics_table(std::span<const MetricsReport> reports) {
  auto cell = [](const std::optional<double>& v, int precision) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << *v;
    return s.str();
  };
  std::ostringstream out;
  out << "| System | RC | CR | SR | RQ | CS | tasks |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    out << "| " << r.system_label << " | " << cell(r.rc, 1) << " | " << cell(r.cr, 1) << " | " << cell(r.sr, 1)
        << " | " << cell(r.rq, 1) << " | " << cell(r.cs, 1) << " | " << r.n_tasks << " |\n";
  }
  return out.str();
}

void to_json(json& j, const Transcript& v) {
  j = json{{"task_id", v.task_id},
           {"system_label", v.system_label},
           {"messages", v.messages},
           {"rounds", v.rounds},
           {"terminated_by", v.terminated_by},
           {"checklist_marks", v.checklist_marks ? json(*v.checklist_marks) : json(nullptr)},
           {"error", v.error}};
}

void from_json(const json& j, Transcript& v) {
  j.at("task_id").get_to(v.task_id);
  j.at("system_label").get_to(v.system_label);
  j.at("messages").get_to(v.messages);
  j.at("rounds").get_to(v.rounds);
  j.at("terminated_by").get_to(v.terminated_by);
  if (j.contains("checklist_marks") && !j.at("checklist_marks").is_null()) {
    v.checklist_marks = j.at("checklist_marks").get<std::vector<bool>>();
  } else {
    v.checklist_marks.reset();
  }
  v.error = j.value("error", std::string{});
}

void to_json(json& j, const GradeVerdict& v) {
  j = json{{"task_id", v.task_id}, {"rq", v.rq},           {"per_item", v.per_item},
           {"success", v.success}, {"clamped", v.clamped}, {"repaired", v.repaired}};
}

void from_json(const json& j, GradeVerdict& v) {
  j.at("task_id").get_to(v.task_id);
  j.at("rq").get_to(v.rq);
  j.at("per_item").get_to(v.per_item);
  j.at("success").get_to(v.success);
  v.clamped = j.value("clamped", false);
  v.repaired = j.value("repaired", false);
}

void to_json(json& j, const ComparisonOutcome& v) {
  j = json{{"task_id", v.task_id}, {"label_a", v.label_a}, {"label_b", v.label_b}, {"run1_winner", v.run1},
           {"run2_winner", v.run2}, {"score_a", v.score_a}, {"score_b", v.score_b}, {"flagged", v.flagged}};
}

void from_json(const json& j, ComparisonOutcome& v) {
  j.at("task_id").get_to(v.task_id);
  j.at("label_a").get_to(v.label_a);
  j.at("label_b").get_to(v.label_b);
  j.at("run1_winner").get_to(v.run1);
  j.at("run2_winner").get_to(v.run2);
  j.at("score_a").get_to(v.score_a);
  j.at("score_b").get_to(v.score_b);
  v.flagged = j.value("flagged", false);
}

void to_json(json& j, const MetricsReport& v) {
  auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  j = json{{"system_label", v.system_label}, {"RC", opt(v.rc)},          {"CR", v.cr},
           {"SR", v.sr},                     {"RQ", opt(v.rq)},          {"CS", opt(v.cs)},
           {"n_tasks", v.n_tasks},           {"n_finished", v.n_finished}, {"n_max_rounds", v.n_max_rounds},
           {"n_error", v.n_error}};
}

}  // namespace tod
