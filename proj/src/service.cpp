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

#include "tod/service.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <httplib.h>

#include "tod/evaluation.hpp"

namespace tod {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// ServiceConfig

ServiceConfig ServiceConfig::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open config file " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config file " + file.string() + ": " + e.what());
  }
  return from_json(doc, file.parent_path());
}

ServiceConfig ServiceConfig::from_json(const json& doc, const fs::path& base_dir) {
  ServiceConfig c;
  auto path_value = [&](const char* key, std::string& out) {
    if (!doc.contains(key)) return;
    fs::path p = doc.at(key).get<std::string>();
    out = (p.is_relative() && !base_dir.empty() && !p.empty()) ? (base_dir / p).string() : p.string();
  };
  try {
    c.host = doc.value("host", c.host);
    c.port = doc.value("port", c.port);
    c.backend = doc.value("backend", c.backend);
    c.api_key_env = doc.value("api_key_env", c.api_key_env);
    c.base_url = doc.value("base_url", c.base_url);
    c.api_path = doc.value("api_path", c.api_path);
    c.model = doc.value("model", c.model);
    c.retry_limit = doc.value("retry_limit", c.retry_limit);
    path_value("script", c.script_path);
    path_value("prompt_pack", c.prompt_pack);
    path_value("task_library", c.task_library);
    path_value("log_dir", c.log_dir);
    path_value("static_dir", c.static_dir);
    c.eviction_window = doc.value("eviction_window", c.eviction_window);
    c.context_window = doc.value("context_window", c.context_window);
    c.max_rounds = doc.value("max_rounds", c.max_rounds);
    if (doc.contains("profile")) c.profile = prompt_profile_from_string(doc.at("profile").get<std::string>());
    if (doc.contains("temperature") && !doc.at("temperature").is_null()) {
      c.temperature_override = doc.at("temperature").get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(std::string("invalid config: ") + e.what());
  }
  return c;
}

void ServiceConfig::validate() const {
  if (eviction_window < 1) throw Error("eviction_window must be >= 1");
  if (context_window < 1) throw Error("context_window must be >= 1");
  if (max_rounds < 1) throw Error("max_rounds must be >= 1");
  if (!fs::exists(prompt_pack)) throw Error("prompt pack not found: " + prompt_pack);
  if (!fs::exists(task_library)) throw Error("task library not found: " + task_library);
  if (backend == "scripted" && !fs::exists(script_path)) {
    throw Error("scripted backend needs an existing script file, got \"" + script_path + "\"");
  }
  if (backend != "scripted" && backend != "http") throw Error("unknown backend \"" + backend + "\"");
  if (!static_dir.empty() && !fs::is_directory(static_dir)) throw Error("static_dir not found: " + static_dir);
}

EngineConfig ServiceConfig::engine_config() const {
  EngineConfig e;
  e.eviction_window = eviction_window;
  e.context_window = context_window;
  e.profile = profile;
  return e;
}

std::shared_ptr<LlmBackend> make_backend(const ServiceConfig& config, const std::string& kind,
                                         const std::string& script_path) {
  if (kind == "scripted") return ScriptedBackend::from_file(script_path);
  if (kind == "http") {
    HttpBackendConfig http;
    http.base_url = config.base_url;
    http.path = config.api_path;
    http.model = config.model;
    http.retry_limit = config.retry_limit;
    if (const char* key = std::getenv(config.api_key_env.c_str())) http.api_key = key;
    return std::make_shared<HttpBackend>(std::move(http));
  }
  throw Error("unknown backend \"" + kind + "\"");
}

std::shared_ptr<Gateway> make_gateway(const ServiceConfig& config, std::shared_ptr<LlmBackend> backend) {
  GatewayOptions options;
  options.temperature_override = config.temperature_override;
  return std::make_shared<Gateway>(std::move(backend), PromptPack::load(config.prompt_pack, config.profile), options);
}

// ---------------------------------------------------------------------------
// Errors

int ServiceError::http_status() const {
  switch (kind_) {
    case Kind::unknown_task:
    case Kind::unknown_session: return 404;
    case Kind::session_complete: return 409;
    case Kind::bad_request: return 400;
    case Kind::gateway_failure: return 502;
  }
  return 500;
}

std::string_view ServiceError::code() const {
  switch (kind_) {
    case Kind::unknown_task: return "unknown_task";
    case Kind::unknown_session: return "unknown_session";
    case Kind::session_complete: return "session_complete";
    case Kind::bad_request: return "bad_request";
    case Kind::gateway_failure: return "gateway_failure";
  }
  return "error";
}

// ---------------------------------------------------------------------------
// SessionStore

SessionStore::SessionStore(fs::path log_dir) : log_dir_(std::move(log_dir)) {
  if (!log_dir_.empty()) fs::create_directories(log_dir_);
}

fs::path SessionStore::log_path(const std::string& session_id) const { return log_dir_ / (session_id + ".jsonl"); }

std::string SessionStore::next_session_id() {
  std::unique_lock lock(mutex_);
  for (;;) {
    std::ostringstream id;
    id << "s" << std::setw(6) << std::setfill('0') << ++counter_;
    if (sessions_.contains(id.str())) continue;
    if (!log_dir_.empty() && fs::exists(log_path(id.str()))) continue;
    return id.str();
  }
}

namespace {

void append_line(const fs::path& file, const json& line) {
  std::ofstream out(file, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot write event log " + file.string());
  out << line.dump() << '\n';
  out.flush();
  if (!out) throw Error("failed writing event log " + file.string());
}

}  // namespace

std::shared_ptr<SessionStore::Entry> SessionStore::create(SessionState initial) {
  auto entry = std::make_shared<Entry>();
  entry->state = std::move(initial);
  const auto& id = entry->state.session_id;
  std::unique_lock lock(mutex_);
  if (sessions_.contains(id)) throw Error("session id already in use: " + id);
  if (!log_dir_.empty()) append_line(log_path(id), json{{"event", "created"}, {"state", entry->state}});
  sessions_.emplace(id, entry);
  return entry;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionStore::append(Entry& entry, const TurnResult& result) {
  if (!log_dir_.empty()) {
    append_line(log_path(entry.state.session_id), json{{"event", "turn"}, {"result", result}});
  }
  entry.events.push_back(result);
}

SessionState SessionStore::replay_log(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open event log " + file.string());
  std::optional<SessionState> state;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto doc = json::parse(line);
      auto event = doc.at("event").get<std::string>();
      if (event == "created") {
        if (state) throw Error("duplicate created event");
        state = doc.at("state").get<SessionState>();
      } else if (event == "turn") {
        if (!state) throw Error("turn before created event");
        Engine::apply_turn_result(*state, doc.at("result").get<TurnResult>());
      } else {
        throw Error("unknown event \"" + event + "\"");
      }
    } catch (const json::exception& e) {
      throw Error(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!state) throw Error(file.string() + ": empty event log");
  return *state;
}

std::size_t SessionStore::recover() {
  if (log_dir_.empty()) return 0;
  std::size_t count = 0;
  for (const auto& f : fs::directory_iterator(log_dir_)) {
    if (f.path().extension() != ".jsonl") continue;
    auto entry = std::make_shared<Entry>();
    entry->state = replay_log(f.path());
    std::ifstream in(f.path());
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto doc = json::parse(line);
      if (doc.at("event") == "turn") entry->events.push_back(doc.at("result").get<TurnResult>());
    }
    std::unique_lock lock(mutex_);
    auto id = entry->state.session_id;
    if (id.size() > 1 && id[0] == 's') {
      try {
        counter_ = std::max<std::uint64_t>(counter_, std::stoull(id.substr(1)));
      } catch (const std::exception&) {
      }
    }
    sessions_[id] = std::move(entry);
    ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Service

Service::Service(std::shared_ptr<const Engine> engine, TaskLibrary library, fs::path log_dir)
    : engine_(std::move(engine)), library_(std::move(library)), store_(std::move(log_dir)) {
  if (!engine_) throw Error("service requires an engine");
}

json Service::snapshot(const SessionState& state) {
  auto progress = checklist_progress(state.stack, state.task);
  return json{{"session_id", state.session_id},
              {"task_id", state.task.task_id},
              {"round", state.round},
              {"completion", state.completion},
              {"progress", {{"completed", progress.completed}, {"total", progress.total}}},
              {"stack", {{"rendered", render_stack_status(state.stack)},
                         {"entries", state.stack.entries()},
                         {"finished_log", state.stack.finished_log()},
                         {"archive", state.stack.archive()}}},
              {"greeting", state.greeting},
              {"history", state.history}};
}

json Service::handle_create_session(const std::string& task_id) {
  const auto* task = library_.find(task_id);
  if (task == nullptr) throw ServiceError(ServiceError::Kind::unknown_task, "unknown task \"" + task_id + "\"");
  auto state = engine_->start_session(*task, store_.next_session_id());
  try {
    engine_->greet(state);
  } catch (const GatewayError& e) {
    throw ServiceError(ServiceError::Kind::gateway_failure, e.what());
  } catch (const SessionError& e) {
    throw ServiceError(ServiceError::Kind::gateway_failure, e.what());
  }
  auto entry = store_.create(std::move(state));
  std::lock_guard lock(entry->turn_mutex);
  return snapshot(entry->state);
}

json Service::handle_post_message(const std::string& session_id, const std::string& text) {
  auto entry = store_.find(session_id);
  if (!entry) throw ServiceError(ServiceError::Kind::unknown_session, "unknown session \"" + session_id + "\"");
  if (trim(text).empty()) throw ServiceError(ServiceError::Kind::bad_request, "message text is empty");

  std::lock_guard lock(entry->turn_mutex);
  auto work = entry->state;
  TurnResult result;
  try {
    result = engine_->take_turn(work, text);
  } catch (const SessionError& e) {
    if (e.kind() == SessionError::Kind::session_complete) {
      throw ServiceError(ServiceError::Kind::session_complete, e.what());
    }
    throw ServiceError(ServiceError::Kind::gateway_failure, e.what());
  } catch (const GatewayError& e) {
    throw ServiceError(ServiceError::Kind::gateway_failure, e.what());
  } catch (const TemplateError& e) {
    throw ServiceError(ServiceError::Kind::gateway_failure, e.what());
  }
  store_.append(*entry, result);
  entry->state = std::move(work);

  auto progress = checklist_progress(entry->state.stack, entry->state.task);
  json payload = result;
  payload["session_id"] = session_id;
  payload["stack"] = {{"rendered", render_stack_status(entry->state.stack)},
                      {"entries", entry->state.stack.entries()}};
  payload["progress"] = {{"completed", progress.completed}, {"total", progress.total}};
  return payload;
}

json Service::handle_get_state(const std::string& session_id) const {
  auto entry = store_.find(session_id);
  if (!entry) throw ServiceError(ServiceError::Kind::unknown_session, "unknown session \"" + session_id + "\"");
  std::lock_guard lock(entry->turn_mutex);
  return snapshot(entry->state);
}

json Service::handle_list_tasks() const {
  json out = json::array();
  for (const auto& s : list_scenarios(library_)) {
    out.push_back({{"task_id", s.task_id}, {"scenario", s.scenario}, {"goal", s.goal}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP binding

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    send_json(res, e.http_status(), {{"error", e.code()}, {"message", e.what()}});
  } catch (const json::exception& e) {
    send_json(res, 400, {{"error", "bad_request"}, {"message", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
  }
}

json parse_body(const httplib::Request& req) {
  auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw ServiceError(ServiceError::Kind::bad_request, "request body must be a JSON object");
  }
  return body;
}

std::string string_field(const json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_string()) {
    throw ServiceError(ServiceError::Kind::bad_request, std::string("missing string field \"") + key + "\"");
  }
  return body.at(key).get<std::string>();
}

}  // namespace

void mount_routes(httplib::Server& server, Service& service, const std::string& static_dir) {
  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = parse_body(req);
      send_json(res, 201, service.handle_create_session(string_field(body, "task_id")));
    });
  });
  server.Post("/sessions/:id/messages", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = parse_body(req);
      send_json(res, 200, service.handle_post_message(req.path_params.at("id"), string_field(body, "text")));
    });
  });
  server.Get("/sessions/:id/state", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, service.handle_get_state(req.path_params.at("id"))); });
  });
  server.Get("/tasks", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, service.handle_list_tasks()); });
  });
  if (!static_dir.empty()) server.set_mount_point("/", static_dir);
}

}  // namespace tod
