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

#ifndef TOD_SERVICE_HPP_
#define TOD_SERVICE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "tod/core.hpp"
#include "tod/llm.hpp"
#include "tod/pipeline.hpp"
#include "tod/tasks.hpp"

namespace httplib {
class Server;
}

namespace tod {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  // "http" or "scripted".
  std::string backend = "scripted";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string base_url = "https://api.openai.com";
  std::string api_path = "/v1/chat/completions";
  std::string model = "gpt-4-0613";
  int retry_limit = 3;
  std::string script_path;
  std::string prompt_pack = "data/prompts";
  std::string task_library = "data/tasks";
  std::string log_dir = "sessions";
  // Optional directory of static assets served at "/".
  std::string static_dir;
  int eviction_window = kDefaultEvictionWindow;
  int context_window = 10;
  int max_rounds = 20;
  PromptProfile profile = PromptProfile::full;
  std::optional<double> temperature_override;

  // Missing keys keep their defaults. Relative paths resolve against the
  // config file's directory.
  static ServiceConfig load(const std::filesystem::path& file);
  static ServiceConfig from_json(const json& doc, const std::filesystem::path& base_dir = {});

  // Throws Error when a path is missing or a window is < 1.
  void validate() const;

  EngineConfig engine_config() const;
};

std::shared_ptr<LlmBackend> make_backend(const ServiceConfig& config, const std::string& kind,
                                         const std::string& script_path);
std::shared_ptr<Gateway> make_gateway(const ServiceConfig& config, std::shared_ptr<LlmBackend> backend);

class ServiceError : public Error {
 public:
  enum class Kind { unknown_task, unknown_session, session_complete, bad_request, gateway_failure };

  ServiceError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }
  int http_status() const;
  std::string_view code() const;

 private:
  Kind kind_;
};

// Sessions plus their write-ahead event logs, one JSONL file per session:
//   {"event":"created","state":<SessionState>}
//   {"event":"turn","result":<TurnResult>}   (one line per turn)
class SessionStore {
 public:
  struct Entry {
    std::mutex turn_mutex;
    SessionState state;
    std::vector<TurnResult> events;
  };

  // An empty log_dir keeps sessions in memory only.
  explicit SessionStore(std::filesystem::path log_dir = {});

  std::string next_session_id();
  std::shared_ptr<Entry> create(SessionState initial);
  std::shared_ptr<Entry> find(const std::string& session_id) const;
  // Appends to the log; the caller holds entry.turn_mutex.
  void append(Entry& entry, const TurnResult& result);
  // Reloads every log in log_dir. Returns the number of sessions recovered.
  std::size_t recover();

  std::filesystem::path log_path(const std::string& session_id) const;
  const std::filesystem::path& log_dir() const { return log_dir_; }

  // Rebuilds a session from its event log.
  static SessionState replay_log(const std::filesystem::path& file);

 private:
  std::filesystem::path log_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t counter_ = 0;
};

class Service {
 public:
  Service(std::shared_ptr<const Engine> engine, TaskLibrary library, std::filesystem::path log_dir = {});

  json handle_create_session(const std::string& task_id);
  json handle_post_message(const std::string& session_id, const std::string& text);
  json handle_get_state(const std::string& session_id) const;
  json handle_list_tasks() const;

  SessionStore& store() { return store_; }
  const TaskLibrary& library() const { return library_; }

  // Structured + rendered view of a session, as served by GET state.
  static json snapshot(const SessionState& state);

 private:
  std::shared_ptr<const Engine> engine_;
  TaskLibrary library_;
  SessionStore store_;
};

// Registers POST /sessions, POST /sessions/:id/messages,
// GET /sessions/:id/state and GET /tasks.
void mount_routes(httplib::Server& server, Service& service, const std::string& static_dir = {});

}  // namespace tod

#endif  // TOD_SERVICE_HPP_
