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

#ifndef TOD_TASKS_HPP_
#define TOD_TASKS_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tod/core.hpp"

namespace tod {

class FormatError : public Error {
 public:
  FormatError(std::string file, const std::string& reason)
      : Error(file + ": " + reason), file_(std::move(file)) {}

  const std::string& file() const { return file_; }

 private:
  std::string file_;
};

class DuplicateTaskId : public Error {
 public:
  explicit DuplicateTaskId(const std::string& task_id) : Error("duplicate task_id \"" + task_id + "\""), task_id_(task_id) {}

  const std::string& task_id() const { return task_id_; }

 private:
  std::string task_id_;
};

enum class LoadMode { strict, lenient };

inline constexpr std::size_t kLenientMaxChecklist = 20;

struct TaskLibrary {
  std::map<std::string, TaskDefinition> tasks;
  std::string source_path;
  // Lenient-mode annotations and other non-fatal findings.
  std::vector<std::string> warnings;

  const TaskDefinition* find(std::string_view task_id) const;
  std::size_t size() const { return tasks.size(); }
  bool empty() const { return tasks.empty(); }

  friend bool operator==(const TaskLibrary& a, const TaskLibrary& b) { return a.tasks == b.tasks; }
};

// `path` is either a directory of `<task_id>.json` documents or a single JSON
// file holding one task or an array of tasks. Strict mode rejects any task
// with violations; lenient mode keeps tasks whose checklist holds 1-20 items
// and records the violations as warnings.
TaskLibrary load_library(const std::filesystem::path& path, LoadMode mode = LoadMode::strict);

// Writes the library as one JSON array, ordered by task_id.
void save_library(const TaskLibrary& library, const std::filesystem::path& file);

struct ScenarioSummary {
  std::string task_id;
  std::string scenario;
  std::string goal;
};

// Ordered by task_id.
std::vector<ScenarioSummary> list_scenarios(const TaskLibrary& library);

}  // namespace tod

#endif  // TOD_TASKS_HPP_
