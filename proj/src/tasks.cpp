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

#include "tod/tasks.hpp"

#include <algorithm>
#include <fstream>

namespace tod {

namespace fs = std::filesystem;

namespace {

std::vector<TaskDefinition> parse_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError(file.string(), "cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(file.string(), std::string("invalid JSON: ") + e.what());
  }
  std::vector<TaskDefinition> out;
  try {
    if (doc.is_array()) {
      out = doc.get<std::vector<TaskDefinition>>();
    } else if (doc.is_object()) {
      out.push_back(doc.get<TaskDefinition>());
    } else {
      throw FormatError(file.string(), "expected a task object or an array of tasks");
    }
  } catch (const json::exception& e) {
    throw FormatError(file.string(), std::string("schema error: ") + e.what());
  }
  return out;
}

void admit(TaskLibrary& library, TaskDefinition task, const fs::path& file, LoadMode mode) {
  auto report = validate_task(task);
  if (!report.ok()) {
    bool acceptable = mode == LoadMode::lenient && report.ok_except_size() && !task.checklist.empty() &&
                      task.checklist.size() <= kLenientMaxChecklist;
    if (!acceptable) throw FormatError(file.string(), "task \"" + task.task_id + "\": " + report.summary());
    library.warnings.push_back(file.string() + ": task \"" + task.task_id + "\": " + report.summary());
  }
  auto id = task.task_id;
  if (!library.tasks.emplace(id, std::move(task)).second) throw DuplicateTaskId(id);
}

}  // namespace

const TaskDefinition* TaskLibrary::find(std::string_view task_id) const {
  auto it = tasks.find(std::string(task_id));
  return it == tasks.end() ? nullptr : &it->second;
}

TaskLibrary load_library(const fs::path& path, LoadMode mode) {
  TaskLibrary library;
  library.source_path = path.string();
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) library.warnings.push_back(path.string() + ": no task files found");
    for (const auto& file : files) {
      for (auto& task : parse_file(file)) admit(library, std::move(task), file, mode);
    }
  } else if (fs::is_regular_file(path)) {
    for (auto& task : parse_file(path)) admit(library, std::move(task), path, mode);
  } else {
    throw FormatError(path.string(), "no such file or directory");
  }
  return library;
}

void save_library(const TaskLibrary& library, const fs::path& file) {
  json doc = json::array();
  for (const auto& [_, task] : library.tasks) doc.push_back(task);
  std::ofstream out(file);
  if (!out) throw FormatError(file.string(), "cannot write file");
  out << doc.dump(2) << '\n';
}

std::vector<ScenarioSummary> list_scenarios(const TaskLibrary& library) {
  std::vector<ScenarioSummary> out;
  out.reserve(library.tasks.size());
  for (const auto& [id, task] : library.tasks) out.push_back({id, task.scenario, task.goal});
  return out;
}

}  // namespace tod
