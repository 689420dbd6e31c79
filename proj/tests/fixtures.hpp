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

#ifndef TOD_TESTS_FIXTURES_HPP_
#define TOD_TESTS_FIXTURES_HPP_

#include <filesystem>
#include <random>
#include <string>

#include "tod/core.hpp"

namespace tod::testing {

inline std::filesystem::path source_dir() { return TOD_SOURCE_DIR; }
inline std::filesystem::path prompt_dir() { return source_dir() / "data" / "prompts"; }
inline std::filesystem::path task_dir() { return source_dir() / "data" / "tasks"; }

inline TaskDefinition medical_task() {
  TaskDefinition t;
  t.task_id = "clinical";
  t.scenario = "A patient consults a doctor.";
  t.system_role = "a general practitioner";
  t.goal = "Collect the patient's information and give advice.";
  t.checklist = {{"basic", "Basic information", "Name, age, sex."},
                 {"complaint", "Chief complaint", "Main symptom."},
                 {"duration", "Duration of symptoms", "When it started."},
                 {"severity", "Severity of symptoms", "How strong it is."},
                 {"medication", "Current medication", "Medicines taken."},
                 {"allergies", "Allergies", "Known allergies."}};
  return t;
}

inline TaskDefinition numbered_task(const std::string& id, std::size_t n) {
  TaskDefinition t;
  t.task_id = id;
  t.scenario = id + " scenario";
  t.system_role = id + " assistant";
  t.goal = "Finish the " + id + " task.";
  for (std::size_t i = 1; i <= n; ++i) {
    t.checklist.push_back({"q" + std::to_string(i), id + " item " + std::to_string(i), "Detail " + std::to_string(i)});
  }
  return t;
}

// Fresh temporary directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("tod_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace tod::testing

#endif  // TOD_TESTS_FIXTURES_HPP_
