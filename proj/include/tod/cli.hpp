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

#ifndef TOD_CLI_HPP_
#define TOD_CLI_HPP_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "tod/evaluation.hpp"
#include "tod/llm.hpp"
#include "tod/pipeline.hpp"
#include "tod/tasks.hpp"

namespace tod {

struct ReplOptions {
  std::string task_id;
  bool show_stack = false;
};

// Interactive loop. Commands: /quit, /state, /tasks. Returns the exit code.
int run_repl(const Engine& engine, const TaskLibrary& library, const ReplOptions& options, std::istream& in,
             std::ostream& out);

enum class EvalSystem { engine, baseline };

struct EvalOptions {
  std::filesystem::path tasks_dir;
  EvalSystem system = EvalSystem::engine;
  int max_rounds = kDefaultMaxRounds;
  std::filesystem::path out_dir = "eval_out";
  // Previously written output directories to compare instead of running.
  std::optional<std::pair<std::filesystem::path, std::filesystem::path>> compare;
};

struct EvalGateways {
  // Backs the system under test.
  std::shared_ptr<const Gateway> system;
  std::shared_ptr<const Gateway> simulator;
  std::shared_ptr<const Gateway> judge;
  EngineConfig engine_config;
  Clock clock = system_clock();
};

// Runs episodes and grading, or a comparison when options.compare is set.
// Writes transcripts/<task>.json, verdicts.json (or comparison.json),
// report.json and report.md under out_dir. Returns 0 iff no episode ended
// in error.
int run_eval(const EvalOptions& options, const EvalGateways& gateways, std::ostream& out, std::ostream& err);

// Transcripts written by a previous run_eval, keyed by task_id.
std::map<std::string, Transcript> load_transcripts(const std::filesystem::path& out_dir);

}  // namespace tod

#endif  // TOD_CLI_HPP_
