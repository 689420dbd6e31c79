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

#include "tod/cli.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace tod {

namespace fs = std::filesystem;

namespace {

void print_tasks(const TaskLibrary& library, std::ostream& out) {
  for (const auto& s : list_scenarios(library)) out << "  " << s.task_id << "  " << s.scenario << "\n";
}

void print_state(const SessionState& session, std::ostream& out) {
  auto status = Engine::completion_status(session);
  out << "round " << session.round << ", " << to_string(status.completion) << ", checklist "
      << status.progress.completed << "/" << status.progress.total << "\n"
      << render_stack_status(session.stack) << "\n";
}

void write_json(const fs::path& file, const json& doc) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  return json::parse(in);
}

}  // namespace

int run_repl(const Engine& engine, const TaskLibrary& library, const ReplOptions& options, std::istream& in,
             std::ostream& out) {
  const auto* task = library.find(options.task_id);
  if (task == nullptr) {
    out << "unknown task \"" << options.task_id << "\"; available tasks:\n";
    print_tasks(library, out);
    return 1;
  }
  auto session = engine.start_session(*task, "repl");
  try {
    engine.greet(session);
    out << "system> " << session.greeting << "\n";
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
  }
  if (options.show_stack) out << render_stack_status(session.stack) << "\n";

  std::string line;
  while (true) {
    out << "you> " << std::flush;
    if (!std::getline(in, line)) break;
    auto text = trim(line);
    if (text.empty()) continue;
    if (text == "/quit") break;
    if (text == "/state") {
      print_state(session, out);
      continue;
    }
    if (text == "/tasks") {
      print_tasks(library, out);
      continue;
    }
    try {
      auto result = engine.take_turn(session, text);
      if (options.show_stack) {
        out << "action: " << result.decision.action.to_text();
        if (result.decision.fallback_used) out << " (fallback)";
        out << "\n" << render_stack_status(session.stack) << "\n";
      }
      out << "system> " << result.response << "\n";
      if (result.completion == Completion::complete) out << "(task complete)\n";
    } catch (const std::exception& e) {
      out << "error: " << e.what() << "\n";
    }
  }
  out << "\n";
  return 0;
}

std::map<std::string, Transcript> load_transcripts(const fs::path& out_dir) {
  auto dir = out_dir / "transcripts";
  if (!fs::is_directory(dir)) throw Error("no transcripts directory under " + out_dir.string());
  std::map<std::string, Transcript> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    auto t = read_json(entry.path()).get<Transcript>();
    out.emplace(t.task_id, std::move(t));
  }
  return out;
}

namespace {

std::vector<GradeVerdict> load_verdicts(const fs::path& out_dir) {
  auto file = out_dir / "verdicts.json";
  if (!fs::exists(file)) return {};
  return read_json(file).get<std::vector<GradeVerdict>>();
}

void write_report(const fs::path& out_dir, const std::vector<MetricsReport>& reports) {
  write_json(out_dir / "report.json", reports);
  std::ofstream md(out_dir / "report.md");
  if (!md) throw Error("cannot write report.md");
  md << render_metrics_table(reports);
}

int run_compare(const EvalOptions& options, const EvalGateways& gateways, const TaskLibrary& library,
                std::ostream& out) {
  auto a = load_transcripts(options.compare->first);
  auto b = load_transcripts(options.compare->second);
  if (a.empty() || b.empty()) throw Error("comparison needs transcripts on both sides");
  auto label_a = a.begin()->second.system_label;
  auto label_b = b.begin()->second.system_label;
  bool relabel = label_a == label_b;
  if (relabel) {
    label_a = "A:" + label_a;
    label_b = "B:" + label_b;
  }

  std::vector<Transcript> side_a, side_b;
  std::vector<ComparisonOutcome> outcomes;
  for (auto& [task_id, ta] : a) {
    auto it = b.find(task_id);
    const auto* task = library.find(task_id);
    if (it == b.end() || task == nullptr) continue;
    auto tb = it->second;
    if (relabel) {
      ta.system_label = label_a;
      tb.system_label = label_b;
    }
    auto outcome = judge_compare(ta, tb, *task, *gateways.judge);
    out << task_id << ": run1=" << json(outcome.run1).get<std::string>()
        << " run2=" << json(outcome.run2).get<std::string>() << " A=" << outcome.score_a
        << " B=" << outcome.score_b << (outcome.flagged ? " (flagged)" : "") << "\n";
    outcomes.push_back(std::move(outcome));
    side_a.push_back(ta);
    side_b.push_back(std::move(tb));
  }
  if (outcomes.empty()) throw Error("no task appears in both transcript sets");

  fs::create_directories(options.out_dir);
  write_json(options.out_dir / "comparison.json", outcomes);
  std::vector<MetricsReport> reports = {
      compute_metrics(side_a, load_verdicts(options.compare->first), outcomes),
      compute_metrics(side_b, load_verdicts(options.compare->second), outcomes)};
  write_report(options.out_dir, reports);
  out << render_metrics_table(reports);
  return 0;
}

}  // namespace

int run_eval(const EvalOptions& options, const EvalGateways& gateways, std::ostream& out, std::ostream& err) {
  if (options.max_rounds < 1) {
    err << "max-rounds must be >= 1\n";
    return 2;
  }
  if (!fs::is_directory(options.tasks_dir) && !fs::is_regular_file(options.tasks_dir)) {
    err << "task directory not found: " << options.tasks_dir.string() << "\n";
    return 2;
  }
  TaskLibrary library;
  try {
    library = load_library(options.tasks_dir, LoadMode::strict);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
  if (library.empty()) {
    err << "no tasks in " << options.tasks_dir.string() << "\n";
    return 2;
  }
  if (!gateways.judge || !gateways.simulator || !gateways.system) {
    err << "eval needs system, simulator and judge gateways\n";
    return 2;
  }

  if (options.compare) {
    try {
      return run_compare(options, gateways, library, out);
    } catch (const std::exception& e) {
      err << "comparison failed: " << e.what() << "\n";
      return 1;
    }
  }

  std::unique_ptr<Engine> engine;
  std::unique_ptr<DialogueSystem> system;
  if (options.system == EvalSystem::engine) {
    engine = std::make_unique<Engine>(gateways.system, gateways.engine_config, gateways.clock);
    system = std::make_unique<EngineSystem>(*engine);
  } else {
    system = std::make_unique<BaselineSystem>(gateways.system);
  }

  auto transcripts_dir = options.out_dir / "transcripts";
  fs::create_directories(transcripts_dir);

  std::vector<Transcript> transcripts;
  std::vector<GradeVerdict> verdicts;
  bool any_error = false;
  for (const auto& [task_id, task] : library.tasks) {
    auto t = run_episode(*system, task, *gateways.simulator, options.max_rounds, gateways.clock);
    write_json(transcripts_dir / (task_id + ".json"), t);
    out << task_id << ": " << t.rounds << " rounds, " << json(t.terminated_by).get<std::string>();
    if (t.terminated_by == Termination::error) {
      any_error = true;
      out << " (" << t.error << ")";
    }
    if (!t.messages.empty()) {
      try {
        auto v = judge_grade(t, task, *gateways.judge);
        out << ", rq " << v.rq;
        verdicts.push_back(std::move(v));
      } catch (const std::exception& e) {
        out << ", grading failed: " << e.what();
      }
    }
    out << "\n";
    transcripts.push_back(std::move(t));
  }
  write_json(options.out_dir / "verdicts.json", verdicts);

  try {
    std::vector<MetricsReport> reports = {compute_metrics(transcripts, verdicts, {})};
    write_report(options.out_dir, reports);
    out << render_metrics_table(reports);
  } catch (const std::exception& e) {
    err << "metrics failed: " << e.what() << "\n";
    return 1;
  }
  return any_error ? 1 : 0;
}

}  // namespace tod
