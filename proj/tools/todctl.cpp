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

// todctl: serve, chat, eval, tasks, validate.

#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "tod/cli.hpp"
#include "tod/service.hpp"
#include "tod/tasks.hpp"

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

struct CommonFlags {
  std::string config;
  std::string backend;
  std::string script;
  std::string profile;
  std::string tasks;
};

tod::ServiceConfig resolve_config(const CommonFlags& flags) {
  auto config = flags.config.empty() ? tod::ServiceConfig{} : tod::ServiceConfig::load(flags.config);
  if (!flags.backend.empty()) config.backend = flags.backend;
  if (!flags.script.empty()) config.script_path = flags.script;
  if (!flags.profile.empty()) config.profile = tod::prompt_profile_from_string(flags.profile);
  if (!flags.tasks.empty()) config.task_library = flags.tasks;
  if (config.script_path.empty()) config.script_path = "data/scripts/offline.json";
  return config;
}

std::shared_ptr<tod::Gateway> gateway_for(const tod::ServiceConfig& config, const std::string& kind,
                                          const std::string& script) {
  return tod::make_gateway(config, tod::make_backend(config, kind, script));
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--backend", flags.backend, "Model backend")->check(CLI::IsMember({"http", "scripted"}));
  cmd->add_option("--script", flags.script, "Rules file for the scripted backend");
  cmd->add_option("--profile", flags.profile, "Prompt profile")->check(CLI::IsMember({"full", "simplified"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stack-based task-oriented dialogue engine"};
  app.require_subcommand(1);

  CommonFlags serve_flags;
  std::string host;
  int port = 0;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  add_common(serve, serve_flags);
  serve->add_option("--tasks", serve_flags.tasks, "Task library directory or file");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port");

  CommonFlags chat_flags;
  std::string chat_task = "clinical";
  bool show_stack = false;
  auto* chat = app.add_subcommand("chat", "Interactive terminal session");
  add_common(chat, chat_flags);
  chat->add_option("--tasks", chat_flags.tasks, "Task library directory or file");
  chat->add_option("--task", chat_task, "Task id")->capture_default_str();
  chat->add_flag("--show-stack", show_stack, "Print the stack and chosen action each round");

  CommonFlags eval_flags;
  std::string system = "engine";
  int max_rounds = tod::kDefaultMaxRounds;
  std::string out_dir = "eval_out";
  std::string judge_backend;
  std::string judge_script;
  std::string sim_script;
  std::vector<std::string> compare;
  auto* eval = app.add_subcommand("eval", "Run simulated episodes and grade them");
  add_common(eval, eval_flags);
  eval->add_option("--tasks", eval_flags.tasks, "Task library directory or file");
  eval->add_option("--system", system, "System under test")
      ->check(CLI::IsMember({"engine", "baseline"}))
      ->capture_default_str();
  eval->add_option("--max-rounds", max_rounds, "Round limit per episode")->capture_default_str();
  eval->add_option("--out", out_dir, "Output directory")->capture_default_str();
  eval->add_option("--judge", judge_backend, "Backend for the judge and simulator")
      ->check(CLI::IsMember({"http", "scripted"}));
  eval->add_option("--judge-script", judge_script, "Rules file for a scripted judge and simulator");
  eval->add_option("--compare", compare, "Compare two earlier output directories")->expected(2);

  CommonFlags tasks_flags;
  auto* tasks = app.add_subcommand("tasks", "List the task library");
  tasks->add_option("--config", tasks_flags.config, "JSON config file")->check(CLI::ExistingFile);
  tasks->add_option("--tasks", tasks_flags.tasks, "Task library directory or file");

  std::string validate_path = "data/tasks";
  bool lenient = false;
  auto* validate = app.add_subcommand("validate", "Check a task library");
  validate->add_option("path", validate_path, "Task directory or file")->capture_default_str();
  validate->add_flag("--lenient", lenient, "Accept checklists of 1-20 items");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      auto config = resolve_config(serve_flags);
      if (!host.empty()) config.host = host;
      if (port != 0) config.port = port;
      config.validate();
      auto engine = std::make_shared<tod::Engine>(gateway_for(config, config.backend, config.script_path),
                                                  config.engine_config());
      tod::Service service(engine, tod::load_library(config.task_library), config.log_dir);
      auto recovered = service.store().recover();
      httplib::Server server;
      tod::mount_routes(server, service, config.static_dir);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << config.host << ":" << config.port << " (" << service.library().size()
                << " tasks, " << recovered << " sessions recovered)" << std::endl;
      if (!server.listen(config.host, config.port)) {
        std::cerr << "cannot listen on " << config.host << ":" << config.port << "\n";
        return 1;
      }
      return 0;
    }

    if (*chat) {
      auto config = resolve_config(chat_flags);
      config.validate();
      tod::Engine engine(gateway_for(config, config.backend, config.script_path), config.engine_config());
      auto library = tod::load_library(config.task_library);
      return tod::run_repl(engine, library, {chat_task, show_stack}, std::cin, std::cout);
    }

    if (*eval) {
      auto config = resolve_config(eval_flags);
      tod::EvalOptions options;
      options.tasks_dir = config.task_library;
      options.system = system == "baseline" ? tod::EvalSystem::baseline : tod::EvalSystem::engine;
      options.max_rounds = max_rounds;
      options.out_dir = out_dir;
      if (compare.size() == 2) options.compare = std::make_pair(compare[0], compare[1]);

      tod::EvalGateways gateways;
      gateways.engine_config = config.engine_config();
      gateways.system = gateway_for(config, config.backend, config.script_path);
      auto judge_kind = judge_backend.empty() ? config.backend : judge_backend;
      auto judge = gateway_for(config, judge_kind, judge_script.empty() ? config.script_path : judge_script);
      gateways.simulator = judge;
      gateways.judge = judge;
      return tod::run_eval(options, gateways, std::cout, std::cerr);
    }

    if (*tasks) {
      auto config = resolve_config(tasks_flags);
      auto library = tod::load_library(config.task_library);
      for (const auto& s : tod::list_scenarios(library)) {
        std::cout << s.task_id << "\t" << s.scenario << "\n";
      }
      return 0;
    }

    if (*validate) {
      auto library = tod::load_library(validate_path, lenient ? tod::LoadMode::lenient : tod::LoadMode::strict);
      for (const auto& w : library.warnings) std::cout << "warning: " << w << "\n";
      std::cout << library.size() << " tasks ok\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
