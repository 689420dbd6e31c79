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

#ifndef TOD_LLM_HPP_
#define TOD_LLM_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tod/core.hpp"

namespace tod {

using Bindings = std::map<std::string, std::string>;

class TemplateError : public Error {
 public:
  enum class Kind { missing_slot, unknown_slot, malformed, not_found };

  TemplateError(Kind kind, std::string slot, const std::string& what)
      : Error(what), kind_(kind), slot_(std::move(slot)) {}

  Kind kind() const { return kind_; }
  const std::string& slot() const { return slot_; }

 private:
  Kind kind_;
  std::string slot_;
};

// Prompt text with `{name}` slots. Literal braces are written `{{` and `}}`.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  // Throws TemplateError(malformed) on unbalanced braces or bad slot names.
  PromptTemplate(std::string name, std::string text);

  const std::string& name() const { return name_; }
  const std::string& text() const { return text_; }
  // Distinct slot names, sorted.
  const std::vector<std::string>& required_slots() const { return required_slots_; }
  bool has_slot(std::string_view slot) const;

 private:
  std::string name_;
  std::string text_;
  std::vector<std::string> required_slots_;
};

std::string render_template(const PromptTemplate& tmpl, const Bindings& bindings);

// Keeps only the bindings `tmpl` actually uses.
Bindings select_bindings(const PromptTemplate& tmpl, const Bindings& bindings);

enum class AgentRole { manager, context, enricher, chat, simulator, judge, baseline };

std::string_view to_string(AgentRole role);
std::optional<AgentRole> agent_role_from_string(std::string_view name);

struct CompletionRequest {
  AgentRole role = AgentRole::chat;
  // Either a template from the prompt pack, or raw prompt text when empty.
  std::string template_name;
  std::string raw_prompt;
  Bindings bindings;
  double temperature = 0.0;
  // Output budget in characters.
  std::size_t max_output = 16384;
};

// A request after templating; this is what backends see.
struct RenderedPrompt {
  AgentRole role = AgentRole::chat;
  std::string prompt;
  double temperature = 0.0;
  std::size_t max_output = 16384;
};

class GatewayError : public Error {
 public:
  enum class Kind { transport, budget_exceeded, protocol };

  GatewayError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const RenderedPrompt& prompt) = 0;
};

// Deterministic rule table. The first rule whose matcher accepts the prompt
// wins; otherwise the default response is returned. Every call is logged.
class ScriptedBackend : public LlmBackend {
 public:
  using Matcher = std::function<bool(AgentRole, const std::string&)>;

  struct Rule {
    Matcher matcher;
    std::string response;
  };

  explicit ScriptedBackend(std::string default_response = {});

  ScriptedBackend& add_rule(Matcher matcher, std::string response);
  // Shorthand: role must match and the prompt must contain every needle.
  ScriptedBackend& on(AgentRole role, std::vector<std::string> needles, std::string response);
  ScriptedBackend& on(AgentRole role, std::string response);

  // Rules file format:
  //   {"default": "...", "rules": [{"role": "manager", "contains": ["..."],
  //    "regex": "...", "response": "..."}]}
  static std::unique_ptr<ScriptedBackend> from_json(const json& doc);
  static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  std::string complete(const RenderedPrompt& prompt) override;

  std::vector<RenderedPrompt> call_log() const;
  std::size_t call_count() const;
  void clear_log();

 private:
  std::vector<Rule> rules_;
  std::string default_response_;
  mutable std::mutex mutex_;
  std::vector<RenderedPrompt> call_log_;
};

struct HttpBackendConfig {
  // Scheme + host (+ port), e.g. "https://api.openai.com".
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4-0613";
  std::string api_key;
  int retry_limit = 3;
  int timeout_seconds = 120;
  int retry_backoff_ms = 500;
};

// Chat-completions style backend: posts {model, messages, temperature} and
// reads choices[0].message.content. Transport failures, 429 and 5xx
// responses are retried up to retry_limit times.
class HttpBackend : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string complete(const RenderedPrompt& prompt) override;

  static json request_body(const HttpBackendConfig& config, const RenderedPrompt& prompt);

 private:
  HttpBackendConfig config_;
};

enum class PromptProfile { full, simplified };

std::string_view to_string(PromptProfile profile);
PromptProfile prompt_profile_from_string(std::string_view name);

// Directory of `<name>.txt` templates. A pack root holding `full/` and
// `simplified/` subdirectories resolves to the one matching the profile.
class PromptPack {
 public:
  PromptPack() = default;

  static PromptPack load(const std::filesystem::path& root, PromptProfile profile = PromptProfile::full);

  void add(PromptTemplate tmpl);
  bool has(std::string_view name) const;
  const PromptTemplate& get(std::string_view name) const;
  std::vector<std::string> names() const;
  PromptProfile profile() const { return profile_; }

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
  PromptProfile profile_ = PromptProfile::full;
};

inline const std::vector<std::string>& required_pack_files() {
  static const std::vector<std::string> files = {
      "manager",       "enricher",    "chat",          "action_create", "action_finish", "action_stay",
      "action_jump",   "action_load", "simulator",     "judge_grade",   "judge_compare"};
  return files;
}

struct GatewayOptions {
  // Replaces the temperature of every request when set.
  std::optional<double> temperature_override;
};

// Templating front for a backend. Shareable across sessions.
class Gateway {
 public:
  Gateway(std::shared_ptr<LlmBackend> backend, PromptPack pack, GatewayOptions options = {});

  RenderedPrompt render(const CompletionRequest& request) const;
  // Throws GatewayError(budget_exceeded) when the output exceeds max_output.
  std::string complete(const CompletionRequest& request) const;

  const PromptPack& pack() const { return pack_; }
  LlmBackend& backend() const { return *backend_; }

 private:
  std::shared_ptr<LlmBackend> backend_;
  PromptPack pack_;
  GatewayOptions options_;
};

}  // namespace tod

#endif  // TOD_LLM_HPP_
