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

#include "tod/llm.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace tod {

namespace {

bool is_slot_char(char c, bool first) {
  auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) || c == '_' || (!first && std::isdigit(u));
}

// Walks `text`, calling on_literal for literal runs and on_slot for slots.
template <typename Literal, typename Slot>
void scan_template(const std::string& name, const std::string& text, Literal on_literal, Slot on_slot) {
  auto malformed = [&](std::size_t pos, const std::string& why) {
    throw TemplateError(TemplateError::Kind::malformed, {},
                        "template \"" + name + "\": " + why + " at offset " + std::to_string(pos));
  };
  std::size_t i = 0;
  std::size_t run_start = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
      on_literal(std::string_view(text).substr(run_start, i - run_start));
      on_literal("{");
      i += 2;
      run_start = i;
    } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      on_literal(std::string_view(text).substr(run_start, i - run_start));
      on_literal("}");
      i += 2;
      run_start = i;
    } else if (c == '{') {
      auto close = text.find('}', i + 1);
      if (close == std::string::npos) malformed(i, "unterminated slot");
      auto slot = text.substr(i + 1, close - i - 1);
      if (slot.empty()) malformed(i, "empty slot");
      for (std::size_t k = 0; k < slot.size(); ++k) {
        if (!is_slot_char(slot[k], k == 0)) malformed(i, "invalid slot name \"" + slot + "\"");
      }
      on_literal(std::string_view(text).substr(run_start, i - run_start));
      on_slot(slot);
      i = close + 1;
      run_start = i;
    } else if (c == '}') {
      malformed(i, "stray '}'");
    } else {
      ++i;
    }
  }
  on_literal(std::string_view(text).substr(run_start));
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string text)
    : name_(std::move(name)), text_(std::move(text)) {
  std::set<std::string> slots;
  scan_template(name_, text_, [](std::string_view) {}, [&](const std::string& s) { slots.insert(s); });
  required_slots_.assign(slots.begin(), slots.end());
}

bool PromptTemplate::has_slot(std::string_view slot) const {
  return std::binary_search(required_slots_.begin(), required_slots_.end(), slot);
}

std::string render_template(const PromptTemplate& tmpl, const Bindings& bindings) {
  for (const auto& slot : tmpl.required_slots()) {
    if (!bindings.contains(slot)) {
      throw TemplateError(TemplateError::Kind::missing_slot, slot,
                          "template \"" + tmpl.name() + "\": missing slot \"" + slot + "\"");
    }
  }
  for (const auto& [slot, value] : bindings) {
    if (!tmpl.has_slot(slot)) {
      throw TemplateError(TemplateError::Kind::unknown_slot, slot,
                          "template \"" + tmpl.name() + "\": unknown slot \"" + slot + "\"");
    }
  }
  std::string out;
  out.reserve(tmpl.text().size());
  scan_template(
      tmpl.name(), tmpl.text(), [&](std::string_view lit) { out.append(lit); },
      [&](const std::string& slot) { out.append(bindings.at(slot)); });
  return out;
}

Bindings select_bindings(const PromptTemplate& tmpl, const Bindings& bindings) {
  Bindings out;
  for (const auto& [slot, value] : bindings) {
    if (tmpl.has_slot(slot)) out.emplace(slot, value);
  }
  return out;
}

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::manager: return "manager";
    case AgentRole::context: return "context";
    case AgentRole::enricher: return "enricher";
    case AgentRole::chat: return "chat";
    case AgentRole::simulator: return "simulator";
    case AgentRole::judge: return "judge";
    case AgentRole::baseline: return "baseline";
  }
  return "chat";
}

std::optional<AgentRole> agent_role_from_string(std::string_view name) {
  for (auto role : {AgentRole::manager, AgentRole::context, AgentRole::enricher, AgentRole::chat,
                    AgentRole::simulator, AgentRole::judge, AgentRole::baseline}) {
    if (to_string(role) == name) return role;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::string default_response) : default_response_(std::move(default_response)) {}

ScriptedBackend& ScriptedBackend::add_rule(Matcher matcher, std::string response) {
  rules_.push_back({std::move(matcher), std::move(response)});
  return *this;
}

ScriptedBackend& ScriptedBackend::on(AgentRole role, std::vector<std::string> needles, std::string response) {
  return add_rule(
      [role, needles = std::move(needles)](AgentRole r, const std::string& prompt) {
        if (r != role) return false;
        return std::all_of(needles.begin(), needles.end(),
                           [&](const std::string& n) { return prompt.find(n) != std::string::npos; });
      },
      std::move(response));
}

ScriptedBackend& ScriptedBackend::on(AgentRole role, std::string response) {
  return on(role, std::vector<std::string>{}, std::move(response));
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& doc) {
  auto backend = std::make_unique<ScriptedBackend>(doc.value("default", std::string{}));
  for (const auto& rule : doc.value("rules", json::array())) {
    std::optional<AgentRole> role;
    if (rule.contains("role")) {
      auto name = rule.at("role").get<std::string>();
      role = agent_role_from_string(name);
      if (!role) throw Error("scripted rule: unknown role \"" + name + "\"");
    }
    std::vector<std::string> needles;
    if (rule.contains("contains")) {
      const auto& c = rule.at("contains");
      if (c.is_string()) {
        needles.push_back(c.get<std::string>());
      } else {
        needles = c.get<std::vector<std::string>>();
      }
    }
    std::optional<std::regex> pattern;
    if (rule.contains("regex")) pattern.emplace(rule.at("regex").get<std::string>());
    backend->add_rule(
        [role, needles, pattern](AgentRole r, const std::string& prompt) {
          if (role && *role != r) return false;
          for (const auto& n : needles) {
            if (prompt.find(n) == std::string::npos) return false;
          }
          return !pattern || std::regex_search(prompt, *pattern);
        },
        rule.at("response").get<std::string>());
  }
  return backend;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open script file " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error("script file " + path.string() + ": " + e.what());
  }
}

std::string ScriptedBackend::complete(const RenderedPrompt& prompt) {
  std::string response = default_response_;
  for (const auto& rule : rules_) {
    if (rule.matcher(prompt.role, prompt.prompt)) {
      response = rule.response;
      break;
    }
  }
  std::lock_guard lock(mutex_);
  call_log_.push_back(prompt);
  return response;
}

std::vector<RenderedPrompt> ScriptedBackend::call_log() const {
  std::lock_guard lock(mutex_);
  return call_log_;
}

std::size_t ScriptedBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return call_log_.size();
}

void ScriptedBackend::clear_log() {
  std::lock_guard lock(mutex_);
  call_log_.clear();
}

// ---------------------------------------------------------------------------
// HttpBackend

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {}

json HttpBackend::request_body(const HttpBackendConfig& config, const RenderedPrompt& prompt) {
  return json{{"model", config.model},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt.prompt}}})},
              {"temperature", prompt.temperature}};
}

std::string HttpBackend::complete(const RenderedPrompt& prompt) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto body = request_body(config_, prompt).dump();
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
    if (attempt > 0 && config_.retry_backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms * attempt));
    }
    auto res = client.Post(config_.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw GatewayError(GatewayError::Kind::protocol,
                         "completion endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      auto doc = json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw GatewayError(GatewayError::Kind::protocol, std::string("malformed completion payload: ") + e.what());
    }
  }
  throw GatewayError(GatewayError::Kind::transport,
                     "completion failed after " + std::to_string(config_.retry_limit + 1) + " attempts (" +
                         last_error + ")");
}

// ---------------------------------------------------------------------------
// PromptPack

std::string_view to_string(PromptProfile profile) {
  return profile == PromptProfile::full ? "full" : "simplified";
}

PromptProfile prompt_profile_from_string(std::string_view name) {
  if (name == "full") return PromptProfile::full;
  if (name == "simplified") return PromptProfile::simplified;
  throw Error("unknown prompt profile \"" + std::string(name) + "\"");
}

PromptPack PromptPack::load(const std::filesystem::path& root, PromptProfile profile) {
  namespace fs = std::filesystem;
  auto dir = root;
  if (fs::is_directory(root / std::string(to_string(profile)))) dir = root / std::string(to_string(profile));
  if (!fs::is_directory(dir)) {
    throw TemplateError(TemplateError::Kind::not_found, {}, "prompt pack directory not found: " + dir.string());
  }
  PromptPack pack;
  pack.profile_ = profile;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    pack.add(PromptTemplate(entry.path().stem().string(), text.str()));
  }
  for (const auto& name : required_pack_files()) {
    if (!pack.has(name)) {
      throw TemplateError(TemplateError::Kind::not_found, name,
                          "prompt pack " + dir.string() + " is missing " + name + ".txt");
    }
  }
  return pack;
}

void PromptPack::add(PromptTemplate tmpl) {
  auto name = tmpl.name();
  templates_.insert_or_assign(std::move(name), std::move(tmpl));
}

bool PromptPack::has(std::string_view name) const { return templates_.find(name) != templates_.end(); }

const PromptTemplate& PromptPack::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw TemplateError(TemplateError::Kind::not_found, std::string(name),
                        "prompt template \"" + std::string(name) + "\" not in pack");
  }
  return it->second;
}

std::vector<std::string> PromptPack::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : templates_) out.push_back(name);
  return out;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<LlmBackend> backend, PromptPack pack, GatewayOptions options)
    : backend_(std::move(backend)), pack_(std::move(pack)), options_(options) {
  if (!backend_) throw Error("gateway requires a backend");
}

RenderedPrompt Gateway::render(const CompletionRequest& request) const {
  RenderedPrompt out;
  out.role = request.role;
  out.temperature = options_.temperature_override.value_or(request.temperature);
  out.max_output = request.max_output;
  if (request.template_name.empty()) {
    out.prompt = request.raw_prompt;
  } else {
    out.prompt = render_template(pack_.get(request.template_name), request.bindings);
  }
  return out;
}

std::string Gateway::complete(const CompletionRequest& request) const {
  auto prompt = render(request);
  auto text = backend_->complete(prompt);
  if (text.size() > prompt.max_output) {
    throw GatewayError(GatewayError::Kind::budget_exceeded,
                       std::string(to_string(request.role)) + " output of " + std::to_string(text.size()) +
                           " chars exceeds budget " + std::to_string(prompt.max_output));
  }
  return text;
}

}  // namespace tod
