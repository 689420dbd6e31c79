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


#include <doctest.h>

#include "fixtures.hpp"
#include "tod/topic_manager.hpp"

using namespace tod;
using tod::testing::medical_task;

namespace {

PromptPack manager_pack() {
  PromptPack pack;
  pack.add(PromptTemplate("manager", "Q:{query}\nS:{stack}\nH:{history}\nA:{actions}\n{guidance}"));
  return pack;
}

struct Rig {
  std::shared_ptr<ScriptedBackend> backend = std::make_shared<ScriptedBackend>("gibberish");
  Gateway gateway{backend, manager_pack()};
  ActionCatalog catalog = ActionCatalog::for_profile(PromptProfile::full);
  TaskDefinition task = medical_task();
  TopicStack stack;
  std::vector<ChatMessage> history;

  ActionDecision decide(std::string_view query = "hello") {
    return decide_action({query, stack, history, task}, catalog, gateway);
  }
};

ParseError::Reason parse_reason(std::string_view text, const TopicStack& stack, const ActionCatalog& catalog) {
  try {
    parse_action_output(text, stack, catalog, "clinical");
  } catch (const ParseError& e) {
    return e.reason();
  }
  FAIL("expected ParseError");
  return ParseError::Reason::no_action;
}

TopicStack one_topic() {
  TopicStack s;
  s.apply(Action::create_topic("A"), 1);
  return s;
}

}  // namespace

TEST_CASE("catalog profiles") {
  auto full = ActionCatalog::for_profile(PromptProfile::full);
  CHECK(full.entries().size() == 5);
  for (auto k : {ActionKind::load_topics, ActionKind::create_topic, ActionKind::finish_current,
                 ActionKind::stay_current, ActionKind::jump_to}) {
    CHECK(full.contains(k));
  }
  auto simple = ActionCatalog::for_profile(PromptProfile::simplified);
  CHECK(simple.entries().size() == 3);
  CHECK_FALSE(simple.contains(ActionKind::jump_to));
  CHECK_FALSE(simple.contains(ActionKind::load_topics));
  CHECK(full.render().find("- jump_to: <topic id>") != std::string::npos);
}

TEST_CASE("catalog descriptions come from the pack") {
  auto pack = PromptPack::load(tod::testing::prompt_dir(), PromptProfile::full);
  auto catalog = ActionCatalog::for_profile(PromptProfile::full, &pack, "clinical");
  auto text = catalog.render();
  CHECK(text.find("\"clinical\"") != std::string::npos);
  CHECK(text.find(trim(pack.get("action_stay").text())) != std::string::npos);
}

TEST_CASE("parse canonical lines") {
  auto catalog = ActionCatalog::for_profile(PromptProfile::full);
  auto stack = one_topic();
  CHECK(parse_action_output("create_topic: COVID-19 symptoms", stack, catalog, "clinical") ==
        Action::create_topic("COVID-19 symptoms"));
  CHECK(parse_action_output("finish_current", stack, catalog, "clinical") == Action::finish_current());
  CHECK(parse_action_output("Decision:\n  stay_current.\n", stack, catalog, "clinical") == Action::stay_current());
  CHECK(parse_action_output("jump_to: 1", stack, catalog, "clinical") == Action::jump_to(TopicId{1}));
  CHECK(parse_action_output("jump_to: topic #1", stack, catalog, "clinical") == Action::jump_to(TopicId{1}));
  CHECK(parse_action_output("create_topic: \"Fever\"", stack, catalog, "clinical") == Action::create_topic("Fever"));
  CHECK(parse_action_output("load_topics", stack, catalog, "clinical") == Action::load_topics("clinical"));
}

TEST_CASE("parse rejects two different actions") {
  TopicStack s;
  s.apply(Action::create_topic("B"), 1);
  s.apply(Action::create_topic("A"), 1);
  auto catalog = ActionCatalog::for_profile(PromptProfile::full);
  CHECK(parse_reason("I think we should finish_current and also jump_to: 2", s, catalog) ==
        ParseError::Reason::multiple_actions);
  // Repeating the same action is still one action.
  CHECK(parse_action_output("finish_current. Yes, finish_current", s, catalog, "clinical") ==
        Action::finish_current());
}

TEST_CASE("parse error reasons") {
  auto catalog = ActionCatalog::for_profile(PromptProfile::full);
  auto stack = one_topic();
  CHECK(parse_reason("jump_to: 99", stack, catalog) == ParseError::Reason::invalid_jump_target);
  CHECK(parse_reason("jump_to: the second one", stack, catalog) == ParseError::Reason::invalid_jump_target);
  CHECK(parse_reason("jump_to", stack, catalog) == ParseError::Reason::missing_payload);
  CHECK(parse_reason("create_topic:   ", stack, catalog) == ParseError::Reason::missing_payload);
  CHECK(parse_reason("dance_wildly: now", stack, catalog) == ParseError::Reason::unknown_kind);
  CHECK(parse_reason("I have no idea", stack, catalog) == ParseError::Reason::no_action);
  CHECK(parse_reason("load_topics: hotel", stack, catalog) == ParseError::Reason::task_mismatch);
  auto simple = ActionCatalog::for_profile(PromptProfile::simplified);
  CHECK(parse_reason("jump_to: 1", stack, simple) == ParseError::Reason::kind_not_in_catalog);
}

TEST_CASE("empty stack accepts only create and load") {
  auto catalog = ActionCatalog::for_profile(PromptProfile::full);
  TopicStack empty;
  CHECK(parse_reason("finish_current", empty, catalog) == ParseError::Reason::not_allowed_on_empty_stack);
  CHECK(parse_reason("stay_current", empty, catalog) == ParseError::Reason::not_allowed_on_empty_stack);
  CHECK(parse_action_output("create_topic: x", empty, catalog, "clinical").kind() == ActionKind::create_topic);
  CHECK(parse_action_output("load_topics: clinical", empty, catalog, "clinical").kind() == ActionKind::load_topics);
}

TEST_CASE("long create titles are truncated to the limit") {
  auto catalog = ActionCatalog::for_profile(PromptProfile::full);
  TopicStack empty;
  auto a = parse_action_output("create_topic: " + std::string(300, 'y'), empty, catalog, "clinical");
  CHECK(a.payload().size() == kMaxTopicTitle);
}

TEST_CASE("decide_action: clean reply") {
  Rig rig;
  rig.stack = one_topic();
  rig.backend->on(AgentRole::manager, "finish_current");
  auto d = rig.decide();
  CHECK(d.action == Action::finish_current());
  CHECK_FALSE(d.repaired);
  CHECK_FALSE(d.fallback_used);
  CHECK(rig.backend->call_count() == 1);
  CHECK(rig.backend->call_log()[0].temperature == 0.0);
}

TEST_CASE("decide_action: gibberish twice falls back to stay_current") {
  Rig rig;
  rig.stack = one_topic();
  auto d = rig.decide();
  CHECK(d.action == Action::stay_current());
  CHECK(d.repaired);
  CHECK(d.fallback_used);
  CHECK(d.errors.size() == 2);
  auto log = rig.backend->call_log();
  REQUIRE(log.size() == 2);
  CHECK(log[1].prompt.find("could not be used") != std::string::npos);
  CHECK(log[1].prompt.find("gibberish") != std::string::npos);
}

TEST_CASE("decide_action: repair succeeds") {
  Rig rig;
  rig.stack = one_topic();
  rig.backend->on(AgentRole::manager, {"could not be used"}, "stay_current");
  rig.backend->on(AgentRole::manager, "jump_to: 42");
  auto d = rig.decide();
  CHECK(d.action == Action::stay_current());
  CHECK(d.repaired);
  CHECK_FALSE(d.fallback_used);
}

TEST_CASE("decide_action: jump to an existing topic") {
  Rig rig;
  for (int i = 0; i < 7; ++i) rig.stack.apply(Action::create_topic("t" + std::to_string(i + 1)), 1);
  REQUIRE(rig.stack.contains(TopicId{7}));
  rig.backend->on(AgentRole::manager, "jump_to: 7");
  CHECK(rig.decide().action == Action::jump_to(TopicId{7}));
}

TEST_CASE("decide_action: empty stack gets guidance and rejects finish") {
  Rig rig;
  rig.backend->on(AgentRole::manager, {"could not be used"}, "load_topics");
  rig.backend->on(AgentRole::manager, "finish_current");
  auto d = rig.decide();
  CHECK(d.action == Action::load_topics("clinical"));
  CHECK(d.repaired);
  auto first = rig.backend->call_log()[0].prompt;
  CHECK(first.find("load_topics: clinical") != std::string::npos);
  CHECK(first.find("stack is empty") != std::string::npos);
}

TEST_CASE("decide_action: simplified profile never yields a missing kind") {
  Rig rig;
  rig.catalog = ActionCatalog::for_profile(PromptProfile::simplified);
  rig.stack = one_topic();
  rig.backend->on(AgentRole::manager, "jump_to: 1");
  auto d = rig.decide();
  CHECK(rig.catalog.contains(d.action.kind()));
  CHECK(d.fallback_used);
}

TEST_CASE("decide_action: gateway errors propagate") {
  struct Failing : LlmBackend {
    std::string complete(const RenderedPrompt&) override {
      throw GatewayError(GatewayError::Kind::transport, "down");
    }
  };
  Gateway gw(std::make_shared<Failing>(), manager_pack());
  TopicStack stack;
  auto task = medical_task();
  std::vector<ChatMessage> history;
  CHECK_THROWS_AS(decide_action({"q", stack, history, task}, ActionCatalog::for_profile(PromptProfile::full), gw),
                  GatewayError);
}

TEST_CASE("manager prompt carries query, stack, history and actions") {
  Rig rig;
  rig.stack = one_topic();
  rig.history = {{1, Speaker::user, "earlier question", 0}, {1, Speaker::system, "earlier answer", 0}};
  rig.backend->on(AgentRole::manager, "stay_current");
  rig.decide("the latest query");
  auto prompt = rig.backend->call_log()[0].prompt;
  CHECK(prompt.find("the latest query") != std::string::npos);
  CHECK(prompt.find("[0] A (user_created, active") != std::string::npos);
  CHECK(prompt.find("User: earlier question\nSystem: earlier answer") != std::string::npos);
  CHECK(prompt.find("- finish_current") != std::string::npos);
}

TEST_CASE("render_history") {
  CHECK(render_history({}) == "(no messages yet)");
  std::vector<ChatMessage> h = {{1, Speaker::user, "hi", 0}, {1, Speaker::system, "hello", 0}};
  CHECK(render_history(h) == "User: hi\nSystem: hello");
}

TEST_CASE("ActionDecision JSON round-trip") {
  ActionDecision d{Action::jump_to(TopicId{3}), "jump_to: 3", true, false, {"e1"}};
  CHECK(json(d).get<ActionDecision>() == d);
}
