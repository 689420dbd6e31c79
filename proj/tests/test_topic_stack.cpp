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


#include <algorithm>
#include <random>
#include <set>

#include <doctest.h>

#include "fixtures.hpp"
#include "tod/topic_stack.hpp"

using namespace tod;
using tod::testing::medical_task;
using tod::testing::numbered_task;

namespace {

std::vector<std::string> titles(const TopicStack& s) {
  std::vector<std::string> out;
  for (const auto& t : s.entries()) out.push_back(t.title);
  return out;
}

std::vector<std::int64_t> ids(const TopicStack& s) {
  std::vector<std::int64_t> out;
  for (const auto& t : s.entries()) out.push_back(t.id.value);
  return out;
}

TopicStack abc() {
  TopicStack s;
  for (const char* t : {"C", "B", "A"}) s.apply(Action::create_topic(t), 1);
  return s;
}

}  // namespace

TEST_CASE("load_checklist puts item 1 on top") {
  TopicStack s;
  auto task = medical_task();
  auto delta = s.load_checklist(task, 1);
  CHECK(s.size() == 6);
  CHECK(s.current_topic()->title == "Basic information");
  CHECK(titles(s) == std::vector<std::string>{"Basic information", "Chief complaint", "Duration of symptoms",
                                              "Severity of symptoms", "Current medication", "Allergies"});
  CHECK(delta.pushed.size() == 6);
  CHECK(delta.action == Action::load_topics("clinical"));
  for (const auto& t : s.entries()) {
    CHECK(t.origin == Origin::predefined);
    CHECK(t.category == Category::ask_user);
  }
  CHECK(s.entries()[0].status == TopicStatus::active);
  CHECK(s.entries()[1].status == TopicStatus::pending);
}

TEST_CASE("load_checklist is idempotent") {
  TopicStack s;
  auto task = medical_task();
  s.load_checklist(task, 1);
  auto before = s;
  auto delta = s.load_checklist(task, 2);
  CHECK(delta.pushed.empty());
  CHECK(s == before);
}

TEST_CASE("load_checklist skips finished items") {
  TopicStack s;
  auto task = medical_task();
  s.load_checklist(task, 1);
  s.apply(Action::finish_current(), 1);
  s.load_checklist(task, 2);
  CHECK(s.size() == 5);
  CHECK(s.current_topic()->title == "Chief complaint");
}

TEST_CASE("load_checklist keeps existing entries below the block") {
  TopicStack s;
  s.apply(Action::create_topic("COVID-19"), 1);
  s.load_checklist(medical_task(), 1);
  CHECK(s.size() == 7);
  CHECK(s.entries().back().title == "COVID-19");
  CHECK(s.current_topic()->title == "Basic information");
}

TEST_CASE("create_topic pushes an active user topic") {
  TopicStack s;
  s.load_checklist(medical_task(), 1);
  auto delta = s.apply(Action::create_topic("COVID-19"), 4);
  const auto* top = s.current_topic();
  REQUIRE(top != nullptr);
  CHECK(top->title == "COVID-19");
  CHECK(top->origin == Origin::user_created);
  CHECK(top->category == Category::answer_user);
  CHECK(top->status == TopicStatus::active);
  CHECK(top->created_round == 4);
  CHECK(top->last_active_round == 4);
  CHECK(delta.pushed_ids() == std::vector<TopicId>{top->id});
  CHECK(s.entries()[1].status == TopicStatus::pending);
}

TEST_CASE("create_topic rejects bad titles") {
  TopicStack s;
  CHECK_THROWS_AS(s.apply(Action::create_topic(std::string(201, 'x')), 1), StackError);
  CHECK(s.empty());
  s.apply(Action::create_topic(std::string(200, 'x')), 1);
  CHECK(s.size() == 1);
}

TEST_CASE("jump_to moves the target to the top") {
  auto s = abc();
  REQUIRE(titles(s) == std::vector<std::string>{"A", "B", "C"});
  auto c = s.entries()[2].id;
  auto delta = s.apply(Action::jump_to(c), 2);
  CHECK(titles(s) == std::vector<std::string>{"C", "A", "B"});
  CHECK(delta.reordered);
  CHECK(s.current_topic()->last_active_round == 2);
  CHECK(s.current_topic()->status == TopicStatus::active);
}

TEST_CASE("jump_to the top is a no-op reorder") {
  auto s = abc();
  auto delta = s.apply(Action::jump_to(s.entries()[0].id), 3);
  CHECK_FALSE(delta.reordered);
  CHECK(titles(s) == std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("jump_to an absent id fails and leaves the stack") {
  auto s = abc();
  auto before = s;
  try {
    s.apply(Action::jump_to(TopicId{99}), 2);
    FAIL("expected StackError");
  } catch (const StackError& e) {
    CHECK(e.kind() == StackError::Kind::invalid_jump_target);
  }
  CHECK(s == before);
}

TEST_CASE("finish_current") {
  TopicStack s;
  s.apply(Action::create_topic("A"), 1);
  auto a = s.current_topic()->id;
  auto delta = s.apply(Action::finish_current(), 2);
  CHECK(s.empty());
  REQUIRE(s.finished_log().size() == 1);
  CHECK(s.finished_log()[0].id == a);
  CHECK(s.finished_log()[0].round == 2);
  CHECK(delta.popped == std::vector<TopicId>{a});
  CHECK(s.archive().back().status == TopicStatus::finished);
  CHECK(s.is_finished(a));
}

TEST_CASE("finish_current on an empty stack fails") {
  TopicStack s;
  try {
    s.apply(Action::finish_current(), 1);
    FAIL("expected StackError");
  } catch (const StackError& e) {
    CHECK(e.kind() == StackError::Kind::empty_stack_finish);
  }
  CHECK(s.empty());
  CHECK(s.finished_log().empty());
}

TEST_CASE("stay_current refreshes the top only") {
  auto s = abc();
  auto before = ids(s);
  s.apply(Action::stay_current(), 5);
  CHECK(ids(s) == before);
  CHECK(s.entries()[0].last_active_round == 5);
  CHECK(s.entries()[1].last_active_round == 1);
  TopicStack empty;
  auto delta = empty.apply(Action::stay_current(), 1);
  CHECK(empty.empty());
  CHECK(delta.pushed.empty());
}

TEST_CASE("load_topics needs the matching task") {
  TopicStack s;
  auto task = medical_task();
  CHECK_THROWS_AS(s.apply(Action::load_topics("hotel"), 1, &task), StackError);
  CHECK_THROWS_AS(s.apply(Action::load_topics("clinical"), 1, nullptr), StackError);
  s.apply(Action::load_topics("clinical"), 1, &task);
  CHECK(s.size() == 6);
}

TEST_CASE("sweep_evictions") {
  SUBCASE("stale user topic below the top is evicted") {
    TopicStack s;
    s.apply(Action::create_topic("digression"), 2);
    auto d = s.current_topic()->id;
    s.apply(Action::create_topic("newer"), 5);
    // 2 <= 5 - 3
    CHECK(s.sweep_evictions(5, 3) == std::vector<TopicId>{d});
    CHECK(s.size() == 1);
    CHECK(s.archive().back().status == TopicStatus::evicted);
  }
  SUBCASE("not yet stale") {
    TopicStack s;
    s.apply(Action::create_topic("digression"), 3);
    s.apply(Action::create_topic("newer"), 5);
    // 3 > 5 - 3
    CHECK(s.sweep_evictions(5, 3).empty());
  }
  SUBCASE("predefined topics are retained") {
    TopicStack s;
    s.load_checklist(medical_task(), 1);
    s.apply(Action::create_topic("top"), 10);
    CHECK(s.sweep_evictions(10, 3).empty());
    CHECK(s.size() == 7);
  }
  SUBCASE("stale user topic on top is retained") {
    TopicStack s;
    s.apply(Action::create_topic("old"), 1);
    CHECK(s.sweep_evictions(10, 3).empty());
    CHECK(s.size() == 1);
  }
  SUBCASE("window must be positive") {
    TopicStack s;
    CHECK_THROWS_AS(s.sweep_evictions(3, 0), std::invalid_argument);
  }
}

TEST_CASE("current_topic") {
  TopicStack s;
  CHECK(s.current_topic() == nullptr);
  s.apply(Action::create_topic("B"), 1);
  s.apply(Action::create_topic("A"), 1);
  CHECK(s.current_topic()->title == "A");
  s.apply(Action::jump_to(s.entries()[1].id), 2);
  CHECK(s.current_topic()->title == "B");
}

TEST_CASE("checklist_progress") {
  TopicStack s;
  auto task = medical_task();
  s.load_checklist(task, 1);
  CHECK(checklist_progress(s, task) == ChecklistProgress{0, 6});
  for (int i = 0; i < 4; ++i) s.apply(Action::finish_current(), i + 1);
  CHECK(checklist_progress(s, task) == ChecklistProgress{4, 6});
  for (int i = 0; i < 2; ++i) s.apply(Action::finish_current(), 5 + i);
  CHECK(checklist_progress(s, task) == ChecklistProgress{6, 6});
}

TEST_CASE("stack JSON round-trip") {
  auto s = abc();
  s.apply(Action::finish_current(), 2);
  s.load_checklist(medical_task(), 3);
  json j = s;
  CHECK(j.get<TopicStack>() == s);
}

TEST_CASE("apply_delta rejects a delta that does not fit") {
  TopicStack s;
  StackDelta d;
  d.round = 1;
  d.action = Action::finish_current();
  d.popped = {TopicId{4}};
  CHECK_THROWS_AS(s.apply_delta(d), StackError);
}

// Randomized sequences checked against independently stated properties.
TEST_CASE("randomized stack properties") {
  std::mt19937 rng(20260418);
  const auto task = numbered_task("prop", 6);
  for (int trial = 0; trial < 300; ++trial) {
    TopicStack s;
    std::vector<StackDelta> log;
    std::set<std::int64_t> created;
    int steps = std::uniform_int_distribution<int>(1, 30)(rng);
    int window = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int round = 1; round <= steps; ++round) {
      int pick = std::uniform_int_distribution<int>(0, 9)(rng);
      Action action = Action::stay_current();
      if (pick == 0) action = Action::load_topics(task.task_id);
      else if (pick <= 3) action = Action::create_topic("t" + std::to_string(round));
      else if (pick <= 5 && !s.empty()) action = Action::finish_current();
      else if (pick <= 7 && !s.empty()) {
        auto i = std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng);
        action = Action::jump_to(s.entries()[i].id);
      }
      auto before = s;
      auto delta = s.apply(action, round, &task);
      auto before_ids = ids(before), after_ids = ids(s);

      if (action.kind() == ActionKind::jump_to) {
        std::sort(before_ids.begin(), before_ids.end());
        std::sort(after_ids.begin(), after_ids.end());
        CHECK(before_ids == after_ids);
      } else if (action.kind() != ActionKind::load_topics) {
        auto diff = static_cast<long>(after_ids.size()) - static_cast<long>(before_ids.size());
        CHECK(std::abs(diff) <= 1);
      }
      for (const auto& t : delta.pushed) created.insert(t.id.value);

      auto top = s.empty() ? TopicId{} : s.entries()[0].id;
      delta.evicted = s.sweep_evictions(round, window);
      for (auto id : delta.evicted) {
        CHECK(id != top);
        for (const auto& a : s.archive()) {
          if (a.id == id) CHECK(a.origin == Origin::user_created);
        }
      }
      log.push_back(delta);

      for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.entries()[i].status == (i == 0 ? TopicStatus::active : TopicStatus::pending));
      }
    }
    CHECK(replay(log) == s);

    // Every created id ends up in exactly one place.
    std::multiset<std::int64_t> places;
    for (const auto& t : s.entries()) places.insert(t.id.value);
    for (const auto& t : s.archive()) places.insert(t.id.value);
    CHECK(places.size() == created.size());
    for (auto id : created) CHECK(places.count(id) == 1);
  }
}

TEST_CASE("without jumps predefined topics keep checklist order") {
  std::mt19937 rng(7);
  const auto task = numbered_task("order", 6);
  for (int trial = 0; trial < 200; ++trial) {
    TopicStack s;
    s.load_checklist(task, 1);
    for (int round = 1; round <= 12; ++round) {
      int pick = std::uniform_int_distribution<int>(0, 2)(rng);
      if (pick == 0) s.apply(Action::create_topic("x"), round);
      else if (pick == 1 && !s.empty()) s.apply(Action::finish_current(), round);
      else s.apply(Action::stay_current(), round);
      s.sweep_evictions(round);
      std::vector<std::string> order;
      for (const auto& t : s.entries()) {
        if (t.origin == Origin::predefined) order.push_back(t.item_id);
      }
      CHECK(std::is_sorted(order.begin(), order.end()));
    }
  }
}
