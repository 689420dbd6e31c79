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

#include "tod/topic_stack.hpp"

#include <algorithm>
#include <sstream>

namespace tod {

std::vector<TopicId> StackDelta::pushed_ids() const {
  std::vector<TopicId> ids;
  ids.reserve(pushed.size());
  for (const auto& t : pushed) ids.push_back(t.id);
  return ids;
}

bool TopicStack::contains(TopicId id) const { return find(id) != nullptr; }

const Topic* TopicStack::find(TopicId id) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Topic& t) { return t.id == id; });
  return it == entries_.end() ? nullptr : &*it;
}

bool TopicStack::is_finished(TopicId id) const {
  return std::any_of(finished_log_.begin(), finished_log_.end(),
                     [&](const FinishedRecord& r) { return r.id == id; });
}

const Topic* TopicStack::current_topic() const { return entries_.empty() ? nullptr : &entries_.front(); }

Topic TopicStack::make_topic(std::string title, Origin origin, Category category, int round,
                             std::string item_id) {
  Topic t;
  t.id = next_id_;
  ++next_id_.value;
  t.title = std::move(title);
  t.origin = origin;
  t.category = category;
  t.created_round = round;
  t.last_active_round = round;
  t.status = TopicStatus::pending;
  t.item_id = std::move(item_id);
  return t;
}

bool TopicStack::item_known(std::string_view item_id) const {
  if (std::any_of(entries_.begin(), entries_.end(), [&](const Topic& t) { return t.item_id == item_id; })) {
    return true;
  }
  return std::any_of(finished_log_.begin(), finished_log_.end(),
                     [&](const FinishedRecord& r) { return r.item_id == item_id; });
}

void TopicStack::normalize() {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    entries_[i].status = i == 0 ? TopicStatus::active : TopicStatus::pending;
  }
}

StackDelta TopicStack::load_checklist(const TaskDefinition& task, int round) {
  StackDelta delta;
  delta.round = round;
  delta.action = Action::load_topics(task.task_id);

  std::vector<Topic> block;
  for (const auto& item : task.checklist) {
    if (item.item_id.empty() || item_known(item.item_id)) continue;
    block.push_back(make_topic(item.title, Origin::predefined, Category::ask_user, round, item.item_id));
  }
  entries_.insert(entries_.begin(), block.begin(), block.end());
  normalize();
  delta.pushed.assign(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(block.size()));
  return delta;
}

void TopicStack::finish_top(int round, StackDelta& delta) {
  Topic top = std::move(entries_.front());
  entries_.erase(entries_.begin());
  top.status = TopicStatus::finished;
  finished_log_.push_back({top.id, top.item_id, round});
  delta.popped.push_back(top.id);
  archive_.push_back(std::move(top));
}

StackDelta TopicStack::apply(const Action& action, int round, const TaskDefinition* task) {
  switch (action.kind()) {
    case ActionKind::load_topics: {
      if (task == nullptr || task->task_id != action.payload()) {
        throw StackError(StackError::Kind::task_mismatch,
                         "load_topics is limited to the session task, got \"" + action.payload() + "\"");
      }
      return load_checklist(*task, round);
    }
    case ActionKind::create_topic: {
      auto title = trim(action.payload());
      if (title.empty() || title.size() > kMaxTopicTitle) {
        throw StackError(StackError::Kind::invalid_title, "topic title must be 1-200 characters");
      }
      StackDelta delta;
      delta.round = round;
      delta.action = action;
      entries_.insert(entries_.begin(),
                      make_topic(std::move(title), Origin::user_created, Category::answer_user, round, {}));
      normalize();
      delta.pushed.push_back(entries_.front());
      return delta;
    }
    case ActionKind::finish_current: {
      if (entries_.empty()) {
        throw StackError(StackError::Kind::empty_stack_finish, "finish_current on an empty stack");
      }
      StackDelta delta;
      delta.round = round;
      delta.action = action;
      finish_top(round, delta);
      normalize();
      return delta;
    }
    case ActionKind::stay_current: {
      StackDelta delta;
      delta.round = round;
      delta.action = action;
      if (!entries_.empty()) entries_.front().last_active_round = round;
      return delta;
    }
    case ActionKind::jump_to: {
      auto target = action.jump_target();
      auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Topic& t) { return t.id == target; });
      if (it == entries_.end()) {
        throw StackError(StackError::Kind::invalid_jump_target,
                         "jump target " + to_string(target) + " is not on the stack");
      }
      StackDelta delta;
      delta.round = round;
      delta.action = action;
      delta.reordered = it != entries_.begin();
      std::rotate(entries_.begin(), it, it + 1);
      entries_.front().last_active_round = round;
      normalize();
      return delta;
    }
  }
  throw Error("unhandled action kind");
}

std::vector<TopicId> TopicStack::sweep_evictions(int current_round, int window) {
  if (window < 1) throw std::invalid_argument("eviction window must be >= 1");
  std::vector<TopicId> evicted;
  if (entries_.size() < 2) return evicted;
  auto stale = [&](const Topic& t) {
    return t.origin == Origin::user_created && t.last_active_round <= current_round - window;
  };
  std::vector<Topic> kept;
  kept.push_back(std::move(entries_.front()));
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    auto& t = entries_[i];
    if (stale(t)) {
      evicted.push_back(t.id);
      t.status = TopicStatus::evicted;
      archive_.push_back(std::move(t));
    } else {
      kept.push_back(std::move(t));
    }
  }
  entries_ = std::move(kept);
  normalize();
  return evicted;
}

const Topic& TopicStack::push_predefined(std::string title, std::string item_id, Category category,
                                         int round, StackDelta& delta) {
  entries_.insert(entries_.begin(),
                  make_topic(std::move(title), Origin::predefined, category, round, std::move(item_id)));
  normalize();
  delta.pushed.push_back(entries_.front());
  return entries_.front();
}

void TopicStack::apply_delta(const StackDelta& delta) {
  auto fail = [&](const std::string& why) {
    throw StackError(StackError::Kind::replay_mismatch, "replay of round " + std::to_string(delta.round) + ": " + why);
  };
  TopicStack next = *this;
  for (auto id : delta.popped) {
    if (next.entries_.empty() || next.entries_.front().id != id) fail("popped topic is not on top");
    StackDelta scratch;
    next.finish_top(delta.round, scratch);
  }
  if (delta.action.kind() == ActionKind::stay_current && !next.entries_.empty()) {
    next.entries_.front().last_active_round = delta.round;
  } else if (delta.action.kind() == ActionKind::jump_to) {
    auto target = delta.action.jump_target();
    auto it = std::find_if(next.entries_.begin(), next.entries_.end(),
                           [&](const Topic& t) { return t.id == target; });
    if (it == next.entries_.end()) fail("jump target missing");
    std::rotate(next.entries_.begin(), it, it + 1);
    next.entries_.front().last_active_round = delta.round;
  }
  for (auto it = delta.pushed.rbegin(); it != delta.pushed.rend(); ++it) {
    if (next.contains(it->id) || std::any_of(next.archive_.begin(), next.archive_.end(),
                                             [&](const Topic& t) { return t.id == it->id; })) {
      fail("pushed topic id reused");
    }
    next.entries_.insert(next.entries_.begin(), *it);
    next.next_id_ = std::max(next.next_id_, TopicId{it->id.value + 1});
  }
  for (auto id : delta.evicted) {
    auto it = std::find_if(next.entries_.begin(), next.entries_.end(), [&](const Topic& t) { return t.id == id; });
    if (it == next.entries_.end()) fail("evicted topic missing");
    Topic t = std::move(*it);
    next.entries_.erase(it);
    t.status = TopicStatus::evicted;
    next.archive_.push_back(std::move(t));
  }
  next.normalize();
  *this = std::move(next);
}

TopicStack replay(std::span<const StackDelta> deltas) {
  TopicStack stack;
  for (const auto& d : deltas) stack.apply_delta(d);
  return stack;
}

ChecklistProgress checklist_progress(const TopicStack& stack, const TaskDefinition& task) {
  ChecklistProgress progress;
  progress.total = task.checklist.size();
  for (const auto& item : task.checklist) {
    const auto& log = stack.finished_log();
    if (std::any_of(log.begin(), log.end(), [&](const FinishedRecord& r) { return r.item_id == item.item_id; })) {
      ++progress.completed;
    }
  }
  return progress;
}

std::string render_stack_status(const TopicStack& stack) {
  if (stack.empty()) return "stack is empty";
  std::ostringstream out;
  const auto& entries = stack.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& t = entries[i];
    if (i > 0) out << '\n';
    out << '[' << i << "] " << t.title << " (" << to_string(t.origin) << ", " << to_string(t.status)
        << ", last_active=" << t.last_active_round << ", id=" << t.id.value << ')';
  }
  return out.str();
}

void to_json(json& j, const FinishedRecord& v) {
  j = json{{"id", v.id}, {"item_id", v.item_id}, {"round", v.round}};
}

void from_json(const json& j, FinishedRecord& v) {
  j.at("id").get_to(v.id);
  v.item_id = j.value("item_id", std::string{});
  j.at("round").get_to(v.round);
}

void to_json(json& j, const StackDelta& v) {
  j = json{{"round", v.round},   {"action", v.action},       {"pushed", v.pushed},
           {"popped", v.popped}, {"reordered", v.reordered}, {"evicted", v.evicted}};
}

void from_json(const json& j, StackDelta& v) {
  j.at("round").get_to(v.round);
  j.at("action").get_to(v.action);
  j.at("pushed").get_to(v.pushed);
  j.at("popped").get_to(v.popped);
  j.at("reordered").get_to(v.reordered);
  j.at("evicted").get_to(v.evicted);
}

void to_json(json& j, const TopicStack& v) {
  j = json{{"entries", v.entries_},
           {"finished_log", v.finished_log_},
           {"archive", v.archive_},
           {"next_id", v.next_id_}};
}

void from_json(const json& j, TopicStack& v) {
  j.at("entries").get_to(v.entries_);
  j.at("finished_log").get_to(v.finished_log_);
  j.at("archive").get_to(v.archive_);
  j.at("next_id").get_to(v.next_id_);
}

}  // namespace tod
