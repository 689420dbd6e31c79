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

#ifndef TOD_TOPIC_STACK_HPP_
#define TOD_TOPIC_STACK_HPP_

#include <span>
#include <string>
#include <vector>

#include "tod/core.hpp"

namespace tod {

class StackError : public Error {
 public:
  enum class Kind { invalid_jump_target, empty_stack_finish, invalid_title, task_mismatch, replay_mismatch };

  StackError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct FinishedRecord {
  TopicId id;
  std::string item_id;
  int round = 0;

  friend bool operator==(const FinishedRecord&, const FinishedRecord&) = default;
};

// Audit record of one stack mutation. `pushed` holds full snapshots of the
// topics added (top-first) so a delta sequence replays without the task.
struct StackDelta {
  int round = 0;
  Action action;
  std::vector<Topic> pushed;
  std::vector<TopicId> popped;
  bool reordered = false;
  std::vector<TopicId> evicted;

  std::vector<TopicId> pushed_ids() const;

  friend bool operator==(const StackDelta&, const StackDelta&) = default;
};

inline constexpr int kDefaultEvictionWindow = 3;

// Ordered dialogue state. entries()[0] is the top, i.e. the current topic.
//
// Invariants kept by every mutation:
//  - only the top entry is active; every other entry is pending;
//  - entries never hold finished or evicted topics;
//  - predefined topics are never evicted.
class TopicStack {
 public:
  const std::vector<Topic>& entries() const { return entries_; }
  const std::vector<FinishedRecord>& finished_log() const { return finished_log_; }
  // Finished and evicted topics, in the order they left the stack.
  const std::vector<Topic>& archive() const { return archive_; }
  TopicId next_id() const { return next_id_; }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  bool contains(TopicId id) const;
  const Topic* find(TopicId id) const;
  bool is_finished(TopicId id) const;

  // Top entry, or nullptr when the stack is empty.
  const Topic* current_topic() const;

  // Pushes the checklist so item 1 ends on top. Items already loaded or
  // finished (matched by item_id) are skipped.
  StackDelta load_checklist(const TaskDefinition& task, int round);

  // Applies exactly one action. On error the stack is left untouched.
  // `task` is required for load_topics and must match its payload.
  StackDelta apply(const Action& action, int round, const TaskDefinition* task = nullptr);

  // Removes user-created, non-top entries with
  // last_active_round <= current_round - window.
  std::vector<TopicId> sweep_evictions(int current_round, int window = kDefaultEvictionWindow);

  // Pushes a synthetic predefined topic (e.g. the closing report) on top and
  // records it in `delta`.
  const Topic& push_predefined(std::string title, std::string item_id, Category category,
                               int round, StackDelta& delta);

  // Re-applies a recorded delta. Throws StackError(replay_mismatch) when the
  // delta does not fit the current state.
  void apply_delta(const StackDelta& delta);

  friend bool operator==(const TopicStack&, const TopicStack&) = default;

  friend void to_json(json& j, const TopicStack& v);
  friend void from_json(const json& j, TopicStack& v);

 private:
  Topic make_topic(std::string title, Origin origin, Category category, int round,
                   std::string item_id);
  void finish_top(int round, StackDelta& delta);
  void normalize();
  bool item_known(std::string_view item_id) const;

  std::vector<Topic> entries_;
  std::vector<FinishedRecord> finished_log_;
  std::vector<Topic> archive_;
  TopicId next_id_{1};
};

// Reconstructs a stack from an ordered delta log.
TopicStack replay(std::span<const StackDelta> deltas);

struct ChecklistProgress {
  std::size_t completed = 0;
  std::size_t total = 0;

  friend bool operator==(const ChecklistProgress&, const ChecklistProgress&) = default;
};

ChecklistProgress checklist_progress(const TopicStack& stack, const TaskDefinition& task);

// Top-first listing, one line per entry:
//   [index] title (origin, status, last_active=r, id=n)
// The empty stack renders as "stack is empty".
std::string render_stack_status(const TopicStack& stack);

void to_json(json& j, const FinishedRecord& v);
void from_json(const json& j, FinishedRecord& v);
void to_json(json& j, const StackDelta& v);
void from_json(const json& j, StackDelta& v);

}  // namespace tod

#endif  // TOD_TOPIC_STACK_HPP_
