#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "curec/common.hpp"
#include "curec/config.hpp"

namespace curec::scenario {

using UserId = std::int64_t;
using ItemId = std::int64_t;  // 0 is the pad token and never a real item
using Timestamp = std::int64_t;

struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  std::string channel;
  Timestamp ts = 0;
};

struct AttributeDecl {
  std::string name;
  int num_classes = 0;
};

enum class TaskKind { Item, Profile };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

struct TaskSpec {
  int id = 0;  // 1-based ordinal
  TaskKind kind = TaskKind::Item;
  std::string target;  // channel (item tasks) or attribute name (profile tasks)
  Timestamp train_ts = 0;
};

// Timestamped, channel-tagged interaction streams plus user profile
// attributes. Immutable once a bundle is built.
class InteractionStore {
 public:
  void add(const Interaction& it);
  void add_profile(UserId user, const std::string& attribute, int class_index);
  void finalize();  // sorts streams; call once after the last add

  const std::vector<UserId>& users() const { return users_; }
  const std::set<std::string>& channels() const { return channels_; }
  std::size_t num_interactions() const { return num_interactions_; }

  // (item, ts) pairs in non-decreasing ts order; empty if none.
  const std::vector<std::pair<ItemId, Timestamp>>& stream(UserId user,
                                                          const std::string& channel) const;
  std::optional<int> profile(UserId user, const std::string& attribute) const;
  bool has_profile_attribute(const std::string& attribute) const;

  // First interaction with the item in any channel; nullopt if never seen.
  std::optional<Timestamp> birth_ts(ItemId item) const;
  // First interaction with the item in the given channel.
  std::optional<Timestamp> birth_ts_in_channel(ItemId item, const std::string& channel) const;
  // Sorted ids of items whose first interaction in `channel` is <= ts.
  std::vector<ItemId> items_in_channel_until(const std::string& channel, Timestamp ts) const;

  ItemId max_item_id() const { return max_item_; }

  // Canonical row order for serialization: (user, ts, channel, item).
  std::vector<Interaction> all_sorted() const;
  std::vector<std::tuple<UserId, std::string, int>> profiles_sorted() const;

 private:
  std::map<UserId, std::map<std::string, std::vector<std::pair<ItemId, Timestamp>>>> by_user_;
  std::map<UserId, std::map<std::string, int>> profiles_;
  std::map<ItemId, Timestamp> birth_;
  std::map<std::string, std::map<ItemId, Timestamp>> birth_in_channel_;
  std::set<std::string> channels_;
  std::vector<UserId> users_;
  ItemId max_item_ = 0;
  std::size_t num_interactions_ = 0;
  bool finalized_ = false;
};

// Fixed-length, left-padded token sequence.
struct BehaviorSequence {
  std::vector<ItemId> tokens;
  Timestamp cutoff_ts = 0;

  int length() const { return static_cast<int>(tokens.size()); }
  int non_pad_count() const;
};

struct TaskView {
  TaskSpec task;
  Timestamp at_ts = 0;
  std::vector<UserId> users;
  std::vector<BehaviorSequence> sequences;
  std::vector<std::int64_t> labels;       // item-id or class index
  std::vector<std::int64_t> label_space;  // sorted
};

struct ScenarioBundle {
  InteractionStore store;
  std::vector<TaskSpec> tasks;
  int n = 0;
  std::string source_channel;
  Timestamp eval_ts = 0;
  std::vector<AttributeDecl> attributes;
  ItemId num_items = 0;  // item ids are 1..num_items

  // Filled by the generator: [given, new per interval] for the source
  // channel. Empty for ingested bundles.
  std::vector<std::int64_t> emergence_ledger;

  const TaskSpec& task_by_id(int id) const;
  const AttributeDecl& attribute_by_name(const std::string& name) const;
  std::uint64_t content_hash() const;
  void validate() const;
};

struct GeneratorTask {
  TaskKind kind = TaskKind::Item;
  std::string target;
  Timestamp train_ts = 0;
  bool noisy = false;  // labels drawn uniformly at random
};

struct GeneratorConfig {
  std::int64_t users = 2000;
  std::int64_t initial_items = 500;
  std::vector<std::int64_t> new_items;  // per interval (t_j, t_{j+1}]
  std::vector<GeneratorTask> tasks;
  int n = 20;
  Timestamp eval_ts = 0;  // 0 -> defaults to last train_ts
  double zipf_s = 1.1;
  double source_rate = 8.0;  // expected source interactions per user per interval
  double target_rate = 1.5;  // expected target-channel interactions per user per interval
  double drift = 0.35;       // probability an interaction picks a current-interval item
  double repeat = 0.2;       // probability a user revisits an item from their history
  // Sigma of the log-normal per-user activity multiplier; 0 gives every user
  // the same event rates, larger values make task coverage heavy-tailed.
  double activity_spread = 1.0;
  std::vector<AttributeDecl> attributes;

  static GeneratorConfig from_config(const ConfigDoc& doc);
  void validate() const;
};

ScenarioBundle generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed);

ScenarioBundle ingest_logs(const std::string& interactions_path,
                           const std::string& profiles_path,
                           const std::string& manifest_path);

void save_bundle(const ScenarioBundle& bundle, const std::string& dir);
ScenarioBundle load_bundle(const std::string& dir);

TaskView materialize(const ScenarioBundle& bundle, int task_id, Timestamp at_ts);

struct SplitResult {
  TaskView train, val, test;
};
SplitResult split(const TaskView& view, std::uint64_t seed);

struct StatsTable {
  std::vector<std::string> channels;
  std::vector<std::pair<Timestamp, Timestamp>> intervals;
  std::map<std::string, std::int64_t> given;  // first-boundary counts
  std::map<std::string, std::vector<std::int64_t>> counts;
  std::string to_text() const;
};

StatsTable new_item_stats(const ScenarioBundle& bundle,
                          const std::vector<std::pair<Timestamp, Timestamp>>& intervals);

// Distinct items in the user's source-channel sequence at t_i that first
// appeared (any channel) in (t_{i-1}, t_i]. task_id must be >= 2.
std::int64_t new_items_per_user(const ScenarioBundle& bundle, int task_id, UserId user);

}  // namespace curec::scenario
