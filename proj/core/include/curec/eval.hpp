#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curec/model.hpp"
#include "curec/scenario.hpp"

namespace curec::eval {

using model::FrozenModel;
using model::ModelState;
using scenario::ItemId;
using scenario::ScenarioBundle;
using scenario::UserId;

struct MetricResult {
  int task_id = 0;
  std::string kind;  // "MRR@5" or "Accuracy"
  double value = 0.0;
  std::int64_t user_count = 0;
};

struct TaskReport {
  MetricResult metric;
  std::optional<double> sinmo;  // baseline value for the same task
  std::optional<double> kt;     // percent, present iff sinmo is
};

struct RunReport {
  std::vector<TaskReport> tasks;
  std::map<std::string, double> diagnostics;
  std::string config_echo;

  std::string to_json_text() const;
  std::string to_markdown() const;
};

// Test-split predictions for one task at the final timestamp.
struct Predictions {
  int task_id = 0;
  std::vector<UserId> users;
  std::vector<std::int64_t> labels;
  std::vector<ItemId> label_space;  // item tasks; candidate order of scores
  std::vector<Vec> scores;          // item tasks: per user, over label_space
  std::vector<int> classes;         // profile tasks: argmax class per user
};

Predictions infer(const ModelState& m, const ScenarioBundle& bundle, int task_i);

// 1/rank if rank <= k else 0. rank = 1 + count of strictly higher scores;
// equal scores rank ahead of the label iff their item id is smaller.
double mrr_at_k(std::span<const double> scores, std::span<const ItemId> candidates,
                ItemId true_label, int k = 5);

double accuracy(std::span<const int> preds, std::span<const int> labels);

// (r_final - r_sinmo) / r_sinmo * 100
double knowledge_transfer(double r_final, double r_sinmo);

enum class QualityMode { Sampled, Random };

struct QualityResult {
  double mean_cosine = 0.0;
  std::int64_t user_count = 0;
};

// Mean cosine between the frozen pseudo-representation under task k's mask
// and the embedding of the user's actual task-k label at task i's timestamp.
// Sampled mode picks the FKT users; Random picks the same count uniformly.
QualityResult pseudo_label_quality(const ModelState& live, const FrozenModel& frozen,
                                   const ScenarioBundle& bundle, int task_i, int task_k,
                                   QualityMode mode, double c, Rng& rng);

// Metrics for every task on its test split at the final timestamp, with KT
// wherever a baseline value is supplied.
RunReport evaluate_all(const ModelState& m, const ScenarioBundle& bundle,
                       const std::map<int, double>& baseline_results);

}  // namespace curec::eval
