#pragma once

#include <map>
#include <vector>

#include "curec/model.hpp"
#include "curec/scenario.hpp"

namespace curec::transfer {

using model::FrozenModel;
using model::GradientSet;
using model::ModelState;
using scenario::BehaviorSequence;
using scenario::ItemId;
using scenario::ScenarioBundle;
using scenario::TaskView;
using scenario::UserId;

// Per-epoch sampling decisions for training task i: one record per previous
// task k, plus the BKT1 set for k = 1.
struct SamplePlan {
  int task_i = 0;
  struct PerTask {
    double rho = 0.0;
    std::int64_t count = 0;  // S_{i,k}
    std::vector<UserId> fkt_users;
    std::vector<UserId> bkt2_users;  // item tasks k >= 2 only
  };
  std::map<int, PerTask> prev;        // keyed by previous task k
  std::vector<UserId> bkt1_users;     // S_{i,1} users by new-item count

  std::string to_text(int epoch) const;  // audit record
};

struct AugmentConfig {
  double mask_ratio = 0.2;
  double substitute_ratio = 0.2;

  void validate() const;
};

// Mean of the current item-embedding rows over the task's label space at its
// train timestamp; persisted into ModelState.task_means.
void record_task_mean(ModelState& m, int task_k, const std::vector<ItemId>& label_space_at_tk);

// rho_{i,k} = 1 - (1/K) sum_d sigma(c * cos(gated m_d^{T_i}, gated m~_d^{T_k}))
double sampling_rate(const ModelState& live, const FrozenModel& frozen, int task_i, int task_k,
                     double c);

std::int64_t sample_count(double rho, std::size_t candidate_users);

// Top-S candidates by cos(frozen pseudo-rep under mask k, task-k mean),
// ties broken by ascending user id.
std::vector<UserId> fkt_sample(const FrozenModel& frozen, const TaskView& candidates, int task_k,
                               std::int64_t s);
// Bottom-S by the same key.
std::vector<UserId> bkt2_sample(const FrozenModel& frozen, const TaskView& candidates, int task_k,
                                std::int64_t s);
// Top-S of the candidate view's users by new_items_per_user, ties ascending.
std::vector<UserId> bkt1_sample(const ScenarioBundle& bundle, const TaskView& candidates,
                                int task_i, std::int64_t s);

// Frozen pseudo-representation of one sequence under task k's mask.
Vec pseudo_label(const FrozenModel& frozen, const BehaviorSequence& seq, int task_k);

// Mean over previous tasks of mean-over-users MSE(live rep, frozen rep),
// both under the previous task's mask. Zero at the snapshot fixed point.
// Users listed in the plan must be present in `view` (the task-i train view).
double fkt_loss(const ModelState& live, const FrozenModel& frozen, const SamplePlan& plan,
                const TaskView& view, GradientSet* grads = nullptr, double weight = 1.0);

// Autoregressive BPR replay of the base task over the sampled users'
// sequences. chunk_stride 1 trains every position; stride q trains every
// q-th prediction position.
double bkt1_loss(const ModelState& live, const std::vector<UserId>& users, const TaskView& view,
                 const std::vector<ItemId>& label_space_t1, Rng& neg_rng, int chunk_stride,
                 GradientSet* grads = nullptr, double weight = 1.0);

BehaviorSequence augment_mask(const BehaviorSequence& seq, const AugmentConfig& cfg,
                              ItemId mask_token, Rng& rng);
BehaviorSequence augment_substitute(const BehaviorSequence& seq, const AugmentConfig& cfg,
                                    const std::vector<ItemId>& vocab_at_tj, Rng& rng);

// Contrastive adaptation of previous item-task masks (k >= 2). Mean over
// previous item tasks of mean-over-batches NT-Xent between the two augmented
// views. Contributes exactly zero when prev_item_tasks is empty.
double bkt2_loss(const ModelState& live, const SamplePlan& plan, const TaskView& view,
                 const std::vector<int>& prev_item_tasks, const AugmentConfig& cfg,
                 const std::vector<ItemId>& vocab_at_tj, int batch_n, Rng& rng,
                 GradientSet* grads = nullptr, double weight = 1.0,
                 std::vector<int>* masks_touched = nullptr);

// Builds the full per-epoch plan. `prev_tasks` lists the already-trained
// task ids in training order. `random_sampling` swaps all three samplers for
// uniform draws at the same S values.
SamplePlan build_plan(const ModelState& live, const FrozenModel& frozen,
                      const ScenarioBundle& bundle, int task_i,
                      const std::vector<int>& prev_tasks, const TaskView& view, double c,
                      bool random_sampling, Rng& rng);

}  // namespace curec::transfer
