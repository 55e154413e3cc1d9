#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "curec/config.hpp"
#include "curec/model.hpp"
#include "curec/scenario.hpp"
#include "curec/transfer.hpp"

namespace curec::trainer {

using model::ModelState;
using scenario::ScenarioBundle;
using scenario::TaskView;

struct TrainConfig {
  int epochs = 10;
  int batch_size = 128;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Loss weights for the FKT, BKT1 and BKT2 terms.
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double c = 10.0;  // scale inside the sampling-rate sigmoid
  int chunk_stride = 1;
  int contrastive_batch = 32;
  transfer::AugmentConfig augment;
  bool fkt = true;
  bool bkt1 = true;
  bool bkt2 = true;
  bool random_sampling = false;
  std::uint64_t seed = 1;

  static TrainConfig from_config(const ConfigDoc& doc);
  void apply_to(ConfigDoc& doc) const;  // config echo for the run manifest
  void validate() const;
};

struct RunArtifacts {
  ModelState final_model;
  std::map<int, std::string> checkpoint_paths;  // task id -> path
  std::string loss_curve_path;
  std::string plan_audit_path;
  std::string manifest_path;
};

// Adam over the named parameter list; moment state is keyed by name so the
// update order is fixed.
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ModelState& m, model::GradientSet& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::map<std::string, Vec> m1_, m2_;
};

// Autoregressive next-item training of the base task on its train split.
// Records the base task's mean embedding on completion.
void train_first_task(ModelState& m, const ScenarioBundle& bundle, int task_id,
                      const TrainConfig& cfg, Adam& opt, Rng& rng, std::ostream* loss_log);

// Composite-loss training of one later task: snapshot, per-epoch sample
// plans, main loss plus the enabled transfer terms.
void train_task(ModelState& m, const ScenarioBundle& bundle, int task_i,
                const std::vector<int>& prev_tasks, const TrainConfig& cfg, Adam& opt, Rng& rng,
                std::ostream* loss_log, std::ostream* plan_log);

// Full sequential run in manifest order; writes task_<i>.ckpt, the loss
// curve, the plan audit and the run manifest into out_dir.
RunArtifacts run_continual(const ScenarioBundle& bundle, const model::ArchConfig& arch,
                           const TrainConfig& cfg, const std::string& out_dir);

// One fresh model per task, trained on that task alone and scored on its
// test split at the final timestamp.
std::map<int, double> run_sinmo_baseline(const ScenarioBundle& bundle,
                                         const model::ArchConfig& arch, const TrainConfig& cfg,
                                         const std::string& out_dir);

}  // namespace curec::trainer
