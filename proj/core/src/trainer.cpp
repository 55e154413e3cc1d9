#include "curec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "curec/checkpoint.hpp"
#include "curec/eval.hpp"

namespace curec::trainer {

using model::GradientSet;
using scenario::ItemId;
using scenario::TaskKind;
using scenario::UserId;
using transfer::SamplePlan;

TrainConfig TrainConfig::from_config(const ConfigDoc& doc) {
  TrainConfig cfg;
  const std::string s = "train";
  if (!doc.has_section(s)) return cfg;
  doc.check_known_keys(s, {"epochs", "batch_size", "lr", "beta1", "beta2", "eps", "alpha", "beta",
                           "gamma", "c", "chunk_stride", "contrastive_batch", "mask_ratio",
                           "substitute_ratio", "fkt", "bkt1", "bkt2", "random_sampling", "seed"});
  auto geti = [&](const char* k, int d) {
    auto v = doc.get_int(s, k);
    return v ? static_cast<int>(*v) : d;
  };
  auto getd = [&](const char* k, double d) {
    auto v = doc.get_double(s, k);
    return v ? *v : d;
  };
  auto getb = [&](const char* k, bool d) {
    auto v = doc.get_bool(s, k);
    return v ? *v : d;
  };
  cfg.epochs = geti("epochs", cfg.epochs);
  cfg.batch_size = geti("batch_size", cfg.batch_size);
  cfg.lr = getd("lr", cfg.lr);
  cfg.beta1 = getd("beta1", cfg.beta1);
  cfg.beta2 = getd("beta2", cfg.beta2);
  cfg.eps = getd("eps", cfg.eps);
  cfg.alpha = getd("alpha", cfg.alpha);
  cfg.beta = getd("beta", cfg.beta);
  cfg.gamma = getd("gamma", cfg.gamma);
  cfg.c = getd("c", cfg.c);
  cfg.chunk_stride = geti("chunk_stride", cfg.chunk_stride);
  cfg.contrastive_batch = geti("contrastive_batch", cfg.contrastive_batch);
  cfg.augment.mask_ratio = getd("mask_ratio", cfg.augment.mask_ratio);
  cfg.augment.substitute_ratio = getd("substitute_ratio", cfg.augment.substitute_ratio);
  cfg.fkt = getb("fkt", cfg.fkt);
  cfg.bkt1 = getb("bkt1", cfg.bkt1);
  cfg.bkt2 = getb("bkt2", cfg.bkt2);
  cfg.random_sampling = getb("random_sampling", cfg.random_sampling);
  if (auto v = doc.get_int(s, "seed")) cfg.seed = static_cast<std::uint64_t>(*v);
  cfg.validate();
  return cfg;
}

void TrainConfig::apply_to(ConfigDoc& doc) const {
  const std::string s = "train";
  auto put = [&](const char* k, auto v) {
    std::ostringstream os;
    os << v;
    doc.set(s, k, os.str());
  };
  put("epochs", epochs);
  put("batch_size", batch_size);
  put("lr", lr);
  put("beta1", beta1);
  put("beta2", beta2);
  put("eps", eps);
  put("alpha", alpha);
  put("beta", beta);
  put("gamma", gamma);
  put("c", c);
  put("chunk_stride", chunk_stride);
  put("contrastive_batch", contrastive_batch);
  put("mask_ratio", augment.mask_ratio);
  put("substitute_ratio", augment.substitute_ratio);
  put("fkt", fkt ? "true" : "false");
  put("bkt1", bkt1 ? "true" : "false");
  put("bkt2", bkt2 ? "true" : "false");
  put("random_sampling", random_sampling ? "true" : "false");
  put("seed", seed);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr must be positive");
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
    throw ConfigError("loss weights must be non-negative");
  if (chunk_stride < 1) throw ConfigError("chunk_stride must be >= 1");
  if (contrastive_batch < 2) throw ConfigError("contrastive_batch must be >= 2");
  augment.validate();
}

void Adam::step(ModelState& m, GradientSet& grads) {
  grads.zero_pad_row(m);
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& p : model::parameters(m)) {
    const Vec* g = grads.find(p.name);
    if (!g) continue;
    Vec& m1 = m1_[p.name];
    Vec& m2 = m2_[p.name];
    if (m1.size() != p.size) {
      m1.assign(p.size, 0.0);
      m2.assign(p.size, 0.0);
    }
    for (std::size_t j = 0; j < p.size; ++j) {
      double gj = (*g)[j];
      m1[j] = beta1_ * m1[j] + (1.0 - beta1_) * gj;
      m2[j] = beta2_ * m2[j] + (1.0 - beta2_) * gj * gj;
      p.data[j] -= lr_ * (m1[j] / bc1) / (std::sqrt(m2[j] / bc2) + eps_);
    }
  }
}

namespace {

void check_finite(double loss, int task, int epoch, int step) {
  if (!std::isfinite(loss))
    throw NumericalError("non-finite loss at task " + std::to_string(task) + " epoch " +
                         std::to_string(epoch) + " step " + std::to_string(step));
}

std::vector<std::vector<UserId>> batches_of(std::vector<UserId> users, int batch_size, Rng& rng) {
  std::shuffle(users.begin(), users.end(), rng);
  std::vector<std::vector<UserId>> out;
  for (std::size_t start = 0; start < users.size(); start += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(users.size(), start + static_cast<std::size_t>(batch_size));
    out.push_back({users.begin() + start, users.begin() + end});
  }
  return out;
}

// Contiguous slice j of num_slices over v; slices cover v exactly.
template <typename T>
std::vector<T> slice_of(const std::vector<T>& v, std::size_t j, std::size_t num_slices) {
  std::size_t lo = v.size() * j / num_slices;
  std::size_t hi = v.size() * (j + 1) / num_slices;
  return {v.begin() + lo, v.begin() + hi};
}

std::size_t view_index(const TaskView& view, UserId u) {
  auto it = std::lower_bound(view.users.begin(), view.users.end(), u);
  if (it == view.users.end() || *it != u)
    throw ConfigError("user " + std::to_string(u) + " missing from the train view");
  return static_cast<std::size_t>(it - view.users.begin());
}

// Label-prediction main loss over one batch: BPR with one uniform negative
// for item tasks, cross-entropy for profile tasks. Mean over the batch.
double main_label_loss(const ModelState& m, const TaskView& view, int task_i,
                       const std::vector<UserId>& batch, Rng& rng, GradientSet* grads) {
  bool profile = m.heads.at(task_i).is_profile;
  if (!profile && view.label_space.size() < 2)
    throw ConfigError("item task " + std::to_string(task_i) +
                      ": label space smaller than 2, no negative available");
  int f = m.arch.f, n = m.arch.n;
  double w = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (UserId u : batch) {
    std::size_t idx = view_index(view, u);
    const auto& seq = view.sequences[idx];
    model::ForwardCache cache;
    Mat ek = model::forward(m, seq.tokens, task_i, grads ? &cache : nullptr);
    Vec rep = model::user_rep(ek);
    Vec pred = model::project(m, task_i, rep);
    if (profile) {
      int label = static_cast<int>(view.labels[idx]);
      if (grads) {
        Vec d_logits(pred.size(), 0.0);
        total += model::ce_loss_grad(pred, label, w, d_logits);
        Vec d_rep = model::project_backward(m, task_i, rep, d_logits, *grads);
        Mat d_ek(n, f);
        d_ek.set_row(n - 1, d_rep);
        model::backward(m, task_i, cache, d_ek, *grads);
      } else {
        total += model::ce_loss(pred, label);
      }
    } else {
      ItemId pos_item = view.labels[idx];
      ItemId neg_item = pos_item;
      while (neg_item == pos_item) {
        auto j = uniform_int(rng, 0, static_cast<std::int64_t>(view.label_space.size()) - 1);
        neg_item = view.label_space[static_cast<std::size_t>(j)];
      }
      auto pos = std::span<const double>(m.item_emb.row(static_cast<int>(pos_item)),
                                         static_cast<std::size_t>(f));
      auto neg = std::span<const double>(m.item_emb.row(static_cast<int>(neg_item)),
                                         static_cast<std::size_t>(f));
      if (grads) {
        Vec d_pred(static_cast<std::size_t>(f), 0.0);
        Vec d_pos(static_cast<std::size_t>(f), 0.0), d_neg(static_cast<std::size_t>(f), 0.0);
        total += model::bpr_loss_grad(pred, pos, neg, w, d_pred, d_pos, d_neg);
        Vec& d_emb = grads->of("item_emb", m.item_emb.v.size());
        for (int c = 0; c < f; ++c) {
          d_emb[static_cast<std::size_t>(pos_item) * f + c] += d_pos[c];
          d_emb[static_cast<std::size_t>(neg_item) * f + c] += d_neg[c];
        }
        Vec d_rep = model::project_backward(m, task_i, rep, d_pred, *grads);
        Mat d_ek(n, f);
        d_ek.set_row(n - 1, d_rep);
        model::backward(m, task_i, cache, d_ek, *grads);
      } else {
        total += model::bpr_loss(pred, pos, neg);
      }
    }
  }
  return total / static_cast<double>(batch.size());
}

void log_step(std::ostream* log, int task, int epoch, int step, double main, double l_fkt,
              double l_bkt1, double l_bkt2) {
  if (!log) return;
  (*log) << task << ',' << epoch << ',' << step << ',' << main << ',' << l_fkt << ',' << l_bkt1
         << ',' << l_bkt2 << '\n';
}

}  // namespace

void train_first_task(ModelState& m, const ScenarioBundle& bundle, int task_id,
                      const TrainConfig& cfg, Adam& opt, Rng& rng, std::ostream* loss_log) {
  const auto& task = bundle.task_by_id(task_id);
  if (task.kind != TaskKind::Item)
    throw ConfigError("the base task must be an item task");
  auto view = scenario::materialize(bundle, task_id, task.train_ts);
  auto train = scenario::split(view, bundle.content_hash()).train;
  if (train.label_space.size() < 2)
    throw ConfigError("base task vocabulary smaller than 2, negative sampling impossible");

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto batches = batches_of(train.users, cfg.batch_size, rng);
    int step = 0;
    for (const auto& batch : batches) {
      ++step;
      GradientSet grads;
      double loss =
          transfer::bkt1_loss(m, batch, train, train.label_space, rng, 1, &grads, 1.0);
      check_finite(loss, task_id, epoch, step);
      log_step(loss_log, task_id, epoch, step, loss, 0.0, 0.0, 0.0);
      opt.step(m, grads);
    }
  }
  transfer::record_task_mean(m, task_id, view.label_space);
}

void train_task(ModelState& m, const ScenarioBundle& bundle, int task_i,
                const std::vector<int>& prev_tasks, const TrainConfig& cfg, Adam& opt, Rng& rng,
                std::ostream* loss_log, std::ostream* plan_log) {
  const auto& task = bundle.task_by_id(task_i);
  for (int k : prev_tasks)
    if (!m.has_task(k))
      throw ConfigError("predecessor task " + std::to_string(k) + " has no trained state");
  auto view = scenario::materialize(bundle, task_i, task.train_ts);
  auto train = scenario::split(view, bundle.content_hash()).train;

  bool is_item = task.kind == TaskKind::Item;
  bool any_transfer = cfg.fkt || cfg.bkt1 || cfg.bkt2;
  std::vector<int> prev_item_tasks;  // BKT2 targets: earlier item tasks past the base
  for (int k : prev_tasks)
    if (k != 1 && bundle.task_by_id(k).kind == TaskKind::Item) prev_item_tasks.push_back(k);
  bool use_bkt2 = cfg.bkt2 && is_item && !prev_item_tasks.empty() && cfg.gamma > 0.0;
  bool use_bkt1 = cfg.bkt1 && cfg.beta > 0.0;
  bool use_fkt = cfg.fkt && cfg.alpha > 0.0;

  // Independent streams per stochastic component: toggling or re-seeding one
  // transfer term never perturbs the draws of the others, so ablation
  // variants stay comparable step for step.
  auto stream = [&](std::uint64_t tag) {
    return Rng(fnv1a_u64(tag, fnv1a_u64(static_cast<std::uint64_t>(task_i),
                                        fnv1a_u64(cfg.seed))));
  };
  Rng plan_rng = stream(1);
  Rng neg_rng = stream(2);
  Rng aug_rng = stream(3);

  auto frozen = model::snapshot(m);
  std::vector<ItemId> vocab_at_ti =
      bundle.store.items_in_channel_until(bundle.source_channel, task.train_ts);
  std::vector<ItemId> label_space_t1;
  if (use_bkt1)
    label_space_t1 =
        bundle.store.items_in_channel_until(bundle.source_channel, task.train_ts);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SamplePlan plan;
    if (any_transfer) {
      plan = transfer::build_plan(m, frozen, bundle, task_i, prev_tasks, train, cfg.c,
                                  cfg.random_sampling, plan_rng);
      if (plan_log) (*plan_log) << "task=" << task_i << " " << plan.to_text(epoch);
    }
    auto batches = batches_of(train.users, cfg.batch_size, rng);
    std::size_t num_steps = batches.size();
    for (std::size_t b = 0; b < num_steps; ++b) {
      int step = static_cast<int>(b) + 1;
      GradientSet grads;
      double l_main = main_label_loss(m, train, task_i, batches[b], rng, &grads);
      double l_fkt = 0.0, l_bkt1 = 0.0, l_bkt2 = 0.0;
      if (use_fkt) {
        SamplePlan sub;
        sub.task_i = task_i;
        for (const auto& [k, p] : plan.prev) {
          SamplePlan::PerTask sp;
          sp.rho = p.rho;
          sp.count = p.count;
          sp.fkt_users = slice_of(p.fkt_users, b, num_steps);
          sub.prev[k] = std::move(sp);
        }
        l_fkt = transfer::fkt_loss(m, frozen, sub, train, &grads, cfg.alpha);
      }
      if (use_bkt1) {
        auto users = slice_of(plan.bkt1_users, b, num_steps);
        l_bkt1 = transfer::bkt1_loss(m, users, train, label_space_t1, neg_rng, cfg.chunk_stride,
                                     &grads, cfg.beta);
      }
      if (use_bkt2) {
        SamplePlan sub;
        sub.task_i = task_i;
        for (const auto& [k, p] : plan.prev) {
          SamplePlan::PerTask sp;
          sp.bkt2_users = slice_of(p.bkt2_users, b, num_steps);
          sub.prev[k] = std::move(sp);
        }
        l_bkt2 = transfer::bkt2_loss(m, sub, train, prev_item_tasks, cfg.augment, vocab_at_ti,
                                     cfg.contrastive_batch, aug_rng, &grads, cfg.gamma);
      }
      double total = l_main + cfg.alpha * l_fkt + cfg.beta * l_bkt1 + cfg.gamma * l_bkt2;
      check_finite(total, task_i, epoch, step);
      log_step(loss_log, task_i, epoch, step, l_main, l_fkt, l_bkt1, l_bkt2);
      opt.step(m, grads);
    }
  }
  if (is_item) transfer::record_task_mean(m, task_i, view.label_space);
}

RunArtifacts run_continual(const ScenarioBundle& bundle, const model::ArchConfig& arch,
                           const TrainConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  bundle.validate();
  std::filesystem::create_directories(out_dir);
  std::ofstream loss_log(out_dir + "/loss_curve.csv", std::ios::trunc);
  loss_log << "task,epoch,step,main,fkt,bkt1,bkt2\n";
  std::ofstream plan_log(out_dir + "/sample_plans.txt", std::ios::trunc);

  RunArtifacts art;
  art.final_model = model::init_model(arch, bundle.num_items, bundle.tasks, bundle.attributes,
                                      cfg.seed);
  ModelState& m = art.final_model;
  Adam opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  Rng rng(cfg.seed);

  std::vector<int> prev;
  for (std::size_t idx = 0; idx < bundle.tasks.size(); ++idx) {
    int id = bundle.tasks[idx].id;
    if (idx == 0) {
      train_first_task(m, bundle, id, cfg, opt, rng, &loss_log);
    } else {
      train_task(m, bundle, id, prev, cfg, opt, rng, &loss_log, &plan_log);
    }
    prev.push_back(id);
    std::string path = out_dir + "/task_" + std::to_string(id) + ".ckpt";
    checkpoint::save(m, cfg.seed, path);
    art.checkpoint_paths[id] = path;
  }

  ConfigDoc manifest;
  cfg.apply_to(manifest);
  std::ostringstream hash;
  hash << bundle.content_hash();
  manifest.set("run", "scenario_hash", hash.str());
  std::ostringstream arch_s;
  arch_s << arch.f << "," << arch.n << "," << arch.K << "," << arch.kernel_width;
  manifest.set("run", "arch", arch_s.str());
  art.manifest_path = out_dir + "/manifest.cfg";
  std::ofstream(art.manifest_path, std::ios::trunc) << manifest.to_string();
  art.loss_curve_path = out_dir + "/loss_curve.csv";
  art.plan_audit_path = out_dir + "/sample_plans.txt";
  return art;
}

std::map<int, double> run_sinmo_baseline(const ScenarioBundle& bundle,
                                         const model::ArchConfig& arch, const TrainConfig& cfg,
                                         const std::string& out_dir) {
  cfg.validate();
  bundle.validate();
  std::filesystem::create_directories(out_dir);
  std::map<int, double> results;
  for (std::size_t idx = 0; idx < bundle.tasks.size(); ++idx) {
    int id = bundle.tasks[idx].id;
    ModelState m = model::init_model(arch, bundle.num_items, bundle.tasks, bundle.attributes,
                                     cfg.seed);
    Adam opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    Rng rng(cfg.seed + static_cast<std::uint64_t>(id));
    const auto& task = bundle.task_by_id(id);
    if (task.kind == TaskKind::Item && idx == 0) {
      train_first_task(m, bundle, id, cfg, opt, rng, nullptr);
    } else {
      // Single-task training: the task's own objective only, no transfer.
      auto view = scenario::materialize(bundle, id, task.train_ts);
      auto train = scenario::split(view, bundle.content_hash()).train;
      for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto batches = batches_of(train.users, cfg.batch_size, rng);
        int step = 0;
        for (const auto& batch : batches) {
          ++step;
          GradientSet grads;
          double loss = main_label_loss(m, train, id, batch, rng, &grads);
          check_finite(loss, id, epoch, step);
          opt.step(m, grads);
        }
      }
    }
    checkpoint::save(m, cfg.seed, out_dir + "/sinmo_task_" + std::to_string(id) + ".ckpt");
    auto pred = eval::infer(m, bundle, id);
    if (task.kind == TaskKind::Item) {
      double acc = 0.0;
      for (std::size_t j = 0; j < pred.users.size(); ++j)
        acc += eval::mrr_at_k(pred.scores[j], pred.label_space, pred.labels[j]);
      results[id] = pred.users.empty() ? 0.0 : acc / static_cast<double>(pred.users.size());
    } else {
      std::vector<int> labels(pred.labels.begin(), pred.labels.end());
      results[id] = eval::accuracy(pred.classes, labels);
    }
  }
  return results;
}

}  // namespace curec::trainer
