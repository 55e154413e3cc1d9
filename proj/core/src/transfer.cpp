#include "curec/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace curec::transfer {

using model::ForwardCache;

void AugmentConfig::validate() const {
  if (mask_ratio < 0.0 || mask_ratio >= 1.0 || substitute_ratio < 0.0 || substitute_ratio >= 1.0)
    throw ConfigError("augmentation ratios must be in [0, 1)");
}

std::string SamplePlan::to_text(int epoch) const {
  std::ostringstream out;
  for (const auto& [k, p] : prev) {
    out << "epoch=" << epoch << " task_k=" << k << " rho=" << p.rho << " S=" << p.count;
    out << " fkt=";
    for (size_t i = 0; i < p.fkt_users.size(); ++i) out << (i ? " " : "") << p.fkt_users[i];
    out << " bkt2=";
    for (size_t i = 0; i < p.bkt2_users.size(); ++i) out << (i ? " " : "") << p.bkt2_users[i];
    out << "\n";
  }
  out << "epoch=" << epoch << " bkt1=";
  for (size_t i = 0; i < bkt1_users.size(); ++i) out << (i ? " " : "") << bkt1_users[i];
  out << "\n";
  return out.str();
}

void record_task_mean(ModelState& m, int task_k, const std::vector<ItemId>& label_space_at_tk) {
  if (label_space_at_tk.empty())
    throw ConfigError("task mean over an empty label space (task " + std::to_string(task_k) + ")");
  Vec mean(m.arch.f, 0.0);
  for (ItemId item : label_space_at_tk)
    for (int c = 0; c < m.arch.f; ++c) mean[c] += m.item_emb.at(static_cast<int>(item), c);
  for (int c = 0; c < m.arch.f; ++c) mean[c] /= static_cast<double>(label_space_at_tk.size());
  m.task_means[task_k] = std::move(mean);
}

double sampling_rate(const ModelState& live, const FrozenModel& frozen, int task_i, int task_k,
                     double c) {
  int rows = live.arch.mask_rows();
  double acc = 0.0;
  for (int d = 0; d < rows; ++d) {
    Vec gi = model::gated_mask(live, task_i, d);
    Vec gk = model::gated_mask(frozen.state(), task_k, d);
    acc += sigmoid(c * cosine(gi, gk));
  }
  return 1.0 - acc / rows;
}

std::int64_t sample_count(double rho, std::size_t candidate_users) {
  auto n = static_cast<std::int64_t>(candidate_users);
  auto s = static_cast<std::int64_t>(std::floor(rho * static_cast<double>(n)));
  return std::clamp<std::int64_t>(s, 1, std::max<std::int64_t>(n, 1));
}

Vec pseudo_label(const FrozenModel& frozen, const BehaviorSequence& seq, int task_k) {
  Mat ek = model::forward(frozen.state(), seq.tokens, task_k);
  return model::user_rep(ek);
}

namespace {

// (cosine key, user) pairs for the FKT/BKT2 shared sampling key. The
// pseudo-rep runs under mask_task's mask; the mean comes from mean_task.
std::vector<std::pair<double, UserId>> cosine_keys(const FrozenModel& frozen,
                                                   const TaskView& candidates, int mask_task,
                                                   int mean_task) {
  auto mit = frozen.state().task_means.find(mean_task);
  if (mit == frozen.state().task_means.end())
    throw ConfigError("missing task mean for task " + std::to_string(mean_task));
  const Vec& mean = mit->second;
  std::vector<std::pair<double, UserId>> keys;
  keys.reserve(candidates.users.size());
  for (size_t i = 0; i < candidates.users.size(); ++i) {
    Vec rep = pseudo_label(frozen, candidates.sequences[i], mask_task);
    keys.push_back({cosine(rep, mean), candidates.users[i]});
  }
  return keys;
}

std::vector<UserId> take(std::vector<std::pair<double, UserId>> keys, std::int64_t s,
                         bool descending) {
  if (descending) {
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
  } else {
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;
    });
  }
  std::vector<UserId> out;
  for (std::int64_t i = 0; i < s && i < static_cast<std::int64_t>(keys.size()); ++i)
    out.push_back(keys[i].second);
  return out;
}

}  // namespace

std::vector<UserId> fkt_sample(const FrozenModel& frozen, const TaskView& candidates, int task_k,
                               std::int64_t s) {
  return take(cosine_keys(frozen, candidates, task_k, task_k), s, /*descending=*/true);
}

std::vector<UserId> bkt2_sample(const FrozenModel& frozen, const TaskView& candidates, int task_k,
                                std::int64_t s) {
  return take(cosine_keys(frozen, candidates, task_k, task_k), s, /*descending=*/false);
}

std::vector<UserId> bkt1_sample(const ScenarioBundle& bundle, const TaskView& candidates,
                                int task_i, std::int64_t s) {
  std::vector<std::pair<double, UserId>> keys;
  keys.reserve(candidates.users.size());
  for (UserId u : candidates.users)
    keys.push_back({static_cast<double>(scenario::new_items_per_user(bundle, task_i, u)), u});
  return take(std::move(keys), s, /*descending=*/true);
}

namespace {

std::size_t view_index(const TaskView& view, UserId u) {
  auto it = std::lower_bound(view.users.begin(), view.users.end(), u);
  if (it == view.users.end() || *it != u)
    throw ConfigError("sampled user " + std::to_string(u) + " not in the task view");
  return static_cast<std::size_t>(it - view.users.begin());
}

}  // namespace

double fkt_loss(const ModelState& live, const FrozenModel& frozen, const SamplePlan& plan,
                const TaskView& view, GradientSet* grads, double weight) {
  if (plan.prev.empty()) return 0.0;
  int f = live.arch.f;
  double total = 0.0;
  int num_tasks = static_cast<int>(plan.prev.size());
  for (const auto& [k, p] : plan.prev) {
    if (p.fkt_users.empty()) continue;
    double task_total = 0.0;
    double w = weight / (num_tasks * static_cast<double>(p.fkt_users.size()));
    for (UserId u : p.fkt_users) {
      const BehaviorSequence& seq = view.sequences[view_index(view, u)];
      Vec target = pseudo_label(frozen, seq, k);
      ForwardCache cache;
      Mat ek = model::forward(live, seq.tokens, k, grads ? &cache : nullptr);
      Vec rep = model::user_rep(ek);
      if (grads) {
        Vec d_rep(f, 0.0);
        task_total += model::mse_loss_grad(rep, target, w, d_rep);
        Mat d_ek(live.arch.n, f);
        d_ek.set_row(live.arch.n - 1, d_rep);
        model::backward(live, k, cache, d_ek, *grads);
      } else {
        task_total += model::mse_loss(rep, target);
      }
    }
    total += task_total / static_cast<double>(p.fkt_users.size());
  }
  return total / num_tasks;
}

double bkt1_loss(const ModelState& live, const std::vector<UserId>& users, const TaskView& view,
                 const std::vector<ItemId>& label_space_t1, Rng& neg_rng, int chunk_stride,
                 GradientSet* grads, double weight) {
  if (chunk_stride < 1) throw ConfigError("chunk_stride must be >= 1");
  if (label_space_t1.size() < 2)
    throw ConfigError("bkt1_loss: label space smaller than 2, no negative available");
  if (users.empty()) return 0.0;
  int n = live.arch.n, f = live.arch.f;

  // Prediction positions per user, then a second pass for the mean.
  struct UserPlan {
    std::size_t idx;
    std::vector<int> positions;
  };
  std::vector<UserPlan> plans;
  std::size_t total_terms = 0;
  for (UserId u : users) {
    std::size_t idx = view_index(view, u);
    const auto& tokens = view.sequences[idx].tokens;
    int first = n;
    for (int r = 0; r < n; ++r) {
      if (tokens[r] != 0) {
        first = r;
        break;
      }
    }
    UserPlan up{idx, {}};
    for (int r = first; r <= n - 2; r += chunk_stride) up.positions.push_back(r);
    total_terms += up.positions.size();
    if (!up.positions.empty()) plans.push_back(std::move(up));
  }
  if (total_terms == 0) return 0.0;

  double total = 0.0;
  double w = weight / static_cast<double>(total_terms);
  for (const auto& up : plans) {
    const auto& seq = view.sequences[up.idx];
    ForwardCache cache;
    Mat ek = model::forward(live, seq.tokens, 1, grads ? &cache : nullptr);
    Mat d_ek(n, f);
    bool touched = false;
    for (int r : up.positions) {
      ItemId pos_item = seq.tokens[r + 1];
      ItemId neg_item = pos_item;
      while (neg_item == pos_item) {
        auto j = uniform_int(neg_rng, 0, static_cast<std::int64_t>(label_space_t1.size()) - 1);
        neg_item = label_space_t1[static_cast<std::size_t>(j)];
      }
      Vec rep = ek.row_vec(r);
      Vec pred = model::project(live, 1, rep);
      auto pos_emb = std::span<const double>(live.item_emb.row(static_cast<int>(pos_item)), f);
      auto neg_emb = std::span<const double>(live.item_emb.row(static_cast<int>(neg_item)), f);
      if (grads) {
        Vec d_pred(f, 0.0);
        Vec& d_emb = grads->of("item_emb", live.item_emb.v.size());
        Vec d_pos(f, 0.0), d_neg(f, 0.0);
        total += model::bpr_loss_grad(pred, pos_emb, neg_emb, w, d_pred, d_pos, d_neg);
        for (int c = 0; c < f; ++c) {
          d_emb[static_cast<size_t>(pos_item) * f + c] += d_pos[c];
          d_emb[static_cast<size_t>(neg_item) * f + c] += d_neg[c];
        }
        Vec d_rep = model::project_backward(live, 1, rep, d_pred, *grads);
        for (int c = 0; c < f; ++c) d_ek.at(r, c) += d_rep[c];
        touched = true;
      } else {
        total += model::bpr_loss(pred, pos_emb, neg_emb);
      }
    }
    if (grads && touched) model::backward(live, 1, cache, d_ek, *grads);
  }
  return total / static_cast<double>(total_terms);
}

namespace {

std::vector<int> non_pad_positions(const BehaviorSequence& seq) {
  std::vector<int> out;
  for (int r = 0; r < seq.length(); ++r)
    if (seq.tokens[r] != 0) out.push_back(r);
  return out;
}

std::vector<int> choose_positions(const std::vector<int>& pool, std::size_t count, Rng& rng) {
  std::vector<int> pos = pool;
  std::shuffle(pos.begin(), pos.end(), rng);
  pos.resize(count);
  std::sort(pos.begin(), pos.end());
  return pos;
}

}  // namespace

BehaviorSequence augment_mask(const BehaviorSequence& seq, const AugmentConfig& cfg,
                              ItemId mask_token, Rng& rng) {
  cfg.validate();
  auto pool = non_pad_positions(seq);
  if (pool.empty()) throw ConfigError("cannot augment an all-pad sequence");
  auto count = static_cast<std::size_t>(
      std::ceil(cfg.mask_ratio * static_cast<double>(pool.size())));
  BehaviorSequence out = seq;
  for (int r : choose_positions(pool, count, rng)) out.tokens[r] = mask_token;
  return out;
}

BehaviorSequence augment_substitute(const BehaviorSequence& seq, const AugmentConfig& cfg,
                                    const std::vector<ItemId>& vocab_at_tj, Rng& rng) {
  cfg.validate();
  if (vocab_at_tj.empty()) throw ConfigError("cannot substitute from an empty vocabulary");
  auto pool = non_pad_positions(seq);
  if (pool.empty()) throw ConfigError("cannot augment an all-pad sequence");
  auto count = static_cast<std::size_t>(
      std::ceil(cfg.substitute_ratio * static_cast<double>(pool.size())));
  BehaviorSequence out = seq;
  for (int r : choose_positions(pool, count, rng)) {
    auto j = uniform_int(rng, 0, static_cast<std::int64_t>(vocab_at_tj.size()) - 1);
    out.tokens[r] = vocab_at_tj[static_cast<std::size_t>(j)];
  }
  return out;
}

double bkt2_loss(const ModelState& live, const SamplePlan& plan, const TaskView& view,
                 const std::vector<int>& prev_item_tasks, const AugmentConfig& cfg,
                 const std::vector<ItemId>& vocab_at_tj, int batch_n, Rng& rng,
                 GradientSet* grads, double weight, std::vector<int>* masks_touched) {
  if (batch_n < 2) throw ConfigError("bkt2_loss: batch size must be >= 2");
  if (prev_item_tasks.empty()) return 0.0;
  int n = live.arch.n, f = live.arch.f;

  // Batch layout first, so the gradient weight over contributing tasks is
  // known before any backward pass runs.
  std::map<int, std::vector<std::vector<UserId>>> task_batches;
  for (int k : prev_item_tasks) {
    auto pit = plan.prev.find(k);
    if (pit == plan.prev.end()) continue;
    const auto& users = pit->second.bkt2_users;
    std::vector<std::vector<UserId>> batches;
    for (std::size_t start = 0; start < users.size();
         start += static_cast<std::size_t>(batch_n)) {
      std::size_t end = std::min(users.size(), start + static_cast<std::size_t>(batch_n));
      if (end - start >= 2) batches.push_back({users.begin() + start, users.begin() + end});
    }
    if (!batches.empty()) task_batches[k] = std::move(batches);
  }
  if (task_batches.empty()) return 0.0;
  int tasks_used = static_cast<int>(task_batches.size());

  double total = 0.0;
  for (const auto& [k, batches] : task_batches) {
    if (masks_touched) masks_touched->push_back(k);
    double task_total = 0.0;
    for (const auto& batch : batches) {
      int nb = static_cast<int>(batch.size());
      Mat a1(nb, f), a2(nb, f);
      std::vector<ForwardCache> c1(nb), c2(nb);
      for (int l = 0; l < nb; ++l) {
        const BehaviorSequence& seq = view.sequences[view_index(view, batch[l])];
        BehaviorSequence s1 = augment_mask(seq, cfg, live.mask_token(), rng);
        BehaviorSequence s2 = augment_substitute(seq, cfg, vocab_at_tj, rng);
        Mat e1 = model::forward(live, s1.tokens, k, grads ? &c1[l] : nullptr);
        Mat e2 = model::forward(live, s2.tokens, k, grads ? &c2[l] : nullptr);
        a1.set_row(l, model::user_rep(e1));
        a2.set_row(l, model::user_rep(e2));
      }
      if (grads) {
        double w = weight / (static_cast<double>(tasks_used) * static_cast<double>(batches.size()));
        Mat d_a1(nb, f), d_a2(nb, f);
        task_total += model::contrastive_loss_grad(a1, a2, w, d_a1, d_a2);
        for (int l = 0; l < nb; ++l) {
          Mat d_ek(n, f);
          d_ek.set_row(n - 1, d_a1.row_vec(l));
          model::backward(live, k, c1[l], d_ek, *grads);
          d_ek.zero();
          d_ek.set_row(n - 1, d_a2.row_vec(l));
          model::backward(live, k, c2[l], d_ek, *grads);
        }
      } else {
        task_total += model::contrastive_loss(a1, a2);
      }
    }
    total += task_total / static_cast<double>(batches.size());
  }
  return total / tasks_used;
}

SamplePlan build_plan(const ModelState& live, const FrozenModel& frozen,
                      const ScenarioBundle& bundle, int task_i,
                      const std::vector<int>& prev_tasks, const TaskView& view, double c,
                      bool random_sampling, Rng& rng) {
  SamplePlan plan;
  plan.task_i = task_i;
  std::size_t num_users = view.users.size();

  auto uniform_users = [&](std::int64_t s) {
    std::vector<UserId> pool = view.users;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(static_cast<std::size_t>(std::min<std::int64_t>(s, pool.size())));
    std::sort(pool.begin(), pool.end());
    return pool;
  };

  // Previous profile tasks have no item mean of their own; the most recent
  // item-task mean trained at or before k stands in for the item
  // distribution seen at that point in the sequence.
  auto mean_key_task = [&](int k) {
    auto pos = std::find(prev_tasks.begin(), prev_tasks.end(), k);
    for (auto it = pos;; --it) {
      if (frozen.state().task_means.count(*it)) return *it;
      if (it == prev_tasks.begin()) break;
    }
    throw ConfigError("no task mean available at or before task " + std::to_string(k));
  };

  for (int k : prev_tasks) {
    SamplePlan::PerTask p;
    p.rho = sampling_rate(live, frozen, task_i, k, c);
    p.count = sample_count(p.rho, num_users);
    bool k_is_item = bundle.task_by_id(k).kind == scenario::TaskKind::Item;
    if (random_sampling) {
      p.fkt_users = uniform_users(p.count);
      if (k >= 2 && k_is_item) p.bkt2_users = uniform_users(p.count);
    } else {
      auto keys = cosine_keys(frozen, view, k, mean_key_task(k));
      p.fkt_users = take(keys, p.count, /*descending=*/true);
      if (k >= 2 && k_is_item) p.bkt2_users = take(std::move(keys), p.count, /*descending=*/false);
    }
    plan.prev[k] = std::move(p);
  }

  if (plan.prev.count(1)) {
    std::int64_t s1 = plan.prev.at(1).count;
    if (random_sampling) {
      plan.bkt1_users = uniform_users(s1);
    } else {
      plan.bkt1_users = bkt1_sample(bundle, view, task_i, s1);
    }
  }
  return plan;
}

}  // namespace curec::transfer
