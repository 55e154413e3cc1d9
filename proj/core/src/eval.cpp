#include "curec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "curec/transfer.hpp"
#include "json.hpp"

namespace curec::eval {

using nlohmann::json;
using scenario::TaskKind;

Predictions infer(const ModelState& m, const ScenarioBundle& bundle, int task_i) {
  const auto& task = bundle.task_by_id(task_i);
  if (!m.has_task(task_i))
    throw ConfigError("model has no state for task " + std::to_string(task_i));
  auto view = scenario::materialize(bundle, task_i, bundle.eval_ts);
  auto parts = scenario::split(view, bundle.content_hash());
  const auto& test = parts.test;

  Predictions out;
  out.task_id = task_i;
  out.users = test.users;
  out.labels = test.labels;
  int f = m.arch.f;
  if (task.kind == TaskKind::Item) {
    for (auto id : test.label_space) out.label_space.push_back(id);
    for (const auto& seq : test.sequences) {
      Mat ek = model::forward(m, seq.tokens, task_i);
      Vec pred = model::project(m, task_i, model::user_rep(ek));
      Vec scores(out.label_space.size(), 0.0);
      for (std::size_t j = 0; j < out.label_space.size(); ++j) {
        auto emb = std::span<const double>(m.item_emb.row(static_cast<int>(out.label_space[j])),
                                           static_cast<std::size_t>(f));
        scores[j] = dot(pred, emb);
      }
      out.scores.push_back(std::move(scores));
    }
  } else {
    for (const auto& seq : test.sequences) {
      Mat ek = model::forward(m, seq.tokens, task_i);
      Vec logits = model::project(m, task_i, model::user_rep(ek));
      int best = 0;
      for (std::size_t c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[best]) best = static_cast<int>(c);
      out.classes.push_back(best);
    }
  }
  return out;
}

double mrr_at_k(std::span<const double> scores, std::span<const ItemId> candidates,
                ItemId true_label, int k) {
  if (scores.size() != candidates.size())
    throw ConfigError("mrr_at_k: scores and candidates differ in length");
  std::size_t label_idx = candidates.size();
  for (std::size_t j = 0; j < candidates.size(); ++j)
    if (candidates[j] == true_label) {
      label_idx = j;
      break;
    }
  if (label_idx == candidates.size())
    throw ConfigError("mrr_at_k: true label " + std::to_string(true_label) +
                      " not in the candidate set");
  double s = scores[label_idx];
  std::int64_t rank = 1;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (j == label_idx) continue;
    if (scores[j] > s || (scores[j] == s && candidates[j] < true_label)) ++rank;
  }
  return rank <= k ? 1.0 / static_cast<double>(rank) : 0.0;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw ConfigError("accuracy: length mismatch");
  if (preds.empty()) throw ConfigError("accuracy over an empty prediction set");
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double knowledge_transfer(double r_final, double r_sinmo) {
  if (r_sinmo == 0.0) throw ConfigError("knowledge transfer undefined at a zero baseline");
  return (r_final - r_sinmo) / r_sinmo * 100.0;
}

QualityResult pseudo_label_quality(const ModelState& live, const FrozenModel& frozen,
                                   const ScenarioBundle& bundle, int task_i, int task_k,
                                   QualityMode mode, double c, Rng& rng) {
  const auto& spec_k = bundle.task_by_id(task_k);
  if (spec_k.kind != TaskKind::Item)
    throw ConfigError("pseudo-label quality needs an item task as the previous task");
  auto t_i = bundle.task_by_id(task_i).train_ts;

  // Candidate pool: task-i train users that have a task-k label at t_i, so
  // both modes draw from the same pool and report equal counts.
  auto view_i = scenario::materialize(bundle, task_i, t_i);
  auto train_i = scenario::split(view_i, bundle.content_hash()).train;
  auto view_k = scenario::materialize(bundle, task_k, t_i);
  std::map<UserId, ItemId> label_of;
  for (std::size_t j = 0; j < view_k.users.size(); ++j)
    label_of[view_k.users[j]] = view_k.labels[j];

  std::vector<std::size_t> pool;  // indices into train_i
  for (std::size_t j = 0; j < train_i.users.size(); ++j)
    if (label_of.count(train_i.users[j])) pool.push_back(j);
  if (pool.empty()) throw ConfigError("no labeled candidates for the pseudo-label diagnostic");

  double rho = transfer::sampling_rate(live, frozen, task_i, task_k, c);
  auto s = transfer::sample_count(rho, pool.size());

  std::vector<std::size_t> chosen;
  if (mode == QualityMode::Sampled) {
    auto mit = frozen.state().task_means.find(task_k);
    if (mit == frozen.state().task_means.end())
      throw ConfigError("missing task mean for task " + std::to_string(task_k));
    std::vector<std::pair<double, std::size_t>> keys;
    for (std::size_t j : pool) {
      Vec rep = transfer::pseudo_label(frozen, train_i.sequences[j], task_k);
      keys.push_back({cosine(rep, mit->second), j});
    }
    std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return train_i.users[a.second] < train_i.users[b.second];
    });
    for (std::int64_t j = 0; j < s; ++j) chosen.push_back(keys[static_cast<std::size_t>(j)].second);
  } else {
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.assign(pool.begin(), pool.begin() + static_cast<std::size_t>(s));
  }
  std::sort(chosen.begin(), chosen.end());

  int f = live.arch.f;
  double acc = 0.0;
  for (std::size_t j : chosen) {
    Vec rep = transfer::pseudo_label(frozen, train_i.sequences[j], task_k);
    ItemId label = label_of.at(train_i.users[j]);
    auto emb = std::span<const double>(frozen.state().item_emb.row(static_cast<int>(label)),
                                       static_cast<std::size_t>(f));
    acc += cosine(rep, emb);
  }
  return {acc / static_cast<double>(chosen.size()), static_cast<std::int64_t>(chosen.size())};
}

RunReport evaluate_all(const ModelState& m, const ScenarioBundle& bundle,
                       const std::map<int, double>& baseline_results) {
  RunReport report;
  for (const auto& task : bundle.tasks) {
    Predictions pred = infer(m, bundle, task.id);
    TaskReport tr;
    tr.metric.task_id = task.id;
    tr.metric.user_count = static_cast<std::int64_t>(pred.users.size());
    if (task.kind == TaskKind::Item) {
      tr.metric.kind = "MRR@5";
      double acc = 0.0;
      for (std::size_t j = 0; j < pred.users.size(); ++j)
        acc += mrr_at_k(pred.scores[j], pred.label_space, pred.labels[j]);
      tr.metric.value = pred.users.empty() ? 0.0 : acc / static_cast<double>(pred.users.size());
    } else {
      tr.metric.kind = "Accuracy";
      std::vector<int> labels(pred.labels.begin(), pred.labels.end());
      tr.metric.value = accuracy(pred.classes, labels);
    }
    auto bit = baseline_results.find(task.id);
    if (bit != baseline_results.end()) {
      tr.sinmo = bit->second;
      tr.kt = knowledge_transfer(tr.metric.value, bit->second);
    }
    report.tasks.push_back(std::move(tr));
  }
  return report;
}

std::string RunReport::to_json_text() const {
  json doc;
  json tasks_j = json::array();
  for (const auto& t : tasks) {
    json tj;
    tj["task"] = t.metric.task_id;
    tj["kind"] = t.metric.kind;
    tj["value"] = t.metric.value;
    tj["users"] = t.metric.user_count;
    if (t.sinmo) tj["sinmo"] = *t.sinmo;
    if (t.kt) tj["kt_percent"] = *t.kt;
    tasks_j.push_back(tj);
  }
  doc["tasks"] = tasks_j;
  doc["diagnostics"] = diagnostics;
  doc["config"] = config_echo;
  return doc.dump(2) + "\n";
}

std::string RunReport::to_markdown() const {
  std::ostringstream out;
  out << "| Task | Metric | Value | Users | Baseline | KT % |\n";
  out << "|---|---|---|---|---|---|\n";
  char buf[64];
  for (const auto& t : tasks) {
    out << "| " << t.metric.task_id << " | " << t.metric.kind << " | ";
    std::snprintf(buf, sizeof(buf), "%.4f", t.metric.value);
    out << buf << " | " << t.metric.user_count << " | ";
    if (t.sinmo) {
      std::snprintf(buf, sizeof(buf), "%.4f", *t.sinmo);
      out << buf;
    } else {
      out << "-";
    }
    out << " | ";
    if (t.kt) {
      std::snprintf(buf, sizeof(buf), "%+.2f", *t.kt);
      out << buf;
    } else {
      out << "-";
    }
    out << " |\n";
  }
  return out.str();
}

}  // namespace curec::eval
