// End-to-end acceptance checks. One pass/fail line per criterion; the exit
// code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "curec/checkpoint.hpp"
#include "curec/eval.hpp"
#include "curec/trainer.hpp"

using namespace curec;
using model::ArchConfig;
using model::ForwardCache;
using model::GradientSet;
using model::ModelState;
using scenario::GeneratorConfig;
using scenario::ItemId;
using scenario::ScenarioBundle;
using scenario::TaskKind;
using scenario::TaskView;
using scenario::UserId;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

ArchConfig grad_arch() {
  ArchConfig arch;
  arch.f = 8;
  arch.n = 6;
  arch.K = 2;
  arch.kernel_width = 3;
  arch.dilations = {1, 2};
  return arch;
}

std::vector<scenario::TaskSpec> grad_tasks() {
  return {{1, TaskKind::Item, "click", 100},
          {2, TaskKind::Item, "cart", 200},
          {3, TaskKind::Profile, "age", 300}};
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(1e-6, std::fabs(a) + std::fabs(b));
}

// Biases start at zero, which parks pad-row pre-activations exactly on the
// ReLU kink; nudging every parameter off zero restores differentiability.
void jitter(ModelState& m, Rng& rng) {
  for (auto& p : model::parameters(m))
    for (std::size_t j = 0; j < p.size; ++j) p.data[j] += uniform_real(rng, 0.01, 0.1);
  for (int c = 0; c < m.arch.f; ++c) m.item_emb.at(0, c) = 0.0;
}

TaskView random_view(Rng& rng, std::size_t users, ItemId num_items, int n) {
  TaskView view;
  for (std::size_t i = 0; i < users; ++i) {
    view.users.push_back(static_cast<UserId>(i) + 1);
    scenario::BehaviorSequence seq;
    seq.tokens.assign(n, 0);
    int len = static_cast<int>(uniform_int(rng, 2, n));
    for (int r = n - len; r < n; ++r) seq.tokens[r] = uniform_int(rng, 1, num_items);
    view.sequences.push_back(seq);
    view.labels.push_back(uniform_int(rng, 1, num_items));
  }
  for (ItemId i = 1; i <= num_items; ++i) view.label_space.push_back(i);
  return view;
}

using LossFn = std::function<double(const ModelState&)>;
using GradFn = std::function<void(const ModelState&, GradientSet&)>;

double max_grad_error(ModelState& m, const LossFn& loss, const GradFn& grad) {
  GradientSet grads;
  grad(m, grads);
  grads.zero_pad_row(m);
  double worst = 0.0;
  const double h = 1e-5;
  for (auto& p : model::parameters(m)) {
    const Vec* g = grads.find(p.name);
    for (std::size_t j = 0; j < p.size; ++j) {
      double analytic = g ? (*g)[j] : 0.0;
      if (p.name == "item_emb" && j < static_cast<std::size_t>(m.arch.f)) {
        if (analytic != 0.0) return 1.0;  // pad row must stay untouched
        continue;
      }
      double keep = p.data[j];
      p.data[j] = keep + h;
      double up = loss(m);
      p.data[j] = keep - h;
      double down = loss(m);
      p.data[j] = keep;
      worst = std::max(worst, rel_err(analytic, (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

Outcome criterion_gradients() {
  const ItemId num_items = 9;
  auto live = model::init_model(grad_arch(), num_items, grad_tasks(), {{"age", 3}}, 11);
  Rng jrng(41);
  jitter(live, jrng);
  auto other = model::init_model(grad_arch(), num_items, grad_tasks(), {{"age", 3}}, 12);
  jitter(other, jrng);
  std::vector<ItemId> space;
  for (ItemId i = 1; i <= num_items; ++i) space.push_back(i);
  transfer::record_task_mean(other, 1, space);
  transfer::record_task_mean(other, 2, space);
  auto frozen = model::snapshot(other);
  Rng vrng(17);
  auto view = random_view(vrng, 4, num_items, grad_arch().n);

  transfer::SamplePlan fkt_plan;
  fkt_plan.task_i = 3;
  fkt_plan.prev[1].fkt_users = {1, 2};
  fkt_plan.prev[2].fkt_users = {3, 4};
  transfer::SamplePlan bkt2_plan;
  bkt2_plan.task_i = 3;
  bkt2_plan.prev[2].bkt2_users = view.users;
  transfer::AugmentConfig aug;

  double worst = 0.0;
  auto run = [&](const LossFn& loss, const GradFn& grad) {
    ModelState m = live;  // fresh copy per composition
    worst = std::max(worst, max_grad_error(m, loss, grad));
  };

  // Autoregressive BPR replay.
  run([&](const ModelState& m) {
        Rng neg(7);
        return transfer::bkt1_loss(m, view.users, view, space, neg, 1);
      },
      [&](const ModelState& m, GradientSet& g) {
        Rng neg(7);
        transfer::bkt1_loss(m, view.users, view, space, neg, 1, &g);
      });
  // Pseudo-label regression against the frozen snapshot.
  run([&](const ModelState& m) { return transfer::fkt_loss(m, frozen, fkt_plan, view); },
      [&](const ModelState& m, GradientSet& g) {
        transfer::fkt_loss(m, frozen, fkt_plan, view, &g);
      });
  // Contrastive adaptation of a previous task mask.
  run([&](const ModelState& m) {
        Rng arng(9);
        return transfer::bkt2_loss(m, bkt2_plan, view, {2}, aug, space, 2, arng);
      },
      [&](const ModelState& m, GradientSet& g) {
        Rng arng(9);
        transfer::bkt2_loss(m, bkt2_plan, view, {2}, aug, space, 2, arng, &g);
      });
  // Attribute cross-entropy.
  auto ce_loss_of = [&](const ModelState& m) {
    Mat ek = model::forward(m, view.sequences[0].tokens, 3);
    return model::ce_loss(model::project(m, 3, model::user_rep(ek)), 1);
  };
  auto ce_grad_of = [&](const ModelState& m, GradientSet& g) {
    ForwardCache cache;
    Mat ek = model::forward(m, view.sequences[0].tokens, 3, &cache);
    Vec rep = model::user_rep(ek);
    Vec logits = model::project(m, 3, rep);
    Vec d_logits(logits.size(), 0.0);
    model::ce_loss_grad(logits, 1, 1.0, d_logits);
    Vec d_rep = model::project_backward(m, 3, rep, d_logits, g);
    Mat d_ek(m.arch.n, m.arch.f);
    d_ek.set_row(m.arch.n - 1, d_rep);
    model::backward(m, 3, cache, d_ek, g);
  };
  run(ce_loss_of, ce_grad_of);
  // Composite: main + weighted transfer terms in one scalar.
  run([&](const ModelState& m) {
        Rng neg(7), arng(9);
        double l = ce_loss_of(m);
        l += 0.7 * transfer::fkt_loss(m, frozen, fkt_plan, view);
        l += 0.5 * transfer::bkt1_loss(m, view.users, view, space, neg, 2);
        l += 0.3 * transfer::bkt2_loss(m, bkt2_plan, view, {2}, aug, space, 2, arng);
        return l;
      },
      [&](const ModelState& m, GradientSet& g) {
        Rng neg(7), arng(9);
        ce_grad_of(m, g);
        transfer::fkt_loss(m, frozen, fkt_plan, view, &g, 0.7);
        transfer::bkt1_loss(m, view.users, view, space, neg, 2, &g, 0.5);
        transfer::bkt2_loss(m, bkt2_plan, view, {2}, aug, space, 2, arng, &g, 0.3);
      });

  char buf[64];
  std::snprintf(buf, sizeof(buf), "max relative error %.2e", worst);
  return {worst < 1e-4, buf};
}

Outcome criterion_architecture() {
  auto m = model::init_model(grad_arch(), 6, grad_tasks(), {{"age", 3}}, 21);
  Rng rng(22);
  int failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    for (auto& [task, mask] : m.mask_emb)
      for (double& v : mask.v) v = uniform_real(rng, -3.0, 3.0);
    std::vector<ItemId> tokens(m.arch.n);
    for (auto& t : tokens) t = uniform_int(rng, 1, 6);

    // Gate range (0, 1).
    for (int d = 0; d < m.arch.mask_rows(); ++d)
      for (double v : model::gated_mask(m, 1, d))
        if (!(v > 0.0 && v < 1.0)) ++failures;

    // Causality: rows up to r are invariant to suffix perturbation, exactly.
    int r = static_cast<int>(uniform_int(rng, 0, m.arch.n - 2));
    Mat base = model::forward(m, tokens, 1);
    auto perturbed = tokens;
    for (int q = r + 1; q < m.arch.n; ++q) perturbed[q] = 1 + (perturbed[q] % 6);
    Mat after = model::forward(m, perturbed, 1);
    for (int q = 0; q <= r; ++q)
      for (int c = 0; c < m.arch.f; ++c)
        if (after.at(q, c) != base.at(q, c)) ++failures;

    // Zero gates reduce every block to the identity.
    for (double& v : m.mask_emb.at(2).v) v = -1e9;
    Mat idty = model::forward(m, tokens, 2);
    for (int q = 0; q < m.arch.n; ++q)
      for (int c = 0; c < m.arch.f; ++c)
        if (idty.at(q, c) != m.item_emb.at(static_cast<int>(tokens[q]), c)) ++failures;

    // Pad row accumulates no embedding gradient.
    std::vector<ItemId> padded = tokens;
    padded[0] = padded[1] = 0;
    ForwardCache cache;
    model::forward(m, padded, 1, &cache);
    Mat d_ek(m.arch.n, m.arch.f);
    for (double& v : d_ek.v) v = uniform_real(rng, -1.0, 1.0);
    GradientSet grads;
    model::backward(m, 1, cache, d_ek, grads);
    grads.zero_pad_row(m);
    const Vec* g = grads.find("item_emb");
    for (int c = 0; c < m.arch.f; ++c)
      if (g == nullptr || (*g)[c] != 0.0) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " invariant violations in 200 cases"};
}

Outcome criterion_samplers() {
  Rng rng(33);
  int bad = 0;

  // Similarity-keyed samplers against a full sort.
  for (int trial = 0; trial < 500; ++trial) {
    ItemId num_items = uniform_int(rng, 3, 9);
    auto m = model::init_model(grad_arch(), num_items, grad_tasks(), {{"age", 3}}, rng());
    for (auto& [task, mask] : m.mask_emb)
      for (double& v : mask.v) v = uniform_real(rng, -1.0, 1.0);
    std::size_t users = static_cast<std::size_t>(uniform_int(rng, 2, 100));
    auto view = random_view(rng, users, num_items, m.arch.n);
    std::vector<ItemId> space;
    for (ItemId i = 1; i <= num_items; ++i) space.push_back(i);
    transfer::record_task_mean(m, 1, space);
    auto frozen = model::snapshot(m);
    auto s = uniform_int(rng, 1, static_cast<std::int64_t>(users));

    std::vector<std::pair<double, UserId>> keys;
    for (std::size_t i = 0; i < users; ++i) {
      Vec rep = transfer::pseudo_label(frozen, view.sequences[i], 1);
      keys.push_back({cosine(rep, frozen.state().task_means.at(1)), view.users[i]});
    }
    auto desc = keys;
    std::sort(desc.begin(), desc.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    auto asc = keys;
    std::sort(asc.begin(), asc.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second < b.second;
    });
    auto top = transfer::fkt_sample(frozen, view, 1, s);
    auto bottom = transfer::bkt2_sample(frozen, view, 1, s);
    for (std::int64_t j = 0; j < s; ++j) {
      if (top[j] != desc[j].second) ++bad;
      if (bottom[j] != asc[j].second) ++bad;
    }
  }

  // New-item-count sampler on generated scenarios.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorConfig cfg;
    cfg.users = 40;
    cfg.initial_items = 25;
    cfg.new_items = {12};
    cfg.n = 8;
    cfg.tasks = {{TaskKind::Item, "click", 100, false}, {TaskKind::Item, "cart", 200, false}};
    auto bundle = scenario::generate_synthetic(cfg, seed);
    auto view = scenario::materialize(bundle, 2, 200);
    std::vector<std::pair<double, UserId>> keys;
    for (UserId u : view.users)
      keys.push_back({static_cast<double>(scenario::new_items_per_user(bundle, 2, u)), u});
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (int rep = 0; rep < 50; ++rep) {
      auto s = uniform_int(rng, 1, static_cast<std::int64_t>(view.users.size()));
      auto got = transfer::bkt1_sample(bundle, view, 2, s);
      for (std::int64_t j = 0; j < s; ++j)
        if (got[j] != keys[j].second) ++bad;
    }
  }
  return {bad == 0, std::to_string(bad) + " mismatches vs brute-force selection"};
}

Outcome criterion_formulas() {
  bool ok = true;
  std::string detail;
  ok &= std::fabs(eval::knowledge_transfer(0.6102, 0.3002) - 103.26) < 0.01;
  ok &= std::fabs(eval::knowledge_transfer(0.3698, 0.3002) - 23.18) < 0.01;

  // All block cosines zero: every sigmoid term is exactly 1/2.
  auto m = model::init_model(grad_arch(), 6, grad_tasks(), {{"age", 3}}, 5);
  ok &= transfer::sampling_rate(m, model::snapshot(m), 2, 1, 0.0) == 0.5;

  Mat a1(2, 3), a2(2, 3);
  for (double& v : a1.v) v = 0.5;
  for (double& v : a2.v) v = 0.5;
  ok &= std::fabs(model::contrastive_loss(a1, a2) - std::log(3.0)) < 1e-9;

  Vec zero(4, 0.0), ones(4, 1.0);
  ok &= std::fabs(model::bpr_loss(ones, zero, zero) - std::log(2.0)) < 1e-9;
  return {ok, "KT, rho, ln3, ln2 reference values"};
}

GeneratorConfig small_scenario() {
  GeneratorConfig cfg;
  cfg.users = 60;
  cfg.initial_items = 25;
  cfg.new_items = {8, 8};
  cfg.n = 8;
  cfg.tasks = {
      {TaskKind::Item, "click", 100, false},
      {TaskKind::Item, "cart", 200, false},
      {TaskKind::Profile, "age", 300, false},
  };
  cfg.attributes = {{"age", 3}};
  return cfg;
}

ArchConfig small_scenario_arch() {
  ArchConfig arch = grad_arch();
  arch.n = 8;
  return arch;
}

Outcome criterion_fixed_point() {
  auto bundle = scenario::generate_synthetic(small_scenario(), 51);
  auto m = model::init_model(small_scenario_arch(), bundle.num_items, bundle.tasks,
                             bundle.attributes, 7);
  trainer::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.contrastive_batch = 8;
  cfg.c = 2.0;
  trainer::Adam opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  Rng rng(cfg.seed);
  trainer::train_first_task(m, bundle, 1, cfg, opt, rng, nullptr);

  double worst = 0.0;
  std::vector<int> prev = {1};
  for (std::size_t idx = 1; idx < bundle.tasks.size(); ++idx) {
    int i = bundle.tasks[idx].id;
    auto frozen = model::snapshot(m);
    auto view = scenario::split(scenario::materialize(bundle, i, bundle.tasks[idx].train_ts),
                                bundle.content_hash()).train;
    Rng prng(3);
    auto plan = transfer::build_plan(m, frozen, bundle, i, prev, view, cfg.c, false, prng);
    worst = std::max(worst, transfer::fkt_loss(m, frozen, plan, view));
    trainer::train_task(m, bundle, i, prev, cfg, opt, rng, nullptr, nullptr);
    prev.push_back(i);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "worst first-step value %.2e", worst);
  return {worst <= 1e-10, buf};
}

Outcome criterion_scenarios() {
  Rng rng(61);
  int failures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    GeneratorConfig cfg;
    cfg.users = uniform_int(rng, 20, 70);
    cfg.initial_items = uniform_int(rng, 10, 40);
    int intervals = static_cast<int>(uniform_int(rng, 1, 3));
    for (int j = 0; j < intervals; ++j) cfg.new_items.push_back(uniform_int(rng, 0, 12));
    cfg.n = static_cast<int>(uniform_int(rng, 4, 12));
    std::vector<std::string> channels = {"click", "cart", "buy"};
    for (int j = 0; j <= intervals; ++j)
      cfg.tasks.push_back({TaskKind::Item, channels[j % 3], 100 * (j + 1), false});
    auto bundle = scenario::generate_synthetic(cfg, rng());

    // Monotone emergence and exact ledger agreement.
    std::vector<std::pair<scenario::Timestamp, scenario::Timestamp>> spans;
    for (int j = 0; j < intervals; ++j) spans.push_back({100 * (j + 1), 100 * (j + 2)});
    std::vector<ItemId> before;
    std::int64_t seen = 0;
    for (int j = 0; j <= intervals; ++j) {
      auto now = bundle.store.items_in_channel_until("click", 100 * (j + 1));
      if (!std::includes(now.begin(), now.end(), before.begin(), before.end())) ++failures;
      if (static_cast<std::int64_t>(now.size()) - seen != bundle.emergence_ledger[j]) ++failures;
      seen = static_cast<std::int64_t>(now.size());
      before = now;
    }
    if (!spans.empty()) {
      auto table = scenario::new_item_stats(bundle, spans);
      if (table.given.at("click") != bundle.emergence_ledger[0]) ++failures;
      for (int j = 0; j < intervals; ++j)
        if (table.counts.at("click")[j] != bundle.emergence_ledger[j + 1]) ++failures;
    }

    // Padding discipline and sequence growth across cutoffs.
    auto early = scenario::materialize(bundle, 1, 100);
    auto late = scenario::materialize(bundle, 1, 100 * (intervals + 1));
    std::map<UserId, int> early_len;
    for (std::size_t i = 0; i < early.users.size(); ++i)
      early_len[early.users[i]] = early.sequences[i].non_pad_count();
    for (std::size_t i = 0; i < late.users.size(); ++i) {
      bool content = false;
      for (ItemId tok : late.sequences[i].tokens) {
        if (tok != 0) content = true;
        if (content && tok == 0) ++failures;
      }
      auto it = early_len.find(late.users[i]);
      if (it != early_len.end() && it->second < bundle.n &&
          late.sequences[i].non_pad_count() < it->second)
        ++failures;
    }

    // Split proportions, disjointness, coverage.
    if (late.users.size() >= 3) {
      auto parts = scenario::split(late, 9);
      std::size_t n = late.users.size();
      if (parts.val.users.size() != std::max<std::size_t>(1, n * 5 / 100)) ++failures;
      if (parts.test.users.size() != std::max<std::size_t>(1, n * 15 / 100)) ++failures;
      std::set<UserId> all;
      for (auto* p : {&parts.train, &parts.val, &parts.test})
        for (UserId u : p->users)
          if (!all.insert(u).second) ++failures;
      if (all.size() != n) ++failures;
    }
  }
  return {failures == 0, std::to_string(failures) + " violations in 50 random configs"};
}

double mean_mrr_first_three(const ModelState& m, const ScenarioBundle& bundle) {
  double total = 0.0;
  for (int t = 1; t <= 3; ++t) {
    auto p = eval::infer(m, bundle, t);
    double s = 0.0;
    for (std::size_t i = 0; i < p.users.size(); ++i)
      s += eval::mrr_at_k(p.scores[i], p.label_space, p.labels[i], 5);
    total += s / static_cast<double>(p.users.size());
  }
  return total / 3.0;
}

Outcome criterion_directional() {
  namespace fs = std::filesystem;
  auto doc = ConfigDoc::parse_file(CUREC_DEFAULT_SCENARIO);
  auto bundle = scenario::generate_synthetic(GeneratorConfig::from_config(doc), 1);
  ArchConfig arch;
  arch.n = bundle.n;

  auto base = fs::temp_directory_path() / "curec_accept_dir";
  fs::remove_all(base);
  auto score = [&](std::uint64_t seed, bool fkt, bool bkt, bool random, const char* tag) {
    trainer::TrainConfig cfg;
    cfg.epochs = 8;
    cfg.c = 2.0;     // activates distribution-aware sampling at this scale
    cfg.beta = 2.0;  // replay users who actually saw the newly emerged items
    cfg.gamma = 0.2; // contrastive adaptation helps only at a modest weight
    cfg.seed = seed;
    cfg.fkt = fkt;
    cfg.bkt1 = bkt;
    cfg.bkt2 = bkt;
    cfg.random_sampling = random;
    auto dir = base / (tag + std::string("_") + std::to_string(seed));
    auto art = trainer::run_continual(bundle, arch, cfg, dir.string());
    return mean_mrr_first_three(art.final_model, bundle);
  };

  int wins = 0;
  double full_sum = 0.0, random_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double full = score(seed, true, true, false, "full");
    double fkt_only = score(seed, true, false, false, "fkt");
    double none = score(seed, false, false, false, "none");
    double random = score(seed, true, true, true, "rand");
    full_sum += full;
    random_sum += random;
    if (full >= fkt_only && full >= none) ++wins;
    std::printf("  seed %llu: full %.4f fkt_only %.4f no_transfer %.4f random %.4f\n",
                static_cast<unsigned long long>(seed), full, fkt_only, none, random);
  }
  fs::remove_all(base);
  bool ok = wins >= 4 && random_sum <= full_sum;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "full wins %d/5, mean full %.4f vs random %.4f", wins,
                full_sum / 5.0, random_sum / 5.0);
  return {ok, buf};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_reproducibility() {
  namespace fs = std::filesystem;
  auto bundle = scenario::generate_synthetic(small_scenario(), 71);
  trainer::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.contrastive_batch = 8;
  cfg.c = 2.0;
  auto d1 = fs::temp_directory_path() / "curec_accept_r1";
  auto d2 = fs::temp_directory_path() / "curec_accept_r2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  auto a = trainer::run_continual(bundle, small_scenario_arch(), cfg, d1.string());
  auto b = trainer::run_continual(bundle, small_scenario_arch(), cfg, d2.string());
  bool ok = true;
  for (const auto& [task, path] : a.checkpoint_paths)
    ok &= slurp(path) == slurp(b.checkpoint_paths.at(task));
  auto ra = eval::evaluate_all(a.final_model, bundle, {});
  auto rb = eval::evaluate_all(b.final_model, bundle, {});
  ok &= ra.to_json_text() == rb.to_json_text();
  ok &= ra.to_markdown() == rb.to_markdown();
  fs::remove_all(d1);
  fs::remove_all(d2);
  return {ok, "checkpoints and reports byte-identical across reruns"};
}

Outcome criterion_diagnostics() {
  auto bundle = scenario::generate_synthetic(small_scenario(), 81);
  auto m = model::init_model(small_scenario_arch(), bundle.num_items, bundle.tasks,
                             bundle.attributes, 9);
  auto t1 = scenario::materialize(bundle, 1, 100);
  transfer::record_task_mean(m, 1, t1.label_space);
  auto frozen = model::snapshot(m);
  Rng jrng(3);
  jitter(m, jrng);

  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng r1(seed), r2(seed);
    auto sampled =
        eval::pseudo_label_quality(m, frozen, bundle, 2, 1, eval::QualityMode::Sampled, 2.0, r1);
    auto random =
        eval::pseudo_label_quality(m, frozen, bundle, 2, 1, eval::QualityMode::Random, 2.0, r2);
    std::printf("  seed %llu: sampled %.4f random %.4f over %lld users\n",
                static_cast<unsigned long long>(seed), sampled.mean_cosine, random.mean_cosine,
                static_cast<long long>(sampled.user_count));
    ok &= sampled.user_count == random.user_count && sampled.user_count > 0;
    for (double v : {sampled.mean_cosine, random.mean_cosine})
      ok &= v >= -1.0 && v <= 1.0;
  }
  return {ok, "sampled vs random cosines emitted, bounded, equal counts"};
}

}  // namespace

int main(int argc, char** argv) {
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  struct Entry {
    const char* name;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {"gradient suite", criterion_gradients},
      {"architecture invariants", criterion_architecture},
      {"sampler oracles", criterion_samplers},
      {"formula checks", criterion_formulas},
      {"pseudo-label fixed point", criterion_fixed_point},
      {"scenario invariants", criterion_scenarios},
      {"directional end-to-end", criterion_directional},
      {"reproducibility", criterion_reproducibility},
      {"diagnostic emission", criterion_diagnostics},
  };
  int failed = 0;
  int id = 0;
  for (const auto& e : entries) {
    ++id;
    if (only != 0 && id != only) continue;
    auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d (%s): %s - %s (%.1fs)\n", id, e.name,
                out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
    if (!out.pass) ++failed;
  }
  return failed;
}
