#include "curec/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace curec::scenario {

namespace fs = std::filesystem;

std::string to_string(TaskKind kind) {
  return kind == TaskKind::Item ? "item" : "profile";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "item") return TaskKind::Item;
  if (s == "profile") return TaskKind::Profile;
  throw ParseError("unknown task kind: '" + s + "'");
}

// ---------------------------------------------------------------------------
// InteractionStore

void InteractionStore::add(const Interaction& it) {
  if (finalized_) throw ConfigError("InteractionStore is immutable after finalize()");
  if (it.item == 0) throw ConfigError("item 0 is the reserved pad token");
  if (it.item < 0) throw ConfigError("item ids must be positive");
  if (it.ts < 0) throw ConfigError("timestamps must be >= 0");
  if (it.channel.empty()) throw ConfigError("empty channel name");
  by_user_[it.user][it.channel].push_back({it.item, it.ts});
  channels_.insert(it.channel);
  max_item_ = std::max(max_item_, it.item);
  ++num_interactions_;

  auto [bit, inserted] = birth_.try_emplace(it.item, it.ts);
  if (!inserted) bit->second = std::min(bit->second, it.ts);
  auto [cit, cinserted] = birth_in_channel_[it.channel].try_emplace(it.item, it.ts);
  if (!cinserted) cit->second = std::min(cit->second, it.ts);
}

void InteractionStore::add_profile(UserId user, const std::string& attribute, int class_index) {
  if (finalized_) throw ConfigError("InteractionStore is immutable after finalize()");
  if (class_index < 0) throw ConfigError("negative class index");
  profiles_[user][attribute] = class_index;
}

void InteractionStore::finalize() {
  for (auto& [user, streams] : by_user_) {
    for (auto& [channel, stream] : streams) {
      std::stable_sort(stream.begin(), stream.end(),
                       [](const auto& a, const auto& b) { return a.second < b.second; });
    }
  }
  users_.clear();
  for (const auto& [user, streams] : by_user_) users_.push_back(user);
  for (const auto& [user, attrs] : profiles_)
    if (!by_user_.count(user)) users_.push_back(user);
  std::sort(users_.begin(), users_.end());
  users_.erase(std::unique(users_.begin(), users_.end()), users_.end());
  finalized_ = true;
}

const std::vector<std::pair<ItemId, Timestamp>>& InteractionStore::stream(
    UserId user, const std::string& channel) const {
  static const std::vector<std::pair<ItemId, Timestamp>> empty;
  auto uit = by_user_.find(user);
  if (uit == by_user_.end()) return empty;
  auto cit = uit->second.find(channel);
  return cit == uit->second.end() ? empty : cit->second;
}

std::optional<int> InteractionStore::profile(UserId user, const std::string& attribute) const {
  auto uit = profiles_.find(user);
  if (uit == profiles_.end()) return std::nullopt;
  auto ait = uit->second.find(attribute);
  if (ait == uit->second.end()) return std::nullopt;
  return ait->second;
}

bool InteractionStore::has_profile_attribute(const std::string& attribute) const {
  for (const auto& [user, attrs] : profiles_)
    if (attrs.count(attribute)) return true;
  return false;
}

std::optional<Timestamp> InteractionStore::birth_ts(ItemId item) const {
  auto it = birth_.find(item);
  if (it == birth_.end()) return std::nullopt;
  return it->second;
}

std::optional<Timestamp> InteractionStore::birth_ts_in_channel(ItemId item,
                                                               const std::string& channel) const {
  auto cit = birth_in_channel_.find(channel);
  if (cit == birth_in_channel_.end()) return std::nullopt;
  auto it = cit->second.find(item);
  if (it == cit->second.end()) return std::nullopt;
  return it->second;
}

std::vector<ItemId> InteractionStore::items_in_channel_until(const std::string& channel,
                                                             Timestamp ts) const {
  std::vector<ItemId> out;
  auto cit = birth_in_channel_.find(channel);
  if (cit == birth_in_channel_.end()) return out;
  for (const auto& [item, birth] : cit->second)
    if (birth <= ts) out.push_back(item);
  return out;  // std::map iteration is already sorted by item id
}

std::vector<Interaction> InteractionStore::all_sorted() const {
  std::vector<Interaction> out;
  out.reserve(num_interactions_);
  for (const auto& [user, streams] : by_user_) {
    std::vector<Interaction> per_user;
    for (const auto& [channel, stream] : streams)
      for (const auto& [item, ts] : stream) per_user.push_back({user, item, channel, ts});
    std::sort(per_user.begin(), per_user.end(), [](const Interaction& a, const Interaction& b) {
      return std::tie(a.ts, a.channel, a.item) < std::tie(b.ts, b.channel, b.item);
    });
    out.insert(out.end(), per_user.begin(), per_user.end());
  }
  return out;
}

std::vector<std::tuple<UserId, std::string, int>> InteractionStore::profiles_sorted() const {
  std::vector<std::tuple<UserId, std::string, int>> out;
  for (const auto& [user, attrs] : profiles_)
    for (const auto& [attr, cls] : attrs) out.push_back({user, attr, cls});
  return out;
}

// ---------------------------------------------------------------------------
// Bundle

int BehaviorSequence::non_pad_count() const {
  int c = 0;
  for (ItemId t : tokens)
    if (t != 0) ++c;
  return c;
}

const TaskSpec& ScenarioBundle::task_by_id(int id) const {
  for (const auto& t : tasks)
    if (t.id == id) return t;
  throw ConfigError("task id out of range: " + std::to_string(id));
}

const AttributeDecl& ScenarioBundle::attribute_by_name(const std::string& name) const {
  for (const auto& a : attributes)
    if (a.name == name) return a;
  throw ConfigError("undeclared attribute: '" + name + "'");
}

void ScenarioBundle::validate() const {
  if (tasks.empty()) throw ConfigError("scenario has no tasks");
  if (n < 1) throw ConfigError("sequence length n must be >= 1");
  Timestamp prev = -1;
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].id != static_cast<int>(i) + 1)
      throw ConfigError("task ids must be 1..M in order");
    if (tasks[i].train_ts <= prev)
      throw ConfigError("non-increasing timestamps: task " + std::to_string(tasks[i].id));
    prev = tasks[i].train_ts;
    if (tasks[i].kind == TaskKind::Profile) attribute_by_name(tasks[i].target);
  }
  if (tasks[0].kind != TaskKind::Item || tasks[0].target != source_channel)
    throw ConfigError("task 1 must be an item task over the source channel");
  if (eval_ts < tasks.back().train_ts)
    throw ConfigError("eval_ts must be >= the last train_ts");
  if (!store.channels().count(source_channel))
    throw ConfigError("source channel '" + source_channel + "' not present in interactions");
  for (const auto& t : tasks) {
    if (t.kind == TaskKind::Item && !store.channels().count(t.target))
      throw ConfigError("unknown channel '" + t.target + "' for task " + std::to_string(t.id));
    if (t.kind == TaskKind::Profile && !store.has_profile_attribute(t.target))
      throw ConfigError("unknown attribute '" + t.target + "' for task " + std::to_string(t.id));
  }
}

// ---------------------------------------------------------------------------
// Generator

GeneratorConfig GeneratorConfig::from_config(const ConfigDoc& doc) {
  GeneratorConfig cfg;
  if (!doc.has_section("generator")) throw ConfigError("missing [generator] section");
  doc.check_known_keys("generator",
                       {"users", "initial_items", "new_items", "n", "eval_ts", "zipf_s",
                        "source_rate", "target_rate", "drift", "repeat", "activity_spread",
                        "task"});
  cfg.users = doc.require_int("generator", "users");
  cfg.initial_items = doc.require_int("generator", "initial_items");
  cfg.new_items.clear();
  for (const auto& s : split_csv(doc.require("generator", "new_items")))
    cfg.new_items.push_back(parse_int(s, "new_items"));
  cfg.n = static_cast<int>(doc.require_int("generator", "n"));
  if (auto v = doc.get_int("generator", "eval_ts")) cfg.eval_ts = *v;
  if (auto v = doc.get_double("generator", "zipf_s")) cfg.zipf_s = *v;
  if (auto v = doc.get_double("generator", "source_rate")) cfg.source_rate = *v;
  if (auto v = doc.get_double("generator", "target_rate")) cfg.target_rate = *v;
  if (auto v = doc.get_double("generator", "drift")) cfg.drift = *v;
  if (auto v = doc.get_double("generator", "repeat")) cfg.repeat = *v;
  if (auto v = doc.get_double("generator", "activity_spread")) cfg.activity_spread = *v;
  cfg.tasks.clear();
  for (const auto& line : doc.get_all("generator", "task")) {
    // kind,target,train_ts[,noisy]
    auto fields = split_csv(line);
    if (fields.size() != 3 && fields.size() != 4)
      throw ConfigError("generator task must be 'kind,target,train_ts[,noisy]': '" + line + "'");
    GeneratorTask t;
    t.kind = task_kind_from_string(fields[0]);
    t.target = fields[1];
    t.train_ts = parse_int(fields[2], "task train_ts");
    t.noisy = fields.size() == 4 && fields[3] == "noisy";
    cfg.tasks.push_back(t);
  }
  cfg.attributes.clear();
  if (doc.has_section("attributes")) {
    for (const auto& e : doc.entries("attributes"))
      cfg.attributes.push_back({e.key, static_cast<int>(parse_int(e.value, "attribute classes"))});
  }
  cfg.validate();
  return cfg;
}

void GeneratorConfig::validate() const {
  if (users < 1) throw ConfigError("generator.users must be >= 1 (got zero or negative)");
  if (initial_items < 2) throw ConfigError("generator.initial_items must be >= 2");
  if (tasks.empty()) throw ConfigError("generator declares no tasks");
  if (tasks[0].kind != TaskKind::Item)
    throw ConfigError("generator task 1 must be an item task (the autoregressive base task)");
  Timestamp prev = 0;
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].train_ts <= prev)
      throw ConfigError("non-increasing timestamps: generator task " + std::to_string(i + 1));
    prev = tasks[i].train_ts;
    if (tasks[i].kind == TaskKind::Profile) {
      bool declared = false;
      for (const auto& a : attributes) declared |= a.name == tasks[i].target;
      if (!declared)
        throw ConfigError("profile task target '" + tasks[i].target +
                          "' has no declared attribute");
    }
  }
  size_t m = tasks.size();
  if (new_items.size() != m - 1 && new_items.size() != m)
    throw ConfigError("generator.new_items must have one count per task interval (" +
                      std::to_string(m - 1) + " entries), got " +
                      std::to_string(new_items.size()));
  Timestamp last = tasks.back().train_ts;
  if (new_items.size() == m && eval_ts <= last)
    throw ConfigError("extra new_items interval requires eval_ts > last train_ts");
  if (eval_ts != 0 && eval_ts < last)
    throw ConfigError("generator.eval_ts must be >= the last train_ts");
  for (auto c : new_items)
    if (c < 0) throw ConfigError("generator.new_items entries must be >= 0");
  if (n < 2) throw ConfigError("generator.n must be >= 2");
  if (activity_spread < 0.0) throw ConfigError("generator.activity_spread must be >= 0");
  for (const auto& a : attributes)
    if (a.num_classes < 2) throw ConfigError("attribute '" + a.name + "' needs >= 2 classes");
}

namespace {

struct ItemWorld {
  // birth_ts[i] for item id i+1; zipf weight by a fixed random rank.
  std::vector<Timestamp> birth_ts;
  std::vector<double> weight;
};

}  // namespace

ScenarioBundle generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);

  ScenarioBundle bundle;
  bundle.n = cfg.n;
  bundle.source_channel = cfg.tasks[0].target;
  bundle.attributes = cfg.attributes;
  for (size_t i = 0; i < cfg.tasks.size(); ++i)
    bundle.tasks.push_back({static_cast<int>(i) + 1, cfg.tasks[i].kind, cfg.tasks[i].target,
                            cfg.tasks[i].train_ts});
  bundle.eval_ts = cfg.eval_ts != 0 ? cfg.eval_ts : cfg.tasks.back().train_ts;

  std::int64_t total_items = cfg.initial_items;
  for (auto c : cfg.new_items) total_items += c;
  bundle.num_items = total_items;

  // Segment boundaries: [0, t_1], (t_1, t_2], ..., (t_{M-1}, t_M], (t_M, eval].
  std::vector<Timestamp> bounds;
  bounds.push_back(0);
  for (const auto& t : cfg.tasks) bounds.push_back(t.train_ts);
  if (bundle.eval_ts > bounds.back()) bounds.push_back(bundle.eval_ts);
  int num_segments = static_cast<int>(bounds.size()) - 1;

  // Item births. Initial items at ts 0; interval k items uniformly inside
  // (t_{k+1}, t_{k+2}] which is segment k+1.
  ItemWorld world;
  world.birth_ts.assign(total_items, 0);
  {
    std::int64_t next = cfg.initial_items;
    for (size_t k = 0; k < cfg.new_items.size(); ++k) {
      Timestamp lo = bounds[k + 1] + 1;
      Timestamp hi = bounds[k + 2];
      for (std::int64_t j = 0; j < cfg.new_items[k]; ++j)
        world.birth_ts[next++] = uniform_int(rng, lo, hi);
    }
  }
  // Long-tail popularity: weight by a random global rank permutation.
  {
    std::vector<std::int64_t> perm(total_items);
    for (std::int64_t i = 0; i < total_items; ++i) perm[i] = i + 1;
    std::shuffle(perm.begin(), perm.end(), rng);
    world.weight.assign(total_items, 0.0);
    for (std::int64_t i = 0; i < total_items; ++i)
      world.weight[i] = 1.0 / std::pow(static_cast<double>(perm[i]), cfg.zipf_s);
  }

  // Items born inside each segment, for drift picks and forced births.
  std::vector<std::vector<ItemId>> born_in_segment(num_segments);
  for (std::int64_t i = 0; i < total_items; ++i) {
    Timestamp b = world.birth_ts[i];
    for (int s = 0; s < num_segments; ++s) {
      bool in = s == 0 ? b <= bounds[1] : (b > bounds[s] && b <= bounds[s + 1]);
      if (in) {
        born_in_segment[s].push_back(i + 1);
        break;
      }
    }
  }

  std::vector<UserId> user_ids(cfg.users);
  for (std::int64_t u = 0; u < cfg.users; ++u) user_ids[u] = u + 1;

  InteractionStore& store = bundle.store;

  // Forced first interaction per item at its birth tick keeps the emergence
  // ledger exact: an item's first source-channel appearance is its birth.
  for (std::int64_t i = 0; i < total_items; ++i) {
    UserId u = user_ids[static_cast<size_t>(i) % user_ids.size()];
    store.add({u, i + 1, bundle.source_channel, world.birth_ts[i]});
  }

  // Target channels that need organic events (every item task beyond T1).
  struct TargetChannel {
    std::string name;
    bool noisy;
  };
  std::vector<TargetChannel> target_channels;
  for (const auto& t : cfg.tasks) {
    if (t.kind == TaskKind::Item && t.target != bundle.source_channel) {
      bool dup = false;
      for (const auto& tc : target_channels) dup |= tc.name == t.target;
      if (!dup) target_channels.push_back({t.target, t.noisy});
    }
  }

  // Per-segment alive sampler over items born at or before the segment start
  // (initial items count as alive in segment 0).
  auto alive_sampler = [&](int seg) {
    std::vector<ItemId> ids;
    std::vector<double> ws;
    Timestamp cut = seg == 0 ? bounds[1] : bounds[seg];
    for (std::int64_t i = 0; i < total_items; ++i) {
      if (world.birth_ts[i] <= cut) {
        ids.push_back(i + 1);
        ws.push_back(world.weight[i]);
      }
    }
    return std::make_pair(ids, std::discrete_distribution<std::size_t>(ws.begin(), ws.end()));
  };

  // Heavy-tailed per-user activity: event rates scale with a log-normal
  // multiplier, so task coverage varies sharply across users.
  std::lognormal_distribution<double> activity_dist(0.0, cfg.activity_spread);
  std::vector<double> activity(user_ids.size());
  for (double& a : activity) a = activity_dist(rng);

  std::map<UserId, std::vector<ItemId>> user_history;

  for (int seg = 0; seg < num_segments; ++seg) {
    auto [alive_ids, alive_dist] = alive_sampler(seg);
    Timestamp lo = bounds[seg] + 1, hi = bounds[seg + 1];
    const auto& newborn = born_in_segment[seg];

    auto pick_item = [&](bool noisy) -> std::pair<ItemId, Timestamp> {
      Timestamp ts = uniform_int(rng, lo, hi);
      if (noisy) {
        // Uniform over everything alive by segment end; realizes the
        // random-label injection while keeping sequences intact.
        std::vector<ItemId> pool = alive_ids;
        pool.insert(pool.end(), newborn.begin(), newborn.end());
        ItemId it = pool[uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1)];
        Timestamp birth = world.birth_ts[it - 1];
        if (birth > ts) ts = uniform_int(rng, birth, hi);
        return {it, ts};
      }
      double r = uniform_real(rng, 0.0, 1.0);
      if (r < cfg.drift && !newborn.empty()) {
        ItemId it = newborn[uniform_int(rng, 0, static_cast<std::int64_t>(newborn.size()) - 1)];
        Timestamp birth = world.birth_ts[it - 1];
        Timestamp t2 = uniform_int(rng, std::max(lo, birth), hi);
        return {it, t2};
      }
      ItemId it = alive_ids[alive_dist(rng)];
      return {it, ts};
    };

    for (UserId u : user_ids) {
      auto& hist = user_history[u];
      double mult = activity[static_cast<std::size_t>(u) - 1];
      int ns = std::poisson_distribution<int>(cfg.source_rate * mult)(rng);
      if (seg == 0) ns = std::max(ns, 2);  // give everyone a usable base history
      for (int e = 0; e < ns; ++e) {
        double r = uniform_real(rng, 0.0, 1.0);
        if (r < cfg.repeat && !hist.empty()) {
          ItemId it = hist[uniform_int(rng, 0, static_cast<std::int64_t>(hist.size()) - 1)];
          store.add({u, it, bundle.source_channel, uniform_int(rng, lo, hi)});
        } else {
          auto [it, ts] = pick_item(false);
          store.add({u, it, bundle.source_channel, ts});
          hist.push_back(it);
        }
      }
      for (const auto& tc : target_channels) {
        int nt = std::poisson_distribution<int>(cfg.target_rate * mult)(rng);
        for (int e = 0; e < nt; ++e) {
          double r = uniform_real(rng, 0.0, 1.0);
          if (!tc.noisy && r < cfg.repeat && !hist.empty()) {
            ItemId it = hist[uniform_int(rng, 0, static_cast<std::int64_t>(hist.size()) - 1)];
            store.add({u, it, tc.name, uniform_int(rng, lo, hi)});
          } else {
            auto [it, ts] = pick_item(tc.noisy);
            store.add({u, it, tc.name, ts});
          }
        }
      }
    }
  }

  for (UserId u : user_ids)
    for (const auto& a : cfg.attributes)
      store.add_profile(u, a.name, static_cast<int>(uniform_int(rng, 0, a.num_classes - 1)));

  // Guarantee >= 1 labeled user per task: user 1 gets a base interaction at
  // ts 1 and one target interaction at each task timestamp.
  store.add({user_ids[0], 1, bundle.source_channel, 1});
  for (const auto& t : cfg.tasks)
    if (t.kind == TaskKind::Item)
      store.add({user_ids[0], 1, t.target, t.train_ts});

  store.finalize();

  bundle.emergence_ledger.push_back(cfg.initial_items);
  for (auto c : cfg.new_items) bundle.emergence_ledger.push_back(c);

  bundle.validate();
  return bundle;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kVersionLine = "curec-bundle 1";

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << content;
}

std::string interactions_text(const ScenarioBundle& b) {
  std::ostringstream out;
  out << "user,item,channel,ts\n";
  for (const auto& it : b.store.all_sorted())
    out << it.user << "," << it.item << "," << it.channel << "," << it.ts << "\n";
  return out.str();
}

std::string profiles_text(const ScenarioBundle& b) {
  std::ostringstream out;
  out << "user,attribute,class_index\n";
  for (const auto& [user, attr, cls] : b.store.profiles_sorted())
    out << user << "," << attr << "," << cls << "\n";
  return out.str();
}

std::string manifest_text(const ScenarioBundle& b) {
  std::ostringstream out;
  out << "[scenario]\n";
  out << "n = " << b.n << "\n";
  out << "source_channel = " << b.source_channel << "\n";
  out << "eval_ts = " << b.eval_ts << "\n";
  if (!b.attributes.empty()) {
    out << "\n[attributes]\n";
    for (const auto& a : b.attributes) out << a.name << " = " << a.num_classes << "\n";
  }
  out << "\n[tasks]\n";
  for (const auto& t : b.tasks)
    out << "task = " << t.id << "," << to_string(t.kind) << "," << t.target << ","
        << t.train_ts << "\n";
  if (!b.emergence_ledger.empty()) {
    out << "\n[ledger]\n";
    out << "emergence = ";
    for (size_t i = 0; i < b.emergence_ledger.size(); ++i)
      out << (i ? "," : "") << b.emergence_ledger[i];
    out << "\n";
  }
  return out.str();
}

}  // namespace

void save_bundle(const ScenarioBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  write_file(fs::path(dir) / "VERSION", std::string(kVersionLine) + "\n");
  write_file(fs::path(dir) / "interactions.csv", interactions_text(bundle));
  write_file(fs::path(dir) / "profiles.csv", profiles_text(bundle));
  write_file(fs::path(dir) / "manifest.cfg", manifest_text(bundle));
}

std::uint64_t ScenarioBundle::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const std::string& s) { h = fnv1a(std::span<const char>(s.data(), s.size()), h); };
  mix(interactions_text(*this));
  mix(profiles_text(*this));
  mix(manifest_text(*this));
  return h;
}

namespace {

struct ManifestData {
  int n;
  std::string source_channel;
  Timestamp eval_ts;
  std::vector<AttributeDecl> attributes;
  std::vector<TaskSpec> tasks;
  std::vector<std::int64_t> ledger;
};

ManifestData parse_manifest(const std::string& path) {
  ConfigDoc doc = ConfigDoc::parse_file(path);
  ManifestData m;
  m.n = static_cast<int>(doc.require_int("scenario", "n"));
  m.source_channel = doc.require("scenario", "source_channel");
  m.eval_ts = doc.require_int("scenario", "eval_ts");
  if (doc.has_section("attributes"))
    for (const auto& e : doc.entries("attributes"))
      m.attributes.push_back({e.key, static_cast<int>(parse_int(e.value, "attribute classes"))});
  for (const auto& line : doc.get_all("tasks", "task")) {
    auto fields = split_csv(line);
    if (fields.size() != 4)
      throw ParseError(path + ": task must be 'id,kind,target,train_ts': '" + line + "'");
    TaskSpec t;
    t.id = static_cast<int>(parse_int(fields[0], "task id"));
    t.kind = task_kind_from_string(fields[1]);
    t.target = fields[2];
    t.train_ts = parse_int(fields[3], "task train_ts");
    m.tasks.push_back(t);
  }
  if (m.tasks.empty()) throw ConfigError(path + ": manifest declares no tasks");
  if (doc.has_section("ledger"))
    for (const auto& s : split_csv(doc.require("ledger", "emergence")))
      m.ledger.push_back(parse_int(s, "ledger emergence"));
  return m;
}

}  // namespace

ScenarioBundle ingest_logs(const std::string& interactions_path,
                           const std::string& profiles_path,
                           const std::string& manifest_path) {
  ManifestData manifest = parse_manifest(manifest_path);

  ScenarioBundle bundle;
  bundle.n = manifest.n;
  bundle.source_channel = manifest.source_channel;
  bundle.eval_ts = manifest.eval_ts;
  bundle.attributes = manifest.attributes;
  bundle.tasks = manifest.tasks;
  bundle.emergence_ledger = manifest.ledger;

  {
    std::ifstream in(interactions_path);
    if (!in) throw ParseError("cannot open interactions file: " + interactions_path);
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line) || line != "user,item,channel,ts")
      throw ParseError(interactions_path + ":1: expected header 'user,item,channel,ts'");
    ++lineno;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto where = interactions_path + ":" + std::to_string(lineno);
      auto fields = split_csv(line);
      if (fields.size() != 4) throw ParseError(where + ": expected 4 fields, got " +
                                               std::to_string(fields.size()));
      Interaction it;
      it.user = parse_int(fields[0], where + " field 'user'");
      it.item = parse_int(fields[1], where + " field 'item'");
      it.channel = fields[2];
      it.ts = parse_int(fields[3], where + " field 'ts'");
      if (it.item == 0) throw ParseError(where + ": item 0 is the reserved pad token");
      if (it.item < 0) throw ParseError(where + ": field 'item' must be positive");
      if (it.ts < 0) throw ParseError(where + ": field 'ts' must be >= 0");
      bundle.store.add(it);
    }
  }

  {
    std::ifstream in(profiles_path);
    if (!in) throw ParseError("cannot open profiles file: " + profiles_path);
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line) || line != "user,attribute,class_index")
      throw ParseError(profiles_path + ":1: expected header 'user,attribute,class_index'");
    ++lineno;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto where = profiles_path + ":" + std::to_string(lineno);
      auto fields = split_csv(line);
      if (fields.size() != 3) throw ParseError(where + ": expected 3 fields, got " +
                                               std::to_string(fields.size()));
      UserId user = parse_int(fields[0], where + " field 'user'");
      const std::string& attr = fields[1];
      int cls = static_cast<int>(parse_int(fields[2], where + " field 'class_index'"));
      bool declared = false;
      for (const auto& a : bundle.attributes) {
        if (a.name == attr) {
          declared = true;
          if (cls < 0 || cls >= a.num_classes)
            throw ParseError(where + ": field 'class_index' " + std::to_string(cls) +
                             " out of range for attribute '" + attr + "' (" +
                             std::to_string(a.num_classes) + " classes)");
        }
      }
      if (!declared)
        throw ConfigError(where + ": attribute '" + attr + "' not declared in manifest");
      bundle.store.add_profile(user, attr, cls);
    }
  }

  bundle.store.finalize();
  bundle.num_items = bundle.store.max_item_id();
  bundle.validate();
  return bundle;
}

ScenarioBundle load_bundle(const std::string& dir) {
  fs::path p(dir);
  {
    std::ifstream in(p / "VERSION");
    std::string line;
    if (!in || !std::getline(in, line) || line != kVersionLine)
      throw ParseError(dir + ": missing or unsupported bundle VERSION");
  }
  return ingest_logs((p / "interactions.csv").string(), (p / "profiles.csv").string(),
                     (p / "manifest.cfg").string());
}

// ---------------------------------------------------------------------------
// Materialization

namespace {

BehaviorSequence make_sequence(const std::vector<std::pair<ItemId, Timestamp>>& stream,
                               Timestamp cutoff, bool strict, int n, Timestamp at_ts) {
  BehaviorSequence seq;
  seq.cutoff_ts = at_ts;
  std::vector<ItemId> kept;
  for (const auto& [item, ts] : stream) {
    if (strict ? ts < cutoff : ts <= cutoff) kept.push_back(item);
  }
  int start = std::max(0, static_cast<int>(kept.size()) - n);
  seq.tokens.assign(n, 0);
  int count = static_cast<int>(kept.size()) - start;
  for (int i = 0; i < count; ++i) seq.tokens[n - count + i] = kept[start + i];
  return seq;
}

}  // namespace

TaskView materialize(const ScenarioBundle& bundle, int task_id, Timestamp at_ts) {
  const TaskSpec& task = bundle.task_by_id(task_id);
  if (at_ts < bundle.tasks.front().train_ts)
    throw ConfigError("at_ts precedes the first task timestamp");

  TaskView view;
  view.task = task;
  view.at_ts = at_ts;

  if (task.kind == TaskKind::Item) {
    view.label_space = bundle.store.items_in_channel_until(task.target, at_ts);
    for (UserId u : bundle.store.users()) {
      const auto& target_stream = bundle.store.stream(u, task.target);
      // Most recent target-channel interaction at or before at_ts.
      const std::pair<ItemId, Timestamp>* label = nullptr;
      for (const auto& e : target_stream)
        if (e.second <= at_ts) label = &e;
      if (!label) continue;
      BehaviorSequence seq = make_sequence(bundle.store.stream(u, bundle.source_channel),
                                           label->second, /*strict=*/true, bundle.n, at_ts);
      if (seq.non_pad_count() == 0) continue;  // no usable history before the label
      view.users.push_back(u);
      view.sequences.push_back(std::move(seq));
      view.labels.push_back(label->first);
    }
  } else {
    const AttributeDecl& attr = bundle.attribute_by_name(task.target);
    view.label_space.resize(attr.num_classes);
    for (int c = 0; c < attr.num_classes; ++c) view.label_space[c] = c;
    for (UserId u : bundle.store.users()) {
      auto cls = bundle.store.profile(u, task.target);
      if (!cls) continue;
      BehaviorSequence seq = make_sequence(bundle.store.stream(u, bundle.source_channel), at_ts,
                                           /*strict=*/false, bundle.n, at_ts);
      if (seq.non_pad_count() == 0) continue;
      view.users.push_back(u);
      view.sequences.push_back(std::move(seq));
      view.labels.push_back(*cls);
    }
  }
  return view;
}

SplitResult split(const TaskView& view, std::uint64_t seed) {
  std::size_t n = view.users.size();
  if (n < 3) throw ConfigError("cannot split a view with fewer than 3 users");

  // Stable per-user rank: the same user keeps its bucket as the view grows,
  // up to boundary shifts.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<std::uint64_t> key(n);
  std::uint64_t seed_h = fnv1a_u64(seed);
  for (std::size_t i = 0; i < n; ++i)
    key[i] = fnv1a_u64(static_cast<std::uint64_t>(view.users[i]), seed_h);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(key[a], view.users[a]) < std::tie(key[b], view.users[b]);
  });

  std::size_t n_val = std::max<std::size_t>(1, n * 5 / 100);
  std::size_t n_test = std::max<std::size_t>(1, n * 15 / 100);

  SplitResult out;
  auto init = [&](TaskView& v) {
    v.task = view.task;
    v.at_ts = view.at_ts;
    v.label_space = view.label_space;
  };
  init(out.train);
  init(out.val);
  init(out.test);
  for (std::size_t rank = 0; rank < n; ++rank) {
    std::size_t i = order[rank];
    TaskView& dst = rank < n_val ? out.val : (rank < n_val + n_test ? out.test : out.train);
    dst.users.push_back(view.users[i]);
    dst.sequences.push_back(view.sequences[i]);
    dst.labels.push_back(view.labels[i]);
  }
  // Restore ascending user order within each part.
  for (TaskView* v : {&out.train, &out.val, &out.test}) {
    std::vector<std::size_t> idx(v->users.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v->users[a] < v->users[b]; });
    TaskView sorted;
    init(sorted);
    for (std::size_t i : idx) {
      sorted.users.push_back(v->users[i]);
      sorted.sequences.push_back(v->sequences[i]);
      sorted.labels.push_back(v->labels[i]);
    }
    *v = std::move(sorted);
  }
  return out;
}

StatsTable new_item_stats(const ScenarioBundle& bundle,
                          const std::vector<std::pair<Timestamp, Timestamp>>& intervals) {
  for (size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].first > intervals[i].second)
      throw ConfigError("stats interval with start > end");
    if (i > 0 && intervals[i].first < intervals[i - 1].second)
      throw ConfigError("stats intervals must be ordered and non-overlapping");
  }
  StatsTable table;
  table.intervals = intervals;
  for (const auto& ch : bundle.store.channels()) table.channels.push_back(ch);

  for (const auto& ch : table.channels) {
    std::int64_t given = 0;
    std::vector<std::int64_t> counts(intervals.size(), 0);
    for (ItemId item = 1; item <= bundle.num_items; ++item) {
      auto birth = bundle.store.birth_ts_in_channel(item, ch);
      if (!birth) continue;
      if (!intervals.empty() && *birth <= intervals[0].first) {
        ++given;
        continue;
      }
      for (size_t i = 0; i < intervals.size(); ++i) {
        if (*birth > intervals[i].first && *birth <= intervals[i].second) {
          ++counts[i];
          break;
        }
      }
    }
    table.given[ch] = given;
    table.counts[ch] = counts;
  }
  return table;
}

std::string StatsTable::to_text() const {
  std::ostringstream out;
  out << std::left << std::setw(14) << "channel" << std::right << std::setw(10) << "given";
  for (const auto& iv : intervals) {
    std::ostringstream head;
    head << iv.first << "~" << iv.second;
    out << std::setw(14) << head.str();
  }
  out << "\n";
  for (const auto& ch : channels) {
    out << std::left << std::setw(14) << ch << std::right << std::setw(10) << given.at(ch);
    for (auto c : counts.at(ch)) out << std::setw(14) << c;
    out << "\n";
  }
  return out.str();
}

std::int64_t new_items_per_user(const ScenarioBundle& bundle, int task_id, UserId user) {
  if (task_id < 2)
    throw ConfigError("new_items_per_user requires task_id >= 2 (no predecessor interval)");
  const TaskSpec& task = bundle.task_by_id(task_id);
  Timestamp lo = bundle.task_by_id(task_id - 1).train_ts;
  Timestamp hi = task.train_ts;

  BehaviorSequence seq = make_sequence(bundle.store.stream(user, bundle.source_channel), hi,
                                       /*strict=*/false, bundle.n, hi);
  std::set<ItemId> seen;
  std::int64_t count = 0;
  for (ItemId item : seq.tokens) {
    if (item == 0 || seen.count(item)) continue;
    seen.insert(item);
    auto birth = bundle.store.birth_ts(item);
    if (birth && *birth > lo && *birth <= hi) ++count;
  }
  return count;
}

}  // namespace curec::scenario
