#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "curec/scenario.hpp"

using namespace curec;
using namespace curec::scenario;

namespace {

GeneratorConfig small_config() {
  GeneratorConfig cfg;
  cfg.users = 60;
  cfg.initial_items = 40;
  cfg.new_items = {10, 10};
  cfg.n = 12;
  cfg.tasks = {
      {TaskKind::Item, "click", 100, false},
      {TaskKind::Item, "cart", 200, false},
      {TaskKind::Item, "buy", 300, false},
  };
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generator produces the declared item counts per interval") {
  auto bundle = generate_synthetic(small_config(), 11);
  CHECK(bundle.num_items == 60);
  REQUIRE(bundle.emergence_ledger == std::vector<std::int64_t>{40, 10, 10});

  auto at_t1 = bundle.store.items_in_channel_until("click", 100);
  auto at_t2 = bundle.store.items_in_channel_until("click", 200);
  auto at_t3 = bundle.store.items_in_channel_until("click", 300);
  CHECK(at_t1.size() == 40);
  CHECK(at_t2.size() == 50);
  CHECK(at_t3.size() == 60);
  // Emergence is monotone: earlier populations are subsets of later ones.
  CHECK(std::includes(at_t3.begin(), at_t3.end(), at_t2.begin(), at_t2.end()));
  CHECK(std::includes(at_t2.begin(), at_t2.end(), at_t1.begin(), at_t1.end()));
}

TEST_CASE("stats table equals the generator ledger on the source channel") {
  auto bundle = generate_synthetic(small_config(), 5);
  auto table = new_item_stats(bundle, {{100, 200}, {200, 300}});
  CHECK(table.given.at("click") == bundle.emergence_ledger[0]);
  CHECK(table.counts.at("click")[0] == bundle.emergence_ledger[1]);
  CHECK(table.counts.at("click")[1] == bundle.emergence_ledger[2]);
}

TEST_CASE("same config and seed give byte-identical bundles") {
  namespace fs = std::filesystem;
  auto dir1 = fs::temp_directory_path() / "curec_b1";
  auto dir2 = fs::temp_directory_path() / "curec_b2";
  save_bundle(generate_synthetic(small_config(), 9), dir1.string());
  save_bundle(generate_synthetic(small_config(), 9), dir2.string());
  for (const char* f : {"VERSION", "interactions.csv", "profiles.csv", "manifest.cfg"})
    CHECK(slurp(dir1 / f) == slurp(dir2 / f));
  // A different seed must change the interaction stream.
  auto dir3 = fs::temp_directory_path() / "curec_b3";
  save_bundle(generate_synthetic(small_config(), 10), dir3.string());
  CHECK(slurp(dir1 / "interactions.csv") != slurp(dir3 / "interactions.csv"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  fs::remove_all(dir3);
}

TEST_CASE("bundle round trip preserves content") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "curec_roundtrip";
  auto bundle = generate_synthetic(small_config(), 21);
  save_bundle(bundle, dir.string());
  auto loaded = load_bundle(dir.string());
  CHECK(loaded.content_hash() == bundle.content_hash());
  CHECK(loaded.num_items == bundle.num_items);
  CHECK(loaded.tasks.size() == bundle.tasks.size());
  CHECK(loaded.emergence_ledger == bundle.emergence_ledger);
  fs::remove_all(dir);
}

TEST_CASE("materialized sequences are left padded and causal") {
  auto bundle = generate_synthetic(small_config(), 31);
  auto view = materialize(bundle, 2, 200);
  REQUIRE(!view.users.empty());
  for (std::size_t i = 0; i < view.users.size(); ++i) {
    const auto& seq = view.sequences[i];
    REQUIRE(seq.length() == bundle.n);
    // Padding discipline: pads only as a prefix.
    bool content = false;
    for (ItemId tok : seq.tokens) {
      if (tok != 0) content = true;
      if (content) CHECK(tok != 0);
    }
    CHECK(seq.non_pad_count() > 0);
    // Label must exist in the label space at the cutoff.
    CHECK(std::binary_search(view.label_space.begin(), view.label_space.end(),
                             view.labels[i]));
    // Input items all predate the label interaction.
    const auto& stream = bundle.store.stream(view.users[i], "click");
    for (ItemId tok : seq.tokens) {
      if (tok == 0) continue;
      bool found = false;
      for (const auto& [item, ts] : stream) found |= item == tok && ts < seq.cutoff_ts;
      CHECK(found);
    }
  }
}

TEST_CASE("sequence growth: later cutoffs never shorten a user's history") {
  auto bundle = generate_synthetic(small_config(), 41);
  auto early = materialize(bundle, 1, 100);
  auto late = materialize(bundle, 1, 300);
  std::map<UserId, int> early_count;
  for (std::size_t i = 0; i < early.users.size(); ++i)
    early_count[early.users[i]] = early.sequences[i].non_pad_count();
  for (std::size_t i = 0; i < late.users.size(); ++i) {
    auto it = early_count.find(late.users[i]);
    if (it == early_count.end()) continue;
    // Full sequences stay full; shorter ones can only grow.
    if (it->second < bundle.n) CHECK(late.sequences[i].non_pad_count() >= it->second);
  }
}

TEST_CASE("split proportions and determinism") {
  auto bundle = generate_synthetic(small_config(), 51);
  auto view = materialize(bundle, 1, 100);
  auto parts = split(view, 77);
  std::size_t n = view.users.size();
  CHECK(parts.val.users.size() == std::max<std::size_t>(1, n * 5 / 100));
  CHECK(parts.test.users.size() == std::max<std::size_t>(1, n * 15 / 100));
  CHECK(parts.train.users.size() + parts.val.users.size() + parts.test.users.size() == n);

  // Parts are disjoint and cover the view.
  std::set<UserId> all;
  for (auto* p : {&parts.train, &parts.val, &parts.test})
    for (UserId u : p->users) CHECK(all.insert(u).second);
  CHECK(all.size() == n);

  auto again = split(view, 77);
  CHECK(again.test.users == parts.test.users);
  auto other = split(view, 78);
  CHECK(other.test.users != parts.test.users);
}

TEST_CASE("three users split one per part") {
  auto bundle = generate_synthetic(small_config(), 51);
  auto view = materialize(bundle, 1, 100);
  TaskView tiny;
  tiny.task = view.task;
  tiny.at_ts = view.at_ts;
  tiny.label_space = view.label_space;
  for (std::size_t i = 0; i < 3; ++i) {
    tiny.users.push_back(view.users[i]);
    tiny.sequences.push_back(view.sequences[i]);
    tiny.labels.push_back(view.labels[i]);
  }
  auto parts = split(tiny, 1);
  CHECK(parts.train.users.size() == 1);
  CHECK(parts.val.users.size() == 1);
  CHECK(parts.test.users.size() == 1);

  tiny.users.pop_back();
  tiny.sequences.pop_back();
  tiny.labels.pop_back();
  CHECK_THROWS_AS(split(tiny, 1), ConfigError);
}

TEST_CASE("new_items_per_user counts distinct newborn items in the sequence") {
  auto bundle = generate_synthetic(small_config(), 61);
  Timestamp t1 = 100, t2 = 200;
  for (UserId u : bundle.store.users()) {
    // Brute force over the user's last-n source items at t2.
    std::vector<ItemId> kept;
    for (const auto& [item, ts] : bundle.store.stream(u, "click"))
      if (ts <= t2) kept.push_back(item);
    if (static_cast<int>(kept.size()) > bundle.n)
      kept.erase(kept.begin(), kept.end() - bundle.n);
    std::set<ItemId> distinct(kept.begin(), kept.end());
    std::int64_t expect = 0;
    for (ItemId item : distinct) {
      auto birth = bundle.store.birth_ts(item);
      if (birth && *birth > t1 && *birth <= t2) ++expect;
    }
    CHECK(new_items_per_user(bundle, 2, u) == expect);
  }
  CHECK_THROWS_AS(new_items_per_user(bundle, 1, 1), ConfigError);
}

TEST_CASE("ingest rejects malformed rows with file and line") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "curec_ingest";
  fs::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream(dir / name, std::ios::trunc) << text;
    return (dir / name).string();
  };
  auto manifest = write("manifest.cfg",
                        "[scenario]\nn = 4\nsource_channel = click\neval_ts = 10\n"
                        "[tasks]\ntask = 1,item,click,10\n");
  auto profiles = write("profiles.csv", "user,attribute,class_index\n");

  auto good = write("ok.csv", "user,item,channel,ts\n1,5,click,1\n2,6,click,2\n3,7,click,3\n");
  CHECK_NOTHROW(ingest_logs(good, profiles, manifest));

  auto pad = write("pad.csv", "user,item,channel,ts\n1,0,click,1\n");
  try {
    ingest_logs(pad, profiles, manifest);
    FAIL("expected rejection of item 0");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    CHECK(msg.find("pad.csv:2") != std::string::npos);
    CHECK(msg.find("pad token") != std::string::npos);
  }

  auto short_row = write("short.csv", "user,item,channel,ts\n1,5,click\n");
  CHECK_THROWS_AS(ingest_logs(short_row, profiles, manifest), ParseError);

  auto bad_header = write("hdr.csv", "a,b,c,d\n");
  CHECK_THROWS_AS(ingest_logs(bad_header, profiles, manifest), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("validate enforces task and attribute declarations") {
  auto cfg = small_config();
  cfg.tasks.push_back({TaskKind::Profile, "age", 400, false});
  cfg.new_items = {10, 10, 10};
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), ConfigError);  // undeclared attribute
  cfg.attributes.push_back({"age", 3});
  CHECK_NOTHROW(generate_synthetic(cfg, 1));

  auto bad = small_config();
  bad.tasks[1].train_ts = 100;  // equal timestamps
  CHECK_THROWS_AS(generate_synthetic(bad, 1), ConfigError);

  auto profile_first = small_config();
  profile_first.tasks[0].kind = TaskKind::Profile;
  CHECK_THROWS_AS(generate_synthetic(profile_first, 1), ConfigError);
}

TEST_CASE("zero emergence keeps the item set fixed") {
  auto cfg = small_config();
  cfg.new_items = {0, 0};
  auto bundle = generate_synthetic(cfg, 13);
  CHECK(bundle.num_items == cfg.initial_items);
  CHECK(bundle.store.items_in_channel_until("click", 100).size() ==
        bundle.store.items_in_channel_until("click", 300).size());
}
