// Command-line front end: scenario generation and ingestion, emergence
// stats, continual training, the single-task baseline, evaluation, the
// ablation grid, and report rendering.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "curec/checkpoint.hpp"
#include "curec/eval.hpp"
#include "curec/trainer.hpp"

namespace fs = std::filesystem;
using namespace curec;

namespace {

model::ArchConfig arch_from_config(const ConfigDoc& doc) {
  model::ArchConfig arch;
  const std::string s = "model";
  if (!doc.has_section(s)) return arch;
  doc.check_known_keys(s, {"f", "n", "K", "kernel_width", "dilations", "gate_scale", "ln_eps",
                           "mask_per_conv"});
  if (auto v = doc.get_int(s, "f")) arch.f = static_cast<int>(*v);
  if (auto v = doc.get_int(s, "n")) arch.n = static_cast<int>(*v);
  if (auto v = doc.get_int(s, "K")) arch.K = static_cast<int>(*v);
  if (auto v = doc.get_int(s, "kernel_width")) arch.kernel_width = static_cast<int>(*v);
  if (auto v = doc.get(s, "dilations")) {
    arch.dilations.clear();
    for (const auto& d : split_csv(*v))
      arch.dilations.push_back(static_cast<int>(parse_int(d, "dilations")));
  }
  if (auto v = doc.get_double(s, "gate_scale")) arch.gate_scale = *v;
  if (auto v = doc.get_double(s, "ln_eps")) arch.ln_eps = *v;
  if (auto v = doc.get_bool(s, "mask_per_conv")) arch.mask_per_conv = *v;
  arch.validate();
  return arch;
}

ConfigDoc load_optional_config(const std::string& path) {
  if (path.empty()) return ConfigDoc::parse_string("", "<empty>");
  return ConfigDoc::parse_file(path);
}

// Flag overrides arrive as key=value pairs routed into a section.
void apply_overrides(ConfigDoc& doc, const std::string& section,
                     const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + ov + "' is not of the form key=value");
    doc.set(section, ov.substr(0, eq), ov.substr(eq + 1));
  }
}

std::map<int, double> load_baseline_results(const std::string& dir) {
  std::map<int, double> out;
  auto doc = ConfigDoc::parse_file(dir + "/baseline_results.cfg");
  for (const auto& e : doc.entries("baseline")) {
    if (e.key.rfind("task_", 0) != 0)
      throw ParseError("unexpected baseline key " + e.key);
    out[static_cast<int>(parse_int(e.key.substr(5), "baseline task id"))] =
        parse_double(e.value, "baseline value");
  }
  return out;
}

void write_report(const eval::RunReport& report, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream(dir + "/report.json", std::ios::trunc) << report.to_json_text();
  std::ofstream(dir + "/report.md", std::ios::trunc) << report.to_markdown();
}

eval::RunReport evaluate_run(const std::string& run_dir, const scenario::ScenarioBundle& bundle,
                             const std::map<int, double>& baseline, const std::string& cfg_echo) {
  int last_id = bundle.tasks.back().id;
  auto loaded = checkpoint::load(run_dir + "/task_" + std::to_string(last_id) + ".ckpt");
  auto report = eval::evaluate_all(loaded.model, bundle, baseline);
  report.config_echo = cfg_echo;
  return report;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed) {
  auto doc = ConfigDoc::parse_file(config_path);
  auto cfg = scenario::GeneratorConfig::from_config(doc);
  auto bundle = scenario::generate_synthetic(cfg, seed);
  scenario::save_bundle(bundle, out_dir);
  std::cout << "wrote scenario with " << bundle.store.users().size() << " users, "
            << bundle.num_items << " items, " << bundle.tasks.size() << " tasks to " << out_dir
            << "\n";
  return 0;
}

int cmd_ingest(const std::string& interactions, const std::string& profiles,
               const std::string& manifest, const std::string& out_dir) {
  auto bundle = scenario::ingest_logs(interactions, profiles, manifest);
  scenario::save_bundle(bundle, out_dir);
  std::cout << "ingested " << bundle.store.num_interactions() << " interactions into " << out_dir
            << "\n";
  return 0;
}

int cmd_stats(const std::string& scenario_dir) {
  auto bundle = scenario::load_bundle(scenario_dir);
  std::vector<std::pair<scenario::Timestamp, scenario::Timestamp>> intervals;
  scenario::Timestamp prev = bundle.tasks.front().train_ts;
  for (std::size_t i = 1; i < bundle.tasks.size(); ++i) {
    intervals.push_back({prev, bundle.tasks[i].train_ts});
    prev = bundle.tasks[i].train_ts;
  }
  if (bundle.eval_ts > prev) intervals.push_back({prev, bundle.eval_ts});
  auto table = scenario::new_item_stats(bundle, intervals);
  std::cout << table.to_text();
  return 0;
}

int cmd_train(const std::string& scenario_dir, const std::string& out_dir,
              const std::string& config_path, const std::vector<std::string>& overrides) {
  auto bundle = scenario::load_bundle(scenario_dir);
  auto doc = load_optional_config(config_path);
  apply_overrides(doc, "train", overrides);
  auto arch = arch_from_config(doc);
  auto cfg = trainer::TrainConfig::from_config(doc);
  auto art = trainer::run_continual(bundle, arch, cfg, out_dir);
  std::cout << "trained " << art.checkpoint_paths.size() << " tasks into " << out_dir << "\n";
  return 0;
}

int cmd_baseline(const std::string& scenario_dir, const std::string& out_dir,
                 const std::string& config_path, const std::vector<std::string>& overrides) {
  auto bundle = scenario::load_bundle(scenario_dir);
  auto doc = load_optional_config(config_path);
  apply_overrides(doc, "train", overrides);
  auto arch = arch_from_config(doc);
  auto cfg = trainer::TrainConfig::from_config(doc);
  auto results = trainer::run_sinmo_baseline(bundle, arch, cfg, out_dir);
  ConfigDoc out;
  for (const auto& [id, v] : results) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    out.set("baseline", "task_" + std::to_string(id), os.str());
  }
  fs::create_directories(out_dir);
  std::ofstream(out_dir + "/baseline_results.cfg", std::ios::trunc) << out.to_string();
  std::cout << "baseline results for " << results.size() << " tasks in " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& scenario_dir,
             const std::string& baseline_dir, const std::string& report_dir) {
  auto bundle = scenario::load_bundle(scenario_dir);
  std::map<int, double> baseline;
  if (!baseline_dir.empty()) baseline = load_baseline_results(baseline_dir);
  std::string echo;
  {
    std::ifstream in(run_dir + "/manifest.cfg");
    std::ostringstream ss;
    ss << in.rdbuf();
    echo = ss.str();
  }
  auto report = evaluate_run(run_dir, bundle, baseline, echo);
  write_report(report, report_dir);
  std::cout << report.to_markdown();
  return 0;
}

struct AblationRow {
  std::string name;
  bool fkt, bkt1, bkt2, random_sampling;
};

int cmd_ablate(const std::string& scenario_dir, const std::string& out_dir,
               const std::string& config_path, const std::vector<std::string>& overrides) {
  auto bundle = scenario::load_bundle(scenario_dir);
  auto doc = load_optional_config(config_path);
  apply_overrides(doc, "train", overrides);
  auto arch = arch_from_config(doc);
  auto base_cfg = trainer::TrainConfig::from_config(doc);

  const std::vector<AblationRow> rows = {
      {"full", true, true, true, false},
      {"fkt_only", true, false, false, false},
      {"bkt_only", false, true, true, false},
      {"no_transfer", false, false, false, false},
      {"random_sampling", true, true, true, true},
  };
  std::ostringstream table;
  table << "| Variant |";
  for (const auto& t : bundle.tasks) table << " Task " << t.id << " |";
  table << "\n|---|";
  for (std::size_t i = 0; i < bundle.tasks.size(); ++i) table << "---|";
  table << "\n";
  for (const auto& row : rows) {
    auto cfg = base_cfg;
    cfg.fkt = row.fkt;
    cfg.bkt1 = row.bkt1;
    cfg.bkt2 = row.bkt2;
    cfg.random_sampling = row.random_sampling;
    std::string run_dir = out_dir + "/" + row.name;
    trainer::run_continual(bundle, arch, cfg, run_dir);
    auto report = evaluate_run(run_dir, bundle, {}, "");
    write_report(report, run_dir);
    table << "| " << row.name << " |";
    char buf[32];
    for (const auto& t : report.tasks) {
      std::snprintf(buf, sizeof(buf), " %.4f |", t.metric.value);
      table << buf;
    }
    table << "\n";
  }
  fs::create_directories(out_dir);
  std::ofstream(out_dir + "/ablation.md", std::ios::trunc) << table.str();
  std::cout << table.str();
  return 0;
}

int cmd_report(const std::string& report_dir) {
  std::ifstream in(report_dir + "/report.json");
  if (!in) throw ParseError("missing report: " + report_dir + "/report.json");
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ParseError("report.json is not valid JSON");
  std::ifstream md(report_dir + "/report.md");
  std::ostringstream ss;
  ss << md.rdbuf();
  std::cout << ss.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual user-representation training over time-stamped interaction streams"};
  app.require_subcommand(1);

  std::string config_path, scenario_dir, out_dir, run_dir, baseline_dir, report_dir;
  std::string interactions, profiles, manifest;
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic scenario");
  gen->add_option("--config", config_path, "Generator config file")->required();
  gen->add_option("--out", out_dir, "Output scenario directory")->required();
  gen->add_option("--seed", seed, "Generator seed");

  auto* ing = app.add_subcommand("ingest", "Ingest interaction logs");
  ing->add_option("--interactions", interactions, "Interaction log (user,item,channel,ts)")
      ->required();
  ing->add_option("--profiles", profiles, "Profile file (user,attribute,class)")->required();
  ing->add_option("--manifest", manifest, "Scenario manifest")->required();
  ing->add_option("--out", out_dir, "Output scenario directory")->required();

  auto* st = app.add_subcommand("stats", "Print the item-emergence table");
  st->add_option("--scenario", scenario_dir, "Scenario directory")->required();

  auto* tr = app.add_subcommand("train", "Run the sequential continual training");
  tr->add_option("--scenario", scenario_dir, "Scenario directory")->required();
  tr->add_option("--out", run_dir, "Run output directory")->required();
  tr->add_option("--config", config_path, "Config file ([model] and [train] sections)");
  tr->add_option("--set", overrides, "Override a [train] key, key=value");

  auto* bl = app.add_subcommand("baseline", "Train the single-task baseline per task");
  bl->add_option("--scenario", scenario_dir, "Scenario directory")->required();
  bl->add_option("--out", out_dir, "Baseline output directory")->required();
  bl->add_option("--config", config_path, "Config file");
  bl->add_option("--set", overrides, "Override a [train] key, key=value");

  auto* ev = app.add_subcommand("eval", "Evaluate a finished run");
  ev->add_option("--run", run_dir, "Run directory with task checkpoints")->required();
  ev->add_option("--scenario", scenario_dir, "Scenario directory")->required();
  ev->add_option("--baseline", baseline_dir, "Baseline directory (enables KT)");
  ev->add_option("--report", report_dir, "Report output directory")->required();

  auto* ab = app.add_subcommand("ablate", "Run the transfer-module ablation grid");
  ab->add_option("--scenario", scenario_dir, "Scenario directory")->required();
  ab->add_option("--out", out_dir, "Output directory, one run per variant")->required();
  ab->add_option("--config", config_path, "Config file");
  ab->add_option("--set", overrides, "Override a [train] key, key=value");

  auto* rp = app.add_subcommand("report", "Print an emitted report");
  rp->add_option("--report", report_dir, "Report directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(config_path, out_dir, seed);
    if (ing->parsed()) return cmd_ingest(interactions, profiles, manifest, out_dir);
    if (st->parsed()) return cmd_stats(scenario_dir);
    if (tr->parsed()) return cmd_train(scenario_dir, run_dir, config_path, overrides);
    if (bl->parsed()) return cmd_baseline(scenario_dir, out_dir, config_path, overrides);
    if (ev->parsed()) return cmd_eval(run_dir, scenario_dir, baseline_dir, report_dir);
    if (ab->parsed()) return cmd_ablate(scenario_dir, out_dir, config_path, overrides);
    if (rp->parsed()) return cmd_report(report_dir);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
