#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "repaint/harness.hpp"

namespace fs = std::filesystem;
using namespace repaint;

namespace {

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return parse_config_file(path);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    seeds.push_back(std::stoull(item));
  }
  return seeds;
}

int cmd_describe_env(const std::string& env_id) {
  if (env_id.empty()) {
    for (const auto& info : builtin_envs()) {
      std::cout << describe_env(info.id) << "\n";
    }
  } else {
    std::cout << describe_env(env_id);
  }
  return 0;
}

int cmd_train_teacher(const std::string& config_path, const std::string& out,
                      std::optional<std::uint64_t> seed,
                      std::optional<int> iterations,
                      const std::string& weights_csv) {
  ExperimentConfig cfg = load_config(config_path);
  std::vector<double> weights = cfg.teacher_weights;
  if (!weights_csv.empty()) {
    weights.clear();
    std::stringstream ss(weights_csv);
    std::string item;
    while (std::getline(ss, item, ',')) weights.push_back(std::stod(item));
  }
  if (weights.empty()) weights = env_info(cfg.env_id).default_teacher_weights;

  TaskSpec spec;
  spec.env_id = cfg.env_id;
  spec.feature_weights = weights;
  spec.discount = cfg.gamma;
  spec.episode_horizon =
      cfg.horizon > 0 ? cfg.horizon : env_info(cfg.env_id).default_horizon;
  spec.reward_normalizer = cfg.reward_normalizer;

  const std::uint64_t teacher_seed = seed.value_or(cfg.seeds.front());
  const int teacher_iterations = iterations.value_or(cfg.iterations);
  train_teacher(spec, cfg.ppo, GaeConfig{cfg.gamma, cfg.gae.lambda},
                cfg.student_budget, cfg.hidden, cfg.continuous_actions,
                cfg.init_log_std, teacher_seed, teacher_iterations, out);
  std::cout << "teacher checkpoint written to " << out << "\n";
  if (!cfg.student_weights.empty()) {
    std::cout << "similarity to student task: "
              << cosine_similarity(weights, cfg.student_weights) << "\n";
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& arm,
            const std::string& seeds_csv, std::optional<std::uint64_t> seed,
            const std::string& out, bool verbose) {
  ExperimentConfig cfg = parse_config_file(config_path);
  if (!arm.empty()) cfg.arm = arm_from_name(arm);
  if (seed.has_value()) cfg.seeds = {*seed};
  if (!seeds_csv.empty()) cfg.seeds = parse_seed_list(seeds_csv);
  if (!out.empty()) cfg.out_dir = out;
  if (verbose) cfg.verbose = true;
  const ExperimentResult result = run_experiment(cfg);
  std::cout << "arm " << result.arm << ": " << result.csv_paths.size()
            << " seed runs written under " << cfg.out_dir << "/" << result.arm
            << "\n";
  return 0;
}

int cmd_report(const std::string& dir, std::optional<double> target) {
  std::vector<ArmRecords> arms;
  for (const std::string name : {"baseline", "ks", "it", "repaint"}) {
    const fs::path arm_dir = fs::path(dir) / name;
    if (!fs::is_directory(arm_dir)) continue;
    ArmRecords ar;
    ar.arm = name;
    for (const auto& entry : fs::directory_iterator(arm_dir)) {
      const std::string fname = entry.path().filename().string();
      if (fname.rfind("eval_", 0) == 0 && entry.path().extension() == ".csv") {
        const auto records = read_records_csv(entry.path().string());
        ar.records.insert(ar.records.end(), records.begin(), records.end());
      }
    }
    if (!ar.records.empty()) arms.push_back(std::move(ar));
  }
  if (arms.empty()) {
    std::cerr << "no eval CSVs found under " << dir << "\n";
    return 1;
  }
  const ExperimentReport report = compute_report(arms, target);
  const std::string json = report_to_json(report);
  const fs::path out_path = fs::path(dir) / "report.json";
  std::ofstream out(out_path);
  out << json << "\n";
  std::cout << json << "\n";
  std::cout << "report written to " << out_path.string() << "\n";
  return 0;
}

int cmd_compare_rules(const std::string& config_path,
                      const std::string& rules_csv, const std::string& out) {
  ExperimentConfig cfg = parse_config_file(config_path);
  if (!out.empty()) cfg.out_dir = out;
  std::vector<SelectionRule> rules;
  std::vector<std::string> names;
  std::stringstream ss(rules_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    SelectionRule rule = cfg.transfer.selection;
    if (item == "threshold") {
      rule.kind = SelectionRule::Kind::kThreshold;
    } else if (item == "abs_threshold") {
      rule.kind = SelectionRule::Kind::kAbsThreshold;
    } else if (item == "top_fraction") {
      rule.kind = SelectionRule::Kind::kTopFraction;
    } else if (item == "prioritized") {
      rule.kind = SelectionRule::Kind::kPrioritized;
    } else {
      std::cerr << "unknown rule: " << item << "\n";
      return 1;
    }
    rules.push_back(rule);
    names.push_back(item);
  }
  compare_selection_rules(cfg, rules, names);
  std::cout << "overlay written to " << cfg.out_dir << "/overlay.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer RL experiments: Clipped PPO with representation and "
               "instance transfer on desk-scale tasks"};
  app.require_subcommand(1);

  std::string config_path, arm, seeds_csv, out, env_id, weights_csv, rules_csv;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<double> target;
  bool verbose = false;

  auto* describe = app.add_subcommand("describe-env", "Print env feature maps");
  describe->add_option("--env", env_id, "Env id (default: all)");

  auto* teacher = app.add_subcommand("train-teacher", "Train a teacher policy");
  teacher->add_option("--config", config_path, "Config file");
  teacher->add_option("--out", out, "Checkpoint output path")->required();
  teacher->add_option("--seed", seed, "Training seed");
  teacher->add_option("--iterations", iterations, "Training iterations");
  teacher->add_option("--weights", weights_csv, "Teacher feature weights a,b,c");

  auto* run = app.add_subcommand("run", "Run one experiment arm");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--arm", arm, "baseline|ks|it|repaint");
  run->add_option("--seed", seed, "Single seed");
  run->add_option("--seeds", seeds_csv, "Seed list a,b,c");
  run->add_option("--out", out, "Output directory");
  run->add_flag("--verbose", verbose, "Per-iteration progress");

  auto* report = app.add_subcommand("report", "Summarize arm CSVs");
  report->add_option("--dir", out, "Directory with <arm>/eval_*.csv")->required();
  report->add_option("--target", target, "Target score (default: auto)");

  auto* compare = app.add_subcommand("compare-rules",
                                     "Run one experiment per selection rule");
  compare->add_option("--config", config_path, "Config file")->required();
  compare->add_option("--rules", rules_csv, "Comma list of rules")->required();
  compare->add_option("--out", out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (describe->parsed()) return cmd_describe_env(env_id);
    if (teacher->parsed()) {
      return cmd_train_teacher(config_path, out, seed, iterations, weights_csv);
    }
    if (run->parsed()) {
      return cmd_run(config_path, arm, seeds_csv, seed, out, verbose);
    }
    if (report->parsed()) return cmd_report(out, target);
    if (compare->parsed()) return cmd_compare_rules(config_path, rules_csv, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
