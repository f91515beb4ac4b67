#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repaint/checkpoint.hpp"
#include "repaint/transfer.hpp"

namespace repaint {

enum class Arm { kBaseline, kKickstart, kInstance, kRepaint };

std::string arm_name(Arm arm);
Arm arm_from_name(const std::string& name);

struct ExperimentConfig {
  std::string preset;

  std::string env_id = "goal-reacher-1d";
  bool continuous_actions = false;
  std::vector<double> student_weights;
  std::vector<double> teacher_weights;  // informational; checkpoint drives the teacher
  double gamma = 0.99;
  int horizon = 0;  // 0 = env default
  std::optional<double> reward_normalizer;

  Arm arm = Arm::kBaseline;
  int iterations = 60;
  int eval_episodes = 0;  // 0 = env default (20 for goal-reacher, 5 otherwise)
  bool eval_deterministic = false;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir = "out";
  std::string teacher_checkpoint;
  bool warm_start = false;  // initialize the student from the teacher params
  bool timing = false;      // real wall_ms in the CSV (breaks byte determinism)
  bool verbose = false;

  std::vector<int> hidden = {16, 16};
  double init_log_std = 0.0;

  PpoConfig ppo;
  GaeConfig gae;
  RolloutBudget student_budget = RolloutBudget::steps(512);
  RolloutBudget teacher_budget = RolloutBudget::episodes(4);
  TransferConfig transfer;

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
void apply_preset(ExperimentConfig& cfg, const std::string& name);

struct EvalRecord {
  int iteration = 0;
  std::uint64_t seed = 0;
  double mean_return = 0.0;
  double aux_metric = 0.0;
  long long wall_ms = 0;
};

struct EvalResult {
  double mean_return = 0.0;
  double mean_aux = 0.0;
};

EvalResult evaluate_policy(const PolicyNetwork& policy, Env& env, int episodes,
                           std::uint64_t seed, bool deterministic);

struct ExperimentResult {
  std::string arm;
  std::vector<EvalRecord> records;
  std::vector<std::string> csv_paths;
  std::vector<std::string> checkpoint_paths;
};

// Trains the configured arm for every seed, evaluating after each iteration
// and streaming records to <out>/<arm>/eval_<seed>.csv. Deterministic given
// (config, seed) unless cfg.timing is on.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Baseline PPO on the teacher task; saves the policy checkpoint to `path`.
void train_teacher(const TaskSpec& spec, const PpoConfig& ppo,
                   const GaeConfig& gae, const RolloutBudget& budget,
                   const std::vector<int>& hidden, bool continuous,
                   double init_log_std, std::uint64_t seed, int iterations,
                   const std::string& path);

struct ArmRecords {
  std::string arm;
  std::vector<EvalRecord> records;
};

struct ArmReport {
  std::string arm;
  bool achieved = false;
  int iterations_to_target = 0;   // K_arm; valid when achieved
  int percent_reduced = 0;        // rounded; valid when achieved and baseline present
  double reduction_fraction = 0.0;
  double best_score = 0.0;        // max seed-averaged eval score
};

struct ExperimentReport {
  double target_score = 0.0;
  bool target_auto = true;
  std::vector<ArmReport> arms;
  // Seed-averaged curves per arm, indexed by iteration-1.
  std::map<std::string, std::vector<double>> curves;
};

// Table-style summary: auto target = best seed-averaged baseline score;
// K_arm = first iteration whose seed-averaged score reaches the target.
ExperimentReport compute_report(const std::vector<ArmRecords>& arms,
                                std::optional<double> target_score);

std::string report_to_json(const ExperimentReport& report);

std::vector<EvalRecord> read_records_csv(const std::string& path);

// Runs one experiment per selection rule (shared seeds) and writes an
// overlay CSV of seed-averaged scores, one column per rule.
std::vector<ExperimentResult> compare_selection_rules(
    const ExperimentConfig& cfg, const std::vector<SelectionRule>& rules,
    const std::vector<std::string>& rule_names);

}  // namespace repaint
