#include "repaint/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;

namespace repaint {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad number '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw std::invalid_argument("config key '" + key + "': expected integer");
  }
  return i;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected bool");
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& p : split(value, ',')) out.push_back(to_double(key, p));
  return out;
}

int default_eval_episodes(const std::string& env_id) {
  return env_id.rfind("goal-reacher", 0) == 0 ? 20 : 5;
}

TaskSpec make_task_spec(const ExperimentConfig& cfg,
                        const std::vector<double>& weights) {
  const EnvInfo& info = env_info(cfg.env_id);
  TaskSpec spec;
  spec.env_id = cfg.env_id;
  spec.feature_weights = weights.empty() ? info.default_student_weights : weights;
  spec.discount = cfg.gamma;
  spec.episode_horizon = cfg.horizon > 0 ? cfg.horizon : info.default_horizon;
  spec.reward_normalizer = cfg.reward_normalizer;
  return spec;
}

MlpArch actor_arch_for(const Env& env, const std::vector<int>& hidden) {
  return {env.observation_dim(), hidden,
          env.is_discrete() ? env.action_count() : env.action_dim()};
}

Action distribution_mode(const ActionDistribution& dist) {
  if (dist.is_categorical()) {
    const auto& p = dist.categorical().probs;
    return Action::discrete(static_cast<int>(
        std::max_element(p.begin(), p.end()) - p.begin()));
  }
  return Action::continuous(dist.gaussian().mean);
}

TransferConfig transfer_for_arm(const ExperimentConfig& cfg) {
  TransferConfig t = cfg.transfer;
  if (cfg.arm == Arm::kKickstart) t.alpha2 = 0.0;
  if (cfg.arm == Arm::kInstance) {
    t.betas.clear();
    t.alpha1 = 0.0;
  }
  return t;
}

void write_csv_header(std::ofstream& out) {
  out << "iteration,seed,mean_return,aux_metric,wall_ms\n";
}

void write_csv_row(std::ofstream& out, const EvalRecord& r) {
  out << r.iteration << "," << r.seed << "," << std::setprecision(17)
      << r.mean_return << "," << r.aux_metric << "," << r.wall_ms << "\n";
}

}  // namespace

std::string arm_name(Arm arm) {
  switch (arm) {
    case Arm::kBaseline: return "baseline";
    case Arm::kKickstart: return "ks";
    case Arm::kInstance: return "it";
    case Arm::kRepaint: return "repaint";
  }
  return "baseline";
}

Arm arm_from_name(const std::string& name) {
  if (name == "baseline") return Arm::kBaseline;
  if (name == "ks") return Arm::kKickstart;
  if (name == "it") return Arm::kInstance;
  if (name == "repaint") return Arm::kRepaint;
  throw std::invalid_argument("unknown arm: " + name +
                              " (expected baseline|ks|it|repaint)");
}

void ExperimentConfig::validate() const {
  (void)env_info(env_id);
  detail::require(iterations >= 1, "iterations must be >= 1");
  detail::require(!seeds.empty(), "seeds must be non-empty");
  detail::require(eval_episodes >= 0, "eval.episodes must be >= 0");
  detail::require(horizon >= 0, "task.horizon must be >= 0");
  ppo.validate();
  detail::require(gae.lambda >= 0.0 && gae.lambda <= 1.0,
                  "gae.lambda must be in [0,1]");
  detail::require(gamma >= 0.0 && gamma <= 1.0, "task.gamma must be in [0,1]");
  if (arm == Arm::kBaseline) {
    // Baseline must be teacher-free by construction.
    detail::require(teacher_checkpoint.empty(),
                    "baseline arm forbids teacher.checkpoint");
    detail::require(teacher_weights.empty(),
                    "baseline arm forbids task.teacher_weights");
    detail::require(!warm_start, "baseline arm forbids warm_start");
  } else {
    detail::require(!teacher_checkpoint.empty(),
                    arm_name(arm) + " arm requires teacher.checkpoint");
  }
  if (!student_weights.empty()) {
    detail::require(
        student_weights.size() ==
            static_cast<std::size_t>(env_info(env_id).feature_dim),
        "task.student_weights length must match the env feature dimension");
  }
  transfer.validate(/*teacher_count=*/1);
}

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
  if (name == "desk") {
    cfg.ppo = PpoConfig{};
    cfg.student_budget = RolloutBudget::steps(512);
    cfg.teacher_budget = RolloutBudget::episodes(4);
    cfg.gae.lambda = 0.95;
    cfg.gamma = 0.99;
    cfg.transfer.betas = {BetaSchedule{0.2, 0.95}};
    cfg.transfer.selection = SelectionRule::threshold(0.1);
    cfg.transfer.phase_iterations = 15;
    cfg.iterations = 60;
    cfg.hidden = {16, 16};
  } else if (name == "mujoco") {
    // Rollout 2048 steps, 10 epochs, gamma .99, lr 3e-4, lambda .95,
    // entropy 1e-4, beta0 .2, zeta .8, 15 transfer iterations.
    cfg.ppo = PpoConfig{0.2, 10, 64, 1e-4, 3e-4, 3e-4};
    cfg.student_budget = RolloutBudget::steps(2048);
    cfg.gae.lambda = 0.95;
    cfg.gamma = 0.99;
    cfg.transfer.betas = {BetaSchedule{0.2, 0.95}};
    cfg.transfer.selection = SelectionRule::threshold(0.8);
    cfg.transfer.phase_iterations = 15;
  } else if (name == "deepracer") {
    // 20 rollout episodes (2 with the teacher), 8 epochs, gamma .999,
    // entropy 1e-3, beta0 .2, zeta .2, 4 transfer iterations.
    cfg.ppo = PpoConfig{0.2, 8, 64, 1e-3, 3e-4, 3e-4};
    cfg.student_budget = RolloutBudget::episodes(20);
    cfg.teacher_budget = RolloutBudget::episodes(2);
    cfg.gae.lambda = 0.95;
    cfg.gamma = 0.999;
    cfg.transfer.betas = {BetaSchedule{0.2, 0.95}};
    cfg.transfer.selection = SelectionRule::threshold(0.2);
    cfg.transfer.phase_iterations = 4;
  } else if (name == "starcraft") {
    // 2 rollout episodes, 6 epochs, lr 3e-5, entropy .01, beta0 .1,
    // zeta .2, 25 transfer iterations.
    cfg.ppo = PpoConfig{0.2, 6, 64, 1e-2, 3e-5, 3e-5};
    cfg.student_budget = RolloutBudget::episodes(2);
    cfg.teacher_budget = RolloutBudget::episodes(2);
    cfg.gae.lambda = 0.95;
    cfg.gamma = 0.99;
    cfg.transfer.betas = {BetaSchedule{0.1, 0.95}};
    cfg.transfer.selection = SelectionRule::threshold(0.2);
    cfg.transfer.phase_iterations = 25;
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  cfg.transfer.alpha1 = cfg.ppo.actor_lr;
  cfg.transfer.alpha2 = cfg.ppo.actor_lr;
  cfg.preset = name;
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  cfg.transfer.betas = {BetaSchedule{0.2, 0.95}};
  bool alpha1_set = false;
  bool alpha2_set = false;
  bool beta0_set = false;
  bool beta_decay_set = false;
  std::vector<double> beta0{};
  double beta_decay = 0.95;

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line without '=': " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "preset") {
      apply_preset(cfg, value);
    } else if (key == "env.id") {
      cfg.env_id = value;
    } else if (key == "env.continuous") {
      cfg.continuous_actions = to_bool(key, value);
    } else if (key == "task.student_weights") {
      cfg.student_weights = to_doubles(key, value);
    } else if (key == "task.teacher_weights") {
      cfg.teacher_weights = to_doubles(key, value);
    } else if (key == "task.gamma") {
      cfg.gamma = to_double(key, value);
    } else if (key == "task.horizon") {
      cfg.horizon = to_int(key, value);
    } else if (key == "task.reward_normalizer") {
      cfg.reward_normalizer = to_double(key, value);
    } else if (key == "arm") {
      cfg.arm = arm_from_name(value);
    } else if (key == "iterations") {
      cfg.iterations = to_int(key, value);
    } else if (key == "eval.episodes") {
      cfg.eval_episodes = to_int(key, value);
    } else if (key == "eval.deterministic") {
      cfg.eval_deterministic = to_bool(key, value);
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : split(value, ',')) {
        cfg.seeds.push_back(static_cast<std::uint64_t>(to_int(key, s)));
      }
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "teacher.checkpoint") {
      cfg.teacher_checkpoint = value;
    } else if (key == "warm_start") {
      cfg.warm_start = to_bool(key, value);
    } else if (key == "timing") {
      cfg.timing = to_bool(key, value);
    } else if (key == "verbose") {
      cfg.verbose = to_bool(key, value);
    } else if (key == "net.hidden") {
      cfg.hidden.clear();
      for (const auto& s : split(value, ',')) cfg.hidden.push_back(to_int(key, s));
    } else if (key == "net.init_log_std") {
      cfg.init_log_std = to_double(key, value);
    } else if (key == "ppo.clip_epsilon") {
      cfg.ppo.clip_epsilon = to_double(key, value);
    } else if (key == "ppo.epochs") {
      cfg.ppo.epochs = to_int(key, value);
    } else if (key == "ppo.minibatch") {
      cfg.ppo.minibatch_size = to_int(key, value);
    } else if (key == "ppo.entropy_coef") {
      cfg.ppo.entropy_coef = to_double(key, value);
    } else if (key == "ppo.actor_lr") {
      cfg.ppo.actor_lr = to_double(key, value);
    } else if (key == "ppo.critic_lr") {
      cfg.ppo.critic_lr = to_double(key, value);
    } else if (key == "ppo.rollout_steps") {
      cfg.student_budget = RolloutBudget::steps(to_int(key, value));
    } else if (key == "ppo.rollout_episodes") {
      cfg.student_budget = RolloutBudget::episodes(to_int(key, value));
    } else if (key == "gae.lambda") {
      cfg.gae.lambda = to_double(key, value);
    } else if (key == "transfer.beta0") {
      beta0 = to_doubles(key, value);
      beta0_set = true;
    } else if (key == "transfer.beta_decay") {
      beta_decay = to_double(key, value);
      beta_decay_set = true;
    } else if (key == "transfer.selection") {
      if (value == "threshold") {
        cfg.transfer.selection.kind = SelectionRule::Kind::kThreshold;
      } else if (value == "abs_threshold") {
        cfg.transfer.selection.kind = SelectionRule::Kind::kAbsThreshold;
      } else if (value == "top_fraction") {
        cfg.transfer.selection.kind = SelectionRule::Kind::kTopFraction;
        if (cfg.transfer.selection.fraction <= 0.0) {
          cfg.transfer.selection.fraction = 0.2;
        }
      } else if (value == "prioritized") {
        cfg.transfer.selection.kind = SelectionRule::Kind::kPrioritized;
        if (cfg.transfer.selection.exponent < 0.0) {
          cfg.transfer.selection.exponent = 1.0;
        }
      } else {
        throw std::invalid_argument("unknown transfer.selection: " + value);
      }
    } else if (key == "transfer.zeta") {
      cfg.transfer.selection.zeta = to_double(key, value);
    } else if (key == "transfer.top_fraction") {
      cfg.transfer.selection.fraction = to_double(key, value);
    } else if (key == "transfer.exponent") {
      cfg.transfer.selection.exponent = to_double(key, value);
    } else if (key == "transfer.sample_count") {
      cfg.transfer.selection.sample_count = to_int(key, value);
    } else if (key == "transfer.alpha1") {
      cfg.transfer.alpha1 = to_double(key, value);
      alpha1_set = true;
    } else if (key == "transfer.alpha2") {
      cfg.transfer.alpha2 = to_double(key, value);
      alpha2_set = true;
    } else if (key == "transfer.schedule") {
      if (value == "combined") {
        cfg.transfer.schedule = TransferSchedule::kCombined;
      } else if (value == "alternating") {
        cfg.transfer.schedule = TransferSchedule::kAlternating;
      } else {
        throw std::invalid_argument("unknown transfer.schedule: " + value);
      }
    } else if (key == "transfer.ratio") {
      const auto parts = split(value, ':');
      if (parts.size() != 2) {
        throw std::invalid_argument("transfer.ratio expects rep:ins");
      }
      cfg.transfer.alternate_rep = to_int(key, parts[0]);
      cfg.transfer.alternate_ins = to_int(key, parts[1]);
    } else if (key == "transfer.phase_iterations") {
      cfg.transfer.phase_iterations = to_int(key, value);
    } else if (key == "transfer.teacher_rollout_episodes") {
      cfg.teacher_budget = RolloutBudget::episodes(to_int(key, value));
    } else if (key == "transfer.teacher_rollout_steps") {
      cfg.teacher_budget = RolloutBudget::steps(to_int(key, value));
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  if (!alpha1_set) cfg.transfer.alpha1 = cfg.ppo.actor_lr;
  if (!alpha2_set) cfg.transfer.alpha2 = cfg.ppo.actor_lr;
  if (beta0_set || beta_decay_set) {
    if (beta0.empty()) beta0 = {0.2};
    cfg.transfer.betas.clear();
    for (const double b0 : beta0) {
      cfg.transfer.betas.push_back(BetaSchedule{b0, beta_decay});
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

EvalResult evaluate_policy(const PolicyNetwork& policy, Env& env, int episodes,
                           std::uint64_t seed, bool deterministic) {
  detail::require(episodes >= 1, "evaluation needs at least one episode");
  Rng rng(derive_seed(seed, Stream::kInit));
  EvalResult result;
  for (int e = 0; e < episodes; ++e) {
    std::vector<double> state =
        env.reset(derive_seed(seed, Stream::kEnv, static_cast<std::uint64_t>(e)));
    double episode_return = 0.0;
    while (!env.done()) {
      const ActionDistribution dist = policy.forward(state);
      const Action action =
          deterministic ? distribution_mode(dist) : dist.sample(rng);
      const StepResult sr = env.step(action);
      episode_return += sr.reward;
      state = sr.next_state;
    }
    result.mean_return += episode_return;
    result.mean_aux += env.episode_aux();
  }
  result.mean_return /= episodes;
  result.mean_aux /= episodes;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const TaskSpec student_spec = make_task_spec(cfg, cfg.student_weights);
  const EnvOptions options{cfg.continuous_actions};

  std::vector<TeacherPolicy> teachers;
  if (cfg.arm != Arm::kBaseline) {
    CheckpointMeta meta;
    teachers.emplace_back(load_policy(cfg.teacher_checkpoint, &meta), "teacher");
    if (cfg.verbose && !meta.task_weights.empty()) {
      std::cout << "teacher task similarity: "
                << cosine_similarity(meta.task_weights,
                                     student_spec.feature_weights)
                << "\n";
    }
  }
  const TransferConfig transfer = transfer_for_arm(cfg);

  const fs::path arm_dir = fs::path(cfg.out_dir) / arm_name(cfg.arm);
  fs::create_directories(arm_dir);

  const int eval_episodes = cfg.eval_episodes > 0
                                ? cfg.eval_episodes
                                : default_eval_episodes(cfg.env_id);

  ExperimentResult result;
  result.arm = arm_name(cfg.arm);
  for (const std::uint64_t seed : cfg.seeds) {
    auto env = make_env(student_spec, options);
    auto eval_env = make_env(student_spec, options);

    PolicyNetwork actor(actor_arch_for(*env, cfg.hidden),
                        env->is_discrete() ? PolicyHead::kCategorical
                                           : PolicyHead::kDiagonalGaussian,
                        derive_seed(seed, Stream::kInit, 1), cfg.init_log_std);
    if (cfg.warm_start) {
      detail::require(!teachers.empty(), "warm_start requires a teacher");
      detail::require(teachers.front().network().params().size() ==
                          actor.params().size(),
                      "warm_start: teacher architecture differs from student");
      actor.set_params(teachers.front().network().params());
    }
    ValueNetwork critic({env->observation_dim(), cfg.hidden, 1},
                        derive_seed(seed, Stream::kInit, 2));
    LearnerState learner(std::move(actor), std::move(critic), cfg.ppo);
    const TrainContext ctx{cfg.ppo, GaeConfig{cfg.gamma, cfg.gae.lambda},
                           cfg.student_budget, cfg.teacher_budget};

    const fs::path csv_path = arm_dir / ("eval_" + std::to_string(seed) + ".csv");
    const fs::path metrics_path =
        arm_dir / ("metrics_" + std::to_string(seed) + ".csv");
    std::ofstream csv(csv_path);
    std::ofstream metrics_csv(metrics_path);
    if (!csv || !metrics_csv) {
      throw std::runtime_error("cannot open output CSV under " + arm_dir.string());
    }
    write_csv_header(csv);
    metrics_csv << "iteration,train_return,actor_objective,critic_loss,kl,"
                   "entropy,aux_cross_entropy,beta_k,student_steps,"
                   "teacher_steps,kept_teacher_steps,diag_f,diag_rep_norm2,"
                   "diag_ins_norm2,diag_inner\n";

    for (int k = 1; k <= cfg.iterations; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      IterationMetrics m;
      switch (cfg.arm) {
        case Arm::kBaseline:
          m = ppo_iteration(learner, *env, ctx, k, seed);
          break;
        case Arm::kKickstart:
        case Arm::kInstance:
          m = repaint_iteration(learner, *env, teachers, ctx, transfer, k, seed);
          break;
        case Arm::kRepaint:
          m = transfer.schedule == TransferSchedule::kAlternating
                  ? alternating_repaint_iteration(learner, *env, teachers, ctx,
                                                  transfer, k, seed)
                  : repaint_iteration(learner, *env, teachers, ctx, transfer, k,
                                      seed);
          break;
      }
      const EvalResult eval = evaluate_policy(
          learner.actor, *eval_env, eval_episodes,
          derive_seed(seed, Stream::kEvaluation, 0), cfg.eval_deterministic);
      EvalRecord record;
      record.iteration = k;
      record.seed = seed;
      record.mean_return = eval.mean_return;
      record.aux_metric = eval.mean_aux;
      record.wall_ms =
          cfg.timing
              ? std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count()
              : 0;
      write_csv_row(csv, record);
      result.records.push_back(record);

      metrics_csv << k << "," << std::setprecision(17) << m.mean_return << ","
                  << m.actor_objective << "," << m.critic_loss << ","
                  << m.kl_to_old << "," << m.entropy << ","
                  << m.aux_cross_entropy << "," << m.beta_k << ","
                  << m.student_steps << "," << m.teacher_steps << ","
                  << m.kept_teacher_steps << "," << m.diag_f << ","
                  << m.diag_rep_norm2 << "," << m.diag_ins_norm2 << ","
                  << m.diag_inner << "\n";
      if (cfg.verbose) {
        std::cout << result.arm << " seed " << seed << " iter " << k
                  << " eval " << eval.mean_return << " aux " << eval.mean_aux
                  << "\n";
      }
    }
    const fs::path ckpt = arm_dir / ("actor_" + std::to_string(seed) + ".json");
    CheckpointMeta meta{cfg.env_id, student_spec.feature_weights};
    save_policy(learner.actor, ckpt.string(), &meta);
    result.csv_paths.push_back(csv_path.string());
    result.checkpoint_paths.push_back(ckpt.string());
  }
  return result;
}

void train_teacher(const TaskSpec& spec, const PpoConfig& ppo,
                   const GaeConfig& gae, const RolloutBudget& budget,
                   const std::vector<int>& hidden, bool continuous,
                   double init_log_std, std::uint64_t seed, int iterations,
                   const std::string& path) {
  detail::require(iterations >= 0, "iterations must be >= 0");
  const EnvOptions options{continuous};
  auto env = make_env(spec, options);
  PolicyNetwork actor(actor_arch_for(*env, hidden),
                      env->is_discrete() ? PolicyHead::kCategorical
                                         : PolicyHead::kDiagonalGaussian,
                      derive_seed(seed, Stream::kInit, 1), init_log_std);
  ValueNetwork critic({env->observation_dim(), hidden, 1},
                      derive_seed(seed, Stream::kInit, 2));
  LearnerState learner(std::move(actor), std::move(critic), ppo);
  const TrainContext ctx{ppo, gae, budget, RolloutBudget::episodes(1)};
  for (int k = 1; k <= iterations; ++k) {
    ppo_iteration(learner, *env, ctx, k, seed);
  }
  CheckpointMeta meta{spec.env_id, spec.feature_weights};
  save_policy(learner.actor, path, &meta);
}

ExperimentReport compute_report(const std::vector<ArmRecords>& arms,
                                std::optional<double> target_score) {
  ExperimentReport report;
  // Seed-averaged curve per arm.
  for (const auto& arm : arms) {
    int max_iter = 0;
    for (const auto& r : arm.records) max_iter = std::max(max_iter, r.iteration);
    std::vector<double> sum(static_cast<std::size_t>(max_iter), 0.0);
    std::vector<int> count(static_cast<std::size_t>(max_iter), 0);
    for (const auto& r : arm.records) {
      sum[static_cast<std::size_t>(r.iteration - 1)] += r.mean_return;
      count[static_cast<std::size_t>(r.iteration - 1)] += 1;
    }
    std::vector<double> curve(static_cast<std::size_t>(max_iter), 0.0);
    for (int i = 0; i < max_iter; ++i) {
      detail::require(count[static_cast<std::size_t>(i)] > 0,
                      "missing iteration " + std::to_string(i + 1) +
                          " in arm " + arm.arm);
      curve[static_cast<std::size_t>(i)] =
          sum[static_cast<std::size_t>(i)] / count[static_cast<std::size_t>(i)];
    }
    report.curves[arm.arm] = std::move(curve);
  }

  const auto baseline_it = report.curves.find("baseline");
  if (!target_score.has_value()) {
    if (baseline_it == report.curves.end()) {
      throw std::invalid_argument(
          "auto target requires baseline records");
    }
    report.target_score = *std::max_element(baseline_it->second.begin(),
                                            baseline_it->second.end());
    report.target_auto = true;
  } else {
    report.target_score = *target_score;
    report.target_auto = false;
  }

  auto first_reaching = [&](const std::vector<double>& curve) -> int {
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (curve[i] >= report.target_score) return static_cast<int>(i) + 1;
    }
    return 0;  // not achieved
  };

  int baseline_k = 0;
  if (baseline_it != report.curves.end()) {
    baseline_k = first_reaching(baseline_it->second);
  }

  for (const auto& arm : arms) {
    const auto& curve = report.curves.at(arm.arm);
    ArmReport ar;
    ar.arm = arm.arm;
    ar.best_score = *std::max_element(curve.begin(), curve.end());
    const int k = first_reaching(curve);
    ar.achieved = k > 0;
    ar.iterations_to_target = k;
    if (ar.achieved && baseline_k > 0) {
      ar.reduction_fraction =
          static_cast<double>(baseline_k - k) / static_cast<double>(baseline_k);
      ar.percent_reduced =
          static_cast<int>(std::lround(100.0 * ar.reduction_fraction));
    }
    report.arms.push_back(ar);
  }
  return report;
}

std::string report_to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["target_score"] = report.target_score;
  j["target"] = report.target_auto ? nlohmann::json("auto")
                                   : nlohmann::json(report.target_score);
  j["arms"] = nlohmann::json::array();
  for (const auto& arm : report.arms) {
    nlohmann::json a;
    a["arm"] = arm.arm;
    a["best_score"] = arm.best_score;
    if (arm.achieved) {
      a["iterations_to_target"] = arm.iterations_to_target;
      a["percent_reduced"] = arm.percent_reduced;
      a["reduction_fraction"] = arm.reduction_fraction;
    } else {
      a["iterations_to_target"] = "Not achieved";
      a["percent_reduced"] = nullptr;
      a["reduction_fraction"] = nullptr;
    }
    j["arms"].push_back(a);
  }
  for (const auto& [name, curve] : report.curves) {
    j["curves"][name] = curve;
  }
  return j.dump(2);
}

std::vector<EvalRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open records CSV: " + path);
  std::vector<EvalRecord> records;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("iteration", 0) == 0) continue;  // header
    }
    const auto parts = split(line, ',');
    if (parts.size() != 5) {
      throw std::runtime_error("bad CSV row in " + path + ": " + line);
    }
    EvalRecord r;
    r.iteration = to_int("iteration", parts[0]);
    r.seed = static_cast<std::uint64_t>(to_int("seed", parts[1]));
    r.mean_return = to_double("mean_return", parts[2]);
    r.aux_metric = to_double("aux_metric", parts[3]);
    r.wall_ms = to_int("wall_ms", parts[4]);
    records.push_back(r);
  }
  return records;
}

std::vector<ExperimentResult> compare_selection_rules(
    const ExperimentConfig& cfg, const std::vector<SelectionRule>& rules,
    const std::vector<std::string>& rule_names) {
  detail::require(rules.size() == rule_names.size(),
                  "rules/names length mismatch");
  detail::require(!rules.empty(), "no selection rules given");
  detail::require(cfg.arm == Arm::kInstance || cfg.arm == Arm::kRepaint,
                  "compare-rules requires arm = it or repaint");
  std::vector<ExperimentResult> results;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.transfer.selection = rules[i];
    run_cfg.out_dir =
        (fs::path(cfg.out_dir) / ("rule_" + rule_names[i])).string();
    results.push_back(run_experiment(run_cfg));
  }
  // Overlay CSV: iteration column plus one seed-averaged column per rule.
  std::vector<std::vector<double>> curves;
  std::size_t iterations = 0;
  for (const auto& result : results) {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& r : result.records) {
      acc[r.iteration].first += r.mean_return;
      acc[r.iteration].second += 1;
    }
    std::vector<double> curve;
    for (const auto& [k, v] : acc) curve.push_back(v.first / v.second);
    iterations = std::max(iterations, curve.size());
    curves.push_back(std::move(curve));
  }
  fs::create_directories(cfg.out_dir);
  const fs::path overlay_path = fs::path(cfg.out_dir) / "overlay.csv";
  std::ofstream overlay(overlay_path);
  overlay << "iteration";
  for (const auto& name : rule_names) overlay << "," << name;
  overlay << "\n" << std::setprecision(17);
  for (std::size_t k = 0; k < iterations; ++k) {
    overlay << (k + 1);
    for (const auto& curve : curves) {
      overlay << ",";
      if (k < curve.size()) overlay << curve[k];
    }
    overlay << "\n";
  }
  return results;
}

}  // namespace repaint
