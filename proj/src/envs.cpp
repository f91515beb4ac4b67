#include "repaint/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace repaint {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

void Env::init_normalizer() {
  if (spec_.reward_normalizer.has_value()) {
    detail::require(*spec_.reward_normalizer > 0.0,
                    "reward_normalizer must be positive");
    normalizer_ = *spec_.reward_normalizer;
  } else {
    const auto bounds = feature_bounds();
    double n = 0.0;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      n += std::abs(spec_.feature_weights[i]) * bounds[i];
    }
    normalizer_ = n > 0.0 ? n : 1.0;
  }
  normalizer_ready_ = true;
}

std::vector<double> Env::reset(std::uint64_t seed) {
  detail::require(spec_.feature_weights.size() ==
                      static_cast<std::size_t>(feature_dim()),
                  "feature_weights length must match env feature dimension");
  detail::require(spec_.discount >= 0.0 && spec_.discount <= 1.0,
                  "discount must lie in [0,1]");
  detail::require(spec_.episode_horizon >= 1, "episode_horizon must be >= 1");
  if (!normalizer_ready_) init_normalizer();
  rng_ = Rng(derive_seed(seed, Stream::kEnv));
  steps_ = 0;
  started_ = true;
  done_ = false;
  return do_reset(rng_);
}

StepResult Env::step(const Action& action) {
  detail::require(started_, "step before reset");
  if (done_) throw std::logic_error("step called on finished episode");
  Transition t = do_step(action, rng_);
  steps_ += 1;
  StepResult result;
  result.features = std::move(t.features);
  result.next_state = std::move(t.next_state);
  result.reward = dot(result.features, spec_.feature_weights) / normalizer_;
  done_ = t.terminal || steps_ >= spec_.episode_horizon;
  result.done = done_;
  return result;
}

double cosine_similarity(const std::vector<double>& w1,
                         const std::vector<double>& w2) {
  detail::require(w1.size() == w2.size(), "weight vectors differ in length");
  detail::require(!w1.empty(), "empty weight vector");
  const double n1 = std::sqrt(dot(w1, w1));
  const double n2 = std::sqrt(dot(w2, w2));
  detail::require(n1 > 0.0 && n2 > 0.0, "cosine similarity of zero vector");
  return dot(w1, w2) / (n1 * n2);
}

TaskPair make_task_pair(const std::string& env_id,
                        const std::vector<double>& teacher_weights,
                        const std::vector<double>& student_weights) {
  const EnvInfo& info = env_info(env_id);
  detail::require(teacher_weights.size() == static_cast<std::size_t>(info.feature_dim),
                  "teacher weights do not match env feature dimension");
  detail::require(student_weights.size() == static_cast<std::size_t>(info.feature_dim),
                  "student weights do not match env feature dimension");
  TaskPair pair;
  pair.teacher.env_id = env_id;
  pair.teacher.feature_weights = teacher_weights;
  pair.teacher.episode_horizon = info.default_horizon;
  pair.student.env_id = env_id;
  pair.student.feature_weights = student_weights;
  pair.student.episode_horizon = info.default_horizon;
  pair.similarity = cosine_similarity(teacher_weights, student_weights);
  for (std::size_t i = 0; i < teacher_weights.size(); ++i) {
    if (teacher_weights[i] == 0.0 && student_weights[i] != 0.0) {
      pair.teacher_is_subtask = true;
      break;
    }
  }
  return pair;
}

// ---------------------------------------------------------------------------
// goal-reacher: point mass rewarded for closing on a goal with little motion.
// ---------------------------------------------------------------------------

class GoalReacher1d final : public Env {
 public:
  GoalReacher1d(TaskSpec spec, bool continuous)
      : Env(std::move(spec)), continuous_(continuous) {}

  int observation_dim() const override { return 2; }
  int feature_dim() const override { return 3; }
  bool is_discrete() const override { return !continuous_; }
  int action_count() const override { return 5; }
  int action_dim() const override { return 1; }
  double episode_aux() const override { return reached_ ? 1.0 : 0.0; }

 protected:
  std::vector<double> do_reset(Rng& rng) override {
    pos_ = 0.0;
    goal_ = rng.uniform(-1.0, 1.0);
    reached_ = false;
    return observe();
  }

  Transition do_step(const Action& action, Rng&) override {
    double d = 0.0;
    if (continuous_) {
      detail::require(!action.is_discrete && action.values.size() == 1,
                      "goal-reacher-1d continuous mode expects 1-dim action");
      d = clampd(action.values[0], -kMaxMove, kMaxMove);
    } else {
      detail::require(action.is_discrete, "goal-reacher-1d expects discrete action");
      static constexpr double kMoves[5] = {-0.2, -0.05, 0.0, 0.05, 0.2};
      detail::require(action.index >= 0 && action.index < 5, "action out of range");
      d = kMoves[action.index];
    }
    pos_ = clampd(pos_ + d, -kPosLimit, kPosLimit);
    const double dist = std::abs(pos_ - goal_);
    reached_ = dist < kGoalTol;
    Transition t;
    t.features = {-dist, -std::abs(d), reached_ ? 1.0 : 0.0};
    t.next_state = observe();
    t.terminal = reached_;
    return t;
  }

  std::vector<double> feature_bounds() const override {
    return {kPosLimit + 1.0, kMaxMove, 1.0};
  }

 private:
  std::vector<double> observe() const { return {pos_, goal_ - pos_}; }

  static constexpr double kPosLimit = 1.5;
  static constexpr double kMaxMove = 0.2;
  static constexpr double kGoalTol = 0.05;

  bool continuous_ = false;
  double pos_ = 0.0;
  double goal_ = 0.0;
  bool reached_ = false;
};

class GoalReacher2d final : public Env {
 public:
  GoalReacher2d(TaskSpec spec, bool continuous)
      : Env(std::move(spec)), continuous_(continuous) {}

  int observation_dim() const override { return 4; }
  int feature_dim() const override { return 3; }
  bool is_discrete() const override { return !continuous_; }
  int action_count() const override { return 5; }
  int action_dim() const override { return 2; }
  double episode_aux() const override { return reached_ ? 1.0 : 0.0; }

 protected:
  std::vector<double> do_reset(Rng& rng) override {
    x_ = 0.0;
    y_ = 0.0;
    gx_ = rng.uniform(-1.0, 1.0);
    gy_ = rng.uniform(-1.0, 1.0);
    reached_ = false;
    return observe();
  }

  Transition do_step(const Action& action, Rng&) override {
    double dx = 0.0;
    double dy = 0.0;
    if (continuous_) {
      detail::require(!action.is_discrete && action.values.size() == 2,
                      "goal-reacher-2d continuous mode expects 2-dim action");
      dx = clampd(action.values[0], -kMaxMove, kMaxMove);
      dy = clampd(action.values[1], -kMaxMove, kMaxMove);
    } else {
      detail::require(action.is_discrete, "goal-reacher-2d expects discrete action");
      detail::require(action.index >= 0 && action.index < 5, "action out of range");
      static constexpr double kDx[5] = {0.0, 0.1, -0.1, 0.0, 0.0};
      static constexpr double kDy[5] = {0.0, 0.0, 0.0, 0.1, -0.1};
      dx = kDx[action.index];
      dy = kDy[action.index];
    }
    x_ = clampd(x_ + dx, -kPosLimit, kPosLimit);
    y_ = clampd(y_ + dy, -kPosLimit, kPosLimit);
    const double dist = std::hypot(x_ - gx_, y_ - gy_);
    reached_ = dist < kGoalTol;
    Transition t;
    t.features = {-dist, -std::hypot(dx, dy), reached_ ? 1.0 : 0.0};
    t.next_state = observe();
    t.terminal = reached_;
    return t;
  }

  std::vector<double> feature_bounds() const override {
    return {(kPosLimit + 1.0) * std::numbers::sqrt2, kMaxMove * std::numbers::sqrt2,
            1.0};
  }

 private:
  std::vector<double> observe() const { return {x_, y_, gx_ - x_, gy_ - y_}; }

  static constexpr double kPosLimit = 1.5;
  static constexpr double kMaxMove = 0.15;
  static constexpr double kGoalTol = 0.1;

  bool continuous_ = false;
  double x_ = 0.0, y_ = 0.0, gx_ = 0.0, gy_ = 0.0;
  bool reached_ = false;
};

// ---------------------------------------------------------------------------
// lane-grid: two-lane track; the reward weights decide which lane pays.
// Driving past the inside or outside edge is off-track and ends the episode.
// ---------------------------------------------------------------------------

class LaneGrid final : public Env {
 public:
  explicit LaneGrid(TaskSpec spec) : Env(std::move(spec)) {}

  static constexpr int kLength = 24;

  int observation_dim() const override { return 3; }
  int feature_dim() const override { return 4; }
  int action_count() const override { return 3; }
  double episode_aux() const override {
    return static_cast<double>(cell_) / kLength;
  }

 protected:
  std::vector<double> do_reset(Rng& rng) override {
    cell_ = 0;
    lane_ = static_cast<int>(rng.below(2));
    return observe();
  }

  Transition do_step(const Action& action, Rng&) override {
    detail::require(action.is_discrete && action.index >= 0 && action.index < 3,
                    "lane-grid action out of range");
    Transition t;
    const int move = action.index;  // 0 keep, 1 toward inner, 2 toward outer
    int lane = lane_;
    bool off = false;
    if (move == 1) {
      if (lane == 0) off = true;
      lane = 0;
    } else if (move == 2) {
      if (lane == 1) off = true;
      lane = 1;
    }
    if (off) {
      t.features = {0.0, 0.0, 0.0, 1.0};
      t.next_state = observe();
      t.terminal = true;
      return t;
    }
    lane_ = lane;
    cell_ += 1;
    t.features = {1.0 / kLength, lane_ == 0 ? 1.0 : 0.0, lane_ == 1 ? 1.0 : 0.0,
                  0.0};
    t.next_state = observe();
    t.terminal = cell_ >= kLength;
    return t;
  }

  std::vector<double> feature_bounds() const override {
    return {1.0 / kLength, 1.0, 1.0, 1.0};
  }

 private:
  std::vector<double> observe() const {
    return {static_cast<double>(cell_) / kLength, lane_ == 0 ? 1.0 : 0.0,
            lane_ == 1 ? 1.0 : 0.0};
  }

  int cell_ = 0;
  int lane_ = 0;
};

// ---------------------------------------------------------------------------
// avoid-grid: two-lane track with parked bots that hop lanes at random.
// Colliding ends the episode; finishing the lap pays a bonus.
// ---------------------------------------------------------------------------

class AvoidGrid final : public Env {
 public:
  explicit AvoidGrid(TaskSpec spec) : Env(std::move(spec)) {}

  static constexpr int kLength = 24;
  static constexpr int kBots = 2;

  int observation_dim() const override { return 5; }
  int feature_dim() const override { return 4; }
  int action_count() const override { return 3; }
  double episode_aux() const override {
    return static_cast<double>(cell_) / kLength;
  }

 protected:
  std::vector<double> do_reset(Rng& rng) override {
    cell_ = 0;
    lane_ = static_cast<int>(rng.below(2));
    for (int b = 0; b < kBots; ++b) {
      bot_cell_[b] = 4 + static_cast<int>(rng.below(kLength - 5));
      bot_lane_[b] = static_cast<int>(rng.below(2));
    }
    return observe();
  }

  Transition do_step(const Action& action, Rng& rng) override {
    detail::require(action.is_discrete && action.index >= 0 && action.index < 3,
                    "avoid-grid action out of range");
    // Bots hop lanes before the agent moves.
    for (int b = 0; b < kBots; ++b) {
      if (rng.uniform() < kLaneHopProb) bot_lane_[b] = 1 - bot_lane_[b];
    }
    int lane = lane_;
    if (action.index == 1) lane = 0;
    if (action.index == 2) lane = 1;
    const int next_cell = cell_ + 1;
    bool collision = false;
    for (int b = 0; b < kBots; ++b) {
      if (bot_cell_[b] == next_cell && bot_lane_[b] == lane) collision = true;
    }
    Transition t;
    if (collision) {
      lane_ = lane;
      t.features = {0.0, 0.0, 1.0, 0.0};
      t.next_state = observe();
      t.terminal = true;
      return t;
    }
    lane_ = lane;
    cell_ = next_cell;
    const bool completed = cell_ >= kLength;
    t.features = {1.0 / kLength, proximity(lane_), 0.0, completed ? 1.0 : 0.0};
    t.next_state = observe();
    t.terminal = completed;
    return t;
  }

  std::vector<double> feature_bounds() const override {
    return {1.0 / kLength, 1.0, 1.0, 1.0};
  }

 private:
  // max(0, (3-d)/3) for the nearest bot ahead in `lane`, from cell_.
  double proximity(int lane) const {
    int best = kLength;
    for (int b = 0; b < kBots; ++b) {
      if (bot_lane_[b] == lane && bot_cell_[b] > cell_) {
        best = std::min(best, bot_cell_[b] - cell_);
      }
    }
    return std::max(0.0, (3.0 - best) / 3.0);
  }

  std::vector<double> observe() const {
    return {static_cast<double>(cell_) / kLength, lane_ == 0 ? 1.0 : 0.0,
            lane_ == 1 ? 1.0 : 0.0, proximity(0), proximity(1)};
  }

  static constexpr double kLaneHopProb = 0.2;

  int cell_ = 0;
  int lane_ = 0;
  int bot_cell_[kBots] = {0, 0};
  int bot_lane_[kBots] = {0, 0};
};

// ---------------------------------------------------------------------------

const std::vector<EnvInfo>& builtin_envs() {
  static const std::vector<EnvInfo> infos = {
      {"goal-reacher-1d",
       3,
       {"neg_distance", "neg_action_magnitude", "goal_reached"},
       {"negative |position - goal| after the move",
        "negative magnitude of the applied displacement",
        "1 when within 0.05 of the goal (ends the episode)"},
       "(position, goal - position)",
       "5 displacements {-0.2,-0.05,0,0.05,0.2}; continuous mode: 1-dim move "
       "clamped to [-0.2,0.2]",
       40,
       {1.0, 1.0, 1.0},
       {1.0, 3.0, 1.0}},
      {"goal-reacher-2d",
       3,
       {"neg_distance", "neg_action_magnitude", "goal_reached"},
       {"negative Euclidean distance to the goal after the move",
        "negative Euclidean norm of the applied displacement",
        "1 when within 0.1 of the goal (ends the episode)"},
       "(x, y, goal_x - x, goal_y - y)",
       "5 moves {stay,+x,-x,+y,-y} of step 0.1; continuous mode: 2-dim move "
       "clamped to [-0.15,0.15] per axis",
       60,
       {1.0, 1.0, 1.0},
       {1.0, 3.0, 1.0}},
      {"lane-grid",
       4,
       {"progress_delta", "inner_lane", "outer_lane", "off_track"},
       {"lap fraction gained this step (1/24 per advanced cell)",
        "1 when the agent occupies the inner lane after the move",
        "1 when the agent occupies the outer lane after the move",
        "1 when the agent drove off the track edge (ends the episode)"},
       "(lap fraction, inner-lane indicator, outer-lane indicator)",
       "3 actions {keep lane, move inner, move outer}; each advances one cell",
       30,
       {0.5, 1.0, -1.0, -1.0},
       {0.5, -1.0, 1.0, -1.0}},
      {"avoid-grid",
       4,
       {"progress_delta", "bot_proximity", "collision", "lap_complete"},
       {"lap fraction gained this step (1/24 per advanced cell)",
        "max(0,(3-d)/3) for the nearest bot ahead in the agent's lane",
        "1 when the agent moves onto a bot (ends the episode)",
        "1 when the lap is completed (ends the episode)"},
       "(lap fraction, inner indicator, outer indicator, proximity per lane)",
       "3 actions {keep lane, move inner, move outer}; bots hop lanes with "
       "prob 0.2 per step",
       30,
       {1.0, -0.5, -2.0, 1.0},
       {0.0, -1.0, -2.0, 0.0}},
  };
  return infos;
}

const EnvInfo& env_info(const std::string& env_id) {
  for (const auto& info : builtin_envs()) {
    if (info.id == env_id) return info;
  }
  throw std::invalid_argument("unknown env: " + env_id);
}

std::unique_ptr<Env> make_env(const TaskSpec& spec, const EnvOptions& options) {
  if (spec.env_id == "goal-reacher-1d") {
    return std::make_unique<GoalReacher1d>(spec, options.continuous_actions);
  }
  if (spec.env_id == "goal-reacher-2d") {
    return std::make_unique<GoalReacher2d>(spec, options.continuous_actions);
  }
  detail::require(!options.continuous_actions,
                  spec.env_id + " has no continuous-action mode");
  if (spec.env_id == "lane-grid") return std::make_unique<LaneGrid>(spec);
  if (spec.env_id == "avoid-grid") return std::make_unique<AvoidGrid>(spec);
  throw std::invalid_argument("unknown env: " + spec.env_id);
}

std::string describe_env(const std::string& env_id) {
  const EnvInfo& info = env_info(env_id);
  std::ostringstream out;
  out << "env: " << info.id << "\n";
  out << "observation: " << info.observation_doc << "\n";
  out << "actions: " << info.action_doc << "\n";
  out << "default horizon: " << info.default_horizon << "\n";
  out << "reward: dot(features, weights) / normalizer, with features\n";
  for (int i = 0; i < info.feature_dim; ++i) {
    out << "  [" << i << "] " << info.feature_names[static_cast<std::size_t>(i)]
        << ": " << info.feature_docs[static_cast<std::size_t>(i)] << "\n";
  }
  out << "default student weights:";
  for (double w : info.default_student_weights) out << " " << w;
  out << "\ndefault teacher weights:";
  for (double w : info.default_teacher_weights) out << " " << w;
  out << "\n";
  return out.str();
}

}  // namespace repaint
