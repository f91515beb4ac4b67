#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "repaint/transfer.hpp"
#include "test_support.hpp"

using namespace repaint;
using namespace repaint::testing;

namespace {

TaskSpec reacher_spec() {
  TaskSpec s;
  s.env_id = "goal-reacher-1d";
  s.feature_weights = {1.0, 1.0, 1.0};
  s.episode_horizon = 20;
  return s;
}

PolicyNetwork random_policy(int obs, int actions, std::uint64_t seed,
                            Rng& rng) {
  PolicyNetwork net({obs, {8}, actions}, PolicyHead::kCategorical, seed);
  randomize_params(net, rng);
  return net;
}

// Brute-force re-evaluation of the deterministic selection predicates.
std::vector<std::size_t> brute_force(const std::vector<double>& a,
                                     const SelectionRule& rule) {
  std::vector<std::size_t> kept;
  switch (rule.kind) {
    case SelectionRule::Kind::kThreshold:
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] < rule.zeta)) kept.push_back(i);  // remove A' < zeta
      }
      break;
    case SelectionRule::Kind::kAbsThreshold:
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i]) > rule.zeta) kept.push_back(i);
      }
      break;
    case SelectionRule::Kind::kTopFraction: {
      std::vector<std::pair<double, std::size_t>> ranked;
      for (std::size_t i = 0; i < a.size(); ++i) ranked.push_back({a[i], i});
      std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;  // ties: earlier index first
      });
      const auto count = static_cast<std::size_t>(
          std::ceil(rule.fraction * static_cast<double>(a.size())));
      for (std::size_t i = 0; i < std::min(count, a.size()); ++i) {
        kept.push_back(ranked[i].second);
      }
      std::sort(kept.begin(), kept.end());
      break;
    }
    case SelectionRule::Kind::kPrioritized:
      break;  // stochastic; checked by reproducibility instead
  }
  return kept;
}

}  // namespace

TEST_CASE("beta schedule: geometric decay reproduces the published values") {
  BetaSchedule beta{0.2, 0.95};
  CHECK(beta.at(0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(beta.at(1) == doctest::Approx(0.19).epsilon(1e-12));
  CHECK(beta.at(2) == doctest::Approx(0.1805).epsilon(1e-12));
  double prev = beta.at(0);
  for (int k = 1; k < 200; ++k) {
    CHECK(beta.at(k) <= prev);
    prev = beta.at(k);
  }
  CHECK(beta.at(500) < 1e-10);
  const BetaSchedule negative{-0.1, 0.95};
  CHECK_THROWS_AS(negative.at(0), std::invalid_argument);
}

TEST_CASE("aux cross-entropy equals teacher entropy when policies match") {
  Rng rng(3);
  TrajectoryBuffer buffer = random_buffer(rng, 12, 2, 3);
  PolicyNetwork net = random_policy(2, 3, 31, rng);
  TeacherPolicy teacher(net, "t");
  const double ce = aux_cross_entropy(teacher, net, buffer);
  double mean_teacher_entropy = 0.0;
  for (const auto& t : buffer.transitions) {
    mean_teacher_entropy += net.forward(t.state).entropy();
  }
  mean_teacher_entropy /= static_cast<double>(buffer.size());
  CHECK(ce == doctest::Approx(mean_teacher_entropy).epsilon(1e-12));
}

TEST_CASE("aux cross-entropy: uniform teacher vs (0.9, 0.1) student") {
  // Distribution-level identity the op realizes per state.
  Categorical teacher{{0.5, 0.5}};
  Categorical student{{0.9, 0.1}};
  CHECK(teacher.cross_entropy(student) ==
        doctest::Approx(-0.5 * (std::log(0.9) + std::log(0.1))).epsilon(1e-12));
}

TEST_CASE("aux cross-entropy >= teacher entropy (Gibbs) on random pairs") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    TrajectoryBuffer buffer = random_buffer(rng, 4, 2, 4);
    PolicyNetwork a = random_policy(2, 4, 100 + static_cast<std::uint64_t>(trial), rng);
    PolicyNetwork b = random_policy(2, 4, 900 + static_cast<std::uint64_t>(trial), rng);
    TeacherPolicy teacher(a, "t");
    double teacher_entropy = 0.0;
    for (const auto& t : buffer.transitions) {
      teacher_entropy += a.forward(t.state).entropy();
    }
    teacher_entropy /= static_cast<double>(buffer.size());
    CHECK(aux_cross_entropy(teacher, b, buffer) >= teacher_entropy - 1e-12);
  }
}

TEST_CASE("representation objective: beta 0 reduces to the clipped surrogate") {
  Rng rng(5);
  PolicyNetwork net = random_policy(2, 3, 17, rng);
  TrajectoryBuffer buffer = random_buffer(rng, 10, 2, 3);
  buffer.advantages.resize(10);
  for (auto& a : buffer.advantages) a = rng.normal();
  std::vector<TeacherPolicy> teachers{TeacherPolicy(random_policy(2, 3, 18, rng), "t")};
  TransferConfig cfg;
  cfg.betas = {BetaSchedule{0.0, 0.95}};
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> behavior(10);
  for (std::size_t i = 0; i < 10; ++i) {
    behavior[i] = buffer.transitions[i].log_prob_behavior;
  }
  const double plain = clipped_surrogate(
      net, {&buffer, all, buffer.advantages, behavior}, 0.2);
  CHECK(representation_objective(net, buffer, teachers, cfg, 0.2, 3) ==
        doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("representation objective: two identical teachers sum linearly") {
  Rng rng(6);
  PolicyNetwork net = random_policy(2, 3, 27, rng);
  PolicyNetwork teacher_net = random_policy(2, 3, 28, rng);
  TrajectoryBuffer buffer = random_buffer(rng, 8, 2, 3);
  buffer.advantages.resize(8);
  for (auto& a : buffer.advantages) a = rng.normal();

  std::vector<TeacherPolicy> twice{TeacherPolicy(teacher_net, "a"),
                                   TeacherPolicy(teacher_net, "b")};
  TransferConfig cfg_twice;
  cfg_twice.betas = {BetaSchedule{0.3, 1.0}, BetaSchedule{0.3, 1.0}};

  std::vector<TeacherPolicy> once{TeacherPolicy(teacher_net, "a")};
  TransferConfig cfg_once;
  cfg_once.betas = {BetaSchedule{0.6, 1.0}};

  CHECK(representation_objective(net, buffer, twice, cfg_twice, 0.2, 1) ==
        doctest::Approx(
            representation_objective(net, buffer, once, cfg_once, 0.2, 1))
            .epsilon(1e-12));
}

TEST_CASE("beta0 = 0.2 with decay enters the objective at beta1 = 0.19") {
  Rng rng(61);
  PolicyNetwork net = random_policy(2, 3, 62, rng);
  PolicyNetwork teacher_net = random_policy(2, 3, 63, rng);
  TrajectoryBuffer buffer = random_buffer(rng, 6, 2, 3);
  buffer.advantages.assign(6, 0.0);
  std::vector<TeacherPolicy> teachers{TeacherPolicy(teacher_net, "t")};
  TransferConfig cfg;
  cfg.betas = {BetaSchedule{0.2, 0.95}};
  // With zero advantages the surrogate is zero, leaving -beta_k * CE.
  const double ce = aux_cross_entropy(teachers[0], net, buffer);
  CHECK(representation_objective(net, buffer, teachers, cfg, 0.2, 1) ==
        doctest::Approx(-0.19 * ce).epsilon(1e-12));
  CHECK(representation_objective(net, buffer, teachers, cfg, 0.2, 2) ==
        doctest::Approx(-0.1805 * ce).epsilon(1e-12));
}

TEST_CASE("selection: threshold keeps exactly the advantages >= zeta") {
  const std::vector<double> adv{0.5, -0.1, 0.9};
  const auto kept = select_indices(adv, SelectionRule::threshold(0.2), 0);
  CHECK(kept == std::vector<std::size_t>{0, 2});

  const auto none = select_indices({-3.0, -2.0}, SelectionRule::threshold(0.2), 0);
  CHECK(none.empty());

  // Boundary: A' == zeta is kept (removal condition is strict <).
  const auto edge = select_indices({0.2}, SelectionRule::threshold(0.2), 0);
  CHECK(edge == std::vector<std::size_t>{0});
}

TEST_CASE("selection: all four rules match brute force on random vectors") {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(60));
    std::vector<double> adv(static_cast<std::size_t>(n));
    for (auto& a : adv) a = 2.0 * rng.normal();
    const double zeta = rng.uniform(-1.0, 1.0);
    const double frac = rng.uniform(0.05, 1.0);

    for (const auto rule :
         {SelectionRule::threshold(zeta), SelectionRule::abs_threshold(std::abs(zeta)),
          SelectionRule::top_fraction(frac)}) {
      CHECK(select_indices(adv, rule, 7) == brute_force(adv, rule));
    }
    // Prioritized: deterministic under a fixed seed, and every index valid.
    const auto rule = SelectionRule::prioritized(rng.uniform(0.0, 2.0),
                                                 static_cast<int>(rng.below(40)) + 1);
    const auto a = select_indices(adv, rule, 123);
    const auto b = select_indices(adv, rule, 123);
    CHECK(a == b);
    CHECK(a.size() == static_cast<std::size_t>(rule.sample_count));
    for (const auto i : a) CHECK(i < adv.size());
  }
}

TEST_CASE("selection: top fraction equals sort-and-take on 100 advantages") {
  Rng rng(29);
  std::vector<double> adv(100);
  for (auto& a : adv) a = rng.normal();
  const auto kept = select_indices(adv, SelectionRule::top_fraction(0.2), 0);
  CHECK(kept.size() == 20);
  CHECK(kept == brute_force(adv, SelectionRule::top_fraction(0.2)));
}

TEST_CASE("selection: threshold monotonicity in zeta") {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> adv(40);
    for (auto& a : adv) a = rng.normal();
    const double z1 = rng.uniform(-1.0, 0.5);
    const double z2 = z1 + rng.uniform(0.0, 1.0);
    const auto k1 = select_indices(adv, SelectionRule::threshold(z1), 0);
    const auto k2 = select_indices(adv, SelectionRule::threshold(z2), 0);
    const std::set<std::size_t> s1(k1.begin(), k1.end());
    for (const auto i : k2) CHECK(s1.count(i) == 1);
  }
}

TEST_CASE("selection: prioritized favors high positive advantages") {
  std::vector<double> adv(50, 0.0);
  adv[7] = 5.0;  // dominant priority
  const auto kept =
      select_indices(adv, SelectionRule::prioritized(1.0, 2000), 99);
  const auto hits = static_cast<double>(std::count(kept.begin(), kept.end(), 7));
  CHECK(hits / 2000.0 > 0.95);
}

TEST_CASE("select_experiences subsets the buffer rows and advantages") {
  Rng rng(9);
  TrajectoryBuffer buffer = random_buffer(rng, 30, 2, 3, SampleSource::kTeacher);
  buffer.advantages.resize(30);
  for (auto& a : buffer.advantages) a = rng.normal();
  buffer.returns.assign(30, 0.0);
  buffer.values.assign(30, 0.0);
  const auto filtered =
      select_experiences(buffer, SelectionRule::threshold(0.0), 0);
  CHECK(filtered.source == SampleSource::kTeacher);
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    CHECK(filtered.advantages[i] >= 0.0);
  }
  std::size_t expected = 0;
  for (double a : buffer.advantages) {
    if (a >= 0.0) expected += 1;
  }
  CHECK(filtered.size() == expected);
}

TEST_CASE("instance objective: matching policies give the mean advantage") {
  Rng rng(4);
  PolicyNetwork net = random_policy(2, 3, 41, rng);
  TrajectoryBuffer buffer = random_buffer(rng, 9, 2, 3, SampleSource::kTeacher);
  buffer.advantages.resize(9);
  double mean = 0.0;
  for (auto& a : buffer.advantages) {
    a = rng.normal();
    mean += a;
  }
  mean /= 9.0;
  for (auto& t : buffer.transitions) {
    t.log_prob_behavior = net.forward(t.state).log_prob(t.action);
  }
  CHECK(instance_objective(net, buffer, 0.2) ==
        doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("instance objective: single-sample clip arithmetic") {
  Rng rng(11);
  PolicyNetwork net = random_policy(2, 3, 43, rng);
  TrajectoryBuffer buffer;
  buffer.source = SampleSource::kTeacher;
  Transition t;
  t.state = {0.2, -0.5};
  t.next_state = t.state;
  t.action = Action::discrete(1);
  t.done = true;
  // rho = 2.0
  t.log_prob_behavior = net.forward(t.state).log_prob(t.action) - std::log(2.0);
  buffer.transitions.push_back(t);
  buffer.advantages = {0.5};
  CHECK(instance_objective(net, buffer, 0.2) ==
        doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("instance objective: empty filtered buffer contributes zero") {
  Rng rng(1);
  PolicyNetwork net = random_policy(2, 3, 44, rng);
  TrajectoryBuffer empty;
  empty.source = SampleSource::kTeacher;
  CHECK(instance_objective(net, empty, 0.2) == 0.0);
}

TEST_CASE("instance objective matches a hand-composed min/clip evaluation") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    PolicyNetwork student = random_policy(2, 4, 700 + static_cast<std::uint64_t>(trial), rng);
    PolicyNetwork teacher = random_policy(2, 4, 800 + static_cast<std::uint64_t>(trial), rng);
    TrajectoryBuffer buffer = random_buffer(rng, 12, 2, 4, SampleSource::kTeacher);
    buffer.advantages.resize(12);
    for (auto& a : buffer.advantages) a = rng.normal();
    for (auto& t : buffer.transitions) {
      t.log_prob_behavior = teacher.forward(t.state).log_prob(t.action);
    }
    double expected = 0.0;
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      const Transition& t = buffer.transitions[i];
      const double lp_teacher =
          TeacherPolicy::floor_log_prob(t.log_prob_behavior);
      const double rho =
          std::exp(student.forward(t.state).log_prob(t.action) - lp_teacher);
      const double clipped = std::min(std::max(rho, 0.8), 1.2);
      expected += std::min(rho * buffer.advantages[i],
                           clipped * buffer.advantages[i]) /
                  12.0;
    }
    CHECK(std::abs(instance_objective(student, buffer, 0.2) - expected) < 1e-10);
  }
}

TEST_CASE("teacher probability floor keeps ratios finite") {
  CHECK(TeacherPolicy::floor_log_prob(-1e9) ==
        doctest::Approx(std::log(1e-6)).epsilon(1e-12));
  CHECK(TeacherPolicy::floor_log_prob(-0.5) == doctest::Approx(-0.5));
}

TEST_CASE("representation and instance gradients match finite differences") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    PolicyNetwork student = random_policy(3, 3, 500 + static_cast<std::uint64_t>(trial), rng);
    PolicyNetwork teacher_net = random_policy(3, 3, 600 + static_cast<std::uint64_t>(trial), rng);
    std::vector<TeacherPolicy> teachers{TeacherPolicy(teacher_net, "t")};
    TransferConfig cfg;
    cfg.betas = {BetaSchedule{0.4, 0.95}};

    TrajectoryBuffer student_buffer = random_buffer(rng, 6, 3, 3);
    student_buffer.advantages.resize(6);
    for (auto& a : student_buffer.advantages) a = 0.5 * rng.normal();
    for (auto& t : student_buffer.transitions) {
      t.log_prob_behavior =
          student.forward(t.state).log_prob(t.action) - rng.uniform(-0.3, 0.3);
    }
    TrajectoryBuffer teacher_buffer =
        random_buffer(rng, 5, 3, 3, SampleSource::kTeacher);
    teacher_buffer.advantages.resize(5);
    for (auto& a : teacher_buffer.advantages) a = 0.5 * rng.normal();
    for (auto& t : teacher_buffer.transitions) {
      t.log_prob_behavior = teacher_net.forward(t.state).log_prob(t.action);
    }

    // Eq. 2 gradient (clip + aux CE) via the diagnostic path.
    const auto diag = gradient_diagnostic(student, student_buffer,
                                          teacher_buffer, teachers, cfg, 0.2,
                                          /*k=*/2, /*a_k=*/1.0);
    ParamVector grad_rep(student.params().size());
    {
      std::vector<std::size_t> all(student_buffer.size());
      std::iota(all.begin(), all.end(), 0);
      std::vector<double> behavior(student_buffer.size());
      for (std::size_t i = 0; i < student_buffer.size(); ++i) {
        behavior[i] = student_buffer.transitions[i].log_prob_behavior;
      }
      clipped_surrogate(student,
                        {&student_buffer, all, student_buffer.advantages, behavior},
                        0.2, &grad_rep, 1.0);
      mean_cross_entropy(teacher_net, student, student_buffer, all, &grad_rep,
                         -cfg.beta_at(0, 2));
    }
    const auto numeric_rep = finite_difference_gradient(
        [&](const ParamVector& p) {
          PolicyNetwork probe = student;
          probe.set_params(p);
          return representation_objective(probe, student_buffer, teachers, cfg,
                                          0.2, 2);
        },
        student.params());
    CHECK(max_relative_error(grad_rep.values(), numeric_rep) < 1e-4);
    CHECK(diag.rep_norm2 == doctest::Approx(grad_rep.squared_norm()).epsilon(1e-10));

    ParamVector grad_ins(student.params().size());
    instance_objective(student, teacher_buffer, 0.2, &grad_ins, 1.0);
    const auto numeric_ins = finite_difference_gradient(
        [&](const ParamVector& p) {
          PolicyNetwork probe = student;
          probe.set_params(p);
          return instance_objective(probe, teacher_buffer, 0.2);
        },
        student.params());
    CHECK(max_relative_error(grad_ins.values(), numeric_ins) < 1e-4);
  }
}

TEST_CASE("gradient diagnostic identities") {
  Rng rng(2);
  ParamVector g_rep(8);
  ParamVector g_ins(8);
  for (std::size_t i = 0; i < 8; ++i) g_rep[i] = rng.normal();

  auto d = diagnostic_from_gradients(g_rep, g_ins, 0.7);
  CHECK(d.f == doctest::Approx(g_rep.squared_norm()).epsilon(1e-12));

  for (std::size_t i = 0; i < 8; ++i) g_ins[i] = -g_rep[i];
  d = diagnostic_from_gradients(g_rep, g_ins, 1.0);
  CHECK(d.f == doctest::Approx(0.0).epsilon(1e-12));

  for (int trial = 0; trial < 50; ++trial) {
    ParamVector a(8), b(8);
    for (std::size_t i = 0; i < 8; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    ParamVector sum = a;
    sum.add_scaled(b, 1.0);
    const auto diag = diagnostic_from_gradients(a, b, 1.0);
    CHECK(std::abs(diag.f - sum.squared_norm()) < 1e-10);
  }
}

TEST_CASE("alternating slot schedule") {
  TransferConfig cfg;
  cfg.alternate_rep = 2;
  cfg.alternate_ins = 1;
  std::string pattern;
  for (int k = 1; k <= 6; ++k) {
    pattern += alternating_slot_is_rep(cfg, k) ? 'R' : 'I';
  }
  CHECK(pattern == "RRIRRI");

  cfg.alternate_rep = 1;
  cfg.alternate_ins = 0;
  for (int k = 1; k <= 8; ++k) CHECK(alternating_slot_is_rep(cfg, k));

  cfg.alternate_rep = 0;
  cfg.alternate_ins = 1;
  for (int k = 1; k <= 8; ++k) CHECK_FALSE(alternating_slot_is_rep(cfg, k));

  // Realized slot counts match the ratio over any window of full cycles.
  cfg.alternate_rep = 3;
  cfg.alternate_ins = 2;
  int rep = 0, ins = 0;
  for (int k = 1; k <= 35; ++k) {
    (alternating_slot_is_rep(cfg, k) ? rep : ins) += 1;
  }
  CHECK(rep == 21);
  CHECK(ins == 14);
}

TEST_CASE("baseline equivalence: beta 0 and alpha2 0 match PPO bitwise") {
  auto env_a = make_env(reacher_spec());
  auto env_b = make_env(reacher_spec());
  PpoConfig cfg;
  cfg.epochs = 4;

  auto make_learner = [&](Env& env) {
    PolicyNetwork actor({env.observation_dim(), {8, 8}, env.action_count()},
                        PolicyHead::kCategorical, derive_seed(9, Stream::kInit, 1));
    ValueNetwork critic({env.observation_dim(), {8, 8}, 1},
                        derive_seed(9, Stream::kInit, 2));
    return LearnerState(std::move(actor), std::move(critic), cfg);
  };
  LearnerState baseline = make_learner(*env_a);
  LearnerState repaint = make_learner(*env_b);

  Rng rng(55);
  std::vector<TeacherPolicy> teachers{
      TeacherPolicy(random_policy(env_a->observation_dim(),
                                  env_a->action_count(), 77, rng),
                    "t")};
  TransferConfig tcfg;
  tcfg.betas = {BetaSchedule{0.0, 0.95}};
  tcfg.alpha1 = cfg.actor_lr;
  tcfg.alpha2 = 0.0;
  tcfg.phase_iterations = 100;

  TrainContext ctx{cfg, GaeConfig{0.99, 0.95}, RolloutBudget::steps(256),
                   RolloutBudget::episodes(2)};
  for (int k = 1; k <= 10; ++k) {
    ppo_iteration(baseline, *env_a, ctx, k, 1234);
    repaint_iteration(repaint, *env_b, teachers, ctx, tcfg, k, 1234);
    for (std::size_t i = 0; i < baseline.actor.params().size(); ++i) {
      REQUIRE(baseline.actor.params()[i] == repaint.actor.params()[i]);
    }
    for (std::size_t i = 0; i < baseline.critic.params().size(); ++i) {
      REQUIRE(baseline.critic.params()[i] == repaint.critic.params()[i]);
    }
  }
}

TEST_CASE("repaint iteration: empty filtered buffer still applies the rep update") {
  auto env = make_env(reacher_spec());
  PpoConfig cfg;
  cfg.epochs = 2;
  PolicyNetwork actor({env->observation_dim(), {8}, env->action_count()},
                      PolicyHead::kCategorical, 5);
  ValueNetwork critic({env->observation_dim(), {8}, 1}, 6);
  LearnerState learner(std::move(actor), std::move(critic), cfg);
  Rng rng(3);
  std::vector<TeacherPolicy> teachers{
      TeacherPolicy(random_policy(env->observation_dim(), env->action_count(),
                                  91, rng),
                    "t")};
  TransferConfig tcfg;
  tcfg.betas = {BetaSchedule{0.2, 0.95}};
  tcfg.selection = SelectionRule::threshold(1e9);  // keeps nothing
  const ParamVector before = learner.actor.params();
  TrainContext ctx{cfg, GaeConfig{0.99, 0.95}, RolloutBudget::steps(128),
                   RolloutBudget::episodes(2)};
  const auto m = repaint_iteration(learner, *env, teachers, ctx, tcfg, 1, 2);
  CHECK(m.kept_teacher_steps == 0);
  CHECK(m.teacher_steps > 0);
  bool moved = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (learner.actor.params()[i] != before[i]) moved = true;
  }
  CHECK(moved);
}

TEST_CASE("alternating instance slots leave the critic untouched") {
  auto env = make_env(reacher_spec());
  PpoConfig cfg;
  cfg.epochs = 2;
  PolicyNetwork actor({env->observation_dim(), {8}, env->action_count()},
                      PolicyHead::kCategorical, 7);
  ValueNetwork critic({env->observation_dim(), {8}, 1}, 8);
  LearnerState learner(std::move(actor), std::move(critic), cfg);
  Rng rng(13);
  std::vector<TeacherPolicy> teachers{
      TeacherPolicy(random_policy(env->observation_dim(), env->action_count(),
                                  93, rng),
                    "t")};
  TransferConfig tcfg;
  tcfg.betas = {BetaSchedule{0.2, 0.95}};
  tcfg.selection = SelectionRule::threshold(-1e9);  // keep everything
  tcfg.schedule = TransferSchedule::kAlternating;
  TrainContext ctx{cfg, GaeConfig{0.99, 0.95}, RolloutBudget::steps(128),
                   RolloutBudget::episodes(2)};

  // k=1 is a representation slot, k=2 an instance slot.
  alternating_repaint_iteration(learner, *env, teachers, ctx, tcfg, 1, 3);
  const ParamVector critic_after_rep = learner.critic.params();
  const ParamVector actor_after_rep = learner.actor.params();
  const auto m = alternating_repaint_iteration(learner, *env, teachers, ctx,
                                               tcfg, 2, 3);
  CHECK(m.student_steps == 0);
  CHECK(m.teacher_steps > 0);
  for (std::size_t i = 0; i < critic_after_rep.size(); ++i) {
    CHECK(learner.critic.params()[i] == critic_after_rep[i]);
  }
  bool actor_moved = false;
  for (std::size_t i = 0; i < actor_after_rep.size(); ++i) {
    if (learner.actor.params()[i] != actor_after_rep[i]) actor_moved = true;
  }
  CHECK(actor_moved);
}

TEST_CASE("distillation pull: a large-beta update reduces cross-entropy") {
  Rng rng(40);
  int successes = 0;
  for (int trial = 0; trial < 10; ++trial) {
    PolicyNetwork student = random_policy(2, 3, 1000 + static_cast<std::uint64_t>(trial), rng);
    PolicyNetwork teacher_net = random_policy(2, 3, 2000 + static_cast<std::uint64_t>(trial), rng);
    TeacherPolicy teacher(teacher_net, "t");
    TrajectoryBuffer buffer = random_buffer(rng, 64, 2, 3);
    buffer.advantages.assign(64, 0.0);  // isolates the distillation term
    for (auto& t : buffer.transitions) {
      t.log_prob_behavior = student.forward(t.state).log_prob(t.action);
    }
    const double before = aux_cross_entropy(teacher, student, buffer);

    OptimizerState opt(student.params().size(), 3e-4);
    std::vector<std::size_t> all(64);
    std::iota(all.begin(), all.end(), 0);
    std::vector<double> behavior(64);
    for (std::size_t i = 0; i < 64; ++i) {
      behavior[i] = buffer.transitions[i].log_prob_behavior;
    }
    Rng update_rng(derive_seed(3, Stream::kActorUpdate, 1));
    for (int epoch = 0; epoch < 10; ++epoch) {
      std::vector<std::size_t> order = all;
      update_rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += 16) {
        std::vector<std::size_t> mb(
            order.begin() + static_cast<std::ptrdiff_t>(start),
            order.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(start + 16, order.size())));
        ParamVector grad(student.params().size());
        clipped_surrogate(student, {&buffer, mb, buffer.advantages, behavior},
                          0.2, &grad, 1.0);
        mean_cross_entropy(teacher_net, student, buffer, mb, &grad, -10.0);
        opt.step(student.params(), grad, StepDirection::kAscend);
      }
    }
    const double after = aux_cross_entropy(teacher, student, buffer);
    if (after < before) successes += 1;
  }
  CHECK(successes == 10);
}

TEST_CASE("q network: kept-sample arithmetic") {
  QNetwork q({4, {}, 2}, 3);
  q.params() = ParamVector(q.params().size());  // zero table

  QTransferConfig cfg;
  cfg.zeta_q = 0.0;
  cfg.gamma = 0.9;
  cfg.learning_rate = 1.0;

  // Single terminal sample with y - Q = 0.3.
  TrajectoryBuffer buffer;
  buffer.source = SampleSource::kTeacher;
  Transition t;
  t.state = {1, 0, 0, 0};
  t.next_state = {0, 1, 0, 0};
  t.action = Action::discrete(0);
  t.reward = 0.3;
  t.done = true;
  buffer.transitions.push_back(t);
  const auto result = q_transfer_update(cfg, q, buffer, {});
  CHECK(result.kept == 1);
  CHECK(result.loss == doctest::Approx(0.5 * 0.3 * 0.3).epsilon(1e-12));
}

TEST_CASE("q update: exact targets filter everything and change nothing") {
  Rng rng(6);
  QNetwork q({4, {6}, 2}, 9);
  QTransferConfig cfg;
  cfg.gamma = 0.9;
  TrajectoryBuffer buffer;
  buffer.source = SampleSource::kTeacher;
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.state = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    t.next_state = t.state;
    t.action = Action::discrete(static_cast<int>(rng.below(2)));
    t.done = true;
    t.reward = q.q_value(t.state, t.action.index);  // y == Q exactly
    buffer.transitions.push_back(t);
  }
  const ParamVector before = q.params();
  const auto result = q_transfer_update(cfg, q, buffer, {});
  CHECK(result.kept == 0);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(q.params()[i] == before[i]);
  }
}

TEST_CASE("q transfer: 4-state chain converges to the value-iteration fixed point") {
  // States 0..3, one-hot encoded; action 1 advances with reward 1 (entering
  // state 3 is terminal), action 0 stays with reward 0.
  const double gamma = 0.9;
  auto one_hot = [](int s) {
    std::vector<double> v(4, 0.0);
    v[static_cast<std::size_t>(s)] = 1.0;
    return v;
  };
  TrajectoryBuffer buffer;
  buffer.source = SampleSource::kTeacher;
  for (int s = 0; s < 3; ++s) {
    Transition stay;
    stay.state = one_hot(s);
    stay.next_state = one_hot(s);
    stay.action = Action::discrete(0);
    stay.reward = 0.0;
    stay.done = false;
    buffer.transitions.push_back(stay);

    Transition advance;
    advance.state = one_hot(s);
    advance.next_state = one_hot(s + 1);
    advance.action = Action::discrete(1);
    advance.reward = 1.0;
    advance.done = (s + 1 == 3);
    buffer.transitions.push_back(advance);
  }

  // Independent oracle: value iteration on the same model.
  double q_star[3][2] = {};
  for (int sweep = 0; sweep < 500; ++sweep) {
    double next[3][2];
    for (int s = 0; s < 3; ++s) {
      next[s][0] = 0.0 + gamma * std::max(q_star[s][0], q_star[s][1]);
      next[s][1] = s + 1 == 3
                       ? 1.0
                       : 1.0 + gamma * std::max(q_star[s + 1][0], q_star[s + 1][1]);
    }
    for (int s = 0; s < 3; ++s) {
      q_star[s][0] = next[s][0];
      q_star[s][1] = next[s][1];
    }
  }

  QNetwork q({4, {}, 2}, 1);
  q.params() = ParamVector(q.params().size());  // start at zero
  QTransferConfig cfg;
  cfg.zeta_q = 0.0;
  cfg.gamma = gamma;
  cfg.learning_rate = 0.1;
  for (int update = 0; update < 5000; ++update) {
    q_transfer_update(cfg, q, buffer, {});
  }
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) {
      CHECK(std::abs(q.q_value(one_hot(s), a) - q_star[s][a]) < 1e-4);
    }
  }
}

TEST_CASE("q transfer: epsilon-greedy samples mix in up to the fraction") {
  TaskSpec spec;
  spec.env_id = "lane-grid";
  spec.feature_weights = {0.5, 1.0, -1.0, -1.0};
  spec.episode_horizon = 30;
  auto env = make_env(spec);
  QNetwork q({env->observation_dim(), {8}, env->action_count()}, 12);
  const auto self_buffer =
      collect_epsilon_greedy(q, *env, 0.5, RolloutBudget::steps(64), 3);
  CHECK(self_buffer.size() == 64);

  Rng rng(2);
  TrajectoryBuffer teacher_buffer = random_buffer(rng, 20, env->observation_dim(),
                                                  env->action_count(),
                                                  SampleSource::kTeacher);
  QTransferConfig cfg;
  cfg.zeta_q = 0.0;
  cfg.epsilon_greedy_mix = 0.5;
  const auto result = q_transfer_update(cfg, q, teacher_buffer, self_buffer);
  CHECK(result.considered == 30);  // 20 teacher + 10 self
}
