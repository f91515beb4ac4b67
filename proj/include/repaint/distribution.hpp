#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <variant>
#include <vector>

#include "repaint/param_vector.hpp"
#include "repaint/rng.hpp"

namespace repaint {

// A single environment action. Discrete envs use `index`; continuous envs
// (Gaussian policy head) use `values`.
struct Action {
  int index = 0;
  std::vector<double> values;
  bool is_discrete = true;

  static Action discrete(int i) { return {i, {}, true}; }
  static Action continuous(std::vector<double> v) { return {0, std::move(v), false}; }
};

struct Categorical {
  std::vector<double> probs;

  static Categorical from_logits(const std::vector<double>& logits) {
    Categorical d;
    d.probs.resize(logits.size());
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      d.probs[i] = std::exp(logits[i] - max_logit);
      denom += d.probs[i];
    }
    for (auto& p : d.probs) p /= denom;
    return d;
  }

  double log_prob(int action) const {
    detail::require(action >= 0 && action < static_cast<int>(probs.size()),
                    "categorical action out of support");
    return std::log(probs[static_cast<std::size_t>(action)]);
  }

  double entropy() const {
    double h = 0.0;
    for (double p : probs) {
      if (p > 0.0) h -= p * std::log(p);
    }
    return h;
  }

  // H(*this || other) = -sum_a p(a) log q(a).
  double cross_entropy(const Categorical& other) const {
    detail::require(probs.size() == other.probs.size(),
                    "categorical support mismatch");
    double h = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) h -= probs[i] * std::log(other.probs[i]);
    }
    return h;
  }

  double kl(const Categorical& other) const {
    return cross_entropy(other) - entropy();
  }

  int sample(Rng& rng) const { return rng.categorical(probs); }
};

struct DiagonalGaussian {
  std::vector<double> mean;
  std::vector<double> log_std;

  std::size_t dim() const { return mean.size(); }

  double std_at(std::size_t i) const { return std::exp(log_std[i]); }

  double log_prob(const std::vector<double>& action) const {
    detail::require(action.size() == mean.size(), "gaussian action dim mismatch");
    double lp = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double z = (action[i] - mean[i]) / std_at(i);
      lp += -0.5 * z * z - log_std[i] - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return lp;
  }

  double entropy() const {
    double h = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      h += log_std[i] + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
    }
    return h;
  }

  // Closed-form cross-entropy H(p || q) between diagonal Gaussians.
  double cross_entropy(const DiagonalGaussian& q) const {
    detail::require(mean.size() == q.mean.size(), "gaussian dim mismatch");
    double h = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double vp = std_at(i) * std_at(i);
      const double vq = q.std_at(i) * q.std_at(i);
      const double dm = mean[i] - q.mean[i];
      h += 0.5 * std::log(2.0 * std::numbers::pi * vq) + (vp + dm * dm) / (2.0 * vq);
    }
    return h;
  }

  double kl(const DiagonalGaussian& q) const { return cross_entropy(q) - entropy(); }

  std::vector<double> sample(Rng& rng) const {
    std::vector<double> a(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      a[i] = mean[i] + std_at(i) * rng.normal();
    }
    return a;
  }
};

// Value type returned by policy evaluation at one state.
class ActionDistribution {
 public:
  ActionDistribution(Categorical c) : dist_(std::move(c)) {}
  ActionDistribution(DiagonalGaussian g) : dist_(std::move(g)) {}

  bool is_categorical() const { return std::holds_alternative<Categorical>(dist_); }
  const Categorical& categorical() const { return std::get<Categorical>(dist_); }
  const DiagonalGaussian& gaussian() const { return std::get<DiagonalGaussian>(dist_); }

  double log_prob(const Action& a) const {
    if (is_categorical()) {
      detail::require(a.is_discrete, "discrete distribution, continuous action");
      return categorical().log_prob(a.index);
    }
    detail::require(!a.is_discrete, "continuous distribution, discrete action");
    return gaussian().log_prob(a.values);
  }

  double entropy() const {
    return is_categorical() ? categorical().entropy() : gaussian().entropy();
  }

  double cross_entropy(const ActionDistribution& other) const {
    detail::require(is_categorical() == other.is_categorical(),
                    "distribution family mismatch");
    return is_categorical() ? categorical().cross_entropy(other.categorical())
                            : gaussian().cross_entropy(other.gaussian());
  }

  double kl(const ActionDistribution& other) const {
    return cross_entropy(other) - entropy();
  }

  Action sample(Rng& rng) const {
    if (is_categorical()) return Action::discrete(categorical().sample(rng));
    return Action::continuous(gaussian().sample(rng));
  }

 private:
  std::variant<Categorical, DiagonalGaussian> dist_;
};

}  // namespace repaint
