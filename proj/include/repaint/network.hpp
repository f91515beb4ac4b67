#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repaint/distribution.hpp"
#include "repaint/param_vector.hpp"
#include "repaint/rng.hpp"

namespace repaint {

// Fully-connected net: tanh hidden layers, linear output layer.
struct MlpArch {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;

  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_in(int l) const {
    return l == 0 ? input_dim : hidden[static_cast<std::size_t>(l - 1)];
  }
  int layer_out(int l) const {
    return l == layer_count() - 1 ? output_dim : hidden[static_cast<std::size_t>(l)];
  }
};

// Post-activation values per layer, kept around for the backward pass.
struct ForwardCache {
  // activations[0] is the input; activations[l+1] is layer l's output
  // (tanh applied on hidden layers, raw on the final layer).
  std::vector<std::vector<double>> activations;
};

ParamLayout make_mlp_layout(const MlpArch& arch, bool with_log_std);

std::vector<double> mlp_forward(const MlpArch& arch, const ParamLayout& layout,
                                const ParamVector& params,
                                const std::vector<double>& input,
                                ForwardCache* cache = nullptr);

// Reverse-mode accumulation over the fixed MLP structure: given
// dLoss/d(output) for the cached forward pass, add dLoss/d(params) into
// `grad` (scaled by `scale`).
void mlp_backward(const MlpArch& arch, const ParamLayout& layout,
                  const ParamVector& params, const ForwardCache& cache,
                  const std::vector<double>& output_grad, double scale,
                  ParamVector& grad);

// Orthogonal-like scaled initialization: rows of each weight matrix are
// Gram-Schmidt-orthonormalized random normal vectors times `gain`; biases 0.
void init_mlp_params(const MlpArch& arch, const ParamLayout& layout,
                     ParamVector& params, Rng& rng, double hidden_gain,
                     double final_gain);

enum class PolicyHead { kCategorical, kDiagonalGaussian };

// Policy approximator. Categorical nets emit logits over the action set;
// Gaussian nets emit the mean and keep a state-independent learned log-std
// vector (clamped to [log_std_min, log_std_max]) at the end of the layout.
class PolicyNetwork {
 public:
  PolicyNetwork(MlpArch arch, PolicyHead head, std::uint64_t init_seed,
                double init_log_std = 0.0);

  ActionDistribution forward(const std::vector<double>& state,
                             ForwardCache* cache = nullptr) const;

  // Accumulates gradients w.r.t. parameters given the loss gradient at the
  // head. For Categorical pass dL/dlogits; for Gaussian pass dL/dmean and
  // dL/dlog_std (the latter may be empty when the loss ignores the spread).
  void backward(const ForwardCache& cache, const std::vector<double>& head_grad,
                const std::vector<double>& log_std_grad, double scale,
                ParamVector& grad) const;

  const MlpArch& arch() const { return arch_; }
  PolicyHead head() const { return head_; }
  const ParamLayout& layout() const { return layout_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }
  void set_params(ParamVector p);

  int action_count() const { return arch_.output_dim; }
  bool is_discrete() const { return head_ == PolicyHead::kCategorical; }

  std::vector<double> clamped_log_std() const;

  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

 private:
  MlpArch arch_;
  PolicyHead head_;
  ParamLayout layout_;
  ParamVector params_;
  std::size_t log_std_segment_ = 0;
};

// State-value approximator V(s): scalar output.
class ValueNetwork {
 public:
  ValueNetwork(MlpArch arch, std::uint64_t init_seed);

  double value(const std::vector<double>& state,
               ForwardCache* cache = nullptr) const;

  // Accumulates dLoss/dparams given dLoss/dV at the cached state.
  void backward(const ForwardCache& cache, double value_grad, double scale,
                ParamVector& grad) const;

  const MlpArch& arch() const { return arch_; }
  const ParamLayout& layout() const { return layout_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }
  void set_params(ParamVector p);

 private:
  MlpArch arch_;
  ParamLayout layout_;
  ParamVector params_;
};

}  // namespace repaint
