#include "repaint/network.hpp"

#include <algorithm>
#include <cmath>

namespace repaint {

ParamLayout make_mlp_layout(const MlpArch& arch, bool with_log_std) {
  ParamLayout layout;
  for (int l = 0; l < arch.layer_count(); ++l) {
    const auto rows = static_cast<std::size_t>(arch.layer_out(l));
    const auto cols = static_cast<std::size_t>(arch.layer_in(l));
    layout.add("W" + std::to_string(l), rows * cols);
    layout.add("b" + std::to_string(l), rows);
  }
  if (with_log_std) {
    layout.add("log_std", static_cast<std::size_t>(arch.output_dim));
  }
  return layout;
}

std::vector<double> mlp_forward(const MlpArch& arch, const ParamLayout& layout,
                                const ParamVector& params,
                                const std::vector<double>& input,
                                ForwardCache* cache) {
  detail::require(static_cast<int>(input.size()) == arch.input_dim,
                  "mlp_forward: input dimension mismatch");
  if (cache) {
    cache->activations.assign(1, input);
  }
  std::vector<double> current = input;
  for (int l = 0; l < arch.layer_count(); ++l) {
    const int rows = arch.layer_out(l);
    const int cols = arch.layer_in(l);
    const auto w = params.segment(layout, static_cast<std::size_t>(2 * l));
    const auto b = params.segment(layout, static_cast<std::size_t>(2 * l + 1));
    std::vector<double> next(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
      double acc = b[static_cast<std::size_t>(r)];
      const double* wrow = w.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) acc += wrow[c] * current[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = acc;
    }
    if (l != arch.layer_count() - 1) {
      for (auto& v : next) v = std::tanh(v);
    }
    if (cache) cache->activations.push_back(next);
    current = std::move(next);
  }
  return current;
}

void mlp_backward(const MlpArch& arch, const ParamLayout& layout,
                  const ParamVector& params, const ForwardCache& cache,
                  const std::vector<double>& output_grad, double scale,
                  ParamVector& grad) {
  detail::require(cache.activations.size() ==
                      static_cast<std::size_t>(arch.layer_count()) + 1,
                  "mlp_backward: cache does not match architecture");
  std::vector<double> delta = output_grad;
  for (int l = arch.layer_count() - 1; l >= 0; --l) {
    const int rows = arch.layer_out(l);
    const int cols = arch.layer_in(l);
    const auto& layer_in = cache.activations[static_cast<std::size_t>(l)];
    const auto w = params.segment(layout, static_cast<std::size_t>(2 * l));
    auto gw = grad.segment(layout, static_cast<std::size_t>(2 * l));
    auto gb = grad.segment(layout, static_cast<std::size_t>(2 * l + 1));
    for (int r = 0; r < rows; ++r) {
      const double d = scale * delta[static_cast<std::size_t>(r)];
      gb[static_cast<std::size_t>(r)] += d;
      double* gw_row = gw.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) gw_row[c] += d * layer_in[static_cast<std::size_t>(c)];
    }
    if (l == 0) break;
    // Propagate through W_l and the preceding tanh.
    std::vector<double> prev(static_cast<std::size_t>(cols), 0.0);
    for (int r = 0; r < rows; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      const double* wrow = w.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) prev[static_cast<std::size_t>(c)] += d * wrow[c];
    }
    for (int c = 0; c < cols; ++c) {
      const double a = layer_in[static_cast<std::size_t>(c)];
      prev[static_cast<std::size_t>(c)] *= 1.0 - a * a;
    }
    delta = std::move(prev);
  }
}

void init_mlp_params(const MlpArch& arch, const ParamLayout& layout,
                     ParamVector& params, Rng& rng, double hidden_gain,
                     double final_gain) {
  for (int l = 0; l < arch.layer_count(); ++l) {
    const int rows = arch.layer_out(l);
    const int cols = arch.layer_in(l);
    const double gain = (l == arch.layer_count() - 1) ? final_gain : hidden_gain;
    auto w = params.segment(layout, static_cast<std::size_t>(2 * l));
    auto b = params.segment(layout, static_cast<std::size_t>(2 * l + 1));
    for (auto& v : b) v = 0.0;
    std::vector<std::vector<double>> wrows(static_cast<std::size_t>(rows),
                                           std::vector<double>(static_cast<std::size_t>(cols)));
    for (auto& row : wrows) {
      for (auto& v : row) v = rng.normal();
    }
    // Modified Gram-Schmidt over rows; rows beyond the column count keep
    // their normalized residual direction.
    for (std::size_t r = 0; r < wrows.size(); ++r) {
      for (std::size_t p = 0; p < r && p < static_cast<std::size_t>(cols); ++p) {
        double proj = 0.0;
        for (int c = 0; c < cols; ++c) proj += wrows[r][static_cast<std::size_t>(c)] * wrows[p][static_cast<std::size_t>(c)];
        for (int c = 0; c < cols; ++c) wrows[r][static_cast<std::size_t>(c)] -= proj * wrows[p][static_cast<std::size_t>(c)];
      }
      double norm = 0.0;
      for (int c = 0; c < cols; ++c) norm += wrows[r][static_cast<std::size_t>(c)] * wrows[r][static_cast<std::size_t>(c)];
      norm = std::sqrt(norm);
      if (norm < 1e-12) {
        // Degenerate residual; fall back to a fresh normalized draw.
        for (auto& v : wrows[r]) v = rng.normal();
        norm = 0.0;
        for (int c = 0; c < cols; ++c) norm += wrows[r][static_cast<std::size_t>(c)] * wrows[r][static_cast<std::size_t>(c)];
        norm = std::sqrt(norm);
      }
      for (int c = 0; c < cols; ++c) wrows[r][static_cast<std::size_t>(c)] /= norm;
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        w[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)] =
            gain * wrows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
    }
  }
}

PolicyNetwork::PolicyNetwork(MlpArch arch, PolicyHead head,
                             std::uint64_t init_seed, double init_log_std)
    : arch_(std::move(arch)), head_(head) {
  const bool gaussian = head_ == PolicyHead::kDiagonalGaussian;
  layout_ = make_mlp_layout(arch_, gaussian);
  params_ = ParamVector(layout_.total_size());
  Rng rng(init_seed);
  init_mlp_params(arch_, layout_, params_, rng, std::sqrt(2.0), 0.01);
  if (gaussian) {
    log_std_segment_ = layout_.segment_count() - 1;
    auto ls = params_.segment(layout_, log_std_segment_);
    for (auto& v : ls) v = init_log_std;
  }
}

std::vector<double> PolicyNetwork::clamped_log_std() const {
  detail::require(head_ == PolicyHead::kDiagonalGaussian,
                  "log_std only defined for Gaussian head");
  auto ls = params_.segment(layout_, log_std_segment_);
  std::vector<double> out(ls.begin(), ls.end());
  for (auto& v : out) v = std::clamp(v, kLogStdMin, kLogStdMax);
  return out;
}

ActionDistribution PolicyNetwork::forward(const std::vector<double>& state,
                                          ForwardCache* cache) const {
  auto out = mlp_forward(arch_, layout_, params_, state, cache);
  if (head_ == PolicyHead::kCategorical) {
    return ActionDistribution(Categorical::from_logits(out));
  }
  DiagonalGaussian g;
  g.mean = std::move(out);
  g.log_std = clamped_log_std();
  for (double s : g.log_std) {
    detail::require(std::isfinite(s), "non-finite log-std");
  }
  return ActionDistribution(std::move(g));
}

void PolicyNetwork::backward(const ForwardCache& cache,
                             const std::vector<double>& head_grad,
                             const std::vector<double>& log_std_grad,
                             double scale, ParamVector& grad) const {
  mlp_backward(arch_, layout_, params_, cache, head_grad, scale, grad);
  if (!log_std_grad.empty()) {
    detail::require(head_ == PolicyHead::kDiagonalGaussian,
                    "log_std gradient on categorical head");
    auto raw = params_.segment(layout_, log_std_segment_);
    auto g = grad.segment(layout_, log_std_segment_);
    for (std::size_t i = 0; i < g.size(); ++i) {
      // Clamp passes gradient only inside the interval.
      if (raw[i] > kLogStdMin && raw[i] < kLogStdMax) {
        g[i] += scale * log_std_grad[i];
      }
    }
  }
}

void PolicyNetwork::set_params(ParamVector p) {
  detail::require(p.size() == layout_.total_size(),
                  "parameter vector does not match layout");
  detail::require(p.all_finite(), "non-finite parameters");
  params_ = std::move(p);
}

ValueNetwork::ValueNetwork(MlpArch arch, std::uint64_t init_seed)
    : arch_(std::move(arch)) {
  detail::require(arch_.output_dim == 1, "value net must have scalar output");
  layout_ = make_mlp_layout(arch_, false);
  params_ = ParamVector(layout_.total_size());
  Rng rng(init_seed);
  init_mlp_params(arch_, layout_, params_, rng, std::sqrt(2.0), 1.0);
}

double ValueNetwork::value(const std::vector<double>& state,
                           ForwardCache* cache) const {
  return mlp_forward(arch_, layout_, params_, state, cache)[0];
}

void ValueNetwork::backward(const ForwardCache& cache, double value_grad,
                            double scale, ParamVector& grad) const {
  mlp_backward(arch_, layout_, params_, cache, {value_grad}, scale, grad);
}

void ValueNetwork::set_params(ParamVector p) {
  detail::require(p.size() == layout_.total_size(),
                  "parameter vector does not match layout");
  detail::require(p.all_finite(), "non-finite parameters");
  params_ = std::move(p);
}

}  // namespace repaint
