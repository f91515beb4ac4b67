#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace repaint {

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}
}  // namespace detail

// One named contiguous segment of a flat parameter vector.
struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Shape descriptor mapping segments (layer weights, biases, extra heads)
// into the flat value array. Immutable once a network is built.
class ParamLayout {
 public:
  std::size_t add(const std::string& name, std::size_t size) {
    segments_.push_back({name, total_, size});
    total_ += size;
    return segments_.size() - 1;
  }

  const ParamSegment& segment(std::size_t i) const { return segments_.at(i); }
  std::size_t segment_count() const { return segments_.size(); }
  std::size_t total_size() const { return total_; }

 private:
  std::vector<ParamSegment> segments_;
  std::size_t total_ = 0;
};

// Flat container of approximator parameters (or an aligned gradient).
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n) : values_(n, 0.0) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  std::span<double> segment(const ParamLayout& layout, std::size_t i) {
    const auto& seg = layout.segment(i);
    return {values_.data() + seg.offset, seg.size};
  }
  std::span<const double> segment(const ParamLayout& layout, std::size_t i) const {
    const auto& seg = layout.segment(i);
    return {values_.data() + seg.offset, seg.size};
  }

  void fill(double v) {
    for (auto& x : values_) x = v;
  }

  void add_scaled(const ParamVector& other, double scale) {
    detail::require(other.size() == size(), "ParamVector size mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      values_[i] += scale * other.values_[i];
    }
  }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return s;
  }

  double dot(const ParamVector& other) const {
    detail::require(other.size() == size(), "ParamVector size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
    return s;
  }

 private:
  std::vector<double> values_;
};

}  // namespace repaint
