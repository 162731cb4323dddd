#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace batdiff {

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::string name, std::vector<int> shape, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Ordered collection of named tensors. Gradients and optimizer moments use
/// the same layout as the parameters they belong to.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(std::vector<Tensor> tensors);

  std::size_t tensor_count() const { return tensors_.size(); }
  std::size_t total_size() const;

  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  const Tensor& find(const std::string& name) const;
  Tensor& find(const std::string& name);

  std::span<Tensor> tensors() { return tensors_; }
  std::span<const Tensor> tensors() const { return tensors_; }

  /// Same names and shapes, all values zero.
  ParamSet zeros_like() const;
  bool same_layout(const ParamSet& other) const;
  bool all_finite() const;

  /// Flat coordinate access across all tensors, in order.
  double& flat(std::size_t i);
  double flat(std::size_t i) const;

  ParamSet& operator+=(const ParamSet& other);
  ParamSet& operator*=(double s);

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Tensor> tensors_;
};

}  // namespace batdiff
