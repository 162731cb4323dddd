#include "batdiff/params.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

#include "batdiff/error.hpp"

namespace batdiff {

Tensor::Tensor(std::string name_, std::vector<int> shape_, double fill)
    : name(std::move(name_)), shape(std::move(shape_)) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        [](std::size_t a, int d) {
                                          return a * static_cast<std::size_t>(d);
                                        });
  values.assign(n, fill);
}

ParamSet::ParamSet(std::vector<Tensor> tensors) : tensors_(std::move(tensors)) {}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

const Tensor& ParamSet::find(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw ArgumentError("no tensor named '" + name + "'");
}

Tensor& ParamSet::find(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).find(name));
}

ParamSet ParamSet::zeros_like() const {
  std::vector<Tensor> out;
  out.reserve(tensors_.size());
  for (const auto& t : tensors_) out.emplace_back(t.name, t.shape, 0.0);
  return ParamSet(std::move(out));
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name != other.tensors_[i].name ||
        tensors_[i].shape != other.tensors_[i].shape) {
      return false;
    }
  }
  return true;
}

bool ParamSet::all_finite() const {
  for (const auto& t : tensors_) {
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double& ParamSet::flat(std::size_t i) {
  for (auto& t : tensors_) {
    if (i < t.size()) return t.values[i];
    i -= t.size();
  }
  throw ArgumentError("flat parameter index out of range");
}

double ParamSet::flat(std::size_t i) const {
  return const_cast<ParamSet&>(*this).flat(i);
}

ParamSet& ParamSet::operator+=(const ParamSet& other) {
  if (!same_layout(other)) throw ShapeError("parameter layouts differ");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& a = tensors_[i].values;
    const auto& b = other.tensors_[i].values;
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  }
  return *this;
}

ParamSet& ParamSet::operator*=(double s) {
  for (auto& t : tensors_) {
    for (double& v : t.values) v *= s;
  }
  return *this;
}

}  // namespace batdiff
