#include "dfx/tensor.hpp"

#include <cmath>
#include <sstream>

#include "dfx/error.hpp"

namespace dfx::nn {

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_size(shape_), 0.0) {
  for (auto e : shape_)
    if (e == 0) throw ShapeMismatch("zero extent in shape " + shape_str());
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_size(shape_))
    throw ShapeMismatch("value count " + std::to_string(values_.size()) +
                        " does not match shape " + shape_str());
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

double& Tensor::at(std::initializer_list<std::size_t> idx) { return values_[flat_index(idx)]; }

double Tensor::at(std::initializer_list<std::size_t> idx) const { return values_[flat_index(idx)]; }

std::size_t Tensor::flat_index(std::initializer_list<std::size_t> idx) const {
  if (idx.size() != shape_.size())
    throw ShapeMismatch("index rank " + std::to_string(idx.size()) + " vs tensor rank " +
                        std::to_string(shape_.size()));
  std::size_t flat = 0;
  std::size_t dim = 0;
  for (std::size_t i : idx) {
    flat = flat * shape_[dim] + i;
    ++dim;
  }
  return flat;
}

void Tensor::fill(double v) {
  for (auto& x : values_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : values_)
    if (!std::isfinite(x)) return false;
  return true;
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  if (shape_size(shape) != values_.size())
    throw ShapeMismatch("reshape to incompatible element count");
  return Tensor(std::move(shape), values_);
}

std::string Tensor::shape_str() const {
  std::ostringstream ss;
  ss << "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) ss << (i ? "," : "") << shape_[i];
  ss << ")";
  return ss.str();
}

}  // namespace dfx::nn
