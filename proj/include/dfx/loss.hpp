#pragma once

#include <array>
#include <vector>

#include "dfx/autodiff.hpp"
#include "dfx/manifest.hpp"

namespace dfx::nn {

// Per-class weights w_c = 1 / (#images of class c), kept raw (unnormalized).
struct ClassWeights {
  std::array<double, data::kNumClasses> w{1.0, 1.0, 1.0};  // indexed by ClassLabel

  double operator[](data::ClassLabel c) const { return w[static_cast<std::size_t>(c)]; }
  static ClassWeights uniform() { return ClassWeights{}; }
};

ClassWeights class_weights(const data::Manifest& m);

// Generic weighted cross-entropy over logits (N,K) with per-sample class
// indices; softmax is applied internally with max-subtraction. Returns the
// scalar mean of -w_label * log(p_label).
Variable cross_entropy(const Variable& logits, const std::vector<int>& label_indices,
                       const std::vector<double>& weights);

// The 3-class form: logits columns ordered (REAL, GAN, DM).
Variable weighted_cross_entropy(const Variable& logits,
                                const std::vector<data::ClassLabel>& labels,
                                const ClassWeights& weights);

// Forward-only value.
double weighted_cross_entropy_value(const Tensor& logits,
                                    const std::vector<data::ClassLabel>& labels,
                                    const ClassWeights& weights);

}  // namespace dfx::nn
