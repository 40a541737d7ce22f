#include "dfx/loss.hpp"

#include <cmath>

#include "dfx/error.hpp"
#include "dfx/nn_ops.hpp"

namespace dfx::nn {

ClassWeights class_weights(const data::Manifest& m) {
  auto counts = m.count_by_class();
  ClassWeights cw;
  for (auto c : data::kAllClasses) {
    if (counts[c] == 0)
      throw MissingClass("class '" + data::to_string(c) + "' absent, weight undefined");
    cw.w[static_cast<std::size_t>(c)] = 1.0 / static_cast<double>(counts[c]);
  }
  return cw;
}

Variable cross_entropy(const Variable& logits, const std::vector<int>& label_indices,
                       const std::vector<double>& weights) {
  const Tensor& z = logits.value();
  if (z.rank() != 2) throw ShapeMismatch("cross_entropy logits must be (N,K), got " + z.shape_str());
  const std::size_t n = z.extent(0), k = z.extent(1);
  if (n == 0 || label_indices.empty()) throw EmptyBatch("cross_entropy on empty batch");
  if (label_indices.size() != n)
    throw ShapeMismatch("cross_entropy got " + std::to_string(label_indices.size()) +
                        " labels for " + std::to_string(n) + " rows");
  if (weights.size() != k)
    throw ShapeMismatch("cross_entropy needs one weight per class");
  for (int idx : label_indices)
    if (idx < 0 || static_cast<std::size_t>(idx) >= k)
      throw ShapeMismatch("label index " + std::to_string(idx) + " outside [0," +
                          std::to_string(k) + ")");

  Tensor probs = softmax_rows(z);
  double total = 0.0;
  const double* pd = probs.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = pd[i * k + static_cast<std::size_t>(label_indices[i])];
    total += -weights[static_cast<std::size_t>(label_indices[i])] * std::log(p);
  }
  const double loss = total / static_cast<double>(n);

  // Backward: d loss / d z[i,c] = (w_i / N) * (p[i,c] - 1{c == label_i}).
  return make_op(
      Tensor::scalar(loss), {logits},
      [probs = std::move(probs), label_indices, weights, n, k](detail::Node& self) {
        auto& zn = *self.parents[0];
        if (Tensor* gz = zn.grad_sink()) {
          const double g = self.grad[0];
          const double* pd = probs.data();
          double* gd = gz->data();
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t t = static_cast<std::size_t>(label_indices[i]);
            const double scale = g * weights[t] / static_cast<double>(n);
            for (std::size_t c = 0; c < k; ++c)
              gd[i * k + c] += scale * (pd[i * k + c] - (c == t ? 1.0 : 0.0));
          }
        }
      });
}

Variable weighted_cross_entropy(const Variable& logits,
                                const std::vector<data::ClassLabel>& labels,
                                const ClassWeights& weights) {
  std::vector<int> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) idx[i] = static_cast<int>(labels[i]);
  return cross_entropy(logits, idx, {weights.w.begin(), weights.w.end()});
}

double weighted_cross_entropy_value(const Tensor& logits,
                                    const std::vector<data::ClassLabel>& labels,
                                    const ClassWeights& weights) {
  return weighted_cross_entropy(Variable::constant(logits), labels, weights).value()[0];
}

}  // namespace dfx::nn
