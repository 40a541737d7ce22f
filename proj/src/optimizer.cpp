#include "dfx/optimizer.hpp"

#include "dfx/error.hpp"

namespace dfx::nn {

void optimizer_step(std::vector<Parameter>& params, double learning_rate) {
  if (learning_rate <= 0.0) throw BadConfig("learning rate must be positive");
  for (auto& p : params) {
    if (p.frozen()) continue;
    if (!p.has_grad()) throw MissingGradient("parameter '" + p.name() + "'");
    const Tensor& g = p.grad();
    Tensor& v = p.tensor();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= learning_rate * g[i];
  }
  for (auto& p : params) p.clear_grad();
}

}  // namespace dfx::nn
