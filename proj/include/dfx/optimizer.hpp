#pragma once

#include <vector>

#include "dfx/autodiff.hpp"

namespace dfx::nn {

// Plain gradient descent: p <- p - lr * grad for every non-frozen parameter,
// then clears all gradients. Throws MissingGradient when a trainable
// parameter has no gradient populated.
void optimizer_step(std::vector<Parameter>& params, double learning_rate);

}  // namespace dfx::nn
