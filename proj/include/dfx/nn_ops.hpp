#pragma once

#include "dfx/autodiff.hpp"
#include "dfx/tensor.hpp"

namespace dfx::nn {

// Differentiable layer ops. Convolutions use cross-correlation semantics
// (no kernel flip) with zero padding. Spatial inputs may be batched
// ((N,C,...) leading batch dim) or unbatched; the output rank follows the
// input rank.

// x (Ci,H,W) or (N,Ci,H,W); weight (Co,Ci,k,k); bias (Co).
Variable conv2d(const Variable& x, const Variable& weight, const Variable& bias, int pad,
                int stride);

// x (Ci,L) or (N,Ci,L); weight (Co,Ci,k); bias (Co).
Variable conv1d(const Variable& x, const Variable& weight, const Variable& bias, int pad = 1,
                int stride = 1);

Variable relu(const Variable& x);

// 2x2 average downsample, stride 2, floor semantics on odd extents.
// x (N,C,H,W) or (C,H,W).
Variable avg_pool2x2(const Variable& x);

// Per-channel mean over every trailing position. x (C,...) -> (C).
Variable global_avg_pool(const Variable& x);
// Batched form: x (N,C,...) -> (N,C).
Variable global_avg_pool_batched(const Variable& x);

// x (D) -> (K) or (N,D) -> (N,K); weight (K,D); bias (K).
Variable linear(const Variable& x, const Variable& weight, const Variable& bias);

// Sum of all elements -> scalar.
Variable sum(const Variable& x);

// Forward-only conveniences over plain tensors (same kernels, no graph).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int pad, int stride);
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int pad = 1,
              int stride = 1);
Tensor relu(const Tensor& x);
Tensor global_avg_pool(const Tensor& x);
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Numerically stabilized row softmax; x (N,K) -> (N,K).
Tensor softmax_rows(const Tensor& x);

}  // namespace dfx::nn
