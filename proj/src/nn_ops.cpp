#include "dfx/nn_ops.hpp"

#include <algorithm>
#include <cmath>

#include "dfx/error.hpp"

namespace dfx::nn {

namespace {

struct ConvDims {
  std::size_t n, ci, co, k;
  std::size_t in_h = 1, in_w, out_h = 1, out_w;  // 1-D uses *_w only
  int pad, stride;
  bool batched;
};

std::size_t conv_out_extent(std::size_t in, std::size_t k, int pad, int stride) {
  return (in + 2 * static_cast<std::size_t>(pad) - k) / static_cast<std::size_t>(stride) + 1;
}

ConvDims conv2d_dims(const Tensor& x, const Tensor& w, const Tensor& b, int pad, int stride) {
  if (pad < 0 || stride < 1) throw ShapeMismatch("conv2d needs pad >= 0 and stride >= 1");
  if (x.rank() != 3 && x.rank() != 4)
    throw ShapeMismatch("conv2d input must be (Ci,H,W) or (N,Ci,H,W), got " + x.shape_str());
  if (w.rank() != 4) throw ShapeMismatch("conv2d weight must be (Co,Ci,k,k), got " + w.shape_str());
  ConvDims d;
  d.batched = x.rank() == 4;
  d.n = d.batched ? x.extent(0) : 1;
  d.ci = x.extent(d.batched ? 1 : 0);
  d.in_h = x.extent(d.batched ? 2 : 1);
  d.in_w = x.extent(d.batched ? 3 : 2);
  d.co = w.extent(0);
  d.k = w.extent(2);
  d.pad = pad;
  d.stride = stride;
  if (w.extent(1) != d.ci)
    throw ShapeMismatch("conv2d weight expects " + std::to_string(w.extent(1)) +
                        " input channels, input has " + std::to_string(d.ci));
  if (w.extent(3) != d.k) throw ShapeMismatch("conv2d kernel must be square, got " + w.shape_str());
  if (b.rank() != 1 || b.extent(0) != d.co)
    throw ShapeMismatch("conv2d bias must be (Co), got " + b.shape_str());
  if (d.k > std::min(d.in_h, d.in_w) + 2 * static_cast<std::size_t>(pad))
    throw ShapeMismatch("conv2d kernel " + std::to_string(d.k) + " exceeds padded input " +
                        x.shape_str());
  d.out_h = conv_out_extent(d.in_h, d.k, pad, stride);
  d.out_w = conv_out_extent(d.in_w, d.k, pad, stride);
  return d;
}

ConvDims conv1d_dims(const Tensor& x, const Tensor& w, const Tensor& b, int pad, int stride) {
  if (pad < 0 || stride < 1) throw ShapeMismatch("conv1d needs pad >= 0 and stride >= 1");
  if (x.rank() != 2 && x.rank() != 3)
    throw ShapeMismatch("conv1d input must be (Ci,L) or (N,Ci,L), got " + x.shape_str());
  if (w.rank() != 3) throw ShapeMismatch("conv1d weight must be (Co,Ci,k), got " + w.shape_str());
  ConvDims d;
  d.batched = x.rank() == 3;
  d.n = d.batched ? x.extent(0) : 1;
  d.ci = x.extent(d.batched ? 1 : 0);
  d.in_w = x.extent(d.batched ? 2 : 1);
  d.co = w.extent(0);
  d.k = w.extent(2);
  d.pad = pad;
  d.stride = stride;
  if (w.extent(1) != d.ci)
    throw ShapeMismatch("conv1d weight expects " + std::to_string(w.extent(1)) +
                        " input channels, input has " + std::to_string(d.ci));
  if (b.rank() != 1 || b.extent(0) != d.co)
    throw ShapeMismatch("conv1d bias must be (Co), got " + b.shape_str());
  if (d.in_w + 2 * static_cast<std::size_t>(pad) < d.k)
    throw KernelTooLarge("kernel " + std::to_string(d.k) + " exceeds padded length " +
                         std::to_string(d.in_w + 2 * static_cast<std::size_t>(pad)));
  d.out_w = conv_out_extent(d.in_w, d.k, pad, stride);
  return d;
}

// Valid output range [lo, hi) for a kernel tap so the input index
// o*stride + tap - pad stays inside [0, in).
void tap_bounds(std::size_t out, std::size_t in, std::size_t tap, int pad, int stride,
                std::size_t& lo, std::size_t& hi) {
  const long s = stride;
  const long shift = static_cast<long>(tap) - pad;  // input index = o*s + shift
  const long lo_l = shift >= 0 ? 0 : (-shift + s - 1) / s;
  const long num = static_cast<long>(in) - 1 - shift;
  if (num < 0) {
    lo = hi = 0;
    return;
  }
  const long hi_l = std::min<long>(static_cast<long>(out) - 1, num / s);
  if (hi_l < lo_l) {
    lo = hi = 0;
    return;
  }
  lo = static_cast<std::size_t>(lo_l);
  hi = static_cast<std::size_t>(hi_l) + 1;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvDims& d) {
  std::vector<std::size_t> out_shape =
      d.batched ? std::vector<std::size_t>{d.n, d.co, d.out_h, d.out_w}
                : std::vector<std::size_t>{d.co, d.out_h, d.out_w};
  Tensor y(std::move(out_shape));
  const double* xd = x.data();
  const double* wd = w.data();
  const double* bd = b.data();
  double* yd = y.data();
  const std::size_t x_img = d.ci * d.in_h * d.in_w, y_img = d.co * d.out_h * d.out_w;
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t co = 0; co < d.co; ++co) {
      double* yc = yd + n * y_img + co * d.out_h * d.out_w;
      const double bias = bd[co];
      for (std::size_t i = 0; i < d.out_h * d.out_w; ++i) yc[i] = bias;
      for (std::size_t ci = 0; ci < d.ci; ++ci) {
        const double* xc = xd + n * x_img + ci * d.in_h * d.in_w;
        const double* wc = wd + (co * d.ci + ci) * d.k * d.k;
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          for (std::size_t kx = 0; kx < d.k; ++kx) {
            const double wv = wc[ky * d.k + kx];
            std::size_t ox_lo, ox_hi;
            tap_bounds(d.out_w, d.in_w, kx, d.pad, d.stride, ox_lo, ox_hi);
            for (std::size_t oy = 0; oy < d.out_h; ++oy) {
              const long iy = static_cast<long>(oy) * d.stride + static_cast<long>(ky) - d.pad;
              if (iy < 0 || iy >= static_cast<long>(d.in_h)) continue;
              double* yrow = yc + oy * d.out_w;
              const double* xrow = xc + static_cast<std::size_t>(iy) * d.in_w;
              for (std::size_t ox = ox_lo; ox < ox_hi; ++ox)
                yrow[ox] += wv * xrow[ox * d.stride + kx - d.pad];
            }
          }
        }
      }
    }
  }
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, const ConvDims& d,
                     Tensor* gx, Tensor* gw, Tensor* gb) {
  const double* xd = x.data();
  const double* wd = w.data();
  const double* gyd = gy.data();
  const std::size_t x_img = d.ci * d.in_h * d.in_w, y_img = d.co * d.out_h * d.out_w;
  if (gb) {
    double* gbd = gb->data();
    for (std::size_t n = 0; n < d.n; ++n)
      for (std::size_t co = 0; co < d.co; ++co) {
        const double* gyc = gyd + n * y_img + co * d.out_h * d.out_w;
        double acc = 0.0;
        for (std::size_t i = 0; i < d.out_h * d.out_w; ++i) acc += gyc[i];
        gbd[co] += acc;
      }
  }
  if (!gx && !gw) return;
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t co = 0; co < d.co; ++co) {
      const double* gyc = gyd + n * y_img + co * d.out_h * d.out_w;
      for (std::size_t ci = 0; ci < d.ci; ++ci) {
        const double* xc = xd + n * x_img + ci * d.in_h * d.in_w;
        const double* wc = wd + (co * d.ci + ci) * d.k * d.k;
        double* gxc = gx ? gx->data() + n * x_img + ci * d.in_h * d.in_w : nullptr;
        double* gwc = gw ? gw->data() + (co * d.ci + ci) * d.k * d.k : nullptr;
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          for (std::size_t kx = 0; kx < d.k; ++kx) {
            const double wv = wc[ky * d.k + kx];
            double wacc = 0.0;
            std::size_t ox_lo, ox_hi;
            tap_bounds(d.out_w, d.in_w, kx, d.pad, d.stride, ox_lo, ox_hi);
            for (std::size_t oy = 0; oy < d.out_h; ++oy) {
              const long iy = static_cast<long>(oy) * d.stride + static_cast<long>(ky) - d.pad;
              if (iy < 0 || iy >= static_cast<long>(d.in_h)) continue;
              const double* gyrow = gyc + oy * d.out_w;
              const double* xrow = xc + static_cast<std::size_t>(iy) * d.in_w;
              double* gxrow = gxc ? gxc + static_cast<std::size_t>(iy) * d.in_w : nullptr;
              if (gxrow)
                for (std::size_t ox = ox_lo; ox < ox_hi; ++ox)
                  gxrow[ox * d.stride + kx - d.pad] += wv * gyrow[ox];
              if (gwc)
                for (std::size_t ox = ox_lo; ox < ox_hi; ++ox)
                  wacc += gyrow[ox] * xrow[ox * d.stride + kx - d.pad];
            }
            if (gwc) gwc[ky * d.k + kx] += wacc;
          }
        }
      }
    }
  }
}

Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const ConvDims& d) {
  std::vector<std::size_t> out_shape = d.batched
                                           ? std::vector<std::size_t>{d.n, d.co, d.out_w}
                                           : std::vector<std::size_t>{d.co, d.out_w};
  Tensor y(std::move(out_shape));
  const double* xd = x.data();
  const double* wd = w.data();
  const double* bd = b.data();
  double* yd = y.data();
  const std::size_t x_img = d.ci * d.in_w, y_img = d.co * d.out_w;
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t co = 0; co < d.co; ++co) {
      double* yc = yd + n * y_img + co * d.out_w;
      for (std::size_t i = 0; i < d.out_w; ++i) yc[i] = bd[co];
      for (std::size_t ci = 0; ci < d.ci; ++ci) {
        const double* xc = xd + n * x_img + ci * d.in_w;
        const double* wc = wd + (co * d.ci + ci) * d.k;
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const double wv = wc[kx];
          std::size_t lo, hi;
          tap_bounds(d.out_w, d.in_w, kx, d.pad, d.stride, lo, hi);
          for (std::size_t ox = lo; ox < hi; ++ox) yc[ox] += wv * xc[ox * d.stride + kx - d.pad];
        }
      }
    }
  }
  return y;
}

void conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& gy, const ConvDims& d,
                     Tensor* gx, Tensor* gw, Tensor* gb) {
  const double* xd = x.data();
  const double* wd = w.data();
  const double* gyd = gy.data();
  const std::size_t x_img = d.ci * d.in_w, y_img = d.co * d.out_w;
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t co = 0; co < d.co; ++co) {
      const double* gyc = gyd + n * y_img + co * d.out_w;
      if (gb) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d.out_w; ++i) acc += gyc[i];
        gb->data()[co] += acc;
      }
      for (std::size_t ci = 0; ci < d.ci; ++ci) {
        const double* xc = xd + n * x_img + ci * d.in_w;
        const double* wc = wd + (co * d.ci + ci) * d.k;
        double* gxc = gx ? gx->data() + n * x_img + ci * d.in_w : nullptr;
        double* gwc = gw ? gw->data() + (co * d.ci + ci) * d.k : nullptr;
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          std::size_t lo, hi;
          tap_bounds(d.out_w, d.in_w, kx, d.pad, d.stride, lo, hi);
          const double wv = wc[kx];
          double wacc = 0.0;
          for (std::size_t ox = lo; ox < hi; ++ox) {
            if (gxc) gxc[ox * d.stride + kx - d.pad] += wv * gyc[ox];
            wacc += gyc[ox] * xc[ox * d.stride + kx - d.pad];
          }
          if (gwc) gwc[kx] += wacc;
        }
      }
    }
  }
}

}  // namespace

Variable conv2d(const Variable& x, const Variable& weight, const Variable& bias, int pad,
                int stride) {
  const ConvDims d = conv2d_dims(x.value(), weight.value(), bias.value(), pad, stride);
  Tensor y = conv2d_forward(x.value(), weight.value(), bias.value(), d);
  return make_op(std::move(y), {x, weight, bias}, [d](detail::Node& self) {
    auto& xn = *self.parents[0];
    auto& wn = *self.parents[1];
    auto& bn = *self.parents[2];
    conv2d_backward(xn.value, wn.value, self.grad, d, xn.grad_sink(), wn.grad_sink(),
                    bn.grad_sink());
  });
}

Variable conv1d(const Variable& x, const Variable& weight, const Variable& bias, int pad,
                int stride) {
  const ConvDims d = conv1d_dims(x.value(), weight.value(), bias.value(), pad, stride);
  Tensor y = conv1d_forward(x.value(), weight.value(), bias.value(), d);
  return make_op(std::move(y), {x, weight, bias}, [d](detail::Node& self) {
    auto& xn = *self.parents[0];
    auto& wn = *self.parents[1];
    auto& bn = *self.parents[2];
    conv1d_backward(xn.value, wn.value, self.grad, d, xn.grad_sink(), wn.grad_sink(),
                    bn.grad_sink());
  });
}

Variable relu(const Variable& x) {
  Tensor y = x.value();
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return make_op(std::move(y), {x}, [](detail::Node& self) {
    auto& xn = *self.parents[0];
    if (Tensor* gx = xn.grad_sink()) {
      const double* xd = xn.value.data();
      const double* g = self.grad.data();
      double* out = gx->data();
      for (std::size_t i = 0; i < xn.value.size(); ++i)
        if (xd[i] > 0.0) out[i] += g[i];
    }
  });
}

Variable avg_pool2x2(const Variable& x) {
  const Tensor& xin = x.value();
  if (xin.rank() != 3 && xin.rank() != 4)
    throw ShapeMismatch("avg_pool2x2 input must be (C,H,W) or (N,C,H,W)");
  const bool batched = xin.rank() == 4;
  const std::size_t n = batched ? xin.extent(0) : 1;
  const std::size_t c = xin.extent(batched ? 1 : 0);
  const std::size_t h = xin.extent(batched ? 2 : 1);
  const std::size_t w = xin.extent(batched ? 3 : 2);
  if (h < 2 || w < 2) throw ShapeMismatch("avg_pool2x2 needs spatial extents >= 2");
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<std::size_t> out_shape = batched ? std::vector<std::size_t>{n, c, oh, ow}
                                               : std::vector<std::size_t>{c, oh, ow};
  Tensor y(std::move(out_shape));
  const double* xd = xin.data();
  double* yd = y.data();
  for (std::size_t img = 0; img < n * c; ++img) {
    const double* xi = xd + img * h * w;
    double* yi = yd + img * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double* p = xi + 2 * oy * w + 2 * ox;
        yi[oy * ow + ox] = 0.25 * (p[0] + p[1] + p[w] + p[w + 1]);
      }
  }
  return make_op(std::move(y), {x}, [n, c, h, w, oh, ow](detail::Node& self) {
    auto& xn = *self.parents[0];
    if (Tensor* gx = xn.grad_sink()) {
      const double* g = self.grad.data();
      double* gxd = gx->data();
      for (std::size_t img = 0; img < n * c; ++img) {
        const double* gi = g + img * oh * ow;
        double* gxi = gxd + img * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy)
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const double v = 0.25 * gi[oy * ow + ox];
            double* p = gxi + 2 * oy * w + 2 * ox;
            p[0] += v;
            p[1] += v;
            p[w] += v;
            p[w + 1] += v;
          }
      }
    }
  });
}

namespace {

Variable gap_impl(const Variable& x, bool batched) {
  const Tensor& xin = x.value();
  const std::size_t min_rank = batched ? 3 : 2;
  if (xin.rank() < min_rank)
    throw ShapeMismatch("global_avg_pool input rank too small: " + xin.shape_str());
  const std::size_t n = batched ? xin.extent(0) : 1;
  const std::size_t c = xin.extent(batched ? 1 : 0);
  std::size_t spatial = 1;
  for (std::size_t i = batched ? 2 : 1; i < xin.rank(); ++i) spatial *= xin.extent(i);
  std::vector<std::size_t> out_shape =
      batched ? std::vector<std::size_t>{n, c} : std::vector<std::size_t>{c};
  Tensor y(std::move(out_shape));
  const double* xd = xin.data();
  double* yd = y.data();
  for (std::size_t i = 0; i < n * c; ++i) {
    double acc = 0.0;
    const double* p = xd + i * spatial;
    for (std::size_t s = 0; s < spatial; ++s) acc += p[s];
    yd[i] = acc / static_cast<double>(spatial);
  }
  return make_op(std::move(y), {x}, [n, c, spatial](detail::Node& self) {
    auto& xn = *self.parents[0];
    if (Tensor* gx = xn.grad_sink()) {
      const double* g = self.grad.data();
      double* gxd = gx->data();
      const double inv = 1.0 / static_cast<double>(spatial);
      for (std::size_t i = 0; i < n * c; ++i) {
        const double v = g[i] * inv;
        double* p = gxd + i * spatial;
        for (std::size_t s = 0; s < spatial; ++s) p[s] += v;
      }
    }
  });
}

}  // namespace

Variable global_avg_pool(const Variable& x) { return gap_impl(x, false); }

Variable global_avg_pool_batched(const Variable& x) { return gap_impl(x, true); }

Variable linear(const Variable& x, const Variable& weight, const Variable& bias) {
  const Tensor& xin = x.value();
  const Tensor& w = weight.value();
  const Tensor& b = bias.value();
  if (w.rank() != 2) throw ShapeMismatch("linear weight must be (K,D), got " + w.shape_str());
  if (xin.rank() != 1 && xin.rank() != 2)
    throw ShapeMismatch("linear input must be (D) or (N,D), got " + xin.shape_str());
  const bool batched = xin.rank() == 2;
  const std::size_t n = batched ? xin.extent(0) : 1;
  const std::size_t dim = xin.extent(batched ? 1 : 0);
  const std::size_t k = w.extent(0);
  if (w.extent(1) != dim)
    throw ShapeMismatch("linear weight expects input dim " + std::to_string(w.extent(1)) +
                        ", got " + std::to_string(dim));
  if (b.rank() != 1 || b.extent(0) != k)
    throw ShapeMismatch("linear bias must be (K), got " + b.shape_str());
  std::vector<std::size_t> out_shape =
      batched ? std::vector<std::size_t>{n, k} : std::vector<std::size_t>{k};
  Tensor y(std::move(out_shape));
  const double* xd = xin.data();
  const double* wd = w.data();
  const double* bd = b.data();
  double* yd = y.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double acc = bd[j];
      const double* xr = xd + i * dim;
      const double* wr = wd + j * dim;
      for (std::size_t d0 = 0; d0 < dim; ++d0) acc += wr[d0] * xr[d0];
      yd[i * k + j] = acc;
    }
  return make_op(std::move(y), {x, weight, bias}, [n, dim, k](detail::Node& self) {
    auto& xn = *self.parents[0];
    auto& wn = *self.parents[1];
    auto& bn = *self.parents[2];
    const double* g = self.grad.data();
    const double* xd = xn.value.data();
    const double* wd = wn.value.data();
    Tensor* gx = xn.grad_sink();
    Tensor* gw = wn.grad_sink();
    Tensor* gb = bn.grad_sink();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const double gij = g[i * k + j];
        if (gb) gb->data()[j] += gij;
        if (gx) {
          double* gxr = gx->data() + i * dim;
          const double* wr = wd + j * dim;
          for (std::size_t d0 = 0; d0 < dim; ++d0) gxr[d0] += gij * wr[d0];
        }
        if (gw) {
          double* gwr = gw->data() + j * dim;
          const double* xr = xd + i * dim;
          for (std::size_t d0 = 0; d0 < dim; ++d0) gwr[d0] += gij * xr[d0];
        }
      }
  });
}

Variable sum(const Variable& x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  return make_op(Tensor::scalar(acc), {x}, [](detail::Node& self) {
    auto& xn = *self.parents[0];
    if (Tensor* gx = xn.grad_sink()) {
      const double g = self.grad[0];
      for (auto& v : gx->values()) v += g;
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int pad, int stride) {
  return conv2d_forward(x, weight, bias, conv2d_dims(x, weight, bias, pad, stride));
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int pad, int stride) {
  return conv1d_forward(x, weight, bias, conv1d_dims(x, weight, bias, pad, stride));
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor global_avg_pool(const Tensor& x) {
  return gap_impl(Variable::constant(x), false).value();
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return linear(Variable::constant(x), Variable::constant(weight), Variable::constant(bias))
      .value();
}

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() != 2) throw ShapeMismatch("softmax_rows expects (N,K), got " + x.shape_str());
  const std::size_t n = x.extent(0), k = x.extent(1);
  Tensor y(x.shape());
  const double* xd = x.data();
  double* yd = y.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xd + i * k;
    double* out = yd + i * k;
    double m = row[0];
    for (std::size_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[j] = std::exp(row[j] - m);
      z += out[j];
    }
    for (std::size_t j = 0; j < k; ++j) out[j] /= z;
  }
  return y;
}

}  // namespace dfx::nn
