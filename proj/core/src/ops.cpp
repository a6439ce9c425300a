#include "rgbt/ops.hpp"

#include <algorithm>
#include <cmath>

#include "rgbt/errors.hpp"

namespace rgbt {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shapes " + a.shape_string() + " and " +
                     b.shape_string() + " do not match");
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) s += a[i];
  return s;
}

double max_value(const Tensor& a) {
  double m = a[0];
  for (std::int64_t i = 1; i < a.size(); ++i) m = std::max(m, a[i]);
  return m;
}

double min_value(const Tensor& a) {
  double m = a[0];
  for (std::int64_t i = 1; i < a.size(); ++i) m = std::min(m, a[i]);
  return m;
}

std::int64_t argmax(const Tensor& a) {
  std::int64_t best = 0;
  for (std::int64_t i = 1; i < a.size(); ++i) {
    if (a[i] > a[best]) best = i;
  }
  return best;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose: expected rank-2, got " + a.shape_string());
  const int r = a.extent(0), c = a.extent(1);
  Tensor out({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out(j, i) = a(i, j);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul: expected rank-2 operands, got " + a.shape_string() + " and " +
                     b.shape_string());
  }
  if (a.extent(1) != b.extent(0)) {
    throw ShapeError("matmul: inner extents of " + a.shape_string() + " and " + b.shape_string() +
                     " do not match");
  }
  const int m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j) out(i, j) += av * b(p, j);
    }
  }
  return out;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out, Tensor& grad_a,
                     Tensor& grad_b) {
  grad_a = matmul(grad_out, transpose(b));
  grad_b = matmul(transpose(a), grad_out);
}

Tensor gap(const Tensor& x) {
  if (x.rank() != 3) throw ShapeError("gap: expected rank-3 input, got " + x.shape_string());
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  Tensor out({c});
  const double inv = 1.0 / (static_cast<double>(h) * static_cast<double>(w));
  for (int ci = 0; ci < c; ++ci) {
    double s = 0.0;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) s += x(ci, i, j);
    out(ci) = s * inv;
  }
  return out;
}

Tensor gap_backward(const Tensor& x, const Tensor& grad_out) {
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  Tensor gx(x.shape());
  const double inv = 1.0 / (static_cast<double>(h) * static_cast<double>(w));
  for (int ci = 0; ci < c; ++ci) {
    const double g = grad_out(ci) * inv;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) gx(ci, i, j) = g;
  }
  return gx;
}

Tensor fully_connected(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 1 || weight.rank() != 2 || bias.rank() != 1) {
    throw ShapeError("fully_connected: expected x[in], weight[out x in], bias[out]");
  }
  if (weight.extent(1) != x.extent(0) || weight.extent(0) != bias.extent(0)) {
    throw ShapeError("fully_connected: weight " + weight.shape_string() + " does not conform to x " +
                     x.shape_string() + " and bias " + bias.shape_string());
  }
  const int out_n = weight.extent(0), in_n = weight.extent(1);
  Tensor out({out_n});
  for (int o = 0; o < out_n; ++o) {
    double s = bias(o);
    for (int i = 0; i < in_n; ++i) s += weight(o, i) * x(i);
    out(o) = s;
  }
  return out;
}

void fully_connected_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                              Tensor& grad_x, Tensor& grad_weight, Tensor& grad_bias) {
  const int out_n = weight.extent(0), in_n = weight.extent(1);
  grad_x = Tensor({in_n});
  grad_weight = Tensor(weight.shape());
  grad_bias = grad_out;
  for (int o = 0; o < out_n; ++o) {
    const double g = grad_out(o);
    for (int i = 0; i < in_n; ++i) {
      grad_x(i) += weight(o, i) * g;
      grad_weight(o, i) = g * x(i);
    }
  }
}

Tensor conv1x1(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 3 || weight.rank() != 2 || bias.rank() != 1) {
    throw ShapeError("conv1x1: expected x[CxHxW], weight[C'xC], bias[C']");
  }
  if (weight.extent(1) != x.extent(0) || weight.extent(0) != bias.extent(0)) {
    throw ShapeError("conv1x1: weight " + weight.shape_string() + " does not conform to x " +
                     x.shape_string() + " and bias " + bias.shape_string());
  }
  const int co = weight.extent(0), ci = x.extent(0), h = x.extent(1), w = x.extent(2);
  Tensor out({co, h, w});
  for (int o = 0; o < co; ++o) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double s = bias(o);
        for (int c = 0; c < ci; ++c) s += weight(o, c) * x(c, i, j);
        out(o, i, j) = s;
      }
    }
  }
  return out;
}

void conv1x1_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                      Tensor& grad_x, Tensor& grad_weight, Tensor& grad_bias) {
  const int co = weight.extent(0), ci = x.extent(0), h = x.extent(1), w = x.extent(2);
  grad_x = Tensor(x.shape());
  grad_weight = Tensor(weight.shape());
  grad_bias = Tensor({co});
  for (int o = 0; o < co; ++o) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const double g = grad_out(o, i, j);
        grad_bias(o) += g;
        for (int c = 0; c < ci; ++c) {
          grad_x(c, i, j) += weight(o, c) * g;
          grad_weight(o, c) += g * x(c, i, j);
        }
      }
    }
  }
}

std::pair<Tensor, Tensor> softmax_pair(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "softmax_pair");
  Tensor wa(a.shape());
  Tensor wb(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const double m = std::max(a[i], b[i]);
    const double ea = std::exp(a[i] - m);
    const double eb = std::exp(b[i] - m);
    const double s = ea + eb;
    wa[i] = ea / s;
    wb[i] = eb / s;
  }
  return {std::move(wa), std::move(wb)};
}

void softmax_pair_backward(const Tensor& out_a, const Tensor& out_b, const Tensor& grad_out_a,
                           const Tensor& grad_out_b, Tensor& grad_a, Tensor& grad_b) {
  grad_a = Tensor(out_a.shape());
  grad_b = Tensor(out_a.shape());
  for (std::int64_t i = 0; i < out_a.size(); ++i) {
    const double jac = out_a[i] * out_b[i];
    const double g = (grad_out_a[i] - grad_out_b[i]) * jac;
    grad_a[i] = g;
    grad_b[i] = -g;
  }
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  Tensor gx(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) gx[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
  return gx;
}

Tensor flat_softmax(const Tensor& x) {
  Tensor p(x.shape());
  const double m = max_value(x);
  double z = 0.0;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp(x[i] - m);
    z += p[i];
  }
  for (std::int64_t i = 0; i < x.size(); ++i) p[i] /= z;
  return p;
}

Tensor flat_softmax_backward(const Tensor& p, const Tensor& grad_out) {
  double dot = 0.0;
  for (std::int64_t i = 0; i < p.size(); ++i) dot += p[i] * grad_out[i];
  Tensor gx(p.shape());
  for (std::int64_t i = 0; i < p.size(); ++i) gx[i] = p[i] * (grad_out[i] - dot);
  return gx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.extent(1) != b.extent(1) ||
      a.extent(2) != b.extent(2)) {
    throw ShapeError("concat_channels: spatial extents of " + a.shape_string() + " and " +
                     b.shape_string() + " do not match");
  }
  const int ca = a.extent(0), cb = b.extent(0), h = a.extent(1), w = a.extent(2);
  Tensor out({ca + cb, h, w});
  for (int c = 0; c < ca; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) out(c, i, j) = a(c, i, j);
  for (int c = 0; c < cb; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) out(ca + c, i, j) = b(c, i, j);
  return out;
}

Tensor to_spatial_major(const Tensor& x) {
  if (x.rank() != 3) throw ShapeError("to_spatial_major: expected rank-3, got " + x.shape_string());
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  Tensor m({h * w, c});
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) m(i * w + j, ci) = x(ci, i, j);
  return m;
}

Tensor from_spatial_major(const Tensor& m, int channels, int height, int width) {
  if (m.rank() != 2 || m.extent(0) != height * width || m.extent(1) != channels) {
    throw ShapeError("from_spatial_major: matrix " + m.shape_string() + " does not match " +
                     std::to_string(channels) + "x" + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  Tensor x({channels, height, width});
  for (int ci = 0; ci < channels; ++ci)
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j) x(ci, i, j) = m(i * width + j, ci);
  return x;
}

}  // namespace rgbt
