#pragma once

#include <cstdint>
#include <utility>

#include "rgbt/tensor.hpp"

namespace rgbt {

// Elementwise helpers.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
double sum(const Tensor& a);
double max_value(const Tensor& a);
double min_value(const Tensor& a);
std::int64_t argmax(const Tensor& a);
Tensor transpose(const Tensor& a);  // rank-2 only

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Standard matrix product of an m-by-k and a k-by-n tensor.
Tensor matmul(const Tensor& a, const Tensor& b);
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out, Tensor& grad_a,
                     Tensor& grad_b);

/// Global average pooling: per-channel mean over the spatial positions of a
/// C-by-H-by-W tensor.
Tensor gap(const Tensor& x);
Tensor gap_backward(const Tensor& x, const Tensor& grad_out);

/// weight * x + bias for a rank-1 input.
Tensor fully_connected(const Tensor& x, const Tensor& weight, const Tensor& bias);
void fully_connected_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                              Tensor& grad_x, Tensor& grad_weight, Tensor& grad_bias);

/// Per-pixel linear map over channels: (C'-by-C weight) applied at every
/// spatial position of a C-by-H-by-W tensor.
Tensor conv1x1(const Tensor& x, const Tensor& weight, const Tensor& bias);
void conv1x1_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                      Tensor& grad_x, Tensor& grad_weight, Tensor& grad_bias);

/// Elementwise two-way softmax: (e^a, e^b) / (e^a + e^b), evaluated with
/// max-subtraction so arbitrarily large gaps stay finite.
std::pair<Tensor, Tensor> softmax_pair(const Tensor& a, const Tensor& b);
void softmax_pair_backward(const Tensor& out_a, const Tensor& out_b, const Tensor& grad_out_a,
                           const Tensor& grad_out_b, Tensor& grad_a, Tensor& grad_b);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

/// Softmax over all entries of a tensor (flattened), max-subtracted.
Tensor flat_softmax(const Tensor& x);
/// VJP of flat_softmax given its output p and upstream gradient g.
Tensor flat_softmax_backward(const Tensor& p, const Tensor& grad_out);

/// Channel concatenation of two C-by-H-by-W tensors with equal spatial size.
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// C-by-H-by-W -> (H*W)-by-C reshape used by the attention kernel.
Tensor to_spatial_major(const Tensor& x);
/// Inverse of to_spatial_major for the given channel/height/width extents.
Tensor from_spatial_major(const Tensor& m, int channels, int height, int width);

}  // namespace rgbt
