#include "rgbt/fusion.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "rgbt/errors.hpp"
#include "rgbt/ops.hpp"
#include "rgbt/rng.hpp"

namespace rgbt {

namespace {

constexpr double kKlFloor = 1e-12;

Tensor slice_channel(const Tensor& x, int c) {
  const int h = x.extent(1), w = x.extent(2);
  Tensor out({h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) out(i, j) = x(c, i, j);
  return out;
}

Tensor stack_pair(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "stack_pair");
  const int h = a.extent(0), w = a.extent(1);
  Tensor out({2, h, w});
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      out(0, i, j) = a(i, j);
      out(1, i, j) = b(i, j);
    }
  }
  return out;
}

}  // namespace

// --------------------------------------------------------------------------
// CIF
// --------------------------------------------------------------------------

double cif_divergence_loss(std::span<const Tensor> p_visible, std::span<const Tensor> p_thermal) {
  if (p_visible.size() != p_thermal.size()) {
    throw ShapeError("cif_divergence_loss: block lists have lengths " +
                     std::to_string(p_visible.size()) + " and " +
                     std::to_string(p_thermal.size()));
  }
  double loss = 0.0;
  for (std::size_t b = 0; b < p_visible.size(); ++b) {
    require_same_shape(p_visible[b], p_thermal[b], "cif_divergence_loss");
    if (!p_visible[b].all_finite() || !p_thermal[b].all_finite()) {
      throw ValueError("cif_divergence_loss: non-finite input in block " + std::to_string(b));
    }
    const Tensor p = flat_softmax(p_visible[b]);
    const Tensor q = flat_softmax(p_thermal[b]);
    for (std::int64_t i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0) {
        loss += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kKlFloor)));
      }
    }
  }
  return std::max(loss, 0.0);
}

void cif_divergence_backward(std::span<const Tensor> p_visible,
                             std::span<const Tensor> p_thermal, double upstream,
                             std::vector<Tensor>& grad_visible,
                             std::vector<Tensor>& grad_thermal) {
  grad_visible.clear();
  grad_thermal.clear();
  for (std::size_t b = 0; b < p_visible.size(); ++b) {
    const Tensor p = flat_softmax(p_visible[b]);
    const Tensor q = flat_softmax(p_thermal[b]);
    Tensor gp(p.shape());
    Tensor gq(q.shape());
    for (std::int64_t i = 0; i < p.size(); ++i) {
      const double qf = std::max(q[i], kKlFloor);
      gp[i] = p[i] > 0.0 ? std::log(p[i]) - std::log(qf) + 1.0 : 0.0;
      gq[i] = q[i] > kKlFloor ? -p[i] / q[i] : 0.0;
    }
    grad_visible.push_back(scale(flat_softmax_backward(p, gp), upstream));
    grad_thermal.push_back(scale(flat_softmax_backward(q, gq), upstream));
  }
}

// --------------------------------------------------------------------------
// DFF
// --------------------------------------------------------------------------

DffParams DffParams::seeded(int channels, int embed, std::uint64_t seed) {
  Rng rng(seed);
  DffParams p;
  p.w_global = Tensor::uniform({embed, channels}, rng, -0.1, 0.1);
  p.b_global = Tensor::uniform({embed}, rng, -0.1, 0.1);
  p.w_visible = Tensor::uniform({channels, embed}, rng, -0.1, 0.1);
  p.b_visible = Tensor::uniform({channels}, rng, -0.1, 0.1);
  p.w_thermal = Tensor::uniform({channels, embed}, rng, -0.1, 0.1);
  p.b_thermal = Tensor::uniform({channels}, rng, -0.1, 0.1);
  return p;
}

void DffParams::validate(int channels) const {
  const int embed = w_global.extent(0);
  if (w_global.rank() != 2 || w_global.extent(1) != channels || b_global.extent(0) != embed ||
      w_visible.rank() != 2 || w_visible.extent(0) != channels || w_visible.extent(1) != embed ||
      b_visible.extent(0) != channels || w_thermal.extent(0) != channels ||
      w_thermal.extent(1) != embed || b_thermal.extent(0) != channels) {
    throw ShapeError("DffParams do not conform to feature channel count " +
                     std::to_string(channels));
  }
}

DffResult dff_fuse(const Tensor& feat_visible, const Tensor& feat_thermal,
                   const DffParams& params) {
  require_same_shape(feat_visible, feat_thermal, "dff_fuse");
  if (feat_visible.rank() != 3) {
    throw ShapeError("dff_fuse: expected CxHxW features, got " + feat_visible.shape_string());
  }
  const int c = feat_visible.extent(0);
  params.validate(c);

  const Tensor summed = add(feat_visible, feat_thermal);
  const Tensor pooled = gap(summed);
  const Tensor global_embed = fully_connected(pooled, params.w_global, params.b_global);
  const Tensor logit_v = fully_connected(global_embed, params.w_visible, params.b_visible);
  const Tensor logit_t = fully_connected(global_embed, params.w_thermal, params.b_thermal);
  auto [weight_v, weight_t] = softmax_pair(logit_v, logit_t);

  const int h = feat_visible.extent(1), w = feat_visible.extent(2);
  Tensor fused({c, h, w});
  for (int ci = 0; ci < c; ++ci) {
    const double wv = weight_v(ci), wt = weight_t(ci);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        fused(ci, i, j) = wv * feat_visible(ci, i, j) + wt * feat_thermal(ci, i, j);
  }
  return {std::move(fused), std::move(weight_v), std::move(weight_t)};
}

DffGrads dff_fuse_backward(const Tensor& feat_visible, const Tensor& feat_thermal,
                           const DffParams& params, const Tensor& grad_fused,
                           const Tensor& grad_weight_visible, const Tensor& grad_weight_thermal) {
  const int c = feat_visible.extent(0), h = feat_visible.extent(1), w = feat_visible.extent(2);

  // Recompute the forward intermediates.
  const Tensor summed = add(feat_visible, feat_thermal);
  const Tensor pooled = gap(summed);
  const Tensor global_embed = fully_connected(pooled, params.w_global, params.b_global);
  const Tensor logit_v = fully_connected(global_embed, params.w_visible, params.b_visible);
  const Tensor logit_t = fully_connected(global_embed, params.w_thermal, params.b_thermal);
  auto [weight_v, weight_t] = softmax_pair(logit_v, logit_t);

  DffGrads g;
  g.feat_visible = Tensor(feat_visible.shape());
  g.feat_thermal = Tensor(feat_thermal.shape());

  Tensor grad_wv = grad_weight_visible;
  Tensor grad_wt = grad_weight_thermal;
  for (int ci = 0; ci < c; ++ci) {
    double swv = 0.0, swt = 0.0;
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const double gf = grad_fused(ci, i, j);
        swv += gf * feat_visible(ci, i, j);
        swt += gf * feat_thermal(ci, i, j);
        g.feat_visible(ci, i, j) = weight_v(ci) * gf;
        g.feat_thermal(ci, i, j) = weight_t(ci) * gf;
      }
    }
    grad_wv(ci) += swv;
    grad_wt(ci) += swt;
  }

  Tensor grad_logit_v, grad_logit_t;
  softmax_pair_backward(weight_v, weight_t, grad_wv, grad_wt, grad_logit_v, grad_logit_t);

  Tensor grad_embed_v, grad_embed_t;
  fully_connected_backward(global_embed, params.w_visible, grad_logit_v, grad_embed_v,
                           g.params.w_visible, g.params.b_visible);
  fully_connected_backward(global_embed, params.w_thermal, grad_logit_t, grad_embed_t,
                           g.params.w_thermal, g.params.b_thermal);
  const Tensor grad_embed = add(grad_embed_v, grad_embed_t);

  Tensor grad_pooled;
  fully_connected_backward(pooled, params.w_global, grad_embed, grad_pooled, g.params.w_global,
                           g.params.b_global);

  const Tensor grad_summed = gap_backward(summed, grad_pooled);
  g.feat_visible = add(g.feat_visible, grad_summed);
  g.feat_thermal = add(g.feat_thermal, grad_summed);
  return g;
}

// --------------------------------------------------------------------------
// MAM
// --------------------------------------------------------------------------

MamParams MamParams::seeded(int channels, int inner, std::uint64_t seed) {
  Rng rng(seed);
  MamParams p;
  p.w_phi = Tensor::uniform({inner, channels}, rng, -0.1, 0.1);
  p.b_phi = Tensor::uniform({inner}, rng, -0.1, 0.1);
  p.w_psi = Tensor::uniform({inner, channels}, rng, -0.1, 0.1);
  p.b_psi = Tensor::uniform({inner}, rng, -0.1, 0.1);
  return p;
}

MamParams MamParams::zero_sum_seeded(int channels, int inner, std::uint64_t seed, int halves) {
  if (halves < 1 || channels % halves != 0) {
    throw ConfigError("zero_sum_seeded: channel count not divisible into groups");
  }
  Rng rng(seed);
  MamParams p;
  p.w_phi = Tensor::uniform({inner, channels}, rng, -0.1, 0.1);
  p.w_psi = Tensor::uniform({inner, channels}, rng, -0.1, 0.1);
  p.b_phi = Tensor::zeros({inner});
  p.b_psi = Tensor::zeros({inner});
  const int group = channels / halves;
  for (Tensor* w : {&p.w_phi, &p.w_psi}) {
    for (int r = 0; r < inner; ++r) {
      for (int g = 0; g < halves; ++g) {
        double mean = 0.0;
        for (int c = 0; c < group; ++c) mean += (*w)(r, g * group + c);
        mean /= group;
        for (int c = 0; c < group; ++c) (*w)(r, g * group + c) -= mean;
      }
    }
  }
  return p;
}

void MamParams::validate(int channels) const {
  const int inner = w_phi.extent(0);
  if (w_phi.rank() != 2 || w_phi.extent(1) != channels || b_phi.extent(0) != inner ||
      w_psi.rank() != 2 || w_psi.extent(0) != inner || w_psi.extent(1) != channels ||
      b_psi.extent(0) != inner) {
    throw ShapeError("MamParams do not conform to feature channel count " +
                     std::to_string(channels));
  }
}

Tensor mam_confidence_split(const Tensor& attention_input, const Tensor& value_input,
                            const MamParams& params) {
  require_same_shape(attention_input, value_input, "mam_confidence");
  if (attention_input.rank() != 3) {
    throw ShapeError("mam_confidence: expected CxHxW input, got " +
                     attention_input.shape_string());
  }
  params.validate(attention_input.extent(0));
  const int h = attention_input.extent(1), w = attention_input.extent(2);

  const Tensor phi = conv1x1(attention_input, params.w_phi, params.b_phi);
  const Tensor psi = conv1x1(attention_input, params.w_psi, params.b_psi);
  const Tensor attn = matmul(to_spatial_major(phi), transpose(to_spatial_major(psi)));
  const Tensor mixed = matmul(attn, to_spatial_major(value_input));

  Tensor out({h, w});
  const int c = value_input.extent(0);
  for (int p = 0; p < h * w; ++p) {
    double s = 0.0;
    for (int ci = 0; ci < c; ++ci) s += mixed(p, ci);
    out(p / w, p % w) = s;
  }
  return out;
}

Tensor mam_confidence(const Tensor& x, const MamParams& params) {
  return mam_confidence_split(x, x, params);
}

MamGrads mam_confidence_backward(const Tensor& x, const MamParams& params,
                                 const Tensor& grad_out) {
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  const int inner = params.w_phi.extent(0);

  const Tensor phi = conv1x1(x, params.w_phi, params.b_phi);
  const Tensor psi = conv1x1(x, params.w_psi, params.b_psi);
  const Tensor phi_m = to_spatial_major(phi);
  const Tensor psi_m = to_spatial_major(psi);
  const Tensor attn = matmul(phi_m, transpose(psi_m));
  const Tensor value_m = to_spatial_major(x);

  // d(mixed): the channel sum broadcasts the output gradient over channels.
  Tensor grad_mixed({h * w, c});
  for (int p = 0; p < h * w; ++p) {
    const double g = grad_out(p / w, p % w);
    for (int ci = 0; ci < c; ++ci) grad_mixed(p, ci) = g;
  }

  Tensor grad_attn, grad_value_m;
  matmul_backward(attn, value_m, grad_mixed, grad_attn, grad_value_m);

  // A = phi_m * psi_m^T
  const Tensor grad_phi_m = matmul(grad_attn, psi_m);
  const Tensor grad_psi_m = matmul(transpose(grad_attn), phi_m);

  const Tensor grad_phi = from_spatial_major(grad_phi_m, inner, h, w);
  const Tensor grad_psi = from_spatial_major(grad_psi_m, inner, h, w);

  MamGrads g;
  g.x = from_spatial_major(grad_value_m, c, h, w);
  Tensor gx_phi, gx_psi;
  conv1x1_backward(x, params.w_phi, grad_phi, gx_phi, g.params.w_phi, g.params.b_phi);
  conv1x1_backward(x, params.w_psi, grad_psi, gx_psi, g.params.w_psi, g.params.b_psi);
  g.x = add(add(g.x, gx_phi), gx_psi);
  return g;
}

// --------------------------------------------------------------------------
// ADF
// --------------------------------------------------------------------------

AdfParams AdfParams::seeded(std::uint64_t seed) {
  Rng rng(seed);
  AdfParams p;
  p.w_encoder = Tensor::uniform({4, 2}, rng, -0.1, 0.1);
  p.b_encoder = Tensor::uniform({4}, rng, -0.1, 0.1);
  p.w_decoder = Tensor::uniform({2, 4}, rng, -0.1, 0.1);
  p.b_decoder = Tensor::uniform({2}, rng, -0.1, 0.1);
  return p;
}

AdfParams AdfParams::confidence_gate(double gain) {
  // Encoder splits each confidence into its positive and negative parts, the
  // decoder recombines them as magnitudes: the weight logits become
  // gain * |M_d| versus gain * |M_c|, a soft argmax over branch evidence.
  AdfParams p;
  p.w_encoder = Tensor::matrix(4, 2, {1, 0, -1, 0, 0, 1, 0, -1});
  p.b_encoder = Tensor::zeros({4});
  p.w_decoder = Tensor::matrix(2, 4, {gain, gain, 0, 0, 0, 0, gain, gain});
  p.b_decoder = Tensor::zeros({2});
  return p;
}

void AdfParams::validate() const {
  if (w_encoder.rank() != 2 || w_encoder.extent(1) != 2 || b_encoder.extent(0) != w_encoder.extent(0) ||
      w_decoder.rank() != 2 || w_decoder.extent(0) != 2 ||
      w_decoder.extent(1) != w_encoder.extent(0) || b_decoder.extent(0) != 2) {
    throw ShapeError("AdfParams must map 2 confidence channels through the encoder to 2 weights");
  }
}

AdfResult adf_fuse(const Tensor& resp_disc, const Tensor& resp_comp, const Tensor& conf_disc,
                   const Tensor& conf_comp, const AdfParams& params) {
  require_same_shape(resp_disc, resp_comp, "adf_fuse");
  require_same_shape(resp_disc, conf_disc, "adf_fuse");
  require_same_shape(resp_disc, conf_comp, "adf_fuse");
  if (resp_disc.rank() != 2) {
    throw ShapeError("adf_fuse: expected HxW maps, got " + resp_disc.shape_string());
  }
  params.validate();

  const Tensor stacked = stack_pair(conf_disc, conf_comp);
  const Tensor encoded = relu(conv1x1(stacked, params.w_encoder, params.b_encoder));
  const Tensor decoded = conv1x1(encoded, params.w_decoder, params.b_decoder);
  auto [weight_disc, weight_comp] =
      softmax_pair(slice_channel(decoded, 0), slice_channel(decoded, 1));

  AdfResult r;
  r.response = add(hadamard(resp_disc, weight_disc), hadamard(resp_comp, weight_comp));
  r.weight_disc = std::move(weight_disc);
  r.weight_comp = std::move(weight_comp);
  return r;
}

AdfGrads adf_fuse_backward(const Tensor& resp_disc, const Tensor& resp_comp,
                           const Tensor& conf_disc, const Tensor& conf_comp,
                           const AdfParams& params, const Tensor& grad_response,
                           const Tensor& grad_weight_disc, const Tensor& grad_weight_comp) {
  const Tensor stacked = stack_pair(conf_disc, conf_comp);
  const Tensor pre_activation = conv1x1(stacked, params.w_encoder, params.b_encoder);
  const Tensor encoded = relu(pre_activation);
  const Tensor decoded = conv1x1(encoded, params.w_decoder, params.b_decoder);
  auto [weight_disc, weight_comp] =
      softmax_pair(slice_channel(decoded, 0), slice_channel(decoded, 1));

  AdfGrads g;
  g.resp_disc = hadamard(grad_response, weight_disc);
  g.resp_comp = hadamard(grad_response, weight_comp);

  const Tensor grad_wd = add(hadamard(grad_response, resp_disc), grad_weight_disc);
  const Tensor grad_wc = add(hadamard(grad_response, resp_comp), grad_weight_comp);

  Tensor grad_z0, grad_z1;
  softmax_pair_backward(weight_disc, weight_comp, grad_wd, grad_wc, grad_z0, grad_z1);
  const Tensor grad_decoded = stack_pair(grad_z0, grad_z1);

  Tensor grad_encoded;
  conv1x1_backward(encoded, params.w_decoder, grad_decoded, grad_encoded, g.params.w_decoder,
                   g.params.b_decoder);
  const Tensor grad_pre = relu_backward(pre_activation, grad_encoded);

  Tensor grad_stacked;
  conv1x1_backward(stacked, params.w_encoder, grad_pre, grad_stacked, g.params.w_encoder,
                   g.params.b_encoder);
  g.conf_disc = slice_channel(grad_stacked, 0);
  g.conf_comp = slice_channel(grad_stacked, 1);
  return g;
}

Tensor combine_responses(const Tensor& resp_disc, const Tensor& resp_comp, const Tensor& w_disc,
                         const Tensor& w_comp) {
  return add(hadamard(resp_disc, w_disc), hadamard(resp_comp, w_comp));
}

// --------------------------------------------------------------------------
// Parameter serialization
// --------------------------------------------------------------------------

namespace {

void write_named(std::ostream& os, std::string_view name, const Tensor& t) {
  os << name << '\n';
  t.write_text(os);
}

Tensor read_named(std::istream& is, std::string_view name) {
  std::string header;
  while (std::getline(is, header)) {
    if (header.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (header != name) {
    throw ParseError("expected parameter '" + std::string(name) + "', got '" + header + "'");
  }
  return Tensor::read_text(is);
}

}  // namespace

void write_params(std::ostream& os, const DffParams& p) {
  write_named(os, "w_global", p.w_global);
  write_named(os, "b_global", p.b_global);
  write_named(os, "w_visible", p.w_visible);
  write_named(os, "b_visible", p.b_visible);
  write_named(os, "w_thermal", p.w_thermal);
  write_named(os, "b_thermal", p.b_thermal);
}

DffParams read_dff_params(std::istream& is) {
  DffParams p;
  p.w_global = read_named(is, "w_global");
  p.b_global = read_named(is, "b_global");
  p.w_visible = read_named(is, "w_visible");
  p.b_visible = read_named(is, "b_visible");
  p.w_thermal = read_named(is, "w_thermal");
  p.b_thermal = read_named(is, "b_thermal");
  return p;
}

void write_params(std::ostream& os, const MamParams& p) {
  write_named(os, "w_phi", p.w_phi);
  write_named(os, "b_phi", p.b_phi);
  write_named(os, "w_psi", p.w_psi);
  write_named(os, "b_psi", p.b_psi);
}

MamParams read_mam_params(std::istream& is) {
  MamParams p;
  p.w_phi = read_named(is, "w_phi");
  p.b_phi = read_named(is, "b_phi");
  p.w_psi = read_named(is, "w_psi");
  p.b_psi = read_named(is, "b_psi");
  return p;
}

void write_params(std::ostream& os, const AdfParams& p) {
  write_named(os, "w_encoder", p.w_encoder);
  write_named(os, "b_encoder", p.b_encoder);
  write_named(os, "w_decoder", p.w_decoder);
  write_named(os, "b_decoder", p.b_decoder);
}

AdfParams read_adf_params(std::istream& is) {
  AdfParams p;
  p.w_encoder = read_named(is, "w_encoder");
  p.b_encoder = read_named(is, "b_encoder");
  p.w_decoder = read_named(is, "w_decoder");
  p.b_decoder = read_named(is, "b_decoder");
  return p;
}

// --------------------------------------------------------------------------
// Losses
// --------------------------------------------------------------------------

std::pair<double, double> composite_losses(double box_loss, double cls_loss, double div_loss,
                                           const LossWeights& w) {
  if (box_loss < 0.0 || cls_loss < 0.0 || div_loss < 0.0) {
    throw ValueError("composite_losses: loss terms must be nonnegative");
  }
  if (!(w.beta > 0.0)) throw ValueError("composite_losses: beta must be positive");
  if (w.gamma < 0.0) throw ValueError("composite_losses: gamma must be nonnegative");
  const double discriminative = box_loss + w.beta * cls_loss;
  const double complementary = discriminative + w.gamma * div_loss;
  return {discriminative, complementary};
}

double gaussian_response_loss(const Tensor& response, double peak_row, double peak_col,
                              double sigma) {
  if (response.rank() != 2) {
    throw ShapeError("gaussian_response_loss: expected HxW response");
  }
  if (!(sigma > 0.0)) throw ValueError("gaussian_response_loss: sigma must be positive");
  const int h = response.extent(0), w = response.extent(1);
  double mse = 0.0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double d2 = (i - peak_row) * (i - peak_row) + (j - peak_col) * (j - peak_col);
      const double target = std::exp(-d2 / (2.0 * sigma * sigma));
      const double diff = response(i, j) - target;
      mse += diff * diff;
    }
  }
  return mse / (static_cast<double>(h) * w);
}

double box_overlap_loss(const BoundingBox& predicted, const BoundingBox& truth) {
  return 1.0 - iou(predicted, truth);
}

// --------------------------------------------------------------------------
// Ablation pipeline
// --------------------------------------------------------------------------

std::string FusionPipeline::describe() const {
  switch (combine) {
    case ResponseCombine::kSingleModality:
      return modality == Modality::kVisible ? "rgb-only" : "ir-only";
    case ResponseCombine::kDiscriminativeOnly:
      return "dff";
    case ResponseCombine::kComplementaryOnly:
      return "cif";
    case ResponseCombine::kAverage:
      return "cif+dff";
    case ResponseCombine::kAdaptive:
      return "cif+dff+adf";
  }
  return "unknown";
}

FusionPipeline ablation_config(PipelineFlags flags, Modality single_modality) {
  FusionPipeline p;
  p.flags = flags;
  p.modality = single_modality;
  if (flags.adf && !(flags.cif && flags.dff)) {
    throw ConfigError("ablation_config: adaptive decision fusion needs both branches enabled");
  }
  if (flags.cif && flags.dff) {
    p.combine = flags.adf ? ResponseCombine::kAdaptive : ResponseCombine::kAverage;
  } else if (flags.dff) {
    p.combine = ResponseCombine::kDiscriminativeOnly;
  } else if (flags.cif) {
    p.combine = ResponseCombine::kComplementaryOnly;
  } else {
    p.combine = ResponseCombine::kSingleModality;
  }
  return p;
}

}  // namespace rgbt
