#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rgbt/metrics.hpp"
#include "rgbt/tensor.hpp"

namespace rgbt {

// ---------------------------------------------------------------------------
// Complementary image fusion: divergence loss between per-block feature
// distributions.
// ---------------------------------------------------------------------------

/// Sum over blocks of KL(p_v || p_t), where each block feature is normalized
/// into a probability vector over all of its entries by a flat softmax, and
/// the reference distribution is floored at 1e-12 before the ratio. Always
/// >= 0; zero exactly when the normalized distributions agree per block.
double cif_divergence_loss(std::span<const Tensor> p_visible, std::span<const Tensor> p_thermal);

/// VJP of cif_divergence_loss with respect to both block lists.
void cif_divergence_backward(std::span<const Tensor> p_visible,
                             std::span<const Tensor> p_thermal, double upstream,
                             std::vector<Tensor>& grad_visible, std::vector<Tensor>& grad_thermal);

// ---------------------------------------------------------------------------
// Discriminative feature fusion: channel-wise softmax weighting of the two
// modality feature maps driven by a globally pooled embedding.
// ---------------------------------------------------------------------------

struct DffParams {
  Tensor w_global, b_global;    // embed x C, embed
  Tensor w_visible, b_visible;  // C x embed, C
  Tensor w_thermal, b_thermal;  // C x embed, C

  /// Deterministic uniform values in [-0.1, 0.1].
  static DffParams seeded(int channels, int embed, std::uint64_t seed);
  void validate(int channels) const;
  int channels() const { return w_visible.extent(0); }
};

struct DffResult {
  Tensor fused;            // C x H x W
  Tensor weight_visible;   // C, sums with weight_thermal to one per channel
  Tensor weight_thermal;   // C
};

/// fused = w_v[c] * visible[c] + w_t[c] * thermal[c], with the channel weight
/// pair produced by a two-way softmax over the two per-modality heads of the
/// pooled global embedding.
DffResult dff_fuse(const Tensor& feat_visible, const Tensor& feat_thermal,
                   const DffParams& params);

struct DffGrads {
  Tensor feat_visible, feat_thermal;
  DffParams params;  // same shapes, holding gradients
};

/// Full VJP of dff_fuse given cotangents for (fused, weight_v, weight_t).
DffGrads dff_fuse_backward(const Tensor& feat_visible, const Tensor& feat_thermal,
                           const DffParams& params, const Tensor& grad_fused,
                           const Tensor& grad_weight_visible, const Tensor& grad_weight_thermal);

// ---------------------------------------------------------------------------
// Modality aggregation module: global self-attention confidence map.
// ---------------------------------------------------------------------------

struct MamParams {
  Tensor w_phi, b_phi;  // inner x C, inner
  Tensor w_psi, b_psi;  // inner x C, inner

  static MamParams seeded(int channels, int inner, std::uint64_t seed);
  /// Seeded rows re-centered to zero sum over each of `halves` equal channel
  /// groups, which makes the attention embedding blind to per-group constant
  /// offsets.
  static MamParams zero_sum_seeded(int channels, int inner, std::uint64_t seed, int halves = 1);
  void validate(int channels) const;
};

/// M = S(A x R(X)) with A = R(phi(X)) x R(psi(X))^T: attention between all
/// spatial positions of the embedded input, applied to the raw input and
/// summed over channels. Returns an H-by-W map.
Tensor mam_confidence(const Tensor& x, const MamParams& params);

/// Same kernel with the attention path and the value path fed separately;
/// linear in `value_input` when `attention_input` is held fixed.
Tensor mam_confidence_split(const Tensor& attention_input, const Tensor& value_input,
                            const MamParams& params);

struct MamGrads {
  Tensor x;
  MamParams params;
};

MamGrads mam_confidence_backward(const Tensor& x, const MamParams& params,
                                 const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Adaptive decision fusion: pixelwise convex combination of the two branch
// responses, weighted by an encoder-decoder over the stacked confidences.
// ---------------------------------------------------------------------------

struct AdfParams {
  Tensor w_encoder, b_encoder;  // 4 x 2, 4
  Tensor w_decoder, b_decoder;  // 2 x 4, 2

  static AdfParams seeded(std::uint64_t seed);
  /// Hand-set weights realizing decoder logits (gain*|M_d|, gain*|M_c|): a
  /// soft selection toward the branch with stronger attention evidence.
  static AdfParams confidence_gate(double gain);
  void validate() const;
};

struct AdfResult {
  Tensor response;     // H x W
  Tensor weight_disc;  // E_d, pixelwise in (0,1)
  Tensor weight_comp;  // E_c = 1 - E_d
};

/// Stacks the two confidence maps, runs the 2->4 ReLU encoder and 4->2
/// decoder (both 1x1), turns the two decoder channels into weight maps with a
/// pixelwise two-way softmax, and blends: R = R_d.*E_d + R_c.*E_c.
AdfResult adf_fuse(const Tensor& resp_disc, const Tensor& resp_comp, const Tensor& conf_disc,
                   const Tensor& conf_comp, const AdfParams& params);

struct AdfGrads {
  Tensor resp_disc, resp_comp, conf_disc, conf_comp;
  AdfParams params;
};

AdfGrads adf_fuse_backward(const Tensor& resp_disc, const Tensor& resp_comp,
                           const Tensor& conf_disc, const Tensor& conf_comp,
                           const AdfParams& params, const Tensor& grad_response,
                           const Tensor& grad_weight_disc, const Tensor& grad_weight_comp);

/// The plain blend for externally supplied weight maps (used by the averaging
/// ablation and by tests that force degenerate weights).
Tensor combine_responses(const Tensor& resp_disc, const Tensor& resp_comp, const Tensor& w_disc,
                         const Tensor& w_comp);

// ---------------------------------------------------------------------------
// Parameter serialization: each tensor under a one-line name header, in the
// plain tensor text form. Used for loading test fixtures.
// ---------------------------------------------------------------------------

void write_params(std::ostream& os, const DffParams& p);
void write_params(std::ostream& os, const MamParams& p);
void write_params(std::ostream& os, const AdfParams& p);
DffParams read_dff_params(std::istream& is);
MamParams read_mam_params(std::istream& is);
AdfParams read_adf_params(std::istream& is);

// ---------------------------------------------------------------------------
// Composite loss assembly.
// ---------------------------------------------------------------------------

struct LossWeights {
  double beta = 100.0;
  double gamma = 100.0;
};

/// (L_d, L_c) = (L_bb + beta * L_cls, L_bb + beta * L_cls + gamma * L_div).
/// All loss terms must be nonnegative; beta > 0 and gamma >= 0.
std::pair<double, double> composite_losses(double box_loss, double cls_loss, double div_loss,
                                           const LossWeights& w);

/// Default desk-scale classification loss: mean squared error of a response
/// map against a unit Gaussian bump centered at (peak_row, peak_col).
double gaussian_response_loss(const Tensor& response, double peak_row, double peak_col,
                              double sigma);

/// Default desk-scale box loss: 1 - IoU.
double box_overlap_loss(const BoundingBox& predicted, const BoundingBox& truth);

// ---------------------------------------------------------------------------
// Ablation pipeline selection.
// ---------------------------------------------------------------------------

struct PipelineFlags {
  bool cif = false;
  bool dff = false;
  bool adf = false;
};

enum class ResponseCombine {
  kSingleModality,      // no fusion branch enabled; raw features of one modality
  kDiscriminativeOnly,  // DFF branch alone
  kComplementaryOnly,   // CIF branch alone
  kAverage,             // plain mean of the two branch responses
  kAdaptive,            // adf_fuse
};

enum class Modality { kVisible, kThermal };

struct FusionPipeline {
  PipelineFlags flags;
  ResponseCombine combine = ResponseCombine::kSingleModality;
  Modality modality = Modality::kVisible;  // used by kSingleModality only
  std::string describe() const;
};

/// Maps ablation switches onto a pipeline: one branch alone is a passthrough,
/// both without ADF average, ADF requires both branches.
FusionPipeline ablation_config(PipelineFlags flags, Modality single_modality = Modality::kVisible);

}  // namespace rgbt
