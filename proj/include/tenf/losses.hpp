#pragma once

#include <string>

#include "tenf/autodiff.hpp"
#include "tenf/mri.hpp"

// The composite training objective: data consistency plus weighted
// anisotropic total variation and the nuclear norm of the Casorati matrix,
// with ablation variants that zero one or both regularizers. Also the
// post-training step that overwrites predicted k-space with the acquired
// samples.

namespace tenf {

enum class LossVariant { Full, TvOnly, LrOnly, DcOnly };

const char *loss_variant_name(LossVariant v);
LossVariant loss_variant_from_name(const std::string &name);

struct LossWeights {
  double lambda_s = 1e-3;
  double lambda_l = 5e-6;
  LossVariant variant = LossVariant::Full;
  bool magnitude_tv = false; // TV on |x| instead of the channel pair

  double effective_lambda_s() const
  {
    return (variant == LossVariant::Full || variant == LossVariant::TvOnly) ? lambda_s : 0.0;
  }
  double effective_lambda_l() const
  {
    return (variant == LossVariant::Full || variant == LossVariant::LrOnly) ? lambda_l : 0.0;
  }
};

// Constant tensors for the encoding graph, built once per dataset: per-coil
// channel-broadcast sensitivities, the negated acquired k-space, the
// channel-broadcast mask and the channel-swap index map used for complex
// multiplication.
struct EncodeConstants {
  Index nx = 0, ny = 0, nt = 0, ns = 0;
  std::vector<Tensor> coil_re;        // both channels hold Re(s_c)
  std::vector<Tensor> coil_im_signed; // (-Im(s_c), +Im(s_c)) per channel
  std::vector<Tensor> neg_y;          // -y_c
  Tensor mask_pair;                   // mask broadcast over channels
  ad::IndexMapPtr swap_map;           // channel swap on (nx, ny, nt, 2)
};

EncodeConstants make_encode_constants(const MultiCoilKSpace &y, const CoilSensitivities &s,
                                      const SamplingMask &m);

// x weighted by the (constant) complex field described by re/im_signed.
ad::Node *complex_mul_const(ad::Tape &tape, ad::Node *x, const Tensor &re_pair,
                            const Tensor &im_signed_pair, const ad::IndexMapPtr &swap_map);

// ||y - A x||_F^2, restricted to sampled locations by the mask inside A.
ad::Node *dc_loss(ad::Tape &tape, ad::Node *x, const EncodeConstants &consts);

// Anisotropic l1 total variation: |forward differences| along x, y and t,
// over both channels (or over the magnitude image when magnitude_tv).
ad::Node *tv_loss(ad::Tape &tape, ad::Node *x, bool magnitude_tv = false);

// Nuclear norm of the complex Casorati matrix.
ad::Node *lr_loss(ad::Tape &tape, ad::Node *x);

struct LossNodes {
  ad::Node *total = nullptr;
  ad::Node *dc = nullptr;
  ad::Node *tv = nullptr; // null when the variant drops the term
  ad::Node *lr = nullptr;
};

LossNodes total_loss(ad::Tape &tape, ad::Node *x, const EncodeConstants &consts,
                     const LossWeights &weights);

// Convenience overloads used by tests; they build the constants on the fly.
ad::Node *dc_loss(ad::Tape &tape, ad::Node *x, const MultiCoilKSpace &y,
                  const CoilSensitivities &s, const SamplingMask &m);
LossNodes total_loss(ad::Tape &tape, ad::Node *x, const MultiCoilKSpace &y,
                     const CoilSensitivities &s, const SamplingMask &m,
                     const LossWeights &weights);

// Plain (non-graph) value of ||y - A x||_F^2.
double dc_value(const ImageSeries &x, const MultiCoilKSpace &y, const CoilSensitivities &s,
                const SamplingMask &m);

// Per coil: transform s_c x, overwrite the sampled k-space locations with
// the acquired data, transform back and recombine with conj(s_c), dividing
// by sum_c |s_c|^2 (pixels with zero sensitivity pass through unchanged).
ImageSeries kspace_replacement(const ImageSeries &x, const MultiCoilKSpace &y,
                               const CoilSensitivities &s, const SamplingMask &m);

} // namespace tenf
